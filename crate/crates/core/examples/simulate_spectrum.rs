//! Admittance spectrum of the bundled three-layer stack with both solvers.
//!
//! Run with `cargo run --release --example simulate_spectrum`.

use baw::acoustic1d::{spectrum, Backend, FrequencyGrid};
use baw::materials::load_stack;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let stack = load_stack(include_str!("../data/nominal_stack.toml"))?;
    let grid = FrequencyGrid::linear(3e9, 15e9, 4001)?;
    let bvp = spectrum(&stack, &grid, Backend::Bvp)?;
    let mason = spectrum(&stack, &grid, Backend::Mason)?;

    let worst = bvp
        .y()
        .iter()
        .zip(mason.y())
        .map(|(a, b)| (a - b).norm() / b.norm())
        .fold(0.0, f64::max);
    println!("{} points, worst relative backend difference {worst:.2e}", bvp.len());

    println!("{:>12} {:>14} {:>14}", "f (GHz)", "|Y| (S)", "phase (deg)");
    for (f, y) in bvp.frequencies().iter().zip(bvp.y()).step_by(400) {
        println!("{:>12.3} {:>14.6e} {:>14.2}", f / 1e9, y.norm(), y.arg().to_degrees());
    }

    let mut csv = Vec::new();
    bvp.write_csv(&mut csv)?;
    println!("CSV export: {} bytes", csv.len());
    Ok(())
}

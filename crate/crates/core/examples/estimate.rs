//! Quick thickness and frequency estimates for a half-wave resonator.
//!
//! Run with `cargo run --example estimate`.

use baw::materials::load_stack;
use baw::modal::{estimate_frequency, estimate_thickness};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let stack = load_stack(include_str!("../data/nominal_stack.toml"))?;
    let piezo = &stack.piezo().material;
    let velocity = (piezo.c33d() / piezo.density).sqrt();
    println!("{} stiffened velocity {velocity:.1} m/s", piezo.name);

    for order in 1..=3 {
        let f = estimate_frequency(order, velocity, stack.piezo().thickness);
        println!("order {order}: bare {:.0} nm plate resonates near {:.3} GHz", stack.piezo().thickness * 1e9, f / 1e9);
    }
    for target in [5e9, 10e9, 13e9] {
        println!("{:.1} GHz fundamental needs {:.1} nm", target / 1e9, estimate_thickness(target, 1, velocity) * 1e9);
    }
    Ok(())
}

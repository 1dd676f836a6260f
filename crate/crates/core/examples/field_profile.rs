//! Standing-wave profile and strain-energy partition at each resonance.
//!
//! Run with `cargo run --release --example field_profile`.

use baw::acoustic1d::{field_profile, strain_energy, FrequencyGrid};
use baw::materials::load_stack;
use baw::modal::find_modes;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let stack = load_stack(include_str!("../data/nominal_stack.toml"))?;
    let band = FrequencyGrid::linear(3e9, 15e9, 4001)?;

    for mode in find_modes(&stack, &band, 3)? {
        let profile = field_profile(&stack, mode.fs)?;
        let energy = strain_energy(&profile, &stack)?;
        println!("mode {} at {:.4} GHz", mode.index, mode.fs / 1e9);
        for (i, layer) in stack.layers().iter().enumerate() {
            let share = energy.layer_energy[i] / energy.total;
            let t = layer.thickness;
            let u = [0.0, 0.5, 1.0].map(|x| profile.displacement_at(i, x * t).norm());
            println!(
                "  {:<10} {:>6.1} nm  energy {:>6.2} %  |u| bottom/mid/top {:.3e} {:.3e} {:.3e} m",
                layer.material.name,
                t * 1e9,
                100.0 * share,
                u[0],
                u[1],
                u[2]
            );
        }
        println!("  eta {:.4}, peak stress {:.3e} Pa/V\n", energy.eta, profile.peak_stress());
    }
    Ok(())
}

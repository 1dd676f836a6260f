//! Resonances of the bundled stack, before and after calibrating the piezo
//! stiffness so that the fundamental lands on a target frequency.
//!
//! Run with `cargo run --release --example mode_metrics`.

use baw::acoustic1d::FrequencyGrid;
use baw::materials::load_stack;
use baw::modal::{calibrate_piezo_stiffness, find_modes_with, Keff2Definition, ModeSearch, ModeSummary};

fn print_modes(title: &str, modes: &[ModeSummary]) {
    println!("{title}");
    println!("  mode   fs (GHz)   fp (GHz)  keff2 (%)    eta      Qm     FOM");
    for m in modes {
        println!(
            "  {:>4} {:>10.4} {:>10.4} {:>10.3} {:>6.3} {:>7.1} {:>7.2}",
            m.index,
            m.fs / 1e9,
            m.fp / 1e9,
            100.0 * m.keff2,
            m.eta,
            m.qm,
            m.fom
        );
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let stack = load_stack(include_str!("../data/nominal_stack.toml"))?;
    let band = FrequencyGrid::linear(3e9, 15e9, 4001)?;

    let search = ModeSearch::default();
    print_modes("nominal stack", &find_modes_with(&stack, &band, 3, &search)?);

    let cal = calibrate_piezo_stiffness(&stack, &band, 0, 4.9e9)?;
    println!("\nc33E scaled by {:.5} to put mode 0 at 4.9 GHz", cal.factor);
    print_modes("calibrated stack", &find_modes_with(&cal.stack, &band, 3, &search)?);

    for definition in [Keff2Definition::Separation, Keff2Definition::Approx] {
        let alt = ModeSearch { definition, ..search };
        let modes = find_modes_with(&cal.stack, &band, 3, &alt)?;
        let k: Vec<String> = modes.iter().map(|m| format!("{:.3}", 100.0 * m.keff2)).collect();
        println!("keff2 ({definition}) in %: {}", k.join(", "));
    }
    Ok(())
}

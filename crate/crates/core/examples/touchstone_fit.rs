//! Reads the bundled two-port measurement, extracts the device admittance
//! and fits a modified Butterworth-Van Dyke circuit to it.
//!
//! Run with `cargo run --release --example touchstone_fit`.

use baw::mbvd::{device_curve, fit_mbvd, parse_touchstone, FitOptions, Topology};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = parse_touchstone(include_str!("../data/r14c5_like.s2p"))?;
    println!(
        "{} points, {:.3} to {:.3} GHz, {} / {}, z0 {} ohm",
        data.frequencies.len(),
        data.frequencies[0] / 1e9,
        data.frequencies[data.frequencies.len() - 1] / 1e9,
        data.unit,
        data.format,
        data.z0
    );

    let curve = device_curve(&data, Topology::SeriesThrough)?;
    let options = FitOptions {
        band: Some((12.5e9, 14e9)),
        ..FitOptions::default()
    };
    let fit = fit_mbvd(&curve, &options)?;
    let p = &fit.params;
    println!("Rm {:.4} ohm, Lm {:.4e} H, Cm {:.4e} F", p.rm, p.lm, p.cm);
    println!("C0 {:.4e} F, R0 {:.4} ohm, Rs {:.4} ohm", p.c0, p.r0, p.rs);
    println!(
        "fs {:.4} GHz, Qs {:.1}, keff2 {:.3} % ({}), FOM {:.2}",
        fit.fs / 1e9,
        fit.qs,
        100.0 * fit.keff2,
        fit.formula,
        fit.fom
    );
    println!(
        "residual {:.2e} after {} iterations (converged: {})",
        fit.residual, fit.n_iterations, fit.converged
    );
    Ok(())
}

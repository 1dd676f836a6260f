//! Regenerates `data/r14c5_like.s2p`, the synthetic two-port measurement
//! used by the fitting tests, and prints the circuit behind it.
//!
//! Run with `cargo run --example generate_fixture [path]`.

use baw::mbvd::{emit_touchstone, r14c5_like_fixture, r14c5_like_params, report, Keff2Formula};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args().nth(1).unwrap_or_else(|| "r14c5_like.s2p".to_string());
    let p = r14c5_like_params();
    let m = report(&p, Keff2Formula::Ratio);
    println!("{p:?}");
    println!("fs {:.4} GHz, Qs {:.1}, keff2 {:.3} %, FOM {:.2}", m.fs / 1e9, m.qs, 100.0 * m.keff2, m.fom);
    std::fs::write(&path, emit_touchstone(&r14c5_like_fixture()))?;
    println!("wrote {path}");
    Ok(())
}

//! Electrode-thickness sweep with CSV export and SVG heatmaps.
//!
//! Run with `cargo run --release --example electrode_sweep [output-dir]`.

use std::path::PathBuf;

use baw::acoustic1d::FrequencyGrid;
use baw::materials::load_stack;
use baw::sweep::{export_sweep_csv, render_heatmap, run_sweep, Metric, SweepConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("baw_electrode_sweep"));
    std::fs::create_dir_all(&out)?;

    let stack = load_stack(include_str!("../data/nominal_stack.toml"))?;
    let mut cfg = SweepConfig::new(stack, FrequencyGrid::linear(1e9, 40e9, 4001)?)?;
    cfg.grid_n = 13;
    let result = run_sweep(&cfg)?;
    println!(
        "{}x{} cells, {} masked",
        result.n_bottom(),
        result.n_top(),
        result.masked_count()
    );

    for mode in 0..result.n_modes {
        if let Some((ib, it)) = result.argmax(mode, Metric::Fom)? {
            let m = &result.cell(ib, it).as_ref().expect("argmax cell is populated")[mode];
            println!(
                "mode {mode}: best FOM {:.2} at bottom {:.0} nm / top {:.0} nm (fs {:.3} GHz)",
                m.fom,
                result.bottom_axis[ib] * 1e9,
                result.top_axis[it] * 1e9,
                m.fs / 1e9
            );
        }
        for metric in ["fs_norm", "keff2_norm", "fom_norm"] {
            render_heatmap(&result, metric, mode, &out.join(format!("{metric}_mode{mode}.svg")))?;
        }
    }
    export_sweep_csv(&result, &out.join("sweep.csv"))?;
    println!("wrote CSV and heatmaps to {}", out.display());
    Ok(())
}

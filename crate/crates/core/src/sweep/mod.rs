//! Two-axis electrode thickness sweep.
//!
//! Every grid cell rebuilds the base stack with new top/bottom electrode
//! thicknesses and runs the modal analysis. Cells are independent and are
//! evaluated on a rayon pool; results are merged by cell index so the output
//! does not depend on the degree of parallelism.

mod heatmap;

use std::fs::File;
use std::io::{self, BufRead, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::acoustic1d::FrequencyGrid;
use crate::materials::{derive_constants, Role, Stack};
use crate::modal::{find_modes_with, ModeSearch, ModeSummary};
use crate::units::fmt17;

pub use heatmap::{color_ramp, render_heatmap, render_heatmap_svg, RAMP_STOPS};

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("invalid sweep configuration: {0}")]
    Config(String),
    #[error("band does not cover requested modes ({masked} of {total} cells masked)")]
    BandTooNarrow { masked: usize, total: usize },
    #[error("unknown metric `{0}`")]
    UnknownMetric(String),
    #[error("no grid for mode {0}")]
    UnknownMode(usize),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub base: Stack,
    pub top_layer_index: usize,
    pub bottom_layer_index: usize,
    /// Thickness range in multiples of the piezo thickness.
    pub ratio_min: f64,
    pub ratio_max: f64,
    pub grid_n: usize,
    pub n_modes: usize,
    pub band: FrequencyGrid,
    pub search: ModeSearch,
}

impl SweepConfig {
    /// Defaults: the layers directly above and below the piezo film, swept
    /// from 0.2 to 2 piezo thicknesses on a 25 x 25 grid, three modes.
    pub fn new(base: Stack, band: FrequencyGrid) -> Result<Self, SweepError> {
        let p = base.piezo_index();
        if p == 0 || p + 1 >= base.layers().len() {
            return Err(SweepError::Config(
                "default sweep needs one layer on each side of the piezo film".into(),
            ));
        }
        Ok(Self {
            base,
            top_layer_index: p + 1,
            bottom_layer_index: p - 1,
            ratio_min: 0.2,
            ratio_max: 2.0,
            grid_n: 25,
            n_modes: 3,
            band,
            search: ModeSearch::default(),
        })
    }

    pub fn validate(&self) -> Result<(), SweepError> {
        let n = self.base.layers().len();
        for (name, idx) in [("top", self.top_layer_index), ("bottom", self.bottom_layer_index)] {
            let layer = self
                .base
                .layers()
                .get(idx)
                .ok_or_else(|| SweepError::Config(format!("{name} layer index {idx} out of range (stack has {n})")))?;
            if layer.role == Role::Piezo {
                return Err(SweepError::Config(format!("{name} layer {idx} is the piezo layer")));
            }
        }
        if self.top_layer_index == self.bottom_layer_index {
            return Err(SweepError::Config("top and bottom layer are the same".into()));
        }
        if !(self.ratio_min > 0.0 && self.ratio_min < self.ratio_max && self.ratio_max.is_finite()) {
            return Err(SweepError::Config(format!(
                "need 0 < ratio_min < ratio_max, got {} .. {}",
                self.ratio_min, self.ratio_max
            )));
        }
        if self.grid_n < 2 {
            return Err(SweepError::Config("grid_n must be at least 2".into()));
        }
        if self.n_modes < 1 {
            return Err(SweepError::Config("n_modes must be at least 1".into()));
        }
        Ok(())
    }

    /// Thickness samples (m), shared by both axes.
    pub fn axis(&self) -> Vec<f64> {
        let t_piezo = self.base.piezo().thickness;
        let last = (self.grid_n - 1) as f64;
        (0..self.grid_n)
            .map(|i| {
                let ratio = if i == self.grid_n - 1 {
                    self.ratio_max
                } else {
                    self.ratio_min + (self.ratio_max - self.ratio_min) * i as f64 / last
                };
                ratio * t_piezo
            })
            .collect()
    }

    /// The stack of one grid cell.
    pub fn cell_stack(&self, t_top: f64, t_bottom: f64) -> Result<Stack, SweepError> {
        self.base
            .with_thickness(self.top_layer_index, t_top)
            .and_then(|s| s.with_thickness(self.bottom_layer_index, t_bottom))
            .map_err(|e| SweepError::Config(e.to_string()))
    }
}

/// Modal metrics of one sweep cell; `None` marks a masked cell.
pub type Cell = Option<Vec<ModeSummary>>;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub top_axis: Vec<f64>,
    pub bottom_axis: Vec<f64>,
    pub t_piezo: f64,
    pub f0_piezo: f64,
    pub n_modes: usize,
    /// Bottom-major: `cells[ib * n_top + it]`.
    pub cells: Vec<Cell>,
}

/// Per-cell quantity that can be extracted from a [`SweepResult`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Fs,
    FsNorm,
    Keff2,
    Keff2Norm,
    Eta,
    Qm,
    Fom,
    FomNorm,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::Fs => "fs",
            Metric::FsNorm => "fs_norm",
            Metric::Keff2 => "keff2",
            Metric::Keff2Norm => "keff2_norm",
            Metric::Eta => "eta",
            Metric::Qm => "qm",
            Metric::Fom => "fom",
            Metric::FomNorm => "fom_norm",
        }
    }
}

impl FromStr for Metric {
    type Err = SweepError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "fs" => Metric::Fs,
            "fs_norm" => Metric::FsNorm,
            "keff2" => Metric::Keff2,
            "keff2_norm" => Metric::Keff2Norm,
            "eta" => Metric::Eta,
            "qm" => Metric::Qm,
            "fom" => Metric::Fom,
            "fom_norm" => Metric::FomNorm,
            other => return Err(SweepError::UnknownMetric(other.to_string())),
        })
    }
}

impl SweepResult {
    pub fn n_top(&self) -> usize {
        self.top_axis.len()
    }

    pub fn n_bottom(&self) -> usize {
        self.bottom_axis.len()
    }

    pub fn cell(&self, i_bottom: usize, i_top: usize) -> &Cell {
        &self.cells[i_bottom * self.n_top() + i_top]
    }

    pub fn masked_count(&self) -> usize {
        self.cells.iter().filter(|c| c.is_none()).count()
    }

    fn raw(&self, mode: usize, metric: Metric) -> Vec<Option<f64>> {
        self.cells
            .iter()
            .map(|cell| {
                cell.as_ref().and_then(|modes| modes.get(mode)).map(|m| match metric {
                    Metric::Fs | Metric::FsNorm => m.fs,
                    Metric::Keff2 | Metric::Keff2Norm => m.keff2,
                    Metric::Eta => m.eta,
                    Metric::Qm => m.qm,
                    Metric::Fom | Metric::FomNorm => m.fom,
                })
            })
            .collect()
    }

    /// Bottom-major grid of `metric` for `mode`; masked cells are `None`.
    /// Normalised coupling and FOM are divided by their maximum over the
    /// grid, `fs_norm` by the piezo film's own half-wave frequency.
    pub fn grid(&self, mode: usize, metric: Metric) -> Result<Vec<Option<f64>>, SweepError> {
        if mode >= self.n_modes {
            return Err(SweepError::UnknownMode(mode));
        }
        let raw = self.raw(mode, metric);
        Ok(match metric {
            Metric::FsNorm => raw.iter().map(|v| v.map(|f| f / self.f0_piezo)).collect(),
            Metric::Keff2Norm | Metric::FomNorm => {
                let max = raw.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max);
                raw.iter().map(|v| v.map(|x| x / max)).collect()
            }
            _ => raw,
        })
    }

    /// Grid index `(i_bottom, i_top)` of the largest value of `metric`.
    pub fn argmax(&self, mode: usize, metric: Metric) -> Result<Option<(usize, usize)>, SweepError> {
        let grid = self.grid(mode, metric)?;
        let n_top = self.n_top();
        Ok(grid
            .iter()
            .enumerate()
            .filter_map(|(i, v)| v.map(|v| (i, v)))
            .fold(None, |best: Option<(usize, f64)>, (i, v)| match best {
                Some((_, b)) if b >= v => best,
                _ => Some((i, v)),
            })
            .map(|(i, _)| (i / n_top, i % n_top)))
    }
}

fn evaluate_cell(cfg: &SweepConfig, t_top: f64, t_bottom: f64) -> Cell {
    let stack = cfg.cell_stack(t_top, t_bottom).ok()?;
    let modes = find_modes_with(&stack, &cfg.band, cfg.n_modes, &cfg.search).ok()?;
    (modes.len() >= cfg.n_modes).then_some(modes)
}

/// Runs the sweep on the global rayon pool.
pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepResult, SweepError> {
    cfg.validate()?;
    let axis = cfg.axis();
    let n = axis.len();
    let cells: Vec<Cell> = (0..n * n)
        .into_par_iter()
        .map(|i| evaluate_cell(cfg, axis[i % n], axis[i / n]))
        .collect();
    let result = SweepResult {
        top_axis: axis.clone(),
        bottom_axis: axis,
        t_piezo: cfg.base.piezo().thickness,
        f0_piezo: derive_constants(&cfg.base).f0_piezo,
        n_modes: cfg.n_modes,
        cells,
    };
    let masked = result.masked_count();
    if 2 * masked > result.cells.len() {
        return Err(SweepError::BandTooNarrow {
            masked,
            total: result.cells.len(),
        });
    }
    Ok(result)
}

/// Runs the sweep on a dedicated pool of `jobs` threads.
pub fn run_sweep_with_jobs(cfg: &SweepConfig, jobs: usize) -> Result<SweepResult, SweepError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| SweepError::Config(e.to_string()))?;
    pool.install(|| run_sweep(cfg))
}

pub const SWEEP_CSV_HEADER: &str =
    "t_top_m,t_bot_m,mode,fs_hz,fs_norm,keff2,keff2_norm,eta,qm,fom,fom_norm,ok";

const CSV_METRICS: [Metric; 8] = [
    Metric::Fs,
    Metric::FsNorm,
    Metric::Keff2,
    Metric::Keff2Norm,
    Metric::Eta,
    Metric::Qm,
    Metric::Fom,
    Metric::FomNorm,
];

/// Long-format CSV: one row per (cell, mode), bottom-major, then top, then mode.
pub fn write_sweep_csv<W: Write>(result: &SweepResult, mut out: W) -> Result<(), SweepError> {
    let grids: Vec<Vec<Vec<Option<f64>>>> = (0..result.n_modes)
        .map(|m| CSV_METRICS.iter().map(|&k| result.grid(m, k)).collect())
        .collect::<Result<_, _>>()?;
    writeln!(out, "{SWEEP_CSV_HEADER}")?;
    for (ib, t_bot) in result.bottom_axis.iter().enumerate() {
        for (it, t_top) in result.top_axis.iter().enumerate() {
            let cell = ib * result.n_top() + it;
            for (mode, metrics) in grids.iter().enumerate() {
                let ok = result.cells[cell].is_some();
                write!(out, "{},{},{}", fmt17(*t_top), fmt17(*t_bot), mode)?;
                for grid in metrics {
                    match grid[cell] {
                        Some(v) => write!(out, ",{}", fmt17(v))?,
                        None => write!(out, ",")?,
                    }
                }
                writeln!(out, ",{}", u8::from(ok))?;
            }
        }
    }
    Ok(())
}

pub fn export_sweep_csv(result: &SweepResult, path: &Path) -> Result<(), SweepError> {
    if result.cells.is_empty() {
        return Err(SweepError::Config("empty sweep result".into()));
    }
    let mut out = BufWriter::new(File::create(path)?);
    write_sweep_csv(result, &mut out)?;
    out.flush()?;
    Ok(())
}

/// One parsed row of a sweep CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub t_top: f64,
    pub t_bottom: f64,
    pub mode: usize,
    /// In CSV column order: fs, fs_norm, keff2, keff2_norm, eta, qm, fom, fom_norm.
    pub values: Option<[f64; 8]>,
}

pub fn read_sweep_csv<R: BufRead>(input: R) -> io::Result<Vec<SweepRow>> {
    let bad = |line: usize, msg: &str| {
        io::Error::new(io::ErrorKind::InvalidData, format!("line {line}: {msg}"))
    };
    let mut lines = input.lines();
    if lines.next().transpose()?.as_deref().map(str::trim) != Some(SWEEP_CSV_HEADER) {
        return Err(bad(1, "unexpected header"));
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        let lineno = i + 2;
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 12 {
            return Err(bad(lineno, "expected 12 columns"));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad(lineno, "bad number"));
        let ok = match cols[11] {
            "1" => true,
            "0" => false,
            _ => return Err(bad(lineno, "bad ok flag")),
        };
        let values = if ok {
            let mut v = [0.0; 8];
            for (slot, col) in v.iter_mut().zip(&cols[3..11]) {
                *slot = num(col)?;
            }
            Some(v)
        } else {
            None
        };
        rows.push(SweepRow {
            t_top: num(cols[0])?,
            t_bottom: num(cols[1])?,
            mode: cols[2].parse().map_err(|_| bad(lineno, "bad mode"))?,
            values,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modal::Keff2Definition;

    fn summary(index: usize, fs: f64, keff2: f64, qm: f64) -> ModeSummary {
        ModeSummary {
            index,
            fs,
            fp: fs * 1.02,
            keff2,
            eta: 0.5,
            qm,
            fom: keff2 * qm,
            keff2_definition: Keff2Definition::Ieee,
        }
    }

    fn toy_result() -> SweepResult {
        SweepResult {
            top_axis: vec![1e-7, 2e-7],
            bottom_axis: vec![1e-7, 2e-7],
            t_piezo: 1e-7,
            f0_piezo: 10e9,
            n_modes: 1,
            cells: vec![
                Some(vec![summary(0, 5e9, 0.10, 300.0)]),
                Some(vec![summary(0, 4e9, 0.08, 310.0)]),
                None,
                Some(vec![summary(0, 3e9, 0.05, 320.0)]),
            ],
        }
    }

    #[test]
    fn normalisation_hits_one_exactly() {
        let r = toy_result();
        for metric in [Metric::Keff2Norm, Metric::FomNorm] {
            let grid = r.grid(0, metric).unwrap();
            let max = grid.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max);
            assert_eq!(max, 1.0);
            assert_eq!(grid[2], None);
        }
        assert_eq!(r.grid(0, Metric::FsNorm).unwrap()[0], Some(0.5));
        assert_eq!(r.argmax(0, Metric::FomNorm).unwrap(), Some((0, 0)));
        assert!(r.grid(1, Metric::Fs).is_err());
    }

    #[test]
    fn csv_layout_and_mask() {
        let r = toy_result();
        let mut buf = Vec::new();
        write_sweep_csv(&r, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 5);
        assert_eq!(lines[0], SWEEP_CSV_HEADER);
        // Third data row is (bottom 1, top 0): masked.
        assert!(lines[3].ends_with(",,,,,,,,,0"), "{}", lines[3]);
        assert!(lines[1].ends_with(",1"));
    }

    #[test]
    fn metric_names_parse() {
        for m in CSV_METRICS {
            assert_eq!(m.name().parse::<Metric>().unwrap(), m);
        }
        assert!("bogus".parse::<Metric>().is_err());
    }
}

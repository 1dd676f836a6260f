//! The `baw` command line front end.
//!
//! Four subcommands, each writing into `--out` (default `./out`) together
//! with a `manifest.txt` record, except `estimate`, which prints to stdout.
//!
//! Exit codes: 0 success, 2 usage or configuration error, 3 physics error,
//! 4 more than half of the sweep cells masked, 5 fit did not converge (the
//! report is still written).

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use sha2::{Digest, Sha256};
use thiserror::Error;
use toml::{Table, Value};

use crate::acoustic1d::{spectrum, Backend, FrequencyGrid, Spacing};
use crate::materials::{load_stack, Stack};
use crate::mbvd::{
    device_curve, fit_mbvd, parse_touchstone, write_model_csv, FitOptions, Keff2Formula, MbvdError, Topology,
};
use crate::modal::{estimate_frequency, estimate_thickness, find_modes, write_modes_csv, ModeError};
use crate::sweep::{render_heatmap_svg, run_sweep_with_jobs, write_sweep_csv, Metric, SweepConfig, SweepError};
use crate::units::{parse_frequency, parse_scaled, FrequencyUnit};

const FREQUENCY_HELP: &str = "Frequencies accept a unit suffix (Hz, kHz, MHz, GHz), e.g. `13.3GHz` or `500MHz`.";

#[derive(Debug, Parser)]
#[command(name = "baw", version, about = "Bulk acoustic resonator design and measurement toolkit", after_help = FREQUENCY_HELP)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Admittance spectrum and modal metrics of a stack.
    Simulate(SimulateArgs),
    /// Two-axis electrode thickness sweep with optional SVG heatmaps.
    Sweep(SweepArgs),
    /// mBVD fit of two-port S-parameters.
    Fit(FitArgs),
    /// Thickness-mode frequency or thickness from f_n = n·v/(2t).
    Estimate(EstimateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BackendChoice {
    Bvp,
    Mason,
    Both,
}

#[derive(Debug, Args)]
#[command(after_help = "Bare frequencies are in Hz. Frequencies accept a unit suffix (Hz, kHz, MHz, GHz).")]
pub struct SimulateArgs {
    /// Stack description (TOML).
    #[arg(long)]
    pub stack: PathBuf,
    /// Lower band edge, Hz unless suffixed.
    #[arg(long)]
    pub fmin: String,
    /// Upper band edge, Hz unless suffixed.
    #[arg(long)]
    pub fmax: String,
    /// Number of grid points (at least 2).
    #[arg(long)]
    pub points: usize,
    #[arg(long, value_enum, default_value = "bvp")]
    pub backend: BackendChoice,
    /// Most modes listed in `modes.csv`.
    #[arg(long, default_value_t = 3)]
    pub max_modes: usize,
    /// Logarithmic instead of linear frequency spacing.
    #[arg(long)]
    pub log: bool,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
#[command(after_help = "Band edges are in Hz unless suffixed (Hz, kHz, MHz, GHz), e.g. `--band 1GHz:40GHz`.")]
pub struct SweepArgs {
    /// Stack description (TOML).
    #[arg(long)]
    pub stack: PathBuf,
    /// Points per thickness axis.
    #[arg(long, default_value_t = 25)]
    pub grid: usize,
    /// Thickness range in multiples of the piezo thickness, `lo:hi`.
    #[arg(long, default_value = "0.2:2.0")]
    pub range: String,
    /// Modes per cell.
    #[arg(long, default_value_t = 3)]
    pub modes: usize,
    /// Analysis band `fmin:fmax`.
    #[arg(long, default_value = "1GHz:40GHz")]
    pub band: String,
    /// Grid points of the analysis band.
    #[arg(long, default_value_t = 4001)]
    pub points: usize,
    /// Layer index of the top electrode (default: the layer above the piezo).
    #[arg(long)]
    pub top_layer: Option<usize>,
    /// Layer index of the bottom electrode (default: the layer below the piezo).
    #[arg(long)]
    pub bottom_layer: Option<usize>,
    /// Also write one SVG per (fs_norm, keff2_norm, fom_norm) and mode.
    #[arg(long)]
    pub heatmaps: bool,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long)]
    pub jobs: Option<usize>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TopologyChoice {
    /// Device in series between the ports, fits `-Y12`.
    Series,
    /// Device from port 1 to ground, fits `Y11`.
    Shunt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormulaChoice {
    /// (π²/8)·cm/c0
    Ratio,
    /// (π²/8)·(cm/c0)/(1 + cm/c0)
    Loaded,
}

#[derive(Debug, Args)]
#[command(after_help = "Band edges are in Hz unless suffixed (Hz, kHz, MHz, GHz), e.g. `--band 12.5GHz:14GHz`.")]
pub struct FitArgs {
    /// Version 1 two-port Touchstone file.
    #[arg(long)]
    pub s2p: PathBuf,
    /// Fitted band `fmin:fmax`.
    #[arg(long)]
    pub band: String,
    #[arg(long, value_enum, default_value = "series")]
    pub topology: TopologyChoice,
    #[arg(long, value_enum, default_value = "ratio")]
    pub keff2_formula: FormulaChoice,
    /// Levenberg-Marquardt iteration budget.
    #[arg(long, default_value_t = 2000)]
    pub max_iterations: usize,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("target").required(true).multiple(false).args(["thickness", "frequency"]))]
#[command(after_help = "`--frequency` is in GHz unless suffixed (Hz, kHz, MHz, GHz).")]
pub struct EstimateArgs {
    /// Mode order n (1 = fundamental).
    #[arg(long)]
    pub mode_order: u32,
    /// Phase velocity, m/s.
    #[arg(long)]
    pub velocity: f64,
    /// Thickness in nm; prints the frequency.
    #[arg(long)]
    pub thickness: Option<String>,
    /// Frequency, GHz unless suffixed; prints the thickness.
    #[arg(long)]
    pub frequency: Option<String>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Physics(String),
    #[error("{0}")]
    Masked(String),
    #[error("fit did not converge (report written to {0})")]
    NotConverged(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Physics(_) => 3,
            CliError::Masked(_) => 4,
            CliError::NotConverged(_) => 5,
        }
    }
}

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

fn physics(e: impl std::fmt::Display) -> CliError {
    CliError::Physics(e.to_string())
}

impl From<ModeError> for CliError {
    fn from(e: ModeError) -> Self {
        match e {
            ModeError::InvalidArgument(m) => CliError::Usage(m),
            other => physics(other),
        }
    }
}

impl From<SweepError> for CliError {
    fn from(e: SweepError) -> Self {
        match e {
            SweepError::BandTooNarrow { .. } => CliError::Masked(e.to_string()),
            other => usage(other),
        }
    }
}

impl From<MbvdError> for CliError {
    fn from(e: MbvdError) -> Self {
        match e {
            MbvdError::NoPeak | MbvdError::SingularConversion { .. } => physics(e),
            other => usage(other),
        }
    }
}

/// Parses arguments, runs the subcommand and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(command: &Command) -> Result<(), CliError> {
    match command {
        Command::Simulate(a) => cmd_simulate(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Fit(a) => cmd_fit(a),
        Command::Estimate(a) => cmd_estimate(a).map(|line| println!("{line}")),
    }
}

fn read_input(path: &Path) -> Result<(String, String), CliError> {
    let bytes = fs::read(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    let digest = hex::encode(Sha256::digest(&bytes));
    let text = String::from_utf8(bytes).map_err(|_| usage(format!("{} is not UTF-8 text", path.display())))?;
    Ok((text, digest))
}

fn load_stack_file(path: &Path) -> Result<(Stack, String), CliError> {
    let (text, digest) = read_input(path)?;
    let stack = load_stack(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    Ok((stack, digest))
}

fn parse_hz(text: &str, flag: &str) -> Result<f64, CliError> {
    parse_frequency(text, FrequencyUnit::Hz).ok_or_else(|| usage(format!("invalid frequency for {flag}: `{text}`")))
}

fn parse_pair(text: &str, flag: &str) -> Result<(String, String), CliError> {
    let (lo, hi) = text
        .split_once(':')
        .ok_or_else(|| usage(format!("{flag} expects `lo:hi`, got `{text}`")))?;
    Ok((lo.trim().to_string(), hi.trim().to_string()))
}

fn parse_band(text: &str, flag: &str) -> Result<(f64, f64), CliError> {
    let (lo, hi) = parse_pair(text, flag)?;
    let (lo, hi) = (parse_hz(&lo, flag)?, parse_hz(&hi, flag)?);
    if !(lo < hi) {
        return Err(usage(format!("{flag}: lower edge must be below upper edge")));
    }
    Ok((lo, hi))
}

/// Output files collected for the manifest, written only once the run has
/// produced all of its results.
struct Outputs {
    dir: PathBuf,
    files: Vec<(String, Vec<u8>)>,
}

impl Outputs {
    fn new(dir: &Path) -> Self {
        Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        }
    }

    fn add(&mut self, name: impl Into<String>, bytes: Vec<u8>) {
        self.files.push((name.into(), bytes));
    }

    fn write(self, mut manifest: Manifest) -> Result<(), CliError> {
        fs::create_dir_all(&self.dir).map_err(|e| usage(format!("cannot create {}: {e}", self.dir.display())))?;
        let mut outputs = Table::new();
        for (name, bytes) in &self.files {
            let path = self.dir.join(name);
            fs::write(&path, bytes).map_err(|e| usage(format!("cannot write {}: {e}", path.display())))?;
            outputs.insert(name.clone(), Value::String(hex::encode(Sha256::digest(bytes))));
        }
        manifest.root.insert("outputs".into(), Value::Table(outputs));
        let path = self.dir.join("manifest.txt");
        fs::write(&path, manifest.render()).map_err(|e| usage(format!("cannot write {}: {e}", path.display())))
    }
}

/// `manifest.txt`: subcommand, tool version, configuration echo, input and
/// output SHA-256 digests. It carries no timestamp, so equal runs give
/// byte-identical manifests.
struct Manifest {
    root: Table,
}

impl Manifest {
    fn new(subcommand: &str) -> Self {
        let mut root = Table::new();
        root.insert("subcommand".into(), Value::String(subcommand.into()));
        root.insert("tool_version".into(), Value::String(env!("CARGO_PKG_VERSION").into()));
        root.insert("config".into(), Value::Table(Table::new()));
        root.insert("inputs".into(), Value::Table(Table::new()));
        root.insert("results".into(), Value::Table(Table::new()));
        Self { root }
    }

    fn section(&mut self, name: &str) -> &mut Table {
        self.root
            .get_mut(name)
            .and_then(Value::as_table_mut)
            .expect("sections are created in Manifest::new")
    }

    fn config(&mut self, key: &str, value: impl Into<Value>) {
        self.section("config").insert(key.into(), value.into());
    }

    fn input(&mut self, path: &Path, digest: String) {
        self.section("inputs")
            .insert(path.display().to_string(), Value::String(digest));
    }

    fn result(&mut self, key: &str, value: impl Into<Value>) {
        self.section("results").insert(key.into(), value.into());
    }

    fn render(&self) -> String {
        toml::to_string(&self.root).expect("manifest tables serialize")
    }
}

fn csv_bytes<F>(write: F) -> Result<Vec<u8>, CliError>
where
    F: FnOnce(&mut BufWriter<&mut Vec<u8>>) -> std::io::Result<()>,
{
    let mut buf = Vec::new();
    {
        let mut w = BufWriter::new(&mut buf);
        write(&mut w).map_err(usage)?;
        std::io::Write::flush(&mut w).map_err(usage)?;
    }
    Ok(buf)
}

pub fn cmd_simulate(a: &SimulateArgs) -> Result<(), CliError> {
    let (stack, digest) = load_stack_file(&a.stack)?;
    let fmin = parse_hz(&a.fmin, "--fmin")?;
    let fmax = parse_hz(&a.fmax, "--fmax")?;
    let spacing = if a.log { Spacing::Logarithmic } else { Spacing::Linear };
    let grid = FrequencyGrid::new(fmin, fmax, a.points, spacing).map_err(usage)?;
    if a.max_modes == 0 {
        return Err(usage("--max-modes must be at least 1"));
    }

    let backends: &[Backend] = match a.backend {
        BackendChoice::Bvp => &[Backend::Bvp],
        BackendChoice::Mason => &[Backend::Mason],
        BackendChoice::Both => &[Backend::Bvp, Backend::Mason],
    };
    let mut manifest = Manifest::new("simulate");
    manifest.input(&a.stack, digest);
    manifest.config("fmin_hz", fmin);
    manifest.config("fmax_hz", fmax);
    manifest.config("points", a.points as i64);
    manifest.config("spacing", if a.log { "logarithmic" } else { "linear" });
    manifest.config("backend", format!("{:?}", a.backend).to_lowercase());
    manifest.config("max_modes", a.max_modes as i64);

    let mut outputs = Outputs::new(&a.out);
    let mut curves = Vec::new();
    for &backend in backends {
        let curve = spectrum(&stack, &grid, backend).map_err(physics)?;
        let name = match backend {
            Backend::Bvp => "spectrum_bvp.csv",
            Backend::Mason => "spectrum_mason.csv",
        };
        outputs.add(name, csv_bytes(|w| curve.write_csv(w))?);
        curves.push(curve);
    }
    if let [bvp, mason] = &curves[..] {
        let deviation = bvp
            .y()
            .iter()
            .zip(mason.y())
            .map(|(b, m)| (b - m).norm() / m.norm())
            .fold(0.0, f64::max);
        manifest.result("max_backend_deviation", deviation);
    }
    let modes = find_modes(&stack, &grid, a.max_modes)?;
    manifest.result("modes_found", modes.len() as i64);
    outputs.add("modes.csv", csv_bytes(|w| write_modes_csv(&modes, w))?);
    outputs.write(manifest)
}

pub fn cmd_sweep(a: &SweepArgs) -> Result<(), CliError> {
    let (stack, digest) = load_stack_file(&a.stack)?;
    let (lo, hi) = parse_pair(&a.range, "--range")?;
    let ratio_min: f64 = lo.parse().map_err(|_| usage(format!("--range: invalid number `{lo}`")))?;
    let ratio_max: f64 = hi.parse().map_err(|_| usage(format!("--range: invalid number `{hi}`")))?;
    if !(ratio_min < ratio_max) {
        return Err(usage("--range: lo must be below hi"));
    }
    let (fmin, fmax) = parse_band(&a.band, "--band")?;
    let band = FrequencyGrid::linear(fmin, fmax, a.points).map_err(usage)?;
    let mut cfg = SweepConfig::new(stack, band)?;
    cfg.ratio_min = ratio_min;
    cfg.ratio_max = ratio_max;
    cfg.grid_n = a.grid;
    cfg.n_modes = a.modes;
    if let Some(i) = a.top_layer {
        cfg.top_layer_index = i;
    }
    if let Some(i) = a.bottom_layer {
        cfg.bottom_layer_index = i;
    }
    cfg.validate()?;
    let jobs = match a.jobs {
        Some(0) => return Err(usage("--jobs must be at least 1")),
        Some(j) => j,
        None => rayon::current_num_threads(),
    };
    let result = run_sweep_with_jobs(&cfg, jobs)?;

    let mut manifest = Manifest::new("sweep");
    manifest.input(&a.stack, digest);
    manifest.config("grid", a.grid as i64);
    manifest.config("ratio_min", ratio_min);
    manifest.config("ratio_max", ratio_max);
    manifest.config("modes", a.modes as i64);
    manifest.config("band_fmin_hz", fmin);
    manifest.config("band_fmax_hz", fmax);
    manifest.config("band_points", a.points as i64);
    manifest.config("top_layer", cfg.top_layer_index as i64);
    manifest.config("bottom_layer", cfg.bottom_layer_index as i64);
    manifest.config("heatmaps", a.heatmaps);
    manifest.result("masked_cells", result.masked_count() as i64);

    let mut outputs = Outputs::new(&a.out);
    let mut csv = Vec::new();
    write_sweep_csv(&result, &mut csv)?;
    outputs.add("sweep.csv", csv);
    if a.heatmaps {
        for metric in [Metric::FsNorm, Metric::Keff2Norm, Metric::FomNorm] {
            for mode in 0..a.modes {
                let svg = render_heatmap_svg(&result, metric, mode)?;
                outputs.add(format!("heatmap_{}_mode{mode}.svg", metric.name()), svg.into_bytes());
            }
        }
    }
    outputs.write(manifest)
}

pub fn cmd_fit(a: &FitArgs) -> Result<(), CliError> {
    let (text, digest) = read_input(&a.s2p)?;
    let data = parse_touchstone(&text).map_err(|e| usage(format!("{}: {e}", a.s2p.display())))?;
    let band = parse_band(&a.band, "--band")?;
    let topology = match a.topology {
        TopologyChoice::Series => Topology::SeriesThrough,
        TopologyChoice::Shunt => Topology::Shunt,
    };
    let formula = match a.keff2_formula {
        FormulaChoice::Ratio => Keff2Formula::Ratio,
        FormulaChoice::Loaded => Keff2Formula::Loaded,
    };
    let curve = device_curve(&data, topology)?;
    let options = FitOptions {
        band: Some(band),
        formula,
        max_iterations: a.max_iterations,
        ..FitOptions::default()
    };
    let report = fit_mbvd(&curve, &options)?;

    let mut manifest = Manifest::new("fit");
    manifest.input(&a.s2p, digest);
    manifest.config("band_fmin_hz", band.0);
    manifest.config("band_fmax_hz", band.1);
    manifest.config("topology", topology.to_string());
    manifest.config("keff2_formula", formula.to_string());
    manifest.config("max_iterations", a.max_iterations as i64);
    manifest.result("iterations", report.n_iterations as i64);
    manifest.result("converged", report.converged);

    let mut outputs = Outputs::new(&a.out);
    outputs.add("fit_report.txt", report.to_record().into_bytes());
    let fitted = curve.restrict(band.0, band.1);
    outputs.add("fit_model.csv", csv_bytes(|w| write_model_csv(&fitted, &report.params, w))?);
    outputs.write(manifest)?;
    if report.converged {
        Ok(())
    } else {
        Err(CliError::NotConverged(a.out.join("fit_report.txt").display().to_string()))
    }
}

/// Returns the line printed by `baw estimate`.
pub fn cmd_estimate(a: &EstimateArgs) -> Result<String, CliError> {
    if a.mode_order == 0 {
        return Err(usage("--mode-order must be at least 1"));
    }
    if !(a.velocity.is_finite() && a.velocity > 0.0) {
        return Err(usage("--velocity must be positive"));
    }
    match (&a.thickness, &a.frequency) {
        (Some(t), None) => {
            let t = parse_scaled(t, -9)
                .filter(|t| t.is_finite() && *t > 0.0)
                .ok_or_else(|| usage(format!("invalid thickness `{t}`")))?;
            let f = estimate_frequency(a.mode_order, a.velocity, t);
            Ok(format!("frequency = {:.6} GHz ({f:e} Hz)", f / 1e9))
        }
        (None, Some(f)) => {
            let f = parse_frequency(f, FrequencyUnit::GHz).ok_or_else(|| usage(format!("invalid frequency `{f}`")))?;
            let t = estimate_thickness(f, a.mode_order, a.velocity);
            Ok(format!("thickness = {:.6} nm ({t:e} m)", t * 1e9))
        }
        _ => Err(usage("give exactly one of --thickness or --frequency")),
    }
}

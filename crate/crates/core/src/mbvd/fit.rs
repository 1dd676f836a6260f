//! Levenberg-Marquardt fit of the mBVD circuit to an admittance curve.
//!
//! The six parameters are optimised as natural logarithms, which keeps them
//! positive without constraints. The cost is `Σ |Y_model − Y_data|² / |Y_data|²`
//! and the Jacobian is evaluated analytically. Damping follows Marquardt's
//! diagonal scaling. The fit stops when the largest log-parameter step falls
//! below `1e-10` or an accepted step lowers the cost by less than `1e-12`
//! relative (plateau); running out of iterations leaves `converged = false`.

use std::fmt::Write as _;

use nalgebra::{Matrix6, Vector6};
use num_complex::Complex64;

use super::{mbvd_admittance, report, Keff2Formula, MbvdError, MbvdParams, J, TAU};
use crate::acoustic1d::AdmittanceCurve;
use crate::units::fmt17;

/// Largest change of any log parameter in one iteration.
const MAX_LOG_STEP: f64 = 1.0;
const PLATEAU: f64 = 1e-12;

/// Minimum number of samples inside the fitted band.
pub const MIN_POINTS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    /// Inclusive frequency range in Hz; the whole curve when `None`.
    pub band: Option<(f64, f64)>,
    /// Starting point; the heuristic of [`initial_guess`] when `None`.
    pub init: Option<MbvdParams>,
    pub formula: Keff2Formula,
    pub max_iterations: usize,
    /// Starting value of `r0` and `rs` for the heuristic seed, Ω.
    pub resistance_floor: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            band: None,
            init: None,
            formula: Keff2Formula::Ratio,
            max_iterations: 2000,
            resistance_floor: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitReport {
    pub params: MbvdParams,
    /// Hz.
    pub fs: f64,
    pub qs: f64,
    pub keff2: f64,
    pub fom: f64,
    /// Relative RMS of the complex admittance error over the band.
    pub residual: f64,
    pub n_iterations: usize,
    pub converged: bool,
    pub formula: Keff2Formula,
}

impl FitReport {
    fn new(params: MbvdParams, residual: f64, n_iterations: usize, converged: bool, formula: Keff2Formula) -> Self {
        let m = report(&params, formula);
        Self {
            params,
            fs: m.fs,
            qs: m.qs,
            keff2: m.keff2,
            fom: m.fom,
            residual,
            n_iterations,
            converged,
            formula,
        }
    }

    /// Structured-text record (TOML key/value pairs).
    pub fn to_record(&self) -> String {
        let p = &self.params;
        let mut out = String::new();
        for (key, value) in [
            ("rm_ohm", p.rm),
            ("lm_h", p.lm),
            ("cm_f", p.cm),
            ("c0_f", p.c0),
            ("r0_ohm", p.r0),
            ("rs_ohm", p.rs),
            ("fs_hz", self.fs),
            ("qs", self.qs),
            ("keff2", self.keff2),
            ("fom", self.fom),
            ("residual", self.residual),
        ] {
            let _ = writeln!(out, "{key} = {}", fmt17(value));
        }
        let _ = writeln!(out, "converged = {}", self.converged);
        out
    }
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Heuristic starting point: `fs` at the conductance peak, `fp` at the
/// admittance minimum above it, `c0` from the median of `Im Y/(2πf)` with
/// the lossless motional contribution divided out, taken away from both
/// resonances, `cm = c0·((fp/fs)² − 1)`, `lm` from `fs`, `rm = 1/Re Y(fs)`,
/// and `r0 = rs = resistance_floor`.
pub fn initial_guess(curve: &AdmittanceCurve, resistance_floor: f64) -> Result<MbvdParams, MbvdError> {
    let f = curve.frequencies();
    let y = curve.y();
    let n = f.len();
    let i_s = (0..n)
        .max_by(|&a, &b| y[a].re.total_cmp(&y[b].re))
        .ok_or(MbvdError::NoPeak)?;
    if i_s == 0 || i_s == n - 1 || !(y[i_s].re > 0.0) {
        return Err(MbvdError::NoPeak);
    }
    let i_p = (i_s + 1..n)
        .min_by(|&a, &b| y[a].norm().total_cmp(&y[b].norm()))
        .unwrap_or(n - 1);
    let (fs, fp) = (f[i_s], f[i_p]);
    let gap = (fp - fs).max(f[i_s + 1] - f[i_s]);

    let ratio = ((fp / fs).powi(2) - 1.0).max(1e-6);
    let static_capacitance = |i: usize| {
        let x2 = (f[i] / fs).powi(2);
        y[i].im / (TAU * f[i]) / (1.0 + ratio / (1.0 - x2))
    };
    let mut off: Vec<f64> = (0..n)
        .filter(|&i| (f[i] - fs).abs() > 0.25 * gap && (f[i] - fp).abs() > 0.25 * gap)
        .map(static_capacitance)
        .filter(|c| c.is_finite())
        .collect();
    if off.len() < 5 {
        off = (0..n).map(static_capacitance).filter(|c| c.is_finite()).collect();
    }
    let mut c0 = if off.is_empty() { 0.0 } else { median(&mut off).abs() };
    if !(c0 > 0.0) {
        c0 = 1e-15;
    }
    let cm = c0 * ratio;
    let lm = 1.0 / ((TAU * fs).powi(2) * cm);
    let rm = 1.0 / y[i_s].re;
    Ok(MbvdParams {
        rm,
        lm,
        cm,
        c0,
        r0: resistance_floor,
        rs: resistance_floor,
    })
}

fn to_log(p: &MbvdParams) -> Vector6<f64> {
    Vector6::new(p.rm.ln(), p.lm.ln(), p.cm.ln(), p.c0.ln(), p.r0.ln(), p.rs.ln())
}

fn from_log(x: &Vector6<f64>) -> MbvdParams {
    MbvdParams {
        rm: x[0].exp(),
        lm: x[1].exp(),
        cm: x[2].exp(),
        c0: x[3].exp(),
        r0: x[4].exp(),
        rs: x[5].exp(),
    }
}

/// Model admittance and its derivatives with respect to the log parameters.
fn model_with_gradient(p: &MbvdParams, f: f64) -> (Complex64, [Complex64; 6]) {
    let w = TAU * f;
    let xm = 1.0 / (J * w * p.cm);
    let xs = 1.0 / (J * w * p.c0);
    let ym = 1.0 / (p.rm + J * w * p.lm + xm);
    let ys = 1.0 / (p.r0 + xs);
    let wsum = ym + ys;
    let y = 1.0 / (p.rs + 1.0 / wsum);
    let dy_dw = (y / wsum) * (y / wsum);
    let dm = -dy_dw * ym * ym;
    let ds = -dy_dw * ys * ys;
    (
        y,
        [
            dm * p.rm,
            dm * (J * w * p.lm),
            dm * (-xm),
            ds * (-xs),
            ds * p.r0,
            -y * y * p.rs,
        ],
    )
}

fn cost(p: &MbvdParams, f: &[f64], y: &[Complex64]) -> f64 {
    f.iter()
        .zip(y)
        .map(|(&fi, yi)| (mbvd_admittance(p, fi) - yi).norm_sqr() / yi.norm_sqr())
        .sum()
}

/// Fits the circuit to `curve` with Levenberg-Marquardt on the logarithms
/// of the six elements. Without `options.init` the heuristic seed is tried
/// alongside copies whose `r0` and `rs` split the off-resonance series
/// resistance, and the run with the lowest cost is reported.
/// Non-convergence is reported through [`FitReport::converged`], not as an
/// error.
pub fn fit_mbvd(curve: &AdmittanceCurve, options: &FitOptions) -> Result<FitReport, MbvdError> {
    let curve = match options.band {
        Some((lo, hi)) => curve.restrict(lo, hi),
        None => curve.clone(),
    };
    if curve.len() < MIN_POINTS {
        return Err(MbvdError::TooFewPoints {
            required: MIN_POINTS,
            got: curve.len(),
        });
    }
    let seed = match options.init {
        Some(p) => {
            p.validate()?;
            p
        }
        None => initial_guess(&curve, options.resistance_floor)?,
    };
    if !(seed.rm.is_finite() && seed.rm > 0.0 && seed.r0 > 0.0 && seed.rs > 0.0) {
        return Err(MbvdError::InvalidParams(
            "fit requires finite positive rm, r0 and rs".into(),
        ));
    }
    let f = curve.frequencies();
    let y = curve.y();

    let mut best = levenberg_marquardt(seed, f, y, options.max_iterations);
    if options.init.is_none() {
        let r_off = off_resonance_resistance(y).max(options.resistance_floor);
        for (r0_share, rs_share) in RESISTANCE_SPLITS {
            let start = MbvdParams {
                r0: r0_share * r_off,
                rs: rs_share * r_off,
                ..seed
            };
            let run = levenberg_marquardt(start, f, y, options.max_iterations);
            if run.cost < best.cost {
                best = run;
            }
        }
    }

    let residual = (best.cost / f.len() as f64).sqrt();
    Ok(FitReport::new(best.params, residual, best.iterations, best.converged, options.formula))
}

/// Shares of the off-resonance series resistance given to `r0` and `rs`
/// in the extra starting points tried without a user seed.
const RESISTANCE_SPLITS: [(f64, f64); 5] = [(0.5, 0.5), (0.9, 0.1), (0.1, 0.9), (0.99, 0.01), (0.01, 0.99)];

/// Median of `Re(1/Y)` over the three lowest and three highest samples,
/// an estimate of `r0 + rs`.
fn off_resonance_resistance(y: &[Complex64]) -> f64 {
    let n = y.len();
    let mut r: Vec<f64> = [0, 1, 2, n - 3, n - 2, n - 1].iter().map(|&i| (1.0 / y[i]).re).collect();
    median(&mut r)
}

struct Run {
    params: MbvdParams,
    cost: f64,
    iterations: usize,
    converged: bool,
}

fn levenberg_marquardt(seed: MbvdParams, f: &[f64], y: &[Complex64], max_iterations: usize) -> Run {
    let mut x = to_log(&seed);
    let mut params = seed;
    let mut current = cost(&params, f, y);
    let mut lambda = 1e-3;
    let mut converged = current == 0.0;
    let mut iterations = 0;

    while !converged && iterations < max_iterations {
        iterations += 1;
        let mut h = Matrix6::<f64>::zeros();
        let mut g = Vector6::<f64>::zeros();
        for (&fi, yi) in f.iter().zip(y) {
            let (ym, d) = model_with_gradient(&params, fi);
            let weight = 1.0 / yi.norm();
            let r = (ym - yi) * weight;
            for part in 0..2 {
                let pick = |c: Complex64| if part == 0 { c.re } else { c.im };
                let row = Vector6::from_fn(|k, _| pick(d[k]) * weight);
                h += row * row.transpose();
                g += row * pick(r);
            }
        }
        loop {
            let mut damped = h;
            for k in 0..6 {
                damped[(k, k)] += lambda * h[(k, k)].max(1e-300);
            }
            let step = damped.cholesky().map(|c| c.solve(&(-g)));
            let Some(step) = step.filter(|s| s.iter().all(|v| v.is_finite())) else {
                lambda *= 10.0;
                if lambda > 1e30 {
                    break;
                }
                continue;
            };
            let largest = step.amax();
            let step = step.map(|v| v.clamp(-MAX_LOG_STEP, MAX_LOG_STEP));
            let trial_x = x + step;
            let trial = from_log(&trial_x);
            let trial_cost = cost(&trial, f, y);
            if trial_cost.is_finite() && trial_cost < current {
                let relative_drop = (current - trial_cost) / current;
                x = trial_x;
                params = trial;
                current = trial_cost;
                lambda = (lambda / 3.0).max(1e-12);
                if largest < 1e-10 || relative_drop < PLATEAU || current == 0.0 {
                    converged = true;
                }
                break;
            }
            if largest < 1e-10 {
                converged = true;
                break;
            }
            lambda *= 4.0;
            if lambda > 1e30 {
                break;
            }
        }
        if lambda > 1e30 {
            break;
        }
    }

    Run {
        params,
        cost: if current.is_finite() { current } else { f64::INFINITY },
        iterations,
        converged,
    }
}

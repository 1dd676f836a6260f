//! Resonance detection and per-mode figures of merit.
//!
//! `fs` is the conductance peak (local maximum of `Re Y`), `fp` the
//! admittance minimum above it. Each detected mode carries its effective
//! coupling, the piezo strain-energy share `η` at `fs`, the loss-weighted
//! mechanical Q and `FOM = keff² · Qm`.

use std::f64::consts::PI;
use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use num_complex::Complex64;
use thiserror::Error;

use crate::acoustic1d::bvp::admittance_bvp_with;
use crate::acoustic1d::bvp::field_profile_with;
use crate::acoustic1d::{strain_energy, EnergyPartition, FrequencyGrid, SolveError};
use crate::materials::{derive_constants, DerivedConstants, Stack};
use crate::units::fmt17;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModeError {
    #[error("no resonance found in band {f_min} .. {f_max} Hz")]
    NoResonance { f_min: f64, f_max: f64 },
    #[error("fp not found above fs = {fs} Hz before the next resonance (malformed band)")]
    FpNotFound { fs: f64 },
    #[error("need 0 < fs < fp, got fs = {fs}, fp = {fp}")]
    Ordering { fs: f64, fp: f64 },
    #[error("total strain energy is zero")]
    ZeroEnergy,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Solve(#[from] SolveError),
}

/// Effective coupling convention computed from `fs` and `fp`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Keff2Definition {
    /// `(fp² − fs²)/fp²`
    Separation,
    /// `(π/2)(fs/fp)·tan((π/2)(fp − fs)/fp)`
    #[default]
    Ieee,
    /// `(π²/8)(fp² − fs²)/fp²`
    Approx,
}

impl fmt::Display for Keff2Definition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Keff2Definition::Separation => "separation",
            Keff2Definition::Ieee => "ieee",
            Keff2Definition::Approx => "approx",
        })
    }
}

impl FromStr for Keff2Definition {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "separation" => Ok(Keff2Definition::Separation),
            "ieee" => Ok(Keff2Definition::Ieee),
            "approx" => Ok(Keff2Definition::Approx),
            other => Err(format!("unknown keff2 definition `{other}`")),
        }
    }
}

pub fn keff2(fs: f64, fp: f64, definition: Keff2Definition) -> Result<f64, ModeError> {
    if !(fs > 0.0 && fs < fp && fp.is_finite()) {
        return Err(ModeError::Ordering { fs, fp });
    }
    let r = fs / fp;
    Ok(match definition {
        Keff2Definition::Separation => (1.0 - r) * (1.0 + r),
        Keff2Definition::Ieee => 0.5 * PI * r * (0.5 * PI * (fp - fs) / fp).tan(),
        Keff2Definition::Approx => PI * PI / 8.0 * (1.0 - r) * (1.0 + r),
    })
}

/// Energy-weighted harmonic mean of the layer quality factors,
/// `Qm = [Σ (U_i/ΣU)/Q_i]⁻¹`. Lossless layers contribute no loss.
pub fn qm_from_partition(partition: &EnergyPartition, stack: &Stack) -> Result<f64, ModeError> {
    if partition.layer_energy.len() != stack.layers().len() {
        return Err(ModeError::InvalidArgument(format!(
            "partition has {} layers, stack has {}",
            partition.layer_energy.len(),
            stack.layers().len()
        )));
    }
    let total: f64 = partition.layer_energy.iter().sum();
    if !(total > 0.0) {
        return Err(ModeError::ZeroEnergy);
    }
    // Energy per distinct loss value.
    let mut buckets: Vec<(f64, f64)> = Vec::new();
    for (u, layer) in partition.layer_energy.iter().zip(stack.layers()) {
        let loss = layer.material.loss();
        match buckets.iter_mut().find(|(l, _)| *l == loss) {
            Some(b) => b.1 += u,
            None => buckets.push((loss, *u)),
        }
    }
    let active: Vec<&(f64, f64)> = buckets.iter().filter(|(_, u)| *u > 0.0).collect();
    if let [(loss, _)] = active[..] {
        return Ok(1.0 / loss);
    }
    let loss: f64 = active.iter().map(|(l, u)| u / total * l).sum();
    Ok(1.0 / loss)
}

/// Thickness-mode frequency `f_n = n·v/(2t)`.
pub fn estimate_frequency(mode_order: u32, velocity: f64, thickness: f64) -> f64 {
    mode_order as f64 * velocity / (2.0 * thickness)
}

/// Inverse of [`estimate_frequency`], `t = n·v/(2f)`.
pub fn estimate_thickness(frequency: f64, mode_order: u32, velocity: f64) -> f64 {
    mode_order as f64 * velocity / (2.0 * frequency)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModeSummary {
    /// 0-based, ordered by ascending `fs` within the analysed band.
    pub index: usize,
    pub fs: f64,
    pub fp: f64,
    pub keff2: f64,
    pub eta: f64,
    pub qm: f64,
    pub fom: f64,
    pub keff2_definition: Keff2Definition,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeSearch {
    /// Relative frequency tolerance of the golden-section refinement.
    pub rel_tol: f64,
    pub definition: Keff2Definition,
    /// Conductance peaks below this fraction of the band maximum are ignored.
    pub min_peak_ratio: f64,
    /// Resonances whose effective coupling does not exceed this value are
    /// skipped and do not consume a mode index. Peaks whose refined `fp`
    /// collapses onto `fs` are always skipped.
    pub min_keff2: f64,
}

impl Default for ModeSearch {
    fn default() -> Self {
        Self {
            rel_tol: 1e-9,
            definition: Keff2Definition::Ieee,
            min_peak_ratio: 1e-12,
            min_keff2: 0.0,
        }
    }
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section search for the maximiser of `f` on `[lo, hi]`.
fn golden_max<F, E>(mut lo: f64, mut hi: f64, rel_tol: f64, mut f: F) -> Result<f64, E>
where
    F: FnMut(f64) -> Result<f64, E>,
{
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    while hi - lo > rel_tol * 0.5 * (hi + lo) {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2)?;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Detects resonances in `band` with the default search settings.
pub fn find_modes(
    stack: &Stack,
    band: &FrequencyGrid,
    max_modes: usize,
) -> Result<Vec<ModeSummary>, ModeError> {
    find_modes_with(stack, band, max_modes, &ModeSearch::default())
}

pub fn find_modes_with(
    stack: &Stack,
    band: &FrequencyGrid,
    max_modes: usize,
    search: &ModeSearch,
) -> Result<Vec<ModeSummary>, ModeError> {
    if max_modes == 0 {
        return Err(ModeError::InvalidArgument("max_modes must be at least 1".into()));
    }
    let constants = derive_constants(stack);
    let freqs = band.frequencies();
    let y: Vec<Complex64> = freqs
        .iter()
        .map(|&f| admittance_bvp_with(&constants, f))
        .collect::<Result<_, _>>()?;

    let g_max = y.iter().map(|v| v.re).fold(f64::NEG_INFINITY, f64::max);
    let floor = search.min_peak_ratio * g_max.max(0.0);
    let peaks: Vec<usize> = (1..freqs.len() - 1)
        .filter(|&i| y[i].re > y[i - 1].re && y[i].re >= y[i + 1].re && y[i].re > floor)
        .collect();
    if peaks.is_empty() {
        return Err(ModeError::NoResonance {
            f_min: band.f_min(),
            f_max: band.f_max(),
        });
    }

    let conductance = |f: f64| admittance_bvp_with(&constants, f).map(|v| v.re);
    let neg_magnitude = |f: f64| admittance_bvp_with(&constants, f).map(|v| -v.norm());

    let mut modes = Vec::new();
    for (n, &i) in peaks.iter().enumerate() {
        if modes.len() == max_modes {
            break;
        }
        let fs = golden_max(freqs[i - 1], freqs[i + 1], search.rel_tol, conductance)?;

        // Smallest |Y| sample strictly between this peak and the next one.
        let end = peaks.get(n + 1).copied().unwrap_or(freqs.len() - 1);
        let j = (i + 1..end)
            .min_by(|&a, &b| y[a].norm().total_cmp(&y[b].norm()))
            .ok_or(ModeError::FpNotFound { fs })?;
        if j + 1 == end && y[end].norm() < y[j].norm() {
            return Err(ModeError::FpNotFound { fs });
        }
        let lo = if j - 1 <= i { fs } else { freqs[j - 1] };
        let fp = golden_max(lo, freqs[j + 1], search.rel_tol, neg_magnitude)?;

        match keff2(fs, fp, search.definition) {
            Ok(k) if k > search.min_keff2 => {}
            _ => continue,
        }
        modes.push(summarize(stack, &constants, modes.len(), fs, fp, search.definition)?);
    }
    Ok(modes)
}

fn summarize(
    stack: &Stack,
    constants: &DerivedConstants,
    index: usize,
    fs: f64,
    fp: f64,
    definition: Keff2Definition,
) -> Result<ModeSummary, ModeError> {
    let k2 = keff2(fs, fp, definition)?;
    let profile = field_profile_with(constants.clone(), fs)?;
    let partition = strain_energy(&profile, stack)?;
    let qm = qm_from_partition(&partition, stack)?;
    Ok(ModeSummary {
        index,
        fs,
        fp,
        keff2: k2,
        eta: partition.eta,
        qm,
        fom: k2 * qm,
        keff2_definition: definition,
    })
}

pub const MODES_CSV_HEADER: &str = "mode,fs_hz,fp_hz,keff2,eta,qm,fom,keff2_def";

pub fn write_modes_csv<W: Write>(modes: &[ModeSummary], mut out: W) -> io::Result<()> {
    writeln!(out, "{MODES_CSV_HEADER}")?;
    for m in modes {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            m.index,
            fmt17(m.fs),
            fmt17(m.fp),
            fmt17(m.keff2),
            fmt17(m.eta),
            fmt17(m.qm),
            fmt17(m.fom),
            m.keff2_definition
        )?;
    }
    Ok(())
}

const MAX_LOG_FACTOR_STEP: f64 = std::f64::consts::LN_2;

/// Result of [`calibrate_piezo_stiffness`].
#[derive(Debug, Clone)]
pub struct Calibration {
    pub stack: Stack,
    /// Multiplier applied to the piezo layer's `c33E`.
    pub factor: f64,
    pub mode: ModeSummary,
}

/// Scales the piezo `c33E` by a single factor so that mode `mode_index`
/// in `band` has its series resonance at `target_fs`.
pub fn calibrate_piezo_stiffness(
    stack: &Stack,
    band: &FrequencyGrid,
    mode_index: usize,
    target_fs: f64,
) -> Result<Calibration, ModeError> {
    let p = stack.piezo_index();
    let base = stack.piezo().material.clone();
    let evaluate = |factor: f64| -> Result<(Stack, ModeSummary), ModeError> {
        let mut material = base.clone();
        material.c33e = base.c33e * factor;
        let candidate = stack
            .with_material(p, material)
            .map_err(|e| ModeError::InvalidArgument(e.to_string()))?;
        let modes = find_modes(&candidate, band, mode_index + 1)?;
        let mode = modes.get(mode_index).cloned().ok_or(ModeError::NoResonance {
            f_min: band.f_min(),
            f_max: band.f_max(),
        })?;
        Ok((candidate, mode))
    };

    // Secant iteration on ln(fs) against ln(factor), steps capped at a
    // factor of 2; the first step assumes fs ~ sqrt(stiffness).
    let residual = |log_factor: f64| -> Result<(f64, Stack, ModeSummary), ModeError> {
        let (candidate, mode) = evaluate(log_factor.exp())?;
        Ok(((mode.fs / target_fs).ln(), candidate, mode))
    };
    let mut x0 = 0.0;
    let (mut r0, mut stack0, mut mode0) = residual(x0)?;
    let mut x1 = (-2.0 * r0).clamp(-MAX_LOG_FACTOR_STEP, MAX_LOG_FACTOR_STEP);
    for _ in 0..60 {
        if r0.abs() < 2e-9 {
            return Ok(Calibration {
                stack: stack0,
                factor: x0.exp(),
                mode: mode0,
            });
        }
        let (r1, stack1, mode1) = residual(x1)?;
        let slope = if r1 != r0 { (r1 - r0) / (x1 - x0) } else { 0.5 };
        let x2 = x1 - (r1 / slope).clamp(-MAX_LOG_FACTOR_STEP, MAX_LOG_FACTOR_STEP);
        (x0, r0, stack0, mode0) = (x1, r1, stack1, mode1);
        x1 = x2;
    }
    Err(ModeError::InvalidArgument(format!(
        "stiffness calibration to {target_fs} Hz did not converge"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::acoustic1d::EnergyPartition;
    use crate::materials::{Boundaries, Layer, Material, Role};

    fn two_bucket_stack(q_piezo: f64, q_metal: f64) -> Stack {
        let metal = Material {
            name: "M".into(),
            density: 2700.0,
            c33e: 1.1e11,
            e33: 0.0,
            eps33s: None,
            q_mech: q_metal,
            tan_delta: 0.0,
            lossless: false,
            citation: String::new(),
        };
        let piezo = Material {
            name: "P".into(),
            density: 3500.0,
            c33e: 2e11,
            e33: 2.6,
            eps33s: Some(1.3e-10),
            q_mech: q_piezo,
            ..metal.clone()
        };
        let layer = |material: &Material, role| Layer {
            material: material.clone(),
            thickness: 200e-9,
            role,
        };
        Stack::new(
            vec![
                layer(&metal, Role::Electrode),
                layer(&piezo, Role::Piezo),
                layer(&metal, Role::Electrode),
            ],
            1e-9,
            0.0,
            Boundaries::default(),
        )
        .unwrap()
    }

    fn partition(eta: f64) -> EnergyPartition {
        // Metal energy split unevenly between the two electrodes.
        let metal = 1.0 - eta;
        EnergyPartition {
            layer_energy: vec![0.3 * metal, eta, 0.7 * metal],
            total: 1.0,
            eta,
        }
    }

    #[test]
    fn qm_endpoints_and_midpoint() {
        let stack = two_bucket_stack(2000.0, 200.0);
        assert_eq!(qm_from_partition(&partition(1.0), &stack).unwrap(), 2000.0);
        assert_eq!(qm_from_partition(&partition(0.0), &stack).unwrap(), 200.0);
        let mid = qm_from_partition(&partition(0.5), &stack).unwrap();
        let expected = 1.0 / (0.5 / 2000.0 + 0.5 / 200.0);
        assert!((mid - expected).abs() <= 1e-12 * expected);
        assert!((mid - 363.636_363_636_363_6).abs() < 1e-9);
    }

    #[test]
    fn qm_rejects_empty_partition() {
        let stack = two_bucket_stack(2000.0, 200.0);
        let zero = EnergyPartition {
            layer_energy: vec![0.0; 3],
            total: 0.0,
            eta: 0.0,
        };
        assert_eq!(qm_from_partition(&zero, &stack), Err(ModeError::ZeroEnergy));
    }

    #[test]
    fn keff2_separation_arithmetic() {
        let k = keff2(12.8e9, 13.2e9, Keff2Definition::Separation).unwrap();
        let expected = 1.0 - (12.8f64 / 13.2).powi(2);
        assert!((k - expected).abs() < 1e-15);
        assert!((k - 0.059_687).abs() < 1e-6);
    }

    #[test]
    fn keff2_ieee_reference_value() {
        // Evaluated with 50-digit arithmetic (mpmath):
        // (pi/2)*(12.8/13.2)*tan((pi/2)*(0.4/13.2))
        let k = keff2(12.8e9, 13.2e9, Keff2Definition::Ieee).unwrap();
        assert!((k - IEEE_12_8_13_2).abs() < 1e-15, "{k:.17}");
        let sep = keff2(12.8e9, 13.2e9, Keff2Definition::Separation).unwrap();
        assert!(k < sep * PI * PI / 8.0);
    }

    const IEEE_12_8_13_2: f64 = 0.072_558_789_198_348_74;

    #[test]
    fn keff2_degenerate_limit() {
        for def in [Keff2Definition::Separation, Keff2Definition::Ieee, Keff2Definition::Approx] {
            let k = keff2(1e9, 1e9 * (1.0 + 1e-12), def).unwrap();
            assert!(k < 1e-11);
            assert!(keff2(1e9, 1e9, def).is_err());
            assert!(keff2(2e9, 1e9, def).is_err());
        }
    }

    #[test]
    fn estimates() {
        assert!((estimate_frequency(1, 10_000.0, 500e-9) - 10e9).abs() < 1e-3);
        assert!((estimate_frequency(2, 8450.0, 650e-9) - 13e9).abs() < 1e-3);
        let t = estimate_thickness(estimate_frequency(3, 9876.5, 321e-9), 3, 9876.5);
        assert!((t - 321e-9).abs() <= 1e-15 * 321e-9);
    }

    #[test]
    fn golden_section_finds_parabola_peak() {
        let x = golden_max(0.0, 10.0, 1e-12, |x| Ok::<_, ()>(-(x - 3.3) * (x - 3.3))).unwrap();
        assert!((x - 3.3).abs() < 1e-6);
    }

    #[test]
    fn definition_parses() {
        assert_eq!("IEEE".parse::<Keff2Definition>().unwrap(), Keff2Definition::Ieee);
        assert!("other".parse::<Keff2Definition>().is_err());
    }
}

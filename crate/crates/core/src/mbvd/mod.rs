//! Measurement pipeline: Touchstone ingestion, S to Y conversion and
//! modified Butterworth-Van Dyke (mBVD) fitting.
//!
//! The mBVD circuit is a motional branch `rm + lm + cm` in parallel with a
//! static branch `r0 + c0`, both behind a series resistance `rs`.

mod fit;
mod touchstone;

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use num_complex::Complex64;
use thiserror::Error;

use crate::acoustic1d::{AdmittanceCurve, Provenance};
use crate::units::fmt17;

pub use fit::{fit_mbvd, initial_guess, FitOptions, FitReport};
pub use touchstone::{emit_touchstone, parse_touchstone, DataFormat, Matrix2, TouchstoneData, TouchstoneError};

const J: Complex64 = Complex64::new(0.0, 1.0);
const TAU: f64 = 2.0 * std::f64::consts::PI;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MbvdError {
    #[error(transparent)]
    Touchstone(#[from] TouchstoneError),
    #[error("singular S to Y conversion at {frequency} Hz")]
    SingularConversion { frequency: f64 },
    #[error("no conductance peak inside the fitted band")]
    NoPeak,
    #[error("need at least {required} points inside the fitted band, got {got}")]
    TooFewPoints { required: usize, got: usize },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("unknown {kind} `{value}`")]
    Unknown { kind: &'static str, value: String },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MbvdParams {
    /// Ω. `f64::INFINITY` disables the motional branch.
    pub rm: f64,
    /// H.
    pub lm: f64,
    /// F.
    pub cm: f64,
    /// F.
    pub c0: f64,
    /// Ω, in series with `c0`.
    pub r0: f64,
    /// Ω, series electrode resistance.
    pub rs: f64,
}

impl MbvdParams {
    pub fn validate(&self) -> Result<(), MbvdError> {
        let fields = [
            ("rm", self.rm),
            ("lm", self.lm),
            ("cm", self.cm),
            ("c0", self.c0),
            ("r0", self.r0),
            ("rs", self.rs),
        ];
        for (name, v) in fields {
            if v.is_nan() || v < 0.0 || (name != "rm" && !v.is_finite()) {
                return Err(MbvdError::InvalidParams(format!("{name} = {v}")));
            }
        }
        for (name, v) in [("lm", self.lm), ("cm", self.cm), ("c0", self.c0)] {
            if v <= 0.0 {
                return Err(MbvdError::InvalidParams(format!("{name} must be positive")));
            }
        }
        Ok(())
    }

    /// Same static branch with the motional branch removed.
    pub fn without_motional(self) -> Self {
        Self {
            rm: f64::INFINITY,
            ..self
        }
    }

    /// Circuit whose [`report`] gives the requested series resonance, motional
    /// Q and coupling, for a given static branch and series resistance.
    pub fn from_targets(
        fs: f64,
        qs: f64,
        keff2: f64,
        c0: f64,
        r0: f64,
        rs: f64,
        formula: Keff2Formula,
    ) -> Result<Self, MbvdError> {
        let k = keff2 * 8.0 / (std::f64::consts::PI * std::f64::consts::PI);
        let ratio = match formula {
            Keff2Formula::Ratio => k,
            Keff2Formula::Loaded => k / (1.0 - k),
        };
        let cm = ratio * c0;
        let lm = 1.0 / ((TAU * fs).powi(2) * cm);
        let rm = TAU * fs * lm / qs;
        let p = Self { rm, lm, cm, c0, r0, rs };
        p.validate()?;
        Ok(p)
    }

    /// Scaling covariance of the circuit: admittance `α·Y` corresponds to
    /// these parameters.
    pub fn scaled_admittance(self, alpha: f64) -> Self {
        Self {
            rm: self.rm / alpha,
            lm: self.lm / alpha,
            cm: self.cm * alpha,
            c0: self.c0 * alpha,
            r0: self.r0 / alpha,
            rs: self.rs / alpha,
        }
    }
}

/// Admittance of the circuit at `f` Hz.
pub fn mbvd_admittance(p: &MbvdParams, f: f64) -> Complex64 {
    let w = TAU * f;
    let y_motional = if p.rm.is_infinite() {
        Complex64::new(0.0, 0.0)
    } else {
        1.0 / (p.rm + J * w * p.lm + 1.0 / (J * w * p.cm))
    };
    let y_static = 1.0 / (p.r0 + 1.0 / (J * w * p.c0));
    1.0 / (p.rs + 1.0 / (y_motional + y_static))
}

/// Sampled circuit admittance.
pub fn mbvd_curve(p: &MbvdParams, frequencies: &[f64]) -> Result<AdmittanceCurve, MbvdError> {
    let y = frequencies.iter().map(|&f| mbvd_admittance(p, f)).collect();
    AdmittanceCurve::new(frequencies.to_vec(), y, Provenance::Measured)
        .map_err(|e| MbvdError::InvalidParams(e.to_string()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Keff2Formula {
    /// `(π²/8)·cm/c0`.
    #[default]
    Ratio,
    /// `(π²/8)·(cm/c0)/(1 + cm/c0)`.
    Loaded,
}

impl fmt::Display for Keff2Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Keff2Formula::Ratio => "ratio",
            Keff2Formula::Loaded => "loaded",
        })
    }
}

impl FromStr for Keff2Formula {
    type Err = MbvdError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ratio" => Ok(Keff2Formula::Ratio),
            "loaded" => Ok(Keff2Formula::Loaded),
            _ => Err(MbvdError::Unknown {
                kind: "keff2 formula",
                value: s.to_string(),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    /// Hz.
    pub fs: f64,
    pub qs: f64,
    pub keff2: f64,
    pub fom: f64,
}

/// Series resonance, motional Q, coupling and figure of merit of a circuit.
pub fn report(p: &MbvdParams, formula: Keff2Formula) -> Metrics {
    let fs = 1.0 / (TAU * (p.lm * p.cm).sqrt());
    let qs = TAU * fs * p.lm / p.rm;
    let ratio = p.cm / p.c0;
    let pi2_8 = std::f64::consts::PI * std::f64::consts::PI / 8.0;
    let keff2 = match formula {
        Keff2Formula::Ratio => pi2_8 * ratio,
        Keff2Formula::Loaded => pi2_8 * ratio / (1.0 + ratio),
    };
    Metrics {
        fs,
        qs,
        keff2,
        fom: keff2 * qs,
    }
}

/// Two-port Y parameters from S parameters, per point.
pub fn s_to_y(data: &TouchstoneData) -> Result<Vec<Matrix2>, MbvdError> {
    let one = Complex64::new(1.0, 0.0);
    let z0 = data.z0;
    data.frequencies
        .iter()
        .zip(&data.s)
        .map(|(&f, s)| {
            let (s11, s12, s21, s22) = (s[0][0], s[0][1], s[1][0], s[1][1]);
            let delta = (one + s11) * (one + s22) - s12 * s21;
            if !(delta.norm() >= 1e-30) {
                return Err(MbvdError::SingularConversion { frequency: f });
            }
            let dz = delta * z0;
            Ok([
                [
                    ((one - s11) * (one + s22) + s12 * s21) / dz,
                    -2.0 * s12 / dz,
                ],
                [
                    -2.0 * s21 / dz,
                    ((one + s11) * (one - s22) + s12 * s21) / dz,
                ],
            ])
        })
        .collect()
}

/// How the resonator sits in the measured two-port.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Topology {
    /// Device in series between the ports; device admittance is `-Y12`.
    #[default]
    SeriesThrough,
    /// Device from port 1 to ground; device admittance is `Y11`.
    Shunt,
}

impl fmt::Display for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Topology::SeriesThrough => "series",
            Topology::Shunt => "shunt",
        })
    }
}

impl FromStr for Topology {
    type Err = MbvdError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "series" | "series-through" => Ok(Topology::SeriesThrough),
            "shunt" => Ok(Topology::Shunt),
            _ => Err(MbvdError::Unknown {
                kind: "topology",
                value: s.to_string(),
            }),
        }
    }
}

impl Topology {
    pub fn device_admittance(self, y: &Matrix2) -> Complex64 {
        match self {
            Topology::SeriesThrough => -y[0][1],
            Topology::Shunt => y[0][0],
        }
    }

    /// S matrix of a device with admittance `y` placed in this topology.
    /// The shunt topology leaves port 2 matched and isolated.
    pub fn s_matrix(self, y: Complex64, z0: f64) -> Matrix2 {
        let zero = Complex64::new(0.0, 0.0);
        match self {
            Topology::SeriesThrough => {
                let z = 1.0 / y;
                let den = z + 2.0 * z0;
                let t = 2.0 * z0 / den;
                let r = z / den;
                [[r, t], [t, r]]
            }
            Topology::Shunt => {
                let zy = y * z0;
                [[(1.0 - zy) / (1.0 + zy), zero], [zero, zero]]
            }
        }
    }
}

/// Device admittance curve extracted from two-port data.
pub fn device_curve(data: &TouchstoneData, topology: Topology) -> Result<AdmittanceCurve, MbvdError> {
    let y = s_to_y(data)?
        .iter()
        .map(|m| topology.device_admittance(m))
        .collect();
    AdmittanceCurve::new(data.frequencies.clone(), y, Provenance::Measured)
        .map_err(|e| MbvdError::InvalidParams(e.to_string()))
}

/// Two-port data for a device admittance curve in the given topology.
pub fn synthesize_two_port(
    curve: &AdmittanceCurve,
    topology: Topology,
    z0: f64,
    unit: crate::units::FrequencyUnit,
    format: DataFormat,
) -> TouchstoneData {
    TouchstoneData {
        frequencies: curve.frequencies().to_vec(),
        s: curve.y().iter().map(|&y| topology.s_matrix(y, z0)).collect(),
        z0,
        unit,
        format,
    }
}

/// Circuit behind the bundled `r14c5_like.s2p` fixture: a 25 µm diameter
/// device (static capacitance of 250 nm ScAlN with the bundled permittivity)
/// whose report gives `fs = 13.3 GHz`, `qs = 210` and `keff2 = 5.2 %`.
pub fn r14c5_like_params() -> MbvdParams {
    let radius = 12.5e-6;
    let c0 = 1.41667e-10 * std::f64::consts::PI * radius * radius / 250e-9;
    MbvdParams::from_targets(13.3e9, 210.0, 0.052, c0, 0.8, 1.5, Keff2Formula::Ratio)
        .expect("fixture targets are valid")
}

/// Series-through two-port data of [`r14c5_like_params`] on 12 to 14.5 GHz
/// in 1 MHz steps, 50 Ω, written as GHz / RI.
pub fn r14c5_like_fixture() -> TouchstoneData {
    let p = r14c5_like_params();
    let frequencies: Vec<f64> = (0..=2500).map(|i| 12e9 + 1e6 * i as f64).collect();
    let curve = mbvd_curve(&p, &frequencies).expect("grid is increasing");
    synthesize_two_port(
        &curve,
        Topology::SeriesThrough,
        50.0,
        crate::units::FrequencyUnit::GHz,
        DataFormat::Ri,
    )
}

/// CSV header of [`write_model_csv`].
pub const MODEL_CSV_HEADER: &str = "freq_hz,re_y_data_s,im_y_data_s,re_y_model_s,im_y_model_s";

/// Data and fitted model admittance side by side.
pub fn write_model_csv<W: Write>(curve: &AdmittanceCurve, params: &MbvdParams, mut out: W) -> io::Result<()> {
    writeln!(out, "{MODEL_CSV_HEADER}")?;
    for (&f, y) in curve.frequencies().iter().zip(curve.y()) {
        let m = mbvd_admittance(params, f);
        writeln!(
            out,
            "{},{},{},{},{}",
            fmt17(f),
            fmt17(y.re),
            fmt17(y.im),
            fmt17(m.re),
            fmt17(m.im)
        )?;
    }
    Ok(())
}

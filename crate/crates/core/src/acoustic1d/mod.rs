//! One-dimensional thickness-extensional model of a layered piezoelectric
//! stack.
//!
//! Two independent routes compute the electrical admittance:
//!
//! * [`admittance_bvp`] assembles and solves the piecewise boundary value
//!   problem (two travelling-wave amplitudes per layer plus the electric
//!   displacement). It is the production path and also yields the field
//!   profile used for the strain-energy partition.
//! * [`admittance_mason`] evaluates the closed-form loaded-plate impedance
//!   after folding the outer layers into acoustic input impedances.
//!
//! Both use the `e^{+jωt}` harmonic convention.

pub(crate) mod bvp;
mod energy;
mod linalg;
pub(crate) mod mason;

use std::fmt;
use std::io::{self, BufRead, Write};

use num_complex::Complex64;
use thiserror::Error;

use crate::materials::Stack;
use crate::units::fmt17;

pub use bvp::{admittance_bvp, field_profile, FieldProfile, LayerSamples, WaveAmplitudes};
pub use energy::{strain_energy, EnergyPartition};
pub use mason::admittance_mason;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("frequency must be positive and finite, got {0}")]
    InvalidFrequency(f64),
    #[error("singular system at {frequency} Hz (lossless resonance)")]
    Singular { frequency: f64 },
    #[error("no acoustic excitation at this frequency ({frequency} Hz)")]
    NoExcitation { frequency: f64 },
    #[error("invalid frequency grid: {0}")]
    InvalidGrid(String),
}

pub(crate) fn check_frequency(f: f64) -> Result<f64, SolveError> {
    if f.is_finite() && f > 0.0 {
        Ok(2.0 * std::f64::consts::PI * f)
    } else {
        Err(SolveError::InvalidFrequency(f))
    }
}

/// Adds the lumped series resistance in front of the device admittance.
pub(crate) fn with_series_resistance(y: Complex64, rs: f64) -> Complex64 {
    if rs == 0.0 {
        y
    } else {
        1.0 / (rs + 1.0 / y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spacing {
    Linear,
    Logarithmic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyGrid {
    f_min: f64,
    f_max: f64,
    n_points: usize,
    spacing: Spacing,
}

impl FrequencyGrid {
    pub fn new(f_min: f64, f_max: f64, n_points: usize, spacing: Spacing) -> Result<Self, SolveError> {
        if !(f_min.is_finite() && f_max.is_finite() && 0.0 < f_min && f_min < f_max) {
            return Err(SolveError::InvalidGrid(format!(
                "need 0 < f_min < f_max, got {f_min} .. {f_max}"
            )));
        }
        if n_points < 2 {
            return Err(SolveError::InvalidGrid(format!(
                "need at least 2 points, got {n_points}"
            )));
        }
        Ok(Self {
            f_min,
            f_max,
            n_points,
            spacing,
        })
    }

    pub fn linear(f_min: f64, f_max: f64, n_points: usize) -> Result<Self, SolveError> {
        Self::new(f_min, f_max, n_points, Spacing::Linear)
    }

    pub fn f_min(&self) -> f64 {
        self.f_min
    }

    pub fn f_max(&self) -> f64 {
        self.f_max
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn spacing(&self) -> Spacing {
        self.spacing
    }

    pub fn frequencies(&self) -> Vec<f64> {
        let last = (self.n_points - 1) as f64;
        (0..self.n_points)
            .map(|i| {
                if i == 0 {
                    return self.f_min;
                }
                if i == self.n_points - 1 {
                    return self.f_max;
                }
                let s = i as f64 / last;
                match self.spacing {
                    Spacing::Linear => self.f_min + (self.f_max - self.f_min) * s,
                    Spacing::Logarithmic => {
                        (self.f_min.ln() + (self.f_max.ln() - self.f_min.ln()) * s).exp()
                    }
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    SimulatedBvp,
    SimulatedMason,
    Measured,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::SimulatedBvp => "simulated-bvp",
            Provenance::SimulatedMason => "simulated-mason",
            Provenance::Measured => "measured",
        })
    }
}

/// Complex admittance samples on a strictly increasing frequency axis.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmittanceCurve {
    frequencies: Vec<f64>,
    y: Vec<Complex64>,
    provenance: Provenance,
}

impl AdmittanceCurve {
    pub fn new(
        frequencies: Vec<f64>,
        y: Vec<Complex64>,
        provenance: Provenance,
    ) -> Result<Self, SolveError> {
        if frequencies.len() != y.len() {
            return Err(SolveError::InvalidGrid(format!(
                "{} frequencies but {} admittance samples",
                frequencies.len(),
                y.len()
            )));
        }
        if frequencies.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(SolveError::InvalidGrid(
                "frequencies must be strictly increasing".into(),
            ));
        }
        Ok(Self {
            frequencies,
            y,
            provenance,
        })
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn y(&self) -> &[Complex64] {
        &self.y
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn len(&self) -> usize {
        self.frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies.is_empty()
    }

    /// Sub-curve restricted to `f_lo <= f <= f_hi`.
    pub fn restrict(&self, f_lo: f64, f_hi: f64) -> Self {
        let (frequencies, y) = self
            .frequencies
            .iter()
            .zip(&self.y)
            .filter(|(f, _)| (f_lo..=f_hi).contains(*f))
            .map(|(f, y)| (*f, *y))
            .unzip();
        Self {
            frequencies,
            y,
            provenance: self.provenance,
        }
    }

    /// CSV with header `freq_hz,re_y_s,im_y_s` and 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "freq_hz,re_y_s,im_y_s")?;
        for (f, y) in self.frequencies.iter().zip(&self.y) {
            writeln!(out, "{},{},{}", fmt17(*f), fmt17(y.re), fmt17(y.im))?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R, provenance: Provenance) -> io::Result<Self> {
        let bad = |msg: String| io::Error::new(io::ErrorKind::InvalidData, msg);
        let mut lines = input.lines();
        match lines.next().transpose()? {
            Some(h) if h.trim() == "freq_hz,re_y_s,im_y_s" => {}
            other => return Err(bad(format!("unexpected header {other:?}"))),
        }
        let mut frequencies = Vec::new();
        let mut y = Vec::new();
        for (i, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<f64> = line
                .split(',')
                .map(|c| c.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|e| bad(format!("line {}: {e}", i + 2)))?;
            if cols.len() != 3 {
                return Err(bad(format!("line {}: expected 3 columns", i + 2)));
            }
            frequencies.push(cols[0]);
            y.push(Complex64::new(cols[1], cols[2]));
        }
        Self::new(frequencies, y, provenance).map_err(|e| bad(e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Backend {
    Bvp,
    Mason,
}

impl Backend {
    pub fn admittance(self, stack: &Stack, f: f64) -> Result<Complex64, SolveError> {
        match self {
            Backend::Bvp => admittance_bvp(stack, f),
            Backend::Mason => admittance_mason(stack, f),
        }
    }

    fn provenance(self) -> Provenance {
        match self {
            Backend::Bvp => Provenance::SimulatedBvp,
            Backend::Mason => Provenance::SimulatedMason,
        }
    }
}

/// Evaluates the selected backend at every grid frequency.
pub fn spectrum(
    stack: &Stack,
    grid: &FrequencyGrid,
    backend: Backend,
) -> Result<AdmittanceCurve, SolveError> {
    let frequencies = grid.frequencies();
    let y = frequencies
        .iter()
        .map(|&f| backend.admittance(stack, f))
        .collect::<Result<Vec<_>, _>>()?;
    AdmittanceCurve::new(frequencies, y, backend.provenance())
}

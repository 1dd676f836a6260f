use num_complex::Complex64;

use super::linalg;
use super::{check_frequency, with_series_resistance, SolveError};
use crate::materials::{derive_constants, Boundary, DerivedConstants, Stack};

const J: Complex64 = Complex64::new(0.0, 1.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Samples per layer in a [`FieldProfile`], both layer faces included.
pub const SAMPLES_PER_LAYER: usize = 64;

/// Amplitudes of `u(z) = a·e^{-jkz} + b·e^{+jkz}` in layer-local coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveAmplitudes {
    pub a: Complex64,
    pub b: Complex64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerSamples {
    /// Global coordinate of the layer's bottom face, m.
    pub z_offset: f64,
    /// Global sample positions, m.
    pub z: Vec<f64>,
    /// Displacement, m.
    pub displacement: Vec<Complex64>,
    /// Stress, Pa.
    pub stress: Vec<Complex64>,
}

/// Through-thickness solution for a 1 V drive.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldProfile {
    pub frequency: f64,
    pub voltage: f64,
    /// Electric displacement in the piezo layer, C/m².
    pub displacement_field: Complex64,
    pub amplitudes: Vec<WaveAmplitudes>,
    pub wavenumbers: Vec<Complex64>,
    pub layers: Vec<LayerSamples>,
    constants: DerivedConstants,
}

impl FieldProfile {
    pub fn constants(&self) -> &DerivedConstants {
        &self.constants
    }

    pub fn displacement_at(&self, layer: usize, z_local: f64) -> Complex64 {
        let WaveAmplitudes { a, b } = self.amplitudes[layer];
        let k = self.wavenumbers[layer];
        a * (-J * k * z_local).exp() + b * (J * k * z_local).exp()
    }

    pub fn strain_at(&self, layer: usize, z_local: f64) -> Complex64 {
        let WaveAmplitudes { a, b } = self.amplitudes[layer];
        let k = self.wavenumbers[layer];
        J * k * (-a * (-J * k * z_local).exp() + b * (J * k * z_local).exp())
    }

    pub fn stress_at(&self, layer: usize, z_local: f64) -> Complex64 {
        let c = &self.constants;
        let mut t = c.layers[layer].stiffness * self.strain_at(layer, z_local);
        if layer == c.piezo_index {
            t -= c.h33 * self.displacement_field;
        }
        t
    }

    pub fn peak_stress(&self) -> f64 {
        self.layers
            .iter()
            .flat_map(|l| l.stress.iter())
            .map(|t| t.norm())
            .fold(0.0, f64::max)
    }
}

struct Solution {
    amplitudes: Vec<WaveAmplitudes>,
    wavenumbers: Vec<Complex64>,
    d: Complex64,
}

/// Assembles and solves the `(2L + 1)`-unknown system for a unit drive voltage.
fn solve_bvp(c: &DerivedConstants, frequency: f64) -> Result<Solution, SolveError> {
    let omega = check_frequency(frequency)?;
    let n_layers = c.layers.len();
    let n = 2 * n_layers + 1;
    let d_col = 2 * n_layers;
    let mut a = vec![ZERO; n * n];
    let mut rhs = vec![ZERO; n];
    let wavenumbers: Vec<Complex64> = c.layers.iter().map(|l| l.wavenumber(omega)).collect();

    // Row helpers: coefficients of u and T at the bottom (z = 0) or top
    // (z = t) face of layer `i`.
    let face = |i: usize, top: bool| -> ([Complex64; 2], [Complex64; 2], Complex64) {
        let k = wavenumbers[i];
        let (ea, eb) = if top {
            let t = c.layers[i].thickness;
            ((-J * k * t).exp(), (J * k * t).exp())
        } else {
            (Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0))
        };
        let stiff = c.layers[i].stiffness;
        let u = [ea, eb];
        let t = [-J * k * stiff * ea, J * k * stiff * eb];
        let t_d = if i == c.piezo_index {
            Complex64::new(-c.h33, 0.0)
        } else {
            ZERO
        };
        (u, t, t_d)
    };

    let mut row = 0;
    let put_boundary = |a: &mut Vec<Complex64>, row: usize, i: usize, top: bool, bc: Boundary| {
        let (u, t, t_d) = face(i, top);
        let coeffs = match bc {
            Boundary::Free => t,
            Boundary::Rigid => u,
        };
        a[row * n + 2 * i] = coeffs[0];
        a[row * n + 2 * i + 1] = coeffs[1];
        if bc == Boundary::Free {
            a[row * n + d_col] = t_d;
        }
    };

    put_boundary(&mut a, row, 0, false, c.boundary.bottom);
    row += 1;
    for i in 0..n_layers - 1 {
        let (u_lo, t_lo, td_lo) = face(i, true);
        let (u_hi, t_hi, td_hi) = face(i + 1, false);
        a[row * n + 2 * i] = u_lo[0];
        a[row * n + 2 * i + 1] = u_lo[1];
        a[row * n + 2 * i + 2] = -u_hi[0];
        a[row * n + 2 * i + 3] = -u_hi[1];
        row += 1;
        a[row * n + 2 * i] = t_lo[0];
        a[row * n + 2 * i + 1] = t_lo[1];
        a[row * n + 2 * i + 2] = -t_hi[0];
        a[row * n + 2 * i + 3] = -t_hi[1];
        a[row * n + d_col] = td_lo - td_hi;
        row += 1;
    }
    put_boundary(&mut a, row, n_layers - 1, true, c.boundary.top);
    row += 1;

    // V = D·t/eps* − h·(u(t) − u(0)) = 1
    let p = c.piezo_index;
    let (u_top, _, _) = face(p, true);
    let (u_bot, _, _) = face(p, false);
    a[row * n + 2 * p] = -c.h33 * (u_top[0] - u_bot[0]);
    a[row * n + 2 * p + 1] = -c.h33 * (u_top[1] - u_bot[1]);
    a[row * n + d_col] = c.piezo().thickness / c.eps_complex;
    rhs[row] = Complex64::new(1.0, 0.0);

    let x = linalg::solve(a, rhs).ok_or(SolveError::Singular { frequency })?;
    let amplitudes = (0..n_layers)
        .map(|i| WaveAmplitudes {
            a: x[2 * i],
            b: x[2 * i + 1],
        })
        .collect();
    Ok(Solution {
        amplitudes,
        wavenumbers,
        d: x[d_col],
    })
}

/// Admittance from the boundary value problem, including the stack's series
/// resistance.
pub fn admittance_bvp(stack: &Stack, frequency: f64) -> Result<Complex64, SolveError> {
    let c = derive_constants(stack);
    admittance_bvp_with(&c, frequency)
}

pub(crate) fn admittance_bvp_with(c: &DerivedConstants, frequency: f64) -> Result<Complex64, SolveError> {
    let sol = solve_bvp(c, frequency)?;
    let omega = 2.0 * std::f64::consts::PI * frequency;
    let y = J * omega * sol.d * c.area;
    Ok(with_series_resistance(y, c.rs_electrical))
}

/// Displacement and stress through the stack for a 1 V drive.
pub fn field_profile(stack: &Stack, frequency: f64) -> Result<FieldProfile, SolveError> {
    let constants = derive_constants(stack);
    field_profile_with(constants, frequency)
}

pub(crate) fn field_profile_with(
    constants: DerivedConstants,
    frequency: f64,
) -> Result<FieldProfile, SolveError> {
    let sol = solve_bvp(&constants, frequency)?;
    let mut profile = FieldProfile {
        frequency,
        voltage: 1.0,
        displacement_field: sol.d,
        amplitudes: sol.amplitudes,
        wavenumbers: sol.wavenumbers,
        layers: Vec::with_capacity(constants.layers.len()),
        constants,
    };
    let mut z_offset = 0.0;
    let mut layers = Vec::with_capacity(profile.constants.layers.len());
    for (i, layer) in profile.constants.layers.iter().enumerate() {
        let t = layer.thickness;
        let last = (SAMPLES_PER_LAYER - 1) as f64;
        let locals: Vec<f64> = (0..SAMPLES_PER_LAYER).map(|j| t * j as f64 / last).collect();
        layers.push(LayerSamples {
            z_offset,
            z: locals.iter().map(|zl| z_offset + zl).collect(),
            displacement: locals.iter().map(|&zl| profile.displacement_at(i, zl)).collect(),
            stress: locals.iter().map(|&zl| profile.stress_at(i, zl)).collect(),
        });
        z_offset += t;
    }
    profile.layers = layers;
    Ok(profile)
}

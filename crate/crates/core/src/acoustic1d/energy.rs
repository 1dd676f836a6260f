use num_complex::Complex64;

use super::{FieldProfile, SolveError};
use crate::materials::Stack;

/// Time-averaged elastic strain energy per layer and the piezo share `η`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyPartition {
    /// J, one entry per layer, bottom to top.
    pub layer_energy: Vec<f64>,
    pub total: f64,
    pub eta: f64,
}

/// `(e^x - 1)/x`, exact at `x = 0`.
fn expm1_over(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        x.exp_m1() / x
    }
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// `∫_0^t |u'(z)|² dz` for `u = a·e^{-jkz} + b·e^{jkz}`, in closed form.
///
/// With `k = k_r + j·k_i` the integrand expands to
/// `|k|²·(|a|²e^{2k_i z} + |b|²e^{-2k_i z} - 2·Re(a·b̄·e^{-2jk_r z}))`.
pub(crate) fn strain_norm_integral(a: Complex64, b: Complex64, k: Complex64, t: f64) -> f64 {
    let x = 2.0 * k.im * t;
    let y = 2.0 * k.re * t;
    let grow = t * expm1_over(x);
    let decay = t * expm1_over(-x);
    let cross = Complex64::new(sinc(y), -(0.5 * y).sin() * sinc(0.5 * y)) * t;
    k.norm_sqr() * (a.norm_sqr() * grow + b.norm_sqr() * decay - 2.0 * (a * b.conj() * cross).re)
}

/// Per-layer strain energy `U_i = (A/4)·∫ Re(c_eff)·|u'|² dz`, evaluated with
/// the analytic antiderivative of the two-wave field.
pub fn strain_energy(profile: &FieldProfile, stack: &Stack) -> Result<EnergyPartition, SolveError> {
    let c = profile.constants();
    debug_assert_eq!(c.layers.len(), stack.layers().len());
    let layer_energy: Vec<f64> = c
        .layers
        .iter()
        .zip(&profile.amplitudes)
        .zip(&profile.wavenumbers)
        .map(|((layer, amp), &k)| {
            0.25 * stack.area() * layer.c_eff * strain_norm_integral(amp.a, amp.b, k, layer.thickness)
        })
        .collect();
    let total: f64 = layer_energy.iter().sum();
    if !(total.is_finite() && total > 0.0) {
        return Err(SolveError::NoExcitation {
            frequency: profile.frequency,
        });
    }
    let eta = (layer_energy[stack.piezo_index()] / total).clamp(0.0, 1.0);
    Ok(EnergyPartition {
        layer_energy,
        total,
        eta,
    })
}

use num_complex::Complex64;

use super::{check_frequency, SolveError};
use crate::materials::{derive_constants, Boundary, DerivedConstants, LayerConstants, Stack};

const J: Complex64 = Complex64::new(0.0, 1.0);

/// Mechanical impedance seen looking into a sub-stack. A rigid wall is the
/// only way to get an unbounded value.
#[derive(Debug, Clone, Copy)]
enum Load {
    Finite(Complex64),
    Rigid,
}

/// Transmission-line transform through one layer,
/// `Z_in = Z·(Z_L cosθ + jZ sinθ)/(Z cosθ + jZ_L sinθ)`.
fn transform(layer: &LayerConstants, omega: f64, load: Load) -> Complex64 {
    let z = layer.impedance;
    let theta = omega * layer.thickness / layer.velocity;
    let (s, c) = (theta.sin(), theta.cos());
    match load {
        Load::Finite(zl) => z * (zl * c + J * z * s) / (z * c + J * zl * s),
        Load::Rigid => z * c / (J * s),
    }
}

fn outer_load<'a>(
    layers: impl Iterator<Item = &'a LayerConstants>,
    omega: f64,
    termination: Boundary,
) -> Load {
    let start = match termination {
        Boundary::Free => Load::Finite(Complex64::new(0.0, 0.0)),
        Boundary::Rigid => Load::Rigid,
    };
    layers.fold(start, |load, layer| Load::Finite(transform(layer, omega, load)))
}

/// Admittance from the closed-form loaded-plate model, including the stack's
/// series resistance.
pub fn admittance_mason(stack: &Stack, frequency: f64) -> Result<Complex64, SolveError> {
    let c = derive_constants(stack);
    admittance_mason_with(&c, frequency)
}

pub(crate) fn admittance_mason_with(
    c: &DerivedConstants,
    frequency: f64,
) -> Result<Complex64, SolveError> {
    let omega = check_frequency(frequency)?;
    let p = c.piezo_index;
    let piezo = c.piezo();
    // Outer layers are folded from the free/rigid face inwards.
    let top = outer_load(c.layers[p + 1..].iter().rev(), omega, c.boundary.top);
    let bottom = outer_load(c.layers[..p].iter(), omega, c.boundary.bottom);

    let theta = omega * piezo.thickness / piezo.velocity;
    let (s, co) = (theta.sin(), theta.cos());
    let one = Complex64::new(1.0, 0.0);
    let zp = piezo.impedance;
    // N / Dn of the loaded-plate bracket, with the rigid limits taken analytically.
    let ratio = match (top, bottom) {
        (Load::Finite(zt), Load::Finite(zb)) => {
            let (zt, zb) = (zt / zp, zb / zp);
            let num = (zt + zb) * s + J * 2.0 * (one - co);
            let den = (zt + zb) * co + J * (one + zt * zb) * s;
            if den.norm() == 0.0 {
                return Err(SolveError::Singular { frequency });
            }
            num / den
        }
        (Load::Rigid, Load::Finite(z)) | (Load::Finite(z), Load::Rigid) => {
            let z = z / zp;
            s / (co + J * z * s)
        }
        (Load::Rigid, Load::Rigid) => Complex64::new(0.0, 0.0),
    };
    let bracket = one - c.kt2_complex() / theta * ratio;
    let z_static = 1.0 / (J * omega * c.c0_complex);
    let z_e = z_static * bracket;
    if !z_e.is_finite() || z_e.norm() < 1e-13 * z_static.norm() {
        return Err(SolveError::Singular { frequency });
    }
    Ok(1.0 / (c.rs_electrical + z_e))
}

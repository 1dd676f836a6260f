//! Layer media, resonator stacks and the per-layer acoustic constants the
//! solvers consume.
//!
//! Stack files are TOML. Thicknesses are written in nanometres and stored in
//! metres; the conversion goes through the decimal exponent so a stack
//! survives `to_toml` / `load_stack` bit for bit. The few metre values with
//! no exact nanometre spelling are written as `thickness_m`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::units::{format_scaled, parse_scaled};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid `{field}`: {message}")]
    Invalid { field: String, message: String },
}

fn invalid(field: impl Into<String>, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field: field.into(),
        message: message.into(),
    }
}

/// Physical constants of one medium along the thickness (3) axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Material {
    #[serde(skip)]
    pub name: String,
    /// kg/m³
    pub density: f64,
    /// Elastic stiffness at constant electric field, Pa.
    pub c33e: f64,
    /// Piezoelectric stress constant, C/m². Zero for non-piezoelectric media.
    #[serde(default)]
    pub e33: f64,
    /// Clamped permittivity, F/m. Required when `e33 != 0`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps33s: Option<f64>,
    /// Mechanical quality factor. Ignored when `lossless` is set.
    pub q_mech: f64,
    #[serde(default)]
    pub tan_delta: f64,
    /// Treat the medium as loss free (`q_mech -> inf`). Only meant for limit studies.
    #[serde(default, skip_serializing_if = "is_false")]
    pub lossless: bool,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub citation: String,
}

fn is_false(b: &bool) -> bool {
    !*b
}

impl Material {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let field = |f: &str| format!("materials.{}.{}", self.name, f);
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.density) {
            return Err(invalid(field("density"), "must be positive"));
        }
        if !positive(self.c33e) {
            return Err(invalid(field("c33e"), "must be positive"));
        }
        if !positive(self.q_mech) {
            return Err(invalid(field("q_mech"), "must be positive"));
        }
        if !(self.tan_delta.is_finite() && self.tan_delta >= 0.0) {
            return Err(invalid(field("tan_delta"), "must be non-negative"));
        }
        if !self.e33.is_finite() {
            return Err(invalid(field("e33"), "must be finite"));
        }
        match self.eps33s {
            Some(eps) if !positive(eps) => {
                return Err(invalid(field("eps33s"), "must be positive"));
            }
            None if self.e33 != 0.0 => {
                return Err(invalid(
                    field("eps33s"),
                    "permittivity is required for a piezoelectric material",
                ));
            }
            _ => {}
        }
        Ok(())
    }

    /// Stiffened stiffness `c33E + e33²/eps33S`.
    pub fn c33d(&self) -> f64 {
        match self.eps33s {
            Some(eps) if self.e33 != 0.0 => self.c33e + self.e33 * self.e33 / eps,
            _ => self.c33e,
        }
    }

    /// Material thickness coupling `e33² / (c33D · eps33S)`.
    pub fn kt2(&self) -> f64 {
        match self.eps33s {
            Some(eps) if self.e33 != 0.0 => self.e33 * self.e33 / (self.c33d() * eps),
            _ => 0.0,
        }
    }

    /// Inverse quality factor, zero for lossless media.
    pub fn loss(&self) -> f64 {
        if self.lossless {
            0.0
        } else {
            1.0 / self.q_mech
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Piezo,
    Electrode,
    Passive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    #[default]
    Free,
    Rigid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Boundaries {
    #[serde(default)]
    pub bottom: Boundary,
    #[serde(default)]
    pub top: Boundary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub material: Material,
    /// m
    pub thickness: f64,
    pub role: Role,
}

/// Ordered layer list (bottom to top) with a lateral area; the simulated device.
#[derive(Debug, Clone, PartialEq)]
pub struct Stack {
    layers: Vec<Layer>,
    area: f64,
    rs_electrical: f64,
    boundary: Boundaries,
    piezo_index: usize,
}

impl Stack {
    pub fn new(
        layers: Vec<Layer>,
        area: f64,
        rs_electrical: f64,
        boundary: Boundaries,
    ) -> Result<Self, ConfigError> {
        if layers.is_empty() {
            return Err(invalid("layers", "at least one layer is required"));
        }
        if !(area.is_finite() && area > 0.0) {
            return Err(invalid("area_m2", "must be positive"));
        }
        if !(rs_electrical.is_finite() && rs_electrical >= 0.0) {
            return Err(invalid("rs_ohm", "must be non-negative"));
        }
        let mut piezo = None;
        for (i, layer) in layers.iter().enumerate() {
            layer.material.validate()?;
            if !(layer.thickness.is_finite() && layer.thickness > 0.0) {
                return Err(invalid(
                    format!("layers[{i}].thickness_nm"),
                    "must be positive",
                ));
            }
            if layer.role == Role::Piezo {
                if layer.material.e33 == 0.0 {
                    return Err(invalid(
                        format!("layers[{i}].role"),
                        format!("material `{}` has e33 = 0", layer.material.name),
                    ));
                }
                if piezo.replace(i).is_some() {
                    return Err(invalid("layers", "exactly one piezo layer is required"));
                }
            }
        }
        let piezo_index =
            piezo.ok_or_else(|| invalid("layers", "exactly one piezo layer is required"))?;
        Ok(Self {
            layers,
            area,
            rs_electrical,
            boundary: boundary,
            piezo_index,
        })
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn area(&self) -> f64 {
        self.area
    }

    pub fn rs_electrical(&self) -> f64 {
        self.rs_electrical
    }

    pub fn boundary(&self) -> Boundaries {
        self.boundary
    }

    pub fn piezo_index(&self) -> usize {
        self.piezo_index
    }

    pub fn piezo(&self) -> &Layer {
        &self.layers[self.piezo_index]
    }

    pub fn total_thickness(&self) -> f64 {
        self.layers.iter().map(|l| l.thickness).sum()
    }

    /// Copy with one layer thickness replaced.
    pub fn with_thickness(&self, index: usize, thickness: f64) -> Result<Self, ConfigError> {
        let mut layers = self.layers.clone();
        layers
            .get_mut(index)
            .ok_or_else(|| invalid("layers", format!("no layer at index {index}")))?
            .thickness = thickness;
        Self::new(layers, self.area, self.rs_electrical, self.boundary)
    }

    /// Copy with one layer's material replaced.
    pub fn with_material(&self, index: usize, material: Material) -> Result<Self, ConfigError> {
        let mut layers = self.layers.clone();
        layers
            .get_mut(index)
            .ok_or_else(|| invalid("layers", format!("no layer at index {index}")))?
            .material = material;
        Self::new(layers, self.area, self.rs_electrical, self.boundary)
    }

    /// Copy with every thickness multiplied by `alpha`.
    pub fn scaled(&self, alpha: f64) -> Result<Self, ConfigError> {
        let layers = self
            .layers
            .iter()
            .map(|l| Layer {
                thickness: l.thickness * alpha,
                ..l.clone()
            })
            .collect();
        Self::new(layers, self.area, self.rs_electrical, self.boundary)
    }

    pub fn with_rs(&self, rs_electrical: f64) -> Result<Self, ConfigError> {
        Self::new(self.layers.clone(), self.area, rs_electrical, self.boundary)
    }

    pub fn with_boundary(&self, boundary: Boundaries) -> Result<Self, ConfigError> {
        Self::new(self.layers.clone(), self.area, self.rs_electrical, boundary)
    }
}

// ---------------------------------------------------------------------------
// File format

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StackFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    area_m2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    diameter_um: Option<f64>,
    #[serde(default)]
    rs_ohm: f64,
    #[serde(default)]
    boundary: Boundaries,
    materials: BTreeMap<String, Material>,
    layers: Vec<LayerEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LayerEntry {
    material: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    thickness_nm: Option<f64>,
    /// Written instead of `thickness_nm` for thicknesses that have no exact
    /// nanometre spelling.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    thickness_m: Option<f64>,
    role: Role,
}

/// Metres from a nanometre value read out of a file.
fn nm_to_m(nm: f64) -> Option<f64> {
    parse_scaled(&format_scaled(nm, 0), -9)
}

/// Nanometre value that [`nm_to_m`] maps back to exactly `m`, if any.
fn m_to_nm(m: f64) -> Option<f64> {
    let guess = parse_scaled(&format_scaled(m, 9), 0).expect("formatted value parses");
    let mut below = guess;
    let mut above = guess;
    for _ in 0..16 {
        for candidate in [below, above] {
            if nm_to_m(candidate) == Some(m) {
                return Some(candidate);
            }
        }
        below = below.next_down();
        above = above.next_up();
    }
    None
}

/// Parses and validates a stack description.
pub fn load_stack(text: &str) -> Result<Stack, ConfigError> {
    let file: StackFile = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
    let area = match (file.area_m2, file.diameter_um) {
        (Some(a), None) => a,
        (None, Some(d)) => {
            if !(d.is_finite() && d > 0.0) {
                return Err(invalid("diameter_um", "must be positive"));
            }
            let radius = d * 0.5e-6;
            PI * radius * radius
        }
        (Some(_), Some(_)) => {
            return Err(invalid(
                "area_m2",
                "`area_m2` and `diameter_um` are mutually exclusive",
            ))
        }
        (None, None) => return Err(invalid("area_m2", "one of `area_m2` or `diameter_um` is required")),
    };
    let mut layers = Vec::with_capacity(file.layers.len());
    for (i, entry) in file.layers.iter().enumerate() {
        let mut material = file
            .materials
            .get(&entry.material)
            .cloned()
            .ok_or_else(|| {
                invalid(
                    format!("layers[{i}].material"),
                    format!("unknown material `{}`", entry.material),
                )
            })?;
        material.name = entry.material.clone();
        let thickness = match (entry.thickness_nm, entry.thickness_m) {
            (Some(nm), None) => nm_to_m(nm)
                .ok_or_else(|| invalid(format!("layers[{i}].thickness_nm"), "must be finite"))?,
            (None, Some(m)) => m,
            _ => {
                return Err(invalid(
                    format!("layers[{i}].thickness_nm"),
                    "exactly one of `thickness_nm` or `thickness_m` is required",
                ))
            }
        };
        layers.push(Layer {
            material,
            thickness,
            role: entry.role,
        });
    }
    Stack::new(layers, area, file.rs_ohm, file.boundary)
}

/// Serializes a stack in the format accepted by [`load_stack`].
pub fn to_toml(stack: &Stack) -> String {
    let mut materials = BTreeMap::new();
    let mut names = Vec::with_capacity(stack.layers.len());
    for (i, layer) in stack.layers.iter().enumerate() {
        // Two layers may carry different records under one name (after
        // `with_material`); give the second one a distinct key.
        let mut name = layer.material.name.clone();
        if name.is_empty() {
            name = format!("layer{i}");
        }
        match materials.get(&name) {
            Some(existing) if existing != &layer.material => name = format!("{name}#{i}"),
            _ => {}
        }
        materials.insert(name.clone(), layer.material.clone());
        names.push(name);
    }
    let file = StackFile {
        area_m2: Some(stack.area),
        diameter_um: None,
        rs_ohm: stack.rs_electrical,
        boundary: stack.boundary,
        materials,
        layers: stack
            .layers
            .iter()
            .zip(names)
            .map(|(l, material)| {
                let nm = m_to_nm(l.thickness);
                LayerEntry {
                    material,
                    thickness_nm: nm,
                    thickness_m: nm.is_none().then_some(l.thickness),
                    role: l.role,
                }
            })
            .collect(),
    };
    toml::to_string(&file).expect("stack file is always serializable")
}

// ---------------------------------------------------------------------------
// Derived constants

/// Complex acoustic constants of one layer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayerConstants {
    /// Real stiffness entering the strain energy (`c33D` for the piezo layer).
    pub c_eff: f64,
    /// `c_eff · (1 + j/Q)`
    pub stiffness: Complex64,
    /// `sqrt(stiffness / density)`, principal branch so `Im(v) >= 0`.
    pub velocity: Complex64,
    /// `density · velocity · area`
    pub impedance: Complex64,
    pub density: f64,
    pub thickness: f64,
    pub q_mech: f64,
    pub lossless: bool,
}

impl LayerConstants {
    /// Complex wavenumber at angular frequency `omega`. With the `e^{+jωt}`
    /// convention `Im(k) <= 0`, so `e^{-jkz}` decays along `+z`.
    pub fn wavenumber(&self, omega: f64) -> Complex64 {
        omega / self.velocity
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DerivedConstants {
    pub layers: Vec<LayerConstants>,
    pub piezo_index: usize,
    /// Real static capacitance `eps33S · A / t_piezo`.
    pub c0: f64,
    /// `C0 · (1 - j tanδ)`
    pub c0_complex: Complex64,
    /// Lossless material coupling `e33² / (c33D · eps33S)`.
    pub kt2_mat: f64,
    /// `e33 / eps33S`, V/m.
    pub h33: f64,
    /// `eps33S · (1 - j tanδ)`
    pub eps_complex: Complex64,
    /// `Re(v_piezo) / (2 t_piezo)`
    pub f0_piezo: f64,
    pub area: f64,
    pub rs_electrical: f64,
    pub boundary: Boundaries,
}

impl DerivedConstants {
    pub fn piezo(&self) -> &LayerConstants {
        &self.layers[self.piezo_index]
    }

    /// Coupling with complex stiffness and permittivity, `h² · eps* / c*`.
    /// Equals `kt2_mat` for loss-free media.
    pub fn kt2_complex(&self) -> Complex64 {
        self.h33 * self.h33 * self.eps_complex / self.piezo().stiffness
    }
}

pub fn derive_constants(stack: &Stack) -> DerivedConstants {
    let area = stack.area;
    let layers: Vec<LayerConstants> = stack
        .layers
        .iter()
        .enumerate()
        .map(|(i, layer)| {
            let m = &layer.material;
            let c_eff = if i == stack.piezo_index { m.c33d() } else { m.c33e };
            let stiffness = Complex64::new(c_eff, c_eff * m.loss());
            let velocity = (stiffness / m.density).sqrt();
            LayerConstants {
                c_eff,
                stiffness,
                velocity,
                impedance: velocity * (m.density * area),
                density: m.density,
                thickness: layer.thickness,
                q_mech: m.q_mech,
                lossless: m.lossless,
            }
        })
        .collect();

    let piezo = stack.piezo();
    let eps = piezo
        .material
        .eps33s
        .expect("validated piezo layer has a permittivity");
    let c0 = eps * area / piezo.thickness;
    let tan_delta = piezo.material.tan_delta;
    let f0_piezo = layers[stack.piezo_index].velocity.re / (2.0 * piezo.thickness);
    DerivedConstants {
        piezo_index: stack.piezo_index,
        c0,
        c0_complex: Complex64::new(c0, -c0 * tan_delta),
        kt2_mat: piezo.material.kt2(),
        h33: piezo.material.e33 / eps,
        eps_complex: Complex64::new(eps, -eps * tan_delta),
        f0_piezo,
        area,
        rs_electrical: stack.rs_electrical,
        boundary: stack.boundary,
        layers,
    }
}

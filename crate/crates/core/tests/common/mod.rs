#![allow(dead_code)]

use baw::materials::{load_stack, Boundaries, Boundary, Layer, Material, Role, Stack};
use rand::Rng;

pub const NOMINAL_TOML: &str = include_str!("../../data/nominal_stack.toml");
pub const FIXTURE_S2P: &str = include_str!("../../data/r14c5_like.s2p");

pub fn nominal() -> Stack {
    load_stack(NOMINAL_TOML).expect("nominal stack loads")
}

pub fn metal(name: &str, density: f64, c33e: f64, q_mech: f64) -> Material {
    Material {
        name: name.into(),
        density,
        c33e,
        e33: 0.0,
        eps33s: None,
        q_mech,
        tan_delta: 0.0,
        lossless: false,
        citation: String::new(),
    }
}

pub fn piezo(density: f64, c33e: f64, e33: f64, eps33s: f64, q_mech: f64) -> Material {
    Material {
        name: "piezo".into(),
        density,
        c33e,
        e33,
        eps33s: Some(eps33s),
        q_mech,
        tan_delta: 0.0,
        lossless: false,
        citation: String::new(),
    }
}

pub fn layer(material: Material, thickness: f64, role: Role) -> Layer {
    Layer {
        material,
        thickness,
        role,
    }
}

/// Single piezo film, free on both faces.
pub fn bare_plate(thickness: f64, q_mech: f64) -> Stack {
    let m = piezo(3560.0, 2.2e11, 2.4, 1.41667e-10, q_mech);
    Stack::new(
        vec![layer(m, thickness, Role::Piezo)],
        1e-9,
        0.0,
        Boundaries::default(),
    )
    .unwrap()
}

fn log_uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    (rng.random_range(lo.ln()..hi.ln())).exp()
}

fn random_material<R: Rng>(rng: &mut R, name: String, piezoelectric: bool) -> Material {
    let mut m = metal(
        &name,
        rng.random_range(1500.0..22000.0),
        log_uniform(rng, 5e10, 5e11),
        log_uniform(rng, 20.0, 5000.0),
    );
    if piezoelectric {
        m.e33 = rng.random_range(0.2..3.0);
        m.eps33s = Some(rng.random_range(5e-11..2e-10));
        m.tan_delta = rng.random_range(0.0..0.01);
    }
    m
}

/// Up to four layers, one piezo at a random position, random boundaries,
/// thicknesses from 20 nm to 2 µm.
pub fn random_stack<R: Rng>(rng: &mut R) -> Stack {
    let n = rng.random_range(1..=4);
    let p = rng.random_range(0..n);
    let layers = (0..n)
        .map(|i| {
            let is_piezo = i == p;
            let role = if is_piezo {
                Role::Piezo
            } else if rng.random_bool(0.5) {
                Role::Electrode
            } else {
                Role::Passive
            };
            layer(
                random_material(rng, format!("m{i}"), is_piezo),
                log_uniform(rng, 20e-9, 2e-6),
                role,
            )
        })
        .collect();
    let side = |rng: &mut R| if rng.random_bool(0.2) { Boundary::Rigid } else { Boundary::Free };
    let boundary = Boundaries {
        bottom: side(rng),
        top: side(rng),
    };
    let rs = if rng.random_bool(0.5) { 0.0 } else { rng.random_range(0.0..3.0) };
    Stack::new(layers, log_uniform(rng, 1e-10, 1e-8), rs, boundary).unwrap()
}

pub fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

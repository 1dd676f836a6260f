mod common;

use std::f64::consts::PI;

use baw::acoustic1d::{
    admittance_bvp, admittance_mason, field_profile, spectrum, strain_energy, Backend, FrequencyGrid,
};
use baw::materials::{derive_constants, Boundary};
use baw::modal::{find_modes, find_modes_with, ModeSearch};
use common::{bare_plate, nominal, random_stack, rel};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration on P_n.
fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

#[test]
fn nominal_admittance_at_13_ghz_is_pinned() {
    let stack = nominal();
    let mason = admittance_mason(&stack, 13e9).unwrap();
    let bvp = admittance_bvp(&stack, 13e9).unwrap();
    let pinned = Complex64::new(3.485_645_453_011_943e-3, 1.894_614_871_270_302e-2);
    assert!((mason - pinned).norm() / pinned.norm() < 1e-12, "{mason}");
    assert!((bvp - mason).norm() / mason.norm() < 1e-8, "{bvp} vs {mason}");
}

#[test]
fn nominal_spectrum_shows_three_tones() {
    let grid = FrequencyGrid::linear(3e9, 15e9, 4001).unwrap();
    let curve = spectrum(&nominal(), &grid, Backend::Bvp).unwrap();
    let mag: Vec<f64> = curve.y().iter().map(|y| y.norm()).collect();
    let maxima = (1..mag.len() - 1)
        .filter(|&i| mag[i] > mag[i - 1] && mag[i] >= mag[i + 1])
        .count();
    assert!(maxima >= 3, "{maxima} local maxima");
}

#[test]
fn two_point_grid_matches_single_calls() {
    let stack = nominal();
    let grid = FrequencyGrid::linear(3e9, 15e9, 2).unwrap();
    for backend in [Backend::Bvp, Backend::Mason] {
        let curve = spectrum(&stack, &grid, backend).unwrap();
        assert_eq!(curve.frequencies(), &[3e9, 15e9]);
        assert_eq!(curve.y()[0], backend.admittance(&stack, 3e9).unwrap());
        assert_eq!(curve.y()[1], backend.admittance(&stack, 15e9).unwrap());
    }
}

#[test]
fn backends_agree_over_nominal_grid() {
    let stack = nominal();
    let grid = FrequencyGrid::linear(3e9, 15e9, 4001).unwrap();
    let a = spectrum(&stack, &grid, Backend::Bvp).unwrap();
    let b = spectrum(&stack, &grid, Backend::Mason).unwrap();
    let worst = a
        .y()
        .iter()
        .zip(b.y())
        .map(|(x, y)| (x - y).norm() / y.norm())
        .fold(0.0, f64::max);
    assert!(worst < 1e-8, "{worst:e}");
}

#[test]
fn bare_plate_antiresonance_approaches_half_wave() {
    let t = 250e-9;
    let plate = bare_plate(t, 1e5);
    let m = &plate.piezo().material;
    let f0 = (m.c33d() / m.density).sqrt() / (2.0 * t);
    let grid = FrequencyGrid::linear(0.5 * f0, 1.5 * f0, 2001).unwrap();
    let modes = find_modes(&plate, &grid, 5).unwrap();
    assert_eq!(modes.len(), 1);
    assert!(rel(modes[0].fp, f0) < 1e-6, "{} vs {f0}", modes[0].fp);
    assert_eq!(modes[0].eta, 1.0);
}

#[test]
fn bare_plate_series_resonance_solves_transcendental_equation() {
    let t = 250e-9;
    let plate = bare_plate(t, 1e5);
    let m = &plate.piezo().material;
    let f0 = (m.c33d() / m.density).sqrt() / (2.0 * t);
    let grid = FrequencyGrid::linear(0.5 * f0, 1.5 * f0, 2001).unwrap();
    let search = ModeSearch {
        rel_tol: 1e-12,
        ..ModeSearch::default()
    };
    let fs = find_modes_with(&plate, &grid, 1, &search).unwrap()[0].fs;
    let half_theta = 0.5 * PI * fs / f0;
    let residual = m.kt2() * half_theta.tan() / half_theta - 1.0;
    assert!(residual.abs() < 1e-9, "{residual:e}");

    // Independent root of the same equation by bisection on (π/4, π/2).
    let g = |x: f64| m.kt2() * x.tan() / x - 1.0;
    let (mut lo, mut hi) = (0.25 * PI, 0.5 * PI - 1e-12);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let fs_root = 2.0 * f0 * lo / PI;
    assert!(rel(fs, fs_root) < 1e-9, "{fs} vs {fs_root}");
}

#[test]
fn bare_plate_fundamental_field_is_a_half_wave() {
    let t = 250e-9;
    let plate = bare_plate(t, 1e5);
    let m = &plate.piezo().material;
    let f0 = (m.c33d() / m.density).sqrt() / (2.0 * t);
    let grid = FrequencyGrid::linear(0.5 * f0, 1.5 * f0, 2001).unwrap();
    let fs = find_modes(&plate, &grid, 1).unwrap()[0].fs;
    let p = field_profile(&plate, fs).unwrap();
    let scale = (0..=100)
        .map(|i| p.displacement_at(0, t * i as f64 / 100.0).norm())
        .fold(0.0, f64::max);
    for i in 0..=50 {
        let z = t * i as f64 / 100.0;
        let sum = p.displacement_at(0, z) + p.displacement_at(0, t - z);
        assert!(sum.norm() < 1e-3 * scale, "z = {z}: {sum}");
    }
    let mid = p.stress_at(0, 0.5 * t).norm();
    for i in 0..=100 {
        assert!(p.stress_at(0, t * i as f64 / 100.0).norm() <= mid * (1.0 + 1e-9));
    }
}

#[test]
fn strain_energy_matches_high_order_quadrature() {
    let stack = nominal();
    let grid = FrequencyGrid::linear(3e9, 15e9, 4001).unwrap();
    let fs = find_modes(&stack, &grid, 3).unwrap()[2].fs;
    let profile = field_profile(&stack, fs).unwrap();
    let production = strain_energy(&profile, &stack).unwrap();
    let c = derive_constants(&stack);
    let nodes = gauss_legendre(1024);
    let energy: Vec<f64> = (0..c.layers.len())
        .map(|i| {
            let t = c.layers[i].thickness;
            let integral: f64 = nodes
                .iter()
                .map(|&(x, w)| w * 0.5 * t * profile.strain_at(i, 0.5 * t * (x + 1.0)).norm_sqr())
                .sum();
            0.25 * stack.area() * c.layers[i].c_eff * integral
        })
        .collect();
    let eta = energy[stack.piezo_index()] / energy.iter().sum::<f64>();
    assert!((eta - production.eta).abs() < 1e-8, "{eta} vs {}", production.eta);
    assert!((production.eta - 0.273_371_291_415_707_8).abs() < 1e-9, "{}", production.eta);
}

#[test]
fn eta_rises_toward_one_as_electrodes_thin() {
    let base = nominal();
    let t_p = base.piezo().thickness;
    let grid = FrequencyGrid::linear(1e9, 25e9, 4001).unwrap();
    let etas: Vec<f64> = [0.2, 0.1, 0.05]
        .iter()
        .map(|&r| {
            let s = base.with_thickness(0, r * t_p).unwrap().with_thickness(2, r * t_p).unwrap();
            find_modes(&s, &grid, 1).unwrap()[0].eta
        })
        .collect();
    assert!(etas[0] < etas[1] && etas[1] < etas[2] && etas[2] < 1.0, "{etas:?}");
}

fn random_frequencies(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| (rng.random_range(0.1e9f64.ln()..40e9f64.ln())).exp()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn backends_agree_on_random_stacks(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let stack = random_stack(&mut rng);
        for f in random_frequencies(&mut rng, 1000) {
            let a = admittance_bvp(&stack, f).unwrap();
            let b = admittance_mason(&stack, f).unwrap();
            prop_assert!((a - b).norm() / b.norm() < 1e-8, "f = {f}: {a} vs {b}");
        }
    }

    #[test]
    fn lossy_stacks_are_passive(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let stack = random_stack(&mut rng);
        for f in random_frequencies(&mut rng, 200) {
            let y = admittance_bvp(&stack, f).unwrap();
            prop_assert!(y.re >= -1e-12, "f = {f}: {y}");
        }
    }

    #[test]
    fn vanishing_coupling_reduces_to_capacitor(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let stack = random_stack(&mut rng).with_rs(0.0).unwrap();
        let mut m = stack.piezo().material.clone();
        m.e33 = 1e-30;
        m.tan_delta = 0.0;
        let stack = stack.with_material(stack.piezo_index(), m).unwrap();
        let c0 = derive_constants(&stack).c0;
        for f in random_frequencies(&mut rng, 50) {
            let y = admittance_bvp(&stack, f).unwrap();
            let expected = Complex64::new(0.0, 2.0 * PI * f * c0);
            prop_assert!((y - expected).norm() / expected.norm() < 1e-12, "{y} vs {expected}");
        }
    }

    #[test]
    fn field_obeys_boundary_and_interface_conditions(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let stack = random_stack(&mut rng);
        let f = random_frequencies(&mut rng, 1)[0];
        let p = field_profile(&stack, f).unwrap();
        let layers = stack.layers();
        let n = layers.len();
        let t_scale = p.peak_stress();
        let u_scale = p.layers.iter().flat_map(|l| l.displacement.iter()).map(|u| u.norm()).fold(0.0, f64::max);
        let faces = [(stack.boundary().bottom, 0, 0.0), (stack.boundary().top, n - 1, layers[n - 1].thickness)];
        for (kind, i, z) in faces {
            match kind {
                Boundary::Free => prop_assert!(p.stress_at(i, z).norm() <= 1e-9 * t_scale),
                Boundary::Rigid => prop_assert!(p.displacement_at(i, z).norm() <= 1e-9 * u_scale),
            }
        }
        for i in 0..n - 1 {
            let t = layers[i].thickness;
            prop_assert!((p.displacement_at(i, t) - p.displacement_at(i + 1, 0.0)).norm() <= 1e-9 * u_scale);
            prop_assert!((p.stress_at(i, t) - p.stress_at(i + 1, 0.0)).norm() <= 1e-9 * t_scale);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn thickness_scaling_maps_resonances(alpha in 0.5f64..2.0) {
        let base = nominal();
        let scaled = base.scaled(alpha).unwrap();
        let search = ModeSearch { rel_tol: 1e-12, ..ModeSearch::default() };
        let grid = FrequencyGrid::linear(3e9, 15e9, 2001).unwrap();
        let scaled_grid = FrequencyGrid::linear(3e9 / alpha, 15e9 / alpha, 2001).unwrap();
        let a = find_modes_with(&base, &grid, 3, &search).unwrap();
        let b = find_modes_with(&scaled, &scaled_grid, 3, &search).unwrap();
        prop_assert_eq!(a.len(), b.len());
        for (ma, mb) in a.iter().zip(&b) {
            prop_assert!(rel(mb.fs, ma.fs / alpha) < 1e-9, "{} vs {}", mb.fs, ma.fs / alpha);
            prop_assert!((mb.eta - ma.eta).abs() < 1e-9, "{} vs {}", mb.eta, ma.eta);
        }
    }
}

use std::f64::consts::PI;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vil::norms::{lp_norm, sobolev_norm, sup_norm};
use vil::sample::{sample, sample_with, Interpolation};
use vil::spectral::{biot_savart, divergence, inverse_derivative, partial, poisson_inverse, riesz, rot, Axis};
use vil::{GridSpec, ScalarField};

/// Random band-limited mean-zero field: a few Fourier modes with random amplitudes and phases.
fn random_field(grid: GridSpec, seed: u64) -> ScalarField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let modes: Vec<(f64, f64, f64, f64)> = (0..12)
        .map(|_| {
            let k1 = rng.gen_range(-10..=10) as f64;
            let mut k2 = rng.gen_range(-10..=10) as f64;
            if k1 == 0.0 && k2 == 0.0 {
                k2 = 1.0;
            }
            (k1, k2, rng.gen_range(-1.0..1.0), rng.gen_range(0.0..2.0 * PI))
        })
        .collect();
    ScalarField::from_fn(grid, |x, y| {
        modes.iter().map(|(a, b, c, ph)| c * (a * x + b * y + ph).cos()).sum()
    })
    .project_mean_zero()
}

fn max_diff(a: &ScalarField, b: &ScalarField) -> f64 {
    a.values().iter().zip(b.values()).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

#[test]
fn riesz_diagonal_sums_to_identity() {
    let g = GridSpec::two_pi(256).unwrap();
    for seed in 0..5 {
        let w = random_field(g, seed);
        let r11 = riesz(&w, Axis::X1, Axis::X1).unwrap();
        let r22 = riesz(&w, Axis::X2, Axis::X2).unwrap();
        let sum = r11.add(&r22).unwrap();
        assert!(max_diff(&sum, &w) <= 1e-10 * w.grid_max_abs());
    }
}

#[test]
fn biot_savart_inverts_rot_and_is_solenoidal() {
    let g = GridSpec::two_pi(256).unwrap();
    for seed in 10..15 {
        let w = random_field(g, seed);
        let u = biot_savart(&w).unwrap();
        assert!(max_diff(&rot(&u), &w) <= 1e-10 * w.grid_max_abs());
        assert!(divergence(&u).grid_max_abs() <= 1e-10 * u.grid_max_norm());
    }
}

#[test]
fn operators_on_single_modes() {
    let g = GridSpec::two_pi(64).unwrap();
    let w = ScalarField::from_fn(g, |x, y| (2.0 * x).sin() * (3.0 * y).cos());
    // Δ⁻¹ sin(2x)cos(3y) = −sin(2x)cos(3y)/13
    let psi = poisson_inverse(&w).unwrap();
    let want = w.scaled(-1.0 / 13.0);
    assert!(max_diff(&psi, &want) < 1e-14);
    // ∂₁Δ⁻¹ = −2 cos(2x)cos(3y)/13
    let d1 = inverse_derivative(&w, Axis::X1).unwrap();
    let want = ScalarField::from_fn(g, |x, y| -2.0 * (2.0 * x).cos() * (3.0 * y).cos() / 13.0);
    assert!(max_diff(&d1, &want) < 1e-14);
    // R₁₂ = ∂₁∂₂Δ⁻¹: ∂₁∂₂w = −6 cos(2x)sin(3y), then Δ⁻¹ divides by −13
    let r12 = riesz(&w, Axis::X1, Axis::X2).unwrap();
    let want = ScalarField::from_fn(g, |x, y| 6.0 * (2.0 * x).cos() * (3.0 * y).sin() / 13.0);
    assert!(max_diff(&r12, &want) < 1e-14, "{}", max_diff(&r12, &want));
    let dx = partial(&w, Axis::X1);
    let want = ScalarField::from_fn(g, |x, y| 2.0 * (2.0 * x).cos() * (3.0 * y).cos());
    assert!(max_diff(&dx, &want) < 1e-12);
}

#[test]
fn mean_carrying_fields_are_rejected() {
    let g = GridSpec::two_pi(32).unwrap();
    let w = ScalarField::from_fn(g, |x, _| 1.0 + x.sin());
    assert!(biot_savart(&w).is_err());
    assert!(riesz(&w, Axis::X1, Axis::X1).is_err());
}

#[test]
fn sample_known_values() {
    let g = GridSpec::two_pi(256).unwrap();
    let f = ScalarField::from_fn(g, |x, _| x.sin());
    let v = sample(&f, &[[PI / 3.0, 0.4]])[0];
    assert!((v - (PI / 3.0).sin()).abs() < 1e-8);
    // grid nodes return the stored values
    let nodes: Vec<[f64; 2]> = [7usize, 100, 2000].iter().map(|&i| g.position(i)).collect();
    for method in [Interpolation::Fourier, Interpolation::Lagrange(8)] {
        let got = sample_with(&f, &nodes, method);
        for (k, &i) in [7usize, 100, 2000].iter().enumerate() {
            assert!((got[k] - f.values()[i]).abs() < 1e-12);
        }
    }
}

#[test]
fn norms_of_a_mode() {
    let g = GridSpec::two_pi(128).unwrap();
    let f = ScalarField::from_fn(g, |x, y| x.sin() * y.sin());
    // ‖sin x sin y‖₂² = π²
    assert!((lp_norm(&f, 2.0).unwrap() - PI).abs() < 1e-12);
    // oversampled sup sees the peak of 1
    assert!((sup_norm(&f) - 1.0).abs() < 1e-12);
    assert!(sobolev_norm(&f, 2.5).unwrap() > lp_norm(&f, 2.5).unwrap());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn lp_norm_is_homogeneous(seed in 0u64..1000, a in -5.0f64..5.0, p in 2.0f64..3.0) {
        let g = GridSpec::two_pi(32).unwrap();
        let w = random_field(g, seed);
        let lhs = lp_norm(&w.scaled(a), p).unwrap();
        let rhs = a.abs() * lp_norm(&w, p).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(1e-300));
    }

    #[test]
    fn riesz_identity_on_random_fields(seed in 0u64..10_000) {
        let g = GridSpec::two_pi(64).unwrap();
        let w = random_field(g, seed);
        let s = riesz(&w, Axis::X1, Axis::X1).unwrap().add(&riesz(&w, Axis::X2, Axis::X2).unwrap()).unwrap();
        prop_assert!(max_diff(&s, &w) <= 1e-10 * w.grid_max_abs());
    }

    #[test]
    fn riesz_is_symmetric(seed in 0u64..10_000) {
        let g = GridSpec::two_pi(32).unwrap();
        let w = random_field(g, seed);
        let a = riesz(&w, Axis::X1, Axis::X2).unwrap();
        let b = riesz(&w, Axis::X2, Axis::X1).unwrap();
        prop_assert!(max_diff(&a, &b) <= 1e-14);
    }

    #[test]
    fn fourier_sampling_is_translation_consistent(seed in 0u64..1000, x in -3.0f64..3.0, y in -3.0f64..3.0) {
        let g = GridSpec::two_pi(32).unwrap();
        let w = random_field(g, seed);
        let a = sample(&w, &[[x, y]])[0];
        let b = sample(&w, &[[x + 2.0 * PI, y - 2.0 * PI]])[0];
        prop_assert!((a - b).abs() <= 1e-10);
    }
}

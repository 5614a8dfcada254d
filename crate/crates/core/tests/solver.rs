use std::f64::consts::PI;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vil::norms::lp_norm;
use vil::snapshot::Snapshot;
use vil::solver::{evolve, step_plan, SolverConfig, SolverError};
use vil::spectral::biot_savart;
use vil::{parity_defect, GridSpec, ScalarField};

fn smooth_field(grid: GridSpec, seed: u64, kmax: i32) -> ScalarField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let modes: Vec<(f64, f64, f64, f64)> = (0..8)
        .map(|_| {
            let k1 = rng.gen_range(-kmax..=kmax) as f64;
            let k2 = rng.gen_range(1..=kmax) as f64;
            (k1, k2, rng.gen_range(-1.0..1.0), rng.gen_range(0.0..2.0 * PI))
        })
        .collect();
    ScalarField::from_fn(grid, |x, y| modes.iter().map(|(a, b, c, ph)| c * (a * x + b * y + ph).cos()).sum())
        .project_mean_zero()
}

fn max_diff(a: &ScalarField, b: &ScalarField) -> f64 {
    a.values().iter().zip(b.values()).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

fn energy(w: &ScalarField) -> f64 {
    let u = biot_savart(w).unwrap();
    lp_norm(u.u1(), 2.0).unwrap().powi(2) + lp_norm(u.u2(), 2.0).unwrap().powi(2)
}

#[test]
fn cellular_flow_is_steady() {
    // sin x sin y lies on one shell, so u·∇ω vanishes identically
    let g = GridSpec::two_pi(64).unwrap();
    let w = ScalarField::from_fn(g, |x, y| x.sin() * y.sin());
    let traj = evolve(&w, 1.0, &SolverConfig::default()).unwrap();
    assert!(traj.is_complete());
    assert!(max_diff(&traj.terminal().1, &w) < 1e-12);
    assert_eq!(traj.terminal().0, 1.0);
}

#[test]
fn rk4_is_fourth_order_in_time() {
    let g = GridSpec::two_pi(64).unwrap();
    let w = smooth_field(g, 3, 3);
    let run = |dt: f64| {
        let cfg = SolverConfig {
            dt: Some(dt),
            ..Default::default()
        };
        evolve(&w, 0.4, &cfg).unwrap().terminal().1.clone()
    };
    let reference = run(0.0025);
    let e1 = max_diff(&run(0.02), &reference);
    let e2 = max_diff(&run(0.01), &reference);
    let order = (e1 / e2).log2();
    assert!((3.5..4.6).contains(&order), "observed order {order} ({e1}, {e2})");
}

#[test]
fn invariants_are_conserved() {
    let g = GridSpec::two_pi(128).unwrap();
    let w = smooth_field(g, 11, 3);
    let traj = evolve(&w, 0.5, &SolverConfig::default()).unwrap();
    let (e0, z0, l3) = (energy(&w), lp_norm(&w, 2.0).unwrap(), lp_norm(&w, 3.0).unwrap());
    for (t, wt) in &traj.snapshots {
        assert!((energy(wt) - e0).abs() <= 1e-8 * e0, "energy at t = {t}");
        assert!((lp_norm(wt, 2.0).unwrap() - z0).abs() <= 1e-6 * z0, "enstrophy at t = {t}");
        assert!((lp_norm(wt, 3.0).unwrap() - l3).abs() <= 1e-4 * l3, "L3 at t = {t}");
        assert!(wt.mean().abs() < 1e-14);
    }
}

#[test]
fn odd_odd_symmetry_is_kept() {
    let g = GridSpec::two_pi(64).unwrap();
    let w = ScalarField::from_fn(g, |x, y| x.sin() * y.sin() + 0.5 * (2.0 * x).sin() * (3.0 * y).sin());
    let traj = evolve(&w, 0.5, &SolverConfig::default()).unwrap();
    for (_, wt) in &traj.snapshots {
        assert!(parity_defect(wt).odd() < 1e-12);
    }
}

#[test]
fn oversized_step_is_rejected() {
    let g = GridSpec::two_pi(32).unwrap();
    let w = ScalarField::from_fn(g, |x, y| x.sin() * y.sin());
    let cfg = SolverConfig {
        dt: Some(10.0),
        ..Default::default()
    };
    assert!(matches!(evolve(&w, 1.0, &cfg), Err(SolverError::Cfl { .. })));
    let cfg = SolverConfig {
        cfl: 0.0,
        ..Default::default()
    };
    assert!(matches!(evolve(&w, 1.0, &cfg), Err(SolverError::Config(_))));
}

#[test]
fn snapshots_follow_the_stride() {
    let g = GridSpec::two_pi(32).unwrap();
    let w = smooth_field(g, 1, 2);
    let cfg = SolverConfig {
        dt: Some(0.01),
        snapshot_every: 7,
        ..Default::default()
    };
    let traj = evolve(&w, 0.2, &cfg).unwrap();
    assert_eq!(traj.steps, 20);
    let times = traj.times();
    assert_eq!(times.len(), 1 + 2 + 1);
    assert!(times.windows(2).all(|p| p[0] < p[1]));
    assert_eq!(*times.last().unwrap(), 0.2);
}

#[test]
fn snapshot_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let g = GridSpec::new(3.0, 16).unwrap();
    let w = smooth_field(g, 9, 2);
    let s = Snapshot::scalar(0.125, w);
    let path = dir.path().join("w.vil");
    s.save(&path).unwrap();
    let back = Snapshot::load(&path).unwrap();
    assert_eq!(back, s);
    let bytes = std::fs::read(&path).unwrap();
    assert_eq!(&bytes[..4], b"VIL1");
    assert_eq!(bytes.len(), 4 + 4 + 8 + 8 + 1 + 16 * 16 * 8);
    let v = biot_savart(match &s.data {
        vil::snapshot::SnapshotData::Scalar(f) => f,
        _ => unreachable!(),
    })
    .unwrap();
    let sv = Snapshot::vector(1.0, v);
    assert_eq!(Snapshot::read_from(&sv.to_bytes()[..]).unwrap(), sv);
    assert!(Snapshot::read_from(&bytes[..20]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn flow_is_time_reversible(seed in 0u64..1000) {
        // −ω(T) evolved for T returns to −ω(0)
        let g = GridSpec::two_pi(32).unwrap();
        let w = smooth_field(g, seed, 2);
        let cfg = SolverConfig { dt: Some(0.005), ..Default::default() };
        let fwd = evolve(&w, 0.3, &cfg).unwrap().terminal().1.clone();
        let back = evolve(&fwd.scaled(-1.0), 0.3, &cfg).unwrap().terminal().1.scaled(-1.0);
        prop_assert!(max_diff(&back, &w) < 1e-7 * w.grid_max_abs());
    }

    #[test]
    fn step_plan_covers_the_horizon(h in 1e-4f64..10.0, dt in 1e-3f64..1.0) {
        let (steps, step) = step_plan(h, dt);
        prop_assert!(steps >= 1);
        prop_assert!(step <= dt * (1.0 + 1e-12));
        prop_assert!((steps as f64 * step - h).abs() <= 1e-12 * h);
    }
}

use proptest::prelude::*;
use vil::lagrangian::matrix::{self, Mat2};
use vil::lagrangian::seeds::{axes, uniform};
use vil::lagrangian::{
    axis_defects, duhamel_split, forward_map_from_labels, inverse_pullback, sign_preservation, AnalyticSource,
    FlowEnsemble, GridSource, KinematicSample, TrajectorySource,
};
use vil::sample::Interpolation;
use vil::solver::{evolve_with, SolverConfig};
use vil::{GridSpec, ScalarField, VectorField};

fn taylor_green(x: [f64; 2]) -> KinematicSample {
    let (s1, c1) = x[0].sin_cos();
    let (s2, c2) = x[1].sin_cos();
    KinematicSample {
        velocity: [s1 * c2, -c1 * s2],
        gradient: [[c1 * c2, -s1 * s2], [s1 * s2, -c1 * c2]],
    }
}

/// Velocity of the stream function `Σ c sin(k·x + φ)`; steady and divergence-free.
fn stream_modes(modes: &[(f64, f64, f64, f64)], x: [f64; 2]) -> KinematicSample {
    let mut s = KinematicSample::default();
    for &(k1, k2, c, ph) in modes {
        let (sn, cs) = (k1 * x[0] + k2 * x[1] + ph).sin_cos();
        s.velocity[0] += c * k2 * cs;
        s.velocity[1] -= c * k1 * cs;
        s.gradient[0][0] -= c * k1 * k2 * sn;
        s.gradient[0][1] -= c * k2 * k2 * sn;
        s.gradient[1][0] += c * k1 * k1 * sn;
        s.gradient[1][1] += c * k1 * k2 * sn;
    }
    s
}

fn close(a: &Mat2, b: &Mat2, tol: f64) -> bool {
    matrix::max_entry(&matrix::sub(a, b)) <= tol
}

#[test]
fn hyperbolic_strain_has_exact_split() {
    // u = (−x₁, x₂): Dη = diag(e^{−t}, e^t), I = t, no remainder
    let mut src = AnalyticSource::new(|_, x: [f64; 2]| KinematicSample {
        velocity: [-x[0], x[1]],
        gradient: [[-1.0, 0.0], [0.0, 1.0]],
    });
    let mut e = FlowEnsemble::new(vec![[0.5, 0.1], [-0.2, 0.3]]);
    e.evolve(&mut src, 1.5, 0.01).unwrap();
    let want = matrix::diag((-1.5f64).exp(), 1.5f64.exp());
    for (k, d) in e.jacobians().iter().enumerate() {
        assert!(close(d, &want, 1e-9));
        assert!((e.lambda_integrals()[k] - 1.5).abs() < 1e-12);
    }
    let split = duhamel_split(&e).unwrap();
    assert!(split.residual < 1e-9);
    assert!(split.b.iter().all(|b| matrix::max_entry(b) < 1e-9));
    assert!(split.det_a_defect < 1e-14);
}

#[test]
fn grid_velocity_matches_closed_form() {
    let g = GridSpec::two_pi(64).unwrap();
    let v = VectorField::from_fn(g, |x, y| {
        let s = taylor_green([x, y]);
        s.velocity
    });
    let seeds = vec![[0.3, 0.2], [-1.1, 2.0], [2.5, -0.4], [0.0, 1.0]];
    let mut a = FlowEnsemble::new(seeds.clone());
    let mut b = FlowEnsemble::new(seeds);
    a.evolve(&mut AnalyticSource::new(|_, x| taylor_green(x)), 1.0, 0.01).unwrap();
    b.evolve(&mut GridSource::from_velocity(&v), 1.0, 0.01).unwrap();
    for k in 0..a.len() {
        let (p, q) = (a.positions()[k], b.positions()[k]);
        assert!((p[0] - q[0]).abs() + (p[1] - q[1]).abs() < 1e-8, "{p:?} {q:?}");
        assert!(close(&a.jacobians()[k], &b.jacobians()[k], 1e-7));
    }
}

#[test]
fn odd_flow_keeps_axes_and_quadrants() {
    let g = GridSpec::two_pi(64).unwrap();
    let w = ScalarField::from_fn(g, |x, y| 2.0 * x.sin() * y.sin() + (2.0 * x).sin() * y.sin());
    let mut seeds = axes(6, 2.5);
    seeds.push([0.0, 0.0]);
    seeds.extend(uniform(&g, 2.5, 12));
    let mut e = FlowEnsemble::new(seeds);
    e.evolve(&mut GridSource::from_vorticity(&w).unwrap(), 0.5, 0.01).unwrap();
    let d = axis_defects(&e);
    assert_eq!(d.axis_seeds, 24);
    assert_eq!(d.origin_seeds, 1);
    assert!(d.axis1 < 1e-13 && d.axis2 < 1e-13 && d.stagnation < 1e-13, "{d:?}");
    let s = sign_preservation(&e, 1e-12);
    assert_eq!(s.fraction, 1.0);
}

#[test]
fn margin_flags_escaping_seeds() {
    let mut src = AnalyticSource::new(|_, _| KinematicSample {
        velocity: [1.0, 0.0],
        gradient: matrix::ZERO,
    });
    let mut e = FlowEnsemble::new(vec![[0.0, 0.0], [-3.0, 0.0]]).with_margin(1.0);
    assert_eq!(e.escaped_count(), 1);
    e.evolve(&mut src, 1.5, 0.1).unwrap();
    // the first seed is now at 1.5, the second came back inside but stays flagged
    assert_eq!(e.escaped_count(), 2);
    assert!(e.is_boundary_contaminated());
}

#[test]
fn solver_history_drives_a_consistent_flow() {
    let g = GridSpec::two_pi(64).unwrap();
    let w0 = ScalarField::from_fn(g, |x, y| {
        x.sin() * y.sin() + 0.6 * (2.0 * x + 0.3).cos() * (y + 1.0).sin() + 0.4 * (x - y).sin()
    })
    .project_mean_zero();
    let cfg = SolverConfig {
        snapshot_every: 5,
        ..Default::default()
    };
    let horizon = 0.6;
    let traj = evolve_with(&w0, horizon, &cfg, true, |_, _| {}).unwrap();
    let seeds = uniform(&g, 2.0, 10);
    let mut e = FlowEnsemble::new(seeds.clone());
    e.evolve(&mut TrajectorySource::new(&traj).unwrap(), horizon, traj.dt).unwrap();

    // vorticity is transported
    let wt = &traj.terminal().1;
    let pull = inverse_pullback(wt, &w0, &e, 0..seeds.len(), Interpolation::Fourier);
    assert!(pull < 1e-6, "pullback defect {pull}");

    // Dη = A (Id + J) along the computed flow
    let split = duhamel_split(&e).unwrap();
    assert!(split.residual < 1e-8 * e.max_jacobian(), "{}", split.residual);

    // the label displacement inverts the same forward map
    let labels = traj.labels.as_ref().unwrap().last().unwrap();
    let fwd = forward_map_from_labels(labels, &seeds, Interpolation::Fourier).unwrap();
    assert!(fwd.max_residual < 1e-12);
    for (p, q) in fwd.positions.iter().zip(e.positions()) {
        assert!((p[0] - q[0]).abs().max((p[1] - q[1]).abs()) < 1e-6, "{p:?} {q:?}");
    }
    for (a, b) in fwd.jacobians.iter().zip(e.jacobians()) {
        assert!(close(a, b, 1e-5));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn incompressible_flows_preserve_area(
        k in prop::collection::vec((-3i32..=3, -3i32..=3, -0.5f64..0.5, 0.0f64..6.3), 1..4),
        x in -2.0f64..2.0,
        y in -2.0f64..2.0,
    ) {
        let modes: Vec<(f64, f64, f64, f64)> =
            k.into_iter().map(|(a, b, c, ph)| (a as f64, b as f64, c, ph)).collect();
        let mut src = AnalyticSource::new(move |_, p| stream_modes(&modes, p));
        let mut e = FlowEnsemble::new(vec![[x, y]]);
        e.evolve(&mut src, 0.5, 0.005).unwrap();
        prop_assert!(e.det_defects()[0] < 1e-8);
        // the remainder integral reproduces Dη
        let split = duhamel_split(&e).unwrap();
        prop_assert!(split.residual < 1e-8 * e.max_jacobian().max(1.0));
    }
}

use proptest::prelude::*;
use vil::initial::{
    beta, check_placement, omega0, quadrupole_at, scale_piece_at, BumpProfile, ConstructionError, ConstructionParams,
    Omega0Shape, Perturbation,
};
use vil::norms::sup_norm;
use vil::{parity_defect, GridSpec};

fn preset_shape() -> Omega0Shape {
    Omega0Shape::from(&ConstructionParams::default())
}

#[test]
fn profile_normalization() {
    assert_eq!(BumpProfile::Compact.value([0.0, 0.0]), 1.0);
    assert_eq!(BumpProfile::Compact.value([0.25, 0.0]), 0.0);
    assert_eq!(BumpProfile::Plateau.value([0.7, 0.7]), 1.0);
    assert_eq!(BumpProfile::Plateau.value([2.0, 0.0]), 0.0);
    // only the ε = (1, 1) term reaches (1, 1)
    assert_eq!(quadrupole_at(BumpProfile::Compact, [1.0, 1.0]), 1.0);
    assert_eq!(quadrupole_at(BumpProfile::Compact, [-1.0, 1.0]), -1.0);
}

#[test]
fn omega0_is_odd_mean_zero_and_supported() {
    let g = GridSpec::new(8.0, 512).unwrap();
    let shape = Omega0Shape {
        scale_count: 2,
        ..preset_shape()
    };
    let w = omega0(&shape, g).unwrap();
    let par = parity_defect(&w);
    assert!(par.odd1 == 0.0 && par.odd2 == 0.0, "{par:?}");
    assert!(w.mean().abs() < 1e-15);
    // nothing outside the union of the per-scale balls
    for (i, v) in w.values().iter().enumerate() {
        if *v == 0.0 {
            continue;
        }
        let x = g.position(i);
        let inside = shape.scales().any(|k| {
            let c = 2f64.powi(-(k as i32));
            let r = 2f64.powi(-(k as i32 + 2));
            [(1.0, 1.0), (-1.0, 1.0), (1.0, -1.0), (-1.0, -1.0)]
                .iter()
                .any(|(e1, e2)| (x[0] - e1 * c).hypot(x[1] - e2 * c) < r)
        });
        assert!(inside, "value {v} at {x:?}");
    }
}

#[test]
fn dyadic_pieces_are_disjoint() {
    let g = GridSpec::new(4.0, 512).unwrap();
    let p = 2.5;
    for j in 1..=4u32 {
        for k in (j + 1)..=4 {
            let overlap = (0..g.len()).any(|i| {
                let x = g.position(i);
                scale_piece_at(j, p, x) != 0.0 && scale_piece_at(k, p, x) != 0.0
            });
            assert!(!overlap, "scales {j} and {k} overlap");
        }
    }
}

#[test]
fn omega0_amplitude_scales_as_m_squared() {
    let g = GridSpec::new(8.0, 256).unwrap();
    let s3 = Omega0Shape {
        scale_count: 1,
        ..preset_shape()
    };
    let s6 = Omega0Shape { amplitude: 6.0, ..s3 };
    let a = omega0(&s3, g).unwrap();
    let b = omega0(&s6, g).unwrap();
    for (x, y) in a.values().iter().zip(b.values()) {
        assert!((x - 4.0 * y).abs() <= 1e-15 * x.abs().max(1e-300));
    }
}

#[test]
fn unresolvable_scale_is_rejected() {
    let g = GridSpec::new(8.0, 256).unwrap();
    let shape = Omega0Shape {
        scale_count: 5,
        ..preset_shape()
    };
    assert!(matches!(omega0(&shape, g), Err(ConstructionError::Unresolvable { .. })));
}

#[test]
fn beta_value_at_center_and_sup_bound() {
    let g = GridSpec::new(8.0, 1024).unwrap();
    let pert = Perturbation {
        index: 2,
        exponent: 2.5,
        x_star: [1.0, 1.0],
    };
    let l: f64 = 6.0;
    let k = l * l;
    let amp = l.powf(-1.0 + 2.0 / 2.5) / k.sqrt();
    let x = [1.0, 1.0];
    assert!((pert.value_at(x) - amp * (k * x[0]).sin()).abs() < 1e-15);
    let b = beta(&pert, g).unwrap();
    assert!(b.grid_max_abs() <= amp * (1.0 + 1e-12));
    assert!(sup_norm(&b) <= amp * 1.01);
    // odd envelope times sin(kx₁): even in x₁, odd in x₂
    let par = parity_defect(&b);
    assert!(par.odd2 < 1e-14 && par.even1 < 1e-14, "{par:?}");
    // support inside the four balls B(x*_ε, 2/λ)
    for (i, v) in b.values().iter().enumerate() {
        if *v != 0.0 {
            let y = g.position(i);
            let d = (y[0].abs() - 1.0).hypot(y[1].abs() - 1.0);
            assert!(d < 2.0 / l, "{y:?}");
        }
    }
}

#[test]
fn placement_rejects_axis_overlap() {
    let g = GridSpec::new(8.0, 1024).unwrap();
    assert!(check_placement([0.3, 1.0], 3.0, &g).is_err());
    assert!(check_placement([1.0, 1.0], 3.0, &g).is_ok());
    assert!(check_placement([1.9, 1.0], 3.0, &g).is_err());
}

#[test]
fn params_validation_messages() {
    let g = GridSpec::new(8.0, 1024).unwrap();
    let p = ConstructionParams {
        exponent: 1.5,
        ..Default::default()
    };
    assert_eq!(p.validate(&g).unwrap_err().to_string(), "p: p must lie in (2, 3]");
    let p = ConstructionParams {
        horizon: 1.0,
        ..Default::default()
    };
    assert!(p.validate(&g).is_err());
    assert!(ConstructionParams::default().validate(&g).is_ok());
    assert!((ConstructionParams::default().horizon - 1.0 / 27.0).abs() < 1e-17);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn omega0_point_values_are_odd(x in -1.3f64..1.3, y in -1.3f64..1.3, n in 1u32..5, p in 2.01f64..3.0) {
        let s = Omega0Shape { scale_count: n, exponent: p, ..preset_shape() };
        let v = s.value_at([x, y]);
        prop_assert_eq!(s.value_at([-x, y]), -v);
        prop_assert_eq!(s.value_at([x, -y]), -v);
        // nonnegative in the open first quadrant
        if x > 0.0 && y > 0.0 {
            prop_assert!(v >= 0.0);
        }
    }

    #[test]
    fn beta_sup_bound_holds_pointwise(x in -2.0f64..2.0, y in -2.0f64..2.0, n in 1u32..8) {
        let pert = Perturbation { index: n, exponent: 2.5, x_star: [1.0, 1.0] };
        prop_assert!(pert.value_at([x, y]).abs() <= pert.amplitude() * (1.0 + 1e-14));
    }
}

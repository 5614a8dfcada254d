use std::f64::consts::PI;

use proptest::prelude::*;
use vil::diagnostics::{
    beta_bounds, comparison_linearity, cos2_constant, cos2_constant_closed_form, cos2_lower_bound, flow_structure,
    initial_norms, lambda_chain, lambda_oracle, loglog_fit, spread, DiagnosticsError, DiagnosticsReport, FlowRun,
    Params, ReportRow, Verdict,
};
use vil::initial::{BumpProfile, ConstructionParams, Omega0Shape};
use vil::lagrangian::seeds::SeedLayout;
use vil::quadrature::gauss_legendre_on;
use vil::solver::SolverConfig;
use vil::GridSpec;

fn verdict_of<'a>(rows: &'a [ReportRow], quantity: &str) -> Vec<&'a ReportRow> {
    rows.iter().filter(|r| r.quantity == quantity).collect()
}

#[test]
fn report_csv_and_summary() {
    let mut rep = DiagnosticsReport::new();
    rep.extend([
        ReportRow::new("b", "x", 1.0, "a").assert(true),
        ReportRow::new("a", "y", 2.5e-7, "a").params(&Params::new().with("n", 3)).at(0.5).assert(false),
        ReportRow::new("a", "z", f64::NAN, "a").verdict(Verdict::Skipped).note("too coarse"),
    ]);
    rep.sort();
    let s = rep.summary();
    assert_eq!((s.rows, s.holds, s.violated, s.skipped), (3, 1, 1, 1));
    assert!(!s.passed);
    assert_eq!(s.violated_checks, vec!["a:y".to_string()]);
    let mut buf = Vec::new();
    rep.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "check,params,t,quantity,measured,reference,verdict,tolerance,anchor,note"
    );
    // empty params sort first within a check
    assert_eq!(lines.next().unwrap(), "a,,,z,NaN,,skipped,,a,too coarse");
    assert_eq!(lines.next().unwrap(), "a,n=3,0.5,y,2.5e-7,,violated,,a,");
}

#[test]
fn cos2_quadrature_meets_closed_form() {
    for n in 1..=12u32 {
        let l = 3.0 * n as f64;
        for x1 in [0.1, 0.77, 1.3, 1.9] {
            let q = cos2_constant(l, x1);
            assert!((q - cos2_constant_closed_form(l, x1)).abs() < 1e-12);
            assert!(q >= cos2_lower_bound() - 1e-6);
        }
    }
    assert!((cos2_lower_bound() - 0.7404804896930609).abs() < 1e-15);
}

#[test]
fn initial_norm_constant_is_exact_in_m() {
    let g = GridSpec::new(2.0, 256).unwrap();
    let rows = initial_norms(g, 1, &[2.0, 5.0], &[1, 2], &[2.5]).unwrap();
    for r in verdict_of(&rows, "C spread over M minus 1") {
        assert_eq!(r.verdict, Verdict::Holds);
    }
    // N = 2 needs h <= 1/64
    let g = GridSpec::new(2.0, 64).unwrap();
    let rows = initial_norms(g, 1, &[2.0], &[1, 2], &[2.5]).unwrap();
    assert_eq!(rows.iter().filter(|r| r.verdict == Verdict::Skipped).count(), 1);
}

#[test]
fn beta_bounds_refuse_short_fits() {
    let g = GridSpec::new(8.0, 128).unwrap();
    match beta_bounds(g, 2.5, [1.0, 1.0], &[1, 2, 3, 4]) {
        Err(DiagnosticsError::Refused(msg)) => assert!(msg.contains("slope fit"), "{msg}"),
        other => panic!("expected refusal, got {other:?}"),
    }
}

#[test]
fn comparison_is_linear_in_amplitude() {
    let rows = comparison_linearity(&[4e-3, 2e-3]).unwrap();
    let slope = verdict_of(&rows, "slope lhs")[0];
    assert_eq!(slope.verdict, Verdict::Holds, "{slope:?}");
    assert!(comparison_linearity(&[1e-2]).is_err());
}

#[test]
fn oracle_matches_independent_tensor_rule() {
    // x₁x₂|x|⁻⁴ is homogeneous of degree −2, so every dyadic scale contributes
    // its weight times the same unit integral over the bump at (1, 1),
    // here by a composite rule of 16 panels with 16 nodes per side
    let (mut x, mut w) = (Vec::new(), Vec::new());
    for i in 0..16 {
        let lo = -0.25 + i as f64 / 32.0;
        let (xi, wi) = gauss_legendre_on(16, lo, lo + 1.0 / 32.0);
        x.extend(xi);
        w.extend(wi);
    }
    let mut unit = 0.0;
    for (a, wa) in x.iter().zip(&w) {
        for (b, wb) in x.iter().zip(&w) {
            let (y1, y2) = (1.0 + a, 1.0 + b);
            let r2 = y1 * y1 + y2 * y2;
            unit += wa * wb * y1 * y2 / (r2 * r2) * BumpProfile::Compact.value([*a, *b]);
        }
    }
    let unit = 4.0 * unit / PI;
    for n in 1..=4u32 {
        let shape = Omega0Shape {
            scale_count: n,
            ..Omega0Shape::from(&ConstructionParams::default())
        };
        let weights: f64 = shape.scales().map(|k| 2f64.powf((-1.0 + 2.0 / shape.exponent) * k as f64)).sum();
        let want = shape.prefactor() * weights * unit;
        let got = lambda_oracle(&shape);
        assert!((got - want).abs() <= 1e-8 * want, "N={n}: {got} vs {want}");
    }
}

#[test]
fn small_flow_run_has_clean_structure() {
    let params = ConstructionParams {
        scale_count: 1,
        ..Default::default()
    };
    let g = GridSpec::new(8.0, 256).unwrap();
    let layout = SeedLayout {
        uniform_per_side: 24,
        ray_nodes: 16,
        ..Default::default()
    };
    let run = FlowRun::run(&params, g, &SolverConfig::default(), &layout, params.horizon).unwrap();
    assert_eq!(run.horizon(), params.horizon);
    let rows = flow_structure(&run).unwrap();
    for q in ["stagnation defect", "axis1 defect", "axis2 defect", "max |det D eta - 1|", "Duhamel residual"] {
        let r = verdict_of(&rows, q);
        assert!(!r.is_empty(), "missing {q}");
        assert!(r.iter().all(|r| r.verdict == Verdict::Holds), "{r:?}");
    }
    let chain = lambda_chain(&run).unwrap();
    for r in verdict_of(&chain, "(quadrant - sector)/|quadrant|") {
        assert!(r.measured >= 0.0);
    }
}

proptest! {
    #[test]
    fn loglog_fit_recovers_power_laws(a in 0.01f64..10.0, s in -4.0f64..4.0) {
        let x: Vec<f64> = (1..=6).map(|n| n as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| a * v.powf(s)).collect();
        let f = loglog_fit(&x, &y).unwrap();
        prop_assert!((f.slope - s).abs() < 1e-10);
        prop_assert!((f.intercept - a.ln()).abs() < 1e-10);
        prop_assert!(f.r2 > 1.0 - 1e-12 || s.abs() < 1e-6);
    }

    #[test]
    fn spread_is_scale_free(v in prop::collection::vec(0.1f64..10.0, 1..8), c in 0.1f64..100.0) {
        let scaled: Vec<f64> = v.iter().map(|x| x * c).collect();
        prop_assert!((spread(&v) - spread(&scaled)).abs() <= 1e-12 * spread(&v));
        prop_assert!(spread(&v) >= 1.0);
    }

    #[test]
    fn cos2_never_drops_below_the_bound(n in 1u32..200, x1 in 0.01f64..4.0) {
        let l = 3.0 * n as f64;
        prop_assert!(cos2_constant(l, x1) >= cos2_lower_bound() - 1e-6);
    }
}

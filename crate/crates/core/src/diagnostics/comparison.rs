use std::f64::consts::PI;

use super::{loglog_fit, spread, DiagnosticsError, Params, ReportRow, Verdict};
use crate::lagrangian::{comparison_experiment, AnalyticSource, ComparisonPoint, KinematicSample};

const CHECK: &str = "comparison";
const ANCHOR: &str = "comparison of flows: sup (|xi - eta| + |D xi - D eta|) <~ sup (|v| + |Dv|)";

/// Amplitudes of the frozen shear perturbation.
pub const COMPARISON_AMPLITUDES: [f64; 3] = [1e-2, 5e-3, 2.5e-3];
pub const LINEAR_SLOPE_TOL: f64 = 0.15;
/// Allowed max/min of `lhs/ε` over the amplitudes.
pub const LINEAR_SPREAD: f64 = 1.2;

/// Steady Taylor–Green velocity `(sin x₁ cos x₂, −cos x₁ sin x₂)`.
pub fn taylor_green_velocity(_: f64, x: [f64; 2]) -> KinematicSample {
    let (s1, c1) = x[0].sin_cos();
    let (s2, c2) = x[1].sin_cos();
    KinematicSample {
        velocity: [s1 * c2, -c1 * s2],
        gradient: [[c1 * c2, -s1 * s2], [s1 * s2, -c1 * c2]],
    }
}

/// Unit shear `(sin x₂, 0)`; `sup(‖v‖∞ + ‖Dv‖∞) = 2`.
pub fn unit_shear(_: f64, x: [f64; 2]) -> KinematicSample {
    KinematicSample {
        velocity: [x[1].sin(), 0.0],
        gradient: [[0.0, x[1].cos()], [0.0, 0.0]],
    }
}

/// Taylor–Green base flow against the shear perturbation at the given
/// amplitudes, over `[0, 1]` from a `side × side` seed grid on the period cell.
pub fn comparison_points(amplitudes: &[f64], side: usize, dt: f64) -> Result<Vec<ComparisonPoint>, DiagnosticsError> {
    let h = 2.0 * PI / side as f64;
    let seeds: Vec<[f64; 2]> = (0..side * side)
        .map(|i| [-PI + (i % side) as f64 * h + 0.5 * h, -PI + (i / side) as f64 * h + 0.5 * h])
        .collect();
    let mut base = AnalyticSource::new(taylor_green_velocity);
    Ok(comparison_experiment(&mut base, &unit_shear, 2.0, &seeds, 1.0, dt, amplitudes)?)
}

/// Linear response of the comparison inequality: slopes of the left side and
/// of its Jacobian part against `ε`, and the spread of `lhs/ε`.
pub fn comparison_linearity(amplitudes: &[f64]) -> Result<Vec<ReportRow>, DiagnosticsError> {
    if amplitudes.len() < 2 {
        return Err(DiagnosticsError::Refused("linearity needs at least two amplitudes".into()));
    }
    let pts = comparison_points(amplitudes, 16, 0.01)?;
    let params = Params::new().with("u", "taylor_green").with("v", "eps (sin x2, 0)").with("T", 1);
    let mut rows = Vec::new();
    for c in &pts {
        let p = Params::new().with("eps", c.eps);
        rows.push(ReportRow::new(CHECK, "lhs", c.lhs, ANCHOR).params(&p).reference(c.rhs));
        rows.push(ReportRow::new(CHECK, "D xi - D eta part", c.jacobian_part, ANCHOR).params(&p));
        rows.push(ReportRow::new(CHECK, "lhs / rhs", c.ratio, ANCHOR).params(&p).note("implicit constant"));
    }
    let eps: Vec<f64> = pts.iter().map(|c| c.eps).collect();
    let slope = |q: &str, y: Vec<f64>| {
        let row = ReportRow::new(CHECK, q, f64::NAN, ANCHOR)
            .params(&params)
            .reference(1.0)
            .tolerance(LINEAR_SLOPE_TOL);
        match loglog_fit(&eps, &y) {
            Some(f) => ReportRow { measured: f.slope, ..row }
                .assert((f.slope - 1.0).abs() <= LINEAR_SLOPE_TOL)
                .note(format!("R^2 = {}", f.r2)),
            None => row.verdict(Verdict::Violated).note("no log-log fit: nonpositive values"),
        }
    };
    rows.push(slope("slope lhs", pts.iter().map(|c| c.lhs).collect()));
    rows.push(slope("slope D xi - D eta part", pts.iter().map(|c| c.jacobian_part).collect()));
    let per_eps: Vec<f64> = pts.iter().map(|c| c.lhs / c.eps).collect();
    let s = spread(&per_eps);
    rows.push(
        ReportRow::new(CHECK, "lhs/eps max/min", s, ANCHOR)
            .params(&params)
            .reference(1.0)
            .tolerance(LINEAR_SPREAD - 1.0)
            .assert(s <= LINEAR_SPREAD),
    );
    Ok(rows)
}

//! Flow-level structure checks on a tracked ensemble.

use std::ops::Range;

use serde::Serialize;

use super::ensemble::FlowEnsemble;
use super::matrix::{self, Mat2};
use super::source::{KinematicSample, VelocitySource};
use super::LagrangianError;
use crate::field::ScalarField;
use crate::norms::sup_norm;
use crate::sample::{sample_with, Interpolation};
use crate::solver::step_plan;

/// `max |ω(t, η(t, x)) − ω₀(x)| / sup|ω₀|` over the seeds in `range`.
pub fn inverse_pullback(
    w_t: &ScalarField,
    w0: &ScalarField,
    ensemble: &FlowEnsemble,
    range: Range<usize>,
    method: Interpolation,
) -> f64 {
    let scale = sup_norm(w0);
    if scale == 0.0 {
        return 0.0;
    }
    let now = sample_with(w_t, &ensemble.positions()[range.clone()], method);
    let then = sample_with(w0, &ensemble.seeds()[range], method);
    now.iter()
        .zip(&then)
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
        / scale
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SignReport {
    /// Seeds with both coordinates nonnegative.
    pub seeds: usize,
    pub preserved: usize,
    /// `preserved / seeds`, 1 when there are no such seeds.
    pub fraction: f64,
    /// Most negative coordinate reached by such a seed.
    pub worst: f64,
}

/// Fraction of closed-first-quadrant seeds whose images satisfy `η_i ≥ −tol`.
pub fn sign_preservation(ensemble: &FlowEnsemble, tol: f64) -> SignReport {
    let mut seeds = 0;
    let mut preserved = 0;
    let mut worst = 0.0f64;
    for (x, p) in ensemble.seeds().iter().zip(ensemble.positions()) {
        if x[0] >= 0.0 && x[1] >= 0.0 {
            seeds += 1;
            let m = p[0].min(p[1]);
            worst = worst.min(m);
            if m >= -tol {
                preserved += 1;
            }
        }
    }
    SignReport {
        seeds,
        preserved,
        fraction: if seeds == 0 { 1.0 } else { preserved as f64 / seeds as f64 },
        worst,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AxisDefects {
    /// `max |η₁|` over seeds with `x₁ = 0`.
    pub axis1: f64,
    /// `max |η₂|` over seeds with `x₂ = 0`.
    pub axis2: f64,
    /// `max |η(t, 0)|` over seeds at the origin.
    pub stagnation: f64,
    pub axis_seeds: usize,
    pub origin_seeds: usize,
}

pub fn axis_defects(ensemble: &FlowEnsemble) -> AxisDefects {
    let mut d = AxisDefects {
        axis1: 0.0,
        axis2: 0.0,
        stagnation: 0.0,
        axis_seeds: 0,
        origin_seeds: 0,
    };
    for (x, p) in ensemble.seeds().iter().zip(ensemble.positions()) {
        match (x[0] == 0.0, x[1] == 0.0) {
            (true, true) => {
                d.origin_seeds += 1;
                d.stagnation = d.stagnation.max(p[0].hypot(p[1]));
            }
            (true, false) => {
                d.axis_seeds += 1;
                d.axis1 = d.axis1.max(p[0].abs());
            }
            (false, true) => {
                d.axis_seeds += 1;
                d.axis2 = d.axis2.max(p[1].abs());
            }
            _ => {}
        }
    }
    d
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FdCheck {
    pub centers: usize,
    /// Largest `max|FD − Dη| / max|Dη|` over the centers.
    pub max_relative: f64,
    pub worst_center: [f64; 2],
}

/// Compare the tracked `Dη` against central differences of `η` over the
/// five-point stencils laid out by `seeds::fd_stencils` with offset `s`.
pub fn fd_jacobian_check(
    ensemble: &FlowEnsemble,
    range: Range<usize>,
    s: f64,
) -> Result<FdCheck, LagrangianError> {
    if range.len() % 5 != 0 || range.end > ensemble.len() {
        return Err(LagrangianError::Layout(format!(
            "finite-difference stencils need groups of 5 seeds, got range {range:?}"
        )));
    }
    let pos = &ensemble.positions()[range.clone()];
    let jac = &ensemble.jacobians()[range.clone()];
    let seeds = &ensemble.seeds()[range];
    let mut out = FdCheck {
        centers: pos.len() / 5,
        max_relative: 0.0,
        worst_center: [0.0; 2],
    };
    for c in 0..out.centers {
        let p = &pos[5 * c..5 * c + 5];
        let mut fd: Mat2 = matrix::ZERO;
        for i in 0..2 {
            fd[i][0] = (p[1][i] - p[2][i]) / (2.0 * s);
            fd[i][1] = (p[3][i] - p[4][i]) / (2.0 * s);
        }
        let d = &jac[5 * c];
        let rel = matrix::max_entry(&matrix::sub(&fd, d)) / matrix::max_entry(d);
        if rel > out.max_relative {
            out.max_relative = rel;
            out.worst_center = seeds[5 * c];
        }
    }
    Ok(out)
}

/// Base velocity plus `eps` times a closed-form perturbation.
struct Perturbed<'a, V> {
    base: &'a mut dyn VelocitySource,
    v: &'a V,
    eps: f64,
}

impl<V> VelocitySource for Perturbed<'_, V>
where
    V: Fn(f64, [f64; 2]) -> KinematicSample,
{
    fn sample(&mut self, t: f64, points: &[[f64; 2]]) -> Result<Vec<KinematicSample>, LagrangianError> {
        let mut s = self.base.sample(t, points)?;
        for (k, p) in s.iter_mut().zip(points) {
            let d = (self.v)(t, *p);
            for i in 0..2 {
                k.velocity[i] += self.eps * d.velocity[i];
                for j in 0..2 {
                    k.gradient[i][j] += self.eps * d.gradient[i][j];
                }
            }
        }
        Ok(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComparisonPoint {
    pub eps: f64,
    /// `sup_t ‖ξ − η‖_∞` over seeds.
    pub position_part: f64,
    /// `sup_t ‖Dξ − Dη‖_∞` over seeds.
    pub jacobian_part: f64,
    /// `sup_t (‖ξ − η‖_∞ + ‖Dξ − Dη‖_∞)`.
    pub lhs: f64,
    /// `eps · (‖v‖_∞ + ‖Dv‖_∞)` with the unit-amplitude norm supplied.
    pub rhs: f64,
    pub ratio: f64,
}

/// Flows of `u` and `u + eps v` from the same seeds, compared over `[0, horizon]`.
/// `v_norm` is `sup_t (‖v‖_∞ + ‖Dv‖_∞)` for the unit-amplitude `v`.
pub fn comparison_experiment<V>(
    base: &mut dyn VelocitySource,
    v: &V,
    v_norm: f64,
    seeds: &[[f64; 2]],
    horizon: f64,
    dt_max: f64,
    amplitudes: &[f64],
) -> Result<Vec<ComparisonPoint>, LagrangianError>
where
    V: Fn(f64, [f64; 2]) -> KinematicSample,
{
    let (steps, dt) = step_plan(horizon, dt_max);
    let mut eta = FlowEnsemble::new(seeds.to_vec());
    let mut reference = vec![(eta.positions().to_vec(), eta.jacobians().to_vec())];
    for _ in 0..steps {
        eta.advance(base, dt)?;
        reference.push((eta.positions().to_vec(), eta.jacobians().to_vec()));
    }
    let mut out = Vec::with_capacity(amplitudes.len());
    for &eps in amplitudes {
        let mut src = Perturbed { base: &mut *base, v, eps };
        let mut xi = FlowEnsemble::new(seeds.to_vec());
        let (mut pos_part, mut jac_part, mut lhs) = (0.0f64, 0.0f64, 0.0f64);
        for (step, (rp, rj)) in reference.iter().enumerate() {
            if step > 0 {
                xi.advance(&mut src, dt)?;
            }
            let dp = xi
                .positions()
                .iter()
                .zip(rp)
                .fold(0.0f64, |m, (a, b)| m.max((a[0] - b[0]).abs()).max((a[1] - b[1]).abs()));
            let dj = xi
                .jacobians()
                .iter()
                .zip(rj)
                .fold(0.0f64, |m, (a, b)| m.max(matrix::max_entry(&matrix::sub(a, b))));
            pos_part = pos_part.max(dp);
            jac_part = jac_part.max(dj);
            lhs = lhs.max(dp + dj);
        }
        let rhs = eps * v_norm;
        out.push(ComparisonPoint {
            eps,
            position_part: pos_part,
            jacobian_part: jac_part,
            lhs,
            rhs,
            ratio: if rhs > 0.0 { lhs / rhs } else { 0.0 },
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lagrangian::seeds::{axes, fd_stencils, origin};
    use crate::lagrangian::AnalyticSource;

    fn taylor_green(_: f64, x: [f64; 2]) -> KinematicSample {
        let (s1, c1) = x[0].sin_cos();
        let (s2, c2) = x[1].sin_cos();
        KinematicSample {
            velocity: [0.5 * s1 * c2, -0.5 * c1 * s2],
            gradient: [[0.5 * c1 * c2, -0.5 * s1 * s2], [0.5 * s1 * s2, -0.5 * c1 * c2]],
        }
    }

    #[test]
    fn taylor_green_structure() {
        let mut seeds = origin();
        seeds.extend(axes(8, 1.2));
        seeds.extend([[0.3, 0.4], [1.0, 0.2]]);
        let fd_start = seeds.len();
        seeds.extend(fd_stencils(&[[0.5, 0.7], [0.9, 0.3]], 0.01));
        let mut e = FlowEnsemble::new(seeds);
        e.evolve(&mut AnalyticSource::new(taylor_green), 1.0, 0.01).unwrap();
        let a = axis_defects(&e);
        assert_eq!(a.origin_seeds, 1);
        assert_eq!(a.axis_seeds, 32);
        assert_eq!(a.stagnation, 0.0);
        assert!(a.axis1 < 1e-15 && a.axis2 < 1e-15);
        assert_eq!(sign_preservation(&e, 1e-8).fraction, 1.0);
        assert!(e.det_defects().iter().all(|&d| d < 1e-9));
        let fd = fd_jacobian_check(&e, fd_start..e.len(), 0.01).unwrap();
        assert_eq!(fd.centers, 2);
        assert!(fd.max_relative < 1e-3, "{fd:?}");
    }

    #[test]
    fn comparison_is_linear_for_small_eps() {
        let shear = |_: f64, x: [f64; 2]| KinematicSample {
            velocity: [x[1].sin(), 0.0],
            gradient: [[0.0, x[1].cos()], [0.0, 0.0]],
        };
        let seeds = vec![[0.3, 0.2], [1.0, -0.5], [-0.4, 0.9]];
        let mut base = AnalyticSource::new(taylor_green);
        let pts =
            comparison_experiment(&mut base, &shear, 2.0, &seeds, 1.0, 0.01, &[0.0, 1e-2, 5e-3]).unwrap();
        assert_eq!(pts[0].lhs, 0.0);
        let r = pts[1].lhs / pts[2].lhs;
        assert!((r - 2.0).abs() < 0.1, "{r}");
    }
}

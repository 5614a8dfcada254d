use std::ops::Range;

use serde::Serialize;

use super::ensemble::FlowEnsemble;
use super::matrix::{self, Mat2};
use super::seeds::RaySeeds;
use super::LagrangianError;

/// `Dη = A + B` per seed, with `A = diag(e^{−I}, e^{I})` and `B` the
/// remainder driven by the off-diagonal part of `∇u`.
#[derive(Debug, Clone)]
pub struct DuhamelSplit {
    pub time: f64,
    pub a: Vec<Mat2>,
    /// `Dη − A`.
    pub b: Vec<Mat2>,
    /// `A J`, the remainder from its own integral.
    pub b_hat: Vec<Mat2>,
    /// Largest entry of `A + B̂ − Dη` over all seeds.
    pub residual: f64,
    /// Largest `|A₁₁ A₂₂ − 1|`.
    pub det_a_defect: f64,
}

pub fn duhamel_split(ensemble: &FlowEnsemble) -> Result<DuhamelSplit, LagrangianError> {
    let j = ensemble.remainder_integrals().ok_or_else(|| {
        LagrangianError::MissingHistory("ensemble was rebuilt without its remainder integral".into())
    })?;
    let a: Vec<Mat2> = ensemble
        .lambda_integrals()
        .iter()
        .map(|&i| matrix::diag((-i).exp(), i.exp()))
        .collect();
    let b: Vec<Mat2> = ensemble
        .jacobians()
        .iter()
        .zip(&a)
        .map(|(d, a)| matrix::sub(d, a))
        .collect();
    let b_hat: Vec<Mat2> = a.iter().zip(j).map(|(a, j)| matrix::mul(a, j)).collect();
    let mut residual = 0.0f64;
    let mut det_a_defect = 0.0f64;
    for k in 0..a.len() {
        let r = matrix::sub(&matrix::add(&a[k], &b_hat[k]), &ensemble.jacobians()[k]);
        residual = residual.max(matrix::max_entry(&r));
        det_a_defect = det_a_defect.max((a[k][0][0] * a[k][1][1] - 1.0).abs());
    }
    Ok(DuhamelSplit {
        time: ensemble.time(),
        a,
        b,
        b_hat,
        residual,
        det_a_defect,
    })
}

/// `η(t, x) − η(t, 0) = ∫₀¹ Dη(t, r x) x dr`, split into the `A` and `B` parts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RayReconstruction {
    pub x: [f64; 2],
    pub a_tilde: [f64; 2],
    pub b_tilde: [f64; 2],
    /// `η(t, x) − η(t, 0)` from the tracked endpoints.
    pub displacement: [f64; 2],
    /// `|Ã + B̃ − (η(t, x) − η(t, 0))|`.
    pub residual: f64,
}

/// Reconstruct along a ray whose seeds occupy `range` in the order produced
/// by [`RaySeeds::points`]. `margin` bounds `|x_i|` for every point used.
pub fn ray_reconstruct(
    ensemble: &FlowEnsemble,
    split: &DuhamelSplit,
    ray: &RaySeeds,
    range: Range<usize>,
    margin: f64,
) -> Result<RayReconstruction, LagrangianError> {
    if range.len() != ray.len() || range.end > ensemble.len() {
        return Err(LagrangianError::Layout(format!(
            "ray needs {} seeds, got range {range:?}",
            ray.len()
        )));
    }
    let x = ray.endpoint;
    let pos = &ensemble.positions()[range.clone()];
    for p in std::iter::once(&x).chain(pos) {
        if p[0].abs() > margin || p[1].abs() > margin {
            return Err(LagrangianError::RayOutsideMargin { x: *p, margin });
        }
    }
    let mut a_tilde = [0.0; 2];
    let mut b_tilde = [0.0; 2];
    for (q, w) in ray.weights.iter().enumerate() {
        let k = range.start + 1 + q;
        let av = matrix::apply(&split.a[k], x);
        let bv = matrix::apply(&split.b[k], x);
        for i in 0..2 {
            a_tilde[i] += w * av[i];
            b_tilde[i] += w * bv[i];
        }
    }
    let (o, e) = (pos[0], pos[pos.len() - 1]);
    let displacement = [e[0] - o[0], e[1] - o[1]];
    let residual = (a_tilde[0] + b_tilde[0] - displacement[0]).hypot(a_tilde[1] + b_tilde[1] - displacement[1]);
    Ok(RayReconstruction {
        x,
        a_tilde,
        b_tilde,
        displacement,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lagrangian::{AnalyticSource, KinematicSample};

    #[test]
    fn split_at_time_zero() {
        let e = FlowEnsemble::new(vec![[0.2, 0.1], [0.0, 0.0]]);
        let s = duhamel_split(&e).unwrap();
        assert!(s.a.iter().all(|a| *a == matrix::IDENTITY));
        assert!(s.b.iter().all(|b| *b == matrix::ZERO));
        assert_eq!(s.residual, 0.0);
    }

    #[test]
    fn missing_history() {
        let e = FlowEnsemble::from_state(vec![[0.0; 2]], vec![[0.0; 2]], vec![matrix::IDENTITY], vec![0.0], 0.5)
            .unwrap();
        assert!(matches!(duhamel_split(&e), Err(LagrangianError::MissingHistory(_))));
    }

    #[test]
    fn shear_ray() {
        let mut src = AnalyticSource::new(|_, x: [f64; 2]| KinematicSample {
            velocity: [x[1].sin(), 0.0],
            gradient: [[0.0, x[1].cos()], [0.0, 0.0]],
        });
        let a = 0.9;
        let ray = RaySeeds::new([0.0, a], 32);
        let mut e = FlowEnsemble::new(ray.points());
        let t = 0.7;
        e.evolve(&mut src, t, 0.01).unwrap();
        let s = duhamel_split(&e).unwrap();
        assert!(s.residual < 1e-12);
        let r = ray_reconstruct(&e, &s, &ray, 0..ray.len(), 2.0).unwrap();
        assert!((r.a_tilde[0] + r.b_tilde[0] - t * a.sin()).abs() < 1e-6);
        assert!((r.a_tilde[1] + r.b_tilde[1] - a).abs() < 1e-12);
        assert!(r.residual < 1e-6);
        assert!(ray_reconstruct(&e, &s, &ray, 0..ray.len(), 0.5).is_err());
    }
}

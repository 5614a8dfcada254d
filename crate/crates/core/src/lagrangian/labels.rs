//! Forward flow map recovered from advected labels.
//!
//! The solver can carry the label displacement `D(t, y) = X(t, y) − y`, where
//! `X(t, ·) = η(t, ·)⁻¹` is transported by the flow. The forward map at `x` is
//! the point `y` with `y + D(y) = x`, and since `det DX = 1` the forward
//! Jacobian is the cofactor matrix `Dη(x) = adj(I + ∇D(y))`.

use rayon::prelude::*;

use super::matrix::{self, Mat2};
use super::LagrangianError;
use crate::field::VectorField;
use crate::sample::{FourierSampler, Interpolation, LagrangeStencil};
use crate::spectral::{partial, Axis};

const MAX_NEWTON: usize = 50;

#[derive(Debug, Clone)]
pub struct ForwardMap {
    pub positions: Vec<[f64; 2]>,
    pub jacobians: Vec<Mat2>,
    /// Largest `|det(I + ∇D) − 1|` at the solved points.
    pub max_det_defect: f64,
    /// Largest `|y + D(y) − x|` after the last Newton step.
    pub max_residual: f64,
    pub max_iterations: usize,
}

/// Six fields sampled together: `D₁, D₂, ∂₁D₁, ∂₂D₁, ∂₁D₂, ∂₂D₂`.
enum Samplers {
    Fourier(Vec<FourierSampler>),
    Lagrange(usize, Vec<Vec<f64>>),
}

impl Samplers {
    fn eval(&self, grid: &crate::grid::GridSpec, p: [f64; 2]) -> ([f64; 2], Mat2) {
        let v: [f64; 6] = match self {
            Samplers::Fourier(s) => std::array::from_fn(|i| s[i].eval(p)),
            Samplers::Lagrange(order, f) => {
                let st = LagrangeStencil::new(grid, p, *order);
                std::array::from_fn(|i| st.apply(&f[i]))
            }
        };
        ([v[0], v[1]], [[v[2], v[3]], [v[4], v[5]]])
    }
}

/// Solve `y + D(y) = x` by Newton's method at every point.
pub fn forward_map_from_labels(
    displacement: &VectorField,
    points: &[[f64; 2]],
    method: Interpolation,
) -> Result<ForwardMap, LagrangianError> {
    let grid = *displacement.grid();
    let fields = [
        displacement.u1().clone(),
        displacement.u2().clone(),
        partial(displacement.u1(), Axis::X1),
        partial(displacement.u1(), Axis::X2),
        partial(displacement.u2(), Axis::X1),
        partial(displacement.u2(), Axis::X2),
    ];
    let samplers = match method {
        Interpolation::Fourier => Samplers::Fourier(fields.iter().map(FourierSampler::new).collect()),
        Interpolation::Lagrange(order) => {
            Samplers::Lagrange(order, fields.into_iter().map(|f| f.into_values()).collect())
        }
    };
    let solved: Vec<([f64; 2], Mat2, f64, f64, usize)> = points
        .par_iter()
        .map(|&x| {
            let mut y = x;
            let mut iters = 0;
            let (mut d, mut g) = samplers.eval(&grid, y);
            loop {
                let f = [y[0] + d[0] - x[0], y[1] + d[1] - x[1]];
                let res = f[0].hypot(f[1]);
                let jf = matrix::add(&matrix::IDENTITY, &g);
                if res <= 1e-14 * (1.0 + x[0].hypot(x[1])) || iters >= MAX_NEWTON {
                    let det = matrix::det(&jf);
                    return (y, matrix::adjugate(&jf), (det - 1.0).abs(), res, iters);
                }
                let step = matrix::scale(&matrix::adjugate(&jf), 1.0 / matrix::det(&jf));
                let dy = matrix::apply(&step, f);
                y = [y[0] - dy[0], y[1] - dy[1]];
                iters += 1;
                (d, g) = samplers.eval(&grid, y);
            }
        })
        .collect();
    let mut out = ForwardMap {
        positions: Vec::with_capacity(points.len()),
        jacobians: Vec::with_capacity(points.len()),
        max_det_defect: 0.0,
        max_residual: 0.0,
        max_iterations: 0,
    };
    for (y, j, det, res, it) in solved {
        out.positions.push(y);
        out.jacobians.push(j);
        out.max_det_defect = out.max_det_defect.max(det);
        out.max_residual = out.max_residual.max(res);
        out.max_iterations = out.max_iterations.max(it);
    }
    if out.max_iterations >= MAX_NEWTON {
        return Err(LagrangianError::Layout(format!(
            "label inversion did not converge (residual {:.3e})",
            out.max_residual
        )));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;

    #[test]
    fn shear_labels_invert() {
        // after time t in u = (sin x₂, 0): X(y) = (y₁ − t sin y₂, y₂)
        let g = GridSpec::two_pi(64).unwrap();
        let t = 0.6;
        let d = VectorField::from_fn(g, |_, y2| [-t * y2.sin(), 0.0]);
        let pts = [[0.3, 0.4], [-1.0, 2.0]];
        for method in [Interpolation::Fourier, Interpolation::Lagrange(12)] {
            let m = forward_map_from_labels(&d, &pts, method).unwrap();
            for (x, (p, j)) in pts.iter().zip(m.positions.iter().zip(&m.jacobians)) {
                let tol = if method == Interpolation::Fourier { 1e-12 } else { 1e-6 };
                assert!((p[0] - (x[0] + t * x[1].sin())).abs() < tol);
                assert!((j[0][1] - t * x[1].cos()).abs() < tol);
                assert!((j[0][0] - 1.0).abs() < tol);
            }
        }
    }
}

//! Lebesgue and Sobolev norms of grid fields.
//!
//! Sums are formed row by row and the row partials are added in row order, so
//! results do not depend on how rayon splits the work.

use rayon::prelude::*;

use crate::field::{FieldError, ScalarField};
use crate::spectral::{gradient, oversampled_max_abs};

/// Refinement factor used by [`sup_norm`].
pub const SUP_OVERSAMPLING: usize = 4;

fn check_exponent(p: f64) -> Result<(), FieldError> {
    if p.is_finite() && p > 1.0 {
        Ok(())
    } else {
        Err(FieldError::InvalidExponent(p))
    }
}

/// Row-ordered sum of `g(v)` over all grid values.
pub(crate) fn ordered_sum<F>(values: &[f64], n: usize, g: F) -> f64
where
    F: Fn(f64) -> f64 + Sync,
{
    let rows: Vec<f64> = values
        .par_chunks(n)
        .map(|row| row.iter().map(|&v| g(v)).sum::<f64>())
        .collect();
    rows.iter().sum()
}

/// `(h² Σ |f|^p)^{1/p}`.
pub fn lp_norm(f: &ScalarField, p: f64) -> Result<f64, FieldError> {
    check_exponent(p)?;
    Ok(lp_of_values(f.values(), f.grid().n(), f.grid().cell_area(), p))
}

pub fn lp_of_values(values: &[f64], n: usize, cell_area: f64, p: f64) -> f64 {
    let scale = crate::field::max_abs(values);
    if scale == 0.0 {
        return 0.0;
    }
    // normalize first so |f|^p cannot overflow or underflow for tiny fields
    let s = ordered_sum(values, n, |v| (v.abs() / scale).powf(p));
    scale * (s * cell_area).powf(1.0 / p)
}

/// Supremum of the trigonometric interpolant, estimated on a grid refined
/// [`SUP_OVERSAMPLING`] times per axis.
pub fn sup_norm(f: &ScalarField) -> f64 {
    oversampled_max_abs(f, SUP_OVERSAMPLING)
}

/// Homogeneous seminorm `‖ |∇f| ‖_{L^p}` with the Euclidean length of the gradient.
pub fn gradient_lp_norm(f: &ScalarField, p: f64) -> Result<f64, FieldError> {
    check_exponent(p)?;
    let g = gradient(f);
    Ok(lp_of_values(
        g.magnitude().values(),
        f.grid().n(),
        f.grid().cell_area(),
        p,
    ))
}

/// `‖f‖_{L^p} + ‖∇f‖_{L^p}`.
pub fn sobolev_norm(f: &ScalarField, p: f64) -> Result<f64, FieldError> {
    Ok(lp_norm(f, p)? + gradient_lp_norm(f, p)?)
}

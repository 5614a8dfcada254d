//! Scalar and vector fields sampled on a [`GridSpec`].

use rayon::prelude::*;
use thiserror::Error;

use crate::grid::GridSpec;

#[derive(Debug, Error)]
pub enum FieldError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("zero-mode undefined: the operator needs a mean-zero field (mean {mean:e})")]
    ZeroModeUndefined { mean: f64 },
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("expected {expected} values, got {got}")]
    WrongLength { expected: usize, got: usize },
    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },
    #[error("Lebesgue exponent must exceed 1, got {0}")]
    InvalidExponent(f64),
    #[error("snapshot: {0}")]
    Snapshot(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Relative tolerance for the mean-zero flag.
pub const MEAN_ZERO_TOLERANCE: f64 = 1e-12;

/// Real values on the cell centers of a grid, row-major with `x₁` varying fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: GridSpec,
    values: Vec<f64>,
    mean_zero: bool,
}

impl ScalarField {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self, FieldError> {
        if values.len() != grid.len() {
            return Err(FieldError::WrongLength {
                expected: grid.len(),
                got: values.len(),
            });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(FieldError::NonFinite { index });
        }
        let mean_zero = mean_zero_flag(&values);
        Ok(Self {
            grid,
            values,
            mean_zero,
        })
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
            mean_zero: true,
        }
    }

    /// Sample `f(x₁, x₂)` at every cell center.
    pub fn from_fn<F>(grid: GridSpec, f: F) -> Self
    where
        F: Fn(f64, f64) -> f64 + Sync,
    {
        let n = grid.n();
        let mut values = vec![0.0; grid.len()];
        values.par_chunks_mut(n).enumerate().for_each(|(i2, row)| {
            let x2 = grid.coord(i2);
            for (i1, v) in row.iter_mut().enumerate() {
                *v = f(grid.coord(i1), x2);
            }
        });
        Self::new(grid, values).expect("from_fn produced non-finite values")
    }

    #[inline]
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn is_mean_zero(&self) -> bool {
        self.mean_zero
    }

    #[inline]
    pub fn at(&self, i1: usize, i2: usize) -> f64 {
        self.values[self.grid.index(i1, i2)]
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Largest absolute grid value (no oversampling).
    pub fn grid_max_abs(&self) -> f64 {
        max_abs(&self.values)
    }

    /// Grid quadrature `h² Σ f`.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_area()
    }

    /// Subtract the grid mean; the result is flagged mean-zero.
    pub fn project_mean_zero(&self) -> Self {
        let m = self.mean();
        let values: Vec<f64> = self.values.iter().map(|v| v - m).collect();
        Self {
            grid: self.grid,
            values,
            mean_zero: true,
        }
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|v| a * v).collect(),
            mean_zero: self.mean_zero,
        }
    }

    pub fn add(&self, other: &ScalarField) -> Result<Self, FieldError> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &ScalarField) -> Result<Self, FieldError> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &ScalarField) -> Result<Self, FieldError> {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn zip_with<F>(&self, other: &ScalarField, f: F) -> Result<Self, FieldError>
    where
        F: Fn(f64, f64) -> f64,
    {
        ensure_same_grid(&self.grid, &other.grid)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Self::new(self.grid, values)
    }

    pub fn map<F>(&self, f: F) -> Result<Self, FieldError>
    where
        F: Fn(f64) -> f64,
    {
        Self::new(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    /// Largest absolute grid value restricted to the outer frame whose width is
    /// `fraction` of the side length.
    pub fn frame_max_abs(&self, fraction: f64) -> f64 {
        let n = self.grid.n();
        let half = 0.5 * self.grid.side_length();
        let inner = half * (1.0 - 2.0 * fraction);
        let mut m = 0.0f64;
        for i2 in 0..n {
            let x2 = self.grid.coord(i2);
            for i1 in 0..n {
                let x1 = self.grid.coord(i1);
                if x1.abs() > inner || x2.abs() > inner {
                    m = m.max(self.values[i2 * n + i1].abs());
                }
            }
        }
        m
    }
}

/// Two scalar components on a shared grid.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    u1: ScalarField,
    u2: ScalarField,
}

impl VectorField {
    pub fn new(u1: ScalarField, u2: ScalarField) -> Result<Self, FieldError> {
        ensure_same_grid(u1.grid(), u2.grid())?;
        Ok(Self { u1, u2 })
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            u1: ScalarField::zeros(grid),
            u2: ScalarField::zeros(grid),
        }
    }

    pub fn from_fn<F>(grid: GridSpec, f: F) -> Self
    where
        F: Fn(f64, f64) -> [f64; 2] + Sync,
    {
        Self {
            u1: ScalarField::from_fn(grid, |x1, x2| f(x1, x2)[0]),
            u2: ScalarField::from_fn(grid, |x1, x2| f(x1, x2)[1]),
        }
    }

    pub fn grid(&self) -> &GridSpec {
        self.u1.grid()
    }

    pub fn u1(&self) -> &ScalarField {
        &self.u1
    }

    pub fn u2(&self) -> &ScalarField {
        &self.u2
    }

    pub fn component(&self, axis: usize) -> &ScalarField {
        match axis {
            0 => &self.u1,
            1 => &self.u2,
            _ => panic!("axis {axis} out of range"),
        }
    }

    pub fn into_components(self) -> (ScalarField, ScalarField) {
        (self.u1, self.u2)
    }

    /// Largest Euclidean length over grid nodes.
    pub fn grid_max_norm(&self) -> f64 {
        self.u1
            .values()
            .iter()
            .zip(self.u2.values())
            .fold(0.0f64, |m, (a, b)| m.max(a.hypot(*b)))
    }

    pub fn add(&self, other: &VectorField) -> Result<Self, FieldError> {
        Self::new(self.u1.add(&other.u1)?, self.u2.add(&other.u2)?)
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self {
            u1: self.u1.scaled(a),
            u2: self.u2.scaled(a),
        }
    }

    /// Pointwise dot product.
    pub fn dot(&self, other: &VectorField) -> Result<ScalarField, FieldError> {
        ensure_same_grid(self.grid(), other.grid())?;
        let values = (0..self.grid().len())
            .map(|i| {
                self.u1.values()[i] * other.u1.values()[i] + self.u2.values()[i] * other.u2.values()[i]
            })
            .collect();
        ScalarField::new(*self.grid(), values)
    }

    /// Pointwise Euclidean length.
    pub fn magnitude(&self) -> ScalarField {
        let values = self
            .u1
            .values()
            .iter()
            .zip(self.u2.values())
            .map(|(a, b)| a.hypot(*b))
            .collect();
        ScalarField::new(*self.grid(), values).expect("finite components")
    }

    /// `(-u₂, u₁)`.
    pub fn rotated(&self) -> Self {
        Self {
            u1: self.u2.scaled(-1.0),
            u2: self.u1.clone(),
        }
    }
}

/// Reflection defects of a field, each normalized by its largest grid value.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ParityDefect {
    /// `sup |f(x₁,x₂) + f(-x₁,x₂)|`
    pub odd1: f64,
    /// `sup |f(x₁,x₂) + f(x₁,-x₂)|`
    pub odd2: f64,
    /// `sup |f(x₁,x₂) - f(-x₁,x₂)|`
    pub even1: f64,
    /// `sup |f(x₁,x₂) - f(x₁,-x₂)|`
    pub even2: f64,
}

impl ParityDefect {
    pub fn odd(&self) -> f64 {
        self.odd1.max(self.odd2)
    }
}

/// Reflection defects in both coordinates. The cell-centered grid is
/// symmetric about the origin, so each reflection maps nodes onto nodes.
pub fn parity_defect(f: &ScalarField) -> ParityDefect {
    let g = f.grid();
    let n = g.n();
    let scale = f.grid_max_abs();
    if scale == 0.0 {
        return ParityDefect {
            odd1: 0.0,
            odd2: 0.0,
            even1: 0.0,
            even2: 0.0,
        };
    }
    let v = f.values();
    let (mut odd1, mut odd2, mut even1, mut even2) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for i2 in 0..n {
        for i1 in 0..n {
            let a = v[g.index(i1, i2)];
            let r1 = v[g.index(g.mirror(i1), i2)];
            let r2 = v[g.index(i1, g.mirror(i2))];
            odd1 = odd1.max((a + r1).abs());
            even1 = even1.max((a - r1).abs());
            odd2 = odd2.max((a + r2).abs());
            even2 = even2.max((a - r2).abs());
        }
    }
    ParityDefect {
        odd1: odd1 / scale,
        odd2: odd2 / scale,
        even1: even1 / scale,
        even2: even2 / scale,
    }
}

pub(crate) fn ensure_same_grid(a: &GridSpec, b: &GridSpec) -> Result<(), FieldError> {
    if a.same_as(b) {
        Ok(())
    } else {
        Err(FieldError::GridMismatch(format!(
            "{}x{} on L={} vs {}x{} on L={}",
            a.n(),
            a.n(),
            a.side_length(),
            b.n(),
            b.n(),
            b.side_length()
        )))
    }
}

pub(crate) fn max_abs(values: &[f64]) -> f64 {
    values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

fn mean_zero_flag(values: &[f64]) -> bool {
    let scale = max_abs(values);
    if scale == 0.0 {
        return true;
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    mean.abs() <= MEAN_ZERO_TOLERANCE * scale
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> GridSpec {
        GridSpec::two_pi(32).unwrap()
    }

    #[test]
    fn mean_zero_flag_follows_values() {
        let g = grid();
        let s = ScalarField::from_fn(g, |x, y| x.sin() * y.sin());
        assert!(s.is_mean_zero());
        let c = ScalarField::from_fn(g, |_, _| 1.0);
        assert!(!c.is_mean_zero());
        assert!(c.project_mean_zero().is_mean_zero());
        assert!(ScalarField::zeros(g).is_mean_zero());
    }

    #[test]
    fn rejects_nan_and_length() {
        let g = grid();
        let mut v = vec![0.0; g.len()];
        v[3] = f64::NAN;
        assert!(matches!(
            ScalarField::new(g, v),
            Err(FieldError::NonFinite { index: 3 })
        ));
        assert!(matches!(
            ScalarField::new(g, vec![0.0; 5]),
            Err(FieldError::WrongLength { .. })
        ));
    }

    #[test]
    fn parity_of_products() {
        let g = grid();
        let odd_odd = ScalarField::from_fn(g, |x, y| x.sin() * y.sin());
        let d = parity_defect(&odd_odd);
        assert!(d.odd1 < 1e-15 && d.odd2 < 1e-15);

        let even = ScalarField::from_fn(g, |x, _| x.cos());
        let d = parity_defect(&even);
        assert!(d.even1 < 1e-15);
        assert!((d.odd1 - 2.0).abs() < 1e-12);

        let zero = parity_defect(&ScalarField::zeros(g));
        assert_eq!(zero.odd1, 0.0);
    }

    #[test]
    fn grid_mismatch_is_reported() {
        let a = ScalarField::zeros(GridSpec::two_pi(16).unwrap());
        let b = ScalarField::zeros(GridSpec::two_pi(32).unwrap());
        assert!(matches!(a.add(&b), Err(FieldError::GridMismatch(_))));
    }
}

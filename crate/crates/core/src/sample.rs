//! Off-grid evaluation of grid fields.
//!
//! Two interpolants are provided. The Fourier one evaluates the trigonometric
//! interpolant directly (exact for band-limited data, `O(n²)` per point). The
//! Lagrange one is a tensor-product polynomial on a small periodic stencil; its
//! weights depend only on the point, so they are computed once and applied to
//! every field sampled there.

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::field::ScalarField;
use crate::grid::GridSpec;
use crate::spectral::Spectrum;

pub const MAX_LAGRANGE_ORDER: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interpolation {
    /// Trigonometric interpolant.
    Fourier,
    /// Tensor-product Lagrange polynomial through `order` nodes per axis
    /// (even, 2..=12). Order 4 is bicubic.
    Lagrange(usize),
}

/// Interpolate with the trigonometric interpolant.
pub fn sample(f: &ScalarField, points: &[[f64; 2]]) -> Vec<f64> {
    FourierSampler::new(f).eval_many(points)
}

pub fn sample_with(f: &ScalarField, points: &[[f64; 2]], method: Interpolation) -> Vec<f64> {
    match method {
        Interpolation::Fourier => sample(f, points),
        Interpolation::Lagrange(order) => points
            .par_iter()
            .map(|&p| LagrangeStencil::new(f.grid(), p, order).apply(f.values()))
            .collect(),
    }
}

/// Trigonometric interpolant of one field, ready for repeated evaluation.
#[derive(Debug, Clone)]
pub struct FourierSampler {
    grid: GridSpec,
    spectrum: Spectrum,
}

impl FourierSampler {
    pub fn new(f: &ScalarField) -> Self {
        Self {
            grid: *f.grid(),
            spectrum: Spectrum::of(f),
        }
    }

    /// Interpolant of the field whose spectrum is given.
    pub fn from_spectrum(spectrum: Spectrum) -> Self {
        Self {
            grid: *spectrum.grid(),
            spectrum,
        }
    }

    pub fn eval(&self, p: [f64; 2]) -> f64 {
        let n = self.grid.n();
        let p = self.grid.fold(p);
        let a1 = axis_factors(&self.grid, p[0]);
        let a2 = axis_factors(&self.grid, p[1]);
        let data = self.spectrum.data();
        let mut acc = Complex64::new(0.0, 0.0);
        for (m2, row) in data.chunks(n).enumerate() {
            let mut r = Complex64::new(0.0, 0.0);
            for (c, a) in row.iter().zip(&a1) {
                r += c * a;
            }
            acc += r * a2[m2];
        }
        acc.re / (n * n) as f64
    }

    pub fn eval_many(&self, points: &[[f64; 2]]) -> Vec<f64> {
        points.par_iter().map(|&p| self.eval(p)).collect()
    }
}

fn axis_factors(grid: &GridSpec, x: f64) -> Vec<Complex64> {
    let d = x - grid.origin();
    grid.wavenumbers()
        .iter()
        .enumerate()
        .map(|(m, &k)| {
            if grid.is_nyquist(m) {
                Complex64::new((k * d).cos(), 0.0)
            } else {
                Complex64::from_polar(1.0, k * d)
            }
        })
        .collect()
}

/// Periodic tensor-product Lagrange stencil at one point.
#[derive(Debug, Clone, Copy)]
pub struct LagrangeStencil {
    order: usize,
    n: usize,
    idx1: [usize; MAX_LAGRANGE_ORDER],
    idx2: [usize; MAX_LAGRANGE_ORDER],
    w1: [f64; MAX_LAGRANGE_ORDER],
    w2: [f64; MAX_LAGRANGE_ORDER],
}

impl LagrangeStencil {
    pub fn new(grid: &GridSpec, p: [f64; 2], order: usize) -> Self {
        assert!(
            order >= 2 && order <= MAX_LAGRANGE_ORDER && order % 2 == 0,
            "Lagrange order must be even and in 2..={MAX_LAGRANGE_ORDER}, got {order}"
        );
        let n = grid.n();
        let (idx1, w1) = axis_stencil(grid, p[0], order);
        let (idx2, w2) = axis_stencil(grid, p[1], order);
        Self {
            order,
            n,
            idx1,
            idx2,
            w1,
            w2,
        }
    }

    #[inline]
    pub fn apply(&self, values: &[f64]) -> f64 {
        let mut acc = 0.0;
        for b in 0..self.order {
            let row = self.idx2[b] * self.n;
            let mut r = 0.0;
            for a in 0..self.order {
                r += self.w1[a] * values[row + self.idx1[a]];
            }
            acc += self.w2[b] * r;
        }
        acc
    }
}

fn axis_stencil(
    grid: &GridSpec,
    x: f64,
    order: usize,
) -> ([usize; MAX_LAGRANGE_ORDER], [f64; MAX_LAGRANGE_ORDER]) {
    let n = grid.n() as i64;
    let t = ((x - grid.origin()) / grid.spacing()).rem_euclid(n as f64);
    let base = t.floor();
    let frac = t - base;
    let first = base as i64 - (order as i64 / 2 - 1);
    let mut idx = [0usize; MAX_LAGRANGE_ORDER];
    let mut w = [0.0; MAX_LAGRANGE_ORDER];
    for a in 0..order {
        idx[a] = (first + a as i64).rem_euclid(n) as usize;
        // node offsets relative to `base`: j - (order/2 - 1)
        let xa = a as f64 - (order / 2 - 1) as f64;
        let mut num = 1.0;
        let mut den = 1.0;
        for b in 0..order {
            if b != a {
                let xb = b as f64 - (order / 2 - 1) as f64;
                num *= frac - xb;
                den *= xa - xb;
            }
        }
        w[a] = num / den;
    }
    (idx, w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn nodes_reproduce_values() {
        let g = GridSpec::new(8.0, 32).unwrap();
        let f = ScalarField::from_fn(g, |x, y| (x * 1.3).sin() + (y * x).cos());
        let pts: Vec<[f64; 2]> = [(0, 0), (5, 17), (31, 31), (12, 3)]
            .iter()
            .map(|&(i, j)| [g.coord(i), g.coord(j)])
            .collect();
        let want: Vec<f64> = [(0, 0), (5, 17), (31, 31), (12, 3)]
            .iter()
            .map(|&(i, j)| f.at(i, j))
            .collect();
        for method in [Interpolation::Fourier, Interpolation::Lagrange(4), Interpolation::Lagrange(8)] {
            let got = sample_with(&f, &pts, method);
            for (a, b) in got.iter().zip(&want) {
                assert!((a - b).abs() < 1e-10, "{method:?}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn sine_off_grid() {
        let g = GridSpec::two_pi(256).unwrap();
        let f = ScalarField::from_fn(g, |x, _| x.sin());
        let p = [[PI / 3.0, 0.1]];
        let want = (PI / 3.0).sin();
        assert!((sample(&f, &p)[0] - want).abs() < 1e-12);
        assert!((sample_with(&f, &p, Interpolation::Lagrange(8))[0] - want).abs() < 1e-8);
    }

    #[test]
    fn constants_are_exact() {
        let g = GridSpec::new(3.0, 16).unwrap();
        let f = ScalarField::from_fn(g, |_, _| 2.5);
        let p = [[0.123, -1.4], [1.49, 1.49], [-7.0, 4.1]];
        for v in sample(&f, &p) {
            assert!((v - 2.5).abs() < 1e-13);
        }
        for v in sample_with(&f, &p, Interpolation::Lagrange(6)) {
            assert!((v - 2.5).abs() < 1e-13);
        }
    }
}

//! Periodic computational box.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::field::FieldError;

/// A square periodic box `[-L/2, L/2)²` sampled at `n × n` cell centers.
///
/// The box stands in for the whole plane: all constructed data are compactly
/// supported well inside it, so periodic images are far away.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    side_length: f64,
    points_per_side: usize,
}

impl GridSpec {
    pub fn new(side_length: f64, points_per_side: usize) -> Result<Self, FieldError> {
        if !(side_length.is_finite() && side_length > 0.0) {
            return Err(FieldError::InvalidGrid(format!(
                "side length must be positive, got {side_length}"
            )));
        }
        if points_per_side < 16 || !points_per_side.is_power_of_two() {
            return Err(FieldError::InvalidGrid(format!(
                "points per side must be a power of two >= 16, got {points_per_side}"
            )));
        }
        Ok(Self {
            side_length,
            points_per_side,
        })
    }

    /// The `2π`-periodic box used by most analytic test fields.
    pub fn two_pi(points_per_side: usize) -> Result<Self, FieldError> {
        Self::new(2.0 * PI, points_per_side)
    }

    #[inline]
    pub fn side_length(&self) -> f64 {
        self.side_length
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.points_per_side
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.points_per_side * self.points_per_side
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Grid spacing `h = L / n`.
    #[inline]
    pub fn spacing(&self) -> f64 {
        self.side_length / self.points_per_side as f64
    }

    /// Area element `h²` for grid quadrature.
    #[inline]
    pub fn cell_area(&self) -> f64 {
        let h = self.spacing();
        h * h
    }

    #[inline]
    pub fn area(&self) -> f64 {
        self.side_length * self.side_length
    }

    /// Coordinate of the first cell center along either axis.
    #[inline]
    pub fn origin(&self) -> f64 {
        -0.5 * self.side_length + 0.5 * self.spacing()
    }

    /// Coordinate of cell center `i` along either axis.
    #[inline]
    pub fn coord(&self, i: usize) -> f64 {
        self.origin() + i as f64 * self.spacing()
    }

    /// Position of the node stored at flat index `idx` (row-major, `x₁` fastest).
    #[inline]
    pub fn position(&self, idx: usize) -> [f64; 2] {
        let n = self.points_per_side;
        [self.coord(idx % n), self.coord(idx / n)]
    }

    #[inline]
    pub fn index(&self, i1: usize, i2: usize) -> usize {
        i2 * self.points_per_side + i1
    }

    /// Flat index of the mirror image of node `(i1, i2)` under `x_axis ↦ -x_axis`.
    #[inline]
    pub fn mirror(&self, i: usize) -> usize {
        self.points_per_side - 1 - i
    }

    /// Signed integer mode number for FFT index `m`; the Nyquist index maps to `+n/2`.
    #[inline]
    pub fn mode(&self, m: usize) -> i64 {
        let n = self.points_per_side;
        if m <= n / 2 {
            m as i64
        } else {
            m as i64 - n as i64
        }
    }

    #[inline]
    pub fn is_nyquist(&self, m: usize) -> bool {
        m == self.points_per_side / 2
    }

    /// Angular wavenumbers `2π m / L` for every FFT index.
    pub fn wavenumbers(&self) -> Vec<f64> {
        let scale = 2.0 * PI / self.side_length;
        (0..self.points_per_side)
            .map(|m| scale * self.mode(m) as f64)
            .collect()
    }

    /// Largest resolved angular wavenumber `π / h`.
    pub fn nyquist_wavenumber(&self) -> f64 {
        PI / self.spacing()
    }

    /// Fold a point into the fundamental box.
    pub fn fold(&self, p: [f64; 2]) -> [f64; 2] {
        let l = self.side_length;
        let f = |x: f64| {
            let y = (x + 0.5 * l).rem_euclid(l) - 0.5 * l;
            if y >= 0.5 * l {
                y - l
            } else {
                y
            }
        };
        [f(p[0]), f(p[1])]
    }

    /// Same box at half the resolution, if that is still a valid grid.
    pub fn coarsened(&self) -> Option<Self> {
        Self::new(self.side_length, self.points_per_side / 2).ok()
    }

    pub fn same_as(&self, other: &GridSpec) -> bool {
        self.points_per_side == other.points_per_side
            && self.side_length.to_bits() == other.side_length.to_bits()
    }
}

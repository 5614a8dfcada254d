use rayon::prelude::*;
use serde::Serialize;

use super::matrix::{self, Mat2};
use super::source::{KinematicSample, VelocitySource};
use super::LagrangianError;
use crate::solver::step_plan;

/// Per-time summary over all seeds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FlowRecord {
    pub t: f64,
    /// `max_x ‖Dη(t, x)‖` (largest absolute entry).
    pub max_jacobian: f64,
    /// Same maximum in the induced (row-sum) ∞-norm.
    pub max_row_sum: f64,
    pub max_det_defect: f64,
    pub max_abs_lambda_integral: f64,
}

/// Seeds advected together through one velocity history.
#[derive(Debug, Clone)]
pub struct FlowEnsemble {
    seeds: Vec<[f64; 2]>,
    positions: Vec<[f64; 2]>,
    jacobians: Vec<Mat2>,
    lambda_integral: Vec<f64>,
    /// `J = ∫ A⁻¹ P Dη`; `None` once the history is no longer available.
    remainder_integral: Option<Vec<Mat2>>,
    time: f64,
    margin: Option<f64>,
    escaped: Vec<bool>,
    max_jacobian: f64,
    history: Vec<FlowRecord>,
}

/// Augmented per-seed state: position, Jacobian, `I`, `J`.
#[derive(Debug, Clone, Copy)]
struct SeedState {
    x: [f64; 2],
    d: Mat2,
    i: f64,
    j: Mat2,
}

impl SeedState {
    fn axpy(&self, a: f64, k: &SeedState) -> SeedState {
        SeedState {
            x: [self.x[0] + a * k.x[0], self.x[1] + a * k.x[1]],
            d: matrix::add(&self.d, &matrix::scale(&k.d, a)),
            i: self.i + a * k.i,
            j: matrix::add(&self.j, &matrix::scale(&k.j, a)),
        }
    }
}

fn rate(s: &SeedState, k: &KinematicSample) -> SeedState {
    let g = k.gradient;
    let lambda = g[1][1];
    let p: Mat2 = [[0.0, g[0][1]], [g[1][0], 0.0]];
    let a_inv = matrix::diag(s.i.exp(), (-s.i).exp());
    SeedState {
        x: k.velocity,
        d: matrix::mul(&g, &s.d),
        i: lambda,
        j: matrix::mul(&a_inv, &matrix::mul(&p, &s.d)),
    }
}

impl FlowEnsemble {
    /// Identity flow at `t = 0`.
    pub fn new(seeds: Vec<[f64; 2]>) -> Self {
        let m = seeds.len();
        let mut e = Self {
            positions: seeds.clone(),
            seeds,
            jacobians: vec![matrix::IDENTITY; m],
            lambda_integral: vec![0.0; m],
            remainder_integral: Some(vec![matrix::ZERO; m]),
            time: 0.0,
            margin: None,
            escaped: vec![false; m],
            max_jacobian: if m > 0 { 1.0 } else { 0.0 },
            history: Vec::new(),
        };
        e.record();
        e
    }

    /// Rebuild an ensemble from stored positions and Jacobians only; the
    /// Duhamel history is then unavailable.
    pub fn from_state(
        seeds: Vec<[f64; 2]>,
        positions: Vec<[f64; 2]>,
        jacobians: Vec<Mat2>,
        lambda_integral: Vec<f64>,
        time: f64,
    ) -> Result<Self, LagrangianError> {
        let m = seeds.len();
        if positions.len() != m || jacobians.len() != m || lambda_integral.len() != m {
            return Err(LagrangianError::Layout("per-seed arrays differ in length".into()));
        }
        let mut e = Self {
            seeds,
            positions,
            jacobians,
            lambda_integral,
            remainder_integral: None,
            time,
            margin: None,
            escaped: vec![false; m],
            max_jacobian: 0.0,
            history: Vec::new(),
        };
        e.record();
        Ok(e)
    }

    /// Flag seeds whose position leaves `|η_i| ≤ margin`.
    pub fn with_margin(mut self, margin: f64) -> Self {
        self.margin = Some(margin);
        self.check_margin();
        self
    }

    pub fn seeds(&self) -> &[[f64; 2]] {
        &self.seeds
    }

    pub fn positions(&self) -> &[[f64; 2]] {
        &self.positions
    }

    pub fn jacobians(&self) -> &[Mat2] {
        &self.jacobians
    }

    pub fn lambda_integrals(&self) -> &[f64] {
        &self.lambda_integral
    }

    pub fn remainder_integrals(&self) -> Option<&[Mat2]> {
        self.remainder_integral.as_deref()
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn len(&self) -> usize {
        self.seeds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seeds.is_empty()
    }

    /// Running maximum of `‖Dη‖` over seeds and all visited times.
    pub fn max_jacobian(&self) -> f64 {
        self.max_jacobian
    }

    pub fn history(&self) -> &[FlowRecord] {
        &self.history
    }

    pub fn is_boundary_contaminated(&self) -> bool {
        self.escaped.iter().any(|&e| e)
    }

    pub fn escaped_count(&self) -> usize {
        self.escaped.iter().filter(|&&e| e).count()
    }

    pub fn det_defects(&self) -> Vec<f64> {
        self.jacobians.iter().map(|d| (matrix::det(d) - 1.0).abs()).collect()
    }

    fn check_margin(&mut self) {
        if let Some(m) = self.margin {
            for (e, p) in self.escaped.iter_mut().zip(&self.positions) {
                if p[0].abs() > m || p[1].abs() > m {
                    *e = true;
                }
            }
        }
    }

    fn record(&mut self) {
        let max_jacobian = self.jacobians.iter().map(matrix::max_entry).fold(0.0, f64::max);
        let max_row_sum = self.jacobians.iter().map(matrix::row_sum_norm).fold(0.0, f64::max);
        let max_det_defect = self.det_defects().into_iter().fold(0.0, f64::max);
        let max_abs_lambda_integral = self.lambda_integral.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        self.max_jacobian = self.max_jacobian.max(max_jacobian);
        self.history.push(FlowRecord {
            t: self.time,
            max_jacobian,
            max_row_sum,
            max_det_defect,
            max_abs_lambda_integral,
        });
    }

    fn states(&self) -> Vec<SeedState> {
        let zero = matrix::ZERO;
        (0..self.len())
            .map(|k| SeedState {
                x: self.positions[k],
                d: self.jacobians[k],
                i: self.lambda_integral[k],
                j: self.remainder_integral.as_ref().map_or(zero, |j| j[k]),
            })
            .collect()
    }

    fn rates(
        source: &mut dyn VelocitySource,
        t: f64,
        states: &[SeedState],
    ) -> Result<Vec<SeedState>, LagrangianError> {
        let points: Vec<[f64; 2]> = states.iter().map(|s| s.x).collect();
        let samples = source.sample(t, &points)?;
        Ok(states
            .par_iter()
            .zip(samples.par_iter())
            .map(|(s, k)| rate(s, k))
            .collect())
    }

    /// One RK4 step from the current time to `time + dt`.
    pub fn advance(&mut self, source: &mut dyn VelocitySource, dt: f64) -> Result<(), LagrangianError> {
        let t = self.time;
        let y = self.states();
        let combine = |a: &[SeedState], c: f64, k: &[SeedState]| -> Vec<SeedState> {
            a.iter().zip(k).map(|(s, r)| s.axpy(c, r)).collect()
        };
        let k1 = Self::rates(source, t, &y)?;
        let k2 = Self::rates(source, t + 0.5 * dt, &combine(&y, 0.5 * dt, &k1))?;
        let k3 = Self::rates(source, t + 0.5 * dt, &combine(&y, 0.5 * dt, &k2))?;
        let k4 = Self::rates(source, t + dt, &combine(&y, dt, &k3))?;
        let next: Vec<SeedState> = (0..y.len())
            .map(|i| {
                y[i].axpy(dt / 6.0, &k1[i])
                    .axpy(dt / 3.0, &k2[i])
                    .axpy(dt / 3.0, &k3[i])
                    .axpy(dt / 6.0, &k4[i])
            })
            .collect();
        for (k, s) in next.iter().enumerate() {
            self.positions[k] = s.x;
            self.jacobians[k] = s.d;
            self.lambda_integral[k] = s.i;
            if let Some(j) = self.remainder_integral.as_mut() {
                j[k] = s.j;
            }
        }
        self.time = t + dt;
        self.check_margin();
        self.record();
        Ok(())
    }

    /// Advance to `horizon` in uniform steps no larger than `dt_max`.
    pub fn evolve(
        &mut self,
        source: &mut dyn VelocitySource,
        horizon: f64,
        dt_max: f64,
    ) -> Result<(), LagrangianError> {
        let span = horizon - self.time;
        let (steps, dt) = step_plan(span, dt_max);
        let start = self.time;
        for i in 1..=steps {
            self.advance(source, dt)?;
            // land exactly on the grid of step times
            self.time = if i == steps { horizon } else { start + i as f64 * dt };
            if let Some(last) = self.history.last_mut() {
                last.t = self.time;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lagrangian::AnalyticSource;

    fn shear() -> AnalyticSource<impl Fn(f64, [f64; 2]) -> KinematicSample + Sync> {
        AnalyticSource::new(|_, x: [f64; 2]| KinematicSample {
            velocity: [x[1].sin(), 0.0],
            gradient: [[0.0, x[1].cos()], [0.0, 0.0]],
        })
    }

    #[test]
    fn zero_flow_is_identity() {
        let mut src = AnalyticSource::new(|_, _| KinematicSample::default());
        let mut e = FlowEnsemble::new(vec![[0.3, -0.2], [1.0, 2.0]]);
        e.evolve(&mut src, 1.0, 0.1).unwrap();
        assert_eq!(e.positions(), e.seeds());
        assert!(e.jacobians().iter().all(|d| *d == matrix::IDENTITY));
        assert!(e.lambda_integrals().iter().all(|&v| v == 0.0));
        assert_eq!(e.max_jacobian(), 1.0);
        assert_eq!(e.time(), 1.0);
    }

    #[test]
    fn frozen_shear_closed_form() {
        let seeds = vec![[0.1, 0.4], [-1.0, 2.0], [0.0, -0.7]];
        let mut e = FlowEnsemble::new(seeds.clone());
        let t = 0.8;
        e.evolve(&mut shear(), t, 0.01).unwrap();
        for (k, x) in seeds.iter().enumerate() {
            let p = e.positions()[k];
            assert!((p[0] - (x[0] + t * x[1].sin())).abs() < 1e-13);
            assert!((p[1] - x[1]).abs() < 1e-15);
            let d = e.jacobians()[k];
            assert!((d[0][1] - t * x[1].cos()).abs() < 1e-13);
            assert!((matrix::det(&d) - 1.0).abs() < 1e-14);
        }
        let last = e.history().last().unwrap();
        let c = seeds.iter().map(|x| x[1].cos().abs()).fold(0.0, f64::max);
        assert!((last.max_row_sum - (1.0 + t * c)).abs() < 1e-13);
        // the entrywise norm only sees the shear entry once it exceeds 1
        assert!((last.max_jacobian - 1.0f64.max(t * c)).abs() < 1e-13);
    }

    #[test]
    fn margin_flags_escapes() {
        let mut src = AnalyticSource::new(|_, _| KinematicSample {
            velocity: [1.0, 0.0],
            gradient: matrix::ZERO,
        });
        let mut e = FlowEnsemble::new(vec![[0.0, 0.0], [-3.0, 0.0]]).with_margin(1.0);
        assert_eq!(e.escaped_count(), 1);
        e.evolve(&mut src, 1.5, 0.5).unwrap();
        assert_eq!(e.escaped_count(), 2);
        assert!(e.is_boundary_contaminated());
    }
}

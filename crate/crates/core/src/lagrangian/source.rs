//! Velocity fields seen by the particles.

use rayon::prelude::*;

use super::matrix::Mat2;
use super::LagrangianError;
use crate::field::{ScalarField, VectorField};
use crate::grid::GridSpec;
use crate::sample::LagrangeStencil;
use crate::solver::{Stepper, Trajectory};
use crate::spectral::{Kinematics, Spectrum};

/// Lagrange order used to sample grid fields at particle positions.
pub const DEFAULT_PARTICLE_ORDER: usize = 8;

/// Velocity and its gradient at one point; `gradient[i][j] = ∂_j u_i`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct KinematicSample {
    pub velocity: [f64; 2],
    pub gradient: Mat2,
}

pub trait VelocitySource {
    fn sample(&mut self, t: f64, points: &[[f64; 2]]) -> Result<Vec<KinematicSample>, LagrangianError>;

    /// Box carrying the fields, when they are grid based.
    fn grid(&self) -> Option<&GridSpec> {
        None
    }
}

/// Closed-form velocity field.
pub struct AnalyticSource<F> {
    f: F,
}

impl<F> AnalyticSource<F>
where
    F: Fn(f64, [f64; 2]) -> KinematicSample + Sync,
{
    pub fn new(f: F) -> Self {
        Self { f }
    }
}

impl<F> VelocitySource for AnalyticSource<F>
where
    F: Fn(f64, [f64; 2]) -> KinematicSample + Sync,
{
    fn sample(&mut self, t: f64, points: &[[f64; 2]]) -> Result<Vec<KinematicSample>, LagrangianError> {
        Ok(points.par_iter().map(|&p| (self.f)(t, p)).collect())
    }
}

pub(crate) fn sample_kinematics(
    grid: &GridSpec,
    kin: &Kinematics,
    order: usize,
    points: &[[f64; 2]],
) -> Vec<KinematicSample> {
    points
        .par_iter()
        .map(|&p| {
            let s = LagrangeStencil::new(grid, p, order);
            let g11 = s.apply(&kin.g11);
            KinematicSample {
                velocity: [s.apply(&kin.u1), s.apply(&kin.u2)],
                // same weights for g11 and g22 = -g11, so the sample stays trace-free
                gradient: [[g11, s.apply(&kin.g12)], [s.apply(&kin.g21), s.apply(&kin.g22)]],
            }
        })
        .collect()
}

/// Time-independent grid field, sampled by Lagrange interpolation.
pub struct GridSource {
    grid: GridSpec,
    kin: Kinematics,
    order: usize,
}

impl GridSource {
    pub fn from_velocity(v: &VectorField) -> Self {
        Self {
            grid: *v.grid(),
            kin: Kinematics::from_velocity(v),
            order: DEFAULT_PARTICLE_ORDER,
        }
    }

    pub fn from_vorticity(w: &ScalarField) -> Result<Self, LagrangianError> {
        Ok(Self {
            grid: *w.grid(),
            kin: Kinematics::from_vorticity(w)?,
            order: DEFAULT_PARTICLE_ORDER,
        })
    }

    pub fn with_order(mut self, order: usize) -> Self {
        self.order = order;
        self
    }
}

impl VelocitySource for GridSource {
    fn sample(&mut self, _t: f64, points: &[[f64; 2]]) -> Result<Vec<KinematicSample>, LagrangianError> {
        Ok(sample_kinematics(&self.grid, &self.kin, self.order, points))
    }

    fn grid(&self) -> Option<&GridSpec> {
        Some(&self.grid)
    }
}

struct Interval {
    index: usize,
    t0: f64,
    t1: f64,
    w0: Spectrum,
    r0: Spectrum,
    w1: Spectrum,
    r1: Spectrum,
}

/// Velocity of a stored solver trajectory. Between snapshots the vorticity is
/// interpolated by cubic Hermite polynomials in time, with the rates `∂_tω`
/// recomputed from the equation; the velocity and its gradient then follow
/// spectrally, so `∇u` stays exactly trace-free.
pub struct TrajectorySource<'a> {
    traj: &'a Trajectory,
    stepper: Stepper,
    order: usize,
    interval: Option<Interval>,
    cached: Option<(f64, Kinematics)>,
}

impl<'a> TrajectorySource<'a> {
    pub fn new(traj: &'a Trajectory) -> Result<Self, LagrangianError> {
        Ok(Self {
            traj,
            stepper: Stepper::new(*traj.grid(), traj.config)?,
            order: DEFAULT_PARTICLE_ORDER,
            interval: None,
            cached: None,
        })
    }

    pub fn with_order(mut self, order: usize) -> Self {
        self.order = order;
        self
    }

    fn load_interval(&mut self, index: usize) {
        if self.interval.as_ref().map(|iv| iv.index) == Some(index) {
            return;
        }
        let snaps = &self.traj.snapshots;
        let (t0, f0) = &snaps[index];
        let (t1, f1) = &snaps[index + 1];
        // reuse the right end of the previous interval when stepping forward
        let (w0, r0) = match self.interval.take() {
            Some(iv) if iv.index + 1 == index => (iv.w1, iv.r1),
            _ => {
                let w = Spectrum::of(f0);
                let r = self.stepper.vorticity_rate(&w);
                (w, r)
            }
        };
        let w1 = Spectrum::of(f1);
        let r1 = self.stepper.vorticity_rate(&w1);
        self.interval = Some(Interval {
            index,
            t0: *t0,
            t1: *t1,
            w0,
            r0,
            w1,
            r1,
        });
    }

    /// Kinematic fields on the grid at time `t`.
    pub fn kinematics_at(&mut self, t: f64) -> Result<&Kinematics, LagrangianError> {
        let snaps = &self.traj.snapshots;
        let start = snaps[0].0;
        let end = snaps[snaps.len() - 1].0;
        let slack = 1e-12 * end.abs().max(1.0);
        if !(t >= start - slack && t <= end + slack) {
            return Err(LagrangianError::OutOfRange { t, start, end });
        }
        if self.cached.as_ref().map(|(s, _)| *s) != Some(t) {
            let kin = if snaps.len() == 1 {
                Kinematics::from_vorticity(&snaps[0].1)?
            } else {
                let t = t.clamp(start, end);
                let index = snaps
                    .windows(2)
                    .position(|w| t <= w[1].0)
                    .unwrap_or(snaps.len() - 2);
                self.load_interval(index);
                let iv = self.interval.as_ref().expect("interval loaded");
                let dt = iv.t1 - iv.t0;
                let th = ((t - iv.t0) / dt).clamp(0.0, 1.0);
                let th2 = th * th;
                let th3 = th2 * th;
                let h00 = 2.0 * th3 - 3.0 * th2 + 1.0;
                let h10 = (th3 - 2.0 * th2 + th) * dt;
                let h01 = -2.0 * th3 + 3.0 * th2;
                let h11 = (th3 - th2) * dt;
                let data = iv
                    .w0
                    .data()
                    .iter()
                    .zip(iv.r0.data())
                    .zip(iv.w1.data().iter().zip(iv.r1.data()))
                    .map(|((a, ra), (b, rb))| h00 * a + h10 * ra + h01 * b + h11 * rb)
                    .collect();
                Kinematics::from_spectrum(&Spectrum::from_raw(*self.traj.grid(), data))
            };
            self.cached = Some((t, kin));
        }
        Ok(&self.cached.as_ref().expect("cached").1)
    }
}

impl VelocitySource for TrajectorySource<'_> {
    fn sample(&mut self, t: f64, points: &[[f64; 2]]) -> Result<Vec<KinematicSample>, LagrangianError> {
        let grid = *self.traj.grid();
        let order = self.order;
        let kin = self.kinematics_at(t)?;
        Ok(sample_kinematics(&grid, kin, order, points))
    }

    fn grid(&self) -> Option<&GridSpec> {
        Some(self.traj.grid())
    }
}

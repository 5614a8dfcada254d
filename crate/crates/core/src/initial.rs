//! Initial vorticity families: the multi-scale odd quadrupole `ω₀` and the
//! localized high-frequency perturbations `β_n`.
//!
//! ```text
//! φ₀(x)   = Σ_ε ε₁ε₂ φ(x₁ − ε₁, x₂ − ε₂)
//! φ_k(x)  = 2^{(−1+2/p)k} φ₀(2^k x)
//! ω₀      = M⁻² N^{−1/p} Σ_{N₀ ≤ k ≤ N₀+N} φ_k
//! β_{k,λ} = λ^{−1+2/p} k^{−1/2} Σ_ε ε₁ε₂ ρ(λ(x − x*_ε)) sin(k x₁),   x*_ε = (ε₁x*₁, ε₂x*₂)
//! ```
//!
//! with `λ = 3n` and `k = λ²` for the `n`-th perturbation.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::{FieldError, ScalarField};
use crate::grid::GridSpec;

const SIGNS: [(f64, f64); 4] = [(1.0, 1.0), (-1.0, 1.0), (1.0, -1.0), (-1.0, -1.0)];

#[derive(Debug, Error)]
pub enum ConstructionError {
    #[error("{field}: {message}")]
    InvalidParam { field: &'static str, message: String },
    #[error(
        "unresolvable: smallest length scale {scale} is below twice the grid spacing {spacing}"
    )]
    Unresolvable { scale: f64, spacing: f64 },
    #[error("perturbation supports overlap or leave the box: {0}")]
    SupportPlacement(String),
    #[error(transparent)]
    Field(#[from] FieldError),
}

fn invalid(field: &'static str, message: impl Into<String>) -> ConstructionError {
    ConstructionError::InvalidParam {
        field,
        message: message.into(),
    }
}

/// The scalar parameters of the construction. Missing fields take the preset
/// values; a missing `T_horizon` becomes `min(1, M⁻³)` for the given `M`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "RawParams")]
pub struct ConstructionParams {
    /// Amplitude and time-scale parameter `M`.
    #[serde(rename = "M")]
    pub amplitude: f64,
    /// Number of dyadic scales beyond the first, `N`.
    #[serde(rename = "N")]
    pub scale_count: u32,
    /// First dyadic scale index `N₀`.
    #[serde(rename = "N0")]
    pub first_scale: u32,
    /// Lebesgue exponent `p`.
    #[serde(rename = "p")]
    pub exponent: f64,
    /// Perturbation index `n`; `λ = 3n`, `k = λ²`.
    #[serde(rename = "n_pert")]
    pub perturbation: u32,
    /// Perturbation center `x*` in the first quadrant.
    pub x_star: [f64; 2],
    /// Radius around `x*` on which the flow's stretching stays large.
    pub delta: f64,
    /// Time horizon `T ≤ min(1, M⁻³)`.
    #[serde(rename = "T_horizon")]
    pub horizon: f64,
}

impl Default for ConstructionParams {
    fn default() -> Self {
        let m = 3.0;
        Self {
            amplitude: m,
            scale_count: 3,
            first_scale: 1,
            exponent: 2.5,
            perturbation: 1,
            x_star: [1.0, 1.0],
            delta: 0.5,
            horizon: default_horizon(m),
        }
    }
}

#[derive(Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawParams {
    #[serde(rename = "M")]
    amplitude: f64,
    #[serde(rename = "N")]
    scale_count: u32,
    #[serde(rename = "N0")]
    first_scale: u32,
    #[serde(rename = "p")]
    exponent: f64,
    #[serde(rename = "n_pert")]
    perturbation: u32,
    x_star: [f64; 2],
    delta: f64,
    #[serde(rename = "T_horizon")]
    horizon: Option<f64>,
}

impl Default for RawParams {
    fn default() -> Self {
        let p = ConstructionParams::default();
        Self {
            amplitude: p.amplitude,
            scale_count: p.scale_count,
            first_scale: p.first_scale,
            exponent: p.exponent,
            perturbation: p.perturbation,
            x_star: p.x_star,
            delta: p.delta,
            horizon: None,
        }
    }
}

impl From<RawParams> for ConstructionParams {
    fn from(r: RawParams) -> Self {
        Self {
            amplitude: r.amplitude,
            scale_count: r.scale_count,
            first_scale: r.first_scale,
            exponent: r.exponent,
            perturbation: r.perturbation,
            x_star: r.x_star,
            delta: r.delta,
            horizon: r.horizon.unwrap_or_else(|| default_horizon(r.amplitude)),
        }
    }
}

/// `min(1, M⁻³)`.
pub fn default_horizon(amplitude: f64) -> f64 {
    amplitude.powi(-3).min(1.0)
}

impl ConstructionParams {
    pub fn lambda(&self) -> f64 {
        perturbation_lambda(self.perturbation)
    }

    pub fn frequency(&self) -> f64 {
        perturbation_frequency(self.perturbation)
    }

    /// Radius of the smallest bump, `2^{−(N₀+N+2)}`.
    pub fn smallest_scale(&self) -> f64 {
        2f64.powi(-((self.first_scale + self.scale_count + 2) as i32))
    }

    /// Check the parameter ranges and resolvability on `grid`.
    pub fn validate(&self, grid: &GridSpec) -> Result<(), ConstructionError> {
        if !(self.amplitude.is_finite() && self.amplitude >= 2.0) {
            return Err(invalid("M", "M must be at least 2"));
        }
        if self.scale_count < 1 {
            return Err(invalid("N", "N must be at least 1"));
        }
        if self.first_scale < 1 {
            return Err(invalid("N0", "N0 must be at least 1"));
        }
        if !(self.exponent > 2.0 && self.exponent <= 3.0) {
            return Err(invalid("p", "p must lie in (2, 3]"));
        }
        if self.perturbation < 1 {
            return Err(invalid("n_pert", "n_pert must be at least 1"));
        }
        if !(self.delta.is_finite() && self.delta > 0.0) {
            return Err(invalid("delta", "delta must be positive"));
        }
        let cap = default_horizon(self.amplitude);
        if !(self.horizon > 0.0 && self.horizon <= cap) {
            return Err(invalid(
                "T_horizon",
                format!("T_horizon must lie in (0, min(1, M^-3)] = (0, {cap}]"),
            ));
        }
        check_scale(self.smallest_scale(), grid)?;
        check_scale(2.0 / self.lambda(), grid)?;
        check_placement(self.x_star, self.lambda(), grid)
    }
}

pub fn perturbation_lambda(n: u32) -> f64 {
    3.0 * n as f64
}

pub fn perturbation_frequency(n: u32) -> f64 {
    let l = perturbation_lambda(n);
    l * l
}

fn check_scale(scale: f64, grid: &GridSpec) -> Result<(), ConstructionError> {
    let spacing = grid.spacing();
    if scale < 2.0 * spacing {
        Err(ConstructionError::Unresolvable { scale, spacing })
    } else {
        Ok(())
    }
}

/// The four balls `B(x*_ε, 2/λ)` must be pairwise disjoint and stay inside
/// the central half of the box.
pub fn check_placement(x_star: [f64; 2], lambda: f64, grid: &GridSpec) -> Result<(), ConstructionError> {
    let r = 2.0 / lambda;
    let limit = 0.25 * grid.side_length();
    for (i, &c) in x_star.iter().enumerate() {
        if !c.is_finite() || c.abs() < r {
            return Err(ConstructionError::SupportPlacement(format!(
                "|x*_{}| = {} is closer than 2/lambda = {r} to the axis",
                i + 1,
                c.abs()
            )));
        }
        if c.abs() + r > limit {
            return Err(ConstructionError::SupportPlacement(format!(
                "|x*_{}| + 2/lambda = {} exceeds the safe margin L/4 = {limit}",
                i + 1,
                c.abs() + r
            )));
        }
    }
    Ok(())
}

/// Radial bump profiles with amplitude cap 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BumpProfile {
    /// `exp(1 − 1/(1 − 16|x|²))` on `|x| < 1/4`, zero outside; peak 1 at the origin.
    Compact,
    /// Smooth plateau: 1 on `|x| ≤ 1`, 0 on `|x| ≥ 2`, `C^∞` transition between.
    Plateau,
}

fn smooth_step_kernel(t: f64) -> f64 {
    if t > 0.0 {
        (-1.0 / t).exp()
    } else {
        0.0
    }
}

fn smooth_step_kernel_derivative(t: f64) -> f64 {
    if t > 0.0 {
        (-1.0 / t).exp() / (t * t)
    } else {
        0.0
    }
}

impl BumpProfile {
    pub fn support_radius(self) -> f64 {
        match self {
            BumpProfile::Compact => 0.25,
            BumpProfile::Plateau => 2.0,
        }
    }

    pub fn radial(self, r: f64) -> f64 {
        match self {
            BumpProfile::Compact => {
                let s = 4.0 * r;
                if s < 1.0 {
                    (1.0 - 1.0 / (1.0 - s * s)).exp()
                } else {
                    0.0
                }
            }
            BumpProfile::Plateau => {
                if r <= 1.0 {
                    1.0
                } else if r >= 2.0 {
                    0.0
                } else {
                    let a = smooth_step_kernel(2.0 - r);
                    let b = smooth_step_kernel(r - 1.0);
                    a / (a + b)
                }
            }
        }
    }

    /// Derivative of [`radial`](Self::radial) in `r`.
    pub fn radial_derivative(self, r: f64) -> f64 {
        match self {
            BumpProfile::Compact => {
                let s = 4.0 * r;
                if s < 1.0 {
                    let q = 1.0 - s * s;
                    -8.0 * s / (q * q) * (1.0 - 1.0 / q).exp()
                } else {
                    0.0
                }
            }
            BumpProfile::Plateau => {
                if r <= 1.0 || r >= 2.0 {
                    0.0
                } else {
                    let a = smooth_step_kernel(2.0 - r);
                    let b = smooth_step_kernel(r - 1.0);
                    let da = -smooth_step_kernel_derivative(2.0 - r);
                    let db = smooth_step_kernel_derivative(r - 1.0);
                    (da * b - a * db) / ((a + b) * (a + b))
                }
            }
        }
    }

    pub fn value(self, x: [f64; 2]) -> f64 {
        self.radial(x[0].hypot(x[1]))
    }

    pub fn gradient(self, x: [f64; 2]) -> [f64; 2] {
        let r = x[0].hypot(x[1]);
        if r == 0.0 {
            return [0.0, 0.0];
        }
        let d = self.radial_derivative(r) / r;
        [d * x[0], d * x[1]]
    }
}

/// The odd quadrupole `Σ_ε ε₁ε₂ φ(x − ε)` as a point function.
pub fn quadrupole_at(profile: BumpProfile, x: [f64; 2]) -> f64 {
    let reach = profile.support_radius();
    let mut acc = 0.0;
    for (e1, e2) in SIGNS {
        let d = [x[0] - e1, x[1] - e2];
        if d[0].abs() < reach && d[1].abs() < reach {
            acc += e1 * e2 * profile.value(d);
        }
    }
    acc
}

/// Gradient of [`quadrupole_at`].
pub fn quadrupole_gradient_at(profile: BumpProfile, x: [f64; 2]) -> [f64; 2] {
    let mut acc = [0.0, 0.0];
    for (e1, e2) in SIGNS {
        let g = profile.gradient([x[0] - e1, x[1] - e2]);
        acc[0] += e1 * e2 * g[0];
        acc[1] += e1 * e2 * g[1];
    }
    acc
}

pub fn quadrupole(profile: BumpProfile, grid: GridSpec) -> ScalarField {
    ScalarField::from_fn(grid, |x1, x2| quadrupole_at(profile, [x1, x2]))
}

/// Weight `2^{(−1+2/p)k}` of the `k`-th dyadic piece.
pub fn scale_weight(k: u32, p: f64) -> f64 {
    2f64.powf((-1.0 + 2.0 / p) * k as f64)
}

/// `φ_k(x) = 2^{(−1+2/p)k} φ₀(2^k x)` as a point function.
pub fn scale_piece_at(k: u32, p: f64, x: [f64; 2]) -> f64 {
    let s = 2f64.powi(k as i32);
    scale_weight(k, p) * quadrupole_at(BumpProfile::Compact, [s * x[0], s * x[1]])
}

pub fn scale_piece(k: u32, p: f64, grid: GridSpec) -> ScalarField {
    ScalarField::from_fn(grid, |x1, x2| scale_piece_at(k, p, [x1, x2]))
}

/// Shape parameters of `ω₀`. Unlike [`ConstructionParams`] no lower bound is
/// put on the amplitude, so toy instances can be built.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Omega0Shape {
    pub amplitude: f64,
    pub scale_count: u32,
    pub first_scale: u32,
    pub exponent: f64,
}

impl From<&ConstructionParams> for Omega0Shape {
    fn from(p: &ConstructionParams) -> Self {
        Self {
            amplitude: p.amplitude,
            scale_count: p.scale_count,
            first_scale: p.first_scale,
            exponent: p.exponent,
        }
    }
}

impl Omega0Shape {
    pub fn scales(&self) -> std::ops::RangeInclusive<u32> {
        self.first_scale..=self.first_scale + self.scale_count
    }

    /// `M⁻² N^{−1/p}`.
    pub fn prefactor(&self) -> f64 {
        self.amplitude.powi(-2) * (self.scale_count as f64).powf(-1.0 / self.exponent)
    }

    pub fn smallest_scale(&self) -> f64 {
        2f64.powi(-((self.first_scale + self.scale_count + 2) as i32))
    }

    /// Exact point value. Bump supports are disjoint, so at most one term is nonzero.
    pub fn value_at(&self, x: [f64; 2]) -> f64 {
        let c = self.prefactor();
        for k in self.scales() {
            let s = 2f64.powi(k as i32);
            // the k-th quadrupole lives in the annulus |x|∞ ∈ (2^{-k} - 2^{-k-2}, 2^{-k} + 2^{-k-2})
            let m = x[0].abs().max(x[1].abs()) * s;
            if m > 0.75 && m < 1.25 {
                return c * scale_piece_at(k, self.exponent, x);
            }
        }
        0.0
    }

    pub fn gradient_at(&self, x: [f64; 2]) -> [f64; 2] {
        let c = self.prefactor();
        for k in self.scales() {
            let s = 2f64.powi(k as i32);
            let m = x[0].abs().max(x[1].abs()) * s;
            if m > 0.75 && m < 1.25 {
                let w = c * scale_weight(k, self.exponent) * s;
                let g = quadrupole_gradient_at(BumpProfile::Compact, [s * x[0], s * x[1]]);
                return [w * g[0], w * g[1]];
            }
        }
        [0.0, 0.0]
    }
}

/// `ω₀ = M⁻² N^{−1/p} Σ φ_k` sampled on `grid`.
pub fn omega0(shape: &Omega0Shape, grid: GridSpec) -> Result<ScalarField, ConstructionError> {
    if !(shape.amplitude.is_finite() && shape.amplitude > 0.0) {
        return Err(invalid("M", "M must be positive"));
    }
    if shape.scale_count < 1 {
        return Err(invalid("N", "N must be at least 1"));
    }
    if !(shape.exponent.is_finite() && shape.exponent > 1.0) {
        return Err(invalid("p", "p must exceed 1"));
    }
    check_scale(shape.smallest_scale(), &grid)?;
    Ok(ScalarField::from_fn(grid, |x1, x2| shape.value_at([x1, x2])))
}

/// Parameters of a single perturbation `β_{k,λ}` with `λ = 3n`, `k = λ²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Perturbation {
    pub index: u32,
    pub exponent: f64,
    pub x_star: [f64; 2],
}

impl Perturbation {
    pub fn from_params(p: &ConstructionParams) -> Self {
        Self {
            index: p.perturbation,
            exponent: p.exponent,
            x_star: p.x_star,
        }
    }

    pub fn lambda(&self) -> f64 {
        perturbation_lambda(self.index)
    }

    pub fn frequency(&self) -> f64 {
        perturbation_frequency(self.index)
    }

    /// `λ^{−1+2/p} / √k`, the sup bound of `β`.
    pub fn amplitude(&self) -> f64 {
        self.lambda().powf(-1.0 + 2.0 / self.exponent) / self.frequency().sqrt()
    }

    pub fn value_at(&self, x: [f64; 2]) -> f64 {
        let l = self.lambda();
        let reach = 2.0 / l;
        let mut env = 0.0;
        for (e1, e2) in SIGNS {
            let d = [x[0] - e1 * self.x_star[0], x[1] - e2 * self.x_star[1]];
            if d[0].abs() < reach && d[1].abs() < reach {
                env += e1 * e2 * BumpProfile::Plateau.value([l * d[0], l * d[1]]);
            }
        }
        if env == 0.0 {
            0.0
        } else {
            self.amplitude() * env * (self.frequency() * x[0]).sin()
        }
    }

    /// Analytic gradient.
    pub fn gradient_at(&self, x: [f64; 2]) -> [f64; 2] {
        let l = self.lambda();
        let k = self.frequency();
        let mut env = 0.0;
        let mut denv = [0.0, 0.0];
        for (e1, e2) in SIGNS {
            let y = [
                l * (x[0] - e1 * self.x_star[0]),
                l * (x[1] - e2 * self.x_star[1]),
            ];
            env += e1 * e2 * BumpProfile::Plateau.value(y);
            let g = BumpProfile::Plateau.gradient(y);
            denv[0] += e1 * e2 * l * g[0];
            denv[1] += e1 * e2 * l * g[1];
        }
        let a = self.amplitude();
        let (s, c) = (k * x[0]).sin_cos();
        [a * (denv[0] * s + env * k * c), a * denv[1] * s]
    }
}

/// `β_{k,λ}` sampled on `grid`.
pub fn beta(pert: &Perturbation, grid: GridSpec) -> Result<ScalarField, ConstructionError> {
    if pert.index < 1 {
        return Err(invalid("n_pert", "n_pert must be at least 1"));
    }
    check_scale(2.0 / pert.lambda(), &grid)?;
    check_placement(pert.x_star, pert.lambda(), &grid)?;
    Ok(ScalarField::from_fn(grid, |x1, x2| pert.value_at([x1, x2])))
}

/// `ω_{0,n} = ω₀ + β_n`.
pub fn omega0n(omega0: &ScalarField, beta: &ScalarField) -> Result<ScalarField, FieldError> {
    omega0.add(beta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::parity_defect;

    fn preset_grid() -> GridSpec {
        GridSpec::new(8.0, 256).unwrap()
    }

    #[test]
    fn profiles_have_their_shape() {
        assert_eq!(BumpProfile::Compact.radial(0.0), 1.0);
        assert_eq!(BumpProfile::Compact.radial(0.25), 0.0);
        assert_eq!(BumpProfile::Plateau.radial(0.999), 1.0);
        assert_eq!(BumpProfile::Plateau.radial(2.0), 0.0);
        assert!((BumpProfile::Plateau.radial(1.5) - 0.5).abs() < 1e-15);
        for i in 0..200 {
            let r = i as f64 * 0.0125;
            for p in [BumpProfile::Compact, BumpProfile::Plateau] {
                let v = p.radial(r);
                assert!((0.0..=1.0).contains(&v));
            }
        }
    }

    #[test]
    fn radial_derivatives_match_differences() {
        for p in [BumpProfile::Compact, BumpProfile::Plateau] {
            let reach = p.support_radius();
            for i in 1..40 {
                let r = reach * i as f64 / 40.0;
                let h = 1e-6 * reach;
                let fd = (p.radial(r + h) - p.radial(r - h)) / (2.0 * h);
                assert!(
                    (fd - p.radial_derivative(r)).abs() < 1e-6 * (1.0 + fd.abs()) / reach,
                    "{p:?} r={r}: {fd} vs {}",
                    p.radial_derivative(r)
                );
            }
        }
    }

    #[test]
    fn quadrupole_peak_and_symmetry() {
        assert_eq!(quadrupole_at(BumpProfile::Compact, [1.0, 1.0]), 1.0);
        assert_eq!(quadrupole_at(BumpProfile::Compact, [-1.0, 1.0]), -1.0);
        let f = quadrupole(BumpProfile::Compact, preset_grid());
        let d = parity_defect(&f);
        assert_eq!(d.odd1, 0.0);
        assert_eq!(d.odd2, 0.0);
        assert!(f.integral().abs() < 1e-14);
    }

    #[test]
    fn params_validation() {
        let g = GridSpec::new(8.0, 1024).unwrap();
        let p = ConstructionParams::default();
        p.validate(&g).unwrap();
        assert_eq!(p.smallest_scale(), 2.0 * g.spacing());

        let bad = ConstructionParams { exponent: 1.5, ..p };
        let e = bad.validate(&g).unwrap_err().to_string();
        assert!(e.contains("p must lie in (2, 3]"), "{e}");

        let fine = ConstructionParams { scale_count: 4, ..p };
        assert!(matches!(
            fine.validate(&g),
            Err(ConstructionError::Unresolvable { .. })
        ));

        let near_axis = ConstructionParams {
            x_star: [0.5, 1.0],
            ..p
        };
        assert!(matches!(
            near_axis.validate(&g),
            Err(ConstructionError::SupportPlacement(_))
        ));
    }

    #[test]
    fn toy_omega0_with_unit_amplitude() {
        let shape = Omega0Shape {
            amplitude: 1.0,
            scale_count: 1,
            first_scale: 1,
            exponent: 2.7,
        };
        let g = preset_grid();
        let w = omega0(&shape, g).unwrap();
        let direct = scale_piece(1, 2.7, g).add(&scale_piece(2, 2.7, g)).unwrap();
        assert!(w.sub(&direct).unwrap().grid_max_abs() < 1e-15);
        assert!(w.integral().abs() < 1e-14);
        assert!(w.is_mean_zero());
    }

    #[test]
    fn beta_at_center_and_parity() {
        let g = GridSpec::new(8.0, 512).unwrap();
        let pert = Perturbation {
            index: 1,
            exponent: 2.5,
            x_star: [1.0, 1.0],
        };
        let want = pert.amplitude() * (9.0f64).sin();
        assert!((pert.value_at([1.0, 1.0]) - want).abs() < 1e-15);
        let b = beta(&pert, g).unwrap();
        let d = parity_defect(&b);
        assert!(d.even1 <= 1e-12 && d.odd2 <= 1e-12, "{d:?}");
        assert!(b.grid_max_abs() <= pert.amplitude());
        assert!(b.is_mean_zero());
    }
}

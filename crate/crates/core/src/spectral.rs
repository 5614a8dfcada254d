//! Fourier representation of grid fields and the nonlocal operators built on
//! it: `Δ⁻¹`, the Biot–Savart law `∇⊥Δ⁻¹`, double Riesz transforms and
//! spectral derivatives.
//!
//! Derivative symbols `i k` vanish on the Nyquist modes: a real grid function
//! cannot carry the odd Nyquist component, and dropping it keeps every
//! spectrum Hermitian so pairs of real fields can share one complex FFT.

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::fft::Fft2;
use crate::field::{ensure_same_grid, max_abs, FieldError, ScalarField, VectorField};
use crate::grid::GridSpec;
use crate::sample::FourierSampler;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    X1,
    X2,
}

impl Axis {
    pub const BOTH: [Axis; 2] = [Axis::X1, Axis::X2];

    pub fn index(self) -> usize {
        match self {
            Axis::X1 => 0,
            Axis::X2 => 1,
        }
    }
}

/// Fourier coefficients of a real field, FFT index order, row-major like the field.
#[derive(Debug, Clone)]
pub struct Spectrum {
    grid: GridSpec,
    data: Vec<Complex64>,
}

impl Spectrum {
    pub fn of(f: &ScalarField) -> Self {
        let grid = *f.grid();
        let mut data: Vec<Complex64> = f.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
        Fft2::get(grid.n()).forward(&mut data);
        Self { grid, data }
    }

    /// Spectra of two real fields from a single complex transform of `f + i g`.
    pub fn pair_of(f: &ScalarField, g: &ScalarField) -> Result<(Self, Self), FieldError> {
        ensure_same_grid(f.grid(), g.grid())?;
        let grid = *f.grid();
        let n = grid.n();
        let mut z: Vec<Complex64> = f
            .values()
            .iter()
            .zip(g.values())
            .map(|(&a, &b)| Complex64::new(a, b))
            .collect();
        Fft2::get(n).forward(&mut z);
        let mut a = vec![Complex64::new(0.0, 0.0); z.len()];
        let mut b = vec![Complex64::new(0.0, 0.0); z.len()];
        for m2 in 0..n {
            let r2 = (n - m2) % n;
            for m1 in 0..n {
                let r1 = (n - m1) % n;
                let zk = z[m2 * n + m1];
                let zr = z[r2 * n + r1].conj();
                a[m2 * n + m1] = 0.5 * (zk + zr);
                b[m2 * n + m1] = Complex64::new(0.0, -0.5) * (zk - zr);
            }
        }
        Ok((Self { grid, data: a }, Self { grid, data: b }))
    }

    pub(crate) fn from_raw(grid: GridSpec, data: Vec<Complex64>) -> Self {
        debug_assert_eq!(data.len(), grid.len());
        Self { grid, data }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub(crate) fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    /// Mean of the underlying field.
    pub fn mean(&self) -> f64 {
        self.data[0].re / self.grid.len() as f64
    }

    /// Back to grid values (real part of the inverse transform).
    pub fn to_field(&self) -> ScalarField {
        let mut z = self.data.clone();
        Fft2::get(self.grid.n()).inverse(&mut z);
        ScalarField::new(self.grid, z.into_iter().map(|c| c.re).collect())
            .expect("inverse transform of a finite spectrum")
    }

    /// Multiply every coefficient by `symbol(m1, m2)`.
    pub fn map<F>(&self, symbol: F) -> Self
    where
        F: Fn(usize, usize) -> Complex64 + Sync,
    {
        let n = self.grid.n();
        let mut data = self.data.clone();
        data.par_chunks_mut(n).enumerate().for_each(|(m2, row)| {
            for (m1, c) in row.iter_mut().enumerate() {
                *c *= symbol(m1, m2);
            }
        });
        Self {
            grid: self.grid,
            data,
        }
    }

    /// Translate the trigonometric interpolant by `s`: the result samples
    /// `f(x + s)` on the original nodes.
    pub fn shifted(&self, s: [f64; 2]) -> Self {
        let f1 = shift_factors(&self.grid, s[0]);
        let f2 = shift_factors(&self.grid, s[1]);
        self.map(|m1, m2| f1[m1] * f2[m2])
    }
}

/// Grid values of two real fields whose spectra are `a` and `b`, from one
/// complex inverse transform of `a + i b`.
pub fn inverse_pair(a: &Spectrum, b: &Spectrum) -> (ScalarField, ScalarField) {
    let grid = a.grid;
    let mut z: Vec<Complex64> = a
        .data
        .iter()
        .zip(&b.data)
        .map(|(x, y)| x + Complex64::new(0.0, 1.0) * y)
        .collect();
    Fft2::get(grid.n()).inverse(&mut z);
    let re = z.iter().map(|c| c.re).collect();
    let im = z.iter().map(|c| c.im).collect();
    (
        ScalarField::new(grid, re).expect("finite"),
        ScalarField::new(grid, im).expect("finite"),
    )
}

/// Per-axis factors `e^{i k s}` with the Nyquist mode treated as `cos(k s)`,
/// so shifted spectra of real fields stay Hermitian.
pub(crate) fn shift_factors(grid: &GridSpec, s: f64) -> Vec<Complex64> {
    grid.wavenumbers()
        .iter()
        .enumerate()
        .map(|(m, &k)| {
            if grid.is_nyquist(m) {
                Complex64::new((k * s).cos(), 0.0)
            } else {
                Complex64::from_polar(1.0, k * s)
            }
        })
        .collect()
}

/// Wavenumber tables shared by the operators below.
#[derive(Debug, Clone)]
pub(crate) struct Symbols {
    pub k: Vec<f64>,
    nyquist: usize,
}

impl Symbols {
    pub fn new(grid: &GridSpec) -> Self {
        Self {
            k: grid.wavenumbers(),
            nyquist: grid.n() / 2,
        }
    }

    /// Derivative symbol `i k_m`, zero on the Nyquist mode.
    #[inline]
    pub fn deriv(&self, m: usize) -> Complex64 {
        if m == self.nyquist {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(0.0, self.k[m])
        }
    }

    /// Real derivative wavenumber (`k_m`, zero on Nyquist).
    #[inline]
    pub fn kd(&self, m: usize) -> f64 {
        if m == self.nyquist {
            0.0
        } else {
            self.k[m]
        }
    }

    /// `1/|k|²` with the zero mode mapped to zero.
    #[inline]
    pub fn inv_k2(&self, m1: usize, m2: usize) -> f64 {
        let k2 = self.k[m1] * self.k[m1] + self.k[m2] * self.k[m2];
        if k2 == 0.0 {
            0.0
        } else {
            1.0 / k2
        }
    }

    #[inline]
    pub fn axis_deriv(&self, axis: Axis, m1: usize, m2: usize) -> Complex64 {
        match axis {
            Axis::X1 => self.deriv(m1),
            Axis::X2 => self.deriv(m2),
        }
    }
}

fn require_mean_zero(w: &ScalarField) -> Result<(), FieldError> {
    if w.is_mean_zero() {
        Ok(())
    } else {
        Err(FieldError::ZeroModeUndefined { mean: w.mean() })
    }
}

/// Stream function `ψ = Δ⁻¹ w` with the zero mode set to zero.
pub fn poisson_inverse(w: &ScalarField) -> Result<ScalarField, FieldError> {
    require_mean_zero(w)?;
    let sym = Symbols::new(w.grid());
    let psi = Spectrum::of(w).map(|m1, m2| Complex64::new(-sym.inv_k2(m1, m2), 0.0));
    Ok(psi.to_field().project_mean_zero())
}

/// Velocity `u = ∇⊥Δ⁻¹ w` with `∇⊥ = (-∂₂, ∂₁)`.
pub fn biot_savart(w: &ScalarField) -> Result<VectorField, FieldError> {
    require_mean_zero(w)?;
    let (s1, s2) = velocity_spectra(&Spectrum::of(w));
    let (u1, u2) = inverse_pair(&s1, &s2);
    VectorField::new(u1, u2)
}

/// Velocity spectra from a vorticity spectrum.
pub(crate) fn velocity_spectra(w: &Spectrum) -> (Spectrum, Spectrum) {
    let sym = Symbols::new(w.grid());
    // ψ̂ = -ŵ/|k|², û₁ = -∂₂ψ̂, û₂ = ∂₁ψ̂
    let u1 = w.map(|m1, m2| sym.deriv(m2) * sym.inv_k2(m1, m2));
    let u2 = w.map(|m1, m2| -sym.deriv(m1) * sym.inv_k2(m1, m2));
    (u1, u2)
}

/// Double Riesz transform `R_ij w = ∂_i∂_jΔ⁻¹ w`, symbol `k_i k_j / |k|²`.
pub fn riesz(w: &ScalarField, i: Axis, j: Axis) -> Result<ScalarField, FieldError> {
    require_mean_zero(w)?;
    Ok(riesz_spectrum(&Spectrum::of(w), i, j).to_field())
}

pub(crate) fn riesz_spectrum(w: &Spectrum, i: Axis, j: Axis) -> Spectrum {
    let sym = Symbols::new(w.grid());
    if i == j {
        // even symbol: the Nyquist modes are kept so that R₁₁ + R₂₂ = id exactly
        w.map(|m1, m2| {
            let k = match i {
                Axis::X1 => sym.k[m1],
                Axis::X2 => sym.k[m2],
            };
            Complex64::new(k * k * sym.inv_k2(m1, m2), 0.0)
        })
    } else {
        w.map(|m1, m2| Complex64::new(sym.kd(m1) * sym.kd(m2) * sym.inv_k2(m1, m2), 0.0))
    }
}

/// `R_ij w` at off-grid points through the trigonometric interpolant, without
/// forming the transformed field.
pub fn riesz_at(w: &ScalarField, i: Axis, j: Axis, points: &[[f64; 2]]) -> Result<Vec<f64>, FieldError> {
    require_mean_zero(w)?;
    let spec = riesz_spectrum(&Spectrum::of(w), i, j);
    Ok(FourierSampler::from_spectrum(spec).eval_many(points))
}

/// The three independent double Riesz transforms `(R₁₁w, R₂₂w, R₁₂w)`.
pub fn riesz_all(w: &ScalarField) -> Result<[ScalarField; 3], FieldError> {
    require_mean_zero(w)?;
    let spec = Spectrum::of(w);
    let (r11, r22) = inverse_pair(
        &riesz_spectrum(&spec, Axis::X1, Axis::X1),
        &riesz_spectrum(&spec, Axis::X2, Axis::X2),
    );
    let r12 = riesz_spectrum(&spec, Axis::X1, Axis::X2).to_field();
    Ok([r11, r22, r12])
}

/// First-order operator `∂_j Δ⁻¹ w`.
pub fn inverse_derivative(w: &ScalarField, j: Axis) -> Result<ScalarField, FieldError> {
    require_mean_zero(w)?;
    let sym = Symbols::new(w.grid());
    Ok(Spectrum::of(w)
        .map(|m1, m2| -sym.axis_deriv(j, m1, m2) * sym.inv_k2(m1, m2))
        .to_field())
}

/// Spectral partial derivative.
pub fn partial(f: &ScalarField, axis: Axis) -> ScalarField {
    let sym = Symbols::new(f.grid());
    Spectrum::of(f)
        .map(|m1, m2| sym.axis_deriv(axis, m1, m2))
        .to_field()
}

/// Spectral gradient `(∂₁f, ∂₂f)`.
pub fn gradient(f: &ScalarField) -> VectorField {
    let sym = Symbols::new(f.grid());
    let spec = Spectrum::of(f);
    let d1 = spec.map(|m1, _| sym.deriv(m1));
    let d2 = spec.map(|_, m2| sym.deriv(m2));
    let (g1, g2) = inverse_pair(&d1, &d2);
    VectorField::new(g1, g2).expect("same grid")
}

/// Spectral divergence `∂₁u₁ + ∂₂u₂`.
pub fn divergence(v: &VectorField) -> ScalarField {
    let sym = Symbols::new(v.grid());
    let (a, b) = Spectrum::pair_of(v.u1(), v.u2()).expect("same grid");
    let mut out = a.map(|m1, _| sym.deriv(m1));
    let b = b.map(|_, m2| sym.deriv(m2));
    for (o, x) in out.data.iter_mut().zip(&b.data) {
        *o += x;
    }
    out.to_field()
}

/// Spectral scalar curl `∂₁u₂ − ∂₂u₁`.
pub fn rot(v: &VectorField) -> ScalarField {
    let sym = Symbols::new(v.grid());
    let (a, b) = Spectrum::pair_of(v.u1(), v.u2()).expect("same grid");
    let mut out = b.map(|m1, _| sym.deriv(m1));
    let a = a.map(|_, m2| sym.deriv(m2));
    for (o, x) in out.data.iter_mut().zip(&a.data) {
        *o -= x;
    }
    out.to_field()
}

/// Velocity and its gradient for the flow of a vorticity spectrum.
///
/// `gradient[i][j] = ∂_j u_i`; the diagonal is `∓R₁₂w` and the trace vanishes
/// identically because `∂₂u₂` is stored as the exact negative of `∂₁u₁`.
#[derive(Debug, Clone)]
pub struct Kinematics {
    pub u1: Vec<f64>,
    pub u2: Vec<f64>,
    pub g11: Vec<f64>,
    pub g12: Vec<f64>,
    pub g21: Vec<f64>,
    pub g22: Vec<f64>,
}

impl Kinematics {
    pub fn from_vorticity(w: &ScalarField) -> Result<Self, FieldError> {
        require_mean_zero(w)?;
        Ok(Self::from_spectrum(&Spectrum::of(w)))
    }

    pub(crate) fn from_spectrum(w: &Spectrum) -> Self {
        let sym = Symbols::new(w.grid());
        let psi = |m1: usize, m2: usize| -sym.inv_k2(m1, m2);
        let u1 = w.map(|m1, m2| -sym.deriv(m2) * psi(m1, m2));
        let u2 = w.map(|m1, m2| sym.deriv(m1) * psi(m1, m2));
        let g11 = w.map(|m1, m2| -sym.deriv(m1) * sym.deriv(m2) * psi(m1, m2));
        let g12 = w.map(|m1, m2| -sym.deriv(m2) * sym.deriv(m2) * psi(m1, m2));
        let g21 = w.map(|m1, m2| sym.deriv(m1) * sym.deriv(m1) * psi(m1, m2));
        let (u1, u2) = inverse_pair(&u1, &u2);
        let (g11, g12) = inverse_pair(&g11, &g12);
        let g21 = g21.to_field();
        let g11 = g11.into_values();
        let g22 = g11.iter().map(|v| -v).collect();
        Self {
            u1: u1.into_values(),
            u2: u2.into_values(),
            g11,
            g12: g12.into_values(),
            g21: g21.into_values(),
            g22,
        }
    }

    /// Velocity and gradient of a given (not necessarily vorticity-derived) field.
    pub fn from_velocity(v: &VectorField) -> Self {
        let sym = Symbols::new(v.grid());
        let (a, b) = Spectrum::pair_of(v.u1(), v.u2()).expect("same grid");
        let (g11, g12) = inverse_pair(&a.map(|m1, _| sym.deriv(m1)), &a.map(|_, m2| sym.deriv(m2)));
        let (g21, g22) = inverse_pair(&b.map(|m1, _| sym.deriv(m1)), &b.map(|_, m2| sym.deriv(m2)));
        Self {
            u1: v.u1().values().to_vec(),
            u2: v.u2().values().to_vec(),
            g11: g11.into_values(),
            g12: g12.into_values(),
            g21: g21.into_values(),
            g22: g22.into_values(),
        }
    }

    pub fn arrays(&self) -> [&[f64]; 6] {
        [&self.u1, &self.u2, &self.g11, &self.g12, &self.g21, &self.g22]
    }

    pub fn zeros(len: usize) -> Self {
        Self {
            u1: vec![0.0; len],
            u2: vec![0.0; len],
            g11: vec![0.0; len],
            g12: vec![0.0; len],
            g21: vec![0.0; len],
            g22: vec![0.0; len],
        }
    }
}

/// Largest absolute value of the trigonometric interpolant on a grid refined
/// `factor` times in each direction, computed from `factor²` shifted copies.
pub fn oversampled_max_abs(f: &ScalarField, factor: usize) -> f64 {
    if factor <= 1 {
        return f.grid_max_abs();
    }
    let grid = *f.grid();
    let h = grid.spacing();
    let spec = Spectrum::of(f);
    let shifts: Vec<[f64; 2]> = (0..factor)
        .flat_map(|a| (0..factor).map(move |b| [a as f64, b as f64]))
        .map(|[a, b]| [a * h / factor as f64, b * h / factor as f64])
        .collect();
    let mut m = 0.0f64;
    for pair in shifts.chunks(2) {
        let a = spec.shifted(pair[0]);
        if let Some(&s) = pair.get(1) {
            let (x, y) = inverse_pair(&a, &spec.shifted(s));
            m = m.max(x.grid_max_abs()).max(y.grid_max_abs());
        } else {
            m = m.max(max_abs(a.to_field().values()));
        }
    }
    m
}

//! Fourier representation of real periodic fields on (0, 2π)² and the exact
//! spectral differential operators.
//!
//! Coefficients follow the expansion f(x, y) = Σ f̂(k, l) e^{i(kx + ly)}, so the
//! forward transform divides by N². Inner products and norms are scaled to
//! match the continuum integrals over the box.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

use rustfft::num_complex::Complex64;

use crate::error::{param, Error, Result};
use crate::fft::with_fft2;
use crate::grid::Grid;

/// Relative tolerance for the imaginary residue of an inverse transform.
pub const SYMMETRY_TOL: f64 = 1e-13;
/// Relative tolerance for the mean coefficient of a nominally mean-zero field.
pub const MEAN_TOL: f64 = 1e-12;

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: Grid,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            coeffs: vec![Complex64::default(); grid.len()],
        }
    }

    pub fn from_coeffs(grid: Grid, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::Size {
                expected: grid.len(),
                actual: coeffs.len(),
            });
        }
        Ok(Self { grid, coeffs })
    }

    /// Samples `f` on the collocation points and transforms; the mean is removed.
    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64) -> f64) -> Self {
        let n = grid.n();
        let mut values = Vec::with_capacity(grid.len());
        for i in 0..n {
            for j in 0..n {
                values.push(f(grid.x(i), grid.x(j)));
            }
        }
        let mut out = forward_transform(&values, grid).expect("sizes agree by construction");
        out.coeffs[0] = Complex64::default();
        out
    }

    /// Builds a field from `(k, l, value)` triples. Conjugate partners are
    /// filled in, so each mode only needs to appear once.
    pub fn from_modes(grid: Grid, modes: &[(i64, i64, Complex64)]) -> Self {
        let mut out = Self::zeros(grid);
        for &(k, l, c) in modes {
            let i = grid.index(k);
            let j = grid.index(l);
            out.coeffs[i * grid.n() + j] += c;
            let partner = grid.conj_slot(i, j);
            if partner != i * grid.n() + j {
                out.coeffs[partner] += c.conj();
            }
        }
        out.coeffs[0] = Complex64::default();
        out
    }

    #[inline]
    pub fn grid(&self) -> Grid {
        self.grid
    }

    #[inline]
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    #[inline]
    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    /// Coefficient at signed wavenumber (k, l). ±N/2 address the same slot.
    pub fn coeff(&self, k: i64, l: i64) -> Complex64 {
        let n = self.grid.n();
        self.coeffs[self.grid.index(k) * n + self.grid.index(l)]
    }

    pub fn mean(&self) -> Complex64 {
        self.coeffs[0]
    }

    pub fn zero_mean(&mut self) {
        self.coeffs[0] = Complex64::default();
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.re == 0.0 && c.im == 0.0)
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// Largest |f̂(-κ) - conj f̂(κ)| over all slots.
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.grid.n();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let a = self.coeffs[i * n + j];
                let b = self.coeffs[self.grid.conj_slot(i, j)];
                worst = worst.max((a - b.conj()).norm());
            }
        }
        worst
    }

    /// Errors unless the (0,0) coefficient is negligible next to the field.
    pub fn ensure_mean_zero(&self) -> Result<()> {
        let mean = self.coeffs[0].norm();
        let scale = self.max_abs();
        if mean > MEAN_TOL * scale.max(f64::MIN_POSITIVE) && mean > 0.0 {
            return Err(Error::MeanZero { mean });
        }
        Ok(())
    }

    pub(crate) fn check_same_grid(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch {
                left: self.grid.n(),
                right: other.grid.n(),
            });
        }
        Ok(())
    }

    fn map_indexed(&self, f: impl Fn(usize, usize, Complex64) -> Complex64) -> Self {
        let n = self.grid.n();
        let mut coeffs = self.coeffs.clone();
        for i in 0..n {
            for j in 0..n {
                let idx = i * n + j;
                coeffs[idx] = f(i, j, coeffs[idx]);
            }
        }
        Self {
            grid: self.grid,
            coeffs,
        }
    }

    /// ∂/∂x: multiplies by i·k; the Nyquist row is zeroed.
    pub fn dx(&self) -> Self {
        let kx = self.grid.derivative_wavenumbers();
        self.map_indexed(|i, _, c| I * kx[i] * c)
    }

    /// ∂/∂y: multiplies by i·l; the Nyquist column is zeroed.
    pub fn dy(&self) -> Self {
        let ky = self.grid.derivative_wavenumbers();
        self.map_indexed(|_, j, c| I * ky[j] * c)
    }

    /// Δ: multiplies by -(k² + l²) on every slot, Nyquist included.
    pub fn laplacian(&self) -> Self {
        let g = self.grid;
        self.map_indexed(|i, j, c| {
            let k = g.wavenumber(i) as f64;
            let l = g.wavenumber(j) as f64;
            -(k * k + l * l) * c
        })
    }

    /// Solves -Δψ = ω mode by mode. The input must be mean-zero.
    pub fn inverse_laplacian(&self) -> Result<Self> {
        self.ensure_mean_zero()?;
        let g = self.grid;
        let mut out = self.map_indexed(|i, j, c| {
            let k = g.wavenumber(i) as f64;
            let l = g.wavenumber(j) as f64;
            let ksq = k * k + l * l;
            if ksq == 0.0 {
                Complex64::default()
            } else {
                c / ksq
            }
        });
        out.zero_mean();
        Ok(out)
    }

    /// ∇⊥ψ = (-∂ψ/∂y, ∂ψ/∂x).
    pub fn perp_gradient(&self) -> (Self, Self) {
        (-self.dy(), self.dx())
    }

    pub fn gradient(&self) -> (Self, Self) {
        (self.dx(), self.dy())
    }

    /// Projection onto max(|k|, |l|) ≤ `m`.
    pub fn truncate(&self, m: usize) -> Result<Self> {
        let g = self.grid;
        if m > g.n() / 2 {
            return Err(param("M", format!("cutoff {m} exceeds N/2 = {}", g.n() / 2)));
        }
        let m = m as i64;
        Ok(self.map_indexed(|i, j, c| {
            if g.wavenumber(i).abs() > m || g.wavenumber(j).abs() > m {
                Complex64::default()
            } else {
                c
            }
        }))
    }

    /// Zeroes every slot in the Nyquist row or column.
    pub fn strip_nyquist(&self) -> Self {
        let g = self.grid;
        self.map_indexed(|i, j, c| {
            if g.is_nyquist(i) || g.is_nyquist(j) {
                Complex64::default()
            } else {
                c
            }
        })
    }

    /// Continuum L² inner product ∫ f g over the box, evaluated spectrally.
    pub fn inner(&self, other: &Self) -> f64 {
        assert_eq!(self.grid, other.grid, "inner product across grids");
        let s: f64 = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a.re * b.re + a.im * b.im)
            .sum();
        4.0 * PI * PI * s
    }

    pub fn norm_sq(&self) -> f64 {
        let s: f64 = self.coeffs.iter().map(|c| c.norm_sqr()).sum();
        4.0 * PI * PI * s
    }

    /// Continuum L² norm.
    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// Physical samples; see [`inverse_transform`].
    pub fn to_physical(&self) -> Result<Vec<f64>> {
        inverse_transform(self)
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self {
            grid: self.grid,
            coeffs: self.coeffs.iter().map(|c| c * a).collect(),
        }
    }

    /// a·x + b·y.
    pub fn lin_comb(a: f64, x: &Self, b: f64, y: &Self) -> Self {
        assert_eq!(x.grid, y.grid, "combination across grids");
        Self {
            grid: x.grid,
            coeffs: x
                .coeffs
                .iter()
                .zip(&y.coeffs)
                .map(|(p, q)| p * a + q * b)
                .collect(),
        }
    }

    /// self += a·x.
    pub fn axpy(&mut self, a: f64, x: &Self) {
        assert_eq!(self.grid, x.grid, "axpy across grids");
        for (s, v) in self.coeffs.iter_mut().zip(&x.coeffs) {
            *s += v * a;
        }
    }
}

impl Add for &SpectralField {
    type Output = SpectralField;
    fn add(self, rhs: Self) -> SpectralField {
        SpectralField::lin_comb(1.0, self, 1.0, rhs)
    }
}

impl Sub for &SpectralField {
    type Output = SpectralField;
    fn sub(self, rhs: Self) -> SpectralField {
        SpectralField::lin_comb(1.0, self, -1.0, rhs)
    }
}

impl Mul<f64> for &SpectralField {
    type Output = SpectralField;
    fn mul(self, rhs: f64) -> SpectralField {
        self.scaled(rhs)
    }
}

impl Neg for SpectralField {
    type Output = SpectralField;
    fn neg(mut self) -> SpectralField {
        for c in &mut self.coeffs {
            *c = -*c;
        }
        self
    }
}

/// Coefficients of real samples laid out row-major (x slow, y fast).
/// The (0,0) coefficient is the grid mean and is left in place.
pub fn forward_transform(values: &[f64], grid: Grid) -> Result<SpectralField> {
    if values.len() != grid.len() {
        return Err(Error::Size {
            expected: grid.len(),
            actual: values.len(),
        });
    }
    let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    with_fft2(grid.n(), |fft| fft.forward(&mut buf));
    let scale = 1.0 / grid.len() as f64;
    for c in &mut buf {
        *c *= scale;
    }
    Ok(SpectralField { grid, coeffs: buf })
}

/// Real samples of a Hermitian-symmetric field. The imaginary residue is
/// checked against [`SYMMETRY_TOL`] relative to the sample magnitude, then dropped.
pub fn inverse_transform(field: &SpectralField) -> Result<Vec<f64>> {
    let mut buf = field.coeffs.clone();
    with_fft2(field.grid.n(), |fft| fft.inverse(&mut buf));
    let mut max_re = 0.0f64;
    let mut max_im = 0.0f64;
    for c in &buf {
        max_re = max_re.max(c.re.abs());
        max_im = max_im.max(c.im.abs());
    }
    let scale = max_re.max(field.max_abs());
    if max_im > SYMMETRY_TOL * scale.max(f64::MIN_POSITIVE) && max_im > 1e3 * f64::MIN_POSITIVE {
        return Err(Error::Symmetry { residue: max_im });
    }
    Ok(buf.into_iter().map(|c| c.re).collect())
}

/// Grid inner product ⟨f, g⟩ = h² Σ f g on physical samples.
pub fn discrete_inner(f: &[f64], g: &[f64], grid: Grid) -> f64 {
    assert_eq!(f.len(), grid.len());
    assert_eq!(g.len(), grid.len());
    let h = grid.h();
    h * h * f.iter().zip(g).map(|(a, b)| a * b).sum::<f64>()
}

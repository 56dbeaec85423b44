//! The advection term ∇⊥ψ·∇ω: Galerkin-projected (3/2 zero-padded) and
//! collocation skew-symmetric evaluations, the trilinear form b, and
//! Wente-type norm quotients.

use std::fmt;
use std::str::FromStr;

use rustfft::num_complex::Complex64;

use crate::error::{param, Error, Result};
use crate::fft::Fft2;
use crate::field::SpectralField;
use crate::grid::Grid;
use crate::norms::sobolev_norm;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Reusable scratch for evaluating the advection term on one grid.
///
/// The Galerkin path works on an M = 3N/2 padded grid, which makes products
/// of modes |k| ≤ N/2 − 1 alias-free. Two real fields share one complex
/// transform by packing them as real and imaginary parts.
pub struct Advection {
    grid: Grid,
    m: usize,
    kd: Vec<f64>,
    fft_n: Fft2,
    fft_m: Fft2,
    pad_a: Vec<Complex64>,
    pad_b: Vec<Complex64>,
    buf: [Vec<Complex64>; 4],
}

impl Advection {
    pub fn new(grid: Grid) -> Self {
        let n = grid.n();
        let m = 3 * n / 2;
        let zero = || vec![Complex64::default(); n * n];
        Self {
            grid,
            m,
            kd: grid.derivative_wavenumbers(),
            fft_n: Fft2::new(n),
            fft_m: Fft2::new(m),
            pad_a: vec![Complex64::default(); m * m],
            pad_b: vec![Complex64::default(); m * m],
            buf: [zero(), zero(), zero(), zero()],
        }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    fn check(&self, f: &SpectralField) -> Result<()> {
        if f.grid() != self.grid {
            return Err(Error::GridMismatch {
                left: self.grid.n(),
                right: f.grid().n(),
            });
        }
        Ok(())
    }

    /// P_N(∇⊥ψ·∇ω) with the mean and Nyquist modes removed.
    pub fn galerkin_into(
        &mut self,
        psi: &SpectralField,
        omega: &SpectralField,
        out: &mut SpectralField,
    ) -> Result<()> {
        self.check(psi)?;
        self.check(omega)?;
        self.check(out)?;
        let n = self.grid.n();
        let m = self.m;
        let half = (n / 2) as i64;
        self.pad_a.fill(Complex64::default());
        self.pad_b.fill(Complex64::default());
        let (p, w) = (psi.coeffs(), omega.coeffs());
        for i in 0..n {
            let k = self.grid.wavenumber(i);
            if k.abs() >= half {
                continue;
            }
            let kx = self.kd[i];
            let pi = (k.rem_euclid(m as i64) as usize) * m;
            for j in 0..n {
                let l = self.grid.wavenumber(j);
                if l.abs() >= half {
                    continue;
                }
                let ky = self.kd[j];
                let slot = pi + l.rem_euclid(m as i64) as usize;
                let c = p[i * n + j];
                let d = w[i * n + j];
                // (u, v) = (-ψ_y, ψ_x) packed as u + i v; (ω_x, ω_y) likewise.
                let u = -I * ky * c;
                let v = I * kx * c;
                self.pad_a[slot] = u + I * v;
                let wx = I * kx * d;
                let wy = I * ky * d;
                self.pad_b[slot] = wx + I * wy;
            }
        }
        self.fft_m.inverse(&mut self.pad_a);
        self.fft_m.inverse(&mut self.pad_b);
        for (a, b) in self.pad_a.iter_mut().zip(&self.pad_b) {
            *a = Complex64::new(a.re * b.re + a.im * b.im, 0.0);
        }
        self.fft_m.forward(&mut self.pad_a);
        let scale = 1.0 / (m * m) as f64;
        let dst = out.coeffs_mut();
        for i in 0..n {
            let k = self.grid.wavenumber(i);
            for j in 0..n {
                let l = self.grid.wavenumber(j);
                dst[i * n + j] = if k.abs() >= half || l.abs() >= half {
                    Complex64::default()
                } else {
                    let slot = (k.rem_euclid(m as i64) as usize) * m + l.rem_euclid(m as i64) as usize;
                    self.pad_a[slot] * scale
                };
            }
        }
        dst[0] = Complex64::default();
        Ok(())
    }

    /// ½(u·∇_N ω + ∇_N·(u ω)) with u = ∇⊥_N ψ, products taken on the N grid
    /// without dealiasing. Only the mean is removed.
    pub fn collocation_skew_into(
        &mut self,
        psi: &SpectralField,
        omega: &SpectralField,
        out: &mut SpectralField,
    ) -> Result<()> {
        self.check(psi)?;
        self.check(omega)?;
        self.check(out)?;
        let n = self.grid.n();
        let (p, w) = (psi.coeffs(), omega.coeffs());
        let [vel, grad, vort, flux] = &mut self.buf;
        for i in 0..n {
            let kx = self.kd[i];
            for j in 0..n {
                let ky = self.kd[j];
                let idx = i * n + j;
                let u = -I * ky * p[idx];
                let v = I * kx * p[idx];
                vel[idx] = u + I * v;
                grad[idx] = I * kx * w[idx] + I * (I * ky * w[idx]);
                vort[idx] = w[idx];
            }
        }
        self.fft_n.inverse(vel);
        self.fft_n.inverse(grad);
        self.fft_n.inverse(vort);
        for idx in 0..n * n {
            let (u, v) = (vel[idx].re, vel[idx].im);
            let (wx, wy) = (grad[idx].re, grad[idx].im);
            let wv = vort[idx].re;
            // advective half in `grad`, fluxes (uω, vω) packed in `flux`
            grad[idx] = Complex64::new(u * wx + v * wy, 0.0);
            flux[idx] = Complex64::new(u * wv, v * wv);
        }
        self.fft_n.forward(grad);
        self.fft_n.forward(flux);
        let scale = 1.0 / (n * n) as f64;
        let dst = out.coeffs_mut();
        for i in 0..n {
            let kx = self.kd[i];
            for j in 0..n {
                let ky = self.kd[j];
                let idx = i * n + j;
                let partner = flux[self.grid.conj_slot(i, j)].conj();
                let q1 = (flux[idx] + partner) * 0.5;
                let q2 = (flux[idx] - partner) * (-0.5 * I);
                let div = I * kx * q1 + I * ky * q2;
                dst[idx] = (grad[idx] + div) * (0.5 * scale);
            }
        }
        dst[0] = Complex64::default();
        Ok(())
    }
}

/// Galerkin-projected advection P_N(∇⊥ψ·∇ω), evaluated on a 3/2-padded grid.
pub fn advect_galerkin(psi: &SpectralField, omega: &SpectralField) -> Result<SpectralField> {
    psi.check_same_grid(omega)?;
    let mut out = SpectralField::zeros(psi.grid());
    Advection::new(psi.grid()).galerkin_into(psi, omega, &mut out)?;
    Ok(out)
}

/// Skew-symmetric collocation advection ½(∇⊥_Nψ·∇_Nω + ∇_N·(∇⊥_Nψ ω)).
pub fn advect_collocation_skew(psi: &SpectralField, omega: &SpectralField) -> Result<SpectralField> {
    psi.check_same_grid(omega)?;
    let mut out = SpectralField::zeros(psi.grid());
    Advection::new(psi.grid()).collocation_skew_into(psi, omega, &mut out)?;
    Ok(out)
}

/// b(ψ, φ, ϑ) = ∫ ∇⊥ψ·∇φ ϑ, exact for the trigonometric polynomials obtained
/// by dropping Nyquist modes from the arguments.
pub fn trilinear_b(psi: &SpectralField, phi: &SpectralField, vphi: &SpectralField) -> Result<f64> {
    phi.check_same_grid(vphi)?;
    let j = advect_galerkin(psi, phi)?;
    Ok(j.inner(&vphi.strip_nyquist()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WenteVariant {
    /// ‖J‖_{H⁻¹} / (‖ψ‖_{H¹} ‖φ‖_{H¹})
    Hm1H1H1,
    /// ‖J‖_{H⁻¹} / (‖ψ‖_{H²} ‖φ‖_{L²})
    Hm1H2L2,
    /// ‖J‖_{L²} / (‖ψ‖_{H²} ‖φ‖_{H¹})
    L2H2H1,
    /// ‖J‖_{L²} / (‖ψ‖_{H¹} ‖φ‖_{H²})
    L2H1H2,
    /// ‖J‖_{H¹} / (‖ψ‖_{H²} ‖φ‖_{H²})
    H1H2H2,
}

impl WenteVariant {
    pub const ALL: [WenteVariant; 5] = [
        WenteVariant::Hm1H1H1,
        WenteVariant::Hm1H2L2,
        WenteVariant::L2H2H1,
        WenteVariant::L2H1H2,
        WenteVariant::H1H2H2,
    ];

    /// Sobolev orders (lhs, ψ, φ).
    pub fn orders(self) -> (f64, f64, f64) {
        match self {
            WenteVariant::Hm1H1H1 => (-1.0, 1.0, 1.0),
            WenteVariant::Hm1H2L2 => (-1.0, 2.0, 0.0),
            WenteVariant::L2H2H1 => (0.0, 2.0, 1.0),
            WenteVariant::L2H1H2 => (0.0, 1.0, 2.0),
            WenteVariant::H1H2H2 => (1.0, 2.0, 2.0),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            WenteVariant::Hm1H1H1 => "Hm1_H1H1",
            WenteVariant::Hm1H2L2 => "Hm1_H2L2",
            WenteVariant::L2H2H1 => "L2_H2H1",
            WenteVariant::L2H1H2 => "L2_H1H2",
            WenteVariant::H1H2H2 => "H1_H2H2",
        }
    }
}

impl fmt::Display for WenteVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for WenteVariant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        WenteVariant::ALL
            .into_iter()
            .find(|v| v.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| param("variant", format!("unknown Wente variant `{s}`")))
    }
}

/// Norm quotient of the chosen Wente-type inequality for J = ∇⊥ψ·∇φ. The
/// left-hand norm is taken of the Galerkin projection of J onto the grid.
pub fn wente_ratio(psi: &SpectralField, phi: &SpectralField, variant: WenteVariant) -> Result<f64> {
    let j = advect_galerkin(psi, phi)?;
    wente_ratio_with(&j, psi, phi, variant)
}

fn wente_ratio_with(
    j: &SpectralField,
    psi: &SpectralField,
    phi: &SpectralField,
    variant: WenteVariant,
) -> Result<f64> {
    let (s_lhs, s_psi, s_phi) = variant.orders();
    let denom = sobolev_norm(psi, s_psi) * sobolev_norm(phi, s_phi);
    if denom == 0.0 || !denom.is_finite() {
        return Err(Error::Degenerate(format!(
            "{variant}: right-hand side norms vanish"
        )));
    }
    Ok(sobolev_norm(j, s_lhs) / denom)
}

/// All five quotients from a single evaluation of J.
pub fn wente_ratios(psi: &SpectralField, phi: &SpectralField) -> Result<[f64; 5]> {
    let j = advect_galerkin(psi, phi)?;
    let mut out = [0.0; 5];
    for (slot, v) in out.iter_mut().zip(WenteVariant::ALL) {
        *slot = wente_ratio_with(&j, psi, phi, v)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn g(n: usize) -> Grid {
        Grid::new(n).unwrap()
    }

    #[test]
    fn galerkin_sin_x_sin_y() {
        let grid = g(16);
        let psi = SpectralField::from_fn(grid, |x, _| x.sin());
        let omega = SpectralField::from_fn(grid, |_, y| y.sin());
        let out = advect_galerkin(&psi, &omega).unwrap();
        let expected = SpectralField::from_fn(grid, |x, y| x.cos() * y.cos());
        assert!((&out - &expected).max_abs() < 1e-15);
    }

    #[test]
    fn aligned_fields_have_no_jacobian() {
        let grid = g(16);
        let omega = SpectralField::from_fn(grid, |x, y| x.sin() * y.sin());
        let psi = &omega * 0.5;
        assert!(advect_galerkin(&psi, &omega).unwrap().max_abs() < 1e-16);
        assert!(advect_collocation_skew(&psi, &omega).unwrap().max_abs() < 1e-15);
    }

    #[test]
    fn collocation_sin_x_sin_y() {
        let grid = g(16);
        let psi = SpectralField::from_fn(grid, |x, _| x.sin());
        let omega = SpectralField::from_fn(grid, |_, y| y.sin());
        let out = advect_collocation_skew(&psi, &omega).unwrap();
        let expected = SpectralField::from_fn(grid, |x, y| x.cos() * y.cos());
        assert!((&out - &expected).max_abs() < 1e-15);
        let zero = SpectralField::zeros(grid);
        assert!(advect_collocation_skew(&zero, &omega).unwrap().is_zero());
    }

    #[test]
    fn trilinear_analytic_value() {
        let grid = g(16);
        let psi = SpectralField::from_fn(grid, |x, _| x.sin());
        let phi = SpectralField::from_fn(grid, |_, y| y.sin());
        let vphi = SpectralField::from_fn(grid, |x, y| x.cos() * y.cos());
        let b = trilinear_b(&psi, &phi, &vphi).unwrap();
        assert!((b - PI * PI).abs() < 1e-13);
    }

    #[test]
    fn wente_aligned_is_zero_and_degenerate_errors() {
        let grid = g(32);
        let f = SpectralField::from_fn(grid, |x, y| x.sin() * y.sin());
        for v in WenteVariant::ALL {
            assert!(wente_ratio(&f, &f, v).unwrap() < 1e-15);
        }
        let zero = SpectralField::zeros(grid);
        assert!(matches!(
            wente_ratio(&zero, &f, WenteVariant::L2H2H1),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn variant_names_roundtrip() {
        for v in WenteVariant::ALL {
            assert_eq!(v.name().parse::<WenteVariant>().unwrap(), v);
        }
        assert!("H9".parse::<WenteVariant>().is_err());
    }
}

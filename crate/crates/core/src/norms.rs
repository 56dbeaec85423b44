//! Sobolev-scale norms and the weighted G(μ) norms on consecutive vorticity
//! levels used by the stability bounds.

use crate::error::{param, Result};
use crate::field::SpectralField;

/// ( Σ |κ|^{2s} |f̂|² )^{1/2} scaled by 2π, so s = 0 is the continuum L² norm
/// and s = 1 is ‖∇f‖. The mean mode is excluded for every s.
pub fn sobolev_norm(field: &SpectralField, s: f64) -> f64 {
    let g = field.grid();
    let n = g.n();
    let integer = s == s.trunc() && s.abs() <= 16.0;
    let pow = |ksq: f64| if integer { ksq.powi(s as i32) } else { ksq.powf(s) };
    let mut acc = 0.0;
    for i in 0..n {
        let k = g.wavenumber(i) as f64;
        for j in 0..n {
            let l = g.wavenumber(j) as f64;
            let ksq = k * k + l * l;
            if ksq == 0.0 {
                continue;
            }
            let c = field.coeffs()[i * n + j].norm_sqr();
            if c != 0.0 {
                acc += pow(ksq) * c;
            }
        }
    }
    2.0 * std::f64::consts::PI * acc.sqrt()
}

/// Two consecutive vorticity levels `[older, newer]` on one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct StatePair {
    pub older: SpectralField,
    pub newer: SpectralField,
}

impl StatePair {
    pub fn new(older: SpectralField, newer: SpectralField) -> Result<Self> {
        older.check_same_grid(&newer)?;
        older.ensure_mean_zero()?;
        newer.ensure_mean_zero()?;
        Ok(Self { older, newer })
    }

    /// The pair `[ω, ω]`.
    pub fn repeated(omega: SpectralField) -> Result<Self> {
        Self::new(omega.clone(), omega)
    }

    pub fn grid(&self) -> crate::Grid {
        self.newer.grid()
    }

    /// ‖V‖² = ‖older‖² + ‖newer‖².
    pub fn l2_norm_sq(&self) -> f64 {
        self.older.norm_sq() + self.newer.norm_sq()
    }
}

/// G(μ) = [[1/2, -1], [-1, 5/2 + μ/2]].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GWeight {
    mu: f64,
}

impl GWeight {
    pub fn new(mu: f64) -> Result<Self> {
        if !(mu.is_finite() && mu >= 0.0) {
            return Err(param("mu", format!("must be finite and >= 0, got {mu}")));
        }
        Ok(Self { mu })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn matrix(&self) -> [[f64; 2]; 2] {
        [[0.5, -1.0], [-1.0, 2.5 + 0.5 * self.mu]]
    }

    /// Vᵀ G V for V = [a, b] ∈ ℝ².
    pub fn quad_form(&self, a: f64, b: f64) -> f64 {
        0.5 * a * a - 2.0 * a * b + (2.5 + 0.5 * self.mu) * b * b
    }

    /// Eigenvalues (min, max) of the 2×2 matrix.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let [[a, b], [_, d]] = self.matrix();
        let half_trace = 0.5 * (a + d);
        let disc = (0.25 * (a - d) * (a - d) + b * b).sqrt();
        (half_trace - disc, half_trace + disc)
    }

    pub fn det(&self) -> f64 {
        let [[a, b], [c, d]] = self.matrix();
        a * d - b * c
    }
}

/// ‖V‖²_{G(μ)} = ½‖v₀‖² − 2(v₀, v₁) + (5/2 + μ/2)‖v₁‖².
pub fn g_norm_sq(pair: &StatePair, g: GWeight) -> Result<f64> {
    pair.older.check_same_grid(&pair.newer)?;
    Ok(g_norm_sq_parts(
        pair.older.norm_sq(),
        pair.older.inner(&pair.newer),
        pair.newer.norm_sq(),
        g,
    ))
}

/// G-norm from the three Gram entries (‖v₀‖², (v₀,v₁), ‖v₁‖²).
pub fn g_norm_sq_parts(v0_sq: f64, cross: f64, v1_sq: f64, g: GWeight) -> f64 {
    0.5 * v0_sq - 2.0 * cross + (2.5 + 0.5 * g.mu) * v1_sq
}

/// (C_l, C_u) with C_l‖V‖²_{G(μ)} ≤ ‖V‖² ≤ C_u‖V‖²_{G(μ)} for μ ∈ [0, mu_max].
pub fn g_equivalence_constants(mu_max: f64) -> Result<(f64, f64)> {
    if !(0.0..=1.0).contains(&mu_max) {
        return Err(param("mu_max", format!("must lie in [0, 1], got {mu_max}")));
    }
    let (lmin0, _) = GWeight::new(0.0)?.eigenvalues();
    let (_, lmax) = GWeight::new(mu_max)?.eigenvalues();
    Ok((1.0 / lmax, 1.0 / lmin0))
}

/// Integrated residual of the generalized BDF2 G-identity for levels v₀, v₁, v₂.
///
/// Zero up to rounding for all inputs; the returned value is absolute.
/// [`g_identity_scale`] gives the magnitude to compare it against.
pub fn g_identity_residual(
    v0: &SpectralField,
    v1: &SpectralField,
    v2: &SpectralField,
    mu: f64,
) -> Result<f64> {
    let t = GIdentityTerms::new(v0, v1, v2, mu)?;
    Ok(t.lhs - t.rhs_energy - t.rhs_dissipation)
}

/// Sum of the magnitudes of the identity's three terms.
pub fn g_identity_scale(
    v0: &SpectralField,
    v1: &SpectralField,
    v2: &SpectralField,
    mu: f64,
) -> Result<f64> {
    let t = GIdentityTerms::new(v0, v1, v2, mu)?;
    Ok(t.lhs.abs() + t.rhs_energy.abs() + t.rhs_dissipation.abs())
}

struct GIdentityTerms {
    lhs: f64,
    rhs_energy: f64,
    rhs_dissipation: f64,
}

impl GIdentityTerms {
    fn new(v0: &SpectralField, v1: &SpectralField, v2: &SpectralField, mu: f64) -> Result<Self> {
        v0.check_same_grid(v1)?;
        v1.check_same_grid(v2)?;
        let g = GWeight::new(mu)?;

        let mut bdf = v2.scaled(1.5);
        bdf.axpy(-2.0, v1);
        bdf.axpy(0.5, v0);
        let lhs = bdf.inner(v2) + 0.5 * mu * v2.norm_sq();

        let (n0, n1, n2) = (v0.norm_sq(), v1.norm_sq(), v2.norm_sq());
        let big1 = g_norm_sq_parts(n1, v1.inner(v2), n2, g);
        let big0 = g_norm_sq_parts(n0, v0.inner(v1), n1, g);
        let rhs_energy = 0.5 * (big1 - big0 / (1.0 + mu));

        let mut jump = v2.scaled(1.0 + mu);
        jump.axpy(-2.0, v1);
        jump.axpy(1.0, v0);
        let rhs_dissipation = jump.norm_sq() / (4.0 * (1.0 + mu));

        Ok(Self {
            lhs,
            rhs_energy,
            rhs_dissipation,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Grid;
    use rustfft::num_complex::Complex64;
    use std::f64::consts::PI;

    fn sinsin(g: Grid) -> SpectralField {
        SpectralField::from_fn(g, |x, y| x.sin() * y.sin())
    }

    #[test]
    fn sobolev_norm_examples() {
        let g = Grid::new(16).unwrap();
        let f = sinsin(g);
        assert!((sobolev_norm(&f, 0.0) - PI).abs() < 1e-14);
        assert!((sobolev_norm(&f, 1.0) - PI * 2f64.sqrt()).abs() < 1e-14);
        let z = SpectralField::zeros(g);
        for s in [-1.0, 0.0, 0.5, 2.0] {
            assert_eq!(sobolev_norm(&z, s), 0.0);
        }
    }

    #[test]
    fn pointwise_g_entries() {
        let g0 = GWeight::new(0.0).unwrap();
        assert_eq!(g0.quad_form(1.0, 0.0), 0.5);
        assert_eq!(g0.quad_form(0.0, 1.0), 2.5);
        assert!(GWeight::new(-0.1).is_err());
    }

    #[test]
    fn g_norm_examples() {
        let g = Grid::new(16).unwrap();
        let unit = &sinsin(g) * (1.0 / PI);
        let zero = SpectralField::zeros(g);
        let p = StatePair::new(zero, unit.clone()).unwrap();
        assert!((g_norm_sq(&p, GWeight::new(0.0).unwrap()).unwrap() - 2.5).abs() < 1e-14);
        let p = StatePair::repeated(unit).unwrap();
        assert!((g_norm_sq(&p, GWeight::new(1.0).unwrap()).unwrap() - 1.5).abs() < 1e-14);
    }

    #[test]
    fn pair_rejects_grid_mismatch() {
        let a = SpectralField::zeros(Grid::new(8).unwrap());
        let b = SpectralField::zeros(Grid::new(16).unwrap());
        assert!(StatePair::new(a, b).is_err());
    }

    #[test]
    fn equivalence_constants_closed_form() {
        let (_, cu) = g_equivalence_constants(0.0).unwrap();
        let lmin = (3.0 - 2.0 * 2f64.sqrt()) / 2.0;
        assert!((cu - 1.0 / lmin).abs() < 1e-12);
        assert!((cu - 11.657).abs() < 1e-3);

        let (cl, _) = g_equivalence_constants(1.0).unwrap();
        let lmax = (3.5 + 10.25f64.sqrt()) / 2.0;
        assert!((cl - 1.0 / lmax).abs() < 1e-14);
        assert!((cl - 0.2984).abs() < 1e-4);
        assert!(cl < 1.0 && 1.0 < cu && cl * cu > 1.0);

        assert!(g_equivalence_constants(1.5).is_err());
        assert!(g_equivalence_constants(-0.5).is_err());
    }

    #[test]
    fn weight_positive_definite() {
        for mu in [0.0, 0.3, 1.0, 10.0] {
            let w = GWeight::new(mu).unwrap();
            assert!((w.det() - (0.25 + mu / 4.0)).abs() < 1e-14);
            assert!(w.eigenvalues().0 > 0.0);
        }
    }

    #[test]
    fn identity_examples() {
        let g = Grid::new(16).unwrap();
        let zero = SpectralField::zeros(g);
        let unit = &sinsin(g) * (1.0 / PI);
        let r = g_identity_residual(&zero, &zero, &unit, 0.0).unwrap();
        assert!(r.abs() < 1e-14);
        let mut lhs = unit.scaled(1.5);
        lhs.axpy(0.0, &zero);
        assert!((lhs.inner(&unit) - 1.5).abs() < 1e-14);

        let v = SpectralField::from_modes(g, &[(2, 3, Complex64::new(0.4, -0.2))]);
        assert!(g_identity_residual(&v, &v, &v, 0.0).unwrap().abs() < 1e-14);
    }
}

//! Closed-form solutions used for verification runs.

use std::fmt;
use std::str::FromStr;

use crate::error::{param, Error};
use crate::field::SpectralField;
use crate::grid::Grid;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Manufactured {
    /// ω = e^{−2νt} sin x sin y. The advection term vanishes identically, so no
    /// forcing is needed.
    TaylorGreen,
    /// ω = e^{−t}(sin x sin y + ½ sin 2x sin y), driven by the forcing that
    /// makes it an exact solution.
    TwoMode,
}

impl Manufactured {
    pub fn exact(self, grid: Grid, nu: f64, t: f64) -> SpectralField {
        match self {
            Manufactured::TaylorGreen => {
                let a = (-2.0 * nu * t).exp();
                SpectralField::from_fn(grid, move |x, y| a * x.sin() * y.sin())
            }
            Manufactured::TwoMode => {
                let a = (-t).exp();
                SpectralField::from_fn(grid, move |x, y| {
                    a * (x.sin() * y.sin() + 0.5 * (2.0 * x).sin() * y.sin())
                })
            }
        }
    }

    /// ∂ₜω + ∇⊥ψ·∇ω − νΔω for the exact solution, worked out by hand.
    pub fn forcing(self, grid: Grid, nu: f64, t: f64) -> SpectralField {
        match self {
            Manufactured::TaylorGreen => SpectralField::zeros(grid),
            Manufactured::TwoMode => {
                let a = (-t).exp();
                let a2 = (-2.0 * t).exp();
                SpectralField::from_fn(grid, move |x, y| {
                    let (sx, sy, cy) = (x.sin(), y.sin(), y.cos());
                    (2.0 * nu - 1.0) * a * sx * sy
                        + 0.5 * (5.0 * nu - 1.0) * a * (2.0 * x).sin() * sy
                        + 0.3 * a2 * sx * sx * sx * sy * cy
                })
            }
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Manufactured::TaylorGreen => "taylor-green",
            Manufactured::TwoMode => "two-mode",
        }
    }
}

impl fmt::Display for Manufactured {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Manufactured {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "taylor-green" => Ok(Manufactured::TaylorGreen),
            "two-mode" => Ok(Manufactured::TwoMode),
            _ => Err(param("manufactured", format!("unknown case `{s}`"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nonlinear::advect_galerkin;

    /// The hand-derived forcing must agree with one assembled from spectral
    /// operators on the exact solution.
    #[test]
    fn two_mode_forcing_matches_operator_assembly() {
        let grid = Grid::new(32).unwrap();
        let (nu, t) = (0.07, 0.3);
        let w = Manufactured::TwoMode.exact(grid, nu, t);
        let psi = w.inverse_laplacian().unwrap();
        let mut f = &advect_galerkin(&psi, &w).unwrap() - &w;
        f.axpy(-nu, &w.laplacian());
        let hand = Manufactured::TwoMode.forcing(grid, nu, t);
        assert!((&f - &hand).max_abs() < 1e-15);
    }
}

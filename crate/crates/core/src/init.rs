//! Deterministic random initial data.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex64;

use crate::error::{param, Result};
use crate::field::SpectralField;
use crate::grid::Grid;

/// Isotropic random field with |ω̂(κ)| ∝ |κ|^slope on 0 < |κ| ≤ N/3, seeded
/// random phases, normalized to ‖ω‖ = `amplitude`.
pub fn random_initial_field(seed: u64, n: usize, slope: f64, amplitude: f64) -> Result<SpectralField> {
    let grid = Grid::new(n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    band_limited_field(&mut rng, grid, n / 3, slope, amplitude, false)
}

/// Random field supported on the disk 0 < |κ| ≤ `kmax` with spectral slope
/// `slope`, scaled to ‖ω‖ = `norm`. Phases are always random; with
/// `random_amplitudes` each mode's magnitude is additionally multiplied by
/// a Rayleigh variate.
///
/// Draws are made over the half-plane of the square [−kmax, kmax]² in a
/// fixed order that does not depend on the grid, so one seed yields the
/// same trigonometric polynomial on every grid with N/2 > kmax.
pub fn band_limited_field<R: Rng>(
    rng: &mut R,
    grid: Grid,
    kmax: usize,
    slope: f64,
    norm: f64,
    random_amplitudes: bool,
) -> Result<SpectralField> {
    if kmax == 0 || kmax >= grid.nyquist() {
        return Err(param(
            "kmax",
            format!("must lie in [1, {}], got {kmax}", grid.nyquist() - 1),
        ));
    }
    if !(norm.is_finite() && norm >= 0.0) {
        return Err(param("amplitude", format!("must be finite and >= 0, got {norm}")));
    }
    if !slope.is_finite() {
        return Err(param("slope", "must be finite"));
    }
    let km = kmax as i64;
    let mut modes = Vec::new();
    for k in -km..=km {
        for l in 0..=km {
            if l == 0 && k <= 0 {
                continue;
            }
            let phase: f64 = rng.gen::<f64>() * 2.0 * PI;
            let rayleigh = if random_amplitudes {
                let u: f64 = rng.gen();
                (-2.0 * (1.0 - u).ln()).sqrt()
            } else {
                1.0
            };
            let ksq = (k * k + l * l) as f64;
            if ksq > (km * km) as f64 {
                continue;
            }
            let mag = ksq.sqrt().powf(slope) * rayleigh;
            modes.push((k, l, Complex64::from_polar(mag, phase)));
        }
    }
    let field = SpectralField::from_modes(grid, &modes);
    let current = field.norm();
    if norm == 0.0 || current == 0.0 {
        return Ok(SpectralField::zeros(grid));
    }
    Ok(field.scaled(norm / current))
}

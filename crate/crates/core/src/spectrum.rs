//! Isotropic shell spectra.

use std::f64::consts::PI;

use crate::field::SpectralField;

fn shells(omega: &SpectralField, weight: impl Fn(f64) -> f64) -> Vec<(usize, f64)> {
    let g = omega.grid();
    let n = g.n();
    let kmax = ((2.0f64).sqrt() * (n / 2) as f64).round() as usize;
    let mut out: Vec<(usize, f64)> = (0..=kmax).map(|s| (s, 0.0)).collect();
    let area = 4.0 * PI * PI;
    for i in 0..n {
        let k = g.wavenumber(i) as f64;
        for j in 0..n {
            let l = g.wavenumber(j) as f64;
            let ksq = k * k + l * l;
            if ksq == 0.0 {
                continue;
            }
            let c = omega.coeffs()[i * n + j].norm_sqr();
            let shell = ksq.sqrt().round() as usize;
            out[shell].1 += 0.5 * area * c * weight(ksq);
        }
    }
    out
}

/// (κ, enstrophy in shell κ) for κ = 0, 1, …, with mode (k, l) binned into
/// κ = round(√(k² + l²)). Shell values sum to ½‖ω‖².
pub fn shell_spectrum(omega: &SpectralField) -> Vec<(usize, f64)> {
    shells(omega, |_| 1.0)
}

/// Same binning for the energy ½|κ|⁻²|ω̂|² (scaled), summing to ½‖∇ψ‖².
pub fn energy_spectrum(omega: &SpectralField) -> Vec<(usize, f64)> {
    shells(omega, |ksq| 1.0 / ksq)
}

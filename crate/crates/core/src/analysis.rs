//! Bound envelopes, absorbing time, the two-step discrete Gronwall bound and
//! the consistency-gap and energy-balance diagnostics.

use crate::error::{param, Result};
use crate::norms::{sobolev_norm, StatePair};
use crate::stats::{block_bootstrap, BootstrapCi};

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(param(name, format!("must be > 0, got {v}")))
    }
}

/// ρ₀ = 2|f|_{H⁻¹}/ν.
pub fn rho0(f_inf_hminus1: f64, nu: f64) -> Result<f64> {
    positive("nu", nu)?;
    if !(f_inf_hminus1.is_finite() && f_inf_hminus1 >= 0.0) {
        return Err(param("f_inf", format!("must be >= 0, got {f_inf_hminus1}")));
    }
    Ok(2.0 * f_inf_hminus1 / nu)
}

/// (1+νk)⁻ⁿ V₀ + ρ₀² (1 − (1+νk)⁻ⁿ), an upper bound for ‖V_n‖²_{G(νk)}.
pub fn l2_envelope(n: u64, nu: f64, k: f64, v0_gsq: f64, rho0: f64) -> f64 {
    let decay = (-(n as f64) * (nu * k).ln_1p()).exp();
    let r2 = rho0 * rho0;
    r2 + decay * (v0_gsq - r2)
}

/// max(0, (4/ν) ln(‖V₀‖/ρ₀)).
pub fn absorbing_time(v0_gnorm: f64, rho0: f64, nu: f64) -> Result<f64> {
    positive("V0", v0_gnorm)?;
    positive("rho0", rho0)?;
    positive("nu", nu)?;
    Ok((4.0 / nu * (v0_gnorm / rho0).ln()).max(0.0))
}

/// Default statistics burn-in: ⌈T₀/k⌉ plus 20%.
pub fn default_burn_in(t0: f64, k: f64) -> usize {
    ((t0 / k).ceil() * 1.2).ceil() as usize
}

fn check_gronwall(eps: f64, beta: f64, lambda: f64, n: u64) -> Result<f64> {
    positive("eps", eps)?;
    positive("beta", beta)?;
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(param("lambda", format!("must lie in (0, 1), got {lambda}")));
    }
    if n < 2 {
        return Err(param("n", format!("must be >= 2, got {n}")));
    }
    Ok((1.0 + 0.5 * eps) / (1.0 + eps))
}

fn check_start(g1: f64, g2: f64) -> Result<()> {
    for (name, g) in [("g1", g1), ("g2", g2)] {
        if !(g.is_finite() && g >= 0.0) {
            return Err(param(name, format!("must be >= 0, got {g}")));
        }
    }
    Ok(())
}

/// Bound on gⁿ⁺¹ for any non-negative sequence with
/// gⁿ⁺¹ ≤ (λgⁿ + (1−λ)gⁿ⁻¹ + βε)/(1+ε):
///
/// gⁿ⁺¹ ≤ γ max{γ^⌊(n−2)/2⌋ g², γ^⌊(n−2)/2⌋ g¹, 2β},  γ = (1+ε/2)/(1+ε),  n ≥ 2.
///
/// The bound is independent of λ.
pub fn gronwall_two_step_bound(g1: f64, g2: f64, eps: f64, beta: f64, lambda: f64, n: u64) -> Result<f64> {
    let gamma = check_gronwall(eps, beta, lambda, n)?;
    check_start(g1, g2)?;
    let p = gamma.powi(((n - 2) / 2) as i32);
    Ok(gamma * (p * g2).max(p * g1).max(2.0 * beta))
}

/// The same bound with exponent ⌊(n−1)/2⌋. For odd n this is one factor of
/// γ too tight and fails for some sequences (e.g. g¹ = g² = 10, ε = 0.5,
/// β = 1, λ = 0.01, n = 3); kept for comparison.
pub fn gronwall_bound_floor_n_minus_1(g1: f64, g2: f64, eps: f64, beta: f64, lambda: f64, n: u64) -> Result<f64> {
    let gamma = check_gronwall(eps, beta, lambda, n)?;
    check_start(g1, g2)?;
    let p = gamma.powi(((n - 1) / 2) as i32);
    Ok(gamma * (p * g2).max(p * g1).max(2.0 * beta))
}

/// Iterates the recursion with equality from (g¹, g²) and returns
/// [g¹, g², …, gⁿ⁺¹].
pub fn gronwall_worst_case(g1: f64, g2: f64, eps: f64, beta: f64, lambda: f64, n: u64) -> Result<Vec<f64>> {
    check_gronwall(eps, beta, lambda, n.max(2))?;
    check_start(g1, g2)?;
    let mut g = vec![g1, g2];
    for m in 2..=n as usize {
        let next = (lambda * g[m - 1] + (1.0 - lambda) * g[m - 2] + beta * eps) / (1.0 + eps);
        g.push(next);
    }
    Ok(g)
}

/// (‖ωⁿ⁺¹ − ωⁿ‖, √k ‖∇(ωⁿ⁺¹ − ωⁿ)‖).
pub fn consistency_gap(pair: &StatePair, k: f64) -> (f64, f64) {
    let d = &pair.newer - &pair.older;
    (d.norm(), k.sqrt() * sobolev_norm(&d, 1.0))
}

/// Whether gapⁿ ≤ 3⁻ⁿ gap⁰ + floor for every entry of `gaps`.
pub fn gap_decay_holds(gaps: &[f64], floor: f64) -> bool {
    let Some(&g0) = gaps.first() else {
        return true;
    };
    let mut w = g0;
    gaps.iter().all(|&g| {
        let ok = g <= w + floor;
        w /= 3.0;
        ok
    })
}

/// Time average of ν‖∇ωⁿ‖² − (f, ωⁿ) over `series` of (‖∇ωⁿ‖², (f, ωⁿ)),
/// with a block-bootstrap spread.
pub fn energy_balance_residual(series: &[(f64, f64)], nu: f64, resamples: usize, seed: u64) -> BootstrapCi {
    let values: Vec<f64> = series.iter().map(|&(grad_sq, fw)| nu * grad_sq - fw).collect();
    block_bootstrap(&values, 0, resamples, seed)
}

/// Least-squares fit y = c·x^p in log–log coordinates; returns (c, p).
pub fn fit_power_law(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(param("samples", "need at least two (x, y) pairs of equal length"));
    }
    if xs.iter().chain(ys).any(|&v| !(v > 0.0)) {
        return Err(param("samples", "power-law fit needs positive values"));
    }
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 {
        return Err(param("samples", "x values must not all coincide"));
    }
    let p = sxy / sxx;
    Ok(((my - p * mx).exp(), p))
}

/// log₂(eᵢ/eᵢ₊₁) for errors at successively halved steps.
pub fn observed_orders(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

/// Empirical C_d = max over runs of (gap_l2 + gap_h1)/k.
pub fn fitted_consistency_constant(ks: &[f64], gap_l2: &[f64], gap_h1: &[f64]) -> f64 {
    ks.iter()
        .zip(gap_l2.iter().zip(gap_h1))
        .map(|(k, (a, b))| (a + b) / k)
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::SpectralField;
    use crate::grid::Grid;

    #[test]
    fn rho0_examples() {
        assert_eq!(rho0(1.0, 2.0).unwrap(), 1.0);
        assert_eq!(rho0(0.0, 2.0).unwrap(), 0.0);
        assert!((rho0(0.05, 0.1).unwrap() - 1.0).abs() < 1e-15);
        assert!(rho0(1.0, 0.0).is_err());
    }

    #[test]
    fn envelope_examples() {
        assert_eq!(l2_envelope(0, 0.1, 0.01, 7.0, 2.0), 7.0);
        let lim = l2_envelope(1_000_000, 0.1, 1e-3, 7.0, 2.0);
        assert!((lim - 4.0).abs() < 1e-9);
        for n in [0, 1, 10, 1000] {
            assert!((l2_envelope(n, 0.1, 0.01, 4.0, 2.0) - 4.0).abs() < 1e-14);
        }
    }

    #[test]
    fn envelope_monotone() {
        let mut prev = l2_envelope(0, 0.3, 0.1, 9.0, 1.0);
        for n in 1..200 {
            let e = l2_envelope(n, 0.3, 0.1, 9.0, 1.0);
            assert!(e <= prev);
            prev = e;
        }
        let mut prev = l2_envelope(0, 0.3, 0.1, 0.2, 1.0);
        for n in 1..200 {
            let e = l2_envelope(n, 0.3, 0.1, 0.2, 1.0);
            assert!(e >= prev);
            prev = e;
        }
    }

    #[test]
    fn absorbing_time_examples() {
        assert_eq!(absorbing_time(2.0, 2.0, 0.1).unwrap(), 0.0);
        assert!((absorbing_time(std::f64::consts::E, 1.0, 4.0).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(absorbing_time(0.5, 1.0, 0.1).unwrap(), 0.0);
        assert!(absorbing_time(0.0, 1.0, 0.1).is_err());
    }

    #[test]
    fn gronwall_examples() {
        let gamma = (1.0 + 0.25) / 1.5;
        let b = gronwall_two_step_bound(0.0, 0.0, 0.5, 1.0, 0.4, 2).unwrap();
        assert!((b - 2.0 * gamma).abs() < 1e-15);
        for lambda in [0.1, 0.3, 0.9] {
            let g = gronwall_worst_case(10.0, 10.0, 0.5, 1.0, lambda, 50).unwrap();
            for n in 2..=50u64 {
                let bound = gronwall_two_step_bound(10.0, 10.0, 0.5, 1.0, lambda, n).unwrap();
                assert!(g[n as usize] <= bound, "lambda {lambda} n {n}");
            }
        }
    }

    #[test]
    fn floor_n_minus_1_form_has_counterexample() {
        let g = gronwall_worst_case(10.0, 10.0, 0.5, 1.0, 0.01, 3).unwrap();
        let g4 = g[3];
        assert!((g4 - 6.98).abs() < 1e-12);
        let published = gronwall_bound_floor_n_minus_1(10.0, 10.0, 0.5, 1.0, 0.01, 3).unwrap();
        assert!(g4 > published);
        assert!(g4 <= gronwall_two_step_bound(10.0, 10.0, 0.5, 1.0, 0.01, 3).unwrap());
    }

    #[test]
    fn gronwall_domain() {
        assert!(gronwall_two_step_bound(1.0, 1.0, 0.0, 1.0, 0.5, 3).is_err());
        assert!(gronwall_two_step_bound(1.0, 1.0, 0.1, 1.0, 1.0, 3).is_err());
        assert!(gronwall_two_step_bound(1.0, 1.0, 0.1, 1.0, 0.5, 1).is_err());
        assert!(gronwall_two_step_bound(-1.0, 1.0, 0.1, 1.0, 0.5, 3).is_err());
    }

    #[test]
    fn gap_of_identical_levels() {
        let g = Grid::new(16).unwrap();
        let w = SpectralField::from_fn(g, |x, y| x.sin() * (2.0 * y).cos());
        let pair = StatePair::repeated(w).unwrap();
        assert_eq!(consistency_gap(&pair, 0.01), (0.0, 0.0));
    }

    #[test]
    fn balance_of_steady_state() {
        let g = Grid::new(16).unwrap();
        let nu = 0.1;
        let w = SpectralField::from_fn(g, |x, y| x.sin() * y.sin());
        let f = &w * (2.0 * nu);
        let grad_sq = sobolev_norm(&w, 1.0).powi(2);
        let fw = f.inner(&w);
        let ci = energy_balance_residual(&[(grad_sq, fw); 10], nu, 100, 1);
        assert!(ci.mean.abs() < 1e-14);
    }

    #[test]
    fn power_law_fit() {
        let xs = [1.0, 2.0, 4.0, 8.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(1.5)).collect();
        let (c, p) = fit_power_law(&xs, &ys).unwrap();
        assert!((c - 3.0).abs() < 1e-12 && (p - 1.5).abs() < 1e-12);
        assert_eq!(observed_orders(&[4.0, 1.0, 0.25]), vec![2.0, 2.0]);
    }

    #[test]
    fn geometric_gap_decay() {
        let gaps = [1.0, 0.3, 0.1, 0.05, 0.05, 0.05];
        assert!(gap_decay_holds(&gaps, 0.05));
        assert!(!gap_decay_holds(&[1.0, 0.9], 0.01));
    }
}

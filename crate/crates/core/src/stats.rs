//! Long-time statistics: observables of a state pair, exactly-summed running
//! averages, and block-bootstrap confidence intervals for time series.
//!
//! Running sums use an exact floating-point expansion (Shewchuk partials with
//! a correctly rounded read-out), so sums are independent of ordering and
//! merging accumulators over disjoint windows is bit-identical to
//! accumulating the concatenated window.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::field::SpectralField;
use crate::norms::{g_norm_sq_parts, sobolev_norm, GWeight};

/// Exact running sum of f64 values.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExactSum {
    partials: Vec<f64>,
}

impl ExactSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, mut x: f64) {
        let mut i = 0;
        for j in 0..self.partials.len() {
            let mut y = self.partials[j];
            if x.abs() < y.abs() {
                std::mem::swap(&mut x, &mut y);
            }
            let hi = x + y;
            let lo = y - (hi - x);
            if lo != 0.0 {
                self.partials[i] = lo;
                i += 1;
            }
            x = hi;
        }
        self.partials.truncate(i);
        self.partials.push(x);
    }

    pub fn merge(&mut self, other: &ExactSum) {
        for &p in &other.partials {
            self.add(p);
        }
    }

    /// The exact sum rounded once to the nearest f64.
    pub fn value(&self) -> f64 {
        let p = &self.partials;
        let mut n = p.len();
        if n == 0 {
            return 0.0;
        }
        n -= 1;
        let mut hi = p[n];
        let mut lo = 0.0;
        while n > 0 {
            let x = hi;
            n -= 1;
            let y = p[n];
            hi = x + y;
            let yr = hi - x;
            lo = y - yr;
            if lo != 0.0 {
                break;
            }
        }
        if n > 0 && ((lo < 0.0 && p[n - 1] < 0.0) || (lo > 0.0 && p[n - 1] > 0.0)) {
            let y = lo * 2.0;
            let x = hi + y;
            if y == x - hi {
                hi = x;
            }
        }
        hi
    }
}

/// Count, sum and sum of squares of one observable.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Accumulator {
    count: u64,
    sum: ExactSum,
    sum_sq: ExactSum,
}

impl Accumulator {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        self.sum.add(x);
        self.sum_sq.add(x * x);
    }

    pub fn merge(&mut self, other: &Accumulator) {
        self.count += other.count;
        self.sum.merge(&other.sum);
        self.sum_sq.merge(&other.sum_sq);
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn sum(&self) -> f64 {
        self.sum.value()
    }

    pub fn mean(&self) -> f64 {
        if self.count == 0 {
            return f64::NAN;
        }
        self.sum.value() / self.count as f64
    }

    /// Unbiased sample variance, clamped at zero.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        let n = self.count as f64;
        let s = self.sum.value();
        let mut centred = self.sum_sq.clone();
        centred.add(-s * s / n);
        (centred.value() / (n - 1.0)).max(0.0)
    }
}

/// Signed wavenumber of a cylindrical coordinate (ω, w) with
/// w ∈ {cos(kx + ly), sin(kx + ly)}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ProbeMode {
    pub k: i64,
    pub l: i64,
}

impl ProbeMode {
    /// ((ω, cos(kx+ly)), (ω, sin(kx+ly))).
    pub fn project(self, omega: &SpectralField) -> (f64, f64) {
        let c = omega.coeff(self.k, self.l);
        let area = 4.0 * PI * PI;
        (area * c.re, -area * c.im)
    }
}

/// One row of the observable time series.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationRow {
    pub level: usize,
    pub t: f64,
    /// ½‖∇ψ‖²
    pub energy: f64,
    /// ½‖ω‖²
    pub enstrophy: f64,
    /// ½‖∇ω‖²
    pub palinstrophy: f64,
    /// ‖ωⁿ⁺¹ − ωⁿ‖
    pub gap_l2: f64,
    /// √k ‖∇(ωⁿ⁺¹ − ωⁿ)‖
    pub gap_h1: f64,
    /// ν‖∇ω‖² − (f, ω)
    pub balance: f64,
    /// ‖[ωⁿ, ωⁿ⁺¹]‖²_{G(νk)}
    pub gnorm_sq: f64,
    /// Cylindrical coordinates, cos then sin for each probe mode.
    pub modes: Vec<f64>,
}

impl ObservationRow {
    pub const CSV_HEADER: &'static str =
        "step,t,energy,enstrophy,palinstrophy,gap_l2,gap_h1,balance,gnorm_sq";

    pub fn csv(&self) -> String {
        format!(
            "{},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
            self.level,
            self.t,
            self.energy,
            self.enstrophy,
            self.palinstrophy,
            self.gap_l2,
            self.gap_h1,
            self.balance,
            self.gnorm_sq
        )
    }

    /// Scalar observables in a fixed order, see [`SCALAR_NAMES`].
    pub fn scalars(&self) -> [f64; 7] {
        [
            self.energy,
            self.enstrophy,
            self.palinstrophy,
            self.gap_l2,
            self.gap_h1,
            self.balance,
            self.gnorm_sq,
        ]
    }
}

pub const SCALAR_NAMES: [&str; 7] = [
    "energy",
    "enstrophy",
    "palinstrophy",
    "gap_l2",
    "gap_h1",
    "balance",
    "gnorm_sq",
];

/// Observables of the pair (older, newer) = (ωⁿ, ωⁿ⁺¹) with forcing f, all
/// evaluated at the newer level.
#[allow(clippy::too_many_arguments)]
pub fn observe(
    older: &SpectralField,
    newer: &SpectralField,
    forcing: &SpectralField,
    level: usize,
    t: f64,
    nu: f64,
    k: f64,
    probes: &[ProbeMode],
) -> ObservationRow {
    let enstrophy_full = newer.norm_sq();
    let energy_full = sobolev_norm(newer, -1.0).powi(2);
    let grad_sq = sobolev_norm(newer, 1.0).powi(2);
    let gap = newer - older;
    let gap_l2 = gap.norm();
    let gap_h1 = k.sqrt() * sobolev_norm(&gap, 1.0);
    let balance = nu * grad_sq - forcing.inner(newer);
    let g = GWeight::new(nu * k).expect("nu*k is positive");
    let gnorm_sq = g_norm_sq_parts(older.norm_sq(), older.inner(newer), enstrophy_full, g);
    let mut modes = Vec::with_capacity(2 * probes.len());
    for p in probes {
        let (c, s) = p.project(newer);
        modes.push(c);
        modes.push(s);
    }
    ObservationRow {
        level,
        t,
        energy: 0.5 * energy_full,
        enstrophy: 0.5 * enstrophy_full,
        palinstrophy: 0.5 * grad_sq,
        gap_l2,
        gap_h1,
        balance,
        gnorm_sq,
        modes,
    }
}

/// Running time averages of the scalar observables and cylindrical
/// coordinates, plus a shell-spectrum average, all after a burn-in.
#[derive(Debug, Clone, PartialEq)]
pub struct StatsAccumulator {
    burn_in_steps: usize,
    scalars: Vec<Accumulator>,
    modes: Vec<Accumulator>,
    spectrum: Vec<ExactSum>,
    spectrum_samples: u64,
}

impl StatsAccumulator {
    pub fn new(burn_in_steps: usize) -> Self {
        Self {
            burn_in_steps,
            scalars: vec![Accumulator::default(); SCALAR_NAMES.len()],
            modes: Vec::new(),
            spectrum: Vec::new(),
            spectrum_samples: 0,
        }
    }

    pub fn burn_in_steps(&self) -> usize {
        self.burn_in_steps
    }

    /// Records `row` unless it falls inside the burn-in. Returns whether it counted.
    pub fn push(&mut self, row: &ObservationRow) -> bool {
        if row.level < self.burn_in_steps {
            return false;
        }
        for (acc, x) in self.scalars.iter_mut().zip(row.scalars()) {
            acc.push(x);
        }
        if self.modes.len() < row.modes.len() {
            self.modes.resize(row.modes.len(), Accumulator::default());
        }
        for (acc, &x) in self.modes.iter_mut().zip(&row.modes) {
            acc.push(x);
        }
        true
    }

    pub fn push_spectrum(&mut self, level: usize, shells: &[f64]) -> bool {
        if level < self.burn_in_steps {
            return false;
        }
        if self.spectrum.len() < shells.len() {
            self.spectrum.resize(shells.len(), ExactSum::default());
        }
        for (acc, &x) in self.spectrum.iter_mut().zip(shells) {
            acc.add(x);
        }
        self.spectrum_samples += 1;
        true
    }

    pub fn merge(&mut self, other: &StatsAccumulator) {
        for (a, b) in self.scalars.iter_mut().zip(&other.scalars) {
            a.merge(b);
        }
        if self.modes.len() < other.modes.len() {
            self.modes.resize(other.modes.len(), Accumulator::default());
        }
        for (a, b) in self.modes.iter_mut().zip(&other.modes) {
            a.merge(b);
        }
        if self.spectrum.len() < other.spectrum.len() {
            self.spectrum.resize(other.spectrum.len(), ExactSum::default());
        }
        for (a, b) in self.spectrum.iter_mut().zip(&other.spectrum) {
            a.merge(b);
        }
        self.spectrum_samples += other.spectrum_samples;
    }

    pub fn samples(&self) -> u64 {
        self.scalars[0].count()
    }

    pub fn scalar(&self, name: &str) -> Option<&Accumulator> {
        SCALAR_NAMES
            .iter()
            .position(|n| *n == name)
            .map(|i| &self.scalars[i])
    }

    pub fn mode_means(&self) -> Vec<f64> {
        self.modes.iter().map(Accumulator::mean).collect()
    }

    pub fn mean_spectrum(&self) -> Vec<f64> {
        if self.spectrum_samples == 0 {
            return Vec::new();
        }
        self.spectrum
            .iter()
            .map(|s| s.value() / self.spectrum_samples as f64)
            .collect()
    }
}

/// Moving-block bootstrap estimate of the sampling spread of a series mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BootstrapCi {
    pub mean: f64,
    /// Standard deviation of the resampled means.
    pub sigma: f64,
}

impl BootstrapCi {
    /// mean ± 2σ.
    pub fn interval(&self) -> (f64, f64) {
        (self.mean - 2.0 * self.sigma, self.mean + 2.0 * self.sigma)
    }
}

/// Block length defaults to ⌈√n⌉ when `block_len` is zero.
pub fn block_bootstrap(series: &[f64], block_len: usize, resamples: usize, seed: u64) -> BootstrapCi {
    let n = series.len();
    let mut total = ExactSum::new();
    for &x in series {
        total.add(x);
    }
    let mean = if n == 0 { f64::NAN } else { total.value() / n as f64 };
    if n < 2 || resamples == 0 {
        return BootstrapCi { mean, sigma: 0.0 };
    }
    let block = if block_len == 0 {
        (n as f64).sqrt().ceil() as usize
    } else {
        block_len.min(n)
    };
    let starts = n - block + 1;
    let blocks = n.div_ceil(block);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stats = Accumulator::default();
    for _ in 0..resamples {
        let mut acc = 0.0;
        let mut used = 0usize;
        for _ in 0..blocks {
            let s = rng.gen_range(0..starts);
            let take = block.min(n - used);
            acc += series[s..s + take].iter().sum::<f64>();
            used += take;
        }
        stats.push(acc / used as f64);
    }
    BootstrapCi {
        mean,
        sigma: stats.variance().sqrt(),
    }
}

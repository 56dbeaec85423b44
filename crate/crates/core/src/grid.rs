use std::f64::consts::PI;

use crate::error::{param, Result};

/// Uniform N×N collocation grid on (0, 2π)².
///
/// Coefficient storage follows FFT order: index `i < N/2` is wavenumber `i`,
/// index `N/2` is the Nyquist mode, indices above map to `i - N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Grid {
    n: usize,
}

impl Grid {
    pub fn new(n: usize) -> Result<Self> {
        if n < 4 || n % 2 != 0 {
            return Err(param("N", format!("must be even and >= 4, got {n}")));
        }
        Ok(Self { n })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n * self.n
    }

    /// Mesh spacing, always derived as 2π/N.
    #[inline]
    pub fn h(&self) -> f64 {
        2.0 * PI / self.n as f64
    }

    #[inline]
    pub fn nyquist(&self) -> usize {
        self.n / 2
    }

    /// Signed wavenumber of a storage index. The Nyquist index maps to +N/2.
    #[inline]
    pub fn wavenumber(&self, idx: usize) -> i64 {
        if idx <= self.n / 2 {
            idx as i64
        } else {
            idx as i64 - self.n as i64
        }
    }

    /// Storage index of a signed wavenumber; ±N/2 both map to the Nyquist slot.
    #[inline]
    pub fn index(&self, k: i64) -> usize {
        k.rem_euclid(self.n as i64) as usize
    }

    /// Storage index of the conjugate partner (-k, -l) of slot `(i, j)`.
    #[inline]
    pub fn conj_slot(&self, i: usize, j: usize) -> usize {
        let n = self.n;
        ((n - i) % n) * n + (n - j) % n
    }

    #[inline]
    pub fn is_nyquist(&self, idx: usize) -> bool {
        idx == self.n / 2
    }

    /// Physical coordinate of collocation point `i`.
    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.h()
    }

    /// Wavenumbers for first derivatives, with the Nyquist entry zeroed.
    pub fn derivative_wavenumbers(&self) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                if self.is_nyquist(i) {
                    0.0
                } else {
                    self.wavenumber(i) as f64
                }
            })
            .collect()
    }

    /// |κ|² = k² + l² for every slot, row-major.
    pub fn wavenumber_sq(&self) -> Vec<f64> {
        let n = self.n;
        let mut out = Vec::with_capacity(n * n);
        for i in 0..n {
            let k = self.wavenumber(i) as f64;
            for j in 0..n {
                let l = self.wavenumber(j) as f64;
                out.push(k * k + l * l);
            }
        }
        out
    }
}

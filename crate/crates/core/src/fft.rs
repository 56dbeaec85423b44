//! Square 2D complex FFTs built from `rustfft` row transforms.
//!
//! Both directions are unnormalized; callers apply the 1/N² of the forward
//! expansion themselves. Plans and scratch live per thread.

use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
    static CACHE: RefCell<HashMap<usize, Fft2>> = RefCell::new(HashMap::new());
}

/// Grids at least this wide transform their rows in parallel.
#[cfg(feature = "parallel")]
const PAR_MIN_N: usize = 128;

pub struct Fft2 {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
}

impl Fft2 {
    pub fn new(n: usize) -> Self {
        let (fwd, inv) = PLANNER.with(|p| {
            let mut p = p.borrow_mut();
            (p.plan_fft_forward(n), p.plan_fft_inverse(n))
        });
        let scratch_len = fwd
            .get_inplace_scratch_len()
            .max(inv.get_inplace_scratch_len());
        Self {
            n,
            fwd,
            inv,
            scratch: vec![Complex64::default(); scratch_len * n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Σ f e^{-i(kx + ly)} over the grid, in place.
    pub fn forward(&mut self, data: &mut [Complex64]) {
        let plan = Arc::clone(&self.fwd);
        self.transform(&*plan, data);
    }

    /// Σ f̂ e^{+i(kx + ly)} over all modes, in place.
    pub fn inverse(&mut self, data: &mut [Complex64]) {
        let plan = Arc::clone(&self.inv);
        self.transform(&*plan, data);
    }

    fn transform(&mut self, plan: &dyn Fft<f64>, data: &mut [Complex64]) {
        assert_eq!(data.len(), self.n * self.n, "fft buffer size");
        self.rows(plan, data);
        transpose_square(data, self.n);
        self.rows(plan, data);
        transpose_square(data, self.n);
    }

    fn rows(&mut self, plan: &dyn Fft<f64>, data: &mut [Complex64]) {
        #[cfg(feature = "parallel")]
        if self.n >= PAR_MIN_N {
            let n = self.n;
            use rayon::prelude::*;
            let per_row = plan.get_inplace_scratch_len();
            data.par_chunks_mut(n).for_each_init(
                || vec![Complex64::default(); per_row],
                |scratch, row| plan.process_with_scratch(row, scratch),
            );
            return;
        }
        let per_row = plan.get_inplace_scratch_len();
        plan.process_with_scratch(data, &mut self.scratch[..per_row]);
    }
}

fn transpose_square(data: &mut [Complex64], n: usize) {
    for i in 0..n {
        for j in (i + 1)..n {
            data.swap(i * n + j, j * n + i);
        }
    }
}

/// Runs `f` with this thread's cached transform for size `n`.
pub fn with_fft2<R>(n: usize, f: impl FnOnce(&mut Fft2) -> R) -> R {
    CACHE.with(|cache| {
        let mut cache = cache.borrow_mut();
        let fft = cache.entry(n).or_insert_with(|| Fft2::new(n));
        f(fft)
    })
}

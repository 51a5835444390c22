//! Cached FFT plans. rustfft planners are not Sync, so plans are cached per
//! thread; chains run whole trials on one thread so the cache hit rate is
//! effectively 1.

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::Arc;

thread_local! {
    static PLANS: RefCell<HashMap<(usize, bool), Arc<dyn Fft<f64>>>> =
        RefCell::new(HashMap::new());
}

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANS.with(|cache| {
        cache
            .borrow_mut()
            .entry((n, inverse))
            .or_insert_with(|| {
                let mut planner = FftPlanner::new();
                if inverse {
                    planner.plan_fft_inverse(n)
                } else {
                    planner.plan_fft_forward(n)
                }
            })
            .clone()
    })
}

/// In-place forward DFT: ψ̂_m = Σ_j ψ_j e^{−2πi mj/N}.
pub fn forward(buf: &mut [Complex64]) {
    plan(buf.len(), false).process(buf);
}

/// In-place inverse DFT with 1/N normalization.
pub fn inverse(buf: &mut [Complex64]) {
    let n = buf.len();
    plan(n, true).process(buf);
    let s = 1.0 / n as f64;
    for v in buf.iter_mut() {
        *v *= s;
    }
}

/// Signed FFT frequency index: 0, 1, …, N/2−1, −N/2, …, −1.
pub fn freq_index(m: usize, n: usize) -> i64 {
    if m < n / 2 {
        m as i64
    } else {
        m as i64 - n as i64
    }
}

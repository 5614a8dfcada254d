//! Square 2D complex FFTs built from cached 1D plans.

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

/// Rows handed to one rayon task. Row transforms are independent, so the
/// split has no effect on the result.
const ROWS_PER_TASK: usize = 16;
const TRANSPOSE_BLOCK: usize = 32;

pub(crate) struct Fft2 {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

static PLANS: OnceLock<Mutex<HashMap<usize, Arc<Fft2>>>> = OnceLock::new();

impl Fft2 {
    /// Shared plan for `n × n` transforms.
    pub(crate) fn get(n: usize) -> Arc<Fft2> {
        let cache = PLANS.get_or_init(|| Mutex::new(HashMap::new()));
        let mut cache = cache.lock().expect("fft plan cache poisoned");
        cache
            .entry(n)
            .or_insert_with(|| {
                let mut planner = FftPlanner::new();
                Arc::new(Fft2 {
                    n,
                    forward: planner.plan_fft_forward(n),
                    inverse: planner.plan_fft_inverse(n),
                })
            })
            .clone()
    }

    /// Unnormalized forward transform, in place.
    pub(crate) fn forward(&self, data: &mut [Complex64]) {
        self.transform(data, &self.forward);
    }

    /// Inverse transform normalized by `1/n²`, in place.
    pub(crate) fn inverse(&self, data: &mut [Complex64]) {
        self.transform(data, &self.inverse);
        let s = 1.0 / (self.n * self.n) as f64;
        data.par_iter_mut().for_each(|c| *c *= s);
    }

    fn transform(&self, data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        assert_eq!(data.len(), self.n * self.n);
        self.rows(data, plan);
        transpose(data, self.n);
        self.rows(data, plan);
        transpose(data, self.n);
    }

    fn rows(&self, data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        let scratch_len = plan.get_inplace_scratch_len();
        data.par_chunks_mut(self.n * ROWS_PER_TASK).for_each_init(
            || vec![Complex64::new(0.0, 0.0); scratch_len],
            |scratch, chunk| plan.process_with_scratch(chunk, scratch),
        );
    }
}

fn transpose(data: &mut [Complex64], n: usize) {
    for ib in (0..n).step_by(TRANSPOSE_BLOCK) {
        for jb in (ib..n).step_by(TRANSPOSE_BLOCK) {
            let iend = (ib + TRANSPOSE_BLOCK).min(n);
            let jend = (jb + TRANSPOSE_BLOCK).min(n);
            for i in ib..iend {
                let jstart = if ib == jb { i + 1 } else { jb };
                for j in jstart..jend {
                    data.swap(i * n + j, j * n + i);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let n = 64;
        let plan = Fft2::get(n);
        let orig: Vec<Complex64> = (0..n * n)
            .map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()))
            .collect();
        let mut data = orig.clone();
        plan.forward(&mut data);
        plan.inverse(&mut data);
        for (a, b) in data.iter().zip(&orig) {
            assert!((a - b).norm() < 1e-13);
        }
    }

    #[test]
    fn single_mode_lands_in_its_bin() {
        let n = 16;
        let plan = Fft2::get(n);
        let mut data: Vec<Complex64> = (0..n * n)
            .map(|idx| {
                let (j1, j2) = ((idx % n) as f64, (idx / n) as f64);
                let phase = 2.0 * std::f64::consts::PI * (3.0 * j1 + 5.0 * j2) / n as f64;
                Complex64::new(phase.cos(), phase.sin())
            })
            .collect();
        plan.forward(&mut data);
        let hit = 5 * n + 3;
        assert!((data[hit].re - (n * n) as f64).abs() < 1e-9);
        for (i, c) in data.iter().enumerate() {
            if i != hit {
                assert!(c.norm() < 1e-9);
            }
        }
    }
}

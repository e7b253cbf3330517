//! Multi-dimensional complex FFTs on row-major tensors, axis by axis.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Smallest `n' ≥ n` whose prime factors are all in {2, 3, 5, 7}.
pub(crate) fn smooth_size(n: usize) -> usize {
    let mut m = n.max(1);
    loop {
        let mut k = m;
        for p in [2, 3, 5, 7] {
            while k % p == 0 {
                k /= p;
            }
        }
        if k == 1 {
            return m;
        }
        m += 1;
    }
}

#[derive(Clone)]
pub(crate) struct FftNd {
    dims: Vec<usize>,
    forward: Vec<Arc<dyn Fft<f64>>>,
    inverse: Vec<Arc<dyn Fft<f64>>>,
    scratch_len: usize,
}

impl std::fmt::Debug for FftNd {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FftNd").field("dims", &self.dims).finish()
    }
}

impl FftNd {
    pub(crate) fn new(dims: &[usize]) -> Self {
        let mut planner = FftPlanner::new();
        let forward: Vec<_> = dims.iter().map(|&n| planner.plan_fft_forward(n)).collect();
        let inverse: Vec<_> = dims.iter().map(|&n| planner.plan_fft_inverse(n)).collect();
        let scratch_len = forward
            .iter()
            .chain(&inverse)
            .map(|p| p.get_inplace_scratch_len())
            .max()
            .unwrap_or(0);
        Self {
            dims: dims.to_vec(),
            forward,
            inverse,
            scratch_len,
        }
    }

    pub(crate) fn len(&self) -> usize {
        self.dims.iter().product()
    }

    /// Unnormalized forward transform `Σ_x f(x) e^{−2πi k·x/P}`.
    pub(crate) fn forward(&self, data: &mut [Complex64]) {
        self.run(data, &self.forward);
    }

    /// Unnormalized inverse transform.
    pub(crate) fn inverse(&self, data: &mut [Complex64]) {
        self.run(data, &self.inverse);
    }

    fn run(&self, data: &mut [Complex64], plans: &[Arc<dyn Fft<f64>>]) {
        debug_assert_eq!(data.len(), self.len());
        let mut scratch = vec![Complex64::new(0.0, 0.0); self.scratch_len];
        let total = data.len();
        let mut stride = total;
        for (axis, plan) in plans.iter().enumerate() {
            let n = self.dims[axis];
            stride /= n;
            if stride == 1 {
                // Last axis: lines are contiguous.
                plan.process_with_scratch(data, &mut scratch);
                continue;
            }
            let mut line = vec![Complex64::new(0.0, 0.0); n];
            let block = n * stride;
            for outer in (0..total).step_by(block) {
                for inner in 0..stride {
                    let base = outer + inner;
                    for (j, v) in line.iter_mut().enumerate() {
                        *v = data[base + j * stride];
                    }
                    plan.process_with_scratch(&mut line, &mut scratch);
                    for (j, v) in line.iter().enumerate() {
                        data[base + j * stride] = *v;
                    }
                }
            }
        }
    }
}

//! Minimal 3D FFT on flat row-major `Vec<Complex64>` buffers, built on
//! rustfft. Used for the cyclic-convolution path of the integral operator
//! and for the contraction-constant quadrature.

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

/// Forward/inverse FFT plans for an `n × n × n` cube.
pub struct Fft3 {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Fft3 {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Fft3 {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    /// Applies the 1D transform along every axis in place.
    fn transform(&self, data: &mut [Complex64], fft: &Arc<dyn Fft<f64>>) {
        let n = self.n;
        assert_eq!(data.len(), n * n * n);
        let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
        // Axis 2 (contiguous rows).
        for row in data.chunks_exact_mut(n) {
            fft.process_with_scratch(row, &mut scratch);
        }
        // Axes 0 and 1 via gather/scatter into a contiguous buffer.
        let mut buf = vec![Complex64::default(); n];
        for (stride, plane, offset) in [(n, n * n, 1usize), (n * n, 1, n)] {
            // stride: distance between consecutive elements along the axis;
            // iterate over all n² lines orthogonal to it.
            for a in 0..n {
                for b in 0..n {
                    let base = a * plane + b * offset;
                    for (i, slot) in buf.iter_mut().enumerate() {
                        *slot = data[base + i * stride];
                    }
                    fft.process_with_scratch(&mut buf, &mut scratch);
                    for (i, &v) in buf.iter().enumerate() {
                        data[base + i * stride] = v;
                    }
                }
            }
        }
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        self.transform(data, &self.forward);
    }

    /// Unnormalized inverse; the caller divides by `len()` once.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.transform(data, &self.inverse);
    }
}

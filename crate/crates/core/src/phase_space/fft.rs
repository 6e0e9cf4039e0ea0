use std::sync::Arc;

use ndarray::Array2;
use num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::scalar::Real;

/// Forward/inverse FFT plans of one length, cheap to clone and share across
/// threads. The inverse is unnormalized, as in `rustfft`.
#[derive(Clone)]
pub struct FftPair<T: Real> {
    n: usize,
    forward: Arc<dyn Fft<T>>,
    inverse: Arc<dyn Fft<T>>,
}

impl<T: Real> std::fmt::Debug for FftPair<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FftPair").field("n", &self.n).finish()
    }
}

impl<T: Real> FftPair<T> {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self { n, forward: planner.plan_fft_forward(n), inverse: planner.plan_fft_inverse(n) }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn make_scratch(&self) -> Vec<Complex<T>> {
        let len = self
            .forward
            .get_inplace_scratch_len()
            .max(self.inverse.get_inplace_scratch_len());
        vec![Complex::default(); len]
    }

    /// Transforms every consecutive chunk of `n` values of `buf`.
    #[inline]
    pub fn forward(&self, buf: &mut [Complex<T>], scratch: &mut [Complex<T>]) {
        self.forward.process_with_scratch(buf, scratch);
    }

    #[inline]
    pub fn inverse(&self, buf: &mut [Complex<T>], scratch: &mut [Complex<T>]) {
        self.inverse.process_with_scratch(buf, scratch);
    }

    /// Forward transform of each row of a row-major square matrix.
    pub fn forward_rows(&self, m: &mut Array2<Complex<T>>, scratch: &mut [Complex<T>]) {
        let buf = m.as_slice_mut().expect("contiguous matrix");
        self.forward.process_with_scratch(buf, scratch);
    }

    pub fn inverse_rows(&self, m: &mut Array2<Complex<T>>, scratch: &mut [Complex<T>]) {
        let buf = m.as_slice_mut().expect("contiguous matrix");
        self.inverse.process_with_scratch(buf, scratch);
    }
}

/// In-place transpose of a square matrix.
pub fn transpose_in_place<A: Copy>(m: &mut Array2<A>) {
    let n = m.nrows();
    debug_assert_eq!(n, m.ncols());
    let s = m.as_slice_mut().expect("contiguous matrix");
    // blocked to stay cache friendly on 512 x 512 matrices
    const B: usize = 32;
    for bi in (0..n).step_by(B) {
        for bj in (bi..n).step_by(B) {
            for i in bi..(bi + B).min(n) {
                let j0 = if bi == bj { i + 1 } else { bj };
                for j in j0..(bj + B).min(n) {
                    s.swap(i * n + j, j * n + i);
                }
            }
        }
    }
}

//! Separable 2D complex FFT over a row-major buffer (1D is the `cols == 1` case).

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

pub(crate) struct Fft2 {
    rows: usize,
    cols: usize,
    fwd_rows: Arc<dyn Fft<f64>>,
    inv_rows: Arc<dyn Fft<f64>>,
    fwd_cols: Arc<dyn Fft<f64>>,
    inv_cols: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    pub fn new(rows: usize, cols: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            rows,
            cols,
            // "rows" transforms run along axis 1 (length `cols`)
            fwd_rows: planner.plan_fft_forward(cols),
            inv_rows: planner.plan_fft_inverse(cols),
            fwd_cols: planner.plan_fft_forward(rows),
            inv_cols: planner.plan_fft_inverse(rows),
        }
    }

    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn forward(&self, buf: &mut [Complex64]) {
        self.run(buf, &self.fwd_rows, &self.fwd_cols);
    }

    /// Inverse transform including the `1/N` normalization.
    pub fn inverse(&self, buf: &mut [Complex64]) {
        self.run(buf, &self.inv_rows, &self.inv_cols);
        let norm = 1.0 / self.len() as f64;
        for v in buf.iter_mut() {
            *v *= norm;
        }
    }

    fn run(&self, buf: &mut [Complex64], along_rows: &Arc<dyn Fft<f64>>, along_cols: &Arc<dyn Fft<f64>>) {
        debug_assert_eq!(buf.len(), self.len());
        if self.cols > 1 {
            transform_chunks(buf, self.cols, along_rows);
        }
        if self.rows > 1 {
            let mut t = transpose(buf, self.rows, self.cols);
            transform_chunks(&mut t, self.rows, along_cols);
            let back = transpose(&t, self.cols, self.rows);
            buf.copy_from_slice(&back);
        }
    }
}

#[cfg(feature = "parallel")]
fn transform_chunks(buf: &mut [Complex64], len: usize, fft: &Arc<dyn Fft<f64>>) {
    buf.par_chunks_mut(len).for_each(|row| fft.process(row));
}

#[cfg(not(feature = "parallel"))]
fn transform_chunks(buf: &mut [Complex64], len: usize, fft: &Arc<dyn Fft<f64>>) {
    fft.process(buf);
    let _ = len;
}

fn transpose(src: &[Complex64], rows: usize, cols: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); src.len()];
    for r in 0..rows {
        for c in 0..cols {
            out[c * rows + r] = src[r * cols + c];
        }
    }
    out
}

/// Smallest `m >= n` whose only prime factors are 2, 3 and 5.
pub(crate) fn next_fast_len(n: usize) -> usize {
    let mut m = n.max(1);
    loop {
        let mut k = m;
        for p in [2, 3, 5] {
            while k.is_multiple_of(p) {
                k /= p;
            }
        }
        if k == 1 {
            return m;
        }
        m += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fast_lengths() {
        assert_eq!(next_fast_len(1), 1);
        assert_eq!(next_fast_len(7), 8);
        assert_eq!(next_fast_len(769), 800);
        assert_eq!(next_fast_len(121), 125);
    }

    #[test]
    fn roundtrip_is_identity() {
        let f = Fft2::new(6, 10);
        let orig: Vec<Complex64> = (0..60)
            .map(|k| Complex64::new((k as f64).sin(), (k as f64 * 0.3).cos()))
            .collect();
        let mut buf = orig.clone();
        f.forward(&mut buf);
        f.inverse(&mut buf);
        for (a, b) in buf.iter().zip(&orig) {
            assert!((a - b).norm() < 1e-13);
        }
    }
}

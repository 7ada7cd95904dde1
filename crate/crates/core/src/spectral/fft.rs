use std::cell::RefCell;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(len: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(len))
}

/// Full forward DFT of a real sequence.
pub(crate) fn dft_real(signal: &[f64]) -> Vec<Complex<f64>> {
    let mut buf: Vec<Complex<f64>> = signal.iter().map(|&v| Complex::new(v, 0.0)).collect();
    plan(buf.len()).process(&mut buf);
    buf
}

/// Forward 2-D DFT of a row-major `n x n` real grid, unshifted.
pub(crate) fn dft_2d<T: Copy + Into<f64>>(grid: &[T], n: usize) -> Vec<Complex<f64>> {
    debug_assert_eq!(grid.len(), n * n);
    let fft = plan(n);
    let mut buf: Vec<Complex<f64>> = grid.iter().map(|&v| Complex::new(v.into(), 0.0)).collect();
    // rows, then columns via a transpose
    fft.process(&mut buf);
    let mut t = transpose(&buf, n);
    fft.process(&mut t);
    transpose_into(&t, n, &mut buf);
    buf
}

fn transpose(src: &[Complex<f64>], n: usize) -> Vec<Complex<f64>> {
    let mut dst = vec![Complex::new(0.0, 0.0); n * n];
    transpose_into(src, n, &mut dst);
    dst
}

fn transpose_into(src: &[Complex<f64>], n: usize, dst: &mut [Complex<f64>]) {
    for r in 0..n {
        for c in 0..n {
            dst[c * n + r] = src[r * n + c];
        }
    }
}

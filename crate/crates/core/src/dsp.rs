//! Small spectral helpers shared by the receiver, ranging and analysis code.

use std::cell::RefCell;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(len: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(len))
}

/// In-place forward DFT, unnormalized: `X[k] = Σ x[n] e^{-j2πkn/N}`.
pub fn fft_in_place(buf: &mut [Complex64]) {
    if buf.len() > 1 {
        plan(buf.len()).process(buf);
    }
}

/// Forward DFT of `x` zero-padded (or truncated) to `nfft` points.
pub fn fft_padded(x: &[Complex64], nfft: usize) -> Vec<Complex64> {
    let mut buf = vec![Complex64::new(0.0, 0.0); nfft];
    let n = x.len().min(nfft);
    buf[..n].copy_from_slice(&x[..n]);
    fft_in_place(&mut buf);
    buf
}

/// `|DFT|²` of `x` zero-padded to `nfft`, accumulated into `acc`.
pub fn accumulate_power(x: &[Complex64], acc: &mut [f64]) {
    let spec = fft_padded(x, acc.len());
    for (a, z) in acc.iter_mut().zip(spec) {
        *a += z.norm_sqr();
    }
}

/// Index of the largest value; ties resolve to the smallest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Vertex offset of the parabola through three equally spaced points,
/// relative to the middle one, clamped to `[-0.5, 0.5]`.
pub fn parabolic_offset(left: f64, mid: f64, right: f64) -> f64 {
    let den = left - 2.0 * mid + right;
    if den == 0.0 || !den.is_finite() {
        return 0.0;
    }
    (0.5 * (left - right) / den).clamp(-0.5, 0.5)
}

/// Fractional peak position in a circular spectrum.
pub fn circular_peak(power: &[f64], interpolate: bool) -> f64 {
    let n = power.len();
    let k = argmax(power);
    if !interpolate || n < 3 {
        return k as f64;
    }
    let left = power[(k + n - 1) % n];
    let right = power[(k + 1) % n];
    k as f64 + parabolic_offset(left, power[k], right)
}

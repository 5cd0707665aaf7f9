//! Unnormalized multi-dimensional FFT over row-major arrays (last axis fastest).

use rustfft::num_complex::Complex64;
use rustfft::{FftDirection, FftPlanner};

pub fn fft_nd(data: &mut [Complex64], dims: &[usize], direction: FftDirection) {
    let total: usize = dims.iter().product();
    assert_eq!(total, data.len(), "array size does not match dims");
    let mut planner = FftPlanner::new();
    let mut stride = 1;
    let mut line = Vec::new();
    for axis in (0..dims.len()).rev() {
        let n = dims[axis];
        let fft = planner.plan_fft(n, direction);
        let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        line.resize(n, Complex64::new(0.0, 0.0));
        let block = n * stride;
        for outer in (0..total).step_by(block) {
            for inner in 0..stride {
                let base = outer + inner;
                if stride == 1 {
                    fft.process_with_scratch(&mut data[base..base + n], &mut scratch);
                    continue;
                }
                for k in 0..n {
                    line[k] = data[base + k * stride];
                }
                fft.process_with_scratch(&mut line, &mut scratch);
                for k in 0..n {
                    data[base + k * stride] = line[k];
                }
            }
        }
        stride *= n;
    }
}

/// Signed frequency index of FFT bin k on an axis of length n.
pub fn signed_index(k: usize, n: usize) -> i64 {
    if k < n.div_ceil(2) {
        k as i64
    } else {
        k as i64 - n as i64
    }
}

/// Multi-index of a flat row-major offset.
pub fn unravel(mut flat: usize, dims: &[usize], out: &mut [usize]) {
    for axis in (0..dims.len()).rev() {
        out[axis] = flat % dims[axis];
        flat /= dims[axis];
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive(data: &[Complex64], dims: &[usize]) -> Vec<Complex64> {
        let total = data.len();
        let mut out = vec![Complex64::new(0.0, 0.0); total];
        let mut a = vec![0; dims.len()];
        let mut b = vec![0; dims.len()];
        for (i, o) in out.iter_mut().enumerate() {
            unravel(i, dims, &mut a);
            for (j, x) in data.iter().enumerate() {
                unravel(j, dims, &mut b);
                let ph: f64 = (0..dims.len()).map(|k| (a[k] * b[k]) as f64 / dims[k] as f64).sum();
                *o += x * Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * ph);
            }
        }
        out
    }

    #[test]
    fn matches_naive_dft() {
        let dims = [4, 8, 2];
        let data: Vec<Complex64> = (0..64).map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos())).collect();
        let mut fast = data.clone();
        fft_nd(&mut fast, &dims, FftDirection::Forward);
        let slow = naive(&data, &dims);
        for (a, b) in fast.iter().zip(&slow) {
            assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn signed_indices() {
        assert_eq!(signed_index(0, 8), 0);
        assert_eq!(signed_index(3, 8), 3);
        assert_eq!(signed_index(4, 8), -4);
        assert_eq!(signed_index(7, 8), -1);
    }
}

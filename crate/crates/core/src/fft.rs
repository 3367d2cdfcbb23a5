//! Multi-dimensional complex FFT on row-major arrays, one axis at a time.

use num_complex::Complex64;
use rustfft::{FftDirection, FftPlanner};

const LINE_BATCH: usize = 64;

/// In-place unnormalized transform over every axis of `data` with shape `dims`.
pub fn fft_nd(data: &mut [Complex64], dims: &[usize], direction: FftDirection) {
    assert_eq!(data.len(), dims.iter().product::<usize>());
    let mut planner = FftPlanner::new();
    let total = data.len();
    for axis in 0..dims.len() {
        let n = dims[axis];
        if n <= 1 {
            continue;
        }
        let fft = planner.plan_fft(n, direction);
        let stride: usize = dims[axis + 1..].iter().product();
        if stride == 1 {
            fft.process(data);
            continue;
        }
        let block = n * stride;
        let mut buf = vec![Complex64::default(); n * LINE_BATCH.min(stride)];
        let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
        for start in (0..total).step_by(block) {
            let blk = &mut data[start..start + block];
            let mut j0 = 0;
            while j0 < stride {
                let w = LINE_BATCH.min(stride - j0);
                for k in 0..n {
                    let row = &blk[k * stride + j0..k * stride + j0 + w];
                    for (jj, &v) in row.iter().enumerate() {
                        buf[jj * n + k] = v;
                    }
                }
                fft.process_with_scratch(&mut buf[..w * n], &mut scratch);
                for k in 0..n {
                    let row = &mut blk[k * stride + j0..k * stride + j0 + w];
                    for (jj, v) in row.iter_mut().enumerate() {
                        *v = buf[jj * n + k];
                    }
                }
                j0 += w;
            }
        }
    }
}

pub fn forward(data: &mut [Complex64], dims: &[usize]) {
    fft_nd(data, dims, FftDirection::Forward);
}

/// Inverse transform including the `1/N` normalization.
pub fn inverse(data: &mut [Complex64], dims: &[usize]) {
    fft_nd(data, dims, FftDirection::Inverse);
    let s = 1.0 / data.len() as f64;
    for v in data.iter_mut() {
        *v *= s;
    }
}

/// Flat index of `-k` on the torus with side lengths `dims`.
pub fn negated_index(mut idx: usize, dims: &[usize]) -> usize {
    let mut out = 0;
    let mut mult = 1;
    for &n in dims.iter().rev() {
        let k = idx % n;
        idx /= n;
        out += ((n - k) % n) * mult;
        mult *= n;
    }
    out
}

/// Splits the transform `Z` of `x + i y` (with `x`, `y` real) into the
/// transforms of `x` and `y`.
pub fn split_packed(z: &[Complex64], dims: &[usize]) -> (Vec<Complex64>, Vec<Complex64>) {
    let mut fx = vec![Complex64::default(); z.len()];
    let mut fy = vec![Complex64::default(); z.len()];
    for i in 0..z.len() {
        let zc = z[negated_index(i, dims)].conj();
        fx[i] = (z[i] + zc) * 0.5;
        fy[i] = (z[i] - zc) * Complex64::new(0.0, -0.5);
    }
    (fx, fy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::e;

    fn naive_dft(x: &[Complex64], dims: &[usize]) -> Vec<Complex64> {
        let total = x.len();
        let coords = |mut i: usize| {
            let mut c = vec![0usize; dims.len()];
            for a in (0..dims.len()).rev() {
                c[a] = i % dims[a];
                i /= dims[a];
            }
            c
        };
        (0..total)
            .map(|k| {
                let kc = coords(k);
                (0..total)
                    .map(|n| {
                        let nc = coords(n);
                        let ph: f64 = (0..dims.len()).map(|a| (kc[a] * nc[a]) as f64 / dims[a] as f64).sum();
                        x[n] * e(-ph)
                    })
                    .sum()
            })
            .collect()
    }

    #[test]
    fn matches_naive_dft() {
        let dims = [3usize, 4, 70];
        let x: Vec<Complex64> =
            (0..dims.iter().product::<usize>()).map(|i| Complex64::new((i as f64).sin(), (i as f64 * 0.3).cos())).collect();
        let mut y = x.clone();
        forward(&mut y, &dims);
        let z = naive_dft(&x, &dims);
        for (a, b) in y.iter().zip(&z) {
            assert!((a - b).norm() < 1e-9);
        }
        inverse(&mut y, &dims);
        for (a, b) in y.iter().zip(&x) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn packed_split() {
        let dims = [5usize, 6];
        let xs: Vec<f64> = (0..30).map(|i| (i as f64 * 0.7).sin()).collect();
        let ys: Vec<f64> = (0..30).map(|i| (i as f64 * 1.3).cos()).collect();
        let mut z: Vec<Complex64> = xs.iter().zip(&ys).map(|(&a, &b)| Complex64::new(a, b)).collect();
        forward(&mut z, &dims);
        let (fx, fy) = split_packed(&z, &dims);
        let mut ex: Vec<Complex64> = xs.iter().map(|&a| Complex64::new(a, 0.0)).collect();
        let mut ey: Vec<Complex64> = ys.iter().map(|&a| Complex64::new(a, 0.0)).collect();
        forward(&mut ex, &dims);
        forward(&mut ey, &dims);
        for i in 0..30 {
            assert!((fx[i] - ex[i]).norm() < 1e-12 && (fy[i] - ey[i]).norm() < 1e-12);
        }
        assert_eq!(negated_index(0, &dims), 0);
        assert_eq!(negated_index(7, &dims), 4 * 6 + 5);
    }
}

//! Small numeric helpers shared by the kernels: compensated accumulation,
//! double-double sums and integer utilities.

use num_complex::Complex64;
use std::f64::consts::TAU;

/// `e(x) = exp(2πi x)`.
#[inline]
pub fn e(x: f64) -> Complex64 {
    let (s, c) = (TAU * x).sin_cos();
    Complex64::new(c, s)
}

/// `e(k/q)` with the residue reduced exactly before the angle is formed.
#[inline]
pub fn e_q(k: i128, q: u64) -> Complex64 {
    let r = k.rem_euclid(q as i128) as f64;
    e(r / q as f64)
}

/// Floor of the square root, exact for all `u64`.
pub fn isqrt(n: u64) -> u64 {
    if n < 2 {
        return n;
    }
    let mut x = (n as f64).sqrt() as u64;
    while x.checked_mul(x).map_or(true, |sq| sq > n) {
        x -= 1;
    }
    while (x + 1).checked_mul(x + 1).is_some_and(|sq| sq <= n) {
        x += 1;
    }
    x
}

pub fn is_square(n: u64) -> bool {
    let r = isqrt(n);
    r * r == n
}

/// Smallest integer `>= n` whose prime factors are all in {2, 3, 5, 7}.
pub fn fft_friendly_size(n: usize) -> usize {
    let mut m = n.max(1);
    loop {
        let mut r = m;
        for p in [2, 3, 5, 7] {
            while r % p == 0 {
                r /= p;
            }
        }
        if r == 1 {
            return m;
        }
        m += 1;
    }
}

/// Neumaier-compensated complex accumulator.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: Complex64,
    comp: Complex64,
}

#[inline]
fn neumaier(sum: &mut f64, comp: &mut f64, x: f64) {
    let t = *sum + x;
    if sum.abs() >= x.abs() {
        *comp += (*sum - t) + x;
    } else {
        *comp += (x - t) + *sum;
    }
    *sum = t;
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, z: Complex64) {
        neumaier(&mut self.sum.re, &mut self.comp.re, z.re);
        neumaier(&mut self.sum.im, &mut self.comp.im, z.im);
    }

    pub fn value(&self) -> Complex64 {
        self.sum + self.comp
    }
}

impl FromIterator<Complex64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = Complex64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::new();
        for z in iter {
            acc.add(z);
        }
        acc
    }
}

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi)/2`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DoubleDouble {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl DoubleDouble {
    pub fn from_f64(x: f64) -> Self {
        Self { hi: x, lo: 0.0 }
    }

    pub fn add(self, other: Self) -> Self {
        let (s, e) = two_sum(self.hi, other.hi);
        let e = e + self.lo + other.lo;
        let (hi, lo) = two_sum(s, e);
        Self { hi, lo }
    }

    pub fn mul(self, other: Self) -> Self {
        let (p, e) = two_prod(self.hi, other.hi);
        let e = e + self.hi * other.lo + self.lo * other.hi;
        let (hi, lo) = two_sum(p, e);
        Self { hi, lo }
    }

    pub fn neg(self) -> Self {
        Self { hi: -self.hi, lo: -self.lo }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }
}

/// Complex number with double-double parts.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DdComplex {
    pub re: DoubleDouble,
    pub im: DoubleDouble,
}

impl DdComplex {
    pub fn from_c64(z: Complex64) -> Self {
        Self { re: DoubleDouble::from_f64(z.re), im: DoubleDouble::from_f64(z.im) }
    }

    pub fn one() -> Self {
        Self::from_c64(Complex64::new(1.0, 0.0))
    }

    pub fn add(self, o: Self) -> Self {
        Self { re: self.re.add(o.re), im: self.im.add(o.im) }
    }

    pub fn mul(self, o: Self) -> Self {
        let re = self.re.mul(o.re).add(self.im.mul(o.im).neg());
        let im = self.re.mul(o.im).add(self.im.mul(o.re));
        Self { re, im }
    }

    pub fn to_c64(self) -> Complex64 {
        Complex64::new(self.re.to_f64(), self.im.to_f64())
    }
}

/// `(2π r)`-free evaluation of `e(k/q)` as a double-double, using the
/// symmetric reduction of the angle to `[0, π/4]` before calling `sin_cos`.
pub fn e_q_dd(k: i128, q: u64) -> DdComplex {
    // Octant reduction keeps the argument of sin/cos small, which is where
    // the libm routines are correctly rounded.
    let q8 = 8 * q as i128;
    let k8 = (8 * k).rem_euclid(q8);
    let oct = (k8 * 8 / q8) as u32; // which octant, 0..8
    let rem = k8 - oct as i128 * q as i128; // in [0, q)
    let theta = std::f64::consts::FRAC_PI_4 * (rem as f64 / q as f64);
    let (s, c) = theta.sin_cos();
    let (s1, c1) = (std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2);
    // rotate (c, s) by oct * 45 degrees
    let z = match oct {
        0 => (c, s),
        1 => (c1 * (c - s), s1 * (c + s)),
        2 => (-s, c),
        3 => (-c1 * (c + s), s1 * (c - s)),
        4 => (-c, -s),
        5 => (-c1 * (c - s), -s1 * (c + s)),
        6 => (s, -c),
        _ => (c1 * (c + s), -s1 * (c - s)),
    };
    DdComplex::from_c64(Complex64::new(z.0, z.1))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn isqrt_edges() {
        assert_eq!(isqrt(0), 0);
        assert_eq!(isqrt(15), 3);
        assert_eq!(isqrt(16), 4);
        assert_eq!(isqrt(u64::MAX), 4294967295);
    }

    #[test]
    fn fft_sizes() {
        assert_eq!(fft_friendly_size(17), 18);
        assert_eq!(fft_friendly_size(29), 30);
        assert_eq!(fft_friendly_size(11), 12);
        assert_eq!(fft_friendly_size(32), 32);
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut acc = CompensatedSum::new();
        acc.add(Complex64::new(1e16, 0.0));
        for _ in 0..10 {
            acc.add(Complex64::new(1.0, 0.0));
        }
        acc.add(Complex64::new(-1e16, 0.0));
        assert_eq!(acc.value().re, 10.0);
    }

    #[test]
    fn octant_reduction_matches_direct() {
        for q in [1u64, 2, 3, 7, 8, 12, 97] {
            for k in -20i128..40 {
                let a = e_q_dd(k, q).to_c64();
                let b = e_q(k, q);
                assert!((a - b).norm() < 1e-15, "q={q} k={k}");
            }
        }
    }
}

//! Slow, independent reference implementations. Each function here avoids the
//! code path it is used to check.

use crate::grid::GridFunction;
use crate::lattice::SpherePointSet;
use std::f64::consts::PI;

/// Factorization by trial division over every integer up to `sqrt(n)`.
pub fn trial_division(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut p = 2u64;
    while p.saturating_mul(p) <= n {
        let mut e = 0;
        while n % p == 0 {
            n /= p;
            e += 1;
        }
        if e > 0 {
            out.push((p, e));
        }
        p += 1;
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

/// Divisors of `n` by scanning `1..=n`.
pub fn brute_divisors(n: u64) -> Vec<u64> {
    (1..=n).filter(|d| n % d == 0).collect()
}

/// `(nodes, weights)` of the `n`-point Gauss-Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let k = k as f64;
                let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

fn composite_gl(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize, order: usize) -> f64 {
    let (x, w) = gauss_legendre(order);
    let hw = (b - a) / panels as f64 / 2.0;
    let mut total = 0.0;
    for p in 0..panels {
        let mid = a + (2 * p + 1) as f64 * hw;
        total += x.iter().zip(&w).map(|(&xi, &wi)| wi * f(mid + hw * xi)).sum::<f64>() * hw;
    }
    total
}

/// Transform of normalized measure on the unit sphere of `R^d` at radial
/// frequency `r`, by integrating `e(-r cos θ)` against the `sin^{d-2} θ` density.
pub fn sphere_ft_quadrature(d: usize, r: f64) -> f64 {
    let k = (d - 2) as i32;
    let panels = 64 + (8.0 * r) as usize;
    let num = composite_gl(|t| (2.0 * PI * r * t.cos()).cos() * t.sin().powi(k), 0.0, PI, panels, 20);
    let den = composite_gl(|t| t.sin().powi(k), 0.0, PI, panels, 20);
    num / den
}

/// `Σ_{n ∈ S} f(x - n)` evaluated pointwise on the grown box, reading `f` by
/// coordinate lookup.
pub fn convolve_pointwise(f: &GridFunction, sphere: &SpherePointSet) -> GridFunction {
    let d = f.d();
    let m = sphere.max_coord();
    let origin: Vec<i64> = f.origin().iter().map(|o| o - m).collect();
    let dims: Vec<usize> = f.dims().iter().map(|&s| s + 2 * m as usize).collect();
    let scale = sphere.radius().powi(-(d as i32 - 2));
    let mut out = GridFunction::zeros(origin, dims, false);
    let total = out.len();
    let mut x = vec![0i64; d];
    let mut y = vec![0i64; d];
    for idx in 0..total {
        out.coords_of(idx, &mut x);
        let mut s = 0.0;
        for n in sphere.points() {
            for i in 0..d {
                y[i] = x[i] - n[i] as i64;
            }
            s += f.get(&y).unwrap_or(0.0);
        }
        out.values_mut()[idx] = s * scale;
    }
    out
}

/// `|S ∩ (x + S)|` by binary-search membership over the sorted point list.
pub fn intersection_count(sphere: &SpherePointSet, x: &[i64]) -> u64 {
    let mut y = vec![0i64; sphere.d()];
    sphere
        .points()
        .filter(|n| {
            for i in 0..y.len() {
                y[i] = n[i] as i64 - x[i];
            }
            sphere.contains_i64(&y)
        })
        .count() as u64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gl_integrates_polynomials() {
        let (x, w) = gauss_legendre(10);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(18)).sum();
        assert!((s - 2.0 / 19.0).abs() < 1e-14);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn quadrature_d3_closed_form() {
        for r in [0.1, 0.7, 2.3, 5.0] {
            let x = 2.0 * PI * r;
            assert!((sphere_ft_quadrature(3, r) - x.sin() / x).abs() < 1e-12);
        }
        assert!((sphere_ft_quadrature(5, 0.0) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn trial_division_basics() {
        assert_eq!(trial_division(12), vec![(2, 2), (3, 1)]);
        assert_eq!(brute_divisors(12), vec![1, 2, 3, 4, 6, 12]);
        assert!(trial_division(1).is_empty());
    }
}

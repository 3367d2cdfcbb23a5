//! Continuous ingredients of the main term: the cutoff `Φ` and the Fourier
//! transform of normalized surface measure on the sphere of radius `λ`.

use crate::error::{invalid, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Tensor-product cutoff: `1` when every `|t_i| <= inner`, `0` once some
/// `|t_i| >= outer`, smooth in between.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BumpSpec {
    pub inner: f64,
    pub outer: f64,
    /// Overall multiplier, `1` for the cutoff itself.
    pub amplitude: f64,
}

impl Default for BumpSpec {
    fn default() -> Self {
        Self { inner: 0.125, outer: 0.25, amplitude: 1.0 }
    }
}

#[inline]
fn h(s: f64) -> f64 {
    if s > 0.0 {
        (-1.0 / s).exp()
    } else {
        0.0
    }
}

impl BumpSpec {
    /// The one-dimensional ramp `χ`.
    pub fn chi(&self, t: f64) -> f64 {
        let t = t.abs();
        if t <= self.inner {
            return 1.0;
        }
        if t >= self.outer {
            return 0.0;
        }
        let w = self.outer - self.inner;
        let up = h((self.outer - t) / w);
        let down = h((t - self.inner) / w);
        up / (up + down)
    }

    /// `amplitude · Π_i χ(s ξ_i)`.
    pub fn eval_scaled(&self, scale: f64, xi: &[f64]) -> f64 {
        let mut v = self.amplitude;
        for &x in xi {
            if v == 0.0 {
                break;
            }
            v *= self.chi(scale * x);
        }
        v
    }

    /// `Φ_q(ξ) = Φ(qξ)`.
    pub fn eval(&self, q: u64, xi: &[f64]) -> f64 {
        self.eval_scaled(q as f64, xi)
    }

    /// Same cutoff with amplitude multiplied by `t`.
    pub fn scaled(&self, t: f64) -> Self {
        Self { amplitude: self.amplitude * t, ..*self }
    }
}

/// `Φ_q(ξ)` with the default cutoff.
pub fn bump(q: u64, xi: &[f64]) -> f64 {
    BumpSpec::default().eval(q, xi)
}

const SERIES_SWITCH: f64 = 12.0;

/// `Γ(ν+1) (x/2)^{-ν} J_ν(x)` for `x >= 0`, equal to `1` at the origin.
pub fn bessel_normalized(nu: f64, x: f64) -> f64 {
    let x = x.abs();
    if x < SERIES_SWITCH {
        let z = -0.25 * x * x;
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut k = 0.0;
        loop {
            k += 1.0;
            term *= z / (k * (nu + k));
            sum += term;
            if term.abs() < 1e-18 * sum.abs().max(1e-300) && k > 0.5 * x {
                break;
            }
            if k > 400.0 {
                break;
            }
        }
        sum
    } else {
        libm::tgamma(nu + 1.0) * (0.5 * x).powf(-nu) * bessel_j_asymptotic(nu, x)
    }
}

/// `J_ν(x)` from the Hankel expansion; accurate for `x >= 12` at the orders used here.
pub fn bessel_j_asymptotic(nu: f64, x: f64) -> f64 {
    let mu = 4.0 * nu * nu;
    let mut p = 1.0;
    let mut q = 0.0;
    let mut term = 1.0;
    let mut prev = f64::INFINITY;
    for k in 1..200 {
        let kf = k as f64;
        let next = term * (mu - (2.0 * kf - 1.0).powi(2)) / (kf * 8.0 * x);
        if next == 0.0 || next.abs() >= prev {
            break;
        }
        prev = next.abs();
        term = next;
        // signs follow (-1)^{floor(k/2)} over the even/odd split
        match k % 4 {
            0 => p += term,
            1 => q += term,
            2 => p -= term,
            _ => q -= term,
        }
        if term.abs() < 1e-18 {
            break;
        }
    }
    let w = x - 0.5 * nu * PI - 0.25 * PI;
    (2.0 / (PI * x)).sqrt() * (p * w.cos() - q * w.sin())
}

/// `J_ν(x)` for `x >= 0` using the same series/asymptotic switch.
pub fn bessel_j(nu: f64, x: f64) -> f64 {
    if x == 0.0 {
        return if nu == 0.0 { 1.0 } else { 0.0 };
    }
    if x < SERIES_SWITCH {
        bessel_normalized(nu, x) * (0.5 * x).powf(nu) / libm::tgamma(nu + 1.0)
    } else {
        bessel_j_asymptotic(nu, x)
    }
}

/// Transform of normalized surface measure on the unit sphere in `R^d` as a
/// function of the radial frequency `r = λ|ξ|`.
pub fn sphere_ft_radial(d: usize, r: f64) -> f64 {
    bessel_normalized((d as f64 - 2.0) / 2.0, 2.0 * PI * r)
}

/// `dσ̃_λ(ξ)`: the transform of normalized surface measure on the sphere of radius `λ`.
pub fn sphere_ft(d: usize, lambda: f64, xi: &[f64]) -> f64 {
    let norm = xi.iter().map(|x| x * x).sum::<f64>().sqrt();
    sphere_ft_radial(d, lambda * norm)
}

/// `ω_d = π^{d/2}/Γ(d/2)`, the singular-integral constant in
/// `|S^d_λ| ≈ 𝔖(λ²) ω_d λ^{d-2}`. The main term carries `ω_d dσ̃_λ` so that it
/// matches `a_λ` near the origin.
pub fn sphere_mass(d: usize) -> f64 {
    let h = d as f64 / 2.0;
    PI.powf(h) / libm::tgamma(h)
}

/// `|dσ̃_λ(ξ)| · |λξ|^{(d-1)/2}`; the decay bound of stationary phase says this is bounded.
pub fn stationary_phase_ratio(d: usize, lambda: f64, xi: &[f64]) -> Result<f64> {
    let r = lambda * xi.iter().map(|x| x * x).sum::<f64>().sqrt();
    if r < 1.0 {
        return Err(invalid(format!("stationary_phase_ratio: |lambda xi| = {r} < 1")));
    }
    Ok(sphere_ft_radial(d, r).abs() * r.powf((d as f64 - 1.0) / 2.0))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StationarySweep {
    pub d: usize,
    pub radii: Vec<f64>,
    pub ratios: Vec<f64>,
    pub max_ratio: f64,
}

/// [`stationary_phase_ratio`] over `count` log-spaced radii in `[r_min, r_max]`.
pub fn stationary_phase_sweep(d: usize, r_min: f64, r_max: f64, count: usize) -> Result<StationarySweep> {
    if r_min < 1.0 || r_max < r_min || count < 2 {
        return Err(invalid("stationary_phase_sweep: need 1 <= r_min <= r_max and count >= 2"));
    }
    let step = (r_max / r_min).ln() / (count - 1) as f64;
    let radii: Vec<f64> = (0..count).map(|i| r_min * (step * i as f64).exp()).collect();
    let ratios: Vec<f64> =
        radii.iter().map(|&r| sphere_ft_radial(d, r).abs() * r.powf((d as f64 - 1.0) / 2.0)).collect();
    let max_ratio = ratios.iter().cloned().fold(0.0, f64::max);
    Ok(StationarySweep { d, radii, ratios, max_ratio })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::sphere_ft_quadrature;

    #[test]
    fn bump_examples() {
        assert_eq!(bump(1, &[0.0; 5]), 1.0);
        assert_eq!(bump(1, &[0.3, 0.0, 0.0, 0.0, 0.0]), 0.0);
        let v = bump(2, &[0.1, 0.0, 0.0, 0.0]);
        // χ(0.2) from the ramp formula
        let (a, b) = ((-1.0f64 / 0.4).exp(), (-1.0f64 / 0.6).exp());
        assert!((v - a / (a + b)).abs() < 1e-15);
        assert!(v > 0.0 && v < 1.0);
        assert_eq!(BumpSpec::default().scaled(3.0).eval(1, &[0.0]), 3.0);
    }

    #[test]
    fn bump_is_smooth_across_the_ramp_ends() {
        let b = BumpSpec::default();
        let hstep = 1e-4;
        let d2 = |t: f64| (b.chi(t + hstep) - 2.0 * b.chi(t) + b.chi(t - hstep)) / (hstep * hstep);
        let d1 = |t: f64| (b.chi(t + hstep) - b.chi(t - hstep)) / (2.0 * hstep);
        for edge in [0.125, 0.25] {
            for k in 1..5 {
                let off = k as f64 * 3e-4;
                assert!((d1(edge - off) - d1(edge + off)).abs() < 0.05, "d1 jump at {edge}");
                assert!((d2(edge - off) - d2(edge + off)).abs() < 20.0, "d2 jump at {edge}");
            }
        }
    }

    #[test]
    fn sphere_ft_at_origin_and_d3_closed_form() {
        for d in 2..8 {
            assert_eq!(sphere_ft(d, 3.0, &vec![0.0; d]), 1.0);
        }
        for i in 1..400 {
            let r = i as f64 * 0.0371;
            let x = 2.0 * PI * r;
            assert!((sphere_ft_radial(3, r) - x.sin() / x).abs() < 1e-10, "r = {r}");
        }
    }

    #[test]
    fn sphere_ft_matches_quadrature() {
        assert!((sphere_ft(5, 1.0, &[0.5, 0.0, 0.0, 0.0, 0.0]) - sphere_ft_quadrature(5, 0.5)).abs() < 1e-6);
        assert!((sphere_ft(4, 3.0, &[1.0, 0.0, 0.0, 0.0]) - sphere_ft_quadrature(4, 3.0)).abs() < 1e-6);
        for d in 3..=6 {
            for i in 0..20 {
                let r = 0.05 + 0.31 * i as f64;
                let diff = (sphere_ft_radial(d, r) - sphere_ft_quadrature(d, r)).abs();
                assert!(diff < 1e-6, "d={d} r={r} diff={diff}");
            }
        }
    }

    #[test]
    fn bessel_branches_agree_near_switch() {
        for nu in [0.0, 0.5, 1.0, 1.5, 2.0] {
            let x = SERIES_SWITCH;
            let series = {
                let z = -0.25 * x * x;
                let (mut t, mut s) = (1.0f64, 1.0f64);
                for k in 1..200 {
                    t *= z / (k as f64 * (nu + k as f64));
                    s += t;
                }
                s * (0.5 * x).powf(nu) / libm::tgamma(nu + 1.0)
            };
            assert!((series - bessel_j_asymptotic(nu, x)).abs() < 1e-9, "nu={nu}");
        }
        assert!((bessel_j(0.0, 1.0) - 0.7651976865579666).abs() < 1e-14);
        assert!((bessel_j(1.0, 20.0) - 0.06683312417584993).abs() < 1e-12);
    }

    #[test]
    fn sphere_mass_values() {
        assert!((sphere_mass(2) - PI).abs() < 1e-14);
        assert!((sphere_mass(4) - PI * PI).abs() < 1e-13);
        assert!((sphere_mass(5) - 4.0 * PI * PI / 3.0).abs() < 1e-12);
    }

    #[test]
    fn stationary_phase() {
        assert!(stationary_phase_ratio(5, 1.0, &[0.5, 0.0, 0.0, 0.0, 0.0]).is_err());
        // d = 3: |sin x / x| · r ≤ 1/(2π)
        let sw = stationary_phase_sweep(3, 1.0, 1000.0, 2000).unwrap();
        assert!(sw.max_ratio <= 1.0 / (2.0 * PI) + 1e-12);
        let sw = stationary_phase_sweep(5, 1.0, 1000.0, 2000).unwrap();
        let half = sw.ratios.len() / 2;
        let lo = sw.ratios[..half].iter().cloned().fold(0.0, f64::max);
        let hi = sw.ratios[half..].iter().cloned().fold(0.0, f64::max);
        assert!(hi <= 2.0 * lo);
    }
}

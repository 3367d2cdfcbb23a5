//! Factorization and the arithmetic functions `ω`, `σ_b` and `ρ(q, λ)`.
//!
//! `ρ(q, λ) = sqrt(gcd(q₁, λ²) · 2^r)` where `q = q₁ 2^r` with `q₁` odd. It
//! measures how much the square-root cancellation in `K(λ, q, ℓ)` degrades
//! when `q` shares factors with `λ²`. The divisor-sum bounds
//!
//! ```text
//! Σ_{q >= N} q^{-a} ρ(q, λ)     <~  N^{1-a}  σ_{-1/2}(λ²)      (a > 1)
//! Σ_{q <= N} q^{η}  ρ(q, λ)     <~  N^{1+η}  σ_{-1/2}(λ²)
//! ```
//!
//! are evaluated directly and returned as certificates.

use crate::certificate::{CertParams, NormCertificate};
use crate::error::{invalid, Result};
use serde::{Deserialize, Serialize};
use serde_json::json;

/// Trial division covers every cofactor below this bound squared.
const TRIAL_LIMIT: u64 = 1_000_000;

/// Default upper truncation for the infinite `q`-sum in [`rho_tail_sum`].
pub const DEFAULT_TAIL_TRUNCATION: u64 = 1_000_000;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArithProfile {
    pub n: u64,
    /// `(prime, exponent)` pairs in increasing prime order.
    pub factors: Vec<(u64, u32)>,
    /// All positive divisors, sorted.
    pub divisors: Vec<u64>,
    /// Number of distinct prime factors.
    pub omega: usize,
}

impl ArithProfile {
    pub fn divisor_count(&self) -> usize {
        self.divisors.len()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RhoDecomposition {
    pub q: u64,
    /// 2-adic valuation of `q`.
    pub r: u32,
    /// Odd part of `q`.
    pub q1: u64,
    /// `gcd(q1, λ²)`.
    pub t: u64,
    /// `q1 / t`.
    pub s: u64,
    pub rho: f64,
}

impl RhoDecomposition {
    /// `ρ² = t · 2^r`, exactly.
    pub fn rho_squared(&self) -> u128 {
        (self.t as u128) << self.r
    }
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut r = 1 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            r = mul_mod(r, b, m);
        }
        b = mul_mod(b, b, m);
        e >>= 1;
    }
    r
}

/// Deterministic Miller–Rabin for all `u64`.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n % p == 0 {
            return n == p;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Brent's variant of Pollard rho; `n` must be odd and composite.
fn pollard_rho(n: u64) -> u64 {
    let mut c = 1u64;
    loop {
        let f = |x: u64| (mul_mod(x, x, n) + c) % n;
        let (mut x, mut y, mut g) = (2u64, 2u64, 1u64);
        while g == 1 {
            x = f(x);
            y = f(f(y));
            g = gcd(x.abs_diff(y), n);
        }
        if g != n {
            return g;
        }
        c += 1;
    }
}

fn factor_large(n: u64, out: &mut Vec<u64>) {
    if n == 1 {
        return;
    }
    if is_prime(n) {
        out.push(n);
        return;
    }
    let f = pollard_rho(n);
    factor_large(f, out);
    factor_large(n / f, out);
}

pub fn factorize(n: u64) -> Result<ArithProfile> {
    if n == 0 {
        return Err(invalid("factorize: n must be positive"));
    }
    let mut factors: Vec<(u64, u32)> = Vec::new();
    let mut m = n;
    let mut p = 2u64;
    while p <= TRIAL_LIMIT && p * p <= m {
        if m % p == 0 {
            let mut e = 0;
            while m % p == 0 {
                m /= p;
                e += 1;
            }
            factors.push((p, e));
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if m > 1 {
        let mut rest = Vec::new();
        factor_large(m, &mut rest);
        rest.sort_unstable();
        for q in rest {
            match factors.last_mut() {
                Some((last, e)) if *last == q => *e += 1,
                _ => factors.push((q, 1)),
            }
        }
    }
    let mut divisors = vec![1u64];
    for &(p, e) in &factors {
        let len = divisors.len();
        let mut pk = 1u64;
        for _ in 0..e {
            pk *= p;
            for i in 0..len {
                divisors.push(divisors[i] * pk);
            }
        }
    }
    divisors.sort_unstable();
    let omega = factors.len();
    Ok(ArithProfile { n, factors, divisors, omega })
}

/// `σ_b(n) = Σ_{d | n} d^b`.
pub fn sigma(b: f64, n: u64) -> Result<f64> {
    let prof = factorize(n)?;
    Ok(sigma_of(b, &prof))
}

pub fn sigma_of(b: f64, prof: &ArithProfile) -> f64 {
    if b == 0.0 {
        return prof.divisors.len() as f64;
    }
    // Small terms first.
    let mut terms: Vec<f64> = prof.divisors.iter().map(|&d| (d as f64).powf(b)).collect();
    terms.sort_by(|x, y| x.abs().total_cmp(&y.abs()));
    terms.iter().sum()
}

pub fn rho(q: u64, lambda2: u64) -> Result<RhoDecomposition> {
    if q == 0 || lambda2 == 0 {
        return Err(invalid("rho: q and lambda^2 must be positive"));
    }
    let r = q.trailing_zeros();
    let q1 = q >> r;
    let t = gcd(q1, lambda2);
    let rho = (((t as u128) << r) as f64).sqrt();
    Ok(RhoDecomposition { q, r, q1, t, s: q1 / t, rho })
}

/// `ρ(q, λ)` without the bookkeeping; `q, lambda2 >= 1`.
#[inline]
pub fn rho_value(q: u64, lambda2: u64) -> f64 {
    let r = q.trailing_zeros();
    let t = gcd(q >> r, lambda2);
    (((t as u128) << r) as f64).sqrt()
}

/// Rigorous upper bound for `Σ_{q > cutoff} q^{-a} ρ(q, λ)`.
///
/// Every `q` is written `q = 2^r g s` with `g` an odd divisor of `λ²` and
/// `s >= 1`, so that `ρ(q, λ) <= sqrt(g 2^r)` for the choice
/// `g = gcd(q₁, λ²)`; summing over all `(g, r, s)` overcounts with positive
/// terms. The `s`-sum is bounded by an integral, and once `g 2^r > cutoff`
/// the remaining `r`-sum is geometric with ratio `2^{1/2 - a}`.
pub fn rho_tail_remainder(cutoff: u64, a: f64, prof: &ArithProfile) -> f64 {
    assert!(a > 1.0);
    let zeta_bound = a / (a - 1.0);
    let s_tail = |x: f64| {
        // Σ_{s > x} s^{-a} for x >= 1
        let m = x.floor() + 1.0;
        m.powf(-a) + m.powf(1.0 - a) / (a - 1.0)
    };
    let ratio = 2f64.powf(0.5 - a);
    let mut total = 0.0;
    for &g in prof.divisors.iter().filter(|&&g| g % 2 == 1) {
        let mut r = 0u32;
        loop {
            let m = (g as f64) * 2f64.powi(r as i32);
            if m > cutoff as f64 {
                total += m.powf(0.5 - a) * zeta_bound / (1.0 - ratio);
                break;
            }
            total += m.powf(0.5 - a) * s_tail(cutoff as f64 / m);
            r += 1;
        }
    }
    total
}

fn check_exponent(a: f64) -> Result<()> {
    if !(a > 1.0) || !a.is_finite() {
        return Err(invalid(format!("rho_tail_sum: exponent a = {a} must exceed 1 (divergent sum)")));
    }
    Ok(())
}

fn tail_certificate(
    n: u64,
    a: f64,
    lambda2: u64,
    truncation: u64,
    direct: f64,
    remainder: f64,
    sigma: f64,
) -> NormCertificate {
    let left = direct + remainder;
    let right = (n as f64).powf(1.0 - a) * sigma;
    let params = CertParams {
        lambda2: Some(lambda2),
        cutoff_n: Some(n),
        exponent_a: Some(a),
        ..CertParams::default()
    };
    let mut cert = NormCertificate::new("rho_tail_sum", left, right, params).with_witness(json!({
        "direct": direct,
        "remainder": remainder,
        "truncation": truncation,
        "sigma_minus_half": sigma,
    }));
    if (n as f64) * (n as f64) >= lambda2 as f64 {
        cert = cert.with_note("N >= lambda: outside the N < lambda regime of the bound");
    }
    cert
}

/// `Σ_{N <= q} q^{-a} ρ(q, λ)` against `N^{1-a} σ_{-1/2}(λ²)`; the sum is
/// taken directly up to `truncation` and the rest is bounded by
/// [`rho_tail_remainder`].
pub fn rho_tail_sum(n: u64, a: f64, lambda2: u64, truncation: u64) -> Result<NormCertificate> {
    check_exponent(a)?;
    if n == 0 || lambda2 == 0 {
        return Err(invalid("rho_tail_sum: N and lambda^2 must be positive"));
    }
    let prof = factorize(lambda2)?;
    let mut acc = 0.0;
    let mut comp = 0.0;
    for q in (n..=truncation).rev() {
        let x = (q as f64).powf(-a) * rho_value(q, lambda2);
        let t = acc + x;
        comp += (acc - t) + x;
        acc = t;
    }
    let remainder = rho_tail_remainder(truncation.max(n - 1), a, &prof);
    Ok(tail_certificate(n, a, lambda2, truncation, acc + comp, remainder, sigma_of(-0.5, &prof)))
}

/// [`rho_tail_sum`] for many cutoffs with one pass over `q`.
pub fn rho_tail_sweep(ns: &[u64], a: f64, lambda2: u64, truncation: u64) -> Result<Vec<NormCertificate>> {
    check_exponent(a)?;
    if ns.iter().any(|&n| n == 0) || lambda2 == 0 {
        return Err(invalid("rho_tail_sweep: N and lambda^2 must be positive"));
    }
    let prof = factorize(lambda2)?;
    let sigma = sigma_of(-0.5, &prof);
    // suffix[q] = Σ_{q <= k <= truncation}
    let top = truncation as usize;
    let mut suffix = vec![0.0f64; top + 2];
    let mut comp = 0.0;
    let mut acc = 0.0;
    for q in (1..=top).rev() {
        let x = (q as f64).powf(-a) * rho_value(q as u64, lambda2);
        let t = acc + x;
        comp += (acc - t) + x;
        acc = t;
        suffix[q] = acc + comp;
    }
    let remainder = rho_tail_remainder(truncation, a, &prof);
    Ok(ns
        .iter()
        .map(|&n| {
            let (direct, rem) = if n <= truncation {
                (suffix[n as usize], remainder)
            } else {
                (0.0, rho_tail_remainder(n - 1, a, &prof))
            };
            tail_certificate(n, a, lambda2, truncation, direct, rem, sigma)
        })
        .collect())
}

fn head_certificate(n: u64, eta: f64, lambda2: u64, left: f64, sigma: f64) -> NormCertificate {
    let right = (n as f64).powf(1.0 + eta) * sigma;
    let params =
        CertParams { lambda2: Some(lambda2), cutoff_n: Some(n), eta: Some(eta), ..CertParams::default() };
    NormCertificate::new("rho_head_sum", left, right, params)
        .with_witness(json!({ "sigma_minus_half": sigma }))
}

/// `Σ_{1 <= q <= N} q^{η} ρ(q, λ)` against `N^{1+η} σ_{-1/2}(λ²)`.
pub fn rho_head_sum(n: u64, eta: f64, lambda2: u64) -> Result<NormCertificate> {
    if n == 0 || lambda2 == 0 {
        return Err(invalid("rho_head_sum: N and lambda^2 must be positive"));
    }
    if !(eta > 0.0) {
        return Err(invalid("rho_head_sum: eta must be positive"));
    }
    let sigma = sigma(-0.5, lambda2)?;
    let left: f64 = (1..=n).map(|q| (q as f64).powf(eta) * rho_value(q, lambda2)).sum();
    Ok(head_certificate(n, eta, lambda2, left, sigma))
}

/// [`rho_head_sum`] for many cutoffs with one prefix pass.
pub fn rho_head_sweep(ns: &[u64], eta: f64, lambda2: u64) -> Result<Vec<NormCertificate>> {
    if ns.iter().any(|&n| n == 0) || lambda2 == 0 {
        return Err(invalid("rho_head_sweep: N and lambda^2 must be positive"));
    }
    if !(eta > 0.0) {
        return Err(invalid("rho_head_sweep: eta must be positive"));
    }
    let sigma = sigma(-0.5, lambda2)?;
    let top = ns.iter().copied().max().unwrap_or(0) as usize;
    let mut prefix = vec![0.0f64; top + 1];
    for q in 1..=top {
        prefix[q] = prefix[q - 1] + (q as f64).powf(eta) * rho_value(q as u64, lambda2);
    }
    Ok(ns.iter().map(|&n| head_certificate(n, eta, lambda2, prefix[n as usize], sigma)).collect())
}

/// The first `k` primes.
pub fn first_primes(k: usize) -> Vec<u64> {
    let mut primes = Vec::with_capacity(k);
    let mut c = 2u64;
    while primes.len() < k {
        if primes.iter().take_while(|&&p| p * p <= c).all(|&p| c % p != 0) {
            primes.push(c);
        }
        c += 1;
    }
    primes
}

/// `Π_{j <= ω(n)} (1 - p_j^{-1/2})^{-1}` over the first `ω(n)` primes, an
/// upper bound for `σ_{-1/2}(n)` depending on `n` only through `ω(n)`.
pub fn sigma_prime_product_bound(n: u64) -> Result<f64> {
    let prof = factorize(n)?;
    Ok(first_primes(prof.omega)
        .into_iter()
        .map(|p| 1.0 / (1.0 - (p as f64).powf(-0.5)))
        .product())
}

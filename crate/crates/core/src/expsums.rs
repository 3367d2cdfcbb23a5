//! Quadratic Gauss sums and the Kloosterman-type sums
//!
//! ```text
//! G(a/q, ℓ)  = q^{-d} Σ_{n ∈ Z_q^d} e_q(a|n|² + n·ℓ)
//! K(λ, q, ℓ) = Σ_{a ∈ Z_q^×} e_q(-aλ²) G(a/q, ℓ)
//! ```
//!
//! `G` factors over coordinates, so everything is built from the one
//! dimensional sums `g(a, l, q)`. The group `Z_1^×` is taken to be the
//! trivial group `{0}`, which makes `K(λ, 1, ℓ) = 1`.

use crate::arith::{gcd, rho_value};
use crate::certificate::{CertParams, NormCertificate};
use crate::error::{invalid, Error, Result};
use crate::numeric::{e, CompensatedSum, DdComplex, DoubleDouble};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

/// Tolerance on `|Im K|`; `K` is real because `a -> -a` conjugates each term.
pub const IMAG_TOL: f64 = 1e-8;

/// Largest `q^d` the literal triple sum accepts.
pub const DIRECT_COST_CAP: u64 = 100_000_000;

/// A computed exponential sum together with its parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpSumValue {
    pub value: Complex64,
    pub q: u64,
    pub d: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda2: Option<u64>,
    pub l: Vec<i64>,
}

/// `e(k/q)` for `k = 0..q`.
#[derive(Clone, Debug)]
pub struct RootTable {
    q: u64,
    roots: Vec<Complex64>,
}

impl RootTable {
    pub fn new(q: u64) -> Self {
        assert!(q >= 1, "root table needs q >= 1");
        let roots = (0..q).map(|k| e(k as f64 / q as f64)).collect();
        Self { q, roots }
    }

    /// A table with caller-supplied entries; used to inject faults in the self-test.
    pub fn from_roots(roots: Vec<Complex64>) -> Result<Self> {
        if roots.is_empty() {
            return Err(invalid("root table must be non-empty"));
        }
        Ok(Self { q: roots.len() as u64, roots })
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    pub fn roots(&self) -> &[Complex64] {
        &self.roots
    }

    #[inline]
    pub fn at(&self, k: i128) -> Complex64 {
        self.roots[k.rem_euclid(self.q as i128) as usize]
    }
}

pub fn units(q: u64) -> Vec<u64> {
    if q == 1 {
        return vec![0];
    }
    (1..q).filter(|&a| gcd(a, q) == 1).collect()
}

fn g1_with(roots: &RootTable, a: u64, l: u64) -> Complex64 {
    let q = roots.q;
    let qq = q as u128;
    let (a, l) = (a as u128 % qq, l as u128 % qq);
    let mut acc = CompensatedSum::new();
    for n in 0..qq {
        acc.add(roots.roots[((a * n % qq * n + l * n) % qq) as usize]);
    }
    acc.value() / q as f64
}

/// `q^{-1} Σ_{n=0}^{q-1} e((a n² + l n)/q)`.
pub fn gauss_sum_1d(a: i64, l: i64, q: u64) -> Result<Complex64> {
    if q == 0 {
        return Err(invalid("gauss_sum_1d: q must be positive"));
    }
    let r = |x: i64| x.rem_euclid(q as i64) as u64;
    Ok(g1_with(&RootTable::new(q), r(a), r(l)))
}

/// `G(a/q, ℓ)` as the product of one-dimensional sums.
pub fn gauss_sum(a: i64, q: u64, l: &[i64]) -> Result<Complex64> {
    if q == 0 {
        return Err(invalid("gauss_sum: q must be positive"));
    }
    let roots = RootTable::new(q);
    let r = |x: i64| x.rem_euclid(q as i64) as u64;
    Ok(l.iter().map(|&li| g1_with(&roots, r(a), r(li))).product())
}

/// All `g(a, l, q)` for `a ∈ Z_q^×` and `l ∈ Z_q`, sharing one root table.
#[derive(Clone, Debug)]
pub struct GaussTable {
    roots: RootTable,
    units: Vec<u64>,
    // row per unit, q entries each
    values: Vec<Complex64>,
}

impl GaussTable {
    pub fn new(q: u64) -> Self {
        Self::with_roots(RootTable::new(q))
    }

    pub fn with_roots(roots: RootTable) -> Self {
        let q = roots.q;
        let units = units(q);
        let mut values = Vec::with_capacity(units.len() * q as usize);
        for &a in &units {
            for l in 0..q {
                values.push(g1_with(&roots, a, l));
            }
        }
        Self { roots, units, values }
    }

    pub fn q(&self) -> u64 {
        self.roots.q
    }

    pub fn units(&self) -> &[u64] {
        &self.units
    }

    pub fn roots(&self) -> &RootTable {
        &self.roots
    }

    /// `g(units[ai], l, q)`.
    #[inline]
    pub fn g1(&self, ai: usize, l: i64) -> Complex64 {
        let q = self.roots.q as i64;
        self.values[ai * q as usize + l.rem_euclid(q) as usize]
    }

    /// Row of `g(units[ai], l, q)` over `l = 0..q`.
    pub fn row(&self, ai: usize) -> &[Complex64] {
        let q = self.roots.q as usize;
        &self.values[ai * q..(ai + 1) * q]
    }

    fn phase(&self, a: u64, lambda2: u64) -> Complex64 {
        let q = self.roots.q as u128;
        let k = (q - (a as u128 * lambda2 as u128) % q) % q;
        self.roots.roots[k as usize]
    }

    /// `K(λ, q, ℓ)` accumulated in double precision, imaginary part included.
    pub fn kloosterman_complex(&self, lambda2: u64, l: &[i64]) -> Complex64 {
        let mut acc = CompensatedSum::new();
        for (ai, &a) in self.units.iter().enumerate() {
            let mut term = self.phase(a, lambda2);
            for &li in l {
                term *= self.g1(ai, li);
            }
            acc.add(term);
        }
        acc.value()
    }

    /// The same sum with every product and partial sum in double-double,
    /// re-deriving the one-dimensional sums from the root table.
    pub fn kloosterman_extended(&self, lambda2: u64, l: &[i64]) -> Complex64 {
        let q = self.roots.q;
        let qq = q as u128;
        let inv_q = DdComplex {
            re: DoubleDouble::from_f64(1.0 / q as f64),
            im: DoubleDouble::default(),
        };
        let mut total = DdComplex::default();
        for &a in &self.units {
            let mut term = DdComplex::from_c64(self.phase(a, lambda2));
            for &li in l {
                let li = li.rem_euclid(q as i64) as u128;
                let mut s = DdComplex::default();
                for n in 0..qq {
                    let k = (a as u128 * n % qq * n + li * n) % qq;
                    s = s.add(DdComplex::from_c64(self.roots.roots[k as usize]));
                }
                term = term.mul(s.mul(inv_q));
            }
            total = total.add(term);
        }
        total.to_c64()
    }

    /// `K(λ, q, ℓ)` as a real number. Falls back to extended precision when the
    /// imaginary part exceeds [`IMAG_TOL`] and errors if it still does.
    pub fn kloosterman(&self, lambda2: u64, l: &[i64]) -> Result<f64> {
        let k = self.kloosterman_complex(lambda2, l);
        if k.im.abs() < IMAG_TOL {
            return Ok(k.re);
        }
        let k = self.kloosterman_extended(lambda2, l);
        if k.im.abs() < IMAG_TOL {
            return Ok(k.re);
        }
        Err(Error::Precision(format!(
            "K(lambda^2={lambda2}, q={}, l={l:?}) has imaginary part {:.3e}",
            self.q(),
            k.im
        )))
    }
}

/// `K(λ, q, ℓ)` through the Gauss-sum factorization; `d = ℓ.len()`.
pub fn kloosterman(lambda2: u64, q: u64, l: &[i64]) -> Result<f64> {
    if q == 0 {
        return Err(invalid("kloosterman: q must be positive"));
    }
    GaussTable::new(q).kloosterman(lambda2, l)
}

/// The literal triple sum `q^{-d} Σ_a Σ_{n ∈ Z_q^d} e_q(-aλ² + a|n|² + n·ℓ)`.
///
/// Terms are grouped by their exact integer phase before any floating point
/// work, so the only rounding is in the final `q` multiply-adds.
pub fn kloosterman_direct(lambda2: u64, q: u64, l: &[i64]) -> Result<Complex64> {
    let d = l.len();
    if q == 0 {
        return Err(invalid("kloosterman_direct: q must be positive"));
    }
    let cost = (q as u128).checked_pow(d as u32).unwrap_or(u128::MAX);
    if cost > DIRECT_COST_CAP as u128 {
        return Err(Error::ResourceCap(format!("kloosterman_direct: q^d = {cost} exceeds {DIRECT_COST_CAP}")));
    }
    let qu = q as usize;
    let mut hist = vec![0u64; qu];
    let lr: Vec<usize> = l.iter().map(|&x| x.rem_euclid(q as i64) as usize).collect();
    let units: Vec<usize> = if q == 1 { vec![0] } else { (1..qu).filter(|&a| gcd(a as u64, q) == 1).collect() };
    for &a in &units {
        let shift = (qu - (a as u128 * lambda2 as u128 % q as u128) as usize) % qu;
        // phase contributed by each coordinate value, per coordinate
        let contrib: Vec<Vec<usize>> = lr
            .iter()
            .map(|&li| (0..qu).map(|n| (a * n % qu * n + li * n) % qu).collect())
            .collect();
        accumulate(&contrib, 0, shift, qu, &mut hist);
    }
    let roots: Vec<Complex64> = (0..qu).map(|k| e(k as f64 / q as f64)).collect();
    let mut acc = CompensatedSum::new();
    for (k, &c) in hist.iter().enumerate() {
        if c > 0 {
            acc.add(roots[k] * c as f64);
        }
    }
    Ok(acc.value() / (q as f64).powi(d as i32))
}

fn accumulate(contrib: &[Vec<usize>], i: usize, base: usize, q: usize, hist: &mut [u64]) {
    if i == contrib.len() {
        hist[base] += 1;
        return;
    }
    if i + 1 == contrib.len() {
        for &c in &contrib[i] {
            let k = base + c;
            hist[if k >= q { k - q } else { k }] += 1;
        }
        return;
    }
    for &c in &contrib[i] {
        let k = base + c;
        accumulate(contrib, i + 1, if k >= q { k - q } else { k }, q, hist);
    }
}

/// `|Σ_{ℓ ∈ Z_q^d} G(a/q, ℓ) e_q(y·ℓ) - e_q(a|y|²)|`, with the ℓ-sum split into
/// one-dimensional factors.
pub fn completion_check(a: i64, q: u64, y: &[i64]) -> Result<f64> {
    if q == 0 {
        return Err(invalid("completion_check: q must be positive"));
    }
    let ar = a.rem_euclid(q as i64) as u64;
    if gcd(ar, q) != 1 && q != 1 {
        return Err(invalid(format!("completion_check: gcd({a}, {q}) != 1")));
    }
    let roots = RootTable::new(q);
    let g: Vec<Complex64> = (0..q).map(|l| g1_with(&roots, ar, l)).collect();
    let lhs: Complex64 = y.iter().map(|&yi| completion_factor(&g, &roots, yi)).product();
    Ok((lhs - completion_rhs(&roots, ar, y)).norm())
}

fn completion_factor(g: &[Complex64], roots: &RootTable, y: i64) -> Complex64 {
    let mut acc = CompensatedSum::new();
    for (l, &gl) in g.iter().enumerate() {
        acc.add(gl * roots.at(y as i128 * l as i128));
    }
    acc.value()
}

fn completion_rhs(roots: &RootTable, a: u64, y: &[i64]) -> Complex64 {
    let norm: i128 = y.iter().map(|&v| v as i128 * v as i128).sum();
    roots.at(norm * a as i128)
}

/// Same identity with the full `q^d` sum over `ℓ`; oracle only.
pub fn completion_check_direct(a: i64, q: u64, y: &[i64]) -> Result<f64> {
    let d = y.len();
    let cost = (q as u128).checked_pow(d as u32).unwrap_or(u128::MAX);
    if cost > 1_000_000 {
        return Err(Error::ResourceCap(format!("completion_check_direct: q^d = {cost} too large")));
    }
    let ar = a.rem_euclid(q as i64);
    let mut acc = CompensatedSum::new();
    let mut l = vec![0i64; d];
    loop {
        let dot: i128 = l.iter().zip(y).map(|(&li, &yi)| li as i128 * yi as i128).sum();
        acc.add(gauss_sum(ar, q, &l)? * e((dot.rem_euclid(q as i128)) as f64 / q as f64));
        if !odometer(&mut l, q as i64) {
            break;
        }
    }
    let norm: i128 = y.iter().map(|&v| v as i128 * v as i128).sum();
    let rhs = e(((norm * ar as i128).rem_euclid(q as i128)) as f64 / q as f64);
    Ok((acc.value() - rhs).norm())
}

/// Largest completion residual over every unit `a` and every `y ∈ Z_q^d`.
pub fn completion_sweep(q: u64, d: usize) -> Result<(f64, Vec<i64>)> {
    if q == 0 {
        return Err(invalid("completion_sweep: q must be positive"));
    }
    let roots = RootTable::new(q);
    let mut worst = (0.0, vec![0i64; d + 1]);
    for a in units(q) {
        let g: Vec<Complex64> = (0..q).map(|l| g1_with(&roots, a, l)).collect();
        let factors: Vec<Complex64> = (0..q as i64).map(|y| completion_factor(&g, &roots, y)).collect();
        let mut y = vec![0i64; d];
        loop {
            let lhs: Complex64 = y.iter().map(|&yi| factors[yi as usize]).product();
            let r = (lhs - completion_rhs(&roots, a, &y)).norm();
            if r > worst.0 {
                let mut w = vec![a as i64];
                w.extend_from_slice(&y);
                worst = (r, w);
            }
            if !odometer(&mut y, q as i64) {
                break;
            }
        }
    }
    Ok(worst)
}

/// Advances `v` through `Z_q^d` in lexicographic order; false after the last vector.
pub fn odometer(v: &mut [i64], q: i64) -> bool {
    for x in v.iter_mut().rev() {
        *x += 1;
        if *x < q {
            return true;
        }
        *x = 0;
    }
    false
}

/// Deterministic ℓ-sample for the Weil check: every `ℓ ∈ Z_q^d` when `q <= 8`,
/// otherwise 64 vectors drawn from a generator seeded by `(d, q, λ²)`.
pub fn weil_sample(lambda2: u64, q: u64, d: usize) -> Vec<Vec<i64>> {
    if q <= 8 {
        let mut out = Vec::new();
        let mut l = vec![0i64; d];
        loop {
            out.push(l.clone());
            if !odometer(&mut l, q as i64) {
                break;
            }
        }
        return out;
    }
    let seed = (d as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ q.wrapping_mul(0xBF58_476D_1CE4_E5B9) ^ lambda2.rotate_left(29);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..64).map(|_| (0..d).map(|_| rng.gen_range(0..q as i64)).collect()).collect()
}

/// `max_ℓ |K(λ, q, ℓ)| / (q^{-(d-3)/2 + η} ρ(q, λ))` over [`weil_sample`].
pub fn weil_ratio(lambda2: u64, q: u64, d: usize, eta: f64) -> Result<NormCertificate> {
    if q == 0 || lambda2 == 0 || d == 0 {
        return Err(invalid("weil_ratio: q, lambda^2 and d must be positive"));
    }
    weil_ratio_with(&GaussTable::new(q), lambda2, d, eta)
}

/// [`weil_ratio`] reusing a prebuilt table for modulus `q`.
pub fn weil_ratio_with(table: &GaussTable, lambda2: u64, d: usize, eta: f64) -> Result<NormCertificate> {
    let q = table.q();
    if !(eta > 0.0) {
        return Err(invalid("weil_ratio: eta must be positive"));
    }
    if (q as u128) * (q as u128) > lambda2 as u128 {
        return Err(invalid(format!("weil_ratio: q = {q} exceeds lambda = sqrt({lambda2})")));
    }
    let mut best = (f64::NEG_INFINITY, Vec::new(), 0.0);
    for l in weil_sample(lambda2, q, d) {
        let k = table.kloosterman(lambda2, &l)?;
        if k.abs() > best.0 {
            best = (k.abs(), l, k);
        }
    }
    let right = (q as f64).powf(-(d as f64 - 3.0) / 2.0 + eta) * rho_value(q, lambda2);
    let params = CertParams { q: Some(q), eta: Some(eta), ..CertParams::new(d, lambda2) };
    Ok(NormCertificate::new("weil_ratio", best.0, right, params).with_witness(json!({ "l": best.1, "K": best.2 })))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute_g(a: i64, q: u64, l: &[i64]) -> Complex64 {
        let d = l.len();
        let mut n = vec![0i64; d];
        let mut s = Complex64::new(0.0, 0.0);
        loop {
            let ph: i64 = n.iter().zip(l).map(|(&ni, &li)| a * ni * ni + ni * li).sum();
            s += e(ph as f64 / q as f64);
            if !odometer(&mut n, q as i64) {
                break;
            }
        }
        s / (q as f64).powi(d as i32)
    }

    #[test]
    fn gauss_1d_examples() {
        assert!(gauss_sum_1d(1, 0, 2).unwrap().norm() < 1e-15);
        assert!((gauss_sum_1d(0, 0, 5).unwrap() - 1.0).norm() < 1e-15);
        let direct = (0..3).map(|n| e((n * n + n) as f64 / 3.0)).sum::<Complex64>() / 3.0;
        assert!((gauss_sum_1d(1, 1, 3).unwrap() - direct).norm() < 1e-15);
    }

    #[test]
    fn gauss_factorizes() {
        let g = gauss_sum(1, 3, &[1, 2]).unwrap();
        assert!((g - brute_g(1, 3, &[1, 2])).norm() < 1e-14);
        for q in 1..7u64 {
            assert!((gauss_sum(0, q, &[0, 0, 0]).unwrap() - 1.0).norm() < 1e-14);
            for a in 0..q as i64 {
                let l = [1i64, 2, 0];
                let neg = [-1i64, -2, 0];
                let (x, y) = (gauss_sum(a, q, &l).unwrap(), gauss_sum(a, q, &neg).unwrap());
                assert!((x.norm() - y.norm()).abs() < 1e-14);
                assert!((x - brute_g(a, q, &l)).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn trivial_modulus() {
        assert_eq!(kloosterman(17, 1, &[0, 0, 0, 0]).unwrap(), 1.0);
        assert!((kloosterman_direct(17, 1, &[0; 5]).unwrap() - 1.0).norm() < 1e-15);
        assert_eq!(units(1), vec![0]);
    }

    #[test]
    fn factored_matches_direct_small() {
        let k = kloosterman(3, 5, &[0, 0, 0, 0]).unwrap();
        assert!((k + 0.04).abs() < 1e-12);
        assert!((kloosterman_direct(3, 5, &[0, 0, 0, 0]).unwrap().re - k).abs() < 1e-12);
        let k = kloosterman(1, 2, &[0; 5]).unwrap();
        assert!((kloosterman_direct(1, 2, &[0; 5]).unwrap().re - k).abs() < 1e-12);
    }

    #[test]
    fn regression_fixture_q4() {
        // frozen from the direct triple sum
        let k = kloosterman_direct(2, 4, &[1, 0, 0, 0]).unwrap();
        assert!(k.im.abs() < 1e-12);
        assert!((k.re - K_Q4_FIXTURE).abs() < 1e-12, "{}", k.re);
        assert!((kloosterman(2, 4, &[1, 0, 0, 0]).unwrap() - K_Q4_FIXTURE).abs() < 1e-12);
    }
    const K_Q4_FIXTURE: f64 = 0.0;

    #[test]
    fn direct_cost_cap() {
        assert!(matches!(kloosterman_direct(1, 100, &[0; 5]), Err(Error::ResourceCap(_))));
    }

    #[test]
    fn completion_examples() {
        assert!(completion_check(0, 1, &[0, 0]).unwrap() < 1e-15);
        assert!(completion_check(1, 3, &[1, 2]).unwrap() < 1e-9);
        assert!(completion_check(3, 4, &[0, 1, 2]).unwrap() < 1e-9);
        assert!(completion_check_direct(1, 3, &[1, 2]).unwrap() < 1e-9);
        assert!(completion_check_direct(3, 4, &[0, 1, 2]).unwrap() < 1e-9);
        assert!(completion_check(2, 4, &[1]).is_err());
        let (worst, _) = completion_sweep(6, 3).unwrap();
        assert!(worst < 1e-9);
    }

    #[test]
    fn weil_examples() {
        let c = weil_ratio(49, 1, 5, 0.25).unwrap();
        assert!((c.ratio - 1.0).abs() < 1e-12);
        let c = weil_ratio(25, 5, 4, 0.25).unwrap();
        assert!(c.ratio.is_finite());
        assert!((c.right - 5f64.powf(-0.25) * 5f64.sqrt()).abs() < 1e-12);
        assert!(weil_ratio(25, 6, 4, 0.25).is_err());
        assert_eq!(weil_sample(40401, 9, 5), weil_sample(40401, 9, 5));
        assert_eq!(weil_sample(40401, 3, 4).len(), 81);
    }

    #[test]
    fn corrupted_roots_are_detected() {
        let mut roots = RootTable::new(7).roots().to_vec();
        roots[3] *= Complex64::new(1.0, 1e-3).unscale(Complex64::new(1.0, 1e-3).norm());
        let table = GaussTable::with_roots(RootTable::from_roots(roots).unwrap());
        let clean = kloosterman_direct(5, 7, &[1, 2, 3, 4]).unwrap().re;
        match table.kloosterman(5, &[1, 2, 3, 4]) {
            Ok(v) => assert!((v - clean).abs() > 1e-8),
            Err(err) => assert!(matches!(err, Error::Precision(_))),
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn kloosterman_real_and_symmetric(q in 1u64..14, l2 in 1u64..60, l in proptest::collection::vec(-20i64..20, 4)) {
            let t = GaussTable::new(q);
            let k = t.kloosterman_complex(l2, &l);
            prop_assert!(k.im.abs() < IMAG_TOL);
            let neg: Vec<i64> = l.iter().map(|x| -x).collect();
            prop_assert!((t.kloosterman(l2, &neg).unwrap() - k.re).abs() < 1e-9);
            let mut perm = l.clone();
            perm.rotate_left(1);
            perm.swap(0, 2);
            prop_assert!((t.kloosterman(l2, &perm).unwrap() - k.re).abs() < 1e-9);
            prop_assert!(k.re.abs() <= t.units().len() as f64 + 1e-9);
        }

        #[test]
        fn gauss_sums_bounded(a in 0i64..40, q in 1u64..40, l in -40i64..40) {
            prop_assert!(gauss_sum_1d(a, l, q).unwrap().norm() <= 1.0 + 1e-12);
        }
    }
}

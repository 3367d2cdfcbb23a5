//! Oracle-equivalence checks: each fast path against its independent slow
//! counterpart.

use crate::continuum::sphere_ft_radial;
use crate::error::Result;
use crate::expsums::{completion_sweep, kloosterman_direct, odometer, GaussTable, RootTable};
use crate::grid::GridFunction;
use crate::lattice::{admissible, enumerate_sphere};
use crate::numeric::{e, fft_friendly_size};
use crate::operator::{convolve_direct, FftConvolver};
use crate::oracle::sphere_ft_quadrature;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::time::Instant;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub max_error: f64,
    pub tolerance: f64,
    pub cases: usize,
    pub seconds: f64,
    pub detail: Option<String>,
}

impl CheckResult {
    fn finish(name: &str, max_error: f64, tolerance: f64, cases: usize, start: Instant, detail: Option<String>) -> Self {
        Self {
            name: name.into(),
            passed: max_error <= tolerance && detail.as_deref().is_none_or(|d| !d.starts_with("error")),
            max_error,
            tolerance,
            cases,
            seconds: start.elapsed().as_secs_f64(),
            detail,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SelftestOptions {
    /// Perturb one entry of every root-of-unity table used by the factored sums.
    pub corrupt_roots: bool,
    /// Random inputs per `(d, λ²)` in the convolution check.
    pub convolution_seeds: usize,
    pub seed: u64,
}

impl Default for SelftestOptions {
    fn default() -> Self {
        Self { corrupt_roots: false, convolution_seeds: 50, seed: 0 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SelftestReport {
    pub passed: bool,
    pub checks: Vec<CheckResult>,
    pub seconds: f64,
}

fn corrupted_table(q: u64) -> GaussTable {
    let mut roots = RootTable::new(q).roots().to_vec();
    if q > 1 {
        roots[1] *= e(1e-3);
    }
    GaussTable::with_roots(RootTable::from_roots(roots).expect("non-empty"))
}

/// Factored `K(λ, q, ℓ)` against the literal triple sum for `q ≤ q_max`,
/// `λ² ≤ l2_max`: every `ℓ ∈ Z_q^d` when `q ≤ 5`, 20 seeded vectors otherwise.
pub fn kloosterman_equivalence(q_max: u64, dims: &[usize], l2_max: u64, corrupt: bool, seed: u64) -> CheckResult {
    const TOL: f64 = 1e-8;
    let start = Instant::now();
    let jobs: Vec<(usize, u64)> = dims.iter().flat_map(|&d| (1..=q_max).map(move |q| (d, q))).collect();
    let results: Vec<(f64, usize, Option<String>)> = jobs
        .par_iter()
        .map(|&(d, q)| {
            let table = if corrupt { corrupted_table(q) } else { GaussTable::new(q) };
            let ls: Vec<Vec<i64>> = if q <= 5 {
                let mut all = Vec::new();
                let mut l = vec![0i64; d];
                loop {
                    all.push(l.clone());
                    if !odometer(&mut l, q as i64) {
                        break;
                    }
                }
                all
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (q << 8) ^ d as u64);
                (0..20).map(|_| (0..d).map(|_| rng.gen_range(0..q as i64)).collect()).collect()
            };
            let mut worst: f64 = 0.0;
            let mut cases = 0;
            for l2 in 1..=l2_max {
                for l in &ls {
                    cases += 1;
                    let direct = match kloosterman_direct(l2, q, l) {
                        Ok(v) => v,
                        Err(err) => return (f64::INFINITY, cases, Some(format!("error: direct q={q}: {err}"))),
                    };
                    let fast = match table.kloosterman(l2, l) {
                        Ok(v) => v,
                        Err(err) => return (f64::INFINITY, cases, Some(format!("error: factored q={q} l={l:?}: {err}"))),
                    };
                    worst = worst.max((fast - direct.re).abs()).max(direct.im.abs());
                }
            }
            (worst, cases, None)
        })
        .collect();
    let max_error = results.iter().map(|r| r.0).fold(0.0, f64::max);
    let cases = results.iter().map(|r| r.1).sum();
    let detail = results.into_iter().find_map(|r| r.2);
    CheckResult::finish("kloosterman_factored_vs_direct", max_error, TOL, cases, start, detail)
}

/// FFT against shift-and-add convolution on seeded random inputs of side 3,
/// for every admissible `λ² ≤ l2_max`.
pub fn convolution_equivalence(dims: &[usize], l2_max: u64, seeds: usize, seed: u64) -> CheckResult {
    const TOL: f64 = 1e-9;
    const SIDE: usize = 3;
    let start = Instant::now();
    let jobs: Vec<(usize, u64)> = dims
        .iter()
        .flat_map(|&d| (1..=l2_max).filter(move |&l2| admissible(d, l2).unwrap_or(false)).map(move |l2| (d, l2)))
        .collect();
    let results: Vec<Result<(f64, usize)>> = jobs
        .par_iter()
        .map(|&(d, l2)| {
            let sphere = enumerate_sphere(d, l2)?;
            let side = fft_friendly_size(FftConvolver::required_side(&[SIDE; 8][..d], l2));
            let conv = FftConvolver::new(sphere, side)?;
            let mut worst: f64 = 0.0;
            let inputs: Vec<GridFunction> = (0..seeds)
                .map(|s| {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (s as u64) << 20 ^ l2 << 4 ^ d as u64);
                    let origin: Vec<i64> = (0..d).map(|_| rng.gen_range(-5..=5)).collect();
                    GridFunction::random(origin, vec![SIDE; d], rng.gen())
                })
                .collect();
            for pair in inputs.chunks(2) {
                let outs = if pair.len() == 2 {
                    let (a, b) = conv.convolve_pair(&pair[0], &pair[1])?;
                    vec![a, b]
                } else {
                    vec![conv.convolve(&pair[0])?]
                };
                for (f, out) in pair.iter().zip(&outs) {
                    let direct = convolve_direct(f, conv.sphere());
                    let mut x = vec![0i64; d];
                    for (i, &v) in direct.values().iter().enumerate() {
                        direct.coords_of(i, &mut x);
                        worst = worst.max((v - out.get(&x).unwrap_or(f64::NAN)).abs());
                    }
                }
            }
            Ok((worst, seeds))
        })
        .collect();
    let mut max_error: f64 = 0.0;
    let mut cases = 0;
    let mut detail = None;
    for r in results {
        match r {
            Ok((w, c)) => {
                max_error = if w.is_nan() { f64::INFINITY } else { max_error.max(w) };
                cases += c;
            }
            Err(err) => {
                max_error = f64::INFINITY;
                detail = Some(format!("error: {err}"));
            }
        }
    }
    CheckResult::finish("convolution_fft_vs_direct", max_error, TOL, cases, start, detail)
}

/// Sphere transform against quadrature on 20 radii per `d ∈ {3,4,5,6}` (tolerance
/// `1e-6`) and against `sin(2πr)/(2πr)` in `d = 3` (tolerance `1e-10`).
pub fn bessel_equivalence() -> Vec<CheckResult> {
    let start = Instant::now();
    let radii: Vec<f64> = (0..20).map(|i| 0.05 + 0.31 * i as f64).collect();
    let mut quad: f64 = 0.0;
    for d in 3..=6 {
        for &r in &radii {
            quad = quad.max((sphere_ft_radial(d, r) - sphere_ft_quadrature(d, r)).abs());
        }
    }
    let a = CheckResult::finish("bessel_vs_quadrature", quad, 1e-6, 80, start, None);
    let start = Instant::now();
    let closed = radii
        .iter()
        .map(|&r| {
            let x = 2.0 * PI * r;
            (sphere_ft_radial(3, r) - x.sin() / x).abs()
        })
        .fold(0.0, f64::max);
    let b = CheckResult::finish("bessel_d3_closed_form", closed, 1e-10, radii.len(), start, None);
    vec![a, b]
}

/// `Σ_ℓ G(a/q, ℓ) e_q(y·ℓ) = e_q(a|y|²)` for every unit `a` and `y ∈ Z_q^d`.
pub fn completion_identity(q_max: u64, d_max: usize) -> CheckResult {
    const TOL: f64 = 1e-9;
    let start = Instant::now();
    let jobs: Vec<(u64, usize)> = (1..=q_max).flat_map(|q| (1..=d_max).map(move |d| (q, d))).collect();
    let results: Vec<Result<(f64, Vec<i64>)>> = jobs.par_iter().map(|&(q, d)| completion_sweep(q, d)).collect();
    let mut worst: f64 = 0.0;
    let mut detail = None;
    for r in results {
        match r {
            Ok((v, _)) => worst = worst.max(v),
            Err(err) => {
                worst = f64::INFINITY;
                detail = Some(format!("error: {err}"));
            }
        }
    }
    CheckResult::finish("completion_identity", worst, TOL, jobs.len(), start, detail)
}

pub fn run_selftest(opts: &SelftestOptions) -> SelftestReport {
    let start = Instant::now();
    let mut checks = vec![kloosterman_equivalence(12, &[4, 5], 20, opts.corrupt_roots, opts.seed)];
    checks.push(convolution_equivalence(&[4, 5], 49, opts.convolution_seeds, opts.seed));
    checks.extend(bessel_equivalence());
    checks.push(completion_identity(16, 4));
    SelftestReport { passed: checks.iter().all(|c| c.passed), checks, seconds: start.elapsed().as_secs_f64() }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_checks_pass() {
        assert!(kloosterman_equivalence(6, &[4], 5, false, 0).passed);
        let c = convolution_equivalence(&[4], 10, 3, 0);
        assert!(c.passed, "{c:?}");
        assert!(bessel_equivalence().iter().all(|c| c.passed));
        assert!(completion_identity(6, 3).passed);
    }

    #[test]
    fn corruption_is_detected() {
        let c = kloosterman_equivalence(7, &[4], 6, true, 0);
        assert!(!c.passed);
    }
}

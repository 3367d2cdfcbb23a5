//! The sphere self-average `A_λ 1_{S_λ}` and its superlevel sets
//! `G_λ = {A_λ 1_{S_λ} > c/λ}`.

use crate::certificate::{CertParams, NormCertificate};
use crate::error::{invalid, Error, Result};
use crate::fft;
use crate::grid::GridFunction;
use crate::lattice::{enumerate_sphere, SpherePointSet};
use crate::numeric::{fft_friendly_size, isqrt};
use crate::oracle::intersection_count;
use num_complex::Complex64;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

/// Working-set cap for the complex FFT buffer: admits `d = 5` up to `λ = 8`
/// and `d = 4` up to `λ = 22`.
pub const MEMORY_BUDGET_BYTES: usize = 1_200_000_000;
pub const DEFAULT_THRESHOLD: f64 = 0.1;
pub const DEFAULT_EPSILON: f64 = 0.25;
/// Number of members re-verified by direct intersection counting.
pub const VERIFY_SAMPLES: usize = 100;
const VERIFY_TOL: f64 = 1e-6;

/// Torus side used for the self-average at radius `⌊λ⌋ = m`.
pub fn self_average_torus(lambda2: u64) -> usize {
    fft_friendly_size(4 * isqrt(lambda2) as usize + 1)
}

/// `A_λ 1_{S_λ}` on the centered box `[-2m, 2m]^d`, `m = ⌊λ⌋`, computed as the
/// inverse transform of the squared transform of `1_{S_λ}`.
pub fn sphere_self_average(d: usize, lambda2: u64) -> Result<GridFunction> {
    sphere_self_average_budget(d, lambda2, MEMORY_BUDGET_BYTES)
}

pub fn sphere_self_average_budget(d: usize, lambda2: u64, budget: usize) -> Result<GridFunction> {
    let side = self_average_torus(lambda2);
    let bytes = side
        .checked_pow(d as u32)
        .and_then(|n| n.checked_mul(std::mem::size_of::<Complex64>()))
        .unwrap_or(usize::MAX);
    if bytes > budget {
        return Err(Error::ResourceCap(format!(
            "FFT grid {side}^{d} needs {bytes} bytes (budget {budget}); lower lambda"
        )));
    }
    let sphere = enumerate_sphere(d, lambda2)?;
    Ok(self_average_of(&sphere, side))
}

fn self_average_of(sphere: &SpherePointSet, side: usize) -> GridFunction {
    let d = sphere.d();
    let m = sphere.max_coord();
    let dims = vec![side; d];
    let mut buf = vec![Complex64::default(); side.pow(d as u32)];
    let wrap = |c: i64| c.rem_euclid(side as i64) as usize;
    for n in sphere.points() {
        let idx = n.iter().fold(0usize, |acc, &c| acc * side + wrap(c as i64));
        buf[idx].re = 1.0;
    }
    fft::forward(&mut buf, &dims);
    // S = -S, so the correlation is the convolution 1_S * 1_S
    for v in buf.iter_mut() {
        *v = *v * *v;
    }
    fft::inverse(&mut buf, &dims);
    let scale = sphere.radius().powi(-(d as i32 - 2));
    let box_side = (4 * m + 1) as usize;
    GridFunction::from_fn(vec![-2 * m; d], vec![box_side; d], |x| {
        let idx = x.iter().fold(0usize, |acc, &c| acc * side + wrap(c));
        buf[idx].re * scale
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LevelSetReport {
    pub d: usize,
    pub lambda2: u64,
    pub threshold_c: f64,
    pub epsilon: f64,
    pub g_size: u64,
    /// Axis points `(x₁, 0, …, 0)`, `0 < x₁ < λ/2`, `4 | x₁`, verified to lie in `G_λ`.
    pub witnesses: Vec<Vec<i64>>,
    pub witness_candidates: usize,
    pub value_at_origin: f64,
    pub max_value: f64,
    pub upper_envelope: f64,
    pub lower_envelope: f64,
    pub verified_members: usize,
    pub max_verification_error: f64,
    pub symmetric: bool,
    pub within_ball: bool,
}

/// Scans `G_λ`, re-verifies a seeded sample of members and the axis witnesses
/// by direct intersection counting, and returns the report with all members.
pub fn level_set_members(d: usize, lambda2: u64, c: f64, epsilon: f64, seed: u64) -> Result<(LevelSetReport, Vec<Vec<i64>>)> {
    if !(c > 0.0) {
        return Err(invalid("level_set: threshold c must be positive"));
    }
    let avg = sphere_self_average(d, lambda2)?;
    let sphere = enumerate_sphere(d, lambda2)?;
    let lambda = sphere.radius();
    let level = c / lambda;
    let scale = lambda.powi(-(d as i32 - 2));
    let mut members = Vec::new();
    let mut x = vec![0i64; d];
    let mut max_value: f64 = 0.0;
    for (i, &v) in avg.values().iter().enumerate() {
        max_value = max_value.max(v);
        if v > level {
            avg.coords_of(i, &mut x);
            members.push(x.clone());
        }
    }
    let within_ball = members.iter().all(|p| p.iter().map(|c| c * c).sum::<i64>() as f64 <= 4.0 * lambda2 as f64 + 1e-9);
    let symmetric = members.iter().all(|p| {
        let mut a = p.clone();
        a[0] = -a[0];
        let mut b = p.clone();
        b.rotate_left(1);
        let mut s = p.clone();
        s.swap(0, d - 1);
        [a, b, s].iter().all(|y| avg.get(y).is_some_and(|v| v > level))
    });

    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ lambda2 ^ ((d as u64) << 32));
    let picks: Vec<usize> = if members.len() <= VERIFY_SAMPLES {
        (0..members.len()).collect()
    } else {
        sample(&mut rng, members.len(), VERIFY_SAMPLES).into_vec()
    };
    let mut max_err: f64 = 0.0;
    for &i in &picks {
        let p = &members[i];
        let exact = intersection_count(&sphere, p) as f64 * scale;
        let fftv = avg.get(p).expect("member inside box");
        max_err = max_err.max((exact - fftv).abs());
        if !(exact > level) || (exact - fftv).abs() > VERIFY_TOL {
            return Err(Error::Precision(format!(
                "level_set: member {p:?} has FFT value {fftv} but direct value {exact}"
            )));
        }
    }

    let mut witnesses = Vec::new();
    let mut candidates = 0;
    let mut x1 = 4i64;
    while (x1 as f64) < lambda / 2.0 {
        candidates += 1;
        let mut p = vec![0i64; d];
        p[0] = x1;
        if intersection_count(&sphere, &p) as f64 * scale > level {
            witnesses.push(p);
        }
        x1 += 4;
    }

    let report = LevelSetReport {
        d,
        lambda2,
        threshold_c: c,
        epsilon,
        g_size: members.len() as u64,
        witnesses,
        witness_candidates: candidates,
        value_at_origin: avg.get(&vec![0; d]).unwrap_or(0.0),
        max_value,
        upper_envelope: lambda.powf((d as f64 + 3.0) / 2.0 + epsilon),
        lower_envelope: lambda,
        verified_members: picks.len(),
        max_verification_error: max_err,
        symmetric,
        within_ball,
    };
    Ok((report, members))
}

pub fn level_set(d: usize, lambda2: u64, c: f64) -> Result<LevelSetReport> {
    Ok(level_set_members(d, lambda2, c, DEFAULT_EPSILON, 0)?.0)
}

/// The test pair `f = 1_{S_λ}`, `g = 1_{G_λ}` in
/// `⟨A_λ f, g⟩ / (λ^{d(1-2/p)} |S_λ|^{1/p} |G_λ|^{1/p})`.
pub fn necessity_ratio(d: usize, lambda2: u64, p: f64, c: f64) -> Result<NormCertificate> {
    if !(p >= 1.0) {
        return Err(invalid("necessity_ratio: p must be at least 1"));
    }
    let avg = sphere_self_average(d, lambda2)?;
    let sphere = enumerate_sphere(d, lambda2)?;
    let lambda = sphere.radius();
    let level = c / lambda;
    let (mut g_size, mut left) = (0u64, 0.0);
    for &v in avg.values() {
        if v > level {
            g_size += 1;
            left += v;
        }
    }
    let right = lambda.powf(d as f64 * (1.0 - 2.0 / p)) * (sphere.len() as f64).powf(1.0 / p) * (g_size as f64).powf(1.0 / p);
    let params = CertParams { p: Some(p), ..CertParams::new(d, lambda2) };
    let mut cert = NormCertificate::new("necessity_ratio", left, right, params).with_witness(json!({
        "sphere_size": sphere.len(),
        "g_size": g_size,
        "threshold_c": c,
        "critical_p": (d as f64 + 2.0) / d as f64,
    }));
    if g_size == 0 {
        cert.ratio = 0.0;
        cert = cert.with_note("empty level set");
    }
    Ok(cert)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::sphere_count;

    #[test]
    fn self_average_matches_intersection_counts() {
        let avg = sphere_self_average(4, 9).unwrap();
        let s = enumerate_sphere(4, 9).unwrap();
        assert_eq!(avg.dims(), &[13, 13, 13, 13]);
        assert!((avg.get(&[0, 0, 0, 0]).unwrap() - s.len() as f64 / 9.0).abs() < 1e-9);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for i in sample(&mut rng, avg.len(), 20).into_vec() {
            let mut x = vec![0i64; 4];
            avg.coords_of(i, &mut x);
            let direct = intersection_count(&s, &x) as f64 / 9.0;
            assert!((avg.values()[i] - direct).abs() < 1e-9, "{x:?}");
        }
        // points with |x| > 2λ
        assert!(avg.get(&[6, 6, 0, 0]).unwrap().abs() < 1e-9);
        assert!(avg.get(&[6, 1, 0, 0]).unwrap().abs() < 1e-9);
        assert!(avg.get(&[6, 0, 0, 0]).unwrap() > 0.0);
    }

    #[test]
    fn budget_rejection() {
        assert!(matches!(sphere_self_average(5, 81), Err(Error::ResourceCap(_))));
        assert!(matches!(sphere_self_average_budget(4, 9, 1000), Err(Error::ResourceCap(_))));
    }

    #[test]
    fn level_set_small() {
        let (r, members) = level_set_members(5, 9, 0.1, 0.25, 1).unwrap();
        assert_eq!(r.g_size as usize, members.len());
        assert!(r.symmetric && r.within_ball);
        assert_eq!(r.witness_candidates, 0);
        let expected = sphere_count(5, 9).unwrap() as f64 / 27.0;
        assert!((r.value_at_origin - expected).abs() < 1e-9);
        assert!(members.contains(&vec![0; 5]));
        assert!(r.verified_members > 0 && r.max_verification_error < 1e-9);
        let empty = level_set(5, 9, 3.0 * r.max_value + 1.0).unwrap();
        assert_eq!(empty.g_size, 0);
    }

    #[test]
    fn axis_witnesses_at_larger_radius() {
        // λ = 9 in d = 4 admits x₁ = 4
        let (r, _) = level_set_members(4, 81, 0.1, 0.25, 0).unwrap();
        assert_eq!(r.witness_candidates, 1);
        assert_eq!(r.witnesses, vec![vec![4, 0, 0, 0]]);
        assert!(r.g_size >= r.witnesses.len() as u64);
    }

    #[test]
    fn necessity_ratio_examples() {
        let c2 = necessity_ratio(5, 9, 2.0, 0.1).unwrap();
        assert!(c2.ratio > 0.0 && c2.ratio < 10.0);
        let c1 = necessity_ratio(5, 9, 1.2, 0.1).unwrap();
        let w = c1.witness.as_ref().unwrap();
        let base = w["sphere_size"].as_f64().unwrap() * w["g_size"].as_f64().unwrap() / 3f64.powi(10);
        assert!((c1.ratio / c2.ratio - base.powf(0.5 - 1.0 / 1.2)).abs() < 1e-9);
        let e = necessity_ratio(5, 9, 2.0, 1e9).unwrap();
        assert_eq!(e.ratio, 0.0);
    }
}

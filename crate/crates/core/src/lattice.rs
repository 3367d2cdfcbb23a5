//! Lattice points on spheres `{n ∈ Z^d : |n|² = λ²}`.

use crate::error::{invalid, Error, Result};
use crate::numeric::isqrt;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

/// The lattice sphere of squared radius `lambda2` in `Z^d`, stored as a flat
/// lexicographically sorted array of `i16` coordinates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpherePointSet {
    d: usize,
    lambda2: u64,
    coords: Vec<i16>,
}

impl SpherePointSet {
    pub fn d(&self) -> usize {
        self.d
    }

    pub fn lambda2(&self) -> u64 {
        self.lambda2
    }

    pub fn radius(&self) -> f64 {
        (self.lambda2 as f64).sqrt()
    }

    /// Largest absolute coordinate any point can have.
    pub fn max_coord(&self) -> i64 {
        isqrt(self.lambda2) as i64
    }

    pub fn len(&self) -> usize {
        if self.d == 0 {
            0
        } else {
            self.coords.len() / self.d
        }
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn coords(&self) -> &[i16] {
        &self.coords
    }

    pub fn points(&self) -> std::slice::ChunksExact<'_, i16> {
        self.coords.chunks_exact(self.d.max(1))
    }

    pub fn point(&self, i: usize) -> &[i16] {
        &self.coords[i * self.d..(i + 1) * self.d]
    }

    /// Membership by binary search on the lexicographic order.
    pub fn contains(&self, p: &[i16]) -> bool {
        if p.len() != self.d {
            return false;
        }
        let n = self.len();
        let (mut lo, mut hi) = (0usize, n);
        while lo < hi {
            let mid = (lo + hi) / 2;
            match self.point(mid).cmp(p) {
                std::cmp::Ordering::Less => lo = mid + 1,
                std::cmp::Ordering::Greater => hi = mid,
                std::cmp::Ordering::Equal => return true,
            }
        }
        false
    }

    /// Membership for a wide-integer point; anything out of `i16` range is absent.
    pub fn contains_i64(&self, p: &[i64]) -> bool {
        let mut buf = [0i16; 16];
        if p.len() > buf.len() {
            let v: Option<Vec<i16>> = p.iter().map(|&x| i16::try_from(x).ok()).collect();
            return v.is_some_and(|v| self.contains(&v));
        }
        for (b, &x) in buf.iter_mut().zip(p) {
            match i16::try_from(x) {
                Ok(v) => *b = v,
                Err(_) => return false,
            }
        }
        self.contains(&buf[..p.len()])
    }

    /// Little-endian `(d: u32, λ²: u64, count: u64)` header followed by the
    /// packed `i16` coordinates.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(&(self.d as u32).to_le_bytes())?;
        w.write_all(&self.lambda2.to_le_bytes())?;
        w.write_all(&(self.len() as u64).to_le_bytes())?;
        let mut buf = Vec::with_capacity(self.coords.len() * 2);
        for c in &self.coords {
            buf.extend_from_slice(&c.to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut b4 = [0u8; 4];
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b4)?;
        let d = u32::from_le_bytes(b4) as usize;
        r.read_exact(&mut b8)?;
        let lambda2 = u64::from_le_bytes(b8);
        r.read_exact(&mut b8)?;
        let count = u64::from_le_bytes(b8) as usize;
        if d == 0 || d > 64 {
            return Err(Error::Format(format!("sphere cache: bad dimension {d}")));
        }
        let n = count
            .checked_mul(d)
            .filter(|&n| n <= 1 << 32)
            .ok_or_else(|| Error::Format("sphere cache: implausible point count".into()))?;
        let mut raw = vec![0u8; n * 2];
        r.read_exact(&mut raw)?;
        let coords: Vec<i16> = raw.chunks_exact(2).map(|c| i16::from_le_bytes([c[0], c[1]])).collect();
        let set = SpherePointSet { d, lambda2, coords };
        for p in set.points() {
            let norm: i64 = p.iter().map(|&x| x as i64 * x as i64).sum();
            if norm as u64 != lambda2 {
                return Err(Error::Format("sphere cache: point off the sphere".into()));
            }
        }
        if set.coords.chunks_exact(d).zip(set.coords.chunks_exact(d).skip(1)).any(|(a, b)| a >= b) {
            return Err(Error::Format("sphere cache: points not strictly sorted".into()));
        }
        Ok(set)
    }
}

/// Whether `λ²` is an admissible radius: every `λ² >= 1` for `d >= 5`,
/// `λ² ∉ 4N` for `d = 4`.
pub fn admissible(d: usize, lambda2: u64) -> Result<bool> {
    if d <= 3 {
        return Err(invalid(format!("admissible radii are only defined for d >= 4 (got d = {d})")));
    }
    if lambda2 == 0 {
        return Err(invalid("admissible: lambda^2 must be positive"));
    }
    Ok(d >= 5 || lambda2 % 4 != 0)
}

fn descend(d: usize, rem: u64, prefix: &mut Vec<i16>, out: &mut Vec<i16>) {
    let k = d - prefix.len();
    if k == 1 {
        let s = isqrt(rem);
        if s * s == rem {
            let s = s as i16;
            prefix.push(-s);
            out.extend_from_slice(prefix);
            prefix.pop();
            if s != 0 {
                prefix.push(s);
                out.extend_from_slice(prefix);
                prefix.pop();
            }
        }
        return;
    }
    let m = isqrt(rem) as i64;
    for x in -m..=m {
        prefix.push(x as i16);
        descend(d, rem - (x * x) as u64, prefix, out);
        prefix.pop();
    }
}

/// All lattice points with `|n|² = λ²`, in lexicographic order.
pub fn enumerate_sphere(d: usize, lambda2: u64) -> Result<SpherePointSet> {
    if d < 2 {
        return Err(invalid("enumerate_sphere: d must be at least 2"));
    }
    let m = isqrt(lambda2);
    if m > i16::MAX as u64 {
        return Err(invalid("enumerate_sphere: radius exceeds 16-bit coordinate range"));
    }
    let m = m as i64;
    let chunks: Vec<Vec<i16>> = (-m..=m)
        .into_par_iter()
        .map(|x| {
            let mut out = Vec::new();
            let mut prefix = vec![x as i16];
            descend(d, lambda2 - (x * x) as u64, &mut prefix, &mut out);
            out
        })
        .collect();
    Ok(SpherePointSet { d, lambda2, coords: chunks.concat() })
}

/// `|{n ∈ Z^d : |n|² = λ²}|` from the `d`-th convolution power of the
/// one-dimensional square indicator `r₁`. Independent of [`enumerate_sphere`].
pub fn sphere_count(d: usize, lambda2: u64) -> Result<u128> {
    if d < 1 {
        return Err(invalid("sphere_count: d must be positive"));
    }
    let n = lambda2 as usize;
    let roots = isqrt(lambda2) as usize;
    // r_k[m] for m = 0..=n, built one factor at a time
    let mut counts = vec![0u128; n + 1];
    for x in 0..=roots {
        counts[x * x] += if x == 0 { 1 } else { 2 };
    }
    for _ in 1..d {
        let mut next = vec![0u128; n + 1];
        for (m, &c) in counts.iter().enumerate() {
            if c == 0 {
                continue;
            }
            for x in 0..=roots {
                let t = m + x * x;
                if t > n {
                    break;
                }
                next[t] += c * if x == 0 { 1 } else { 2 };
            }
        }
        counts = next;
    }
    Ok(counts[n])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountRatioRow {
    pub lambda2: u64,
    pub count: u128,
    /// `|S| / λ^{d-2}`.
    pub ratio: f64,
    pub admissible: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountRatioSweep {
    pub d: usize,
    pub rows: Vec<CountRatioRow>,
    /// `[min, max]` of the ratio over the admissible rows.
    pub window: Option<(f64, f64)>,
}

/// `|S^d_λ| / λ^{d-2}` over a range of `λ²`; the window is taken over the
/// admissible radii only.
pub fn count_ratio_sweep(d: usize, lambda2_range: std::ops::RangeInclusive<u64>) -> Result<CountRatioSweep> {
    if d < 4 {
        return Err(invalid("count_ratio_sweep: d must be at least 4"));
    }
    let rows: Vec<CountRatioRow> = lambda2_range
        .filter(|&l2| l2 >= 1)
        .map(|l2| {
            let count = sphere_count(d, l2)?;
            let ratio = count as f64 / (l2 as f64).powf((d as f64 - 2.0) / 2.0);
            Ok(CountRatioRow { lambda2: l2, count, ratio, admissible: admissible(d, l2)? })
        })
        .collect::<Result<_>>()?;
    let window = rows.iter().filter(|r| r.admissible).fold(None, |acc: Option<(f64, f64)>, r| {
        Some(match acc {
            None => (r.ratio, r.ratio),
            Some((lo, hi)) => (lo.min(r.ratio), hi.max(r.ratio)),
        })
    });
    Ok(CountRatioSweep { d, rows, window })
}

/// File name for a cached point set inside a cache directory.
pub fn cache_path(dir: &Path, d: usize, lambda2: u64) -> PathBuf {
    dir.join(format!("sphere_d{d}_l{lambda2}.bin"))
}

/// Reads the point set from `dir` if cached, otherwise enumerates and stores it.
pub fn load_or_enumerate(dir: &Path, d: usize, lambda2: u64) -> Result<SpherePointSet> {
    let path = cache_path(dir, d, lambda2);
    if let Ok(f) = std::fs::File::open(&path) {
        let set = SpherePointSet::read_binary(std::io::BufReader::new(f))?;
        if set.d == d && set.lambda2 == lambda2 {
            return Ok(set);
        }
    }
    let set = enumerate_sphere(d, lambda2)?;
    std::fs::create_dir_all(dir)?;
    let tmp = path.with_extension("tmp");
    set.write_binary(std::io::BufWriter::new(std::fs::File::create(&tmp)?))?;
    std::fs::rename(tmp, path)?;
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute_force(d: usize, lambda2: u64) -> usize {
        let m = isqrt(lambda2) as i64;
        let side = (2 * m + 1) as usize;
        (0..side.pow(d as u32))
            .filter(|&idx| {
                let mut i = idx;
                let mut s = 0i64;
                for _ in 0..d {
                    let x = (i % side) as i64 - m;
                    i /= side;
                    s += x * x;
                }
                s as u64 == lambda2
            })
            .count()
    }

    #[test]
    fn admissibility() {
        assert!(admissible(5, 4).unwrap());
        assert!(!admissible(4, 8).unwrap());
        assert!(admissible(4, 3).unwrap());
        assert!(admissible(3, 3).is_err());
        for k in 1..6 {
            assert!(!admissible(4, 4u64.pow(k)).unwrap());
        }
    }

    #[test]
    fn small_spheres() {
        assert_eq!(enumerate_sphere(4, 1).unwrap().len(), 8);
        assert_eq!(enumerate_sphere(5, 1).unwrap().len(), 10);
        let s = enumerate_sphere(4, 2).unwrap();
        assert_eq!(s.len(), brute_force(4, 2));
        assert_eq!(s.len(), 24);
        assert_eq!(enumerate_sphere(5, 0).unwrap().len(), 1);
        assert_eq!(enumerate_sphere(3, 7).unwrap().len(), 0);
    }

    #[test]
    fn counts() {
        assert_eq!(sphere_count(4, 1).unwrap(), 8);
        assert_eq!(sphere_count(5, 0).unwrap(), 1);
        assert_eq!(sphere_count(5, 4).unwrap(), brute_force(5, 4) as u128);
        for d in 2..=5 {
            for l2 in 0..=30 {
                assert_eq!(sphere_count(d, l2).unwrap(), enumerate_sphere(d, l2).unwrap().len() as u128);
            }
        }
        for l2 in [50, 99, 169, 255] {
            assert_eq!(sphere_count(5, l2).unwrap(), enumerate_sphere(5, l2).unwrap().len() as u128);
        }
    }

    #[test]
    fn enumeration_is_sorted_symmetric_and_on_sphere() {
        let s = enumerate_sphere(5, 27).unwrap();
        let pts: Vec<&[i16]> = s.points().collect();
        assert!(pts.windows(2).all(|w| w[0] < w[1]));
        for p in &pts {
            let norm: i64 = p.iter().map(|&x| (x as i64).pow(2)).sum();
            assert_eq!(norm, 27);
            let neg: Vec<i16> = p.iter().map(|x| -x).collect();
            assert!(s.contains(&neg));
            let mut rot = p.to_vec();
            rot.rotate_left(1);
            assert!(s.contains(&rot));
            let mut swapped = p.to_vec();
            swapped.swap(0, 1);
            assert!(s.contains(&swapped));
        }
        assert!(!s.contains(&[0, 0, 0, 0, 0]));
    }

    #[test]
    fn ratio_sweep() {
        let sw = count_ratio_sweep(5, 1..=1).unwrap();
        assert_eq!(sw.rows[0].ratio, 10.0);
        let sw = count_ratio_sweep(4, 1..=20).unwrap();
        assert!(!sw.rows.iter().find(|r| r.lambda2 == 16).unwrap().admissible);
        let sw = count_ratio_sweep(5, 1..=500).unwrap();
        let (lo, hi) = sw.window.unwrap();
        assert!(lo > 0.0 && hi < 50.0, "window {lo} {hi}");
        #[allow(clippy::reversed_empty_ranges)]
        let empty = count_ratio_sweep(5, 10..=1).unwrap();
        assert!(empty.rows.is_empty() && empty.window.is_none());
    }

    #[test]
    fn binary_cache_roundtrip_and_validation() {
        let s = enumerate_sphere(5, 11).unwrap();
        let mut buf = Vec::new();
        s.write_binary(&mut buf).unwrap();
        assert_eq!(buf.len(), 4 + 8 + 8 + 2 * 5 * s.len());
        assert_eq!(&buf[..4], &5u32.to_le_bytes());
        let back = SpherePointSet::read_binary(&buf[..]).unwrap();
        assert_eq!(back, s);
        // flip one coordinate: the point leaves the sphere
        let mut bad = buf.clone();
        bad[20] ^= 0x01;
        assert!(SpherePointSet::read_binary(&bad[..]).is_err());
        assert!(SpherePointSet::read_binary(&buf[..10]).is_err());
    }

    #[test]
    fn cache_directory() {
        let dir = tempfile::tempdir().unwrap();
        let a = load_or_enumerate(dir.path(), 4, 13).unwrap();
        assert!(cache_path(dir.path(), 4, 13).exists());
        let b = load_or_enumerate(dir.path(), 4, 13).unwrap();
        assert_eq!(a, b);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn nonempty_in_four_or_more_dimensions(d in 4usize..7, l2 in 1u64..200) {
            let s = enumerate_sphere(d, l2).unwrap();
            prop_assert!(!s.is_empty());
            prop_assert_eq!(s.len() as u128, sphere_count(d, l2).unwrap());
        }
    }
}

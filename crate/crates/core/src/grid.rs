//! Real-valued functions on boxes and tori in `Z^d`.

use crate::error::{invalid, Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::io::{Read, Write};

/// Dense values on the box `origin + [0, dims)`, row-major with the last
/// coordinate fastest. A periodic function lives on the torus with those
/// side lengths and wraps on lookup.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    origin: Vec<i64>,
    dims: Vec<usize>,
    values: Vec<f64>,
    periodic: bool,
}

impl GridFunction {
    pub fn zeros(origin: Vec<i64>, dims: Vec<usize>, periodic: bool) -> Self {
        assert_eq!(origin.len(), dims.len());
        let len = dims.iter().product();
        Self { origin, dims, values: vec![0.0; len], periodic }
    }

    pub fn from_values(origin: Vec<i64>, dims: Vec<usize>, values: Vec<f64>, periodic: bool) -> Result<Self> {
        if origin.len() != dims.len() || origin.is_empty() {
            return Err(invalid("grid: origin and dims must have the same positive length"));
        }
        if dims.iter().product::<usize>() != values.len() {
            return Err(invalid("grid: value count does not match box volume"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("grid: values must be finite"));
        }
        Ok(Self { origin, dims, values, periodic })
    }

    /// `f(x)` sampled on the box.
    pub fn from_fn(origin: Vec<i64>, dims: Vec<usize>, f: impl Fn(&[i64]) -> f64) -> Self {
        let mut g = Self::zeros(origin, dims, false);
        let mut x = vec![0i64; g.d()];
        for i in 0..g.len() {
            g.coords_of(i, &mut x);
            g.values[i] = f(&x);
        }
        g
    }

    /// Uniform values in `[0, 1)` from a seeded generator.
    pub fn random(origin: Vec<i64>, dims: Vec<usize>, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut g = Self::zeros(origin, dims, false);
        for v in &mut g.values {
            *v = rng.gen::<f64>();
        }
        g
    }

    pub fn delta(d: usize) -> Self {
        let mut g = Self::zeros(vec![0; d], vec![1; d], false);
        g.values[0] = 1.0;
        g
    }

    pub fn d(&self) -> usize {
        self.dims.len()
    }

    pub fn origin(&self) -> &[i64] {
        &self.origin
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn is_periodic(&self) -> bool {
        self.periodic
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn is_indicator(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0 || v == 1.0)
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Coordinates of the flat index `idx`.
    pub fn coords_of(&self, mut idx: usize, out: &mut [i64]) {
        for i in (0..self.dims.len()).rev() {
            out[i] = self.origin[i] + (idx % self.dims[i]) as i64;
            idx /= self.dims[i];
        }
    }

    /// Flat index of `x`, wrapping on a torus; `None` outside a box.
    pub fn index_of(&self, x: &[i64]) -> Option<usize> {
        let mut idx = 0usize;
        for i in 0..self.dims.len() {
            let mut off = x[i] - self.origin[i];
            let n = self.dims[i] as i64;
            if self.periodic {
                off = off.rem_euclid(n);
            } else if off < 0 || off >= n {
                return None;
            }
            idx = idx * self.dims[i] + off as usize;
        }
        Some(idx)
    }

    pub fn get(&self, x: &[i64]) -> Option<f64> {
        self.index_of(x).map(|i| self.values[i])
    }

    pub fn set(&mut self, x: &[i64], v: f64) -> Result<()> {
        let i = self.index_of(x).ok_or_else(|| invalid(format!("grid: {x:?} outside the box")))?;
        self.values[i] = v;
        Ok(())
    }

    /// Same function on the same box, marked periodic.
    pub fn into_periodic(mut self) -> Self {
        self.periodic = true;
        self
    }

    /// Smallest box containing every nonzero value, or `None` if the function vanishes.
    pub fn support_box(&self) -> Option<(Vec<i64>, Vec<usize>)> {
        let d = self.d();
        let mut lo = vec![i64::MAX; d];
        let mut hi = vec![i64::MIN; d];
        let mut x = vec![0i64; d];
        let mut any = false;
        for (i, &v) in self.values.iter().enumerate() {
            if v != 0.0 {
                any = true;
                self.coords_of(i, &mut x);
                for k in 0..d {
                    lo[k] = lo[k].min(x[k]);
                    hi[k] = hi[k].max(x[k]);
                }
            }
        }
        any.then(|| {
            let dims = lo.iter().zip(&hi).map(|(l, h)| (h - l + 1) as usize).collect();
            (lo, dims)
        })
    }

    /// `Σ_x f(x) g(x)` over the common points of two boxes.
    pub fn inner(&self, other: &GridFunction) -> f64 {
        let mut x = vec![0i64; self.d()];
        let mut s = 0.0;
        for (i, &v) in self.values.iter().enumerate() {
            if v == 0.0 {
                continue;
            }
            self.coords_of(i, &mut x);
            if let Some(w) = other.get(&x) {
                s += v * w;
            }
        }
        s
    }

    /// Little-endian `(d: u32, periodic: u8, origin: d × i64, dims: d × u64)`
    /// header followed by the values as `f64`.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(&(self.d() as u32).to_le_bytes())?;
        w.write_all(&[self.periodic as u8])?;
        for o in &self.origin {
            w.write_all(&o.to_le_bytes())?;
        }
        for &s in &self.dims {
            w.write_all(&(s as u64).to_le_bytes())?;
        }
        let mut buf = Vec::with_capacity(8 * self.values.len());
        for v in &self.values {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut b4 = [0u8; 4];
        let mut b1 = [0u8; 1];
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b4)?;
        let d = u32::from_le_bytes(b4) as usize;
        if d == 0 || d > 32 {
            return Err(Error::Format(format!("grid: bad dimension {d}")));
        }
        r.read_exact(&mut b1)?;
        let periodic = match b1[0] {
            0 => false,
            1 => true,
            b => return Err(Error::Format(format!("grid: bad periodic flag {b}"))),
        };
        let mut origin = Vec::with_capacity(d);
        for _ in 0..d {
            r.read_exact(&mut b8)?;
            origin.push(i64::from_le_bytes(b8));
        }
        let mut dims = Vec::with_capacity(d);
        for _ in 0..d {
            r.read_exact(&mut b8)?;
            dims.push(u64::from_le_bytes(b8) as usize);
        }
        let len = dims
            .iter()
            .try_fold(1usize, |acc, &s| acc.checked_mul(s))
            .filter(|&n| n <= 1 << 31)
            .ok_or_else(|| Error::Format("grid: implausible box volume".into()))?;
        let mut raw = vec![0u8; 8 * len];
        r.read_exact(&mut raw)?;
        let values = raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        Self::from_values(origin, dims, values, periodic).map_err(|e| Error::Format(e.to_string()))
    }

    /// One row per point: `x0, …, x{d-1}, value`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let d = self.d();
        let mut header: Vec<String> = (0..d).map(|i| format!("x{i}")).collect();
        header.push("value".into());
        wr.write_record(&header)?;
        let mut x = vec![0i64; d];
        for (i, v) in self.values.iter().enumerate() {
            self.coords_of(i, &mut x);
            let mut rec: Vec<String> = x.iter().map(|c| c.to_string()).collect();
            rec.push(format!("{v:?}"));
            wr.write_record(&rec)?;
        }
        wr.flush()?;
        Ok(())
    }

    /// Reads a CSV written by [`GridFunction::write_csv`]; the box is the
    /// bounding box of the listed points and unlisted points are zero.
    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let d = rd.headers()?.len().checked_sub(1).filter(|&d| d > 0).ok_or_else(|| {
            Error::Format("grid csv: need at least one coordinate column and a value column".into())
        })?;
        let mut rows: Vec<(Vec<i64>, f64)> = Vec::new();
        for rec in rd.records() {
            let rec = rec?;
            let parse_err = |e: &dyn std::fmt::Display| Error::Format(format!("grid csv: {e}"));
            let x: Vec<i64> =
                (0..d).map(|i| rec[i].trim().parse::<i64>().map_err(|e| parse_err(&e))).collect::<Result<_>>()?;
            let v: f64 = rec[d].trim().parse().map_err(|e| parse_err(&e))?;
            rows.push((x, v));
        }
        if rows.is_empty() {
            return Err(Error::Format("grid csv: no rows".into()));
        }
        let mut lo = rows[0].0.clone();
        let mut hi = rows[0].0.clone();
        for (x, _) in &rows {
            for i in 0..d {
                lo[i] = lo[i].min(x[i]);
                hi[i] = hi[i].max(x[i]);
            }
        }
        let dims = lo.iter().zip(&hi).map(|(l, h)| (h - l + 1) as usize).collect();
        let mut g = Self::zeros(lo, dims, false);
        for (x, v) in rows {
            g.set(&x, v)?;
        }
        Ok(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indexing_roundtrip() {
        let g = GridFunction::random(vec![-2, 3, 0], vec![4, 3, 5], 7);
        let mut x = vec![0i64; 3];
        for i in 0..g.len() {
            g.coords_of(i, &mut x);
            assert_eq!(g.index_of(&x), Some(i));
        }
        assert_eq!(g.index_of(&[-3, 3, 0]), None);
        let t = g.clone().into_periodic();
        assert_eq!(t.get(&[-6, 3, 0]), t.get(&[-2, 3, 0]));
    }

    #[test]
    fn binary_roundtrip() {
        let g = GridFunction::random(vec![-1, 5], vec![3, 4], 1);
        let mut buf = Vec::new();
        g.write_binary(&mut buf).unwrap();
        assert_eq!(buf.len(), 4 + 1 + 16 + 16 + 8 * 12);
        assert_eq!(GridFunction::read_binary(&buf[..]).unwrap(), g);
        assert!(GridFunction::read_binary(&buf[..20]).is_err());
    }

    #[test]
    fn csv_roundtrip() {
        let g = GridFunction::random(vec![0, -2], vec![2, 3], 3);
        let mut buf = Vec::new();
        g.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("x0,x1,value\n"));
        assert_eq!(GridFunction::read_csv(&buf[..]).unwrap(), g);
    }

    #[test]
    fn support_and_inner() {
        let mut g = GridFunction::zeros(vec![0, 0], vec![5, 5], false);
        g.set(&[1, 2], 1.0).unwrap();
        g.set(&[3, 1], 2.0).unwrap();
        assert_eq!(g.support_box(), Some((vec![1, 1], vec![3, 2])));
        let h = GridFunction::from_fn(vec![1, 1], vec![2, 2], |_| 3.0);
        assert_eq!(g.inner(&h), 3.0);
        assert!(GridFunction::from_values(vec![0], vec![2], vec![1.0, f64::NAN], false).is_err());
    }
}

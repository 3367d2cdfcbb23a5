//! The spatial operator `A_λ f(x) = λ^{-(d-2)} Σ_{|n|² = λ²} f(x - n)`,
//! localized norms and the bilinear ratios tested against it.

use crate::certificate::{CertParams, NormCertificate};
use crate::error::{invalid, Error, Result};
use crate::fft;
use crate::grid::GridFunction;
use crate::lattice::{admissible, enumerate_sphere, SpherePointSet};
use crate::numeric::isqrt;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConvolveMode {
    /// Shift-and-add over the sphere points.
    Direct,
    /// Circular convolution on a torus of the given side.
    Fft { torus: usize },
}

/// An axis-parallel box `origin + [0, dims)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Region {
    pub origin: Vec<i64>,
    pub dims: Vec<usize>,
}

impl Region {
    pub fn cube(origin: Vec<i64>, side: usize) -> Self {
        let d = origin.len();
        Self { origin, dims: vec![side; d] }
    }

    pub fn volume(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn contains(&self, x: &[i64]) -> bool {
        x.iter().zip(&self.origin).zip(&self.dims).all(|((&c, &o), &s)| c >= o && c < o + s as i64)
    }

    /// Calls `f` with every point of the box in row-major order.
    pub fn for_each(&self, mut f: impl FnMut(&[i64])) {
        let d = self.dims.len();
        if self.dims.iter().any(|&s| s == 0) {
            return;
        }
        let mut x = self.origin.clone();
        loop {
            f(&x);
            let mut i = d;
            loop {
                if i == 0 {
                    return;
                }
                i -= 1;
                x[i] += 1;
                if x[i] < self.origin[i] + self.dims[i] as i64 {
                    break;
                }
                x[i] = self.origin[i];
            }
        }
    }
}

fn normalization(sphere: &SpherePointSet) -> f64 {
    sphere.radius().powi(-(sphere.d() as i32 - 2))
}

fn check_radius(d: usize, lambda2: u64, allow_inadmissible: bool) -> Result<()> {
    if d >= 4 && !allow_inadmissible && !admissible(d, lambda2)? {
        return Err(Error::Inadmissible { d, lambda2 });
    }
    if lambda2 == 0 {
        return Err(invalid("lambda^2 must be positive"));
    }
    Ok(())
}

/// `A_λ f`. Direct mode on a box returns the box grown by `⌊λ⌋` per side; on a
/// torus it wraps. FFT mode embeds a box into a torus of side `torus` that must
/// hold the support plus `2⌊λ⌋ + 1`, or convolves a periodic input in place.
pub fn convolve_sphere(f: &GridFunction, lambda2: u64, mode: ConvolveMode, allow_inadmissible: bool) -> Result<GridFunction> {
    check_radius(f.d(), lambda2, allow_inadmissible)?;
    let sphere = enumerate_sphere(f.d(), lambda2)?;
    match mode {
        ConvolveMode::Direct => Ok(convolve_direct(f, &sphere)),
        ConvolveMode::Fft { torus } => FftConvolver::new(sphere, torus)?.convolve(f),
    }
}

/// Row shift-and-add convolution with an enumerated sphere.
pub fn convolve_direct(f: &GridFunction, sphere: &SpherePointSet) -> GridFunction {
    if f.is_periodic() {
        return convolve_direct_periodic(f, sphere);
    }
    let d = f.d();
    let m = sphere.max_coord();
    let origin: Vec<i64> = f.origin().iter().map(|o| o - m).collect();
    let dims: Vec<usize> = f.dims().iter().map(|&s| s + 2 * m as usize).collect();
    let mut out = GridFunction::zeros(origin, dims.clone(), false);
    let row_len = f.dims()[d - 1];
    let mut ostride = vec![1usize; d];
    for i in (0..d - 1).rev() {
        ostride[i] = ostride[i + 1] * dims[i + 1];
    }
    // output offset of each nonzero input row before the shift by n
    let rows = f.len() / row_len;
    let mut bases = Vec::new();
    for r in 0..rows {
        let src = &f.values()[r * row_len..(r + 1) * row_len];
        if src.iter().all(|&v| v == 0.0) {
            continue;
        }
        let mut rem = r;
        let mut base = 0;
        for i in (0..d - 1).rev() {
            let c = rem % f.dims()[i];
            rem /= f.dims()[i];
            base += c * ostride[i];
        }
        bases.push((r * row_len, base));
    }
    let vals = f.values();
    let ov = out.values_mut();
    for n in sphere.points() {
        let delta: usize = (0..d).map(|i| (n[i] as i64 + m) as usize * ostride[i]).sum();
        for &(src, base) in &bases {
            let dst = &mut ov[base + delta..base + delta + row_len];
            for (o, &v) in dst.iter_mut().zip(&vals[src..src + row_len]) {
                *o += v;
            }
        }
    }
    let s = normalization(sphere);
    for v in out.values_mut() {
        *v *= s;
    }
    out
}

fn convolve_direct_periodic(f: &GridFunction, sphere: &SpherePointSet) -> GridFunction {
    let d = f.d();
    let mut out = GridFunction::zeros(f.origin().to_vec(), f.dims().to_vec(), true);
    let mut x = vec![0i64; d];
    let mut y = vec![0i64; d];
    let s = normalization(sphere);
    for idx in 0..f.len() {
        let v = f.values()[idx];
        if v == 0.0 {
            continue;
        }
        f.coords_of(idx, &mut x);
        for n in sphere.points() {
            for i in 0..d {
                y[i] = x[i] + n[i] as i64;
            }
            let j = out.index_of(&y).expect("periodic lookup");
            out.values_mut()[j] += v * s;
        }
    }
    out
}

/// FFT convolution against a fixed sphere on a fixed torus, with the kernel
/// transform computed once.
pub struct FftConvolver {
    sphere: SpherePointSet,
    side: usize,
    dims: Vec<usize>,
    kernel_hat: Vec<Complex64>,
}

impl FftConvolver {
    pub fn new(sphere: SpherePointSet, side: usize) -> Result<Self> {
        let d = sphere.d();
        let m = sphere.max_coord() as usize;
        if side < 2 * m + 1 {
            return Err(Error::Wraparound { side, required: 2 * m + 1 });
        }
        let total = side
            .checked_pow(d as u32)
            .filter(|&t| t <= 1 << 28)
            .ok_or_else(|| Error::ResourceCap(format!("torus {side}^{d} exceeds the working-set cap")))?;
        let dims = vec![side; d];
        let mut kernel_hat = vec![Complex64::default(); total];
        let s = normalization(&sphere);
        for n in sphere.points() {
            let idx = n.iter().fold(0usize, |acc, &c| acc * side + (c as i64).rem_euclid(side as i64) as usize);
            kernel_hat[idx] += s;
        }
        fft::forward(&mut kernel_hat, &dims);
        Ok(Self { sphere, side, dims, kernel_hat })
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn sphere(&self) -> &SpherePointSet {
        &self.sphere
    }

    /// Required torus side for a box input of the given dimensions.
    pub fn required_side(dims: &[usize], lambda2: u64) -> usize {
        dims.iter().max().copied().unwrap_or(0) + 2 * isqrt(lambda2) as usize + 1
    }

    fn layout(&self, f: &GridFunction) -> Result<Vec<i64>> {
        if f.d() != self.sphere.d() {
            return Err(invalid("fft convolution: dimension mismatch"));
        }
        if f.is_periodic() {
            if f.dims().iter().any(|&s| s != self.side) {
                return Err(invalid("fft convolution: periodic input must live on the convolver torus"));
            }
            return Ok(f.origin().to_vec());
        }
        let required = Self::required_side(f.dims(), self.sphere.lambda2());
        if self.side < required {
            return Err(Error::Wraparound { side: self.side, required });
        }
        let m = self.sphere.max_coord();
        Ok(f.origin().iter().map(|o| o - m).collect())
    }

    fn embed(&self, f: &GridFunction, origin: &[i64], out: &mut [f64]) {
        let mut x = vec![0i64; f.d()];
        for (idx, &v) in f.values().iter().enumerate() {
            if v == 0.0 {
                continue;
            }
            f.coords_of(idx, &mut x);
            let t = x
                .iter()
                .zip(origin)
                .fold(0usize, |acc, (&c, &o)| acc * self.side + (c - o).rem_euclid(self.side as i64) as usize);
            out[t] += v;
        }
    }

    fn total(&self) -> usize {
        self.kernel_hat.len()
    }

    pub fn convolve(&self, f: &GridFunction) -> Result<GridFunction> {
        let origin = self.layout(f)?;
        let mut buf = vec![0.0; self.total()];
        self.embed(f, &origin, &mut buf);
        let mut z: Vec<Complex64> = buf.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        fft::forward(&mut z, &self.dims);
        for (a, k) in z.iter_mut().zip(&self.kernel_hat) {
            *a *= k;
        }
        fft::inverse(&mut z, &self.dims);
        GridFunction::from_values(origin, self.dims.clone(), z.iter().map(|v| v.re).collect(), true)
    }

    /// Convolves two real inputs with one forward and one inverse transform by
    /// packing them as real and imaginary parts.
    pub fn convolve_pair(&self, f: &GridFunction, g: &GridFunction) -> Result<(GridFunction, GridFunction)> {
        let of = self.layout(f)?;
        let og = self.layout(g)?;
        let mut re = vec![0.0; self.total()];
        let mut im = vec![0.0; self.total()];
        self.embed(f, &of, &mut re);
        self.embed(g, &og, &mut im);
        let mut z: Vec<Complex64> = re.iter().zip(&im).map(|(&a, &b)| Complex64::new(a, b)).collect();
        fft::forward(&mut z, &self.dims);
        // the kernel is real, so the product still packs the two results
        for (a, k) in z.iter_mut().zip(&self.kernel_hat) {
            *a *= k;
        }
        fft::inverse(&mut z, &self.dims);
        let a = GridFunction::from_values(of, self.dims.clone(), z.iter().map(|v| v.re).collect(), true)?;
        let b = GridFunction::from_values(og, self.dims.clone(), z.iter().map(|v| v.im).collect(), true)?;
        Ok((a, b))
    }
}

/// `(|Q|^{-1} Σ_{n ∈ Q} |f(n)|^p)^{1/p}`, or `max_Q |f|` for `p = ∞`.
/// Points of `Q` outside the box of `f` count as zeros.
pub fn local_norm(f: &GridFunction, q: &Region, p: f64) -> Result<f64> {
    if q.volume() == 0 {
        return Err(invalid("local_norm: empty box"));
    }
    if !(p > 0.0) {
        return Err(invalid("local_norm: p must be positive"));
    }
    let mut acc = 0.0;
    let mut sup: f64 = 0.0;
    q.for_each(|x| {
        let v = f.get(x).unwrap_or(0.0).abs();
        if p.is_infinite() {
            sup = sup.max(v);
        } else {
            acc += v.powf(p);
        }
    });
    if p.is_infinite() {
        Ok(sup)
    } else {
        Ok((acc / q.volume() as f64).powf(1.0 / p))
    }
}

/// `⟨A_λ f, g⟩ = Σ_x A_λ f(x) g(x)`.
pub fn bilinear_form(f: &GridFunction, g: &GridFunction, lambda2: u64) -> Result<f64> {
    if f.d() != g.d() {
        return Err(invalid("bilinear_form: dimension mismatch"));
    }
    let sphere = enumerate_sphere(f.d(), lambda2)?;
    Ok(convolve_direct(f, &sphere).inner(g))
}

/// A finite subset of `Z^d` inside a box whose last side is at most 64,
/// stored as one bit mask per row.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndicatorSet {
    origin: Vec<i64>,
    dims: Vec<usize>,
    rows: Vec<u64>,
}

impl IndicatorSet {
    pub fn empty(origin: Vec<i64>, dims: Vec<usize>) -> Result<Self> {
        if origin.len() != dims.len() || dims.len() < 2 {
            return Err(invalid("indicator set: need d >= 2 and matching origin/dims"));
        }
        if dims[dims.len() - 1] > 64 {
            return Err(Error::ResourceCap(format!("indicator set: row length {} exceeds 64", dims[dims.len() - 1])));
        }
        let nrows = dims[..dims.len() - 1].iter().product();
        Ok(Self { origin, dims, rows: vec![0; nrows] })
    }

    pub fn from_fn(origin: Vec<i64>, dims: Vec<usize>, f: impl Fn(&[i64]) -> bool) -> Result<Self> {
        let mut s = Self::empty(origin.clone(), dims.clone())?;
        Region { origin, dims }.for_each(|x| {
            if f(x) {
                s.insert(x);
            }
        });
        Ok(s)
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

    fn locate(&self, x: &[i64]) -> Option<(usize, u32)> {
        let d = self.d();
        let mut row = 0usize;
        for i in 0..d - 1 {
            let off = x[i] - self.origin[i];
            if off < 0 || off >= self.dims[i] as i64 {
                return None;
            }
            row = row * self.dims[i] + off as usize;
        }
        let off = x[d - 1] - self.origin[d - 1];
        (off >= 0 && off < self.dims[d - 1] as i64).then_some((row, off as u32))
    }

    /// Inserts `x`; points outside the box are ignored.
    pub fn insert(&mut self, x: &[i64]) -> bool {
        match self.locate(x) {
            Some((r, b)) => {
                self.rows[r] |= 1 << b;
                true
            }
            None => false,
        }
    }

    pub fn contains(&self, x: &[i64]) -> bool {
        self.locate(x).is_some_and(|(r, b)| self.rows[r] >> b & 1 == 1)
    }

    pub fn len(&self) -> u64 {
        self.rows.iter().map(|r| r.count_ones() as u64).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.iter().all(|&r| r == 0)
    }

    pub fn region(&self) -> Region {
        Region { origin: self.origin.clone(), dims: self.dims.clone() }
    }

    pub fn points(&self) -> Vec<Vec<i64>> {
        let d = self.d();
        let mut out = Vec::new();
        for (r, &bits) in self.rows.iter().enumerate() {
            if bits == 0 {
                continue;
            }
            let mut x = vec![0i64; d];
            let mut rem = r;
            for i in (0..d - 1).rev() {
                x[i] = self.origin[i] + (rem % self.dims[i]) as i64;
                rem /= self.dims[i];
            }
            let mut b = bits;
            while b != 0 {
                x[d - 1] = self.origin[d - 1] + b.trailing_zeros() as i64;
                out.push(x.clone());
                b &= b - 1;
            }
        }
        out
    }

    pub fn to_grid(&self) -> GridFunction {
        GridFunction::from_fn(self.origin.clone(), self.dims.clone(), |x| if self.contains(x) { 1.0 } else { 0.0 })
    }

    /// Invariant under coordinate sign flips and permutations about the origin.
    pub fn is_hyperoctahedral(&self) -> bool {
        let d = self.d();
        let r = self.dims[0];
        if self.dims.iter().any(|&s| s != r) || self.origin.iter().any(|&o| 2 * o + r as i64 - 1 != 0) {
            return false;
        }
        let pts = self.points();
        let gens: [&dyn Fn(&mut Vec<i64>); 3] = [
            &|x: &mut Vec<i64>| x[0] = -x[0],
            &|x: &mut Vec<i64>| x.swap(0, 1),
            &|x: &mut Vec<i64>| x.rotate_left(1),
        ];
        gens.iter().all(|g| {
            pts.iter().all(|p| {
                let mut y = p.clone();
                g(&mut y);
                self.contains(&y)
            })
        }) || d < 2
    }
}

/// `#{(x, n) : x ∈ G, n ∈ S, x - n ∈ F}` for one shift `n`.
fn shift_count(f: &IndicatorSet, g: &IndicatorSet, n: &[i64]) -> u64 {
    let d = g.d();
    // overlap of G's row coordinates with F's row coordinates shifted by n
    let mut lo = vec![0i64; d - 1];
    let mut hi = vec![0i64; d - 1];
    for i in 0..d - 1 {
        lo[i] = g.origin[i].max(f.origin[i] + n[i]);
        hi[i] = (g.origin[i] + g.dims[i] as i64).min(f.origin[i] + n[i] + f.dims[i] as i64);
        if lo[i] >= hi[i] {
            return 0;
        }
    }
    let s = f.origin[d - 1] + n[d - 1] - g.origin[d - 1];
    if s >= 64 || s <= -64 {
        return 0;
    }
    let inner = (hi[d - 2] - lo[d - 2]) as usize;
    let mut y = lo.clone();
    let mut total = 0u64;
    loop {
        let mut gi = 0usize;
        let mut fi = 0usize;
        for i in 0..d - 1 {
            gi = gi * g.dims[i] + (y[i] - g.origin[i]) as usize;
            fi = fi * f.dims[i] + (y[i] - n[i] - f.origin[i]) as usize;
        }
        let grow = &g.rows[gi..gi + inner];
        let frow = &f.rows[fi..fi + inner];
        if s >= 0 {
            for (a, b) in grow.iter().zip(frow) {
                total += (a & (b << s)).count_ones() as u64;
            }
        } else {
            for (a, b) in grow.iter().zip(frow) {
                total += (a & (b >> -s)).count_ones() as u64;
            }
        }
        // advance over all but the innermost row coordinate
        let mut i = d - 2;
        loop {
            if i == 0 {
                return total;
            }
            i -= 1;
            y[i] += 1;
            if y[i] < hi[i] {
                break;
            }
            y[i] = lo[i];
        }
    }
}

fn orbit_size(n: &[i16]) -> u64 {
    let d = n.len();
    let nonzero = n.iter().filter(|&&x| x != 0).count() as u32;
    let mut fact = [1u64; 21];
    for i in 1..21 {
        fact[i] = fact[i - 1] * i as u64;
    }
    let mut perms = fact[d];
    let mut i = 0;
    while i < d {
        let mut j = i;
        while j < d && n[j] == n[i] {
            j += 1;
        }
        perms /= fact[j - i];
        i = j;
    }
    perms << nonzero
}

/// `Σ_{n ∈ S} |G ∩ (F + n)|`, i.e. `λ^{d-2} ⟨A_λ 1_F, 1_G⟩`. When both sets
/// are symmetric under the hyperoctahedral group only one shift per orbit of
/// the sphere is evaluated.
pub fn bilinear_count(f: &IndicatorSet, g: &IndicatorSet, sphere: &SpherePointSet) -> Result<u64> {
    if f.d() != g.d() || f.d() != sphere.d() {
        return Err(invalid("bilinear_count: dimension mismatch"));
    }
    let mut n64 = vec![0i64; sphere.d()];
    if f.is_hyperoctahedral() && g.is_hyperoctahedral() && sphere.d() <= 20 {
        let mut total = 0u64;
        for n in sphere.points() {
            if n[0] < 0 || n.windows(2).any(|w| w[0] > w[1]) {
                continue;
            }
            for (a, &b) in n64.iter_mut().zip(n) {
                *a = b as i64;
            }
            total += orbit_size(n) * shift_count(f, g, &n64);
        }
        return Ok(total);
    }
    Ok(sphere
        .points()
        .map(|n| {
            for (a, &b) in n64.iter_mut().zip(n) {
                *a = b as i64;
            }
            shift_count(f, g, &n64)
        })
        .sum())
}

/// Whether `(d+1)/(d-1) < p <= 2`.
pub fn in_improving_range(d: usize, p: f64) -> bool {
    let d = d as f64;
    p > (d + 1.0) / (d - 1.0) && p <= 2.0
}

/// `⟨A_λ 1_F, 1_G⟩ / (λ^{d(1-2/p)} |F|^{1/p} |G|^{1/p})`.
pub fn improving_ratio(f: &IndicatorSet, g: &IndicatorSet, lambda2: u64, p: f64) -> Result<NormCertificate> {
    let sphere = enumerate_sphere(f.d(), lambda2)?;
    improving_ratio_with(f, g, &sphere, p)
}

pub fn improving_ratio_with(f: &IndicatorSet, g: &IndicatorSet, sphere: &SpherePointSet, p: f64) -> Result<NormCertificate> {
    if !(p >= 1.0) {
        return Err(invalid("improving_ratio: p must be at least 1"));
    }
    let d = f.d();
    let lambda = sphere.radius();
    let count = bilinear_count(f, g, sphere)?;
    let left = count as f64 * normalization(sphere);
    let (nf, ng) = (f.len() as f64, g.len() as f64);
    let right = lambda.powf(d as f64 * (1.0 - 2.0 / p)) * nf.powf(1.0 / p) * ng.powf(1.0 / p);
    let params = CertParams { p: Some(p), ..CertParams::new(d, sphere.lambda2()) };
    let mut cert = NormCertificate::new("improving_ratio", left, right, params)
        .with_witness(json!({ "count": count, "size_f": f.len(), "size_g": g.len() }));
    if !in_improving_range(d, p) {
        cert = cert.with_note(format!("p = {p} is outside ((d+1)/(d-1), 2]"));
    }
    Ok(cert)
}

/// Whether `(x, y)` lies in the open triangle with vertices `(0,1)`, `(1,0)`
/// and `(r, r)`, `r = (d-1)/(d+1)`.
pub fn in_corollary_triangle(d: usize, x: f64, y: f64) -> bool {
    let r = (d as f64 - 1.0) / (d as f64 + 1.0);
    let pts = [(0.0, 1.0), (1.0, 0.0), (r, r)];
    let cross = |a: (f64, f64), b: (f64, f64)| (b.0 - a.0) * (y - a.1) - (b.1 - a.1) * (x - a.0);
    let s: Vec<f64> = (0..3).map(|i| cross(pts[i], pts[(i + 1) % 3])).collect();
    s.iter().all(|&v| v > 0.0) || s.iter().all(|&v| v < 0.0)
}

/// `⟨A_λ f, g⟩ / (⟨f⟩_{Q,p1} ⟨g⟩_{Q,p2} |Q|)`.
pub fn corollary_ratio(
    f: &GridFunction,
    g: &GridFunction,
    q: &Region,
    lambda2: u64,
    p1: f64,
    p2: f64,
) -> Result<NormCertificate> {
    let d = f.d();
    let left = bilinear_form(f, g, lambda2)?;
    let right = local_norm(f, q, p1)? * local_norm(g, q, p2)? * q.volume() as f64;
    let params = CertParams { p1: Some(p1), p2: Some(p2), ..CertParams::new(d, lambda2) };
    let mut cert = NormCertificate::new("corollary_ratio", left, right, params);
    if right == 0.0 {
        cert.ratio = 0.0;
    }
    if !in_corollary_triangle(d, 1.0 / p1, 1.0 / p2) {
        cert = cert.with_note("(1/p1, 1/p2) lies outside the open triangle");
    }
    Ok(cert)
}

/// A named pair of test sets.
#[derive(Clone, Debug)]
pub struct FamilyPair {
    pub name: String,
    pub f: IndicatorSet,
    pub g: IndicatorSet,
}

/// The fixed test family at radius `λ`: points, balls, the sphere and a thin
/// shell in the centered box `[-⌊λ⌋, ⌊λ⌋]^d`, plus seeded random sets and the
/// full cube in `[0, ⌊λ⌋]^d`.
pub fn adversarial_family(d: usize, lambda2: u64, seed: u64) -> Result<Vec<FamilyPair>> {
    let m = isqrt(lambda2) as i64;
    let lambda = (lambda2 as f64).sqrt();
    let side = (2 * m + 1) as usize;
    let centered = |pred: &dyn Fn(i64) -> bool| {
        IndicatorSet::from_fn(vec![-m; d], vec![side; d], |x| pred(x.iter().map(|c| c * c).sum()))
    };
    let ball = |r: f64| {
        let r2 = (r * r).floor() as i64;
        centered(&move |n2| n2 <= r2)
    };
    let point = centered(&|n2| n2 == 0)?;
    let sphere = centered(&|n2| n2 as u64 == lambda2)?;
    let inner = ((lambda - 1.0).max(0.0).powi(2)).ceil() as i64;
    let shell = centered(&move |n2| n2 >= inner && n2 as u64 <= lambda2)?;
    let b1 = ball(1.0)?;
    let bq = ball(lambda / 4.0)?;
    let bh = ball(lambda / 2.0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ lambda2.wrapping_mul(0xD134_2543_DE82_EF95) ^ d as u64);
    let cube_side = (m + 1) as usize;
    let mut random = |density: f64| {
        let mut s = IndicatorSet::empty(vec![0; d], vec![cube_side; d])?;
        Region::cube(vec![0; d], cube_side).for_each(|x| {
            if rng.gen_bool(density) {
                s.insert(x);
            }
        });
        Ok::<_, Error>(s)
    };
    let r1a = random(0.1)?;
    let r1b = random(0.1)?;
    let r3a = random(0.3)?;
    let r3b = random(0.3)?;
    let cube = IndicatorSet::from_fn(vec![0; d], vec![cube_side; d], |_| true)?;
    let pair = |name: &str, f: &IndicatorSet, g: &IndicatorSet| FamilyPair { name: name.into(), f: f.clone(), g: g.clone() };
    Ok(vec![
        pair("point/point", &point, &point),
        pair("point/sphere", &point, &sphere),
        pair("sphere/point", &sphere, &point),
        pair("sphere/sphere", &sphere, &sphere),
        pair("ball1/ball1", &b1, &b1),
        pair("ball_quarter/ball_quarter", &bq, &bq),
        pair("ball_half/ball_half", &bh, &bh),
        pair("ball_half/sphere", &bh, &sphere),
        pair("shell/shell", &shell, &shell),
        pair("point/shell", &point, &shell),
        pair("random0.1/random0.1", &r1a, &r1b),
        pair("random0.3/random0.3", &r3a, &r3b),
        pair("random0.3/ball_half", &r3a, &bh),
        pair("cube/cube", &cube, &cube),
    ])
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ImprovingRow {
    pub lambda2: u64,
    pub pair: String,
    pub certificate: NormCertificate,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ImprovingSweep {
    pub rows: Vec<ImprovingRow>,
    /// `(λ, max ratio over the family)` per radius.
    pub maxima: Vec<(f64, f64)>,
    pub growth: crate::stats::GrowthCheck,
}

/// [`improving_ratio`] over the family for every listed radius; the growth
/// check compares the per-radius family maximum across halves of the λ-range.
pub fn improving_sweep(d: usize, lambda2s: &[u64], p: f64, seed: u64) -> Result<ImprovingSweep> {
    use rayon::prelude::*;
    let per_radius: Vec<Vec<ImprovingRow>> = lambda2s
        .par_iter()
        .map(|&l2| {
            let sphere = enumerate_sphere(d, l2)?;
            adversarial_family(d, l2, seed)?
                .into_iter()
                .map(|fp| {
                    let mut certificate = improving_ratio_with(&fp.f, &fp.g, &sphere, p)?;
                    certificate.params.seed = Some(seed);
                    Ok(ImprovingRow { lambda2: l2, pair: fp.name, certificate })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let maxima: Vec<(f64, f64)> = per_radius
        .iter()
        .zip(lambda2s)
        .map(|(rows, &l2)| ((l2 as f64).sqrt(), rows.iter().map(|r| r.certificate.ratio).fold(0.0, f64::max)))
        .collect();
    let growth = crate::stats::no_growth(&maxima, 2.0);
    Ok(ImprovingSweep { rows: per_radius.into_iter().flatten().collect(), maxima, growth })
}

/// `⟨sup_λ A_λ f, g⟩ / (⟨f⟩_{E,p} ⟨g⟩_{E,p} |E|)` with `p = d/(d-2)` and the
/// supremum over admissible `λ` with `λ0/2 < λ < λ0`.
pub fn dyadic_maximal_form(f: &GridFunction, g: &GridFunction, e_box: &Region, lambda0: u64) -> Result<NormCertificate> {
    let d = f.d();
    if d < 3 {
        return Err(invalid("dyadic_maximal_form: need d >= 3"));
    }
    let lo = lambda0 * lambda0 / 4 + 1;
    let hi = lambda0 * lambda0;
    let window: Vec<u64> = (lo..hi).filter(|&l2| d < 4 || admissible(d, l2).unwrap_or(false)).collect();
    if window.is_empty() {
        return Err(invalid(format!("dyadic_maximal_form: no admissible radius in ({}, {lambda0})", lambda0 as f64 / 2.0)));
    }
    let mut sup = GridFunction::zeros(g.origin().to_vec(), g.dims().to_vec(), false);
    for &l2 in &window {
        let sphere = enumerate_sphere(d, l2)?;
        let af = convolve_direct(f, &sphere);
        let mut x = vec![0i64; d];
        for idx in 0..sup.len() {
            if g.values()[idx] == 0.0 {
                continue;
            }
            sup.coords_of(idx, &mut x);
            let v = af.get(&x).unwrap_or(0.0);
            let s = &mut sup.values_mut()[idx];
            *s = s.max(v);
        }
    }
    let p = d as f64 / (d as f64 - 2.0);
    let left = sup.inner(g);
    let right = local_norm(f, e_box, p)? * local_norm(g, e_box, p)? * e_box.volume() as f64;
    let params = CertParams { p: Some(p), ..CertParams::default() };
    Ok(NormCertificate::new("dyadic_maximal_form", left, right, CertParams { d: Some(d), ..params })
        .with_witness(json!({ "lambda0": lambda0, "window": window })))
}

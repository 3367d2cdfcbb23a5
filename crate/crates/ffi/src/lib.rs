//! C ABI over `sphavg`.
//!
//! Every function returns an [`SphStatus`]; outputs go through pointer
//! arguments. On failure [`sph_last_error`] describes the most recent error
//! on the calling thread. Strings returned through `char **` are owned by the
//! caller and must be released with [`sph_string_free`].

use sphavg::commands::{self, RunConfig};
use sphavg::lattice::{admissible, enumerate_sphere, sphere_count};
use sphavg::multiplier::{residual_sup_estimate, DecompositionParams, SphereMultiplier};
use sphavg::{Error, SpherePointSet};
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};


#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SphStatus {
    Ok = 0,
    ErrNull = 1,
    ErrInvalid = 2,
    ErrPrecision = 3,
    ErrResource = 4,
    ErrPanic = 5,
}

/// Lattice points on one sphere.
pub struct SphSphere {
    inner: SpherePointSet,
}

/// The multiplier `a_λ` and its main term at one radius.
pub struct SphMultiplier {
    inner: SphereMultiplier,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let s = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(s).unwrap_or_default());
}

fn status_of(err: &Error) -> SphStatus {
    match err {
        Error::Precision(_) => SphStatus::ErrPrecision,
        Error::ResourceCap(_) => SphStatus::ErrResource,
        _ => SphStatus::ErrInvalid,
    }
}

struct Null;

enum Failure {
    Null,
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<Null> for Failure {
    fn from(_: Null) -> Self {
        Failure::Null
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> SphStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SphStatus::Ok,
        Ok(Err(Failure::Null)) => {
            set_error("null pointer argument");
            SphStatus::ErrNull
        }
        Ok(Err(Failure::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            SphStatus::ErrPanic
        }
    }
}

fn out<'a, T>(p: *mut T) -> Result<&'a mut T, Null> {
    // SAFETY: the caller passes either null or a valid, writable pointer.
    unsafe { p.as_mut() }.ok_or(Null)
}

fn slice<'a, T>(p: *const T, len: usize) -> Result<&'a [T], Null> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Null);
    }
    // SAFETY: non-null and the caller guarantees `len` readable elements.
    Ok(unsafe { std::slice::from_raw_parts(p, len) })
}

fn write_string(dst: *mut *mut c_char, s: String) -> Result<(), Failure> {
    let slot = out(dst)?;
    let c = CString::new(s).map_err(|_| Error::Format("interior NUL in output".into()))?;
    *slot = c.into_raw();
    Ok(())
}

/// Message for the last failed call on this thread; empty if none. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn sph_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sph_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library. Null is ignored.
#[no_mangle]
pub extern "C" fn sph_string_free(s: *mut c_char) {
    if !s.is_null() {
        // SAFETY: `s` came from `CString::into_raw` in this library.
        drop(unsafe { CString::from_raw(s) });
    }
}

#[no_mangle]
pub extern "C" fn sph_admissible(d: u32, lambda2: u64, result: *mut bool) -> SphStatus {
    guard(|| {
        *out(result)? = admissible(d as usize, lambda2)?;
        Ok(())
    })
}

/// `|S^d_λ|`; fails with `ERR_RESOURCE` if the count does not fit in 64 bits.
#[no_mangle]
pub extern "C" fn sph_sphere_count(d: u32, lambda2: u64, result: *mut u64) -> SphStatus {
    guard(|| {
        let n = sphere_count(d as usize, lambda2)?;
        *out(result)? = u64::try_from(n).map_err(|_| Error::ResourceCap(format!("count {n} exceeds 64 bits")))?;
        Ok(())
    })
}

/// `K(λ, q, ℓ)` with `d = l_len`.
#[no_mangle]
pub extern "C" fn sph_kloosterman(lambda2: u64, q: u64, l: *const i64, l_len: usize, result: *mut f64) -> SphStatus {
    guard(|| {
        let l = slice(l, l_len)?;
        *out(result)? = sphavg::expsums::kloosterman(lambda2, q, l)?;
        Ok(())
    })
}

/// `ρ(q, λ)`.
#[no_mangle]
pub extern "C" fn sph_rho(q: u64, lambda2: u64, result: *mut f64) -> SphStatus {
    guard(|| {
        if q == 0 || lambda2 == 0 {
            return Err(Error::InvalidInput("q and lambda^2 must be positive".into()).into());
        }
        *out(result)? = sphavg::arith::rho_value(q, lambda2);
        Ok(())
    })
}

/// `σ_b(n)`.
#[no_mangle]
pub extern "C" fn sph_sigma(b: f64, n: u64, result: *mut f64) -> SphStatus {
    guard(|| {
        *out(result)? = sphavg::arith::sigma(b, n)?;
        Ok(())
    })
}

/// Transform of normalized measure on the sphere of radius `lambda` in
/// `R^{xi_len}` at `xi`.
#[no_mangle]
pub extern "C" fn sph_sphere_ft(lambda: f64, xi: *const f64, xi_len: usize, result: *mut f64) -> SphStatus {
    guard(|| {
        let xi = slice(xi, xi_len)?;
        if xi.len() < 2 {
            return Err(Error::InvalidInput("need dimension >= 2".into()).into());
        }
        *out(result)? = sphavg::continuum::sphere_ft(xi.len(), lambda, xi);
        Ok(())
    })
}

#[no_mangle]
pub extern "C" fn sph_sphere_new(d: u32, lambda2: u64, handle: *mut *mut SphSphere) -> SphStatus {
    guard(|| {
        let slot = out(handle)?;
        let inner = enumerate_sphere(d as usize, lambda2)?;
        *slot = Box::into_raw(Box::new(SphSphere { inner }));
        Ok(())
    })
}

#[no_mangle]
pub extern "C" fn sph_sphere_free(handle: *mut SphSphere) {
    if !handle.is_null() {
        // SAFETY: `handle` came from `sph_sphere_new` and is freed once.
        drop(unsafe { Box::from_raw(handle) });
    }
}

#[no_mangle]
pub extern "C" fn sph_sphere_len(handle: *const SphSphere, result: *mut usize) -> SphStatus {
    guard(|| {
        // SAFETY: null or a live handle from `sph_sphere_new`.
        let h = unsafe { handle.as_ref() }.ok_or(Null)?;
        *out(result)? = h.inner.len();
        Ok(())
    })
}

/// Writes point `index` (lexicographic order) into `coords[0..d]`.
#[no_mangle]
pub extern "C" fn sph_sphere_point(handle: *const SphSphere, index: usize, coords: *mut i64, coords_len: usize) -> SphStatus {
    guard(|| {
        // SAFETY: null or a live handle from `sph_sphere_new`.
        let h = unsafe { handle.as_ref() }.ok_or(Null)?;
        let d = h.inner.d();
        if index >= h.inner.len() || coords_len < d {
            return Err(Error::InvalidInput(format!("index {index} or buffer length {coords_len} out of range")).into());
        }
        if coords.is_null() {
            return Err(Null.into());
        }
        // SAFETY: non-null with at least `d` writable elements.
        let dst = unsafe { std::slice::from_raw_parts_mut(coords, d) };
        for (o, &c) in dst.iter_mut().zip(h.inner.point(index)) {
            *o = c as i64;
        }
        Ok(())
    })
}

#[no_mangle]
pub extern "C" fn sph_multiplier_new(d: u32, lambda2: u64, handle: *mut *mut SphMultiplier) -> SphStatus {
    guard(|| {
        let slot = out(handle)?;
        let inner = SphereMultiplier::new(d as usize, lambda2)?;
        *slot = Box::into_raw(Box::new(SphMultiplier { inner }));
        Ok(())
    })
}

#[no_mangle]
pub extern "C" fn sph_multiplier_free(handle: *mut SphMultiplier) {
    if !handle.is_null() {
        // SAFETY: `handle` came from `sph_multiplier_new` and is freed once.
        drop(unsafe { Box::from_raw(handle) });
    }
}

#[derive(Clone, Copy)]
enum Part {
    Full,
    Main,
    Residual,
}

fn eval(handle: *const SphMultiplier, xi: *const f64, xi_len: usize, result: *mut f64, part: Part) -> SphStatus {
    guard(|| {
        // SAFETY: null or a live handle from `sph_multiplier_new`.
        let h = unsafe { handle.as_ref() }.ok_or(Null)?;
        let xi = slice(xi, xi_len)?;
        if xi.len() != h.inner.d() {
            return Err(Error::InvalidInput(format!("xi has length {} but d = {}", xi.len(), h.inner.d())).into());
        }
        *out(result)? = match part {
            Part::Full => h.inner.a(xi)?,
            Part::Main => h.inner.c_main(xi)?,
            Part::Residual => h.inner.residual(xi)?,
        };
        Ok(())
    })
}

/// `a_λ(ξ)`.
#[no_mangle]
pub extern "C" fn sph_multiplier_a(handle: *const SphMultiplier, xi: *const f64, xi_len: usize, result: *mut f64) -> SphStatus {
    eval(handle, xi, xi_len, result, Part::Full)
}

/// `c_λ(ξ)`.
#[no_mangle]
pub extern "C" fn sph_multiplier_c(handle: *const SphMultiplier, xi: *const f64, xi_len: usize, result: *mut f64) -> SphStatus {
    eval(handle, xi, xi_len, result, Part::Main)
}

/// `r_λ(ξ) = a_λ(ξ) - c_λ(ξ)`.
#[no_mangle]
pub extern "C" fn sph_multiplier_residual(
    handle: *const SphMultiplier,
    xi: *const f64,
    xi_len: usize,
    result: *mut f64,
) -> SphStatus {
    eval(handle, xi, xi_len, result, Part::Residual)
}

/// Weil-bound certificate for modulus `q` as JSON.
#[no_mangle]
pub extern "C" fn sph_weil_ratio_json(lambda2: u64, q: u64, d: u32, eta: f64, json: *mut *mut c_char) -> SphStatus {
    guard(|| {
        let cert = sphavg::expsums::weil_ratio(lambda2, q, d as usize, eta)?;
        write_string(json, serde_json::to_string(&cert).map_err(Error::from)?)
    })
}

/// Residual sup-estimate certificate as JSON.
#[no_mangle]
pub extern "C" fn sph_residual_sup_json(
    d: u32,
    lambda2: u64,
    grid: usize,
    seed: u64,
    epsilon: f64,
    json: *mut *mut c_char,
) -> SphStatus {
    guard(|| {
        let p = DecompositionParams { grid, seed, epsilon, ..DecompositionParams::new(d as usize, lambda2) };
        let cert = residual_sup_estimate(&p)?;
        write_string(json, serde_json::to_string(&cert).map_err(Error::from)?)
    })
}

/// Runs any command from a serialized run configuration and returns the
/// `{config, results}` document the command-line tool would print.
#[no_mangle]
pub extern "C" fn sph_run_json(config: *const c_char, json: *mut *mut c_char) -> SphStatus {
    guard(|| {
        if config.is_null() {
            return Err(Null.into());
        }
        // SAFETY: non-null and NUL-terminated per the contract.
        let text = unsafe { CStr::from_ptr(config) }.to_str().map_err(|_| Error::Format("config is not UTF-8".into()))?;
        let cfg: RunConfig = serde_json::from_str(text).map_err(Error::from)?;
        let output = commands::run(&cfg)?;
        write_string(json, output.to_json()?)
    })
}

#[cfg(test)]
mod tests {
    use std::ptr;
    use super::*;

    fn last_error() -> String {
        // SAFETY: the library always returns a valid C string.
        unsafe { CStr::from_ptr(sph_last_error()) }.to_string_lossy().into_owned()
    }

    #[test]
    fn scalar_functions() {
        let mut n = 0u64;
        assert_eq!(sph_sphere_count(5, 1, &mut n), SphStatus::Ok);
        assert_eq!(n, 10);
        let mut ok = true;
        assert_eq!(sph_admissible(4, 8, &mut ok), SphStatus::Ok);
        assert!(!ok);
        let mut k = 1.0;
        assert_eq!(sph_kloosterman(3, 5, [0i64; 4].as_ptr(), 4, &mut k), SphStatus::Ok);
        assert!((k + 0.04).abs() < 1e-12);
        let mut r = 0.0;
        assert_eq!(sph_rho(9, 9, &mut r), SphStatus::Ok);
        assert_eq!(r, 3.0);
        let mut s = 0.0;
        assert_eq!(sph_sigma(1.0, 12, &mut s), SphStatus::Ok);
        assert_eq!(s, 28.0);
        let mut v = 0.0;
        assert_eq!(sph_sphere_ft(2.0, [0.0; 3].as_ptr(), 3, &mut v), SphStatus::Ok);
        assert_eq!(v, 1.0);
        let version = unsafe { CStr::from_ptr(sph_version()) }.to_str().unwrap();
        assert_eq!(version, env!("CARGO_PKG_VERSION"));
    }

    #[test]
    fn error_codes() {
        assert_eq!(sph_sphere_count(5, 1, ptr::null_mut()), SphStatus::ErrNull);
        assert_eq!(last_error(), "null pointer argument");
        let mut ok = false;
        assert_eq!(sph_admissible(3, 5, &mut ok), SphStatus::ErrInvalid);
        assert!(!last_error().is_empty());
        let mut k = 0.0;
        assert_eq!(sph_kloosterman(3, 5, ptr::null(), 4, &mut k), SphStatus::ErrNull);
        let mut h = ptr::null_mut();
        assert_eq!(sph_sphere_new(1, 8, &mut h), SphStatus::ErrInvalid);
        assert!(h.is_null());
        let mut json = ptr::null_mut();
        assert_eq!(sph_weil_ratio_json(4, 0, 5, 0.25, &mut json), SphStatus::ErrInvalid);
        let cfg = CString::new(r#"{"command":"counterexample","d":5,"lambda2":81,"lambda2_max":null,"p":1.8,"eta":0.25,"epsilon":0.25,"threshold_c":0.1,"grid":10,"seed":0,"format":"json"}"#).unwrap();
        assert_eq!(sph_run_json(cfg.as_ptr(), &mut json), SphStatus::ErrResource);
    }

    #[test]
    fn handles() {
        let mut h = ptr::null_mut();
        assert_eq!(sph_sphere_new(4, 9, &mut h), SphStatus::Ok);
        let mut len = 0usize;
        assert_eq!(sph_sphere_len(h, &mut len), SphStatus::Ok);
        assert_eq!(len, 104);
        let mut p = [0i64; 4];
        assert_eq!(sph_sphere_point(h, 0, p.as_mut_ptr(), 4), SphStatus::Ok);
        assert_eq!(p.iter().map(|c| c * c).sum::<i64>(), 9);
        assert_eq!(sph_sphere_point(h, len, p.as_mut_ptr(), 4), SphStatus::ErrInvalid);
        sph_sphere_free(h);
        sph_sphere_free(ptr::null_mut());

        let mut m = ptr::null_mut();
        assert_eq!(sph_multiplier_new(4, 9, &mut m), SphStatus::Ok);
        let xi = [0.5, 0.0, 0.0, 0.0];
        let (mut a, mut c, mut r) = (0.0, 0.0, 0.0);
        assert_eq!(sph_multiplier_a(m, xi.as_ptr(), 4, &mut a), SphStatus::Ok);
        assert!(a.is_finite());
        assert_eq!(sph_multiplier_c(m, xi.as_ptr(), 4, &mut c), SphStatus::Ok);
        assert_eq!(sph_multiplier_residual(m, xi.as_ptr(), 4, &mut r), SphStatus::Ok);
        assert!((a - c - r).abs() < 1e-12);
        assert_eq!(sph_multiplier_a(m, xi.as_ptr(), 3, &mut a), SphStatus::ErrInvalid);
        sph_multiplier_free(m);
    }

    #[test]
    fn json_outputs() {
        let mut json = ptr::null_mut();
        assert_eq!(sph_weil_ratio_json(25, 1, 5, 0.25, &mut json), SphStatus::Ok);
        let v: serde_json::Value = serde_json::from_str(unsafe { CStr::from_ptr(json) }.to_str().unwrap()).unwrap();
        assert_eq!(v["ratio"], 1.0);
        sph_string_free(json);

        assert_eq!(sph_residual_sup_json(5, 9, 50, 1, 0.25, &mut json), SphStatus::Ok);
        let v: serde_json::Value = serde_json::from_str(unsafe { CStr::from_ptr(json) }.to_str().unwrap()).unwrap();
        assert_eq!(v["kind"], "residual_sup");
        sph_string_free(json);

        let cfg = CString::new(r#"{"command":"sphere","d":5,"lambda2":1,"lambda2_max":3,"p":1.8,"eta":0.25,"epsilon":0.25,"threshold_c":0.1,"grid":10,"seed":0,"format":"json"}"#).unwrap();
        assert_eq!(sph_run_json(cfg.as_ptr(), &mut json), SphStatus::Ok);
        let v: serde_json::Value = serde_json::from_str(unsafe { CStr::from_ptr(json) }.to_str().unwrap()).unwrap();
        assert_eq!(v["results"]["rows"][0]["count"], 10);
        sph_string_free(json);
        sph_string_free(ptr::null_mut());
    }

    #[test]
    fn header_declares_the_abi() {
        let header = include_str!("../include/sphavg.h");
        for name in [
            "SphStatus",
            "SPH_STATUS_ERR_PANIC",
            "typedef struct SphSphere SphSphere",
            "typedef struct SphMultiplier SphMultiplier",
            "sph_last_error",
            "sph_sphere_new",
            "sph_multiplier_residual",
            "sph_run_json",
            "sph_string_free",
        ] {
            assert!(header.contains(name), "header lacks {name}");
        }
    }
}

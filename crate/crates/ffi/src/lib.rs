//! C ABI over the heavy-hitter sketches and the non-adaptive recovery
//! pipeline. Every object is an opaque handle created by a `*_new`
//! function and released by the matching `*_free`. Functions return an
//! [`HhStatus`]; results are written through out-pointers. Panics never
//! cross the boundary.

use std::ffi::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use hhsketch::count_min::{CmConstants, CountMinG3, DyadicG3};
use hhsketch::guv::{DetHHSketch, GuvParams};
use hhsketch::pipeline::{Pipeline, ScheduleConstants, ScheduleKind};
use hhsketch::weak::WeakConstants;
use hhsketch::Error;

/// Result code of every exported function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HhStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParameter = 2,
    IndexOutOfRange = 3,
    StrictViolation = 4,
    BufferTooSmall = 5,
    Internal = 6,
    Panic = 7,
}

impl From<Error> for HhStatus {
    fn from(e: Error) -> Self {
        match e {
            Error::IndexOutOfRange { .. } => HhStatus::IndexOutOfRange,
            Error::StrictViolation { .. } => HhStatus::StrictViolation,
            Error::RoundViolation(_) | Error::Io(_) => HhStatus::Internal,
            _ => HhStatus::InvalidParameter,
        }
    }
}

/// Count-Min list sketch for ε-heavy hitters.
pub struct HhCountMin {
    inner: CountMinG3,
}

/// Dyadic search over promise Count-Min levels.
pub struct HhDyadic {
    inner: DyadicG3,
}

/// Deterministic heavy-hitter sketch over an explicit expander.
pub struct HhDet {
    inner: DetHHSketch,
}

/// Non-adaptive sparse recovery pipeline.
pub struct HhPipeline {
    inner: Pipeline,
}

fn guard(f: impl FnOnce() -> Result<(), HhStatus>) -> HhStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => HhStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => HhStatus::Panic,
    }
}

unsafe fn handle<'a, T>(p: *const T) -> Result<&'a T, HhStatus> {
    p.as_ref().ok_or(HhStatus::NullPointer)
}

unsafe fn handle_mut<'a, T>(p: *mut T) -> Result<&'a mut T, HhStatus> {
    p.as_mut().ok_or(HhStatus::NullPointer)
}

unsafe fn store<T>(out: *mut *mut T, value: T) -> Result<(), HhStatus> {
    if out.is_null() {
        return Err(HhStatus::NullPointer);
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn release<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Copies `items` into `out[..cap]` and sets `*len` to the full count.
unsafe fn write_list(items: &[usize], out: *mut usize, cap: usize, len: *mut usize) -> Result<(), HhStatus> {
    if len.is_null() || (out.is_null() && cap > 0) {
        return Err(HhStatus::NullPointer);
    }
    *len = items.len();
    let m = items.len().min(cap);
    if m > 0 {
        ptr::copy_nonoverlapping(items.as_ptr(), out, m);
    }
    if items.len() > cap {
        return Err(HhStatus::BufferTooSmall);
    }
    Ok(())
}

/// Static description of a status code.
#[no_mangle]
pub extern "C" fn hh_status_message(status: HhStatus) -> *const c_char {
    let s: &'static [u8] = match status {
        HhStatus::Ok => b"ok\0",
        HhStatus::NullPointer => b"null pointer argument\0",
        HhStatus::InvalidParameter => b"invalid parameter\0",
        HhStatus::IndexOutOfRange => b"index out of range\0",
        HhStatus::StrictViolation => b"strict turnstile violation\0",
        HhStatus::BufferTooSmall => b"output buffer too small\0",
        HhStatus::Internal => b"internal error\0",
        HhStatus::Panic => b"panic inside the library\0",
    };
    s.as_ptr().cast()
}

/// Creates a Count-Min sketch over `[0, n)` for accuracy `eps` and
/// failure probability `delta`.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn hh_cm_new(n: usize, eps: f64, delta: f64, seed: u64, out: *mut *mut HhCountMin) -> HhStatus {
    guard(|| {
        let inner = CountMinG3::new(n, eps, delta, CmConstants::default(), seed)?;
        store(out, HhCountMin { inner })
    })
}

/// # Safety
/// `sketch` must be null or a handle from [`hh_cm_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hh_cm_free(sketch: *mut HhCountMin) {
    release(sketch)
}

/// Adds `delta` to coordinate `index`.
///
/// # Safety
/// `sketch` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn hh_cm_update(sketch: *mut HhCountMin, index: usize, delta: f64) -> HhStatus {
    guard(|| Ok(handle_mut(sketch)?.inner.update(index, delta)?))
}

/// Point estimate of coordinate `index`.
///
/// # Safety
/// `sketch` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn hh_cm_estimate(sketch: *const HhCountMin, index: usize, out: *mut f64) -> HhStatus {
    guard(|| {
        let v = handle(sketch)?.inner.point_estimate(index)?;
        *out.as_mut().ok_or(HhStatus::NullPointer)? = v;
        Ok(())
    })
}

/// Writes the heavy-hitter list, largest estimate first. `*len` receives
/// the list length even when `cap` is too small.
///
/// # Safety
/// `sketch` must be a live handle, `out` must hold `cap` values and `len`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn hh_cm_query(sketch: *const HhCountMin, out: *mut usize, cap: usize, len: *mut usize) -> HhStatus {
    guard(|| write_list(&handle(sketch)?.inner.query(), out, cap, len))
}

/// Number of counters held by the sketch.
///
/// # Safety
/// `sketch` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn hh_cm_space(sketch: *const HhCountMin, out: *mut usize) -> HhStatus {
    guard(|| {
        let s = &handle(sketch)?.inner;
        *out.as_mut().ok_or(HhStatus::NullPointer)? = s.rows() * s.buckets();
        Ok(())
    })
}

/// Creates a dyadic heavy-hitter sketch over `[0, n)`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hh_dyadic_new(n: usize, eps: f64, delta: f64, seed: u64, out: *mut *mut HhDyadic) -> HhStatus {
    guard(|| {
        let inner = DyadicG3::new(n, eps, delta, CmConstants::default(), seed)?;
        store(out, HhDyadic { inner })
    })
}

/// # Safety
/// `sketch` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn hh_dyadic_free(sketch: *mut HhDyadic) {
    release(sketch)
}

/// # Safety
/// `sketch` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn hh_dyadic_update(sketch: *mut HhDyadic, index: usize, delta: f64) -> HhStatus {
    guard(|| Ok(handle_mut(sketch)?.inner.update(index, delta)?))
}

/// # Safety
/// Same contract as [`hh_cm_query`].
#[no_mangle]
pub unsafe extern "C" fn hh_dyadic_query(sketch: *const HhDyadic, out: *mut usize, cap: usize, len: *mut usize) -> HhStatus {
    guard(|| write_list(&handle(sketch)?.inner.query(), out, cap, len))
}

/// Creates the deterministic sketch on the expander with field size `q`,
/// message length `a`, folding `c` and power base `h`, over the first `n`
/// left vertices. `zeta` is the expansion slack and `c_list` the list
/// constant; the caller is responsible for certifying expansion.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hh_det_new(
    q: u64,
    a: usize,
    c: usize,
    h: u64,
    n: usize,
    eps: f64,
    zeta: f64,
    c_list: f64,
    out: *mut *mut HhDet,
) -> HhStatus {
    guard(|| {
        let params = GuvParams::with_first_irreducible(q, a, c, h)?;
        let inner = DetHHSketch::new(params, n, eps, zeta, c_list)?;
        store(out, HhDet { inner })
    })
}

/// # Safety
/// `sketch` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn hh_det_free(sketch: *mut HhDet) {
    release(sketch)
}

/// # Safety
/// `sketch` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn hh_det_update(sketch: *mut HhDet, index: usize, delta: f64) -> HhStatus {
    guard(|| Ok(handle_mut(sketch)?.inner.update(index, delta)?))
}

/// # Safety
/// `sketch` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn hh_det_estimate(sketch: *const HhDet, index: usize, out: *mut f64) -> HhStatus {
    guard(|| {
        let v = handle(sketch)?.inner.point_estimate(index)?;
        *out.as_mut().ok_or(HhStatus::NullPointer)? = v;
        Ok(())
    })
}

/// # Safety
/// Same contract as [`hh_cm_query`].
#[no_mangle]
pub unsafe extern "C" fn hh_det_query(sketch: *const HhDet, out: *mut usize, cap: usize, len: *mut usize) -> HhStatus {
    guard(|| write_list(&handle(sketch)?.inner.query(), out, cap, len))
}

/// Builds a recovery pipeline for sparsity `k` and accuracy `eps`.
/// `schedule` is 0 for the quadratic schedule and 1 for the fast one.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hh_pipeline_new(
    n: usize,
    k: usize,
    eps: f64,
    schedule: u32,
    seed: u64,
    out: *mut *mut HhPipeline,
) -> HhStatus {
    guard(|| {
        let kind = match schedule {
            0 => ScheduleKind::Quadratic,
            1 => ScheduleKind::Fast,
            _ => return Err(HhStatus::InvalidParameter),
        };
        let inner = Pipeline::build(n, k, eps, kind, ScheduleConstants::default(), WeakConstants::lean(), seed)?;
        store(out, HhPipeline { inner })
    })
}

/// # Safety
/// `pipeline` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn hh_pipeline_free(pipeline: *mut HhPipeline) {
    release(pipeline)
}

/// Total number of linear measurements.
///
/// # Safety
/// `pipeline` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn hh_pipeline_rows(pipeline: *const HhPipeline, out: *mut usize) -> HhStatus {
    guard(|| {
        *out.as_mut().ok_or(HhStatus::NullPointer)? = handle(pipeline)?.inner.rows();
        Ok(())
    })
}

/// Measures the dense signal `x` of length `n` and recovers a sparse
/// approximation as parallel arrays of indices and values. `*len`
/// receives the support size even when `cap` is too small.
///
/// # Safety
/// `x` must hold `n` values, `indices` and `values` must hold `cap`
/// entries each, and `len` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hh_pipeline_recover(
    pipeline: *const HhPipeline,
    x: *const f64,
    n: usize,
    indices: *mut usize,
    values: *mut f64,
    cap: usize,
    len: *mut usize,
) -> HhStatus {
    guard(|| {
        let p = &handle(pipeline)?.inner;
        if x.is_null() || len.is_null() || (cap > 0 && (indices.is_null() || values.is_null())) {
            return Err(HhStatus::NullPointer);
        }
        let x = std::slice::from_raw_parts(x, n);
        let r = p.recover(&p.measure(x)?)?;
        *len = r.approx.len();
        for (j, &(i, v)) in r.approx.iter().take(cap).enumerate() {
            *indices.add(j) = i;
            *values.add(j) = v;
        }
        if r.approx.len() > cap {
            return Err(HhStatus::BufferTooSmall);
        }
        Ok(())
    })
}

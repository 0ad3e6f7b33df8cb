//! C ABI over `convex-mixing`.
//!
//! Every fallible call returns a [`CmStatus`]; results go through out
//! pointers. On a non-OK status the message is kept per thread and can be
//! read with [`cm_last_error_message`]. Bodies are opaque [`CmBody`] handles
//! owned by the caller and released with [`cm_body_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use convex_mixing::bounds;
use convex_mixing::coupling::{run_replicates, CouplingParams, Detection};
use convex_mixing::oracle1d::Heat1D;
use convex_mixing::{ConvexBody, Error};

/// Opaque convex body.
pub struct CmBody {
    inner: ConvexBody,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DomainSpec = 3,
    DimensionMismatch = 4,
    Numerical = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmDetection {
    Bridge = 0,
    Endpoint = 1,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(err: &Error) -> CmStatus {
    match err {
        Error::DomainSpec { .. } | Error::InvalidBody(_) | Error::Json(_) => CmStatus::DomainSpec,
        Error::DimensionMismatch { .. } => CmStatus::DimensionMismatch,
        Error::InvalidArgument { .. } | Error::Config { .. } | Error::GridMismatch(_) => CmStatus::InvalidArgument,
        _ => CmStatus::Numerical,
    }
}

enum Failure {
    Null(&'static str),
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> CmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            CmStatus::Ok
        }
        Ok(Err(Failure::Null(name))) => {
            set_error(format!("null pointer passed for `{name}`"));
            CmStatus::NullPointer
        }
        Ok(Err(Failure::Core(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic".to_owned());
            CmStatus::Panic
        }
    }
}

unsafe fn out_ref<'a, T>(p: *mut T, name: &'static str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or(Failure::Null(name))
}

unsafe fn body_ref<'a>(p: *const CmBody) -> Result<&'a ConvexBody, Failure> {
    p.as_ref().map(|b| &b.inner).ok_or(Failure::Null("body"))
}

unsafe fn point<'a>(p: *const f64, len: usize, name: &'static str) -> Result<&'a [f64], Failure> {
    if p.is_null() {
        return Err(Failure::Null(name));
    }
    Ok(slice::from_raw_parts(p, len))
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length excluding the NUL.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn cm_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Builds a body from its JSON description.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cm_body_from_json(json: *const c_char, out: *mut *mut CmBody) -> CmStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = ptr::null_mut();
        if json.is_null() {
            return Err(Failure::Null("json"));
        }
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|_| Error::InvalidArgument { name: "json", reason: "not valid UTF-8".into() })?;
        let inner = ConvexBody::from_json(text)?;
        *out = Box::into_raw(Box::new(CmBody { inner }));
        Ok(())
    })
}

/// # Safety
/// `body` must be null or a handle from [`cm_body_from_json`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cm_body_free(body: *mut CmBody) {
    if !body.is_null() {
        drop(Box::from_raw(body));
    }
}

/// Ambient dimension, or 0 for a null handle.
///
/// # Safety
/// `body` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cm_body_dimension(body: *const CmBody) -> usize {
    body.as_ref().map_or(0, |b| b.inner.dimension())
}

/// # Safety
/// `body` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cm_body_diameter(body: *const CmBody, out: *mut f64) -> CmStatus {
    guard(|| {
        *out_ref(out, "out")? = body_ref(body)?.diameter();
        Ok(())
    })
}

/// # Safety
/// `p` must point to `len` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cm_body_contains(body: *const CmBody, p: *const f64, len: usize, out: *mut bool) -> CmStatus {
    guard(|| {
        let body = body_ref(body)?;
        let out = out_ref(out, "out")?;
        *out = body.contains(point(p, len, "p")?)?;
        Ok(())
    })
}

/// Euclidean projection of `p` onto the body, written to `out` (`len` doubles).
///
/// # Safety
/// `p` and `out` must each point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn cm_body_project(body: *const CmBody, p: *const f64, len: usize, out: *mut f64) -> CmStatus {
    guard(|| {
        let body = body_ref(body)?;
        let proj = body.project(point(p, len, "p")?)?;
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        slice::from_raw_parts_mut(out, len).copy_from_slice(&proj);
        Ok(())
    })
}

/// `P(BM from k stays in (-d, d) up to time t)`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cm_survival_f(d: f64, t: f64, k: f64, tol: f64, out: *mut f64) -> CmStatus {
    guard(|| {
        *out_ref(out, "out")? = bounds::survival_f(d, t, k, tol)?.value;
        Ok(())
    })
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cm_chernoff_bound(d: f64, t: f64, k: f64, out: *mut f64) -> CmStatus {
    guard(|| {
        *out_ref(out, "out")? = bounds::chernoff_survival_bound(d, t, k)?;
        Ok(())
    })
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cm_matthews_bound(d: f64, t: f64, out: *mut f64) -> CmStatus {
    guard(|| {
        *out_ref(out, "out")? = bounds::matthews_bound(d, t)?;
        Ok(())
    })
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cm_bebendorf_envelope(d: f64, t: f64, c: f64, out: *mut f64) -> CmStatus {
    guard(|| {
        *out_ref(out, "out")? = bounds::bebendorf_envelope(d, t, c)?;
        Ok(())
    })
}

/// TV bound between laws started at two points `dist` apart.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cm_tv_bound_pair(d: f64, t: f64, dist: f64, tol: f64, out: *mut f64) -> CmStatus {
    guard(|| {
        *out_ref(out, "out")? = bounds::tv_bound_pair(d, t, dist, tol)?;
        Ok(())
    })
}

/// Exact TV to uniform for reflected BM on `[0, d]` started at `x`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cm_exact_tv_1d(d: f64, t: f64, x: f64, out: *mut f64) -> CmStatus {
    guard(|| {
        *out_ref(out, "out")? = Heat1D::new(d)?.exact_tv(t, x)?;
        Ok(())
    })
}

/// Runs `replicates` mirror couplings from `x` and `y` (each `len` doubles)
/// with the default threshold `0.5·√h`. Writes coupling or censoring times to
/// `taus` and a 0/1 censoring flag to `censored`, one per replicate.
///
/// # Safety
/// `x`, `y` must point to `len` doubles; `taus`, `censored` to `replicates`
/// elements.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn cm_simulate_coupling(
    body: *const CmBody,
    x: *const f64,
    y: *const f64,
    len: usize,
    h: f64,
    t_max: f64,
    detection: CmDetection,
    replicates: usize,
    seed: u64,
    taus: *mut f64,
    censored: *mut u8,
) -> CmStatus {
    guard(|| {
        let body = body_ref(body)?;
        let x = point(x, len, "x")?;
        let y = point(y, len, "y")?;
        if taus.is_null() {
            return Err(Failure::Null("taus"));
        }
        if censored.is_null() {
            return Err(Failure::Null("censored"));
        }
        let detection = match detection {
            CmDetection::Bridge => Detection::Bridge,
            CmDetection::Endpoint => Detection::Endpoint,
        };
        let params = CouplingParams::new(h, t_max).with_detection(detection);
        let outcomes = run_replicates(body, x, y, None, &params, replicates, seed)?;
        let taus = slice::from_raw_parts_mut(taus, replicates);
        let flags = slice::from_raw_parts_mut(censored, replicates);
        for ((o, t), c) in outcomes.iter().zip(taus).zip(flags) {
            *t = o.tau.time();
            *c = u8::from(o.tau.is_censored());
        }
        Ok(())
    })
}

//! C ABI over `bhtree`.
//!
//! Every fallible function returns a [`BhStatus`]. On failure the message is
//! available from [`bh_last_error_message`] on the same thread. Handles are
//! opaque and must be released with the matching `*_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use bhtree::event::ConditioningEvent;
use bhtree::limit_laws;
use bhtree::series;
use bhtree::simulator::{run_conditioned, ConditionedSample, SimConfig, DEFAULT_CAP};
use bhtree::{Builtin, Error, Model, ModelSpec};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BhStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidModel = 3,
    Unsupported = 4,
    Precondition = 5,
    Truncation = 6,
    EmptySample = 7,
    StateSpace = 8,
    Io = 9,
    BufferTooSmall = 10,
    Panic = 11,
}

/// Opaque model handle.
pub struct BhModel(Model);

/// Opaque handle on the accepted replicates of a conditioned run.
pub struct BhSample(ConditionedSample);

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BhConstants {
    pub mu: f64,
    pub sigma2: f64,
    pub b: f64,
    pub is_lattice: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BhSampleCounts {
    pub n_total: u64,
    pub n_accepted: u64,
    pub n_capped: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let text = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(text));
}

fn status_of(err: &Error) -> BhStatus {
    match err {
        Error::InvalidModel(_) => BhStatus::InvalidModel,
        Error::Unsupported(_) => BhStatus::Unsupported,
        Error::Precondition(_) | Error::Schedule(_) => BhStatus::Precondition,
        Error::Truncation { .. } => BhStatus::Truncation,
        Error::EmptySample(_) => BhStatus::EmptySample,
        Error::StateSpace(_) => BhStatus::StateSpace,
        Error::Io(_) | Error::Json(_) => BhStatus::Io,
    }
}

struct Fail(BhStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn guard<F: FnOnce() -> Result<(), Fail>>(f: F) -> BhStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            BhStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(msg);
            BhStatus::Panic
        }
    }
}

fn null() -> Fail {
    Fail(BhStatus::NullPointer, "null pointer argument".into())
}

fn invalid(msg: &str) -> Fail {
    Fail(BhStatus::InvalidArgument, msg.into())
}

unsafe fn str_arg<'a>(p: *const c_char) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null());
    }
    CStr::from_ptr(p).to_str().map_err(|_| invalid("string is not UTF-8"))
}

unsafe fn out_arg<'a, T>(p: *mut T) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(null)
}

unsafe fn model_arg<'a>(p: *const BhModel) -> Result<&'a Model, Fail> {
    p.as_ref().map(|m| &m.0).ok_or_else(null)
}

unsafe fn sample_arg<'a>(p: *const BhSample) -> Result<&'a ConditionedSample, Fail> {
    p.as_ref().map(|s| &s.0).ok_or_else(null)
}

/// Copies `values` into `buf`. `written` always receives the full length;
/// a short buffer yields `BufferTooSmall` and nothing is copied.
unsafe fn fill(values: &[f64], buf: *mut f64, len: usize, written: *mut usize) -> Result<(), Fail> {
    *out_arg(written)? = values.len();
    if values.len() > len {
        return Err(Fail(BhStatus::BufferTooSmall, format!("need {} slots, got {len}", values.len())));
    }
    if !values.is_empty() {
        if buf.is_null() {
            return Err(null());
        }
        ptr::copy_nonoverlapping(values.as_ptr(), buf, values.len());
    }
    Ok(())
}

/// Message of the last failed call on this thread, or NULL. Valid until the
/// next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn bh_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Builds one of `bin-lat`, `geo-exp`, `geo-det`.
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bh_model_builtin(name: *const c_char, out: *mut *mut BhModel) -> BhStatus {
    guard(|| {
        let name = str_arg(name)?;
        let out = out_arg(out)?;
        let b = Builtin::from_name(name).ok_or_else(|| Fail(BhStatus::InvalidModel, format!("unknown builtin '{name}'")))?;
        *out = Box::into_raw(Box::new(BhModel(b.model())));
        Ok(())
    })
}

/// Builds a model from the JSON model format.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bh_model_from_json(json: *const c_char, out: *mut *mut BhModel) -> BhStatus {
    guard(|| {
        let text = str_arg(json)?;
        let out = out_arg(out)?;
        let model = ModelSpec::from_json(text)?.build()?;
        *out = Box::into_raw(Box::new(BhModel(model)));
        Ok(())
    })
}

/// # Safety
/// `model` must come from a `bh_model_*` constructor, or be NULL.
#[no_mangle]
pub unsafe extern "C" fn bh_model_free(model: *mut BhModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn bh_model_constants(model: *const BhModel, out: *mut BhConstants) -> BhStatus {
    guard(|| {
        let c = model_arg(model)?.constants();
        *out_arg(out)? = BhConstants { mu: c.mu, sigma2: c.sigma2, b: c.b, is_lattice: c.is_lattice };
        Ok(())
    })
}

/// `P(Z(t) > 0)` for a lattice model.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn bh_survival_prob(model: *const BhModel, t: usize, out: *mut f64) -> BhStatus {
    guard(|| {
        *out_arg(out)? = series::survival_prob(model_arg(model)?, t)?;
        Ok(())
    })
}

/// `P(Z(t) = k)` for a lattice model.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn bh_point_prob(model: *const BhModel, t: usize, k: usize, out: *mut f64) -> BhStatus {
    guard(|| {
        *out_arg(out)? = series::point_prob(model_arg(model)?, t, k)?;
        Ok(())
    })
}

/// Coefficients `P(Z(t) = k)`, `k = 0..=order`. Pass `order = 0` for the
/// default truncation.
///
/// # Safety
/// `buf` must hold `len` doubles; other pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn bh_pgf_coefficients(
    model: *const BhModel,
    t: usize,
    order: usize,
    buf: *mut f64,
    len: usize,
    written: *mut usize,
) -> BhStatus {
    guard(|| {
        let model = model_arg(model)?;
        let order = if order == 0 { series::default_order(model, t) } else { order };
        let s = series::pgf_recursion(model, t, order)?;
        fill(&s.coeffs()[..=order.min(s.coeffs().len() - 1)], buf, len, written)
    })
}

fn check(ok: bool, msg: &str) -> Result<(), Fail> {
    if ok {
        Ok(())
    } else {
        Err(invalid(msg))
    }
}

/// Small-population limit of `P(Z(t - y phi(t), t) = j)`.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn bh_theorem1_limit(j: usize, y: f64, out: *mut f64) -> BhStatus {
    guard(|| {
        check(j >= 1 && y > 0.0, "need j >= 1 and y > 0")?;
        *out_arg(out)? = limit_laws::theorem1_limit(j, y);
        Ok(())
    })
}

/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn bh_corollary1_mrca(y: f64, out: *mut f64) -> BhStatus {
    guard(|| {
        check(y > 0.0, "need y > 0")?;
        *out_arg(out)? = limit_laws::corollary1_mrca(y);
        Ok(())
    })
}

/// Linear-event limit of `P(Z(xt, t) = j)`.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn bh_theorem2_limit(j: usize, x: f64, a: f64, out: *mut f64) -> BhStatus {
    guard(|| {
        check(j >= 1 && x > 0.0 && x < 1.0 && a > 0.0, "need j >= 1, x in (0,1), a > 0")?;
        *out_arg(out)? = limit_laws::theorem2_limit(j, x, a);
        Ok(())
    })
}

/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn bh_corollary2_mrca(x: f64, a: f64, out: *mut f64) -> BhStatus {
    guard(|| {
        check(x > 0.0 && x <= 1.0 && a > 0.0, "need x in (0,1], a > 0")?;
        *out_arg(out)? = limit_laws::corollary2_mrca(x, a);
        Ok(())
    })
}

/// Runs `replicates` seeded trees and keeps those in `event`
/// (`survival`, `small:pow:0.6`, `linear:1`, ...). Reduced counts are
/// recorded at each of the `n_s` times in `s_grid`; `cap = 0` selects the
/// default node cap.
///
/// # Safety
/// `event` must be a NUL-terminated string, `s_grid` must hold `n_s`
/// doubles (or be NULL when `n_s = 0`) and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn bh_sample_run(
    model: *const BhModel,
    t: f64,
    event: *const c_char,
    s_grid: *const f64,
    n_s: usize,
    replicates: u64,
    seed: u64,
    cap: usize,
    out: *mut *mut BhSample,
) -> BhStatus {
    guard(|| {
        let model = model_arg(model)?;
        let event: ConditioningEvent = str_arg(event)?.parse()?;
        let out = out_arg(out)?;
        let grid = if n_s == 0 {
            Vec::new()
        } else if s_grid.is_null() {
            return Err(null());
        } else {
            std::slice::from_raw_parts(s_grid, n_s).to_vec()
        };
        let mut config = SimConfig::new(t, event, replicates, seed).with_s_grid(grid);
        config.cap = if cap == 0 { DEFAULT_CAP } else { cap };
        let sample = run_conditioned(model, &config)?;
        *out = Box::into_raw(Box::new(BhSample(sample)));
        Ok(())
    })
}

/// # Safety
/// `sample` must come from `bh_sample_run`, or be NULL.
#[no_mangle]
pub unsafe extern "C" fn bh_sample_free(sample: *mut BhSample) {
    if !sample.is_null() {
        drop(Box::from_raw(sample));
    }
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn bh_sample_counts(sample: *const BhSample, out: *mut BhSampleCounts) -> BhStatus {
    guard(|| {
        let s = sample_arg(sample)?;
        *out_arg(out)? = BhSampleCounts { n_total: s.n_total, n_accepted: s.n_accepted, n_capped: s.n_capped };
        Ok(())
    })
}

/// `Z(t)` of each accepted replicate, in replicate order.
///
/// # Safety
/// `buf` must hold `len` doubles; other pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn bh_sample_population(
    sample: *const BhSample,
    buf: *mut f64,
    len: usize,
    written: *mut usize,
) -> BhStatus {
    guard(|| {
        let s = sample_arg(sample)?;
        let v: Vec<f64> = s.records.iter().map(|r| r.observables.z_t as f64).collect();
        fill(&v, buf, len, written)
    })
}

/// `Z(s, t)` at `s_grid[index]` for each accepted replicate.
///
/// # Safety
/// `buf` must hold `len` doubles; other pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn bh_sample_reduced(
    sample: *const BhSample,
    index: usize,
    buf: *mut f64,
    len: usize,
    written: *mut usize,
) -> BhStatus {
    guard(|| {
        let s = sample_arg(sample)?;
        check(index < s.config.s_grid.len(), "s index out of range")?;
        let v: Vec<f64> = s.records.iter().map(|r| r.observables.z_reduced[index] as f64).collect();
        fill(&v, buf, len, written)
    })
}

/// MRCA depth `d(t)` for each accepted replicate; NaN where undefined.
///
/// # Safety
/// `buf` must hold `len` doubles; other pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn bh_sample_mrca_depth(
    sample: *const BhSample,
    buf: *mut f64,
    len: usize,
    written: *mut usize,
) -> BhStatus {
    guard(|| {
        let s = sample_arg(sample)?;
        let v: Vec<f64> = s.records.iter().map(|r| r.observables.d.unwrap_or(f64::NAN)).collect();
        fill(&v, buf, len, written)
    })
}

//! C interface to the `uldp` estimators.
//!
//! Every fallible function returns a [`UldpStatus`] and writes results through
//! out-pointers. On failure the message is kept per thread and can be read
//! with [`uldp_last_error`]. Handles are opaque and must be released with
//! their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use uldp::baselines::{baseline_mean, BaselineKind};
use uldp::data::{Support, SupportKind, UserDatasetScalar, UserDatasetVector};
use uldp::error::Error;
use uldp::mean1d::{mean1d_estimate, Mean1dParams};
use uldp::mean_multi::{mean_l2, mean_linf};
use uldp::noise::RngStream;
use uldp::nonparam::GridModel;
use uldp::transforms::{build_kashin_frame, KashinConfig, KashinFrame};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UldpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParameter = 2,
    Dimension = 3,
    InsufficientUsers = 4,
    Certification = 5,
    Oracle = 6,
    Spec = 7,
    Io = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UldpBaseline {
    GroupPrivacy = 0,
    SampleOne = 1,
}

/// Seeded random stream.
pub struct UldpStream(RngStream);

/// Kashin frame with its certified constant.
pub struct UldpKashinFrame(KashinFrame);

/// Trained histogram model.
pub struct UldpGridModel(GridModel);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> UldpStatus {
    match e {
        Error::Parameter { .. } => UldpStatus::InvalidParameter,
        Error::Dimension { .. } => UldpStatus::Dimension,
        Error::InsufficientUsers { .. } => UldpStatus::InsufficientUsers,
        Error::Certification { .. } => UldpStatus::Certification,
        Error::Oracle { .. } => UldpStatus::Oracle,
        Error::Spec(_) => UldpStatus::Spec,
        Error::Io(_) => UldpStatus::Io,
    }
}

/// Runs `f`, translating errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), (UldpStatus, String)>) -> UldpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => UldpStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            UldpStatus::Panic
        }
    }
}

fn lib(e: Error) -> (UldpStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (UldpStatus, String) {
    (UldpStatus::NullPointer, format!("{what} is null"))
}

unsafe fn slice<'a>(
    p: *const f64,
    len: usize,
    what: &str,
) -> Result<&'a [f64], (UldpStatus, String)> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, (UldpStatus, String)> {
    p.as_ref().ok_or_else(|| null(what))
}

fn count(a: usize, b: usize, c: usize) -> Result<usize, (UldpStatus, String)> {
    a.checked_mul(b)
        .and_then(|x| x.checked_mul(c))
        .ok_or_else(|| (UldpStatus::InvalidParameter, "size overflows".into()))
}

/// Copies the calling thread's last error message into `buf` (NUL
/// terminated, truncated to `len`). Returns the full message length.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn uldp_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr() as *const c_char, buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn uldp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

#[no_mangle]
pub extern "C" fn uldp_stream_new(seed: u64) -> *mut UldpStream {
    Box::into_raw(Box::new(UldpStream(RngStream::new(seed))))
}

/// Child stream `label` of `parent`; null when `parent` is null.
///
/// # Safety
/// `parent` must be null or a live stream handle.
#[no_mangle]
pub unsafe extern "C" fn uldp_stream_child(
    parent: *const UldpStream,
    label: u64,
) -> *mut UldpStream {
    match parent.as_ref() {
        Some(s) => Box::into_raw(Box::new(UldpStream(s.0.child(label)))),
        None => ptr::null_mut(),
    }
}

/// # Safety
/// `stream` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn uldp_stream_free(stream: *mut UldpStream) {
    if !stream.is_null() {
        drop(Box::from_raw(stream));
    }
}

/// Two-stage mean of `n` users with `m` samples each (`values` is row-major
/// `n x m`), all in `[-radius, radius]`, with the default bin geometry.
///
/// # Safety
/// `values` must point to `n*m` doubles; `stream` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn uldp_mean1d_estimate(
    values: *const f64,
    n: usize,
    m: usize,
    radius: f64,
    epsilon: f64,
    stream: *const UldpStream,
    out: *mut f64,
) -> UldpStatus {
    guard(|| {
        let values = slice(values, count(n, m, 1)?, "values")?;
        let stream = handle(stream, "stream")?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let data = UserDatasetScalar::new(n, m, values.to_vec()).map_err(lib)?;
        let params = Mean1dParams::new(radius, epsilon, n, m).map_err(lib)?;
        *out = mean1d_estimate(&data, &params, &stream.0)
            .map_err(lib)?
            .estimate;
        Ok(())
    })
}

/// User-level (ε) baseline through an item-level conversion.
///
/// # Safety
/// As [`uldp_mean1d_estimate`].
#[no_mangle]
pub unsafe extern "C" fn uldp_baseline_mean(
    values: *const f64,
    n: usize,
    m: usize,
    radius: f64,
    epsilon: f64,
    kind: UldpBaseline,
    stream: *const UldpStream,
    out: *mut f64,
) -> UldpStatus {
    guard(|| {
        let values = slice(values, count(n, m, 1)?, "values")?;
        let stream = handle(stream, "stream")?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let data = UserDatasetScalar::new(n, m, values.to_vec()).map_err(lib)?;
        let kind = match kind {
            UldpBaseline::GroupPrivacy => BaselineKind::GroupPrivacy,
            UldpBaseline::SampleOne => BaselineKind::SampleOne,
        };
        *out = baseline_mean(&data, radius, epsilon, kind, &stream.0).map_err(lib)?;
        Ok(())
    })
}

unsafe fn vector_data(
    values: *const f64,
    n: usize,
    m: usize,
    d: usize,
    kind: SupportKind,
    radius: f64,
) -> Result<UserDatasetVector, (UldpStatus, String)> {
    let values = slice(values, count(n, m, d)?, "values")?;
    let support = Support::new(kind, radius).map_err(lib)?;
    UserDatasetVector::new(n, m, d, support, values.to_vec()).map_err(lib)
}

/// Mean of vectors with every coordinate in `[-radius, radius]`. `values` is
/// row-major `n x m x d`; `out` receives `d` doubles.
///
/// # Safety
/// `values` must point to `n*m*d` doubles and `out` to `d` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn uldp_mean_linf(
    values: *const f64,
    n: usize,
    m: usize,
    d: usize,
    radius: f64,
    epsilon: f64,
    stream: *const UldpStream,
    out: *mut f64,
) -> UldpStatus {
    guard(|| {
        let data = vector_data(values, n, m, d, SupportKind::Linf, radius)?;
        let stream = handle(stream, "stream")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let est = mean_linf(&data, epsilon, &stream.0).map_err(lib)?.estimate;
        ptr::copy_nonoverlapping(est.as_ptr(), out, d);
        Ok(())
    })
}

/// Builds a certified frame for dimension `d`.
///
/// # Safety
/// `stream` must be valid; `out` must point to writable handle storage.
#[no_mangle]
pub unsafe extern "C" fn uldp_kashin_frame_new(
    d: usize,
    stream: *const UldpStream,
    out: *mut *mut UldpKashinFrame,
) -> UldpStatus {
    guard(|| {
        let stream = handle(stream, "stream")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let frame = build_kashin_frame(d, &stream.0, KashinConfig::default()).map_err(lib)?;
        *out = Box::into_raw(Box::new(UldpKashinFrame(frame)));
        Ok(())
    })
}

/// Certified constant `K` of a frame; NaN for a null handle.
///
/// # Safety
/// `frame` must be null or a live frame handle.
#[no_mangle]
pub unsafe extern "C" fn uldp_kashin_frame_k(frame: *const UldpKashinFrame) -> f64 {
    frame.as_ref().map_or(f64::NAN, |f| f.0.k_cert())
}

/// # Safety
/// `frame` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn uldp_kashin_frame_free(frame: *mut UldpKashinFrame) {
    if !frame.is_null() {
        drop(Box::from_raw(frame));
    }
}

/// Mean of vectors in the Euclidean ball of radius `radius`, through the
/// frame's coefficients.
///
/// # Safety
/// As [`uldp_mean_linf`]; `frame` must be a live frame of dimension `d`.
#[no_mangle]
pub unsafe extern "C" fn uldp_mean_l2(
    values: *const f64,
    n: usize,
    m: usize,
    d: usize,
    radius: f64,
    epsilon: f64,
    frame: *const UldpKashinFrame,
    stream: *const UldpStream,
    out: *mut f64,
) -> UldpStatus {
    guard(|| {
        let data = vector_data(values, n, m, d, SupportKind::L2, radius)?;
        let frame = handle(frame, "frame")?;
        let stream = handle(stream, "stream")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let est = mean_l2(&data, epsilon, &frame.0, &stream.0)
            .map_err(lib)?
            .estimate;
        ptr::copy_nonoverlapping(est.as_ptr(), out, d);
        Ok(())
    })
}

/// Parses a model from its JSON form.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` writable handle storage.
#[no_mangle]
pub unsafe extern "C" fn uldp_grid_model_from_json(
    json: *const c_char,
    out: *mut *mut UldpGridModel,
) -> UldpStatus {
    guard(|| {
        if json.is_null() {
            return Err(null("json"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|_| (UldpStatus::Spec, "model json is not utf-8".to_string()))?;
        let model = GridModel::from_json(text).map_err(lib)?;
        *out = Box::into_raw(Box::new(UldpGridModel(model)));
        Ok(())
    })
}

/// # Safety
/// `model` must be a live model; `x` must point to `d` doubles.
#[no_mangle]
pub unsafe extern "C" fn uldp_grid_model_predict_class(
    model: *const UldpGridModel,
    x: *const f64,
    d: usize,
    out: *mut f64,
) -> UldpStatus {
    guard(|| {
        let model = handle(model, "model")?;
        let x = point(model, x, d)?;
        *out.as_mut().ok_or_else(|| null("out"))? = model.0.predict_class(x).map_err(lib)?;
        Ok(())
    })
}

/// # Safety
/// As [`uldp_grid_model_predict_class`].
#[no_mangle]
pub unsafe extern "C" fn uldp_grid_model_predict_reg(
    model: *const UldpGridModel,
    x: *const f64,
    d: usize,
    label_bound: f64,
    out: *mut f64,
) -> UldpStatus {
    guard(|| {
        let model = handle(model, "model")?;
        let x = point(model, x, d)?;
        *out.as_mut().ok_or_else(|| null("out"))? =
            model.0.predict_reg(x, label_bound).map_err(lib)?;
        Ok(())
    })
}

unsafe fn point<'a>(
    model: &UldpGridModel,
    x: *const f64,
    d: usize,
) -> Result<&'a [f64], (UldpStatus, String)> {
    if d != model.0.d {
        return Err((
            UldpStatus::Dimension,
            format!("model has d = {}, got {d}", model.0.d),
        ));
    }
    slice(x, d, "x")
}

/// # Safety
/// `model` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn uldp_grid_model_free(model: *mut UldpGridModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

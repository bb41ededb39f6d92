//! C ABI over credformer checkpoints and metrics.
//!
//! Every fallible function returns a [`CfStatus`]. On failure the message is
//! kept per thread and can be read with [`cf_last_error`]. Models are opaque
//! [`CfModel`] handles created by `cf_model_load*` and released with
//! [`cf_model_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;
use std::slice;

use credformer::metrics;
use credformer::model::{Checkpoint, Classifier};
use credformer::{Error, ErrorKind};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CfStatus {
    Ok = 0,
    /// A required pointer argument was NULL.
    NullPointer = 1,
    /// Bad argument or configuration.
    InvalidArgument = 2,
    /// Unreadable file, malformed checkpoint, shape or label problem.
    DataError = 3,
    /// Non-finite values during scoring.
    NumericError = 4,
    /// A Rust panic was caught at the boundary.
    Panic = 5,
}

/// Opaque model handle.
pub struct CfModel {
    checkpoint: Checkpoint,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    let c = CString::new(text).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(err: &Error) -> CfStatus {
    match err.kind() {
        ErrorKind::Usage => CfStatus::InvalidArgument,
        ErrorKind::Data => CfStatus::DataError,
        ErrorKind::Numeric => CfStatus::NumericError,
    }
}

/// Runs `f`, recording its error or panic as the thread's last error.
fn guard(f: impl FnOnce() -> Result<(), (CfStatus, String)>) -> CfStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CfStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("panic: {msg}"));
            CfStatus::Panic
        }
    }
}

fn lib_err(e: Error) -> (CfStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (CfStatus, String) {
    (CfStatus::NullPointer, format!("{what} is NULL"))
}

/// # Safety
/// `p` must be NULL or a valid NUL-terminated string.
unsafe fn path_arg<'a>(p: *const c_char, what: &str) -> Result<&'a Path, (CfStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    let s = CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (CfStatus::InvalidArgument, format!("{what} is not UTF-8")))?;
    Ok(Path::new(s))
}

/// # Safety
/// `p` must be NULL or point to `n` readable values.
unsafe fn slice_arg<'a, T>(p: *const T, n: usize, what: &str) -> Result<&'a [T], (CfStatus, String)> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(p, n))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn cf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or NULL. The pointer stays
/// valid until the next call into this library from the same thread.
#[no_mangle]
pub extern "C" fn cf_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

fn store_model(out: *mut *mut CfModel, checkpoint: Checkpoint) {
    let handle = Box::into_raw(Box::new(CfModel { checkpoint }));
    // SAFETY: callers check `out` for NULL before reaching here.
    unsafe { *out = handle };
}

/// Loads a checkpoint file into a new handle written to `*out`.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn cf_model_load(path: *const c_char, out: *mut *mut CfModel) -> CfStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let path = path_arg(path, "path")?;
        let ckpt = Checkpoint::load(path).map_err(lib_err)?;
        store_model(out, ckpt);
        Ok(())
    })
}

/// Loads a checkpoint from `len` bytes at `data`.
///
/// # Safety
/// `data` must point to `len` readable bytes and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cf_model_load_bytes(data: *const u8, len: usize, out: *mut *mut CfModel) -> CfStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let bytes = slice_arg(data, len, "data")?;
        let ckpt = Checkpoint::from_bytes(bytes).map_err(lib_err)?;
        store_model(out, ckpt);
        Ok(())
    })
}

/// Writes the model to `path` in checkpoint format.
///
/// # Safety
/// `model` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn cf_model_save(model: *const CfModel, path: *const c_char) -> CfStatus {
    guard(|| {
        let model = model.as_ref().ok_or_else(|| null("model"))?;
        let path = path_arg(path, "path")?;
        model.checkpoint.save(path).map_err(lib_err)
    })
}

/// Releases a handle. NULL is ignored.
///
/// # Safety
/// `model` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cf_model_free(model: *mut CfModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Number of raw input features the model expects; 0 for NULL.
///
/// # Safety
/// `model` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cf_model_n_features(model: *const CfModel) -> usize {
    model.as_ref().map_or(0, |m| m.checkpoint.model.n_features())
}

/// Scores `n_rows` raw rows of `n_cols` values each (row-major). NaN marks a
/// missing cell. The embedded preprocessor is applied before the model.
/// Writes `n_rows` probabilities to `out`.
///
/// # Safety
/// `rows` must hold `n_rows * n_cols` values and `out` room for `n_rows`.
#[no_mangle]
pub unsafe extern "C" fn cf_model_predict(
    model: *const CfModel,
    rows: *const f64,
    n_rows: usize,
    n_cols: usize,
    out: *mut f64,
) -> CfStatus {
    guard(|| {
        let model = model.as_ref().ok_or_else(|| null("model"))?;
        let total = n_rows
            .checked_mul(n_cols)
            .ok_or_else(|| (CfStatus::InvalidArgument, "n_rows * n_cols overflows".into()))?;
        let data = slice_arg(rows, total, "rows")?;
        if n_rows > 0 && out.is_null() {
            return Err(null("out"));
        }
        let expected = model.checkpoint.model.n_features();
        if n_cols != expected {
            return Err((
                CfStatus::DataError,
                format!("rows have {n_cols} columns, model expects {expected}"),
            ));
        }
        if n_rows == 0 {
            return Ok(());
        }
        let owned: Vec<Vec<f64>> = data.chunks(n_cols).map(<[f64]>::to_vec).collect();
        let probs = model.checkpoint.predict_raw(&owned).map_err(lib_err)?;
        slice::from_raw_parts_mut(out, n_rows).copy_from_slice(&probs);
        Ok(())
    })
}

/// # Safety
/// `scores` and `labels` must hold `n` values; `out` must be writable.
unsafe fn metric_call(
    scores: *const f64,
    labels: *const u8,
    n: usize,
    out: *mut f64,
    f: impl FnOnce(&[f64], &[u8]) -> credformer::Result<f64>,
) -> CfStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let s = slice_arg(scores, n, "scores")?;
        let l = slice_arg(labels, n, "labels")?;
        *out = f(s, l).map_err(lib_err)?;
        Ok(())
    })
}

/// Area under the ROC curve, ties counted as one half.
///
/// # Safety
/// `scores` and `labels` must hold `n` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cf_auc(scores: *const f64, labels: *const u8, n: usize, out: *mut f64) -> CfStatus {
    metric_call(scores, labels, n, out, metrics::auc)
}

/// Kolmogorov-Smirnov statistic, `max |TPR − FPR|`.
///
/// # Safety
/// `scores` and `labels` must hold `n` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cf_ks(scores: *const f64, labels: *const u8, n: usize, out: *mut f64) -> CfStatus {
    metric_call(scores, labels, n, out, metrics::ks)
}

/// Fraction of rows where `score >= threshold` matches the label.
///
/// # Safety
/// `scores` and `labels` must hold `n` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cf_accuracy(
    scores: *const f64,
    labels: *const u8,
    n: usize,
    threshold: f64,
    out: *mut f64,
) -> CfStatus {
    metric_call(scores, labels, n, out, |s, l| metrics::accuracy(s, l, threshold))
}

//! C ABI over the pathomil core.
//!
//! Every function returns a `PATHOMIL_*` status code. On failure the message
//! is kept per thread and can be copied out with
//! [`pathomil_last_error_message`]. Handles are opaque and must be released
//! with the matching `*_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use pathomil::featstore::FeatureBag;
use pathomil::gbdt::{enhanced_from_forward, predict_ensemble, TreeEnsemble, ENHANCED_DIM};
use pathomil::harness::TrainedModel;
use pathomil::nn::{DenseMatrix, Mode};
use pathomil::rng::Rng;
use pathomil::wsi::otsu_threshold;
use pathomil::Error;

pub const PATHOMIL_OK: i32 = 0;
pub const PATHOMIL_ERR_NULL: i32 = 1;
pub const PATHOMIL_ERR_INVALID_ARGUMENT: i32 = 2;
pub const PATHOMIL_ERR_CONFIG: i32 = 3;
pub const PATHOMIL_ERR_FORMAT: i32 = 4;
pub const PATHOMIL_ERR_IO: i32 = 5;
pub const PATHOMIL_ERR_NUMERIC: i32 = 6;
pub const PATHOMIL_ERR_BUFFER_TOO_SMALL: i32 = 7;
pub const PATHOMIL_ERR_PANIC: i32 = 8;

/// Trained MIL model plus its stored feature scaler.
pub struct PathomilModel {
    inner: TrainedModel,
}

/// Bag of instance features.
pub struct PathomilBag {
    inner: FeatureBag,
}

/// Boosted-tree ensemble.
pub struct PathomilGbdt {
    inner: TreeEnsemble,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure {
    code: i32,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Contract(_) => PATHOMIL_ERR_INVALID_ARGUMENT,
            Error::Config(_) | Error::Leakage(_) => PATHOMIL_ERR_CONFIG,
            Error::Format { .. } | Error::Json(_) => PATHOMIL_ERR_FORMAT,
            Error::File { .. } | Error::Io(_) => PATHOMIL_ERR_IO,
            Error::Numeric(_) => PATHOMIL_ERR_NUMERIC,
        };
        Failure { code, message: e.to_string() }
    }
}

fn fail(code: i32, message: impl Into<String>) -> Failure {
    Failure { code, message: message.into() }
}

fn set_last_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).expect("NULs replaced");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

/// Runs `f`, recording any error or panic as the thread's last error.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> i32 {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PATHOMIL_OK,
        Ok(Err(e)) => {
            set_last_error(&e.message);
            e.code
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(&format!("panic: {msg}"));
            PATHOMIL_ERR_PANIC
        }
    }
}

unsafe fn path_arg(p: *const c_char) -> Result<PathBuf, Failure> {
    if p.is_null() {
        return Err(fail(PATHOMIL_ERR_NULL, "path is null"));
    }
    let s = CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(PATHOMIL_ERR_INVALID_ARGUMENT, "path is not valid UTF-8"))?;
    Ok(PathBuf::from(s))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| fail(PATHOMIL_ERR_NULL, format!("{what} handle is null")))
}

unsafe fn out_slice<'a>(p: *mut f64, len: usize, needed: usize) -> Result<&'a mut [f64], Failure> {
    if p.is_null() {
        return Err(fail(PATHOMIL_ERR_NULL, "output buffer is null"));
    }
    if len < needed {
        return Err(fail(PATHOMIL_ERR_BUFFER_TOO_SMALL, format!("output needs {needed} values, got {len}")));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn store<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(fail(PATHOMIL_ERR_NULL, "output handle pointer is null"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

/// Length in bytes of the last error message, excluding the NUL; 0 when none.
#[no_mangle]
pub extern "C" fn pathomil_last_error_length() -> usize {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(0, |c| c.as_bytes().len()))
}

/// Copies the last error message (NUL-terminated, truncated to fit) into
/// `buf`. Returns the full message length excluding the NUL.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn pathomil_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let bytes = e.as_ref().map_or(&[][..], |c| c.as_bytes());
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn pathomil_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Loads a PMD1 model file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pathomil_model_load(path: *const c_char, out: *mut *mut PathomilModel) -> i32 {
    guard(|| {
        let path = path_arg(path)?;
        let inner = TrainedModel::load(&path)?;
        store(out, PathomilModel { inner })
    })
}

/// # Safety
/// `model` must be null or a handle from [`pathomil_model_load`], freed once.
#[no_mangle]
pub unsafe extern "C" fn pathomil_model_free(model: *mut PathomilModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Instance feature width the model expects.
///
/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pathomil_model_feature_dim(model: *const PathomilModel, out: *mut usize) -> i32 {
    guard(|| {
        let m = handle(model, "model")?;
        if out.is_null() {
            return Err(fail(PATHOMIL_ERR_NULL, "output pointer is null"));
        }
        *out = m.inner.model.feat_dim();
        Ok(())
    })
}

/// Loads a BAG1 file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pathomil_bag_load(path: *const c_char, out: *mut *mut PathomilBag) -> i32 {
    guard(|| {
        let path = path_arg(path)?;
        store(out, PathomilBag { inner: FeatureBag::read(&path)? })
    })
}

/// Builds a bag from a row-major `n × d` feature array. Coordinates are
/// `2n` values `x0, y0, x1, y1, ...`, or null for all zeros.
///
/// # Safety
/// `features` must point to `n*d` doubles and `coords`, when non-null, to
/// `2n` integers; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pathomil_bag_from_features(
    features: *const f64,
    n: usize,
    d: usize,
    coords: *const u32,
    label: u8,
    out: *mut *mut PathomilBag,
) -> i32 {
    guard(|| {
        if features.is_null() {
            return Err(fail(PATHOMIL_ERR_NULL, "features pointer is null"));
        }
        let len = n.checked_mul(d).ok_or_else(|| fail(PATHOMIL_ERR_INVALID_ARGUMENT, "n*d overflows"))?;
        let data = std::slice::from_raw_parts(features, len).to_vec();
        let coords = if coords.is_null() {
            vec![(0, 0); n]
        } else {
            std::slice::from_raw_parts(coords, 2 * n).chunks_exact(2).map(|c| (c[0], c[1])).collect()
        };
        let bag = FeatureBag::new("ffi", label, coords, DenseMatrix::from_vec(n, d, data)?)?;
        store(out, PathomilBag { inner: bag })
    })
}

/// # Safety
/// `bag` must be null or a handle from this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn pathomil_bag_free(bag: *mut PathomilBag) {
    if !bag.is_null() {
        drop(Box::from_raw(bag));
    }
}

/// Number of instances in a bag, or 0 for a null handle.
///
/// # Safety
/// `bag` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pathomil_bag_len(bag: *const PathomilBag) -> usize {
    bag.as_ref().map_or(0, |b| b.inner.n_instances())
}

unsafe fn prepared<'a>(
    model: *const PathomilModel,
    bag: *const PathomilBag,
) -> Result<(&'a TrainedModel, FeatureBag), Failure> {
    let m: &'a PathomilModel = handle(model, "model")?;
    let b = handle(bag, "bag")?;
    Ok((&m.inner, m.inner.prepare(b.inner.clone())?))
}

/// Eval-mode class probabilities; writes `n_classes` values.
///
/// # Safety
/// Handles must be live; `probs` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn pathomil_model_predict(
    model: *const PathomilModel,
    bag: *const PathomilBag,
    probs: *mut f64,
    len: usize,
) -> i32 {
    guard(|| {
        let (m, b) = prepared(model, bag)?;
        let fwd = m.model.forward(&b.features, Mode::Eval, &mut Rng::new(0))?;
        let p = fwd.probabilities();
        out_slice(probs, len, p.len())?[..p.len()].copy_from_slice(&p);
        Ok(())
    })
}

/// Attention weights over the bag's instances. `class_index < 0` selects the
/// predicted class (ABMIL); CLAM has a single attention branch.
///
/// # Safety
/// Handles must be live; `weights` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn pathomil_model_attention(
    model: *const PathomilModel,
    bag: *const PathomilBag,
    class_index: i32,
    weights: *mut f64,
    len: usize,
) -> i32 {
    guard(|| {
        let (m, b) = prepared(model, bag)?;
        let class = usize::try_from(class_index).ok();
        let a = pathomil::mil::extract_attention(&m.model, &b.features, class)?;
        out_slice(weights, len, a.len())?[..a.len()].copy_from_slice(&a);
        Ok(())
    })
}

/// The 23 enhanced slide-level features.
///
/// # Safety
/// Handles must be live; `out` must hold `len >= 23` doubles.
#[no_mangle]
pub unsafe extern "C" fn pathomil_enhanced_features(
    model: *const PathomilModel,
    bag: *const PathomilBag,
    out: *mut f64,
    len: usize,
) -> i32 {
    guard(|| {
        let (m, b) = prepared(model, bag)?;
        let fwd = m.model.forward(&b.features, Mode::Eval, &mut Rng::new(0))?;
        let f = enhanced_from_forward(&fwd)?;
        out_slice(out, len, ENHANCED_DIM)?[..ENHANCED_DIM].copy_from_slice(f.as_slice());
        Ok(())
    })
}

/// Loads a PGB1 ensemble file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pathomil_gbdt_load(path: *const c_char, out: *mut *mut PathomilGbdt) -> i32 {
    guard(|| {
        let path = path_arg(path)?;
        store(out, PathomilGbdt { inner: TreeEnsemble::load(&path)? })
    })
}

/// # Safety
/// `gbdt` must be null or a handle from [`pathomil_gbdt_load`], freed once.
#[no_mangle]
pub unsafe extern "C" fn pathomil_gbdt_free(gbdt: *mut PathomilGbdt) {
    if !gbdt.is_null() {
        drop(Box::from_raw(gbdt));
    }
}

/// Class probabilities for one feature row of `n_features` values.
///
/// # Safety
/// `x` must hold `n_features` doubles; `probs` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn pathomil_gbdt_predict(
    gbdt: *const PathomilGbdt,
    x: *const f64,
    n_features: usize,
    probs: *mut f64,
    len: usize,
) -> i32 {
    guard(|| {
        let g = handle(gbdt, "gbdt")?;
        if x.is_null() {
            return Err(fail(PATHOMIL_ERR_NULL, "feature pointer is null"));
        }
        if n_features != g.inner.n_features() {
            return Err(fail(
                PATHOMIL_ERR_INVALID_ARGUMENT,
                format!("ensemble expects {} features, got {n_features}", g.inner.n_features()),
            ));
        }
        let pred = predict_ensemble(&g.inner, std::slice::from_raw_parts(x, n_features))?;
        out_slice(probs, len, pred.probs.len())?[..pred.probs.len()].copy_from_slice(&pred.probs);
        Ok(())
    })
}

/// Otsu threshold of a 256-bin histogram; foreground is `value > threshold`.
///
/// # Safety
/// `hist` must point to 256 counts; `threshold` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pathomil_otsu_threshold(hist: *const u64, threshold: *mut u8) -> i32 {
    guard(|| {
        if hist.is_null() || threshold.is_null() {
            return Err(fail(PATHOMIL_ERR_NULL, "histogram or output pointer is null"));
        }
        let h: &[u64; 256] = &*(hist as *const [u64; 256]);
        *threshold = otsu_threshold(h)?.threshold;
        Ok(())
    })
}

//! C interface to the acorsis library.
//!
//! Every function returns an [`AcorsisStatus`]; on failure a message is
//! available from [`acorsis_last_error`] on the same thread. Datasets and
//! models are opaque handles owned by the caller and released with the
//! matching `_free` function. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use acorsis::penalize::{check_sh, kappa_ebic, lambda_path_gic, logistic_select, CoefficientSet, Method};
use acorsis::screening::{screen_scores, shrunk_variable_set, ScreenSize};
use acorsis::{standardize, Dataset, Error, Family};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AcorsisStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    /// A constant column or a one-class binary response.
    Degenerate = 3,
    /// Screening size out of range.
    InvalidSize = 4,
    OptimizerFailed = 5,
    /// Output buffer too small; the required length was still written.
    BufferTooSmall = 6,
    Panic = 99,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AcorsisFamily {
    Gaussian = 0,
    Binomial = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AcorsisMethod {
    Gresh = 0,
    Shim = 1,
}

/// Standardised data. Opaque to C.
pub struct AcorsisDataset {
    inner: Dataset,
}

/// A selected model. Opaque to C.
pub struct AcorsisModel {
    coefs: CoefficientSet,
    lambda: f64,
    gic: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let c = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> AcorsisStatus {
    match e {
        Error::ZeroVarianceColumn(_)
        | Error::ZeroVarianceResponse
        | Error::DegenerateBinaryResponse
        | Error::DegenerateColumn(_) => AcorsisStatus::Degenerate,
        Error::InvalidGamma(_) => AcorsisStatus::InvalidSize,
        Error::PathFailed | Error::MaxSweepsExceeded(_) => AcorsisStatus::OptimizerFailed,
        _ => AcorsisStatus::InvalidArgument,
    }
}

/// Runs `f`, recording any error or panic.
fn guard(f: impl FnOnce() -> Result<(), (AcorsisStatus, String)>) -> AcorsisStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => AcorsisStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal panic: {msg}"));
            AcorsisStatus::Panic
        }
    }
}

fn lib_err(e: Error) -> (AcorsisStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (AcorsisStatus, String) {
    (AcorsisStatus::NullPointer, format!("{what} is null"))
}

/// Message of the last failed call on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn acorsis_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn acorsis_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Standardises `y` (length `n`) and the column-major `x` (`n * p` values)
/// into a new dataset written to `*out`.
///
/// # Safety
/// `y` and `x` must point to `n` and `n * p` readable doubles; `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn acorsis_dataset_new(
    y: *const f64,
    x: *const f64,
    n: usize,
    p: usize,
    family: AcorsisFamily,
    out: *mut *mut AcorsisDataset,
) -> AcorsisStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        if y.is_null() || x.is_null() {
            return Err(null("data"));
        }
        let len = n.checked_mul(p).ok_or((AcorsisStatus::InvalidArgument, "n * p overflows".to_string()))?;
        if n == 0 || p == 0 {
            return Err((AcorsisStatus::InvalidArgument, "n and p must be positive".into()));
        }
        let y = std::slice::from_raw_parts(y, n);
        let x = std::slice::from_raw_parts(x, len);
        let fam = match family {
            AcorsisFamily::Gaussian => Family::Gaussian,
            AcorsisFamily::Binomial => Family::Binomial,
        };
        let inner = standardize(y, x, p, fam).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(AcorsisDataset { inner }));
        Ok(())
    })
}

/// # Safety
/// `ds` must come from [`acorsis_dataset_new`] and not be used afterwards.
/// Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn acorsis_dataset_free(ds: *mut AcorsisDataset) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}

/// Rows and columns of a dataset.
///
/// # Safety
/// `ds` must be a live dataset handle; `n` and `p` must be writable.
#[no_mangle]
pub unsafe extern "C" fn acorsis_dataset_shape(ds: *const AcorsisDataset, n: *mut usize, p: *mut usize) -> AcorsisStatus {
    guard(|| {
        let ds = ds.as_ref().ok_or_else(|| null("dataset"))?;
        if n.is_null() || p.is_null() {
            return Err(null("output"));
        }
        *n = ds.inner.n();
        *p = ds.inner.p();
        Ok(())
    })
}

/// Scores every variable and keeps the top `d` (or `[gamma n]` when `d` is
/// 0 and `gamma > 0`, or `[n / ln n]` when both are 0).
///
/// `scores` and `partners` receive `p` values each (either may be null);
/// partner 0 means the main effect scored highest. The 1-based kept
/// variables go to `selected` (capacity `cap`) in increasing order and
/// their count to `*n_selected`.
///
/// # Safety
/// Non-null buffers must have the stated lengths; `ds` must be live.
#[no_mangle]
pub unsafe extern "C" fn acorsis_screen(
    ds: *const AcorsisDataset,
    gamma: f64,
    d: usize,
    threads: usize,
    scores: *mut f64,
    partners: *mut usize,
    selected: *mut usize,
    cap: usize,
    n_selected: *mut usize,
) -> AcorsisStatus {
    guard(|| {
        let ds = &ds.as_ref().ok_or_else(|| null("dataset"))?.inner;
        if n_selected.is_null() {
            return Err(null("n_selected"));
        }
        let size = if d > 0 {
            ScreenSize::Fixed(d)
        } else if gamma != 0.0 {
            ScreenSize::Gamma(gamma)
        } else {
            ScreenSize::conventional(ds.n())
        };
        let sc = screen_scores(ds, threads.max(1)).map_err(lib_err)?;
        let set = shrunk_variable_set(&sc, ds.n(), size).map_err(lib_err)?;
        if !scores.is_null() {
            std::slice::from_raw_parts_mut(scores, ds.p()).copy_from_slice(sc.scores());
        }
        if !partners.is_null() {
            std::slice::from_raw_parts_mut(partners, ds.p()).copy_from_slice(sc.partners());
        }
        *n_selected = set.len();
        if set.len() > cap {
            return Err((
                AcorsisStatus::BufferTooSmall,
                format!("{} selected variables, capacity {cap}", set.len()),
            ));
        }
        if set.len() > 0 {
            if selected.is_null() {
                return Err(null("selected"));
            }
            std::slice::from_raw_parts_mut(selected, set.len()).copy_from_slice(&set.indices);
        }
        Ok(())
    })
}

/// Selects a hierarchical model on the 1-based variables `vars`. Gaussian
/// data use the GIC-tuned path of `method`; binomial data use penalised
/// logistic selection and ignore `method`. A negative `kappa` means
/// `ln p · ln ln n`.
///
/// # Safety
/// `vars` must hold `n_vars` values; `ds` must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn acorsis_fit(
    ds: *const AcorsisDataset,
    vars: *const usize,
    n_vars: usize,
    method: AcorsisMethod,
    kappa: f64,
    out: *mut *mut AcorsisModel,
) -> AcorsisStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let ds = &ds.as_ref().ok_or_else(|| null("dataset"))?.inner;
        if vars.is_null() && n_vars > 0 {
            return Err(null("vars"));
        }
        let vars: &[usize] = if n_vars == 0 { &[] } else { std::slice::from_raw_parts(vars, n_vars) };
        if kappa.is_nan() {
            return Err((AcorsisStatus::InvalidArgument, "kappa is NaN".into()));
        }
        let kappa = if kappa < 0.0 { kappa_ebic(ds.p(), ds.n()) } else { kappa };
        let model = match ds.family() {
            Family::Gaussian => {
                let m = match method {
                    AcorsisMethod::Gresh => Method::Gresh,
                    AcorsisMethod::Shim => Method::Shim,
                };
                let r = lambda_path_gic(ds, vars, m, kappa).map_err(lib_err)?;
                let rec = r.chosen_record();
                AcorsisModel {
                    lambda: rec.lambda1,
                    gic: rec.gic,
                    coefs: r.model,
                }
            }
            Family::Binomial => {
                let r = logistic_select(ds, vars, kappa).map_err(lib_err)?;
                AcorsisModel {
                    lambda: r.lambda,
                    gic: r.gic,
                    coefs: r.coefs,
                }
            }
        };
        *out = Box::into_raw(Box::new(model));
        Ok(())
    })
}

/// # Safety
/// `m` must come from [`acorsis_fit`] and not be used afterwards. Null is
/// ignored.
#[no_mangle]
pub unsafe extern "C" fn acorsis_model_free(m: *mut AcorsisModel) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Intercept, chosen penalty and GIC value of a model. Any output pointer
/// may be null.
///
/// # Safety
/// `m` must be a live model handle.
#[no_mangle]
pub unsafe extern "C" fn acorsis_model_summary(
    m: *const AcorsisModel,
    intercept: *mut f64,
    lambda: *mut f64,
    gic: *mut f64,
) -> AcorsisStatus {
    guard(|| {
        let m = m.as_ref().ok_or_else(|| null("model"))?;
        if !intercept.is_null() {
            *intercept = m.coefs.beta0;
        }
        if !lambda.is_null() {
            *lambda = m.lambda;
        }
        if !gic.is_null() {
            *gic = m.gic;
        }
        Ok(())
    })
}

/// Writes the nonzero effects: `j[i] = 0` marks the main effect of `k[i]`,
/// otherwise the interaction of `j[i] < k[i]`. Mains come first, each group
/// in increasing order. `*len` receives the number of effects; if it
/// exceeds `cap` nothing else is written.
///
/// # Safety
/// `j`, `k`, `coef` must hold `cap` values each (may be null when `cap` is 0).
#[no_mangle]
pub unsafe extern "C" fn acorsis_model_effects(
    m: *const AcorsisModel,
    j: *mut usize,
    k: *mut usize,
    coef: *mut f64,
    cap: usize,
    len: *mut usize,
) -> AcorsisStatus {
    guard(|| {
        let m = m.as_ref().ok_or_else(|| null("model"))?;
        if len.is_null() {
            return Err(null("len"));
        }
        let c = &m.coefs;
        let effects: Vec<(usize, usize, f64)> = c
            .selected_mains()
            .into_iter()
            .map(|v| (0, v, c.main_coef(v)))
            .chain(c.selected_interactions().into_iter().map(|e| (e.j, e.k, c.inter_coef(e.j, e.k))))
            .collect();
        *len = effects.len();
        if effects.len() > cap {
            return Err((
                AcorsisStatus::BufferTooSmall,
                format!("{} effects, capacity {cap}", effects.len()),
            ));
        }
        if effects.is_empty() {
            return Ok(());
        }
        if j.is_null() || k.is_null() || coef.is_null() {
            return Err(null("effect buffers"));
        }
        for (i, (a, b, v)) in effects.into_iter().enumerate() {
            *j.add(i) = a;
            *k.add(i) = b;
            *coef.add(i) = v;
        }
        Ok(())
    })
}

/// 1 when every interaction in the model has both parent mains, else 0.
///
/// # Safety
/// `m` must be a live model handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn acorsis_model_hierarchy_ok(m: *const AcorsisModel, out: *mut i32) -> AcorsisStatus {
    guard(|| {
        let m = m.as_ref().ok_or_else(|| null("model"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = i32::from(check_sh(&m.coefs).satisfied);
        Ok(())
    })
}

//! C interface to `planeclust`.
//!
//! Conventions: every fallible call returns a [`PcStatus`] and writes results
//! through out-pointers. On failure, [`pc_last_error_message`] describes the
//! error for the calling thread. Handles are created by `*_new`/`*_load`/
//! `pc_fit` and released with the matching `*_free`; freeing NULL is a no-op.
//! Array getters copy into caller buffers and fail with
//! `PC_STATUS_BUFFER_TOO_SMALL` when `len` is short.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use planeclust::baselines::{fkpc_fit, kpc_fit};
use planeclust::cli::{load_csv, ColumnRef};
use planeclust::datagen::{generate, Family, Noise, SyntheticSpec};
use planeclust::metrics::Scores;
use planeclust::{rflkpc, Dataset, Error, FitReport, HyperParams, Matrix};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    Singular = 3,
    DegenerateCluster = 4,
    FitFailed = 5,
    Parse = 6,
    Io = 7,
    BufferTooSmall = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PcMethod {
    Rflkpc = 0,
    Kpc = 1,
    Fkpc = 2,
}

/// Hyperparameters; start from [`pc_params_default`].
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PcParams {
    pub k: usize,
    pub m: f64,
    pub alpha: f64,
    pub lambda: f64,
    pub eta: f64,
    pub max_outer: usize,
    pub max_inner: usize,
    pub inner_tol: f64,
    pub eps_proj: f64,
    pub seed: u64,
}

impl From<&PcParams> for HyperParams {
    fn from(p: &PcParams) -> Self {
        HyperParams {
            k: p.k,
            m: p.m,
            alpha: p.alpha,
            lambda: p.lambda,
            eta: p.eta,
            max_outer: p.max_outer,
            max_inner: p.max_inner,
            inner_tol: p.inner_tol,
            eps_proj: p.eps_proj,
            seed: p.seed,
        }
    }
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PcScores {
    pub acc: f64,
    pub nmi: f64,
    pub ari: f64,
    pub purity: f64,
}

/// Opaque point set, optionally labeled.
pub struct PcDataset(Dataset);

/// Opaque fit outcome.
pub struct PcFitResult(FitReport);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("NULs replaced");
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> PcStatus {
    match e {
        Error::InvalidInput(_) => PcStatus::InvalidInput,
        Error::Singular { .. } => PcStatus::Singular,
        Error::DegenerateCluster { .. } => PcStatus::DegenerateCluster,
        Error::Fit { .. } => PcStatus::FitFailed,
        Error::Parse { .. } | Error::Json(_) => PcStatus::Parse,
        Error::Io(_) => PcStatus::Io,
    }
}

struct Fail(PcStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(PcStatus::NullPointer, format!("{what} is NULL"))
}

/// Runs `f`, converting errors and panics into a status plus message.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> PcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            PcStatus::Ok
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
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            PcStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(PcStatus::InvalidInput, format!("{what} is not UTF-8")))
}

unsafe fn out_ptr<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn copy_out<T: Copy>(src: &[T], out: *mut T, len: usize) -> Result<(), Fail> {
    if len < src.len() {
        return Err(Fail(
            PcStatus::BufferTooSmall,
            format!("buffer holds {len} values, need {}", src.len()),
        ));
    }
    if out.is_null() {
        return Err(null("out"));
    }
    ptr::copy_nonoverlapping(src.as_ptr(), out, src.len());
    Ok(())
}

fn boxed<T>(value: T) -> *mut T {
    Box::into_raw(Box::new(value))
}

/// Message of the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next library call on the same thread.
#[no_mangle]
pub extern "C" fn pc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn pc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

#[no_mangle]
pub extern "C" fn pc_params_default(k: usize) -> PcParams {
    let h = HyperParams::with_k(k);
    PcParams {
        k: h.k,
        m: h.m,
        alpha: h.alpha,
        lambda: h.lambda,
        eta: h.eta,
        max_outer: h.max_outer,
        max_inner: h.max_inner,
        inner_tol: h.inner_tol,
        eps_proj: h.eps_proj,
        seed: h.seed,
    }
}

/// Copies `n * dim` row-major values (and `n` labels when `labels` is not
/// NULL; negative labels mark outliers) into a new dataset.
///
/// # Safety
/// `points` must be readable for `n * dim` doubles, `labels` for `n` values
/// or NULL, and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pc_dataset_new(
    points: *const f64,
    n: usize,
    dim: usize,
    labels: *const i64,
    out: *mut *mut PcDataset,
) -> PcStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = ptr::null_mut();
        if points.is_null() {
            return Err(null("points"));
        }
        let len = n
            .checked_mul(dim)
            .ok_or_else(|| Fail(PcStatus::InvalidInput, "n * dim overflows".into()))?;
        let values = std::slice::from_raw_parts(points, len).to_vec();
        let labels = (!labels.is_null()).then(|| std::slice::from_raw_parts(labels, n).to_vec());
        let data = Dataset::new(Matrix::from_vec(n, dim, values)?, labels)?;
        *out = boxed(PcDataset(data));
        Ok(())
    })
}

/// Reads a CSV file. `label_column` is a header name or zero-based index,
/// or NULL for unlabeled data.
///
/// # Safety
/// String arguments must be NUL-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pc_dataset_load_csv(
    path: *const c_char,
    has_header: bool,
    label_column: *const c_char,
    out: *mut *mut PcDataset,
) -> PcStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = ptr::null_mut();
        let path = PathBuf::from(str_arg(path, "path")?);
        let label: Option<ColumnRef> = if label_column.is_null() {
            None
        } else {
            Some(str_arg(label_column, "label_column")?.parse()?)
        };
        *out = boxed(PcDataset(load_csv(path, has_header, label.as_ref())?));
        Ok(())
    })
}

/// Generates a labeled synthetic dataset with default sizes and noise scale.
/// `family`: s1, s2, s3, toy, scene3d. `noise`: clean, gaussian, laplace,
/// student_t1, uniform_outliers.
///
/// # Safety
/// String arguments must be NUL-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pc_dataset_generate(
    family: *const c_char,
    noise: *const c_char,
    seed: u64,
    out: *mut *mut PcDataset,
) -> PcStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = ptr::null_mut();
        let family: Family = str_arg(family, "family")?.parse()?;
        let noise: Noise = str_arg(noise, "noise")?.parse()?;
        *out = boxed(PcDataset(generate(&SyntheticSpec::new(
            family, noise, seed,
        ))?));
        Ok(())
    })
}

/// Number of points, 0 for NULL.
///
/// # Safety
/// `data` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn pc_dataset_len(data: *const PcDataset) -> usize {
    data.as_ref().map_or(0, |d| d.0.len())
}

/// # Safety
/// `data` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn pc_dataset_dim(data: *const PcDataset) -> usize {
    data.as_ref().map_or(0, |d| d.0.dim())
}

/// Copies the canonical labels (`0..C`, outliers `-1`) into `out`. Fails
/// with `PC_STATUS_INVALID_INPUT` for unlabeled data.
///
/// # Safety
/// `data` must be a live handle; `out` writable for `len` values.
#[no_mangle]
pub unsafe extern "C" fn pc_dataset_labels(
    data: *const PcDataset,
    out: *mut i64,
    len: usize,
) -> PcStatus {
    guard(|| {
        let data = data.as_ref().ok_or_else(|| null("data"))?;
        let labels = data
            .0
            .labels()
            .ok_or_else(|| Fail(PcStatus::InvalidInput, "dataset has no labels".into()))?;
        copy_out(labels, out, len)
    })
}

/// # Safety
/// `data` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn pc_dataset_free(data: *mut PcDataset) {
    if !data.is_null() {
        drop(Box::from_raw(data));
    }
}

/// Fits `method` to `data`. KPC uses `params.k`, `seed` and `max_outer`;
/// FkPC additionally `m` and `eta`.
///
/// # Safety
/// `data` and `params` must be valid; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pc_fit(
    data: *const PcDataset,
    method: PcMethod,
    params: *const PcParams,
    out: *mut *mut PcFitResult,
) -> PcStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = ptr::null_mut();
        let data = &data.as_ref().ok_or_else(|| null("data"))?.0;
        let p: HyperParams = params.as_ref().ok_or_else(|| null("params"))?.into();
        p.validate()?;
        let report = match method {
            PcMethod::Rflkpc => rflkpc::fit(data, &p, None)?,
            PcMethod::Kpc => kpc_fit(data, p.k, p.seed, p.max_outer)?,
            PcMethod::Fkpc => fkpc_fit(data, p.k, p.m, p.seed, p.eta, p.max_outer)?,
        };
        *out = boxed(PcFitResult(report));
        Ok(())
    })
}

/// Clusters in the fit, 0 for NULL.
///
/// # Safety
/// `fit` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn pc_fit_k(fit: *const PcFitResult) -> usize {
    fit.as_ref().map_or(0, |f| f.0.model.k())
}

/// # Safety
/// `fit` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn pc_fit_dim(fit: *const PcFitResult) -> usize {
    fit.as_ref().map_or(0, |f| f.0.model.dim())
}

/// Points covered by the fit, 0 for NULL.
///
/// # Safety
/// `fit` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn pc_fit_len(fit: *const PcFitResult) -> usize {
    fit.as_ref().map_or(0, |f| f.0.hard_labels.len())
}

/// Final objective value, NaN for NULL.
///
/// # Safety
/// `fit` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn pc_fit_objective(fit: *const PcFitResult) -> f64 {
    fit.as_ref().map_or(f64::NAN, |f| f.0.final_objective())
}

/// # Safety
/// `fit` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn pc_fit_iterations(fit: *const PcFitResult) -> usize {
    fit.as_ref().map_or(0, |f| f.0.outer_iters)
}

/// # Safety
/// `fit` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn pc_fit_converged(fit: *const PcFitResult) -> bool {
    fit.as_ref().is_some_and(|f| f.0.converged)
}

/// Copies one cluster id per point.
///
/// # Safety
/// `fit` must be a live handle; `out` writable for `len` values.
#[no_mangle]
pub unsafe extern "C" fn pc_fit_labels(
    fit: *const PcFitResult,
    out: *mut usize,
    len: usize,
) -> PcStatus {
    guard(|| {
        copy_out(
            &fit.as_ref().ok_or_else(|| null("fit"))?.0.hard_labels,
            out,
            len,
        )
    })
}

/// Copies the `k * dim` unit normals, row-major.
///
/// # Safety
/// `fit` must be a live handle; `out` writable for `len` values.
#[no_mangle]
pub unsafe extern "C" fn pc_fit_normals(
    fit: *const PcFitResult,
    out: *mut f64,
    len: usize,
) -> PcStatus {
    guard(|| {
        copy_out(
            fit.as_ref()
                .ok_or_else(|| null("fit"))?
                .0
                .model
                .normals
                .as_slice(),
            out,
            len,
        )
    })
}

/// Copies the `k * dim` plane centers, row-major.
///
/// # Safety
/// `fit` must be a live handle; `out` writable for `len` values.
#[no_mangle]
pub unsafe extern "C" fn pc_fit_centers(
    fit: *const PcFitResult,
    out: *mut f64,
    len: usize,
) -> PcStatus {
    guard(|| {
        copy_out(
            fit.as_ref()
                .ok_or_else(|| null("fit"))?
                .0
                .model
                .centers
                .as_slice(),
            out,
            len,
        )
    })
}

/// Copies the `n * k` membership matrix, row-major.
///
/// # Safety
/// `fit` must be a live handle; `out` writable for `len` values.
#[no_mangle]
pub unsafe extern "C" fn pc_fit_membership(
    fit: *const PcFitResult,
    out: *mut f64,
    len: usize,
) -> PcStatus {
    guard(|| {
        copy_out(
            fit.as_ref()
                .ok_or_else(|| null("fit"))?
                .0
                .membership
                .matrix()
                .as_slice(),
            out,
            len,
        )
    })
}

/// # Safety
/// `fit` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn pc_fit_free(fit: *mut PcFitResult) {
    if !fit.is_null() {
        drop(Box::from_raw(fit));
    }
}

/// ACC, NMI (geometric), ARI and purity of `pred` against `truth`.
///
/// # Safety
/// `truth` and `pred` must be readable for `n` values; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pc_scores(
    truth: *const i64,
    pred: *const i64,
    n: usize,
    out: *mut PcScores,
) -> PcStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        if truth.is_null() || pred.is_null() {
            return Err(null("labels"));
        }
        let t = std::slice::from_raw_parts(truth, n);
        let p = std::slice::from_raw_parts(pred, n);
        let s = Scores::compute(t, p, planeclust::metrics::NmiNorm::Geometric)?;
        *out = PcScores {
            acc: s.acc,
            nmi: s.nmi,
            ari: s.ari,
            purity: s.purity,
        };
        Ok(())
    })
}

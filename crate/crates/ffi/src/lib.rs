//! C interface to the `dss` sampler.
//!
//! Objects are passed as opaque handles created by `*_new`/`*_from_*`
//! functions and released with the matching `*_free`. Every fallible call
//! returns a [`DssStatus`]; after a non-zero status, [`dss_last_error`]
//! describes the failure on the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use dss::data::Dataset;
use dss::io::{load_csv, KeyValueConfig};
use dss::prior::{Hyperparameters, PriorKind};
use dss::sampler::{run_chain, ChainOutput, McmcConfig};
use dss::Error;
use nalgebra::DMatrix;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DssStatus {
    Ok = 0,
    NullPointer = 1,
    /// Invalid setting or argument.
    Config = 2,
    /// Unreadable or inconsistent data.
    Data = 3,
    /// Numerical failure inside the sampler.
    Numerical = 4,
    /// A result could not be written.
    Output = 5,
    /// Internal error; the library caught a panic.
    Internal = 6,
}

/// Shrinkage prior family.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DssPrior {
    Nmig = 0,
    NormalGamma = 1,
    Laplace = 2,
}

impl From<DssPrior> for PriorKind {
    fn from(p: DssPrior) -> Self {
        match p {
            DssPrior::Nmig => PriorKind::Nmig,
            DssPrior::NormalGamma => PriorKind::NormalGamma,
            DssPrior::Laplace => PriorKind::LaplaceMix,
        }
    }
}

/// Posterior summary of the coefficient paths.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DssStatistic {
    Mean = 0,
    Median = 1,
    /// 2.5% quantile.
    Lower = 2,
    /// 97.5% quantile.
    Upper = 3,
    /// Posterior slab probability.
    Inclusion = 4,
}

/// Posterior moments of a scalar parameter.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DssMoments {
    pub mean: f64,
    pub median: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Regression data.
pub struct DssDataset {
    inner: Dataset,
}

/// Sampler settings.
pub struct DssConfig {
    inner: McmcConfig,
}

/// Output of a fitted chain.
pub struct DssFit {
    inner: ChainOutput,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> DssStatus {
    match err.exit_code() {
        2 if matches!(err, Error::Output(_)) => DssStatus::Output,
        2 => DssStatus::Config,
        3 => DssStatus::Data,
        _ => DssStatus::Numerical,
    }
}

/// Run `f`, converting errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), (DssStatus, String)>) -> DssStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => DssStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal error (panic)".into());
            DssStatus::Internal
        }
    }
}

fn lib_err(e: Error) -> (DssStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (DssStatus, String) {
    (DssStatus::NullPointer, format!("{what} is null"))
}

unsafe fn c_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, (DssStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (DssStatus::Config, format!("{what} is not valid UTF-8")))
}

unsafe fn put<T>(out: *mut *mut T, value: T) {
    *out = Box::into_raw(Box::new(value));
}

/// Message describing the last failure on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn dss_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version string (static storage).
#[no_mangle]
pub extern "C" fn dss_version() -> *const c_char {
    static VERSION: std::sync::OnceLock<CString> = std::sync::OnceLock::new();
    VERSION
        .get_or_init(|| CString::new(dss::run::version()).unwrap_or_default())
        .as_ptr()
}

/// Build a dataset from `n` responses and an `n x q` row-major regressor
/// matrix.
///
/// # Safety
/// `y` must point to `n` doubles, `x` to `n * q` doubles and `out` to
/// writable storage for a handle.
#[no_mangle]
pub unsafe extern "C" fn dss_dataset_new(
    y: *const f64,
    x: *const f64,
    n: usize,
    q: usize,
    out: *mut *mut DssDataset,
) -> DssStatus {
    guard(|| {
        if y.is_null() || x.is_null() || out.is_null() {
            return Err(null("argument"));
        }
        let ys = std::slice::from_raw_parts(y, n).to_vec();
        let xs = std::slice::from_raw_parts(x, n.checked_mul(q).ok_or_else(|| (DssStatus::Config, "n * q overflows".into()))?);
        let data = Dataset::new(ys, DMatrix::from_row_slice(n, q, xs)).map_err(lib_err)?;
        put(out, DssDataset { inner: data });
        Ok(())
    })
}

/// Load a dataset from a CSV file with a header row. Every column other
/// than `response` is used as a predictor.
///
/// # Safety
/// `path` and `response` must be NUL-terminated strings and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dss_dataset_from_csv(
    path: *const c_char,
    response: *const c_char,
    out: *mut *mut DssDataset,
) -> DssStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let path = c_str(path, "path")?;
        let response = c_str(response, "response")?;
        let data = load_csv(Path::new(path), response, &[]).map_err(lib_err)?;
        put(out, DssDataset { inner: data });
        Ok(())
    })
}

/// Number of time points, or 0 for a null handle.
///
/// # Safety
/// `data` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dss_dataset_len(data: *const DssDataset) -> usize {
    data.as_ref().map_or(0, |d| d.inner.len())
}

/// Number of predictors, or 0 for a null handle.
///
/// # Safety
/// `data` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dss_dataset_predictors(data: *const DssDataset) -> usize {
    data.as_ref().map_or(0, |d| d.inner.n_predictors())
}

/// # Safety
/// `data` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dss_dataset_free(data: *mut DssDataset) {
    if !data.is_null() {
        drop(Box::from_raw(data));
    }
}

/// Sampler settings for `prior` with the hyperparameters of `preset`
/// ("example1", "example2" or "inflation"; null selects "example1").
///
/// # Safety
/// `preset` must be null or a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dss_config_new(
    prior: DssPrior,
    preset: *const c_char,
    n_iter: usize,
    n_burn: usize,
    seed: u64,
    out: *mut *mut DssConfig,
) -> DssStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let preset = if preset.is_null() { "example1" } else { c_str(preset, "preset")? };
        let hp = Hyperparameters::preset(preset).map_err(lib_err)?;
        let cfg = McmcConfig::new(prior.into(), hp, n_iter, n_burn, seed);
        cfg.validate().map_err(lib_err)?;
        put(out, DssConfig { inner: cfg });
        Ok(())
    })
}

/// Set one option using the configuration-file syntax, e.g. key "nu" and
/// value "5". The settings are validated after the change and left
/// untouched on failure.
///
/// # Safety
/// `cfg` must be a live handle; `key` and `value` NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn dss_config_set(cfg: *mut DssConfig, key: *const c_char, value: *const c_char) -> DssStatus {
    guard(|| {
        let cfg = cfg.as_mut().ok_or_else(|| null("cfg"))?;
        let key = c_str(key, "key")?;
        let value = c_str(value, "value")?;
        if key.contains(['=', '\n', '#']) || value.contains(['\n', '#']) {
            return Err((DssStatus::Config, format!("invalid option '{key}'")));
        }
        let kv = KeyValueConfig::parse(&format!("{key} = {value}")).map_err(lib_err)?;
        let mut updated = cfg.inner.clone();
        kv.apply_mcmc(&mut updated).map_err(lib_err)?;
        updated.validate().map_err(lib_err)?;
        cfg.inner = updated;
        Ok(())
    })
}

/// # Safety
/// `cfg` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dss_config_free(cfg: *mut DssConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Run one chain.
///
/// # Safety
/// `data` and `cfg` must be live handles and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dss_fit(data: *const DssDataset, cfg: *const DssConfig, out: *mut *mut DssFit) -> DssStatus {
    guard(|| {
        let data = data.as_ref().ok_or_else(|| null("data"))?;
        let cfg = cfg.as_ref().ok_or_else(|| null("cfg"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let chain = run_chain(&data.inner, &cfg.inner).map_err(lib_err)?;
        put(out, DssFit { inner: chain });
        Ok(())
    })
}

/// Copy a coefficient-path summary into `buf` (`n x q`, row-major, so entry
/// `t * q + j` is predictor `j` at time `t`). `len` must be at least `n * q`.
///
/// # Safety
/// `fit` must be a live handle and `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn dss_fit_coefficients(
    fit: *const DssFit,
    statistic: DssStatistic,
    buf: *mut f64,
    len: usize,
) -> DssStatus {
    guard(|| {
        let fit = fit.as_ref().ok_or_else(|| null("fit"))?;
        if buf.is_null() {
            return Err(null("buf"));
        }
        let b = &fit.inner.summary.beta;
        let m = match statistic {
            DssStatistic::Mean => &b.mean,
            DssStatistic::Median => &b.median,
            DssStatistic::Lower => &b.lower,
            DssStatistic::Upper => &b.upper,
            DssStatistic::Inclusion => &b.inclusion,
        };
        let (n, q) = m.shape();
        if len < n * q {
            return Err((DssStatus::Config, format!("buffer holds {len} values, need {}", n * q)));
        }
        let dst = std::slice::from_raw_parts_mut(buf, n * q);
        for t in 0..n {
            for j in 0..q {
                dst[t * q + j] = m[(t, j)];
            }
        }
        Ok(())
    })
}

/// Moments of a scalar parameter by name: "sigma2", or "tau2_j", "Q_j",
/// "phi_j", "omega11_j", "omega00_j" for predictor `j` (1-based).
///
/// # Safety
/// `fit` must be a live handle, `name` a NUL-terminated string and `out`
/// writable.
#[no_mangle]
pub unsafe extern "C" fn dss_fit_scalar(fit: *const DssFit, name: *const c_char, out: *mut DssMoments) -> DssStatus {
    guard(|| {
        let fit = fit.as_ref().ok_or_else(|| null("fit"))?;
        let name = c_str(name, "name")?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let m = fit
            .inner
            .summary
            .scalar(name)
            .ok_or_else(|| (DssStatus::Config, format!("unknown parameter '{name}'")))?;
        *out = DssMoments { mean: m.mean, median: m.median, lower: m.lower, upper: m.upper };
        Ok(())
    })
}

/// Metropolis-Hastings acceptance rates of predictor `j` (0-based): the AR
/// coefficient and the transition probabilities.
///
/// # Safety
/// `fit` must be a live handle; `phi` and `transition` writable.
#[no_mangle]
pub unsafe extern "C" fn dss_fit_acceptance(fit: *const DssFit, j: usize, phi: *mut f64, transition: *mut f64) -> DssStatus {
    guard(|| {
        let fit = fit.as_ref().ok_or_else(|| null("fit"))?;
        let s = &fit.inner.summary;
        if j >= s.phi_acceptance.len() {
            return Err((DssStatus::Config, format!("predictor {j} out of range")));
        }
        *phi.as_mut().ok_or_else(|| null("phi"))? = s.phi_acceptance[j];
        *transition.as_mut().ok_or_else(|| null("transition"))? = s.transition_acceptance[j];
        Ok(())
    })
}

/// # Safety
/// `fit` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dss_fit_free(fit: *mut DssFit) {
    if !fit.is_null() {
        drop(Box::from_raw(fit));
    }
}

//! C ABI over the `treepath` library.
//!
//! Every fallible function returns a [`TpStatus`] and writes its result
//! through an out-pointer. On failure the message is kept per thread and
//! can be read with [`tp_last_error_message`]. Laws, predictions and
//! simulated batches come back as opaque handles that the caller releases
//! with the matching `*_free` function. No panic crosses the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use treepath::exact::{self, IncreasingPrediction};
use treepath::montecarlo::{run_batch, BatchConfig, SampleBatch, Statistic};
use treepath::{dp, Error, ModelParams, Pmf};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TpStatus {
    Ok = 0,
    InvalidParam = 1,
    Overflow = 2,
    ScaleGuard = 3,
    WorkCapExceeded = 4,
    Numerical = 5,
    Undefined = 6,
    BatchFailed = 7,
    NullPointer = 8,
    Panic = 9,
}

/// Simulated statistic for [`tp_simulate`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TpStatistic {
    Theta = 0,
    Spanning = 1,
    LongestOpen = 2,
    LongestIncreasing = 3,
    IncreasingCount = 4,
}

impl From<TpStatistic> for Statistic {
    fn from(s: TpStatistic) -> Self {
        match s {
            TpStatistic::Theta => Statistic::Theta,
            TpStatistic::Spanning => Statistic::Spanning,
            TpStatistic::LongestOpen => Statistic::LongestOpen,
            TpStatistic::LongestIncreasing => Statistic::LongestIncreasing,
            TpStatistic::IncreasingCount => Statistic::IncreasingCount,
        }
    }
}

/// A finite law on the integers, support sorted ascending.
pub struct TpPmf {
    points: Vec<(i64, f64)>,
}

/// Window prediction for the longest increasing path.
pub struct TpPrediction {
    inner: IncreasingPrediction,
}

/// One seeded batch of simulated values, in replicate order.
pub struct TpBatch {
    inner: SampleBatch,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> TpStatus {
    match e {
        Error::InvalidParam { .. } => TpStatus::InvalidParam,
        Error::Overflow(_) => TpStatus::Overflow,
        Error::ScaleGuard { .. } => TpStatus::ScaleGuard,
        Error::WorkCapExceeded { .. } => TpStatus::WorkCapExceeded,
        Error::Numerical(_) => TpStatus::Numerical,
        Error::Undefined(_) => TpStatus::Undefined,
        Error::Batch { .. } => TpStatus::BatchFailed,
    }
}

struct Fail(TpStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(TpStatus::NullPointer, format!("{what} is NULL"))
}

/// Runs `f`, records any failure, and never lets a panic escape.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> TpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => TpStatus::Ok,
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
            TpStatus::Panic
        }
    }
}

/// Writes `value` through `out`.
///
/// # Safety
/// `out` must be NULL or valid for a write of `T`.
unsafe fn write<T>(out: *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    out.write(value);
    Ok(())
}

/// # Safety
/// `h` must be NULL or a live handle of type `T`.
unsafe fn handle<'a, T>(h: *const T) -> Result<&'a T, Fail> {
    h.as_ref().ok_or_else(|| null("handle"))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn tp_version() -> *const c_char {
    static VERSION: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(v) => v,
        Err(_) => panic!("version has no interior NUL"),
    };
    VERSION.as_ptr()
}

/// Message of the last failed call on this thread, or NULL. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn tp_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Limit of `P(Theta_n >= 1)` as `n` grows.
///
/// # Safety
/// `out` must be valid for a write of one double.
#[no_mangle]
pub unsafe extern "C" fn tp_survival_limit(branching: u32, p: f64, out: *mut f64) -> TpStatus {
    guard(|| write(out, exact::survival_limit(branching, p)?))
}

/// `E(Theta_n) = N^n p^(n+1)`.
///
/// # Safety
/// `out` must be valid for a write of one double.
#[no_mangle]
pub unsafe extern "C" fn tp_expected_theta(branching: u32, depth: u32, p: f64, out: *mut f64) -> TpStatus {
    guard(|| {
        let prm = ModelParams::new(branching, depth, p)?;
        write(out, exact::expected_theta(&prm)?)
    })
}

/// Expected number of open length-`k` paths.
///
/// # Safety
/// `out` must be valid for a write of one double.
#[no_mangle]
pub unsafe extern "C" fn tp_expected_open_count(branching: u32, depth: u32, p: f64, k: u32, out: *mut f64) -> TpStatus {
    guard(|| {
        let prm = ModelParams::new(branching, depth, p)?;
        write(out, exact::expected_open_count(&prm, k)?)
    })
}

/// Upper bound on the variance of the open length-`k` path count.
///
/// # Safety
/// `out` must be valid for a write of one double.
#[no_mangle]
pub unsafe extern "C" fn tp_variance_bound_open(branching: u32, depth: u32, p: f64, k: u32, out: *mut f64) -> TpStatus {
    guard(|| {
        let prm = ModelParams::new(branching, depth, p)?;
        write(out, exact::variance_bound_open(&prm, k)?)
    })
}

/// In-probability limit of `L_{N,n} / n`.
///
/// # Safety
/// `out` must be valid for a write of one double.
#[no_mangle]
pub unsafe extern "C" fn tp_lln_limit(branching: u32, p: f64, out: *mut f64) -> TpStatus {
    guard(|| write(out, exact::lln_limit(branching, p)?))
}

/// Expected number of increasing length-`k` paths.
///
/// # Safety
/// `out` must be valid for a write of one double.
#[no_mangle]
pub unsafe extern "C" fn tp_expected_increasing_count(branching: u32, depth: u32, k: u32, out: *mut f64) -> TpStatus {
    guard(|| {
        let prm = ModelParams::continuous(branching, depth)?;
        write(out, exact::expected_increasing_count(&prm, k)?)
    })
}

fn boxed_pmf(pmf: Pmf) -> *mut TpPmf {
    Box::into_raw(Box::new(TpPmf {
        points: pmf.iter().collect(),
    }))
}

/// Exact law of `Theta_n`.
///
/// # Safety
/// `out` must be valid for a write of one pointer.
#[no_mangle]
pub unsafe extern "C" fn tp_theta_pmf(branching: u32, depth: u32, p: f64, out: *mut *mut TpPmf) -> TpStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("output pointer"));
        }
        let law = dp::theta_pmf(&ModelParams::new(branching, depth, p)?)?;
        write(out, boxed_pmf(law))
    })
}

/// Exact law of the longest open run; -1 stands for "every vertex closed".
///
/// # Safety
/// `out` must be valid for a write of one pointer.
#[no_mangle]
pub unsafe extern "C" fn tp_longest_open_pmf(branching: u32, depth: u32, p: f64, out: *mut *mut TpPmf) -> TpStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("output pointer"));
        }
        let law = dp::longest_open_pmf(&ModelParams::new(branching, depth, p)?)?;
        write(out, boxed_pmf(law))
    })
}

/// Number of support points.
///
/// # Safety
/// `h` must be NULL or a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn tp_pmf_len(h: *const TpPmf) -> usize {
    h.as_ref().map_or(0, |h| h.points.len())
}

/// The `i`-th support point and its mass.
///
/// # Safety
/// `h` must be a live handle; `value` and `mass` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tp_pmf_entry(h: *const TpPmf, i: usize, value: *mut i64, mass: *mut f64) -> TpStatus {
    guard(|| {
        let h = handle(h)?;
        if value.is_null() || mass.is_null() {
            return Err(null("output pointer"));
        }
        let &(v, m) = h.points.get(i).ok_or_else(|| {
            Fail(
                TpStatus::InvalidParam,
                format!("index {i} out of range ({})", h.points.len()),
            )
        })?;
        write(value, v)?;
        write(mass, m)
    })
}

/// Mass at `value` (0 off the support, NaN for a NULL handle).
///
/// # Safety
/// `h` must be NULL or a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn tp_pmf_mass(h: *const TpPmf, value: i64) -> f64 {
    match h.as_ref() {
        None => f64::NAN,
        Some(h) => h
            .points
            .binary_search_by_key(&value, |&(v, _)| v)
            .map_or(0.0, |i| h.points[i].1),
    }
}

/// # Safety
/// `h` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tp_pmf_free(h: *mut TpPmf) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Three-value window prediction for the longest increasing path.
///
/// # Safety
/// `out` must be valid for a write of one pointer.
#[no_mangle]
pub unsafe extern "C" fn tp_window_prediction(branching: u32, depth: u32, out: *mut *mut TpPrediction) -> TpStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("output pointer"));
        }
        let inner = exact::increasing_window_prediction(branching, depth)?;
        write(out, Box::into_raw(Box::new(TpPrediction { inner })))
    })
}

/// `b`, `f` and the fractional part of `f`. Any output may be NULL.
///
/// # Safety
/// `h` must be a live handle; non-NULL outputs must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tp_prediction_centering(
    h: *const TpPrediction,
    b: *mut f64,
    f: *mut f64,
    frac: *mut f64,
) -> TpStatus {
    guard(|| {
        let h = &handle(h)?.inner;
        for (out, v) in [(b, h.b), (f, h.f), (frac, h.frac)] {
            if !out.is_null() {
                out.write(v);
            }
        }
        Ok(())
    })
}

/// The window `[f]-1, [f], [f]+1` and its predicted mass.
///
/// # Safety
/// `h` must be a live handle; all outputs must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tp_prediction_window(
    h: *const TpPrediction,
    low: *mut i64,
    mid: *mut i64,
    high: *mut i64,
    mass: *mut f64,
) -> TpStatus {
    guard(|| {
        let h = &handle(h)?.inner;
        write(low, h.window.0)?;
        write(mid, h.window.1)?;
        write(high, h.window.2)?;
        write(mass, h.window_mass)
    })
}

/// `lambda(k)`, defined for `k` in `[f]-2 ..= [f]+3`.
///
/// # Safety
/// `h` must be a live handle; `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn tp_prediction_lambda(h: *const TpPrediction, k: i64, out: *mut f64) -> TpStatus {
    guard(|| {
        let h = &handle(h)?.inner;
        let v = *h.lambda_at.get(&k).ok_or_else(|| {
            Fail(
                TpStatus::Undefined,
                format!("lambda({k}) is outside the tabulated range"),
            )
        })?;
        write(out, v)
    })
}

/// Predicted `P(L = k)` for `k` with a tabulated point mass.
///
/// # Safety
/// `h` must be a live handle; `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn tp_prediction_point_mass(h: *const TpPrediction, k: i64, out: *mut f64) -> TpStatus {
    guard(|| {
        let h = &handle(h)?.inner;
        let v = *h
            .point_masses
            .get(&k)
            .ok_or_else(|| Fail(TpStatus::Undefined, format!("no predicted mass at {k}")))?;
        write(out, v)
    })
}

/// # Safety
/// `h` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tp_prediction_free(h: *mut TpPrediction) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Draws `replicates` values of `stat`. Replicate `i` uses stream
/// `(seed, i)`, so the samples do not depend on `workers` (0 = all cores).
/// `p` is ignored by the increasing statistics; `k < 0` means "no length"
/// and is required exactly when `stat` is the increasing count.
///
/// # Safety
/// `out` must be valid for a write of one pointer.
#[no_mangle]
pub unsafe extern "C" fn tp_simulate(
    stat: TpStatistic,
    branching: u32,
    depth: u32,
    p: f64,
    k: i64,
    replicates: u64,
    seed: u64,
    workers: usize,
    out: *mut *mut TpBatch,
) -> TpStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("output pointer"));
        }
        let stat = Statistic::from(stat);
        let prm = if stat.needs_prob() {
            ModelParams::new(branching, depth, p)?
        } else {
            ModelParams::continuous(branching, depth)?
        };
        let k = match k {
            k if k < 0 => None,
            k => Some(u32::try_from(k).map_err(|_| Fail(TpStatus::InvalidParam, format!("k = {k} too large")))?),
        };
        let config = BatchConfig {
            workers,
            ..Default::default()
        };
        let inner = run_batch(&prm, stat, k, replicates, seed, &config)?;
        write(out, Box::into_raw(Box::new(TpBatch { inner })))
    })
}

/// Number of samples (0 for a NULL handle).
///
/// # Safety
/// `h` must be NULL or a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn tp_batch_len(h: *const TpBatch) -> usize {
    h.as_ref().map_or(0, |h| h.inner.samples.len())
}

/// Borrowed view of the samples, valid until the handle is freed.
///
/// # Safety
/// `h` must be NULL or a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn tp_batch_samples(h: *const TpBatch) -> *const i64 {
    h.as_ref().map_or(ptr::null(), |h| h.inner.samples.as_ptr())
}

/// Sample mean (NaN when empty or NULL).
///
/// # Safety
/// `h` must be NULL or a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn tp_batch_mean(h: *const TpBatch) -> f64 {
    h.as_ref().map_or(f64::NAN, |h| h.inner.mean())
}

/// # Safety
/// `h` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tp_batch_free(h: *mut TpBatch) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

//! C ABI for the evonet solver, simulators and tail fit.
//!
//! Every function returns an [`EvonetStatus`]; results go through out
//! pointers. Objects are opaque handles released by their `_free` function.
//! The message of the last failure on the calling thread is available from
//! [`evonet_last_error`]. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use evonet::analysis::{compare, fit_tail, KMinChoice, TailFitOptions, TailModel};
use evonet::kernels::{InitialDegreeLaw, KernelParams};
use evonet::sim::{pool_at, simulate, DegreeHistogram, SimConfig};
use evonet::solver::{solve_distribution, DegreeDistribution};
use evonet::Error;

/// Result code of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvonetStatus {
    Ok = 0,
    NullPointer = 1,
    /// Invalid parameters or configuration.
    InvalidArgument = 2,
    /// Solver, quadrature or fit failure.
    Numerical = 3,
    /// Simulation invariant or I/O failure.
    Runtime = 4,
    /// A caller buffer is shorter than required.
    BufferTooSmall = 5,
    /// The requested quantity does not exist for this object.
    Unavailable = 6,
    Panic = 7,
}

/// Solved stationary degree distribution.
pub struct EvonetDistribution {
    inner: DegreeDistribution,
}

/// Degree histogram, pooled over replicas when produced by a simulation.
pub struct EvonetHistogram {
    inner: DegreeHistogram,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn fail(status: EvonetStatus, message: impl Into<String>) -> EvonetStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = message.into());
    status
}

fn from_error(error: Error) -> EvonetStatus {
    let status = match error.exit_code() {
        evonet::error::EXIT_CONFIG => EvonetStatus::InvalidArgument,
        evonet::error::EXIT_NUMERICAL => EvonetStatus::Numerical,
        _ => EvonetStatus::Runtime,
    };
    fail(status, error.to_string())
}

/// Runs `body`, converting errors and panics into status codes.
fn guard(body: impl FnOnce() -> Result<(), EvonetStatus>) -> EvonetStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => EvonetStatus::Ok,
        Ok(Err(status)) => status,
        Err(_) => fail(EvonetStatus::Panic, "internal panic"),
    }
}

fn non_null<T>(p: *const T, name: &str) -> Result<(), EvonetStatus> {
    if p.is_null() {
        Err(fail(EvonetStatus::NullPointer, format!("{name} is null")))
    } else {
        Ok(())
    }
}

fn lift<T, E: Into<Error>>(r: Result<T, E>) -> Result<T, EvonetStatus> {
    r.map_err(|e| from_error(e.into()))
}

/// Copies the last error message of this thread into `buffer` as a
/// NUL-terminated string, truncating to `len - 1` bytes. Returns the full
/// message length excluding the terminator.
///
/// # Safety
/// `buffer` must be null or valid for `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn evonet_last_error(buffer: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buffer.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            // SAFETY: the caller guarantees `len` writable bytes at `buffer`.
            unsafe {
                ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buffer, n);
                *buffer.add(n) = 0;
            }
        }
        msg.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn evonet_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Solves for kernels `F+(k) = a k + b`, `F-(k) = abar k + bbar` and the
/// newborn law placing mass `probs[i]` on degree `degrees[i]`.
///
/// # Safety
/// `degrees` and `probs` must be valid for `len` reads; `out` must be valid
/// for one write.
#[no_mangle]
pub unsafe extern "C" fn evonet_solve(
    a: f64,
    b: f64,
    abar: f64,
    bbar: f64,
    degrees: *const usize,
    probs: *const f64,
    len: usize,
    out: *mut *mut EvonetDistribution,
) -> EvonetStatus {
    guard(|| {
        non_null(out, "out")?;
        non_null(degrees, "degrees")?;
        non_null(probs, "probs")?;
        // SAFETY: both arrays hold `len` elements by contract.
        let (ks, ps) = unsafe { (std::slice::from_raw_parts(degrees, len), std::slice::from_raw_parts(probs, len)) };
        let params = lift(KernelParams::new(a, b, abar, bbar))?;
        let law = lift(InitialDegreeLaw::from_pairs(ks.iter().copied().zip(ps.iter().copied())))?;
        let inner = lift(solve_distribution(&params, &law))?;
        // SAFETY: `out` is non-null and writable by contract.
        unsafe { *out = Box::into_raw(Box::new(EvonetDistribution { inner })) };
        Ok(())
    })
}

fn read_json(json: *const c_char) -> Result<&'static str, EvonetStatus> {
    non_null(json, "json")?;
    // SAFETY: non-null and NUL-terminated by contract; borrowed for this call only.
    unsafe { CStr::from_ptr(json) }.to_str().map_err(|_| fail(EvonetStatus::InvalidArgument, "json is not UTF-8"))
}

/// Solves the model preset given as JSON, for example
/// `{"variant": "ba-del", "m": 3, "m0": 4, "N0": 12}`.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn evonet_solve_preset_json(json: *const c_char, out: *mut *mut EvonetDistribution) -> EvonetStatus {
    guard(|| {
        non_null(out, "out")?;
        let preset: evonet::kernels::ModelPreset = lift(serde_json::from_str(read_json(json)?))?;
        let (params, law) = preset.kernels();
        let inner = lift(solve_distribution(&params, &law))?;
        // SAFETY: `out` is non-null and writable by contract.
        unsafe { *out = Box::into_raw(Box::new(EvonetDistribution { inner })) };
        Ok(())
    })
}

/// Releases a distribution; null is ignored.
///
/// # Safety
/// `dist` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn evonet_distribution_free(dist: *mut EvonetDistribution) {
    if !dist.is_null() {
        // SAFETY: created by `Box::into_raw` in this library.
        drop(unsafe { Box::from_raw(dist) });
    }
}

unsafe fn with_distribution<'a>(dist: *const EvonetDistribution) -> Result<&'a DegreeDistribution, EvonetStatus> {
    non_null(dist, "dist")?;
    // SAFETY: non-null handle from this library by contract.
    Ok(unsafe { &(*dist).inner })
}

fn write<T>(out: *mut T, value: T) -> Result<(), EvonetStatus> {
    non_null(out, "out")?;
    // SAFETY: non-null and writable by contract.
    unsafe { out.write(value) };
    Ok(())
}

/// Tail constant `C` with `P(k) = C g(k)` beyond the seam.
///
/// # Safety
/// `dist` must be a live handle; `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn evonet_distribution_tail_constant(dist: *const EvonetDistribution, out: *mut f64) -> EvonetStatus {
    guard(|| write(out, unsafe { with_distribution(dist) }?.tail_constant()))
}

/// Exponent `gamma` of a scale-free solution; `Unavailable` otherwise.
///
/// # Safety
/// `dist` must be a live handle; `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn evonet_distribution_gamma(dist: *const EvonetDistribution, out: *mut f64) -> EvonetStatus {
    guard(|| match unsafe { with_distribution(dist) }?.classification().gamma() {
        Some(g) => write(out, g),
        None => Err(fail(EvonetStatus::Unavailable, "distribution is not scale-free")),
    })
}

/// Asymptotic prefactor `c` in `P(k) ~ c k^-gamma`; `Unavailable` when absent.
///
/// # Safety
/// `dist` must be a live handle; `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn evonet_distribution_prefactor(dist: *const EvonetDistribution, out: *mut f64) -> EvonetStatus {
    guard(|| match unsafe { with_distribution(dist) }?.prefactor() {
        Some(c) => write(out, c),
        None => Err(fail(EvonetStatus::Unavailable, "no asymptotic prefactor")),
    })
}

/// Writes `P(0..=max_degree)` into `buffer`, which needs `max_degree + 1` slots.
///
/// # Safety
/// `dist` must be a live handle; `buffer` must be valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn evonet_distribution_pmf(
    dist: *const EvonetDistribution,
    max_degree: usize,
    buffer: *mut f64,
    len: usize,
) -> EvonetStatus {
    guard(|| {
        let dist = unsafe { with_distribution(dist) }?;
        non_null(buffer, "buffer")?;
        if len <= max_degree {
            return Err(fail(EvonetStatus::BufferTooSmall, format!("need {} slots, got {len}", max_degree + 1)));
        }
        let pmf = lift(dist.pmf(max_degree))?;
        // SAFETY: `buffer` holds at least `max_degree + 1` slots, checked above.
        unsafe { ptr::copy_nonoverlapping(pmf.as_ptr(), buffer, pmf.len()) };
        Ok(())
    })
}

/// Histogram from `counts[k]` nodes of degree `k`.
///
/// # Safety
/// `counts` must be valid for `len` reads; `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn evonet_histogram_new(counts: *const u64, len: usize, out: *mut *mut EvonetHistogram) -> EvonetStatus {
    guard(|| {
        non_null(counts, "counts")?;
        // SAFETY: `counts` holds `len` elements by contract.
        let counts = unsafe { std::slice::from_raw_parts(counts, len) }.to_vec();
        write(out, Box::into_raw(Box::new(EvonetHistogram { inner: DegreeHistogram::new(counts, 0) })))
    })
}

/// Runs the network simulation described by a JSON simulation config and
/// returns the histogram at the horizon, pooled over replicas.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn evonet_simulate_json(json: *const c_char, out: *mut *mut EvonetHistogram) -> EvonetStatus {
    guard(|| {
        non_null(out, "out")?;
        let config: SimConfig = lift(serde_json::from_str(read_json(json)?))?;
        let runs = lift(simulate(&config))?;
        let inner = pool_at(&runs, config.horizon).expect("the horizon is always a snapshot");
        write(out, Box::into_raw(Box::new(EvonetHistogram { inner })))
    })
}

/// Releases a histogram; null is ignored.
///
/// # Safety
/// `hist` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn evonet_histogram_free(hist: *mut EvonetHistogram) {
    if !hist.is_null() {
        // SAFETY: created by `Box::into_raw` in this library.
        drop(unsafe { Box::from_raw(hist) });
    }
}

unsafe fn with_histogram<'a>(hist: *const EvonetHistogram) -> Result<&'a DegreeHistogram, EvonetStatus> {
    non_null(hist, "hist")?;
    // SAFETY: non-null handle from this library by contract.
    Ok(unsafe { &(*hist).inner })
}

/// Number of degree slots of the histogram, `max degree + 1`.
///
/// # Safety
/// `hist` must be a live handle; `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn evonet_histogram_len(hist: *const EvonetHistogram, out: *mut usize) -> EvonetStatus {
    guard(|| write(out, unsafe { with_histogram(hist) }?.counts().len()))
}

/// Copies the counts into `buffer`, which needs `evonet_histogram_len` slots.
///
/// # Safety
/// `hist` must be a live handle; `buffer` must be valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn evonet_histogram_counts(hist: *const EvonetHistogram, buffer: *mut u64, len: usize) -> EvonetStatus {
    guard(|| {
        let counts = unsafe { with_histogram(hist) }?.counts();
        non_null(buffer, "buffer")?;
        if len < counts.len() {
            return Err(fail(EvonetStatus::BufferTooSmall, format!("need {} slots, got {len}", counts.len())));
        }
        // SAFETY: `buffer` holds at least `counts.len()` slots, checked above.
        unsafe { ptr::copy_nonoverlapping(counts.as_ptr(), buffer, counts.len()) };
        Ok(())
    })
}

/// Maximum-likelihood power-law fit over `k >= k_min`; with `k_min = 0` the
/// start is chosen by minimal KS distance from degree 1.
///
/// # Safety
/// `hist` must be a live handle; `gamma` and `std_err` must be valid for one write each.
#[no_mangle]
pub unsafe extern "C" fn evonet_fit_tail(
    hist: *const EvonetHistogram,
    k_min: usize,
    gamma: *mut f64,
    std_err: *mut f64,
) -> EvonetStatus {
    guard(|| {
        let hist = unsafe { with_histogram(hist) }?;
        non_null(gamma, "gamma")?;
        non_null(std_err, "std_err")?;
        let choice = if k_min == 0 { KMinChoice::Automated } else { KMinChoice::Fixed(k_min) };
        let fit = lift(fit_tail(hist, 1, TailFitOptions { k_min: choice, model: TailModel::PowerLaw }))?;
        write(gamma, fit.gamma)?;
        write(std_err, fit.std_err)
    })
}

/// Total variation and Kolmogorov distances between the distribution and
/// the histogram over degrees `0..=max_degree`, remaining mass pooled.
///
/// # Safety
/// Both handles must be live; `tv` and `kolmogorov` must be valid for one write each.
#[no_mangle]
pub unsafe extern "C" fn evonet_compare(
    dist: *const EvonetDistribution,
    hist: *const EvonetHistogram,
    max_degree: usize,
    tv: *mut f64,
    kolmogorov: *mut f64,
) -> EvonetStatus {
    guard(|| {
        let (dist, hist) = unsafe { (with_distribution(dist)?, with_histogram(hist)?) };
        non_null(tv, "tv")?;
        non_null(kolmogorov, "kolmogorov")?;
        let report = lift(compare(dist, hist, max_degree, TailFitOptions::default()))?;
        write(tv, report.tv_distance)?;
        write(kolmogorov, report.kolmogorov_distance)
    })
}

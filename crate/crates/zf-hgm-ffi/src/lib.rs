//! C ABI over the zf-hgm library: scenario handles, density evaluation,
//! outage, capacity, simulation, and the confluent hypergeometric kernel.
//!
//! Conventions: every fallible call returns a `ZfHgmStatus`; results travel
//! through out-pointers that are written only on `ZF_HGM_STATUS_OK`. A
//! failure stores a thread-local message retrievable with
//! `zf_hgm_last_error`. Handles are created and released exclusively by this
//! library; passing a handle to two threads at once is safe for read-only
//! calls (evaluation does not mutate).

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};

use rayon::prelude::*;
use zf_hgm::hgm::{HgmDensity, DEFAULT_U0};
use zf_hgm::measures::{
    ergodic_capacity, outage_probability, rayleigh_capacity, rayleigh_outage, rayleigh_pdf,
    RayleighDensity,
};
use zf_hgm::ode::IntegratorSettings;
use zf_hgm::scenario::{build_correlation, derive_params, ScenarioConfig};
use zf_hgm::Error;

/// Result discriminant for every fallible entry point.
#[repr(i32)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZfHgmStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// Configuration rejected (shape, ranges, JSON schema).
    InvalidConfig = 3,
    /// Mathematical domain violation (nonpositive t, bad parameters).
    Domain = 4,
    /// Underlying I/O failure (correlation file).
    Io = 5,
    /// Series truncation failed to converge where convergence is required.
    SeriesNotConverged = 6,
    /// Integrator or quadrature failure.
    Numerical = 7,
    /// An internal invariant was violated; the handle remains usable.
    Panic = 8,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn clear_error() {
    LAST_ERROR.with(|e| e.borrow_mut().clear());
}

fn status_of(err: &Error) -> ZfHgmStatus {
    match err {
        Error::InvalidConfig(_) => ZfHgmStatus::InvalidConfig,
        Error::Domain(_) => ZfHgmStatus::Domain,
        Error::Io(_) => ZfHgmStatus::Io,
        Error::SeriesNotConverged { .. } => ZfHgmStatus::SeriesNotConverged,
        _ => ZfHgmStatus::Numerical,
    }
}

fn fail(err: Error) -> ZfHgmStatus {
    let status = status_of(&err);
    set_error(err.to_string());
    status
}

/// Runs a body with panic isolation so an internal bug cannot unwind across
/// the C boundary.
fn guarded(body: impl FnOnce() -> ZfHgmStatus) -> ZfHgmStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic");
            ZfHgmStatus::Panic
        }
    }
}

enum Route {
    Hgm(HgmDensity),
    Rayleigh(RayleighDensity),
}

/// Opaque scenario handle: validated configuration, correlation matrix, and
/// the derived distribution parameters, ready for evaluation.
pub struct ZfHgmModel {
    cfg: ScenarioConfig,
    rt: zf_hgm::scenario::CorrelationMatrix,
    derived: zf_hgm::scenario::DerivedParams,
    route: Route,
}

impl ZfHgmModel {
    fn build(cfg: ScenarioConfig) -> Result<Self, Error> {
        cfg.validate()?;
        let rt = build_correlation(&cfg)?;
        let derived = derive_params(&cfg, &rt)?;
        let route = if derived.noncentrality > 0.0 {
            Route::Hgm(
                HgmDensity::new(derived, cfg.n_rx as u32)?
                    .with_numerics(DEFAULT_U0, IntegratorSettings::default())?,
            )
        } else {
            Route::Rayleigh(RayleighDensity::new(derived.dof, derived.gamma1)?)
        };
        Ok(ZfHgmModel {
            cfg,
            rt,
            derived,
            route,
        })
    }

    fn density(&self, t: f64) -> Result<f64, Error> {
        match &self.route {
            Route::Hgm(d) => d.density(t),
            Route::Rayleigh(d) => rayleigh_pdf(t, d.dof, d.gamma1),
        }
    }
}

/// Derived distribution parameters of a scenario.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct ZfHgmDerived {
    /// Diversity order N = n_rx - n_tx + 1.
    pub dof: u32,
    /// Rician K-factor, linear scale; 0 in the Rayleigh limit.
    pub k_linear: f64,
    /// Scale of the stream-1 SNR distribution, linear.
    pub gamma1: f64,
    /// Noncentrality a; 0 exactly in the Rayleigh limit.
    pub noncentrality: f64,
    /// Per-bit SNR in dB implied by the symbol SNR and constellation size.
    pub gamma_b_db: f64,
}

/// Ergodic capacity together with the quadrature bookkeeping.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct ZfHgmCapacity {
    /// Capacity in bits per channel use.
    pub bpcu: f64,
    /// Density mass beyond the integration cutoff, bounded by tail_tol.
    pub tail_mass_dropped: f64,
    /// Integration cutoff actually used, linear SNR.
    pub t_max: f64,
}

/// Summary statistics of one Monte Carlo run.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct ZfHgmSimSummary {
    /// Requested sample count.
    pub n_requested: u64,
    /// Draws rejected for numerically singular Gram matrices.
    pub rejected: u64,
    /// Sample mean of the stream-1 SNR, linear.
    pub mean_snr: f64,
    /// Sample mean of log2(1 + SNR).
    pub capacity_bpcu: f64,
    /// Empirical fraction of samples at or below the threshold.
    pub outage: f64,
}

unsafe fn model_ref<'a>(handle: *const ZfHgmModel) -> Option<&'a ZfHgmModel> {
    unsafe { handle.as_ref() }
}

/// Creates a handle for the built-in default scenario (6x2, K = 7 dB,
/// identity transmit correlation, symbol SNR 5 dB, QPSK).
///
/// # Safety
/// `out` must be a valid pointer; the returned handle must be released with
/// `zf_hgm_model_free`.
#[no_mangle]
pub unsafe extern "C" fn zf_hgm_model_default(out: *mut *mut ZfHgmModel) -> ZfHgmStatus {
    guarded(|| {
        if out.is_null() {
            set_error("out pointer is null");
            return ZfHgmStatus::NullPointer;
        }
        match ZfHgmModel::build(ScenarioConfig::default()) {
            Ok(m) => {
                clear_error();
                unsafe { *out = Box::into_raw(Box::new(m)) };
                ZfHgmStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Creates a handle from a JSON scenario document (same schema as the CLI
/// `--config` file).
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer; the
/// returned handle must be released with `zf_hgm_model_free`.
#[no_mangle]
pub unsafe extern "C" fn zf_hgm_model_from_json(
    json: *const c_char,
    out: *mut *mut ZfHgmModel,
) -> ZfHgmStatus {
    guarded(|| {
        if json.is_null() || out.is_null() {
            set_error("json or out pointer is null");
            return ZfHgmStatus::NullPointer;
        }
        let text = match unsafe { CStr::from_ptr(json) }.to_str() {
            Ok(t) => t,
            Err(_) => {
                set_error("json argument is not valid UTF-8");
                return ZfHgmStatus::InvalidUtf8;
            }
        };
        let cfg = match ScenarioConfig::from_json(text) {
            Ok(c) => c,
            Err(e) => return fail(e),
        };
        match ZfHgmModel::build(cfg) {
            Ok(m) => {
                clear_error();
                unsafe { *out = Box::into_raw(Box::new(m)) };
                ZfHgmStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Releases a handle. Passing null is a no-op.
///
/// # Safety
/// `handle` must have come from this library and not been freed before.
#[no_mangle]
pub unsafe extern "C" fn zf_hgm_model_free(handle: *mut ZfHgmModel) {
    if !handle.is_null() {
        drop(unsafe { Box::from_raw(handle) });
    }
}

/// Copies the derived distribution parameters of the scenario.
///
/// # Safety
/// `handle` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn zf_hgm_model_derived(
    handle: *const ZfHgmModel,
    out: *mut ZfHgmDerived,
) -> ZfHgmStatus {
    guarded(|| {
        let (model, out) = match (unsafe { model_ref(handle) }, unsafe { out.as_mut() }) {
            (Some(m), Some(o)) => (m, o),
            _ => {
                set_error("handle or out pointer is null");
                return ZfHgmStatus::NullPointer;
            }
        };
        let d = model.derived;
        *out = ZfHgmDerived {
            dof: d.dof,
            k_linear: d.k_linear,
            gamma1: d.gamma1,
            noncentrality: d.noncentrality,
            gamma_b_db: d.gamma_b_db,
        };
        clear_error();
        ZfHgmStatus::Ok
    })
}

/// Evaluates the stream-1 SNR density at one point t >= 0 (linear SNR).
///
/// # Safety
/// `handle` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn zf_hgm_pdf(
    handle: *const ZfHgmModel,
    t: f64,
    out: *mut f64,
) -> ZfHgmStatus {
    guarded(|| {
        let (model, out) = match (unsafe { model_ref(handle) }, unsafe { out.as_mut() }) {
            (Some(m), Some(o)) => (m, o),
            _ => {
                set_error("handle or out pointer is null");
                return ZfHgmStatus::NullPointer;
            }
        };
        match model.density(t) {
            Ok(v) => {
                *out = v;
                clear_error();
                ZfHgmStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Evaluates the density on `len` points in parallel. Points must be finite
/// and nonnegative; `out` must hold `len` doubles. On failure no element of
/// `out` is meaningful.
///
/// # Safety
/// `handle` must be a live handle; `ts` and `out` must point to `len`
/// readable respectively writable doubles.
#[no_mangle]
pub unsafe extern "C" fn zf_hgm_pdf_grid(
    handle: *const ZfHgmModel,
    ts: *const f64,
    len: usize,
    out: *mut f64,
) -> ZfHgmStatus {
    guarded(|| {
        if handle.is_null() || ts.is_null() || out.is_null() {
            set_error("handle, ts, or out pointer is null");
            return ZfHgmStatus::NullPointer;
        }
        let model = unsafe { &*handle };
        let points = unsafe { std::slice::from_raw_parts(ts, len) };
        let sink = unsafe { std::slice::from_raw_parts_mut(out, len) };
        let values: Result<Vec<f64>, Error> =
            points.par_iter().map(|&t| model.density(t)).collect();
        match values {
            Ok(v) => {
                sink.copy_from_slice(&v);
                clear_error();
                ZfHgmStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Outage probability P(SNR <= threshold), threshold in linear SNR.
/// `resolution` is the quadrature panel count (>= 100).
///
/// # Safety
/// `handle` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn zf_hgm_outage(
    handle: *const ZfHgmModel,
    threshold: f64,
    resolution: u32,
    out: *mut f64,
) -> ZfHgmStatus {
    guarded(|| {
        let (model, out) = match (unsafe { model_ref(handle) }, unsafe { out.as_mut() }) {
            (Some(m), Some(o)) => (m, o),
            _ => {
                set_error("handle or out pointer is null");
                return ZfHgmStatus::NullPointer;
            }
        };
        let result = match &model.route {
            Route::Hgm(d) => outage_probability(d, threshold, resolution as usize),
            Route::Rayleigh(d) => rayleigh_outage(threshold, d.dof, d.gamma1),
        };
        match result {
            Ok(v) => {
                *out = v;
                clear_error();
                ZfHgmStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Ergodic capacity E[log2(1 + SNR)] with tail mass below `tail_tol`
/// (<= 1e-6). `resolution` is the quadrature panel count (>= 100).
///
/// # Safety
/// `handle` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn zf_hgm_capacity(
    handle: *const ZfHgmModel,
    resolution: u32,
    tail_tol: f64,
    out: *mut ZfHgmCapacity,
) -> ZfHgmStatus {
    guarded(|| {
        let (model, out) = match (unsafe { model_ref(handle) }, unsafe { out.as_mut() }) {
            (Some(m), Some(o)) => (m, o),
            _ => {
                set_error("handle or out pointer is null");
                return ZfHgmStatus::NullPointer;
            }
        };
        let result = match &model.route {
            Route::Hgm(d) => ergodic_capacity(d, resolution as usize, tail_tol),
            Route::Rayleigh(d) => ergodic_capacity(d, resolution as usize, tail_tol),
        };
        match result {
            Ok(c) => {
                *out = ZfHgmCapacity {
                    bpcu: c.bpcu,
                    tail_mass_dropped: c.tail_mass_dropped,
                    t_max: c.t_max,
                };
                clear_error();
                ZfHgmStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Closed-form Rayleigh-limit capacity for a scenario with zero
/// noncentrality; errors with `ZF_HGM_STATUS_DOMAIN` otherwise.
///
/// # Safety
/// `handle` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn zf_hgm_rayleigh_capacity(
    handle: *const ZfHgmModel,
    out: *mut f64,
) -> ZfHgmStatus {
    guarded(|| {
        let (model, out) = match (unsafe { model_ref(handle) }, unsafe { out.as_mut() }) {
            (Some(m), Some(o)) => (m, o),
            _ => {
                set_error("handle or out pointer is null");
                return ZfHgmStatus::NullPointer;
            }
        };
        match &model.route {
            Route::Rayleigh(d) => match rayleigh_capacity(d.dof, d.gamma1) {
                Ok(v) => {
                    *out = v;
                    clear_error();
                    ZfHgmStatus::Ok
                }
                Err(e) => fail(e),
            },
            Route::Hgm(_) => {
                set_error("scenario has nonzero noncentrality; use zf_hgm_capacity");
                ZfHgmStatus::Domain
            }
        }
    })
}

/// Runs the Monte Carlo reference simulation and summarizes it. `threshold`
/// (linear SNR, > 0) selects the outage level reported in the summary.
/// Identical inputs produce identical summaries on every platform.
///
/// # Safety
/// `handle` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn zf_hgm_simulate(
    handle: *const ZfHgmModel,
    n_samples: u64,
    seed: u64,
    threshold: f64,
    out: *mut ZfHgmSimSummary,
) -> ZfHgmStatus {
    guarded(|| {
        if handle.is_null() || out.is_null() {
            set_error("handle or out pointer is null");
            return ZfHgmStatus::NullPointer;
        }
        if !(threshold > 0.0 && threshold.is_finite()) {
            set_error("threshold must be positive and finite");
            return ZfHgmStatus::Domain;
        }
        let model = unsafe { &*handle };
        let cfg = &model.cfg;
        let rt = &model.rt;
        match zf_hgm::montecarlo::simulate(cfg, rt, n_samples, 200, seed) {
            Ok(sim) => {
                let summary = ZfHgmSimSummary {
                    n_requested: sim.n_requested,
                    rejected: sim.rejected,
                    mean_snr: sim.mean_snr,
                    capacity_bpcu: sim.capacity_bpcu,
                    outage: sim.outage(threshold),
                };
                unsafe { *out = summary };
                clear_error();
                ZfHgmStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Confluent hypergeometric function 1F1(n; nr; sigma) for integer
/// parameters 0 < n <= nr, evaluated by series or ODE continuation,
/// whichever the argument calls for.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn zf_hgm_hyp1f1(
    n: u32,
    nr: u32,
    sigma: f64,
    out: *mut f64,
) -> ZfHgmStatus {
    guarded(|| {
        let out = match unsafe { out.as_mut() } {
            Some(o) => o,
            None => {
                set_error("out pointer is null");
                return ZfHgmStatus::NullPointer;
            }
        };
        match zf_hgm::special::hyp1f1(n, nr, sigma) {
            Ok(v) => {
                *out = v;
                clear_error();
                ZfHgmStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn zf_hgm_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Copies the current thread's last error message into `buf` (truncated to
/// `cap - 1` bytes, always NUL-terminated when `cap > 0`) and returns the
/// full message length in bytes, 0 when the last call on this thread
/// succeeded.
///
/// # Safety
/// `buf` must point to `cap` writable bytes, or be null with `cap == 0` to
/// query the length.
#[no_mangle]
pub unsafe extern "C" fn zf_hgm_last_error(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && cap > 0 {
            let n = bytes.len().min(cap - 1);
            unsafe {
                std::ptr::copy_nonoverlapping(bytes.as_ptr(), buf as *mut u8, n);
                *buf.add(n) = 0;
            }
        }
        bytes.len()
    })
}

//! C ABI for the simulation laboratory.
//!
//! Conventions: opaque handles own their Rust objects and must be released
//! with the matching `_free`; strings returned as `*mut c_char` are heap
//! allocations released with `simlab_string_free`; fallible calls return a
//! `SimlabStatus` and leave a message for `simlab_last_error`.

use simlab_core::canonical::{self, CorrectionSign};
use simlab_core::engine::{replica_rng, run_from, sample_initial};
use simlab_core::fields::{ObserverSet, TestFunction};
use simlab_core::harness::{run_experiment, ExperimentConfig};
use simlab_core::local_fn::LocalFunction;
use simlab_core::sector::{self, Gap};
use simlab_core::stats::experiments::{verify_model, ModelContext};
use simlab_core::{ModelSpec, SimError};
use std::cell::RefCell;
use std::ffi::{c_char, c_double, c_int, CStr, CString};
use std::path::Path;

/// Status codes of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimlabStatus {
    Ok = 0,
    /// A tolerance or acceptance gate failed.
    CriterionFailed = 1,
    /// Invalid input, configuration or model.
    InvalidInput = 2,
    /// Problem size exceeded an exact-solver budget.
    ResourceLimit = 3,
    /// Numerical failure (positivity loss, schedule drift).
    NumericalFailure = 4,
    /// The sector has a single state; no spectral gap exists.
    Degenerate = 5,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &SimError) -> SimlabStatus {
    match err {
        SimError::Resource(_) => SimlabStatus::ResourceLimit,
        SimError::Numerical(_) => SimlabStatus::NumericalFailure,
        _ => SimlabStatus::InvalidInput,
    }
}

/// Owner of a validated model and its derived transport structure.
pub struct SimlabModel {
    mctx: ModelContext,
}

unsafe fn cstr<'a>(ptr: *const c_char) -> Result<&'a str, SimlabStatus> {
    if ptr.is_null() {
        set_error("null string pointer");
        return Err(SimlabStatus::InvalidInput);
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| {
        set_error("string is not valid UTF-8");
        SimlabStatus::InvalidInput
    })
}

fn to_c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).unwrap_or_default().into_raw()
}

/// Crate version as a static string; never freed.
#[no_mangle]
pub extern "C" fn simlab_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Message of the most recent failure on this thread, or NULL. Valid until
/// the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn simlab_last_error() -> *const c_char {
    LAST_ERROR.with(|e| match &*e.borrow() {
        Some(c) => c.as_ptr(),
        None => std::ptr::null(),
    })
}

/// Release a string returned by this library.
///
/// # Safety
/// `ptr` must come from this library and must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn simlab_string_free(ptr: *mut c_char) {
    if !ptr.is_null() {
        drop(CString::from_raw(ptr));
    }
}

/// Build a model from its JSON description
/// `{"rate": {"window": [...], "table": [...]}, "asymmetry": a, "scale": n,
///   "density": rho, "ring_size": N, "horizon": T}`.
/// Returns NULL on error (see `simlab_last_error`).
///
/// # Safety
/// `spec_json` must be a valid NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn simlab_model_new(spec_json: *const c_char) -> *mut SimlabModel {
    let Ok(text) = cstr(spec_json) else { return std::ptr::null_mut() };
    let spec: ModelSpec = match serde_json::from_str(text) {
        Ok(s) => s,
        Err(e) => {
            set_error(&format!("cannot parse model spec: {e}"));
            return std::ptr::null_mut();
        }
    };
    match ModelContext::build(spec) {
        Ok(mctx) => Box::into_raw(Box::new(SimlabModel { mctx })),
        Err(e) => {
            set_error(&e.to_string());
            std::ptr::null_mut()
        }
    }
}

/// Release a model handle.
///
/// # Safety
/// `model` must come from `simlab_model_new` and must not be reused.
#[no_mangle]
pub unsafe extern "C" fn simlab_model_free(model: *mut SimlabModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Structural condition report as a JSON string (caller frees).
///
/// # Safety
/// `model` must be a live handle from `simlab_model_new`.
#[no_mangle]
pub unsafe extern "C" fn simlab_model_verify(model: *const SimlabModel) -> *mut c_char {
    if model.is_null() {
        set_error("null model handle");
        return std::ptr::null_mut();
    }
    let model = &*model;
    match verify_model(&model.mctx.spec) {
        Ok(report) => to_c_string(serde_json::to_string(&report).unwrap()),
        Err(e) => {
            set_error(&e.to_string());
            std::ptr::null_mut()
        }
    }
}

/// Exact canonical expectation of a local function (JSON) on the box
/// `{1..l}` with `k` particles.
///
/// # Safety
/// `f_json` must be a valid NUL-terminated string; `out` non-null.
#[no_mangle]
pub unsafe extern "C" fn simlab_canonical_expectation(
    f_json: *const c_char,
    ell: i64,
    k: i64,
    out: *mut c_double,
) -> SimlabStatus {
    let text = match cstr(f_json) {
        Ok(t) => t,
        Err(s) => return s,
    };
    let f: LocalFunction = match serde_json::from_str(text) {
        Ok(f) => f,
        Err(e) => {
            set_error(&format!("cannot parse local function: {e}"));
            return SimlabStatus::InvalidInput;
        }
    };
    match canonical::canonical_expectation(&f, ell, k) {
        Ok(v) => {
            *out = v;
            SimlabStatus::Ok
        }
        Err(e) => {
            set_error(&e.to_string());
            status_of(&e)
        }
    }
}

/// Max-over-k second-order equivalence-of-ensembles residual; `sign > 0`
/// uses the additive correction, `sign < 0` the subtractive one.
///
/// # Safety
/// `f_json` must be a valid NUL-terminated string; `out` non-null.
#[no_mangle]
pub unsafe extern "C" fn simlab_eoe_residual(
    f_json: *const c_char,
    ell: i64,
    sign: c_int,
    out: *mut c_double,
) -> SimlabStatus {
    let text = match cstr(f_json) {
        Ok(t) => t,
        Err(s) => return s,
    };
    let f: LocalFunction = match serde_json::from_str(text) {
        Ok(f) => f,
        Err(e) => {
            set_error(&format!("cannot parse local function: {e}"));
            return SimlabStatus::InvalidInput;
        }
    };
    let s = if sign >= 0 { CorrectionSign::Plus } else { CorrectionSign::Minus };
    match canonical::eoe_expansion_residual(&f, ell, s) {
        Ok(v) => {
            *out = v;
            SimlabStatus::Ok
        }
        Err(e) => {
            set_error(&e.to_string());
            status_of(&e)
        }
    }
}

/// Smallest nonzero eigenvalue of `-S` on the `(l, k)` sector.
///
/// # Safety
/// `rate_json` must be a valid NUL-terminated string; `out` non-null.
#[no_mangle]
pub unsafe extern "C" fn simlab_spectral_gap(
    ell: usize,
    k: usize,
    rate_json: *const c_char,
    out: *mut c_double,
) -> SimlabStatus {
    let text = match cstr(rate_json) {
        Ok(t) => t,
        Err(s) => return s,
    };
    let rate: LocalFunction = match serde_json::from_str(text) {
        Ok(f) => f,
        Err(e) => {
            set_error(&format!("cannot parse rate function: {e}"));
            return SimlabStatus::InvalidInput;
        }
    };
    match sector::spectral_gap(ell, k, &rate) {
        Ok(Gap::Value(g)) => {
            *out = g;
            SimlabStatus::Ok
        }
        Ok(Gap::Degenerate) => {
            set_error("sector is degenerate (single state)");
            SimlabStatus::Degenerate
        }
        Err(e) => {
            set_error(&e.to_string());
            status_of(&e)
        }
    }
}

/// Simulate one replica and return the density-field series `Y_t(u)`
/// sampled at `times` as JSON-lines (caller frees).
///
/// # Safety
/// `model` must be live; `times` must point at `n_times` doubles;
/// `test_function` a valid NUL-terminated name like `"hermite:0"`.
#[no_mangle]
pub unsafe extern "C" fn simlab_run_density_series(
    model: *const SimlabModel,
    master_seed: u64,
    replica: u64,
    times: *const c_double,
    n_times: usize,
    test_function: *const c_char,
) -> *mut c_char {
    if model.is_null() || times.is_null() {
        set_error("null argument");
        return std::ptr::null_mut();
    }
    let model = &*model;
    let name = match cstr(test_function) {
        Ok(t) => t,
        Err(_) => return std::ptr::null_mut(),
    };
    let u = match TestFunction::parse(name) {
        Ok(u) => u,
        Err(e) => {
            set_error(&e.to_string());
            return std::ptr::null_mut();
        }
    };
    let sample_times: Vec<f64> = std::slice::from_raw_parts(times, n_times).to_vec();
    let mut rng = replica_rng(master_seed, replica);
    let init = sample_initial(&model.mctx.spec, &mut rng);
    let mut obs = ObserverSet::new(model.mctx.field_ctx.clone(), replica);
    obs.probe_density("Y", u);
    if let Err(e) = run_from(&model.mctx.spec, init, &mut rng, &sample_times, &mut obs) {
        set_error(&e.to_string());
        return std::ptr::null_mut();
    }
    let lines: Vec<String> =
        obs.into_series().iter().flat_map(|s| s.jsonl_records()).collect();
    to_c_string(lines.join("\n"))
}

/// Run a full experiment from a configuration JSON, writing artifacts under
/// `out_dir`. Mirrors the CLI exit-code contract.
///
/// # Safety
/// Both pointers must be valid NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn simlab_experiment_run(
    config_json: *const c_char,
    out_dir: *const c_char,
) -> SimlabStatus {
    let config_text = match cstr(config_json) {
        Ok(t) => t,
        Err(s) => return s,
    };
    let dir = match cstr(out_dir) {
        Ok(t) => t,
        Err(s) => return s,
    };
    let cfg = match ExperimentConfig::from_json(config_text) {
        Ok(c) => c,
        Err(e) => {
            set_error(&e.to_string());
            return SimlabStatus::InvalidInput;
        }
    };
    match run_experiment(&cfg, Path::new(dir)) {
        Ok(outcome) if outcome.all_pass() => SimlabStatus::Ok,
        Ok(outcome) => {
            let failed: Vec<String> = outcome
                .criteria
                .iter()
                .filter(|c| !c.pass)
                .map(|c| c.name.clone())
                .collect();
            set_error(&format!("criteria failed: {}", failed.join("; ")));
            SimlabStatus::CriterionFailed
        }
        Err(e) => {
            set_error(&e.to_string());
            status_of(&e)
        }
    }
}

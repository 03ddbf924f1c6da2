//! C ABI for the carleson-lab numerical laboratory.
//!
//! Conventions:
//! - Every function returns a [`LabStatus`]; out-parameters are written only
//!   on `Ok` (and on `GateFailed`, which still produces a report).
//! - Strings returned through out-parameters are NUL-terminated, UTF-8, and
//!   owned by the caller: release them with [`lab_string_free`].
//! - Experiment handles are opaque: create with [`lab_experiment_new`],
//!   release with [`lab_experiment_free`].
//! - All entry points catch panics and turn them into
//!   [`LabStatus::InternalPanic`]; nothing unwinds across the boundary.
//! - On any non-`Ok` status, [`lab_last_error_message`] returns a
//!   description of the most recent failure on the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use carleson_lab::cli::{run, Command, ExperimentConfig};
use carleson_lab::geometry::{ConeSpec, LipschitzGraph, RootCube};
use carleson_lab::fields::ScalarField;
use carleson_lab::operators::cone::area_function;
use carleson_lab::operators::counting::{counting_function, CountingParams};
use carleson_lab::LabError;

/// Status codes returned by every entry point.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LabStatus {
    /// Success; out-parameters are valid.
    Ok = 0,
    /// The run completed and produced a report, but at least one gate
    /// failed. The report out-parameter is valid.
    GateFailed = 1,
    /// Invalid configuration, parameters, or precondition.
    InvalidInput = 2,
    /// File-system failure while loading referenced data.
    IoError = 3,
    /// A required pointer argument was null.
    NullArgument = 4,
    /// An internal panic was caught at the boundary.
    InternalPanic = 5,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: &str) {
    let mut bytes = msg.as_bytes().to_vec();
    bytes.retain(|&b| b != 0);
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = Some(CString::new(bytes).expect("NUL bytes removed"));
    });
}

fn status_of(err: &LabError) -> LabStatus {
    match err {
        LabError::Io { .. } => LabStatus::IoError,
        _ => LabStatus::InvalidInput,
    }
}

/// Shield a closure from unwinding; record panics as the last error.
fn shielded(f: impl FnOnce() -> LabStatus) -> LabStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic with non-string payload".to_string());
            set_error(&format!("internal panic: {msg}"));
            LabStatus::InternalPanic
        }
    }
}

/// # Safety
/// `ptr` must be null or a valid NUL-terminated string; returns `None` for
/// null or non-UTF-8 input (recording the error).
unsafe fn read_str<'a>(ptr: *const c_char, what: &str) -> Option<&'a str> {
    if ptr.is_null() {
        set_error(&format!("{what} is null"));
        return None;
    }
    match CStr::from_ptr(ptr).to_str() {
        Ok(s) => Some(s),
        Err(_) => {
            set_error(&format!("{what} is not valid UTF-8"));
            None
        }
    }
}

fn give_string(out: *mut *mut c_char, text: String) -> LabStatus {
    let mut bytes = text.into_bytes();
    bytes.retain(|&b| b != 0);
    let c = CString::new(bytes).expect("NUL bytes removed");
    unsafe { *out = c.into_raw() };
    LabStatus::Ok
}

fn parse_config(text: &str) -> Result<ExperimentConfig, LabStatus> {
    let config = ExperimentConfig::parse(text).map_err(|e| {
        set_error(&e.to_string());
        status_of(&e)
    })?;
    config.validate().map_err(|e| {
        set_error(&e.to_string());
        status_of(&e)
    })?;
    Ok(config)
}

/// A loaded experiment: parsed configuration plus the field and domain it
/// describes, ready for pointwise evaluation. Opaque to C.
pub struct LabExperiment {
    config: ExperimentConfig,
    field: ScalarField,
    graph: LipschitzGraph,
    root: RootCube,
}

/// Returns the most recent error message on this thread, or null if none.
/// The caller owns the string: free it with [`lab_string_free`].
#[no_mangle]
pub extern "C" fn lab_last_error_message() -> *mut c_char {
    LAST_ERROR.with(|slot| match &*slot.borrow() {
        Some(msg) => msg.clone().into_raw(),
        None => std::ptr::null_mut(),
    })
}

/// Releases a string returned by this library. Null is a no-op.
///
/// # Safety
/// `s` must be null or a pointer previously returned by this library and
/// not yet freed.
#[no_mangle]
pub unsafe extern "C" fn lab_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Runs one laboratory command (`"approximate"`, `"verify"`, `"classify"`,
/// `"fatou"`, `"goodlambda"`, or `"sweep"`) against a JSON or TOML
/// configuration and returns the report document as pretty-printed JSON.
/// Nothing is written to disk. Returns `Ok` when every gate passes,
/// `GateFailed` (with the report still written to `report_out`) otherwise.
///
/// # Safety
/// `config_text` and `command` must be valid NUL-terminated strings;
/// `report_out` must be a valid pointer. The returned string must be freed
/// with [`lab_string_free`].
#[no_mangle]
pub unsafe extern "C" fn lab_run(
    config_text: *const c_char,
    command: *const c_char,
    report_out: *mut *mut c_char,
) -> LabStatus {
    if report_out.is_null() {
        set_error("report_out is null");
        return LabStatus::NullArgument;
    }
    let Some(config_text) = read_str(config_text, "config_text") else {
        return LabStatus::NullArgument;
    };
    let Some(command) = read_str(command, "command") else {
        return LabStatus::NullArgument;
    };
    shielded(|| {
        let cmd = match command {
            "approximate" => Command::Approximate,
            "verify" => Command::Verify,
            "classify" => Command::Classify,
            "fatou" => Command::Fatou,
            "goodlambda" => Command::Goodlambda,
            "sweep" => Command::Sweep,
            other => {
                set_error(&format!("unknown command `{other}`"));
                return LabStatus::InvalidInput;
            }
        };
        let config = match parse_config(config_text) {
            Ok(c) => c,
            Err(status) => return status,
        };
        let artifacts = match run(&config, cmd) {
            Ok(a) => a,
            Err(e) => {
                set_error(&e.to_string());
                return status_of(&e);
            }
        };
        let text = serde_json::to_string_pretty(&artifacts.report)
            .expect("report serializes");
        let all_pass = artifacts.all_gates_pass();
        let status = give_string(report_out, text);
        if status == LabStatus::Ok && !all_pass {
            set_error("one or more gates failed; see the report");
            return LabStatus::GateFailed;
        }
        status
    })
}

/// Loads an experiment (configuration, field, domain) for pointwise
/// evaluation. On success writes an owned handle to `out`.
///
/// # Safety
/// `config_text` must be a valid NUL-terminated string and `out` a valid
/// pointer. The handle must be released with [`lab_experiment_free`].
#[no_mangle]
pub unsafe extern "C" fn lab_experiment_new(
    config_text: *const c_char,
    out: *mut *mut LabExperiment,
) -> LabStatus {
    if out.is_null() {
        set_error("out is null");
        return LabStatus::NullArgument;
    }
    let Some(config_text) = read_str(config_text, "config_text") else {
        return LabStatus::NullArgument;
    };
    shielded(|| {
        let config = match parse_config(config_text) {
            Ok(c) => c,
            Err(status) => return status,
        };
        let built = config.domain.graph().and_then(|graph| {
            let root = config.domain.root()?;
            let field = config.field.build()?;
            Ok(LabExperiment {
                config,
                field,
                graph,
                root,
            })
        });
        match built {
            Ok(exp) => {
                *out = Box::into_raw(Box::new(exp));
                LabStatus::Ok
            }
            Err(e) => {
                set_error(&e.to_string());
                status_of(&e)
            }
        }
    })
}

/// Releases an experiment handle. Null is a no-op.
///
/// # Safety
/// `exp` must be null or a handle returned by [`lab_experiment_new`] and
/// not yet freed.
#[no_mangle]
pub unsafe extern "C" fn lab_experiment_free(exp: *mut LabExperiment) {
    if !exp.is_null() {
        drop(Box::from_raw(exp));
    }
}

/// Evaluates the experiment's field at an ambient point.
///
/// # Safety
/// `exp` must be a live handle from [`lab_experiment_new`]; `out` must be a
/// valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lab_field_value(
    exp: *const LabExperiment,
    x: f64,
    y: f64,
    out: *mut f64,
) -> LabStatus {
    if exp.is_null() || out.is_null() {
        set_error("exp or out is null");
        return LabStatus::NullArgument;
    }
    let exp = &*exp;
    shielded(|| {
        *out = exp.field.u(x, y);
        LabStatus::Ok
    })
}

/// Square-functional estimate at the boundary point over `x`: the cone uses
/// the configuration's aperture, truncation height `upper`, and a local
/// quadrature lattice of resolution `upper / 2^depth`.
///
/// # Safety
/// `exp` must be a live handle from [`lab_experiment_new`]; `out` must be a
/// valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lab_area_function(
    exp: *const LabExperiment,
    x: f64,
    upper: f64,
    depth: u32,
    out: *mut f64,
) -> LabStatus {
    if exp.is_null() || out.is_null() {
        set_error("exp or out is null");
        return LabStatus::NullArgument;
    }
    let exp = &*exp;
    shielded(|| {
        let aperture = exp.config.aperture(&exp.graph);
        let cone = match ConeSpec::new(aperture, 0.0, upper) {
            Ok(c) => c,
            Err(e) => {
                set_error(&e.to_string());
                return status_of(&e);
            }
        };
        match area_function(&exp.field, &exp.graph, x, &cone, depth) {
            Ok(est) => {
                *out = est.value;
                LabStatus::Ok
            }
            Err(e) => {
                set_error(&e.to_string());
                status_of(&e)
            }
        }
    })
}

/// Oscillation-counting function at the boundary point over `x`, using the
/// configuration's counting parameters and aperture.
///
/// # Safety
/// `exp` must be a live handle from [`lab_experiment_new`]; `out` must be a
/// valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lab_counting_function(
    exp: *const LabExperiment,
    x: f64,
    out: *mut u32,
) -> LabStatus {
    if exp.is_null() || out.is_null() {
        set_error("exp or out is null");
        return LabStatus::NullArgument;
    }
    let exp = &*exp;
    shielded(|| {
        let params = CountingParams {
            r: exp.config.counting.r,
            eps: exp.config.counting.eps,
            beta: exp.config.counting.beta,
            aperture: exp.config.aperture(&exp.graph),
            depth: exp.config.counting.depth,
        };
        match counting_function(&exp.field, &exp.graph, x, &params) {
            Ok(n) => {
                *out = n;
                LabStatus::Ok
            }
            Err(e) => {
                set_error(&e.to_string());
                status_of(&e)
            }
        }
    })
}

/// Side length of the experiment's root cube (handy for pickers in C).
///
/// # Safety
/// `exp` must be a live handle from [`lab_experiment_new`]; `out` must be a
/// valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lab_root_side(
    exp: *const LabExperiment,
    out: *mut f64,
) -> LabStatus {
    if exp.is_null() || out.is_null() {
        set_error("exp or out is null");
        return LabStatus::NullArgument;
    }
    let exp = &*exp;
    *out = exp.root.side;
    LabStatus::Ok
}

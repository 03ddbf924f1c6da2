//! Exercises the C ABI from Rust: status codes, ownership rules, report
//! round-trips, and agreement of pointwise evaluators with closed forms.

use std::ffi::{CStr, CString};
use std::os::raw::c_char;
use std::ptr;

use carleson_lab_ffi::{
    lab_area_function, lab_counting_function, lab_experiment_free, lab_experiment_new,
    lab_field_value, lab_last_error_message, lab_root_side, lab_run, lab_string_free,
    LabExperiment, LabStatus,
};

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

/// Takes ownership of a library string, frees it, returns the copy.
unsafe fn take_string(ptr: *mut c_char) -> String {
    assert!(!ptr.is_null(), "expected a string, got null");
    let text = CStr::from_ptr(ptr).to_str().unwrap().to_string();
    lab_string_free(ptr);
    text
}

unsafe fn last_error() -> String {
    take_string(lab_last_error_message())
}

#[test]
fn null_arguments_are_rejected_not_crashed() {
    unsafe {
        let cmd = c("goodlambda");
        let cfg = c("{}");
        let mut out: *mut c_char = ptr::null_mut();

        assert_eq!(
            lab_run(ptr::null(), cmd.as_ptr(), &mut out),
            LabStatus::NullArgument
        );
        assert!(last_error().contains("config_text"));

        assert_eq!(
            lab_run(cfg.as_ptr(), ptr::null(), &mut out),
            LabStatus::NullArgument
        );

        assert_eq!(
            lab_run(cfg.as_ptr(), cmd.as_ptr(), ptr::null_mut()),
            LabStatus::NullArgument
        );

        let mut exp: *mut LabExperiment = ptr::null_mut();
        assert_eq!(
            lab_experiment_new(ptr::null(), &mut exp),
            LabStatus::NullArgument
        );
        assert_eq!(
            lab_experiment_new(cfg.as_ptr(), ptr::null_mut()),
            LabStatus::NullArgument
        );

        let mut value = 0.0f64;
        assert_eq!(
            lab_field_value(ptr::null(), 0.0, 0.5, &mut value),
            LabStatus::NullArgument
        );

        // Free functions accept null quietly.
        lab_string_free(ptr::null_mut());
        lab_experiment_free(ptr::null_mut());
    }
}

#[test]
fn malformed_config_reports_invalid_input() {
    unsafe {
        let cfg = c("{ this is not json or toml ::: }");
        let cmd = c("goodlambda");
        let mut out: *mut c_char = ptr::null_mut();
        assert_eq!(
            lab_run(cfg.as_ptr(), cmd.as_ptr(), &mut out),
            LabStatus::InvalidInput
        );
        assert!(out.is_null(), "no report on parse failure");
        assert!(!last_error().is_empty());
    }
}

#[test]
fn out_of_range_parameter_reports_invalid_input() {
    unsafe {
        let cfg = c(r#"{"k_blue": -2.0}"#);
        let cmd = c("goodlambda");
        let mut out: *mut c_char = ptr::null_mut();
        assert_eq!(
            lab_run(cfg.as_ptr(), cmd.as_ptr(), &mut out),
            LabStatus::InvalidInput
        );
        assert!(last_error().contains("k_blue"));
    }
}

#[test]
fn unknown_command_reports_invalid_input() {
    unsafe {
        let cfg = c("{}");
        let cmd = c("teleport");
        let mut out: *mut c_char = ptr::null_mut();
        assert_eq!(
            lab_run(cfg.as_ptr(), cmd.as_ptr(), &mut out),
            LabStatus::InvalidInput
        );
        assert!(last_error().contains("teleport"));
    }
}

#[test]
fn goodlambda_run_returns_versioned_report() {
    unsafe {
        let cfg = c("{}");
        let cmd = c("goodlambda");
        let mut out: *mut c_char = ptr::null_mut();
        let status = lab_run(cfg.as_ptr(), cmd.as_ptr(), &mut out);
        assert_eq!(status, LabStatus::Ok);
        let report: serde_json::Value =
            serde_json::from_str(&take_string(out)).expect("report is JSON");
        assert_eq!(report["version"], "1");
        assert_eq!(report["command"], "goodlambda");
        assert_eq!(report["passed"], true);
    }
}

#[test]
fn approximate_run_succeeds_on_small_config() {
    unsafe {
        let cfg = c(
            r#"{
                "field": {"name": "harmonic_sinexp"},
                "grid_depth": 7,
                "max_depth": 5,
                "epsilons": [0.2]
            }"#,
        );
        let cmd = c("approximate");
        let mut out: *mut c_char = ptr::null_mut();
        let status = lab_run(cfg.as_ptr(), cmd.as_ptr(), &mut out);
        assert_eq!(status, LabStatus::Ok, "err: {}", last_error());
        let report: serde_json::Value =
            serde_json::from_str(&take_string(out)).unwrap();
        assert_eq!(report["passed"], true);
        assert!(report["results"]["rows"].as_array().is_some());
    }
}

#[test]
fn failing_gate_surfaces_as_gate_failed_with_report() {
    // A very shallow stopping tree on a steeply-sloped field leaves most of
    // the window unresolved, so the unresolved-mass gate fails.
    unsafe {
        let cfg = c(
            r#"{
                "field": {"name": "coordinate_y"},
                "grid_depth": 5,
                "max_depth": 3,
                "epsilons": [0.05]
            }"#,
        );
        let cmd = c("approximate");
        let mut out: *mut c_char = ptr::null_mut();
        let status = lab_run(cfg.as_ptr(), cmd.as_ptr(), &mut out);
        assert_eq!(status, LabStatus::GateFailed);
        let report: serde_json::Value =
            serde_json::from_str(&take_string(out)).unwrap();
        assert_eq!(report["passed"], false);
        assert!(last_error().contains("gate"));
    }
}

#[test]
fn experiment_handle_evaluates_field_and_operators() {
    unsafe {
        // Flat boundary, u(x, y) = y: the square functional over a cone of
        // aperture a truncated at height t has the closed form t * sqrt(a).
        let cfg = c(r#"{"field": {"name": "coordinate_y"}}"#);
        let mut exp: *mut LabExperiment = ptr::null_mut();
        let status = lab_experiment_new(cfg.as_ptr(), &mut exp);
        assert_eq!(status, LabStatus::Ok, "err: {}", last_error());

        let mut side = 0.0f64;
        assert_eq!(lab_root_side(exp, &mut side), LabStatus::Ok);
        assert!(side > 0.0);

        let mut value = 0.0f64;
        assert_eq!(
            lab_field_value(exp, 0.25, 0.75, &mut value),
            LabStatus::Ok
        );
        assert_eq!(value, 0.75);

        // Default aperture on a flat graph is 0.5.
        let mut area = 0.0f64;
        assert_eq!(
            lab_area_function(exp, 0.5, 1.0, 9, &mut area),
            LabStatus::Ok,
            "err: {}",
            last_error()
        );
        let exact = 0.5f64.sqrt();
        assert!(
            (area - exact).abs() / exact < 0.01,
            "area {area} vs exact {exact}"
        );

        lab_experiment_free(exp);
    }
}

#[test]
fn counting_function_is_zero_for_constant_field() {
    unsafe {
        let cfg = c(r#"{"field": {"name": "constant", "params": {"c": 0.4}}}"#);
        let mut exp: *mut LabExperiment = ptr::null_mut();
        assert_eq!(lab_experiment_new(cfg.as_ptr(), &mut exp), LabStatus::Ok);

        let mut n = 7u32;
        assert_eq!(
            lab_counting_function(exp, 0.5, &mut n),
            LabStatus::Ok,
            "err: {}",
            last_error()
        );
        assert_eq!(n, 0, "a constant field never oscillates");

        lab_experiment_free(exp);
    }
}

#[test]
fn unknown_field_name_fails_handle_construction() {
    unsafe {
        let cfg = c(r#"{"field": {"name": "perpetual_motion"}}"#);
        let mut exp: *mut LabExperiment = ptr::null_mut();
        assert_eq!(
            lab_experiment_new(cfg.as_ptr(), &mut exp),
            LabStatus::InvalidInput
        );
        assert!(exp.is_null());
        assert!(last_error().contains("perpetual_motion"));
    }
}

#[test]
fn generated_header_exists_and_exports_the_api() {
    let header = std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("include")
        .join("carleson_lab.h");
    let text = std::fs::read_to_string(&header)
        .expect("build script generates include/carleson_lab.h");
    for symbol in [
        "lab_run",
        "lab_experiment_new",
        "lab_experiment_free",
        "lab_field_value",
        "lab_area_function",
        "lab_counting_function",
        "lab_root_side",
        "lab_last_error_message",
        "lab_string_free",
        "LAB_STATUS_GATE_FAILED",
    ] {
        assert!(text.contains(symbol), "header missing `{symbol}`");
    }
}

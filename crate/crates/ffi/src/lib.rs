//! C ABI over the model pipeline: build a model from a script, translate it,
//! simulate its log and score it against a log.
//!
//! Conventions:
//! - Every function returns a [`PowlStatus`]; results come back through
//!   out-pointers that are written only on success.
//! - Strings handed out are owned by the caller and released with
//!   [`powl_string_free`].
//! - On failure [`powl_last_error`] describes the problem. The pointer is
//!   valid until the next call on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use powlgen::conformance::evaluate_model;
use powlgen::diagnostics::{Severity, ValidationReport};
use powlgen::dsl;
use powlgen::powl::{auto_fix_reuse, ModelJson, Node};
use powlgen::semantics::{enumerate_variants, read_log, simulate_log, write_log, SimulationConfig};
use powlgen::translation::ExportFormat;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PowlStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    /// The script or reply did not yield a model.
    InvalidModel = 3,
    UnknownFormat = 4,
    Translation = 5,
    /// The event log could not be read or written.
    Log = 6,
    Internal = 7,
}

/// Opaque model handle.
pub struct PowlModel {
    node: Node,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

struct Failure(PowlStatus, String);

type FfiResult<T> = Result<T, Failure>;

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn run(f: impl FnOnce() -> FfiResult<()>) -> PowlStatus {
    set_error("");
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PowlStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal error");
            PowlStatus::Internal
        }
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> FfiResult<&'a str> {
    if p.is_null() {
        return Err(Failure(PowlStatus::NullArgument, format!("{what} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Failure(PowlStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn model<'a>(m: *const PowlModel) -> FfiResult<&'a Node> {
    m.as_ref().map(|m| &m.node).ok_or_else(|| Failure(PowlStatus::NullArgument, "model is null".into()))
}

fn check_out<T>(out: *mut T) -> FfiResult<()> {
    if out.is_null() {
        return Err(Failure(PowlStatus::NullArgument, "output pointer is null".into()));
    }
    Ok(())
}

unsafe fn put_string(out: *mut *mut c_char, s: String) -> FfiResult<()> {
    let c = CString::new(s).map_err(|_| Failure(PowlStatus::Internal, "output contains NUL".into()))?;
    *out = c.into_raw();
    Ok(())
}

fn report_text(report: &ValidationReport) -> String {
    report.diagnostics().iter().map(|d| d.to_string()).collect::<Vec<_>>().join("\n")
}

/// Accepts a model unless it has critical diagnostics; reuse is repaired.
fn accept(result: Result<dsl::Evaluated, ValidationReport>) -> FfiResult<Node> {
    match result {
        Ok(ev) if ev.report.has_severity(Severity::Adjustable) => Ok(auto_fix_reuse(&ev.model).0),
        Ok(ev) => Ok(ev.model),
        Err(report) => Err(Failure(PowlStatus::InvalidModel, report_text(&report))),
    }
}

unsafe fn put_model(out: *mut *mut PowlModel, node: Node) {
    *out = Box::into_raw(Box::new(PowlModel { node }));
}

/// Builds a model from a bare construction script.
///
/// # Safety
/// `script` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn powl_model_from_script(script: *const c_char, out: *mut *mut PowlModel) -> PowlStatus {
    run(|| {
        check_out(out)?;
        let script = text(script, "script")?;
        let ast = dsl::parse(script).map_err(|d| Failure(PowlStatus::InvalidModel, d.to_string()))?;
        let node = accept(dsl::evaluate(&ast))?;
        put_model(out, node);
        Ok(())
    })
}

/// Builds a model from an LLM reply; the first code block is used.
///
/// # Safety
/// As [`powl_model_from_script`].
#[no_mangle]
pub unsafe extern "C" fn powl_model_from_response(response: *const c_char, out: *mut *mut PowlModel) -> PowlStatus {
    run(|| {
        check_out(out)?;
        let node = accept(dsl::interpret(text(response, "response")?))?;
        put_model(out, node);
        Ok(())
    })
}

/// Diagnostics for a reply or script as a JSON array. The status is `OK`
/// whenever checking ran, even if the array reports critical problems.
///
/// # Safety
/// `response` must be a NUL-terminated string; `out_json` must be writable.
#[no_mangle]
pub unsafe extern "C" fn powl_validate(response: *const c_char, out_json: *mut *mut c_char) -> PowlStatus {
    run(|| {
        check_out(out_json)?;
        let report = match dsl::interpret(text(response, "response")?) {
            Ok(ev) => ev.report,
            Err(r) => r,
        };
        let doc = serde_json::to_string(report.diagnostics()).map_err(|e| Failure(PowlStatus::Internal, e.to_string()))?;
        put_string(out_json, doc)
    })
}

/// Releases a model. Null is ignored.
///
/// # Safety
/// `model` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn powl_model_free(model: *mut PowlModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// The canonical construction script for the model.
///
/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn powl_model_render(model: *const PowlModel, out: *mut *mut c_char) -> PowlStatus {
    run(|| {
        check_out(out)?;
        put_string(out, dsl::render(self::model(model)?))
    })
}

/// Serializes the model as `bpmn`, `pnml`, `script`, `dot` (Petri net) or
/// `json` (model tree).
///
/// # Safety
/// `model` must be a live handle; `format` a NUL-terminated string; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn powl_model_export(
    model: *const PowlModel,
    format: *const c_char,
    out: *mut *mut c_char,
) -> PowlStatus {
    run(|| {
        check_out(out)?;
        let node = self::model(model)?;
        let format = text(format, "format")?;
        let doc = if format == "json" {
            serde_json::to_string(&ModelJson::from_node(node)).map_err(|e| Failure(PowlStatus::Internal, e.to_string()))?
        } else {
            let f = ExportFormat::parse(format)
                .ok_or_else(|| Failure(PowlStatus::UnknownFormat, format!("unknown format '{format}'")))?;
            f.render(node).map_err(|e| Failure(PowlStatus::Translation, e.to_string()))?
        };
        put_string(out, doc)
    })
}

fn sim(loop_cap: usize) -> SimulationConfig {
    SimulationConfig { loop_cap, ..Default::default() }
}

/// Number of distinct traces with each loop repeated at most `loop_cap` times.
///
/// # Safety
/// `model` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn powl_variant_count(model: *const PowlModel, loop_cap: usize, out: *mut usize) -> PowlStatus {
    run(|| {
        check_out(out)?;
        let set = enumerate_variants(self::model(model)?, &sim(loop_cap));
        if set.truncated {
            return Err(Failure(PowlStatus::Log, "variant limit reached".into()));
        }
        *out = set.traces.len();
        Ok(())
    })
}

/// Event log with one case per trace variant, as CSV.
///
/// # Safety
/// `model` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn powl_simulate_log_csv(
    model: *const PowlModel,
    loop_cap: usize,
    out: *mut *mut c_char,
) -> PowlStatus {
    run(|| {
        check_out(out)?;
        let log = simulate_log(self::model(model)?, &sim(loop_cap)).map_err(|e| Failure(PowlStatus::Log, e.to_string()))?;
        put_string(out, write_log(&log).map_err(|e| Failure(PowlStatus::Log, e.to_string()))?)
    })
}

/// Fitness, precision and quality of the model against a CSV log.
///
/// # Safety
/// `model` must be a live handle; `log_csv` a NUL-terminated string; the three
/// outputs writable.
#[no_mangle]
pub unsafe extern "C" fn powl_evaluate_csv(
    model: *const PowlModel,
    log_csv: *const c_char,
    fitness: *mut f64,
    precision: *mut f64,
    quality: *mut f64,
) -> PowlStatus {
    run(|| {
        check_out(fitness)?;
        check_out(precision)?;
        check_out(quality)?;
        let node = self::model(model)?;
        let log = read_log(text(log_csv, "log")?).map_err(|e| Failure(PowlStatus::Log, e.to_string()))?;
        let r = evaluate_model(node, &log);
        *fitness = r.fitness;
        *precision = r.precision;
        *quality = r.quality;
        Ok(())
    })
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn powl_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Message for the last failed call on this thread; empty after a success.
#[no_mangle]
pub extern "C" fn powl_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version, statically allocated.
#[no_mangle]
pub extern "C" fn powl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ptr;

    const SCRIPT: &str = "a = gen.activity('A')\nb = gen.activity('B')\nc = gen.xor(a, b)\n\
                          d = gen.activity('D')\nfinal_model = gen.partial_order(dependencies=[(c, d)])";

    fn c(s: &str) -> CString {
        CString::new(s).unwrap()
    }

    unsafe fn take(p: *mut c_char) -> String {
        let s = CStr::from_ptr(p).to_str().unwrap().to_string();
        powl_string_free(p);
        s
    }

    unsafe fn last_error() -> String {
        CStr::from_ptr(powl_last_error()).to_str().unwrap().to_string()
    }

    unsafe fn load(script: &str) -> *mut PowlModel {
        let mut m = ptr::null_mut();
        assert_eq!(powl_model_from_script(c(script).as_ptr(), &mut m), PowlStatus::Ok);
        m
    }

    #[test]
    fn script_round_trip() {
        unsafe {
            let m = load(SCRIPT);
            let mut out = ptr::null_mut();
            assert_eq!(powl_model_render(m, &mut out), PowlStatus::Ok);
            let rendered = take(out);
            let again = load(&rendered);
            let mut out2 = ptr::null_mut();
            powl_model_render(again, &mut out2);
            assert_eq!(take(out2), rendered);
            powl_model_free(m);
            powl_model_free(again);
        }
    }

    #[test]
    fn invalid_script_reports_diagnostics() {
        unsafe {
            let mut m = ptr::null_mut();
            let st = powl_model_from_script(c("a = gen.activity('A')\nfinal_model = gen.xor(a)").as_ptr(), &mut m);
            assert_eq!(st, PowlStatus::InvalidModel);
            assert!(m.is_null());
            assert!(last_error().contains("XOR_ARITY"), "{}", last_error());
        }
    }

    #[test]
    fn reuse_is_repaired() {
        unsafe {
            let m = load("a = gen.activity('A')\nb = gen.activity('B')\nx = gen.xor(a, b)\n\
                          final_model = gen.partial_order(dependencies=[(x, a)])");
            let mut n = 0usize;
            assert_eq!(powl_variant_count(m, 2, &mut n), PowlStatus::Ok);
            assert_eq!(n, 2);
            powl_model_free(m);
        }
    }

    #[test]
    fn response_with_fences() {
        unsafe {
            let mut m = ptr::null_mut();
            let reply = c(&format!("Here it is:\n```python\n{SCRIPT}\n```\n"));
            assert_eq!(powl_model_from_response(reply.as_ptr(), &mut m), PowlStatus::Ok);
            let mut n = 0;
            powl_variant_count(m, 2, &mut n);
            assert_eq!(n, 2);
            powl_model_free(m);
        }
    }

    #[test]
    fn validate_returns_json() {
        unsafe {
            let mut out = ptr::null_mut();
            assert_eq!(powl_validate(c("final_model = gen.activity(").as_ptr(), &mut out), PowlStatus::Ok);
            let v: serde_json::Value = serde_json::from_str(&take(out)).unwrap();
            assert_eq!(v[0]["code"], "PARSE_ERROR");
        }
    }

    #[test]
    fn exports_and_unknown_format() {
        unsafe {
            let m = load(SCRIPT);
            for f in ["bpmn", "pnml", "script", "dot", "json"] {
                let mut out = ptr::null_mut();
                assert_eq!(powl_model_export(m, c(f).as_ptr(), &mut out), PowlStatus::Ok, "{f}");
                assert!(!take(out).is_empty());
            }
            let mut out = ptr::null_mut();
            assert_eq!(powl_model_export(m, c("svg").as_ptr(), &mut out), PowlStatus::UnknownFormat);
            assert!(out.is_null());
            assert!(last_error().contains("svg"));
            powl_model_free(m);
        }
    }

    #[test]
    fn simulate_then_score_is_perfect() {
        unsafe {
            let m = load(SCRIPT);
            let mut log = ptr::null_mut();
            assert_eq!(powl_simulate_log_csv(m, 2, &mut log), PowlStatus::Ok);
            let (mut f, mut p, mut q) = (0.0, 0.0, 0.0);
            assert_eq!(powl_evaluate_csv(m, log, &mut f, &mut p, &mut q), PowlStatus::Ok);
            powl_string_free(log);
            assert!((f - 1.0).abs() < 1e-9 && (p - 1.0).abs() < 1e-9 && (q - 1.0).abs() < 1e-9);
            powl_model_free(m);
        }
    }

    #[test]
    fn null_arguments() {
        unsafe {
            let mut m = ptr::null_mut();
            assert_eq!(powl_model_from_script(ptr::null(), &mut m), PowlStatus::NullArgument);
            assert_eq!(powl_model_from_script(c("x").as_ptr(), ptr::null_mut()), PowlStatus::NullArgument);
            let mut out = ptr::null_mut();
            assert_eq!(powl_model_render(ptr::null(), &mut out), PowlStatus::NullArgument);
            let (mut f, mut p, mut q) = (0.0, 0.0, 0.0);
            assert_eq!(powl_evaluate_csv(ptr::null(), ptr::null(), &mut f, &mut p, &mut q), PowlStatus::NullArgument);
            powl_model_free(ptr::null_mut());
            powl_string_free(ptr::null_mut());
        }
    }

    #[test]
    fn bad_log() {
        unsafe {
            let m = load(SCRIPT);
            let (mut f, mut p, mut q) = (0.0, 0.0, 0.0);
            let st = powl_evaluate_csv(m, c("no,header\n").as_ptr(), &mut f, &mut p, &mut q);
            assert_eq!(st, PowlStatus::Log);
            powl_model_free(m);
        }
    }

    #[test]
    fn error_cleared_on_success() {
        unsafe {
            let mut m = ptr::null_mut();
            powl_model_from_script(c("final_model = gen.activity(").as_ptr(), &mut m);
            assert!(!last_error().is_empty());
            let m = load(SCRIPT);
            assert!(last_error().is_empty());
            powl_model_free(m);
        }
    }

    #[test]
    fn version_string() {
        let v = unsafe { CStr::from_ptr(powl_version()) };
        assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
    }
}

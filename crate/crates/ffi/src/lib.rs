//! C ABI for the automode toolchain.
//!
//! Projects are opaque handles created by `am_project_parse` or by a
//! transformation and released with `am_project_free`. Every fallible call
//! returns an `AmStatus`; on failure `am_last_error` describes the cause.
//! Strings handed out by the library are NUL-terminated UTF-8 and must be
//! released with `am_string_free`.

use automode::analysis::{analyze, check, TargetProfile};
use automode::diag::{self, has_errors, Diagnostic};
use automode::frontend::{parse_str, serialize};
use automode::model::Project;
use automode::sim::{SimOptions, Simulator};
use automode::transform::{
    cluster_by_clock, export_manifest, flatten_to_ccd, mtd_to_dataflow, parse_refinement_map, refine_types,
    ClusterOptions, TransformError,
};
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AmStatus {
    Ok = 0,
    /// A required pointer argument was NULL.
    NullArgument = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// An argument value was rejected (unknown profile, bad map file).
    InvalidArgument = 3,
    /// The model has syntax or well-formedness errors.
    ModelError = 4,
    /// Simulation failed at run time.
    SimulationError = 5,
    /// A transformation rejected its input.
    TransformError = 6,
    /// An internal panic was caught at the boundary.
    Internal = 7,
}

/// Opaque project handle.
pub struct AmProject {
    project: Project,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

struct Fail(AmStatus, String);

impl Fail {
    fn model(diags: &[Diagnostic]) -> Self {
        Fail(AmStatus::ModelError, diag::render(diags).trim_end().to_string())
    }
}

impl From<TransformError> for Fail {
    fn from(e: TransformError) -> Self {
        match e {
            TransformError::InvalidSource(d) | TransformError::UncheckedDeployment(d) => Fail::model(&d),
            other => Fail(AmStatus::TransformError, other.to_string()),
        }
    }
}

/// Runs `f` behind the panic boundary and records the error message.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> AmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            AmStatus::Ok
        }
        Ok(Err(Fail(code, msg))) => {
            set_error(&msg);
            code
        }
        Err(_) => {
            set_error("internal error");
            AmStatus::Internal
        }
    }
}

/// # Safety
/// `s` is NULL or a valid NUL-terminated string.
unsafe fn text<'a>(s: *const c_char) -> Result<&'a str, Fail> {
    if s.is_null() {
        return Err(Fail(AmStatus::NullArgument, "string argument is NULL".into()));
    }
    CStr::from_ptr(s).to_str().map_err(|_| Fail(AmStatus::InvalidUtf8, "string argument is not UTF-8".into()))
}

/// # Safety
/// `p` is NULL or a handle returned by this library and not yet freed.
unsafe fn project<'a>(p: *const AmProject) -> Result<&'a Project, Fail> {
    p.as_ref().map(|h| &h.project).ok_or_else(|| Fail(AmStatus::NullArgument, "project handle is NULL".into()))
}

/// # Safety
/// `out` is NULL or valid for a pointer write.
unsafe fn put_string(out: *mut *mut c_char, s: String) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail(AmStatus::NullArgument, "output pointer is NULL".into()));
    }
    let c = CString::new(s).map_err(|_| Fail(AmStatus::Internal, "output contains NUL".into()))?;
    *out = c.into_raw();
    Ok(())
}

/// # Safety
/// `out` is NULL or valid for a pointer write.
unsafe fn put_project(out: *mut *mut AmProject, project: Project) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail(AmStatus::NullArgument, "output pointer is NULL".into()));
    }
    *out = Box::into_raw(Box::new(AmProject { project }));
    Ok(())
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn am_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or an empty string. The
/// pointer stays valid until the next call into the library on this thread.
#[no_mangle]
pub extern "C" fn am_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Releases a string returned by the library.
///
/// # Safety
/// `s` is NULL or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn am_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses DSL text into a new project handle.
///
/// # Safety
/// `source` is a NUL-terminated string; `out` is valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn am_project_parse(source: *const c_char, out: *mut *mut AmProject) -> AmStatus {
    guard(|| {
        let p = parse_str(text(source)?).map_err(|d| Fail::model(&d))?;
        put_project(out, p)
    })
}

/// Releases a project handle.
///
/// # Safety
/// `p` is NULL or a handle returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn am_project_free(p: *mut AmProject) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Writes the canonical DSL text of the project to `*out`.
///
/// # Safety
/// `p` is a live handle; `out` is valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn am_project_serialize(p: *const AmProject, out: *mut *mut c_char) -> AmStatus {
    guard(|| {
        let s = serialize(project(p)?).map_err(|e| Fail::model(&e.0))?;
        put_string(out, s)
    })
}

/// Runs every static check for the project's level under the named target
/// profile (`osek`, `strict` or `permissive`, NULL for `osek`). The rendered
/// diagnostics go to `*report`; the status is `MODEL_ERROR` when any of them
/// is an error.
///
/// # Safety
/// `p` is a live handle; `profile` is NULL or a NUL-terminated string;
/// `report` is valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn am_project_check(
    p: *const AmProject,
    profile: *const c_char,
    report: *mut *mut c_char,
) -> AmStatus {
    guard(|| {
        let name = if profile.is_null() { "osek" } else { text(profile)? };
        let prof = TargetProfile::by_name(name)
            .ok_or_else(|| Fail(AmStatus::InvalidArgument, format!("unknown profile '{name}'")))?;
        let diags = check(project(p)?, &prof);
        let rendered = diag::render(&diags);
        put_string(report, rendered.clone())?;
        if has_errors(&diags) {
            return Err(Fail(AmStatus::ModelError, rendered.trim_end().to_string()));
        }
        Ok(())
    })
}

/// Simulates the system component on an input trace (CSV) and writes the
/// output trace to `*out`. `ticks == 0` runs for the length of the input.
///
/// # Safety
/// `p` is a live handle; `inputs_csv` is a NUL-terminated string; `out` is
/// valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn am_project_simulate(
    p: *const AmProject,
    inputs_csv: *const c_char,
    ticks: usize,
    out: *mut *mut c_char,
) -> AmStatus {
    guard(|| {
        let p = project(p)?;
        let csv = text(inputs_csv)?;
        let an = analyze(p).map_err(|d| Fail::model(&d))?;
        let sim_err = |e: automode::sim::SimError| Fail(AmStatus::SimulationError, e.to_string());
        let mut sim = Simulator::new(p, &an, None, SimOptions::default()).map_err(sim_err)?;
        let input = sim.parse_inputs(csv).map_err(sim_err)?;
        let n = if ticks == 0 { input.len() } else { ticks };
        let trace = sim.run(&input, n).map_err(sim_err)?;
        put_string(out, trace.to_csv())
    })
}

/// Replaces the named MTD component by an equivalent dataflow network.
///
/// # Safety
/// `p` is a live handle; `component` is a NUL-terminated string; `out` is
/// valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn am_transform_mtd_to_dataflow(
    p: *const AmProject,
    component: *const c_char,
    expose_mode_port: bool,
    out: *mut *mut AmProject,
) -> AmStatus {
    guard(|| {
        let q = mtd_to_dataflow(project(p)?, text(component)?, expose_mode_port)?;
        put_project(out, q)
    })
}

/// Dissolves `depth` levels of the system hierarchy into one network.
///
/// # Safety
/// `p` is a live handle; `out` is valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn am_transform_flatten(p: *const AmProject, depth: usize, out: *mut *mut AmProject) -> AmStatus {
    guard(|| {
        let q = flatten_to_ccd(project(p)?, depth)?;
        put_project(out, q)
    })
}

/// Refines abstract types by the given refinement map text. Warnings, if
/// any, go to `*report` (may be NULL to discard them).
///
/// # Safety
/// `p` is a live handle; `map` is a NUL-terminated string; `report` is NULL
/// or valid for a pointer write; `out` is valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn am_transform_refine(
    p: *const AmProject,
    map: *const c_char,
    report: *mut *mut c_char,
    out: *mut *mut AmProject,
) -> AmStatus {
    guard(|| {
        let m = parse_refinement_map(text(map)?).map_err(|e| Fail(AmStatus::InvalidArgument, e.to_string()))?;
        let (q, diags) = refine_types(project(p)?, &m)?;
        if !report.is_null() {
            put_string(report, diag::render(&diags))?;
        }
        put_project(out, q)
    })
}

/// Groups the system network into one cluster per rate.
///
/// # Safety
/// `p` is a live handle; `report` is NULL or valid for a pointer write;
/// `out` is valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn am_transform_cluster(
    p: *const AmProject,
    insert_delays: bool,
    report: *mut *mut c_char,
    out: *mut *mut AmProject,
) -> AmStatus {
    guard(|| {
        let (q, diags) = cluster_by_clock(project(p)?, ClusterOptions { insert_delays })?;
        if !report.is_null() {
            put_string(report, diag::render(&diags))?;
        }
        put_project(out, q)
    })
}

/// Writes the deployment manifest of a deployed project to `*out`.
///
/// # Safety
/// `p` is a live handle; `out` is valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn am_project_manifest(p: *const AmProject, out: *mut *mut c_char) -> AmStatus {
    guard(|| {
        let m = export_manifest(project(p)?)?;
        put_string(out, m.render())
    })
}

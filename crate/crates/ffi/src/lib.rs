//! C ABI for the rescov engine.
//!
//! Objects cross the boundary as opaque handles that the caller frees with
//! the matching `*_free` function. Every fallible call returns a
//! [`RescovStatus`]; on failure a message is available from
//! [`rescov_last_error`] until the next failing call on the same thread.
//! Strings returned by the library are owned by the caller and must be
//! released with [`rescov_string_free`].
//!
//! Panics never unwind across the boundary; they surface as
//! [`RescovStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use rescov::harness::cli::PlanInput;
use rescov::harness::output::write_outputs;
use rescov::harness::{simulate, ScenarioConfig, SimOutput};
use rescov::network::energy_level;
use rescov::planner::min_time_return;
use rescov::rigidity::{is_ibr, Configuration, Framework, Graph};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RescovStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidUtf8 = 3,
    ParseError = 4,
    /// The computation ran but reported a failure (e.g. an aborted run or an
    /// unreachable base).
    Failed = 5,
    Io = 6,
    /// The simulation handle has not been run yet.
    NotRun = 7,
    Panic = 8,
}

/// Opaque framework handle.
pub struct RescovFramework(Framework);

/// Opaque simulation handle: a scenario and, after a run, its results.
pub struct RescovSimulation {
    config: ScenarioConfig,
    output: Option<SimOutput>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

type Outcome = Result<(), (RescovStatus, String)>;

fn guard(f: impl FnOnce() -> Outcome) -> RescovStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => RescovStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            RescovStatus::Panic
        }
    }
}

fn invalid(e: impl ToString) -> (RescovStatus, String) {
    (RescovStatus::InvalidArgument, e.to_string())
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, (RescovStatus, String)> {
    if p.is_null() {
        return Err((RescovStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (RescovStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

fn out_ptr<T>(p: *mut T, what: &str) -> Result<(), (RescovStatus, String)> {
    if p.is_null() {
        Err((RescovStatus::NullPointer, format!("{what} is null")))
    } else {
        Ok(())
    }
}

fn c_string(s: String) -> Result<*mut c_char, (RescovStatus, String)> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|e| (RescovStatus::Failed, e.to_string()))
}

/// Message of the last failing call on this thread, or NULL. The pointer is
/// owned by the library and stays valid until the next failing call.
#[no_mangle]
pub extern "C" fn rescov_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Releases a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed already.
#[no_mangle]
pub unsafe extern "C" fn rescov_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Energy level (1 highest to 4 lowest) of a state of charge in `[0, 1]`.
///
/// # Safety
/// `out_level` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rescov_energy_level(soc: f64, out_level: *mut u8) -> RescovStatus {
    guard(|| {
        out_ptr(out_level, "out_level")?;
        let level = energy_level(soc).map_err(invalid)?;
        *out_level = level.get();
        Ok(())
    })
}

/// Builds a planar framework from `n` points given as `xy = [x0, y0, x1, ...]`
/// and `m` edges given as `edges = [i0, j0, i1, j1, ...]`.
///
/// # Safety
/// `xy` must hold `2 * n` doubles, `edges` must hold `2 * m` indices (it may
/// be NULL when `m == 0`) and `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rescov_framework_new(
    xy: *const f64,
    n: usize,
    edges: *const usize,
    m: usize,
    out: *mut *mut RescovFramework,
) -> RescovStatus {
    guard(|| {
        out_ptr(out, "out")?;
        if xy.is_null() || (m > 0 && edges.is_null()) {
            return Err((
                RescovStatus::NullPointer,
                "coordinate or edge array is null".into(),
            ));
        }
        let coords = std::slice::from_raw_parts(xy, 2 * n);
        let points: Vec<[f64; 2]> = coords.chunks_exact(2).map(|c| [c[0], c[1]]).collect();
        let pairs: Vec<(usize, usize)> = if m == 0 {
            Vec::new()
        } else {
            std::slice::from_raw_parts(edges, 2 * m)
                .chunks_exact(2)
                .map(|e| (e[0], e[1]))
                .collect()
        };
        let config = Configuration::from_xy(&points).map_err(invalid)?;
        let graph = Graph::from_edges(n, &pairs).map_err(invalid)?;
        let fw = Framework::new(graph, config).map_err(invalid)?;
        *out = Box::into_raw(Box::new(RescovFramework(fw)));
        Ok(())
    })
}

/// # Safety
/// `fw` must come from [`rescov_framework_new`] or be NULL.
#[no_mangle]
pub unsafe extern "C" fn rescov_framework_free(fw: *mut RescovFramework) {
    if !fw.is_null() {
        drop(Box::from_raw(fw));
    }
}

/// Infinitesimal bearing rigidity test. Writes the verdict and the numerical
/// rank of the bearing rigidity matrix; either output may be NULL.
///
/// # Safety
/// `fw` must be a live handle; non-NULL outputs must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rescov_framework_is_ibr(
    fw: *const RescovFramework,
    tol: f64,
    out_rigid: *mut bool,
    out_rank: *mut usize,
) -> RescovStatus {
    guard(|| {
        let fw = fw
            .as_ref()
            .ok_or((RescovStatus::NullPointer, "framework is null".to_string()))?;
        let report = is_ibr(&fw.0, tol).map_err(invalid)?;
        if !out_rigid.is_null() {
            *out_rigid = report.rigid;
        }
        if !out_rank.is_null() {
            *out_rank = report.rank;
        }
        Ok(())
    })
}

/// Parses and validates a scenario (the same JSON the CLI accepts).
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rescov_simulation_from_json(
    json: *const c_char,
    out: *mut *mut RescovSimulation,
) -> RescovStatus {
    guard(|| {
        out_ptr(out, "out")?;
        let text = str_arg(json, "json")?;
        let config = ScenarioConfig::from_json(text)
            .map_err(|e| (RescovStatus::ParseError, e.to_string()))?;
        *out = Box::into_raw(Box::new(RescovSimulation {
            config,
            output: None,
        }));
        Ok(())
    })
}

/// # Safety
/// `sim` must come from [`rescov_simulation_from_json`] or be NULL.
#[no_mangle]
pub unsafe extern "C" fn rescov_simulation_free(sim: *mut RescovSimulation) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

/// Runs the scenario. Returns `Failed` if the run aborted; the partial
/// results stay available on the handle either way.
///
/// # Safety
/// `sim` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn rescov_simulation_run(sim: *mut RescovSimulation) -> RescovStatus {
    guard(|| {
        let sim = sim
            .as_mut()
            .ok_or((RescovStatus::NullPointer, "simulation is null".to_string()))?;
        let output = simulate(&sim.config).map_err(invalid)?;
        let fatal = output.summary.fatal.clone();
        sim.output = Some(output);
        match fatal {
            Some(msg) => Err((RescovStatus::Failed, msg)),
            None => Ok(()),
        }
    })
}

unsafe fn finished<'a>(
    sim: *const RescovSimulation,
) -> Result<&'a SimOutput, (RescovStatus, String)> {
    let sim = sim
        .as_ref()
        .ok_or((RescovStatus::NullPointer, "simulation is null".to_string()))?;
    sim.output.as_ref().ok_or((
        RescovStatus::NotRun,
        "simulation has not been run".to_string(),
    ))
}

/// Lowest state of charge reached by any robot.
///
/// # Safety
/// `sim` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rescov_simulation_min_soc(
    sim: *const RescovSimulation,
    out: *mut f64,
) -> RescovStatus {
    guard(|| {
        out_ptr(out, "out")?;
        *out = finished(sim)?.summary.min_soc;
        Ok(())
    })
}

/// Run summary as a JSON string; free it with [`rescov_string_free`].
///
/// # Safety
/// `sim` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rescov_simulation_summary_json(
    sim: *const RescovSimulation,
    out: *mut *mut c_char,
) -> RescovStatus {
    guard(|| {
        out_ptr(out, "out")?;
        let text = serde_json::to_string(&finished(sim)?.summary).map_err(invalid)?;
        *out = c_string(text)?;
        Ok(())
    })
}

/// Writes trace, events, summary, config and plots into `dir`.
///
/// # Safety
/// `sim` must be a live handle and `dir` a NUL-terminated path.
#[no_mangle]
pub unsafe extern "C" fn rescov_simulation_write_outputs(
    sim: *const RescovSimulation,
    dir: *const c_char,
) -> RescovStatus {
    guard(|| {
        let dir = str_arg(dir, "dir")?;
        let output = finished(sim)?;
        let config = &(*sim).config;
        write_outputs(output, config, Path::new(dir))
            .map(|_| ())
            .map_err(|e| (RescovStatus::Io, e.to_string()))
    })
}

/// Minimum-time return plan. Takes the `plan-return` input JSON and writes
/// the plan as JSON; free it with [`rescov_string_free`]. An unreachable
/// base yields `Failed`.
///
/// # Safety
/// `input_json` must be a NUL-terminated string and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rescov_plan_return_json(
    input_json: *const c_char,
    out: *mut *mut c_char,
) -> RescovStatus {
    guard(|| {
        out_ptr(out, "out")?;
        let text = str_arg(input_json, "input_json")?;
        let req: PlanInput =
            serde_json::from_str(text).map_err(|e| (RescovStatus::ParseError, e.to_string()))?;
        req.scenario
            .validate()
            .map_err(|e| (RescovStatus::ParseError, e.to_string()))?;
        let plan = min_time_return(
            &req.state,
            &req.scenario.robot_model(),
            &req.obstacles,
            &req.scenario.planner_params(),
        )
        .map_err(|e| match e {
            rescov::planner::PlanError::Unreachable { .. } => (RescovStatus::Failed, e.to_string()),
            e => invalid(e),
        })?;
        *out = c_string(serde_json::to_string(&plan).map_err(invalid)?)?;
        Ok(())
    })
}

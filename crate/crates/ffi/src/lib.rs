//! C ABI over `gvf-core`.
//!
//! Paths and simulators are opaque heap handles created by `gvf_*_new`
//! style functions and released with the matching `*_free`. Every call
//! returns a [`GvfStatus`]; on failure a message is kept per thread and can
//! be read with [`gvf_last_error_message`]. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path as FsPath;
use std::ptr;

use gvf_core::analysis::AnalysisConfig;
use gvf_core::scenario::{run_scenario, Scenario};
use gvf_core::sim::Simulator;
use gvf_core::{
    find_critical_points, guiding_field, make_path, ControllerConfig, ErrorMap, GvfParams, Path, PathSpec, Pose,
    SimConfig, TerminationKind,
};

/// Result code of every exported function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GvfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    /// The field is undefined at the queried point.
    Degenerate = 3,
    /// A scenario file failed to load, parse or validate.
    Config = 4,
    Io = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GvfTermination {
    ConvergedToPath = 0,
    ReachedCriticalSet = 1,
    Timeout = 2,
    LeftDomain = 3,
    GuidanceInfeasible = 4,
}

impl From<TerminationKind> for GvfTermination {
    fn from(k: TerminationKind) -> Self {
        match k {
            TerminationKind::ConvergedToPath => GvfTermination::ConvergedToPath,
            TerminationKind::ReachedCriticalSet => GvfTermination::ReachedCriticalSet,
            TerminationKind::Timeout => GvfTermination::Timeout,
            TerminationKind::LeftDomain => GvfTermination::LeftDomain,
            TerminationKind::GuidanceInfeasible => GvfTermination::GuidanceInfeasible,
        }
    }
}

/// Final state of one closed-loop run.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GvfRunResult {
    pub termination: GvfTermination,
    pub t_final: f64,
    pub x: f64,
    pub y: f64,
    pub alpha: f64,
    /// Tracking error at the final sample.
    pub e: f64,
    /// Distance to the path at the final sample.
    pub distance: f64,
    /// Number of recorded samples.
    pub samples: usize,
}

/// Opaque path handle.
pub struct GvfPath {
    path: Path,
}

/// Opaque GVF simulator handle: a path, gains and step settings.
pub struct GvfSimulator {
    path: Path,
    params: GvfParams,
    config: SimConfig,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn fail(status: GvfStatus, msg: impl Into<String>) -> GvfStatus {
    set_error(msg);
    status
}

/// Runs `body` with panics turned into [`GvfStatus::Panic`] and clears the
/// last error on success.
fn guarded(body: impl FnOnce() -> GvfStatus) -> GvfStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(GvfStatus::Ok) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            GvfStatus::Ok
        }
        Ok(status) => status,
        Err(_) => fail(GvfStatus::Panic, "internal panic"),
    }
}

/// Message of the last failed call on this thread, or NULL. The pointer
/// stays valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn gvf_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

fn new_path(spec: PathSpec, out: *mut *mut GvfPath) -> GvfStatus {
    guarded(|| {
        if out.is_null() {
            return fail(GvfStatus::NullPointer, "out is NULL");
        }
        match make_path(spec) {
            Ok(path) => {
                // SAFETY: `out` is non-null and the caller guarantees it is writable.
                unsafe { *out = Box::into_raw(Box::new(GvfPath { path })) };
                GvfStatus::Ok
            }
            Err(e) => fail(GvfStatus::InvalidArgument, e.to_string()),
        }
    })
}

/// `k_s ((x - x0)^2 / p^2 + (y - y0)^2 / q^2 - r^2)`.
///
/// # Safety
/// `out` must be NULL or point to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn gvf_path_new_ellipse(
    x0: f64,
    y0: f64,
    r: f64,
    p: f64,
    q: f64,
    k_s: f64,
    out: *mut *mut GvfPath,
) -> GvfStatus {
    new_path(PathSpec::Ellipse { x0, y0, r, p, q, k_s }, out)
}

/// Cassini oval with foci `(x0 +- q, y0)`; requires `p > q`.
///
/// # Safety
/// `out` must be NULL or point to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn gvf_path_new_cassini(
    x0: f64,
    y0: f64,
    p: f64,
    q: f64,
    k_s: f64,
    out: *mut *mut GvfPath,
) -> GvfStatus {
    new_path(PathSpec::Cassini { x0, y0, p, q, k_s }, out)
}

/// # Safety
/// `out` must be NULL or point to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn gvf_path_new_circle(x0: f64, y0: f64, radius: f64, out: *mut *mut GvfPath) -> GvfStatus {
    new_path(PathSpec::Circle { x0, y0, radius }, out)
}

/// `a x + b y + c`.
///
/// # Safety
/// `out` must be NULL or point to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn gvf_path_new_line(a: f64, b: f64, c: f64, out: *mut *mut GvfPath) -> GvfStatus {
    new_path(PathSpec::Line { a, b, c }, out)
}

/// # Safety
/// `path` must be NULL or a handle from `gvf_path_new_*` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gvf_path_free(path: *mut GvfPath) {
    if !path.is_null() {
        // SAFETY: the handle came from Box::into_raw and is freed once.
        drop(unsafe { Box::from_raw(path) });
    }
}

/// `phi`, gradient (2 values) and row-major Hessian (4 values) at `(x, y)`.
///
/// # Safety
/// `path` must be a live handle; `grad` and `hess` must be NULL or point to
/// 2 and 4 writable doubles; `phi` must be NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn gvf_path_eval(
    path: *const GvfPath,
    x: f64,
    y: f64,
    phi: *mut f64,
    grad: *mut f64,
    hess: *mut f64,
) -> GvfStatus {
    guarded(|| {
        // SAFETY: caller guarantees a live handle or NULL.
        let Some(path) = (unsafe { path.as_ref() }) else {
            return fail(GvfStatus::NullPointer, "path is NULL");
        };
        let s = path.path.eval(&gvf_core::Vec2::new(x, y));
        // SAFETY: each output is either NULL or valid for the documented length.
        unsafe {
            if !phi.is_null() {
                *phi = s.phi;
            }
            if !grad.is_null() {
                *grad = s.grad.x;
                *grad.add(1) = s.grad.y;
            }
            if !hess.is_null() {
                for (i, v) in [s.hess[(0, 0)], s.hess[(0, 1)], s.hess[(1, 0)], s.hess[(1, 1)]].into_iter().enumerate() {
                    *hess.add(i) = v;
                }
            }
        }
        GvfStatus::Ok
    })
}

/// Unit guiding direction at `(x, y)` with the identity error map.
/// Returns [`GvfStatus::Degenerate`] at critical points.
///
/// # Safety
/// `path` must be a live handle and `m_d` must point to 2 writable doubles.
#[no_mangle]
pub unsafe extern "C" fn gvf_guiding_direction(path: *const GvfPath, k_n: f64, x: f64, y: f64, m_d: *mut f64) -> GvfStatus {
    guarded(|| {
        // SAFETY: caller guarantees a live handle or NULL.
        let Some(path) = (unsafe { path.as_ref() }) else {
            return fail(GvfStatus::NullPointer, "path is NULL");
        };
        if m_d.is_null() {
            return fail(GvfStatus::NullPointer, "m_d is NULL");
        }
        let params = GvfParams { k_n, ..GvfParams::reference() };
        if let Err(e) = params.validate() {
            return fail(GvfStatus::InvalidArgument, e.to_string());
        }
        match guiding_field(&path.path, &ErrorMap::Identity, &params, &gvf_core::Vec2::new(x, y)).m_d {
            Some(m) => {
                // SAFETY: `m_d` is non-null and valid for two doubles.
                unsafe {
                    *m_d = m.x;
                    *m_d.add(1) = m.y;
                }
                GvfStatus::Ok
            }
            None => fail(GvfStatus::Degenerate, format!("field is degenerate at ({x}, {y})")),
        }
    })
}

/// Critical points inside the padded workspace, written as `x, y` pairs.
/// `count` receives the number found even when `capacity` is too small.
///
/// # Safety
/// `path` must be a live handle, `xy` must be NULL or hold `2 * capacity`
/// writable doubles, and `count` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gvf_path_critical_points(
    path: *const GvfPath,
    xy: *mut f64,
    capacity: usize,
    count: *mut usize,
) -> GvfStatus {
    guarded(|| {
        // SAFETY: caller guarantees a live handle or NULL.
        let Some(path) = (unsafe { path.as_ref() }) else {
            return fail(GvfStatus::NullPointer, "path is NULL");
        };
        if count.is_null() {
            return fail(GvfStatus::NullPointer, "count is NULL");
        }
        let cfg = AnalysisConfig::default();
        let roots = match find_critical_points(&path.path, &cfg.region, cfg.grid_n) {
            Ok(r) => r,
            Err(e) => return fail(GvfStatus::InvalidArgument, e.to_string()),
        };
        // SAFETY: `count` is non-null and writable.
        unsafe { *count = roots.len() };
        if roots.len() > capacity || (xy.is_null() && !roots.is_empty()) {
            return fail(GvfStatus::BufferTooSmall, format!("{} critical points, capacity {capacity}", roots.len()));
        }
        for (i, r) in roots.iter().enumerate() {
            // SAFETY: i < capacity and `xy` holds 2 * capacity doubles.
            unsafe {
                *xy.add(2 * i) = r.location.x;
                *xy.add(2 * i + 1) = r.location.y;
            }
        }
        GvfStatus::Ok
    })
}

/// GVF closed-loop simulator on a copy of `path` with the default stop
/// rules.
///
/// # Safety
/// `path` must be a live handle and `out` writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn gvf_simulator_new(
    path: *const GvfPath,
    k_n: f64,
    k_delta: f64,
    u_r: f64,
    dt: f64,
    t_max: f64,
    out: *mut *mut GvfSimulator,
) -> GvfStatus {
    guarded(|| {
        // SAFETY: caller guarantees a live handle or NULL.
        let Some(path) = (unsafe { path.as_ref() }) else {
            return fail(GvfStatus::NullPointer, "path is NULL");
        };
        if out.is_null() {
            return fail(GvfStatus::NullPointer, "out is NULL");
        }
        let params = GvfParams::new(k_n, k_delta, u_r);
        let config = SimConfig::new(dt, t_max);
        if let Err(e) = Simulator::new(&path.path, ErrorMap::Identity, ControllerConfig::Gvf(params), config) {
            return fail(GvfStatus::InvalidArgument, e.to_string());
        }
        let sim = GvfSimulator { path: path.path.clone(), params, config };
        // SAFETY: `out` is non-null and writable.
        unsafe { *out = Box::into_raw(Box::new(sim)) };
        GvfStatus::Ok
    })
}

/// # Safety
/// `sim` must be NULL or a handle from [`gvf_simulator_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gvf_simulator_free(sim: *mut GvfSimulator) {
    if !sim.is_null() {
        // SAFETY: the handle came from Box::into_raw and is freed once.
        drop(unsafe { Box::from_raw(sim) });
    }
}

/// Runs from `(x, y, alpha)` until a termination event.
///
/// # Safety
/// `sim` must be a live handle and `result` writable.
#[no_mangle]
pub unsafe extern "C" fn gvf_simulator_run(
    sim: *const GvfSimulator,
    x: f64,
    y: f64,
    alpha: f64,
    result: *mut GvfRunResult,
) -> GvfStatus {
    guarded(|| {
        // SAFETY: caller guarantees a live handle or NULL.
        let Some(sim) = (unsafe { sim.as_ref() }) else {
            return fail(GvfStatus::NullPointer, "sim is NULL");
        };
        if result.is_null() {
            return fail(GvfStatus::NullPointer, "result is NULL");
        }
        if ![x, y, alpha].iter().all(|v| v.is_finite()) {
            return fail(GvfStatus::InvalidArgument, "initial pose must be finite");
        }
        let runner = match Simulator::new(&sim.path, ErrorMap::Identity, ControllerConfig::Gvf(sim.params), sim.config) {
            Ok(r) => r,
            Err(e) => return fail(GvfStatus::InvalidArgument, e.to_string()),
        };
        let traj = runner.run(&Pose::new(x, y, alpha));
        let last = traj.last();
        // SAFETY: `result` is non-null and writable.
        unsafe {
            *result = GvfRunResult {
                termination: traj.termination.kind.into(),
                t_final: traj.termination.t_final,
                x: last.pose.x,
                y: last.pose.y,
                alpha: last.pose.alpha,
                e: last.control.e,
                distance: last.distance,
                samples: traj.samples.len(),
            };
        }
        GvfStatus::Ok
    })
}

/// Loads a scenario file and writes its trajectory CSVs and summary into
/// `out_dir` (or the scenario's own output directory when NULL).
///
/// # Safety
/// `config_path` must be a NUL-terminated string; `out_dir` NULL or one.
#[no_mangle]
pub unsafe extern "C" fn gvf_run_scenario(config_path: *const c_char, out_dir: *const c_char) -> GvfStatus {
    guarded(|| {
        if config_path.is_null() {
            return fail(GvfStatus::NullPointer, "config_path is NULL");
        }
        // SAFETY: caller guarantees NUL-terminated strings.
        let config = unsafe { CStr::from_ptr(config_path) };
        let Ok(config) = config.to_str() else {
            return fail(GvfStatus::InvalidArgument, "config_path is not UTF-8");
        };
        let scenario = match Scenario::load(FsPath::new(config)) {
            Ok(s) => s,
            Err(e) => return fail(GvfStatus::Config, e.to_string()),
        };
        let out = if out_dir.is_null() {
            scenario.output_dir.clone()
        } else {
            // SAFETY: non-null and NUL-terminated per contract.
            match unsafe { CStr::from_ptr(out_dir) }.to_str() {
                Ok(s) => s.into(),
                Err(_) => return fail(GvfStatus::InvalidArgument, "out_dir is not UTF-8"),
            }
        };
        match run_scenario(&scenario, &out) {
            Ok(_) => GvfStatus::Ok,
            Err(e @ gvf_core::scenario::ScenarioError::Write { .. }) => fail(GvfStatus::Io, e.to_string()),
            Err(e @ gvf_core::scenario::ScenarioError::Csv(_)) => fail(GvfStatus::Io, e.to_string()),
            Err(e) => fail(GvfStatus::Config, e.to_string()),
        }
    })
}

//! Guiding-vector-field path following for a constant-speed unicycle.
//!
//! The desired path is the zero level set of a smooth function `phi(x, y)`.
//! From `phi` and a tracking-error reparametrization `psi` the crate builds a
//! planar vector field whose integral curves lead either to the path or to
//! the critical set where `grad phi` vanishes, and steers a unicycle along it
//! with the feedback `omega = omega_d - k_delta * delta`.
//!
//! Modules:
//!
//! - [`field`]: implicit paths, derivatives, error maps, distance to path.
//! - [`gvf`]: the guiding field, its rotation rate and the heading error.
//! - [`controller`]: the GVF steering law plus LOS / NGL baselines.
//! - [`sim`]: closed-loop simulation, integral curves, termination events.
//! - [`analysis`]: critical points, the invariant set, viability bounds.
//! - [`scenario`]: TOML scenario files and the file exporters behind the CLI.

// `!(x < tol)` is used on purpose so that NaN takes the failure branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod controller;
pub mod field;
pub mod geometry;
pub mod gvf;
pub mod scenario;
pub mod sim;

pub use analysis::{
    classify_critical_point, critical_error_threshold, find_critical_points, in_invariant_set,
    viability_check, Classification, CriticalPoint, CriticalRoot, ViabilityReport,
};
pub use controller::{
    gvf_control, los_control, ngl_control, project_to_path, ControlSample, Direction, LosParams,
    NglParams, Projection,
};
pub use field::{
    check_derivatives, distance_to_path, eval_error, eval_path, make_path, ErrorMap, FieldSample,
    Path, PathSpec,
};
pub use geometry::{wrap_angle, Region, Vec2};
pub use gvf::{guiding_field, heading_error, rotation_rate, GvfParams, GvfSample};
pub use sim::{
    lyapunov_series, simulate, step_unicycle, trace_integral_curve, ControllerConfig,
    CurveLabel, IntegralCurve, Pose, SimConfig, StopPolicy, TerminationEvent, TerminationKind,
    TraceMode, Trajectory,
};

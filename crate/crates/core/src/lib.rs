//! Positivity-preserving logarithmic truncated Euler–Maruyama (LTEM) schemes
//! for SDEs whose solutions live on the positive cone.
//!
//! The scheme integrates the log-transformed equation `z = ln y` with
//! coefficients evaluated at a radial truncation of `z`, then maps back with
//! `y = e^z`. Every numerical state is therefore strictly positive.
//!
//! ```
//! use ltem::{presets, ltem_solve, BrownianPath};
//!
//! let p = presets::model("lv2").unwrap();
//! let policy = presets::policy(p.default_policy).unwrap();
//! let noise = BrownianPath::generate(42, 0, 2, 1.0 / 256.0, 256).unwrap();
//! let traj = ltem_solve(p.model.as_ref(), &policy, &p.y0, 1.0, 256, noise.increments()).unwrap();
//! assert!(traj.states().all(|y| y.iter().all(|v| *v > 0.0)));
//! ```

// `!(x > 0.0)` is used throughout so that NaN counts as a violation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod assumptions;
pub mod brownian;
pub mod cli;
pub mod error;
pub mod experiments;
pub mod integrators;
pub mod model;
pub mod presets;
pub mod state;
pub mod transform;
pub mod truncation;

pub use assumptions::{check_assumptions, AssumptionParams, AssumptionReport, Clause, LogUniformSampler, PositiveSampler};
pub use brownian::{generate_brownian, BrownianPath, Increments};
pub use error::{Error, Result};
pub use experiments::{
    fit_rate, gaussian_bound_check, moment_diagnostics, positivity_scan, strong_error, ErrorTable, ExperimentConfig,
    RateEstimate, Setup,
};
pub use integrators::{ltem1d_solve, ltem_solve, ltem_step, tem_solve, LtemStepper, Scheme, TemStepper, Trajectory};
pub use model::{make_lv3_model, make_lv_model, FnModel, LotkaVolterra, Matrix, SdeModel, ThreeSpeciesLv};
pub use state::{LogState, PositiveState};
pub use transform::{log_diffusion, log_drift, to_log, to_positive, SAFE_EXPONENT};
pub use truncation::{
    default_scalar_policy, radial_truncate, truncated_log_diffusion, truncated_log_drift, validate_step_condition,
    Envelope, Regime, StepBound, StepCondition, TruncationPolicy,
};

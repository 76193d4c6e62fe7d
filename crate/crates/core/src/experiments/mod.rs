//! Monte Carlo experiments: strong errors and fitted rates, positivity scans,
//! and moment diagnostics.
//!
//! Paths are independent and keyed by index. Workers own disjoint path
//! indices, per-path results are gathered in index order, and means use
//! pairwise summation, so every number is independent of the worker count.

mod diagnostics;
mod positivity;
mod strong;

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrators::{drive_ltem, drive_tem, LtemStepper, Scheme, TemStepper};
use crate::model::SdeModel;
use crate::presets;
use crate::state::{norm, PositiveState};
use crate::truncation::{Regime, TruncationPolicy};
use crate::brownian::Increments;

pub use diagnostics::{gaussian_bound_check, moment_diagnostics, GaussianBoundReport, MomentOptions, MomentReport, MomentRow};
pub use positivity::{positivity_scan, sample_trajectories, PositivityCell, PositivityReport};
pub use strong::{fit_rate, strong_error, ErrorRow, ErrorTable, RateEstimate};

/// Largest tolerated fraction of failed paths before a run is flagged invalid.
pub const MAX_FAILURE_FRACTION: f64 = 1e-3;

/// Settings shared by all experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: String,
    pub policy: String,
    /// Horizon `T`.
    pub horizon: f64,
    /// Reference step `2^-ref_exponent`.
    pub ref_exponent: u32,
    /// Coarse steps `2^-e`.
    pub ladder: Vec<u32>,
    pub paths: usize,
    /// Error order `p` in `E|y_ref(T) − y_Δ(T)|^p`.
    pub p_norm: f64,
    pub seed: u64,
    pub schemes: Vec<Scheme>,
    /// Thread count; 0 uses all cores. Never affects results.
    #[serde(skip)]
    pub workers: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            model: "lv2".into(),
            policy: "ex1-eps0.25".into(),
            horizon: 1.0,
            ref_exponent: 13,
            ladder: vec![10, 9, 8, 7, 6],
            paths: 1000,
            p_norm: 1.0,
            seed: 42,
            schemes: vec![Scheme::Ltem],
            workers: 0,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.paths == 0 {
            return Err(Error::Config("at least one path is required".into()));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::Config(format!("horizon {} must be positive", self.horizon)));
        }
        if !(self.p_norm > 0.0) {
            return Err(Error::Config(format!("error order {} must be positive", self.p_norm)));
        }
        if self.ladder.is_empty() {
            return Err(Error::Config("the step ladder is empty".into()));
        }
        if self.schemes.is_empty() {
            return Err(Error::Config("no scheme selected".into()));
        }
        if self.ref_exponent > 40 {
            return Err(Error::Config(format!("reference exponent {} is too large", self.ref_exponent)));
        }
        if let Some(e) = self.ladder.iter().find(|e| **e > self.ref_exponent) {
            return Err(Error::Config(format!(
                "ladder step 2^-{e} is finer than the reference 2^-{}",
                self.ref_exponent
            )));
        }
        steps_for(self.horizon, self.ref_exponent)?;
        for e in &self.ladder {
            steps_for(self.horizon, *e)?;
        }
        Ok(())
    }

    /// Resolves the named model and policy.
    pub fn resolve(&self) -> Result<Setup> {
        let preset = presets::model(&self.model)?;
        let policy = presets::policy(&self.policy)?;
        Setup::new(preset.model, policy, preset.y0)
    }
}

/// A model, a policy and an initial state.
#[derive(Clone)]
pub struct Setup {
    pub model: Arc<dyn SdeModel>,
    pub policy: TruncationPolicy,
    pub y0: PositiveState,
}

impl std::fmt::Debug for Setup {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Setup")
            .field("model", &self.model.name())
            .field("policy", &self.policy)
            .field("y0", &self.y0)
            .finish()
    }
}

impl Setup {
    pub fn new(model: Arc<dyn SdeModel>, policy: TruncationPolicy, y0: PositiveState) -> Result<Self> {
        if y0.dim() != model.dim() {
            return Err(Error::Dimension {
                what: "initial state",
                expected: model.dim(),
                got: y0.dim(),
            });
        }
        if policy.regime() == Regime::Scalar && model.dim() != 1 {
            return Err(Error::Dimension {
                what: "scalar-regime policy requires a one-dimensional model",
                expected: 1,
                got: model.dim(),
            });
        }
        Ok(Self { model, policy, y0 })
    }

    fn check_scheme(&self, scheme: Scheme) -> Result<()> {
        if scheme == Scheme::Ltem1d && (self.model.dim() != 1 || self.policy.regime() != Regime::Scalar) {
            return Err(Error::Config(
                "ltem1d needs a one-dimensional model and a scalar-regime policy".into(),
            ));
        }
        Ok(())
    }

    /// Terminal state of one run, or `None` if the run failed or is not finite.
    fn terminal(&self, scheme: Scheme, noise: &Increments) -> Result<Option<Vec<f64>>> {
        let model = self.model.as_ref();
        let dt = noise.dt();
        match scheme {
            Scheme::Ltem | Scheme::Ltem1d => {
                let mut stepper = LtemStepper::new(model, &self.policy, dt)?;
                let mut z: Vec<f64> = self.y0.as_slice().iter().map(|v| v.ln()).collect();
                Ok(drive_ltem(&mut stepper, &mut z, noise, |_, _| {})
                    .ok()
                    .map(|_| z.iter().map(|v| v.exp()).collect()))
            }
            Scheme::Tem => {
                let mut stepper = TemStepper::new(model, &self.policy, dt)?;
                let mut y = self.y0.as_slice().to_vec();
                let exit = drive_tem(&mut stepper, &mut y, noise, |_, _| {});
                Ok((exit.is_none() && y.iter().all(|v| v.is_finite())).then_some(y))
            }
        }
    }
}

/// Number of steps of size `2^-e` in `[0, T]`.
pub(crate) fn steps_for(horizon: f64, exponent: u32) -> Result<usize> {
    let n = horizon * 2f64.powi(exponent as i32);
    let r = n.round();
    if r < 1.0 || (n - r).abs() > 1e-9 * n.max(1.0) {
        return Err(Error::Config(format!(
            "horizon {horizon} is not a positive multiple of the step 2^-{exponent}"
        )));
    }
    Ok(r as usize)
}

/// Sum by recursive halving.
pub fn pairwise_sum(x: &[f64]) -> f64 {
    if x.len() <= 8 {
        let mut s = 0.0;
        for v in x {
            s += v;
        }
        return s;
    }
    let h = x.len() / 2;
    pairwise_sum(&x[..h]) + pairwise_sum(&x[h..])
}

/// Pairwise mean and standard error `sd / √n` (0 when `n < 2`).
pub fn mean_and_stderr(x: &[f64]) -> (f64, f64) {
    let n = x.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = pairwise_sum(x) / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let sq: Vec<f64> = x.iter().map(|v| (v - mean) * (v - mean)).collect();
    let var = pairwise_sum(&sq) / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Maps `f` over `0..n` on `workers` threads (0 = all cores), in index order.
pub(crate) fn par_map<T: Send>(n: usize, workers: usize, f: impl Fn(usize) -> T + Sync + Send) -> Result<Vec<T>> {
    let run = || (0..n).into_par_iter().map(&f).collect::<Vec<T>>();
    if workers == 0 {
        return Ok(run());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {workers} workers: {e}")))?;
    Ok(pool.install(run))
}

pub(crate) fn distance_pow(a: &[f64], b: &[f64], p: f64) -> f64 {
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    norm(&diff).powf(p)
}

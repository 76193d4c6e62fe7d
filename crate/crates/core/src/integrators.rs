//! The logarithmic truncated Euler–Maruyama scheme, its scalar variant, and the
//! truncated Euler–Maruyama baseline on the original coordinates.
//!
//! One LTEM step is
//!
//! ```text
//! z_{k+1,i} = (z_{k,i} + λ̃_Δ,i(z_k)·Δ) + Σⱼ σ̃_Δ,ij(z_k)·ΔB_{k,j}
//! ```
//!
//! with the noise sum accumulated left to right from `0.0`, and `y_k = e^{z_k}`.

use serde::{Deserialize, Serialize};

use crate::brownian::Increments;
use crate::error::{Error, Result};
use crate::model::SdeModel;
use crate::state::{LogState, PositiveState};
use crate::transform::check_exponent;
use crate::truncation::{radial_truncate_into, Regime, TruncatedField, TruncationPolicy};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Ltem,
    Ltem1d,
    Tem,
}

impl Scheme {
    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::Ltem => "ltem",
            Scheme::Ltem1d => "ltem1d",
            Scheme::Tem => "tem",
        }
    }

    /// Whether the scheme works in log coordinates and so preserves positivity.
    pub fn is_logarithmic(self) -> bool {
        !matches!(self, Scheme::Tem)
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ltem" => Ok(Scheme::Ltem),
            "ltem1d" => Ok(Scheme::Ltem1d),
            "tem" => Ok(Scheme::Tem),
            _ => Err(Error::Config(format!("unknown scheme '{s}'"))),
        }
    }
}

/// Time grid and states of one run.
///
/// States are stored flat, `d` values per grid point. Log states are present
/// for the logarithmic schemes only.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    scheme: Scheme,
    dim: usize,
    times: Vec<f64>,
    states: Vec<f64>,
    log_states: Option<Vec<f64>>,
    first_exit: Option<usize>,
}

impl Trajectory {
    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of grid points, `n_steps + 1` for a completed run.
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn state(&self, k: usize) -> &[f64] {
        &self.states[k * self.dim..(k + 1) * self.dim]
    }

    pub fn log_state(&self, k: usize) -> Option<&[f64]> {
        self.log_states
            .as_ref()
            .map(|z| &z[k * self.dim..(k + 1) * self.dim])
    }

    pub fn final_state(&self) -> &[f64] {
        self.state(self.len() - 1)
    }

    pub fn states(&self) -> impl Iterator<Item = &[f64]> {
        self.states.chunks_exact(self.dim)
    }

    /// For a baseline run of a model that cannot leave the cone: the grid index
    /// of the first non-positive state, where the run stopped.
    pub fn first_exit(&self) -> Option<usize> {
        self.first_exit
    }

    /// Whether component `i` is non-positive (or NaN) anywhere on the grid.
    pub fn ever_non_positive(&self, i: usize) -> bool {
        self.states().any(|y| !(y[i] > 0.0))
    }

    /// Checked positive state at grid index `k`.
    pub fn positive_state(&self, k: usize) -> Result<PositiveState> {
        PositiveState::new(self.state(k).to_vec())
    }
}

fn check_noise(model: &dyn SdeModel, horizon: f64, n_steps: usize, noise: &Increments) -> Result<f64> {
    if noise.noise_dim() != model.noise_dim() {
        return Err(Error::Dimension {
            what: "noise channels",
            expected: model.noise_dim(),
            got: noise.noise_dim(),
        });
    }
    if noise.n_steps() != n_steps {
        return Err(Error::Dimension {
            what: "noise steps",
            expected: n_steps,
            got: noise.n_steps(),
        });
    }
    if !(horizon >= 0.0 && horizon.is_finite()) {
        return Err(Error::Parameter(format!("horizon {horizon} must be finite and nonnegative")));
    }
    if n_steps == 0 {
        return Ok(noise.dt());
    }
    let dt = horizon / n_steps as f64;
    if (noise.dt() - dt).abs() > 1e-12 * dt {
        return Err(Error::Config(format!(
            "noise step {} does not match T / n = {dt}",
            noise.dt()
        )));
    }
    Ok(dt)
}

fn check_y0(model: &dyn SdeModel, y0: &[f64]) -> Result<()> {
    if y0.len() != model.dim() {
        return Err(Error::Dimension {
            what: "initial state",
            expected: model.dim(),
            got: y0.len(),
        });
    }
    Ok(())
}

/// Reusable LTEM step for a fixed model, step size and truncation radius.
pub struct LtemStepper<'a> {
    field: TruncatedField<'a>,
    dt: f64,
    m: usize,
    drift: Vec<f64>,
    diffusion: Vec<f64>,
}

impl<'a> LtemStepper<'a> {
    pub fn new(model: &'a dyn SdeModel, policy: &TruncationPolicy, dt: f64) -> Result<Self> {
        Ok(Self::from_field(TruncatedField::new(model, policy, dt)?, model, dt))
    }

    /// Stepper with an explicit truncation radius; `f64::INFINITY` disables truncation.
    pub fn with_radius(model: &'a dyn SdeModel, radius: f64, dt: f64) -> Self {
        Self::from_field(TruncatedField::with_radius(model, radius), model, dt)
    }

    fn from_field(field: TruncatedField<'a>, model: &dyn SdeModel, dt: f64) -> Self {
        Self {
            field,
            dt,
            m: model.noise_dim(),
            drift: vec![0.0; model.dim()],
            diffusion: vec![0.0; model.dim() * model.noise_dim()],
        }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn radius(&self) -> f64 {
        self.field.radius()
    }

    /// Advances `z` in place by one step driven by `db`.
    pub fn step(&mut self, z: &mut [f64], db: &[f64]) -> Result<()> {
        self.field.eval(z, &mut self.drift, &mut self.diffusion)?;
        advance(z, &self.drift, &self.diffusion, self.m, self.dt, db);
        check_exponent(z)
    }

    /// Coefficients `(λ̃_Δ, σ̃_Δ)` used by the most recent step.
    pub fn last_coefficients(&self) -> (&[f64], &[f64]) {
        (&self.drift, &self.diffusion)
    }

    /// `z + λ̃_Δ(z)·τ + σ̃_Δ(z)·w`: the continuous interpolant over part of a step.
    pub fn partial_step(&mut self, z: &[f64], tau: f64, w: &[f64], out: &mut [f64]) -> Result<()> {
        self.field.eval(z, &mut self.drift, &mut self.diffusion)?;
        out.copy_from_slice(z);
        advance(out, &self.drift, &self.diffusion, self.m, tau, w);
        check_exponent(out)
    }
}

fn advance(x: &mut [f64], drift: &[f64], diffusion: &[f64], m: usize, dt: f64, db: &[f64]) {
    for (i, xi) in x.iter_mut().enumerate() {
        let mut noise = 0.0;
        for (s, w) in diffusion[i * m..(i + 1) * m].iter().zip(db) {
            noise += s * w;
        }
        *xi = (*xi + drift[i] * dt) + noise;
    }
}

fn wrap_step(step: usize) -> impl FnOnce(Error) -> Error {
    move |e| Error::StepFailed {
        step,
        source: Box::new(e),
    }
}

/// One LTEM step from `z_k`.
pub fn ltem_step(
    model: &dyn SdeModel,
    policy: &TruncationPolicy,
    z: &LogState,
    dt: f64,
    db: &[f64],
) -> Result<LogState> {
    if z.dim() != model.dim() || db.len() != model.noise_dim() {
        return Err(Error::Dimension {
            what: "state or increment",
            expected: model.dim(),
            got: z.dim(),
        });
    }
    let mut stepper = LtemStepper::new(model, policy, dt)?;
    let mut next = z.as_slice().to_vec();
    stepper.step(&mut next, db)?;
    LogState::new(next)
}

/// Runs the stepper over the noise, calling `visit(k, z_k)` at every grid point.
pub(crate) fn drive_ltem(
    stepper: &mut LtemStepper<'_>,
    z: &mut [f64],
    noise: &Increments,
    mut visit: impl FnMut(usize, &[f64]),
) -> Result<()> {
    visit(0, z);
    for k in 0..noise.n_steps() {
        stepper.step(z, noise.step(k)).map_err(wrap_step(k))?;
        visit(k + 1, z);
    }
    Ok(())
}

fn run_log_scheme(
    scheme: Scheme,
    model: &dyn SdeModel,
    mut stepper: LtemStepper<'_>,
    y0: &PositiveState,
    n_steps: usize,
    dt: f64,
    noise: &Increments,
) -> Result<Trajectory> {
    let d = model.dim();
    let mut z: Vec<f64> = y0.as_slice().iter().map(|v| v.ln()).collect();
    let mut log_states = Vec::with_capacity((n_steps + 1) * d);
    drive_ltem(&mut stepper, &mut z, noise, |_, zk| log_states.extend_from_slice(zk))?;
    let states = log_states.iter().map(|v| v.exp()).collect();
    Ok(Trajectory {
        scheme,
        dim: d,
        times: time_grid(n_steps, dt),
        states,
        log_states: Some(log_states),
        first_exit: None,
    })
}

fn time_grid(n_steps: usize, dt: f64) -> Vec<f64> {
    (0..=n_steps).map(|k| k as f64 * dt).collect()
}

/// LTEM trajectory from `y0` over `[0, T]` with `n_steps` steps of the given noise.
pub fn ltem_solve(
    model: &dyn SdeModel,
    policy: &TruncationPolicy,
    y0: &PositiveState,
    horizon: f64,
    n_steps: usize,
    noise: &Increments,
) -> Result<Trajectory> {
    check_y0(model, y0.as_slice())?;
    let dt = check_noise(model, horizon, n_steps, noise)?;
    let stepper = if n_steps == 0 {
        LtemStepper::with_radius(model, f64::INFINITY, dt)
    } else {
        LtemStepper::new(model, policy, dt)?
    };
    run_log_scheme(Scheme::Ltem, model, stepper, y0, n_steps, dt, noise)
}

/// LTEM for one-dimensional models under a scalar-regime policy.
pub fn ltem1d_solve(
    model: &dyn SdeModel,
    policy: &TruncationPolicy,
    y0: &PositiveState,
    horizon: f64,
    n_steps: usize,
    noise: &Increments,
) -> Result<Trajectory> {
    if model.dim() != 1 {
        return Err(Error::Dimension {
            what: "scalar scheme requires a one-dimensional model",
            expected: 1,
            got: model.dim(),
        });
    }
    if policy.regime() != Regime::Scalar {
        return Err(Error::Config("the scalar scheme needs a scalar-regime policy".into()));
    }
    check_y0(model, y0.as_slice())?;
    let dt = check_noise(model, horizon, n_steps, noise)?;
    let stepper = if n_steps == 0 {
        LtemStepper::with_radius(model, f64::INFINITY, dt)
    } else {
        LtemStepper::new(model, policy, dt)?
    };
    run_log_scheme(Scheme::Ltem1d, model, stepper, y0, n_steps, dt, noise)
}

/// Truncated Euler–Maruyama step on the original coordinates.
///
/// The coefficients are evaluated at the radial projection of `y` onto the
/// ball of radius `ψ⁻¹(η(Δ))`. No projection onto the cone is applied.
pub struct TemStepper<'a> {
    model: &'a dyn SdeModel,
    radius: f64,
    dt: f64,
    projected: Vec<f64>,
    drift: Vec<f64>,
    diffusion: Vec<f64>,
}

impl<'a> TemStepper<'a> {
    pub fn new(model: &'a dyn SdeModel, policy: &TruncationPolicy, dt: f64) -> Result<Self> {
        Ok(Self::with_radius(model, policy.radius(dt)?, dt))
    }

    pub fn with_radius(model: &'a dyn SdeModel, radius: f64, dt: f64) -> Self {
        Self {
            model,
            radius,
            dt,
            projected: vec![0.0; model.dim()],
            drift: vec![0.0; model.dim()],
            diffusion: vec![0.0; model.dim() * model.noise_dim()],
        }
    }

    pub fn step(&mut self, y: &mut [f64], db: &[f64]) {
        radial_truncate_into(y, self.radius, &mut self.projected);
        self.model.drift_into(&self.projected, &mut self.drift);
        self.model.diffusion_into(&self.projected, &mut self.diffusion);
        advance(y, &self.drift, &self.diffusion, self.model.noise_dim(), self.dt, db);
    }
}

/// Runs the baseline, calling `visit(k, y_k)` at every grid point. Returns the
/// index of the first non-positive state when the model cannot leave the cone.
pub(crate) fn drive_tem(
    stepper: &mut TemStepper<'_>,
    y: &mut [f64],
    noise: &Increments,
    mut visit: impl FnMut(usize, &[f64]),
) -> Option<usize> {
    let extends = stepper.model.extends_to_reals();
    visit(0, y);
    for k in 0..noise.n_steps() {
        if !extends && y.iter().any(|v| !(*v > 0.0)) {
            return Some(k);
        }
        stepper.step(y, noise.step(k));
        visit(k + 1, y);
    }
    if !extends && y.iter().any(|v| !(*v > 0.0)) {
        return Some(noise.n_steps());
    }
    None
}

/// Baseline trajectory. States may become non-positive or non-finite.
pub fn tem_solve(
    model: &dyn SdeModel,
    y0: &PositiveState,
    horizon: f64,
    n_steps: usize,
    noise: &Increments,
    policy: &TruncationPolicy,
) -> Result<Trajectory> {
    check_y0(model, y0.as_slice())?;
    let dt = check_noise(model, horizon, n_steps, noise)?;
    let mut stepper = if n_steps == 0 {
        TemStepper::with_radius(model, f64::INFINITY, dt)
    } else {
        TemStepper::new(model, policy, dt)?
    };
    let mut y = y0.as_slice().to_vec();
    let mut states = Vec::with_capacity((n_steps + 1) * model.dim());
    let first_exit = drive_tem(&mut stepper, &mut y, noise, |_, yk| states.extend_from_slice(yk));
    let len = states.len() / model.dim();
    Ok(Trajectory {
        scheme: Scheme::Tem,
        dim: model.dim(),
        times: time_grid(len - 1, dt),
        states,
        log_states: None,
        first_exit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::brownian::BrownianPath;
    use crate::model::{make_lv_model, FnModel, Matrix};
    use crate::truncation::{default_scalar_policy, Envelope, StepBound};

    fn lv2() -> crate::model::LotkaVolterra {
        make_lv_model(vec![2.0, 4.0], Matrix::diag(&[-4.0, -4.0]), vec![1.0, 2.0]).unwrap()
    }

    fn policy() -> TruncationPolicy {
        TruncationPolicy::lv2_preset(0.25).unwrap()
    }

    fn lz(v: &[f64]) -> LogState {
        LogState::new(v.to_vec()).unwrap()
    }

    #[test]
    fn single_step_by_hand() {
        let z = ltem_step(&lv2(), &policy(), &lz(&[1e-300, 0.0]), 0.25, &[0.1, -0.2]).unwrap();
        let expect = [-2.5 * 0.25 + 0.1, -2.0 * 0.25 + 2.0 * -0.2];
        assert!((z.as_slice()[0] - expect[0]).abs() < 1e-15);
        assert_eq!(z.as_slice()[1], expect[1]);
    }

    #[test]
    fn zero_branch_makes_origin_a_fixed_point() {
        // λ̃_Δ(0) = 0 and σ̃_Δ(0) = 0 by definition
        let z = ltem_step(&lv2(), &policy(), &lz(&[0.0, 0.0]), 0.25, &[0.1, -0.2]).unwrap();
        assert_eq!(z.as_slice(), &[0.0, 0.0]);
    }

    #[test]
    fn drift_root_is_fixed_without_noise() {
        let root = lz(&[0.375f64.ln(), 0.5f64.ln()]);
        let z = ltem_step(&lv2(), &policy(), &root, 0.01, &[0.0, 0.0]).unwrap();
        for (a, b) in z.as_slice().iter().zip(root.as_slice()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_model_is_constant() {
        let m = FnModel::new("zero", 2, 2, |_, o| o.fill(0.0), |_, o| o.fill(0.0));
        let y0 = PositiveState::new(vec![0.3, 7.0]).unwrap();
        let noise = BrownianPath::generate(1, 0, 2, 0.01, 100).unwrap();
        let t = ltem_solve(&m, &policy(), &y0, 1.0, 100, noise.increments()).unwrap();
        for y in t.states() {
            assert!((y[0] - 0.3).abs() < 1e-15 && (y[1] - 7.0).abs() < 1e-14);
        }
        let t = tem_solve(&m, &y0, 1.0, 100, noise.increments(), &policy()).unwrap();
        assert!(t.states().all(|y| y == y0.as_slice()));
    }

    #[test]
    fn no_steps_gives_initial_state_only() {
        let y0 = PositiveState::new(vec![1.0, 2.0]).unwrap();
        let noise = Increments::zeros(0.1, 2, 0);
        let t = ltem_solve(&lv2(), &policy(), &y0, 0.0, 0, &noise).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t.final_state(), &[1.0, 2.0]);
        assert_eq!(t.times(), &[0.0]);
    }

    #[test]
    fn grid_and_positivity() {
        let y0 = PositiveState::new(vec![1.0, 2.0]).unwrap();
        let noise = BrownianPath::generate(4, 0, 2, 1.0 / 64.0, 128).unwrap();
        let t = ltem_solve(&lv2(), &policy(), &y0, 2.0, 128, noise.increments()).unwrap();
        assert_eq!(t.len(), 129);
        assert_eq!(t.times()[128], 2.0);
        for k in 0..t.len() {
            let z = t.log_state(k).unwrap();
            for (y, zi) in t.state(k).iter().zip(z) {
                assert!(*y > 0.0);
                assert_eq!(*y, zi.exp());
            }
        }
    }

    #[test]
    fn mismatched_noise_is_rejected() {
        let y0 = PositiveState::new(vec![1.0, 2.0]).unwrap();
        let noise = BrownianPath::generate(4, 0, 2, 0.01, 100).unwrap();
        assert!(ltem_solve(&lv2(), &policy(), &y0, 1.0, 50, noise.increments()).is_err());
        assert!(ltem_solve(&lv2(), &policy(), &y0, 2.0, 100, noise.increments()).is_err());
        let one = BrownianPath::generate(4, 0, 1, 0.01, 100).unwrap();
        assert!(ltem_solve(&lv2(), &policy(), &y0, 1.0, 100, one.increments()).is_err());
    }

    #[test]
    fn overflow_reports_step_index() {
        // untruncated exponential blow-up of a pure drift in log coordinates
        let m = FnModel::new("blow", 1, 1, |y, o| o[0] = 300.0 * y[0], |_, o| o[0] = 0.0);
        let mut stepper = LtemStepper::with_radius(&m, f64::INFINITY, 1.0);
        let mut z = vec![0.5];
        let noise = Increments::zeros(1.0, 1, 5);
        let err = drive_ltem(&mut stepper, &mut z, &noise, |_, _| {}).unwrap_err();
        assert!(matches!(err, Error::StepFailed { step: 2, .. }), "{err:?}");
    }

    #[test]
    fn matches_scalar_scheme_when_radii_agree() {
        let m = make_lv_model(vec![2.0], Matrix::diag(&[-4.0]), vec![1.0]).unwrap();
        let scalar = default_scalar_policy(1.0, 1.0, 0.0, StepBound::power_law(8.0, 0.5).unwrap(), 8.0).unwrap();
        let dt = 1.0 / 256.0;
        // ψ(v) = 4eᵛ, η(Δ) = 8 Δ^{-1/2}: the same radius ln(2 Δ^{-1/2})
        let multi = TruncationPolicy::new(
            Regime::Multi,
            Envelope::exponential(4.0, 1.0).unwrap(),
            StepBound::power_law(8.0, 0.5).unwrap(),
            8.0,
        )
        .unwrap();
        assert_eq!(scalar.radius(dt).unwrap(), multi.radius(dt).unwrap());
        let y0 = PositiveState::new(vec![3.0]).unwrap();
        let noise = BrownianPath::generate(8, 2, 1, dt, 512).unwrap();
        let a = ltem_solve(&m, &multi, &y0, 2.0, 512, noise.increments()).unwrap();
        let b = ltem1d_solve(&m, &scalar, &y0, 2.0, 512, noise.increments()).unwrap();
        assert_eq!(a.log_state(512), b.log_state(512));
        assert!(b.states().all(|y| y[0] > 0.0));
        assert!(ltem1d_solve(&lv2(), &scalar, &PositiveState::new(vec![1.0, 1.0]).unwrap(), 2.0, 512, noise.increments()).is_err());
        assert!(ltem1d_solve(&m, &multi, &y0, 2.0, 512, noise.increments()).is_err());
    }

    #[test]
    fn tem_can_leave_the_cone() {
        let m = make_lv_model(vec![10.0, 6.0], Matrix::diag(&[-10.0, -8.0]), vec![3.0, 2.0]).unwrap();
        let p = TruncationPolicy::lv2_strong_preset(0.25).unwrap();
        let y0 = PositiveState::new(vec![1.0, 2.0]).unwrap();
        let dt = 1.0 / 32.0;
        let negative = (0..50).any(|i| {
            let noise = BrownianPath::generate(42, i, 2, dt, 64).unwrap();
            let t = tem_solve(&m, &y0, 2.0, 64, noise.increments(), &p).unwrap();
            t.ever_non_positive(0) || t.ever_non_positive(1)
        });
        assert!(negative);
    }

    #[test]
    fn tem_stops_at_first_exit_for_cone_only_models() {
        let m = FnModel::new("drop", 1, 1, |_, o| o[0] = -1.0, |_, o| o[0] = 0.0);
        let y0 = PositiveState::new(vec![0.25]).unwrap();
        let noise = Increments::zeros(0.1, 1, 10);
        let t = tem_solve(&m, &y0, 1.0, 10, &noise, &policy()).unwrap();
        assert_eq!(t.first_exit(), Some(3));
        assert_eq!(t.len(), 4);
    }
}

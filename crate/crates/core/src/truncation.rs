//! Radial truncation of the transformed coefficients.
//!
//! For a step size `Δ` the log-state is projected onto the closed ball of
//! radius `ψ⁻¹(η(Δ))` before `λ̃` and `σ̃` are evaluated, so that
//! `|λ̃_Δ(z)| ∨ |σ̃_Δ(z)|² ≤ η(Δ)` whenever `ψ` dominates the coefficients.
//! At `z = 0` both truncated coefficients are defined to be exactly zero.

use std::fmt;
use std::sync::Arc;

use crate::assumptions::AssumptionParams;
use crate::error::{Error, Result};
use crate::model::{Matrix, SdeModel};
use crate::state::{norm, LogState};
use crate::transform::{log_coefficients_into, Workspace};

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Strictly increasing growth envelope `ψ` (called `φ` in the scalar regime).
#[derive(Clone)]
pub enum Envelope {
    /// `ψ(v) = scale · e^{rate·v}`.
    Exponential { scale: f64, rate: f64 },
    /// User-supplied pair `(ψ, ψ⁻¹)`.
    Custom { psi: ScalarFn, inverse: ScalarFn },
}

impl Envelope {
    pub fn exponential(scale: f64, rate: f64) -> Result<Self> {
        if !(scale > 0.0 && rate > 0.0 && scale.is_finite() && rate.is_finite()) {
            return Err(Error::Parameter(format!(
                "exponential envelope needs positive scale and rate, got {scale}, {rate}"
            )));
        }
        Ok(Envelope::Exponential { scale, rate })
    }

    pub fn custom(
        psi: impl Fn(f64) -> f64 + Send + Sync + 'static,
        inverse: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Envelope::Custom {
            psi: Arc::new(psi),
            inverse: Arc::new(inverse),
        }
    }

    pub fn value(&self, v: f64) -> f64 {
        match self {
            Envelope::Exponential { scale, rate } => scale * (rate * v).exp(),
            Envelope::Custom { psi, .. } => psi(v),
        }
    }

    /// `ψ⁻¹(r)`, defined for `r > ψ(0)`.
    pub fn inverse(&self, r: f64) -> Option<f64> {
        if !(r > self.value(0.0)) {
            return None;
        }
        Some(match self {
            Envelope::Exponential { scale, rate } => (r / scale).ln() / rate,
            Envelope::Custom { inverse, .. } => inverse(r),
        })
    }
}

impl fmt::Debug for Envelope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Envelope::Exponential { scale, rate } => f
                .debug_struct("Exponential")
                .field("scale", scale)
                .field("rate", rate)
                .finish(),
            Envelope::Custom { .. } => f.write_str("Custom"),
        }
    }
}

/// Strictly decreasing step-size map `η: (0, 1] → (0, ∞)`.
#[derive(Clone)]
pub enum StepBound {
    /// `η(Δ) = scale · Δ^{-exponent}`.
    PowerLaw { scale: f64, exponent: f64 },
    Custom(ScalarFn),
}

impl StepBound {
    pub fn power_law(scale: f64, exponent: f64) -> Result<Self> {
        if !(scale > 0.0 && exponent > 0.0 && scale.is_finite() && exponent.is_finite()) {
            return Err(Error::Parameter(format!(
                "step bound needs positive scale and exponent, got {scale}, {exponent}"
            )));
        }
        Ok(StepBound::PowerLaw { scale, exponent })
    }

    pub fn custom(eta: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        StepBound::Custom(Arc::new(eta))
    }

    pub fn value(&self, dt: f64) -> f64 {
        match self {
            StepBound::PowerLaw { scale, exponent } => scale * dt.powf(-exponent),
            StepBound::Custom(f) => f(dt),
        }
    }

    /// `sup_{Δ∈(0,1]} Δ^q η(Δ)`, closed form for power laws and a dense
    /// logarithmic scan otherwise.
    fn sup_scaled(&self, q: f64) -> f64 {
        match self {
            StepBound::PowerLaw { scale, exponent } => {
                if *exponent <= q {
                    *scale
                } else {
                    f64::INFINITY
                }
            }
            StepBound::Custom(f) => scan_grid()
                .map(|dt| dt.powf(q) * f(dt))
                .fold(0.0, f64::max),
        }
    }

    fn is_strictly_decreasing(&self) -> bool {
        match self {
            StepBound::PowerLaw { .. } => true,
            StepBound::Custom(f) => {
                let vals: Vec<f64> = scan_grid().map(|dt| f(dt)).collect();
                // the grid runs from Δ = 1 towards 0, so η must increase along it
                vals.iter().all(|v| v.is_finite() && *v > 0.0)
                    && vals.windows(2).all(|w| w[1] > w[0])
            }
        }
    }
}

impl fmt::Debug for StepBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StepBound::PowerLaw { scale, exponent } => f
                .debug_struct("PowerLaw")
                .field("scale", scale)
                .field("exponent", exponent)
                .finish(),
            StepBound::Custom(_) => f.write_str("Custom"),
        }
    }
}

fn scan_grid() -> impl Iterator<Item = f64> {
    (0..=240).map(|k| (-(k as f64) / 4.0).exp2())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    /// `Δ^{1/2} η(Δ) ≤ M₀`.
    Multi,
    /// `Δ η(Δ) ≤ J₀`, one-dimensional models only.
    Scalar,
}

/// Growth constants `(C₀, α, β)` of the scalar default envelope `φ(r) = 4C₀ e^{(α∨(β+1)) r}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthParams {
    pub c0: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl GrowthParams {
    pub fn rate(&self) -> f64 {
        self.alpha.max(self.beta + 1.0)
    }
}

/// The `(ψ, ψ⁻¹, η, bound constant)` bundle. Immutable after construction.
#[derive(Debug, Clone)]
pub struct TruncationPolicy {
    envelope: Envelope,
    eta: StepBound,
    bound_const: f64,
    regime: Regime,
    growth: Option<GrowthParams>,
}

impl TruncationPolicy {
    /// Builds a policy and checks its invariants over `Δ ∈ (0, 1]`.
    pub fn new(regime: Regime, envelope: Envelope, eta: StepBound, bound_const: f64) -> Result<Self> {
        let p = Self::new_unchecked(regime, envelope, eta, bound_const);
        p.validate()?;
        Ok(p)
    }

    /// Builds a policy without validation, for diagnosing inadmissible configurations.
    pub fn new_unchecked(regime: Regime, envelope: Envelope, eta: StepBound, bound_const: f64) -> Self {
        Self {
            envelope,
            eta,
            bound_const,
            regime,
            growth: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let floor = self.envelope.value(0.0).max(1.0);
        if !(self.bound_const >= floor) {
            return Err(Error::Config(format!(
                "bound constant {} is below ψ(0) ∨ 1 = {floor}",
                self.bound_const
            )));
        }
        if !self.eta.is_strictly_decreasing() {
            return Err(Error::Config("η must be positive and strictly decreasing".into()));
        }
        let sup = self.eta.sup_scaled(self.step_power());
        if !(sup <= self.bound_const) {
            return Err(Error::Config(format!(
                "sup over Δ ∈ (0,1] of {} is {sup}, above the bound constant {}",
                self.admissibility_label(),
                self.bound_const
            )));
        }
        Ok(())
    }

    /// Multi-dimensional exponential family `ψ(v) = a e^{b v}`, `η(Δ) = c Δ^{-ε}`, `M₀ = c`.
    pub fn exponential(psi_scale: f64, psi_rate: f64, eta_scale: f64, eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps <= 0.5) {
            return Err(Error::Parameter(format!("ε = {eps} is outside (0, 1/2]")));
        }
        Self::new(
            Regime::Multi,
            Envelope::exponential(psi_scale, psi_rate)?,
            StepBound::power_law(eta_scale, eps)?,
            eta_scale.max(psi_scale).max(1.0),
        )
    }

    /// Two-species preset: `ψ(v) = 4eᵛ`, `η(Δ) = 4e⁵ Δ^{-ε}`, i.e. truncation
    /// radius `5 + ε ln(1/Δ)`.
    pub fn lv2_preset(eps: f64) -> Result<Self> {
        Self::exponential(4.0, 1.0, 4.0 * 5f64.exp(), eps)
    }

    /// Like [`lv2_preset`](Self::lv2_preset) with `ψ(v) = 20eᵛ`, which dominates
    /// the coefficients of the strongly driven two-species model.
    pub fn lv2_strong_preset(eps: f64) -> Result<Self> {
        Self::exponential(20.0, 1.0, 20.0 * 5f64.exp(), eps)
    }

    /// Three-species preset: `ψ(r) = 50eʳ`, `η(Δ) = 50 Δ^{-1/2}`, `M₀ = 50`.
    pub fn lv3_preset() -> Self {
        Self::new(
            Regime::Multi,
            Envelope::Exponential {
                scale: 50.0,
                rate: 1.0,
            },
            StepBound::PowerLaw {
                scale: 50.0,
                exponent: 0.5,
            },
            50.0,
        )
        .expect("three-species preset is admissible")
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }

    pub fn envelope(&self) -> &Envelope {
        &self.envelope
    }

    pub fn step_bound(&self) -> &StepBound {
        &self.eta
    }

    pub fn bound_const(&self) -> f64 {
        self.bound_const
    }

    pub fn growth(&self) -> Option<GrowthParams> {
        self.growth
    }

    pub fn psi(&self, v: f64) -> f64 {
        self.envelope.value(v)
    }

    pub fn psi_inv(&self, r: f64) -> Option<f64> {
        self.envelope.inverse(r)
    }

    pub fn eta(&self, dt: f64) -> f64 {
        self.eta.value(dt)
    }

    fn step_power(&self) -> f64 {
        match self.regime {
            Regime::Multi => 0.5,
            Regime::Scalar => 1.0,
        }
    }

    fn admissibility_label(&self) -> &'static str {
        match self.regime {
            Regime::Multi => "Δ^{1/2} η(Δ)",
            Regime::Scalar => "Δ η(Δ)",
        }
    }

    /// `Δ^{1/2} η(Δ)` (multi) or `Δ η(Δ)` (scalar).
    pub fn scaled_bound(&self, dt: f64) -> f64 {
        dt.powf(self.step_power()) * self.eta(dt)
    }

    /// Whether the regime's step condition holds at this `Δ`.
    pub fn admissible_at(&self, dt: f64) -> bool {
        dt > 0.0 && dt <= 1.0 && self.scaled_bound(dt) <= self.bound_const
    }

    /// Truncation radius `ψ⁻¹(η(Δ))`.
    pub fn radius(&self, dt: f64) -> Result<f64> {
        if !(dt > 0.0 && dt <= 1.0) {
            return Err(Error::Parameter(format!("step size {dt} is outside (0, 1]")));
        }
        let eta = self.eta(dt);
        self.psi_inv(eta).ok_or_else(|| {
            Error::Config(format!(
                "η({dt}) = {eta} does not exceed ψ(0) = {}; the truncation radius is undefined",
                self.psi(0.0)
            ))
        })
    }
}

/// Scalar-regime policy with `φ(r) = 4C₀ e^{(α∨(β+1)) r}`.
///
/// `η` must map into `(4C₀, ∞)` and satisfy `Δ η(Δ) ≤ J₀` on `(0, 1]`.
pub fn default_scalar_policy(
    c0: f64,
    alpha: f64,
    beta: f64,
    eta: StepBound,
    j0: f64,
) -> Result<TruncationPolicy> {
    if !(c0 >= 1.0 && alpha >= 0.0 && beta >= 0.0) {
        return Err(Error::Parameter(format!(
            "need C0 >= 1 and nonnegative α, β; got C0={c0}, α={alpha}, β={beta}"
        )));
    }
    let growth = GrowthParams { c0, alpha, beta };
    let envelope = Envelope::exponential(4.0 * c0, growth.rate())?;
    if !(j0 >= 4.0 * c0) {
        return Err(Error::Config(format!("J0 = {j0} is below 1 ∨ 4C0 = {}", 4.0 * c0)));
    }
    // η is decreasing, so its infimum over (0, 1] is η(1).
    if !(eta.value(1.0) > 4.0 * c0) {
        return Err(Error::Config(format!(
            "η(1) = {} does not exceed 4C0 = {}",
            eta.value(1.0),
            4.0 * c0
        )));
    }
    let mut p = TruncationPolicy::new(Regime::Scalar, envelope, eta, j0)?;
    p.growth = Some(growth);
    Ok(p)
}

/// Projects `z` onto the closed ball of the given radius; the zero vector maps to itself.
pub fn radial_truncate(z: &LogState, radius: f64) -> LogState {
    let mut out = vec![0.0; z.dim()];
    radial_truncate_into(z.as_slice(), radius, &mut out);
    LogState::new(out).expect("projection of a finite vector is finite")
}

// Points within a few ulps of the sphere count as inside, which makes the
// projection exactly idempotent.
const SPHERE_SLACK: f64 = 8.0 * f64::EPSILON;

/// Writes the projection into `out` and returns whether `z` was moved.
pub(crate) fn radial_truncate_into(z: &[f64], radius: f64, out: &mut [f64]) -> bool {
    let r = norm(z);
    if r <= radius * (1.0 + SPHERE_SLACK) {
        out.copy_from_slice(z);
        return false;
    }
    let scale = radius / r;
    for (o, v) in out.iter_mut().zip(z) {
        *o = v * scale;
    }
    true
}

/// Truncated transformed coefficients for a fixed step size.
pub(crate) struct TruncatedField<'a> {
    model: &'a dyn SdeModel,
    radius: f64,
    ws: Workspace,
    projected: Vec<f64>,
}

impl<'a> TruncatedField<'a> {
    pub fn new(model: &'a dyn SdeModel, policy: &TruncationPolicy, dt: f64) -> Result<Self> {
        if policy.regime() == Regime::Scalar && model.dim() != 1 {
            return Err(Error::Dimension {
                what: "scalar-regime policy requires a one-dimensional model",
                expected: 1,
                got: model.dim(),
            });
        }
        Ok(Self::with_radius(model, policy.radius(dt)?))
    }

    pub fn with_radius(model: &'a dyn SdeModel, radius: f64) -> Self {
        Self {
            model,
            radius,
            ws: Workspace::for_model(model),
            projected: vec![0.0; model.dim()],
        }
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Writes `λ̃_Δ(z)` and `σ̃_Δ(z)`.
    pub fn eval(&mut self, z: &[f64], drift: &mut [f64], diffusion: &mut [f64]) -> Result<()> {
        if z.iter().all(|v| *v == 0.0) {
            drift.fill(0.0);
            diffusion.fill(0.0);
            return Ok(());
        }
        if radial_truncate_into(z, self.radius, &mut self.projected) {
            log_coefficients_into(self.model, &self.projected, &mut self.ws, drift, diffusion)
        } else {
            log_coefficients_into(self.model, z, &mut self.ws, drift, diffusion)
        }
    }
}

fn truncated_pair(
    model: &dyn SdeModel,
    policy: &TruncationPolicy,
    dt: f64,
    z: &LogState,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if z.dim() != model.dim() {
        return Err(Error::Dimension {
            what: "log state",
            expected: model.dim(),
            got: z.dim(),
        });
    }
    let mut field = TruncatedField::new(model, policy, dt)?;
    let mut drift = vec![0.0; model.dim()];
    let mut diff = vec![0.0; model.dim() * model.noise_dim()];
    field.eval(z.as_slice(), &mut drift, &mut diff)?;
    Ok((drift, diff))
}

/// `λ̃_Δ(z)`.
pub fn truncated_log_drift(
    model: &dyn SdeModel,
    policy: &TruncationPolicy,
    dt: f64,
    z: &LogState,
) -> Result<Vec<f64>> {
    truncated_pair(model, policy, dt, z).map(|(d, _)| d)
}

/// `σ̃_Δ(z)`.
pub fn truncated_log_diffusion(
    model: &dyn SdeModel,
    policy: &TruncationPolicy,
    dt: f64,
    z: &LogState,
) -> Result<Matrix> {
    let (_, s) = truncated_pair(model, policy, dt, z)?;
    Matrix::from_row_major(model.dim(), model.noise_dim(), s)
}

/// Both sides of the step-size condition that yields the strong rate.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct StepCondition {
    pub dt: f64,
    /// `η(Δ)`.
    pub eta: f64,
    /// Argument passed to the envelope.
    pub argument: f64,
    /// `ψ(argument)` (or `φ` in the scalar regime).
    pub envelope_value: f64,
    pub holds: bool,
}

/// Checks `η(Δ) ≥ ψ(−J ln(Δ^{p/2} η^{p/2}) / ((J−p)(J∧K)))` in the multi regime,
/// or `η(Δ) ≥ φ(−J p ln Δ / (2(J−p)(J∧K)))` in the scalar regime.
///
/// A negative envelope argument is clamped to 0, since `ψ` is only defined on
/// the half-line and is increasing.
pub fn validate_step_condition(
    policy: &TruncationPolicy,
    params: &AssumptionParams,
    p: f64,
    dt: f64,
) -> Result<StepCondition> {
    let (j, k) = (params.big_j, params.big_k);
    if !(j > p) {
        return Err(Error::Parameter(format!("moment order J = {j} must exceed p = {p}")));
    }
    if !(p > 0.0) {
        return Err(Error::Parameter(format!("error order p = {p} must be positive")));
    }
    if !(dt > 0.0 && dt <= 1.0) {
        return Err(Error::Parameter(format!("step size {dt} is outside (0, 1]")));
    }
    let eta = policy.eta(dt);
    let denom = (j - p) * j.min(k);
    let argument = match policy.regime() {
        Regime::Multi => -j * (0.5 * p) * (dt.ln() + eta.ln()) / denom,
        Regime::Scalar => -j * p * dt.ln() / (2.0 * denom),
    };
    let envelope_value = policy.psi(argument.max(0.0));
    Ok(StepCondition {
        dt,
        eta,
        argument,
        envelope_value,
        holds: eta >= envelope_value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::make_lv_model;
    use proptest::prelude::*;

    fn lz(v: &[f64]) -> LogState {
        LogState::new(v.to_vec()).unwrap()
    }

    fn lv2() -> crate::model::LotkaVolterra {
        make_lv_model(vec![2.0, 4.0], Matrix::diag(&[-4.0, -4.0]), vec![1.0, 2.0]).unwrap()
    }

    /// Example policy with `η(Δ) = Δ^{-ε}` exactly.
    fn unit_scale_policy(eps: f64) -> TruncationPolicy {
        TruncationPolicy::new(
            Regime::Multi,
            Envelope::exponential(4.0, 1.0).unwrap(),
            StepBound::power_law(1.0, eps).unwrap(),
            4.0,
        )
        .unwrap()
    }

    #[test]
    fn projection_examples() {
        assert_eq!(radial_truncate(&lz(&[0.1, -0.2]), 1.0), lz(&[0.1, -0.2]));
        let p = radial_truncate(&lz(&[3.0, 4.0]), 1.0);
        assert!((p.as_slice()[0] - 0.6).abs() < 1e-15 && (p.as_slice()[1] - 0.8).abs() < 1e-15);
        assert_eq!(radial_truncate(&lz(&[0.0, 0.0]), 0.5), lz(&[0.0, 0.0]));
    }

    #[test]
    fn sphere_point_is_untouched() {
        let z = lz(&[0.6, 0.8]);
        assert_eq!(radial_truncate(&z, 1.0), z);
    }

    #[test]
    fn inside_ball_matches_untruncated() {
        let pol = unit_scale_policy(0.25);
        let dt = 2f64.powi(-10);
        let r = pol.radius(dt).unwrap();
        assert!((r - (2f64.powf(2.5) / 4.0).ln()).abs() < 1e-15);
        let z = lz(&[0.1, -0.2]);
        assert!(z.norm() < r);
        assert_eq!(
            truncated_log_drift(&lv2(), &pol, dt, &z).unwrap(),
            crate::transform::log_drift(&lv2(), &z).unwrap()
        );
    }

    #[test]
    fn zero_branch_is_exactly_zero() {
        let pol = TruncationPolicy::lv2_preset(0.25).unwrap();
        let z = lz(&[0.0, 0.0]);
        assert_eq!(truncated_log_drift(&lv2(), &pol, 0.01, &z).unwrap(), vec![0.0, 0.0]);
        assert_eq!(
            truncated_log_diffusion(&lv2(), &pol, 0.01, &z).unwrap(),
            Matrix::zeros(2, 2)
        );
    }

    #[test]
    fn far_point_uses_projection() {
        let pol = TruncationPolicy::lv2_preset(0.25).unwrap();
        let dt = 2f64.powi(-6);
        let r = pol.radius(dt).unwrap();
        let z = lz(&[30.0, -40.0]);
        let zp = lz(&[30.0 * r / 50.0, -40.0 * r / 50.0]);
        assert_eq!(
            truncated_log_drift(&lv2(), &pol, dt, &z).unwrap(),
            crate::transform::log_drift(&lv2(), &zp).unwrap()
        );
        assert_eq!(
            truncated_log_diffusion(&lv2(), &pol, dt, &z).unwrap(),
            Matrix::diag(&[1.0, 2.0])
        );
    }

    #[test]
    fn undefined_radius_is_config_error() {
        // η(2^-6) = 2^1.5 < ψ(0) = 4
        let pol = unit_scale_policy(0.25);
        assert!(matches!(pol.radius(2f64.powi(-6)), Err(Error::Config(_))));
    }

    #[test]
    fn scalar_policy_requires_scalar_model() {
        let pol = default_scalar_policy(1.0, 1.0, 0.0, StepBound::power_law(8.0, 0.5).unwrap(), 8.0)
            .unwrap();
        assert!(matches!(
            truncated_log_drift(&lv2(), &pol, 0.1, &lz(&[0.1, 0.1])),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn scalar_default_envelope() {
        let pol = default_scalar_policy(1.0, 1.0, 0.0, StepBound::power_law(8.0, 0.5).unwrap(), 8.0)
            .unwrap();
        // φ(r) = 4 e^r, φ⁻¹(r) = ln(r/4)
        for r in [0.0, 0.5, 2.0, 7.0] {
            assert!((pol.psi(r) - 4.0 * f64::exp(r)).abs() <= 1e-13 * pol.psi(r));
        }
        for r in [4.5, 10.0, 1e4] {
            assert!((pol.psi_inv(r).unwrap() - (r / 4.0).ln()).abs() < 1e-14);
        }
        assert!((pol.psi_inv(pol.psi(2.0)).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(pol.psi(0.0), 4.0);
        assert_eq!(pol.psi_inv(4.0), None);
        assert_eq!(pol.regime(), Regime::Scalar);
    }

    #[test]
    fn scalar_default_rejects_bad_eta() {
        // Δ η(Δ) = 8 Δ^{-0.5}: unbounded
        assert!(default_scalar_policy(1.0, 1.0, 0.0, StepBound::power_law(8.0, 1.5).unwrap(), 8.0).is_err());
        // η(1) = 3 <= 4 C0
        assert!(default_scalar_policy(1.0, 1.0, 0.0, StepBound::power_law(3.0, 0.5).unwrap(), 8.0).is_err());
        // J0 below the scale of η
        assert!(default_scalar_policy(1.0, 1.0, 0.0, StepBound::power_law(16.0, 0.5).unwrap(), 8.0).is_err());
        assert!(default_scalar_policy(0.5, 1.0, 0.0, StepBound::power_law(16.0, 0.5).unwrap(), 16.0).is_err());
    }

    #[test]
    fn multi_policy_invariants() {
        assert!(TruncationPolicy::exponential(4.0, 1.0, 10.0, 0.6).is_err());
        // Δ^{1/2}η(Δ) = 50 exactly at ε = 1/2
        let p = TruncationPolicy::lv3_preset();
        assert_eq!(p.scaled_bound(1.0), 50.0);
        assert!(p.admissible_at(2f64.powi(-6)));
        // bound constant below ψ(0)
        assert!(TruncationPolicy::new(
            Regime::Multi,
            Envelope::exponential(50.0, 1.0).unwrap(),
            StepBound::power_law(10.0, 0.5).unwrap(),
            10.0
        )
        .is_err());
        let unchecked = TruncationPolicy::new_unchecked(
            Regime::Multi,
            Envelope::exponential(4.0, 1.0).unwrap(),
            StepBound::power_law(600.0, 0.25).unwrap(),
            10.0,
        );
        assert!(unchecked.validate().is_err());
        assert!(!unchecked.admissible_at(2f64.powi(-6)));
    }

    #[test]
    fn custom_eta_is_scanned() {
        let ok = TruncationPolicy::new(
            Regime::Multi,
            Envelope::custom(|v| 2.0 + v * v, |r| (r - 2.0).sqrt()),
            StepBound::custom(|dt| 3.0 / dt.sqrt()),
            3.0,
        );
        assert!(ok.is_ok());
        let increasing = TruncationPolicy::new(
            Regime::Multi,
            Envelope::custom(|v| 2.0 + v * v, |r| (r - 2.0).sqrt()),
            StepBound::custom(|dt| 3.0 + dt),
            5.0,
        );
        assert!(increasing.is_err());
        let r = ok.unwrap().radius(0.25).unwrap();
        assert!((r - 2.0).abs() < 1e-15);
    }

    #[test]
    fn step_condition_example() {
        let pol = unit_scale_policy(0.25);
        let params = AssumptionParams {
            big_j: 100.0,
            big_k: 100.0,
            ..AssumptionParams::default_for_dim(2)
        };
        let dt = 2f64.powi(-10);
        let c = validate_step_condition(&pol, &params, 2.0, dt).unwrap();
        // direct arithmetic: argument = 100 * 0.75 * ln 2^10 / (98 * 100)
        let arg = 0.75 * 10.0 * 2f64.ln() / 98.0;
        assert!((c.argument - arg).abs() < 1e-14);
        assert!((c.envelope_value - 4.0 * arg.exp()).abs() < 1e-13);
        assert!((c.eta - 2f64.powf(2.5)).abs() < 1e-13);
        assert!(c.holds);
        // the reduced form 1 >= 4 Δ^{0.2347}
        let exponent: f64 = 0.25 - 150.0 / 9800.0;
        assert!((exponent - 0.2347).abs() < 1e-4);
        assert!(4.0 * dt.powf(exponent) <= 1.0);
        assert!((4.0 * dt.powf(exponent) - 0.78).abs() < 0.01);
    }

    #[test]
    fn step_condition_rejects_j_not_above_p() {
        let pol = unit_scale_policy(0.25);
        let params = AssumptionParams {
            big_j: 2.0,
            ..AssumptionParams::default_for_dim(2)
        };
        assert!(matches!(
            validate_step_condition(&pol, &params, 2.0, 0.01),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn scalar_step_condition() {
        let pol = default_scalar_policy(2.0, 1.0, 0.0, StepBound::power_law(8.0 * 2f64.exp(), 0.5).unwrap(), 8.0 * 2f64.exp())
            .unwrap();
        let params = AssumptionParams {
            big_j: 40.0,
            big_k: 40.0,
            ..AssumptionParams::default_for_dim(1)
        };
        let dt = 2f64.powi(-12);
        let c = validate_step_condition(&pol, &params, 2.0, dt).unwrap();
        let arg = 40.0 * 2.0 * 12.0 * 2f64.ln() / (2.0 * 38.0 * 40.0);
        assert!((c.argument - arg).abs() < 1e-14);
        assert!((c.envelope_value - 8.0 * arg.exp()).abs() < 1e-12);
        assert!(c.holds);
    }

    proptest! {
        #[test]
        fn projection_is_idempotent(
            z in proptest::collection::vec(-50.0..50.0f64, 1..6),
            r in 1e-3..20.0f64,
        ) {
            let z = lz(&z);
            let once = radial_truncate(&z, r);
            prop_assert_eq!(radial_truncate(&once, r), once.clone());
            let expect = z.norm().min(r);
            prop_assert!((once.norm() - expect).abs() <= 4.0 * f64::EPSILON * expect);
        }
    }
}

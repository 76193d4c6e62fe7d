//! Named models and truncation policies used by the command line and the examples.
//!
//! Models: `lv2`, `lv2-fig2`, `lv3`, `lv1`.
//! Policies: `ex1-eps{ε}`, `fig2-eps{ε}`, `ex2`, `scalar-default`.

use std::sync::Arc;

use crate::assumptions::AssumptionParams;
use crate::error::{Error, Result};
use crate::model::{make_lv3_model, make_lv_model, LotkaVolterra, Matrix, SdeModel};
use crate::state::PositiveState;
use crate::truncation::{default_scalar_policy, Envelope, Regime, StepBound, TruncationPolicy};

pub const MODEL_NAMES: &[&str] = &["lv2", "lv2-fig2", "lv3", "lv1"];
pub const POLICY_NAMES: &[&str] = &["ex1-eps{ε}", "fig2-eps{ε}", "ex2", "scalar-default"];

/// A named model with its initial state and default policy.
#[derive(Clone)]
pub struct ModelPreset {
    pub name: &'static str,
    pub model: Arc<dyn SdeModel>,
    pub y0: PositiveState,
    pub default_policy: &'static str,
    /// Moment orders `(J, K)` used when none are given.
    pub default_jk: (f64, f64),
}

impl std::fmt::Debug for ModelPreset {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ModelPreset")
            .field("name", &self.name)
            .field("y0", &self.y0)
            .field("default_policy", &self.default_policy)
            .finish()
    }
}

impl ModelPreset {
    /// Assumption constants for the given moment orders.
    pub fn assumption_params(&self, big_j: f64, big_k: f64) -> Result<AssumptionParams> {
        assumption_params(self.name, big_j, big_k)
    }

    pub fn default_assumption_params(&self) -> AssumptionParams {
        assumption_params(self.name, self.default_jk.0, self.default_jk.1).expect("preset constants are valid")
    }
}

pub fn lv2_model() -> LotkaVolterra {
    make_lv_model(vec![2.0, 4.0], Matrix::diag(&[-4.0, -4.0]), vec![1.0, 2.0])
        .expect("static dimensions")
        .with_name("lv2")
}

/// The strongly driven two-species model used for the baseline comparison.
pub fn lv2_fig2_model() -> LotkaVolterra {
    make_lv_model(vec![10.0, 6.0], Matrix::diag(&[-10.0, -8.0]), vec![3.0, 2.0])
        .expect("static dimensions")
        .with_name("lv2-fig2")
}

/// Scalar logistic model `dy = y(2 − 4y) dt + y dB`.
pub fn lv1_model() -> LotkaVolterra {
    make_lv_model(vec![2.0], Matrix::diag(&[-4.0]), vec![1.0])
        .expect("static dimensions")
        .with_name("lv1")
}

fn positive(v: &[f64]) -> PositiveState {
    PositiveState::new(v.to_vec()).expect("static positive state")
}

pub fn model(name: &str) -> Result<ModelPreset> {
    let p = match name {
        "lv2" => ModelPreset {
            name: "lv2",
            model: Arc::new(lv2_model()),
            y0: positive(&[1.0, 2.0]),
            default_policy: "ex1-eps0.25",
            default_jk: (4.0, 0.5),
        },
        "lv2-fig2" => ModelPreset {
            name: "lv2-fig2",
            model: Arc::new(lv2_fig2_model()),
            y0: positive(&[1.0, 2.0]),
            default_policy: "fig2-eps0.25",
            default_jk: (4.0, 1.0),
        },
        "lv3" => ModelPreset {
            name: "lv3",
            model: Arc::new(make_lv3_model()),
            y0: positive(&[0.5, 2.0, 1.0]),
            default_policy: "ex2",
            default_jk: (4.0, 0.3),
        },
        "lv1" => ModelPreset {
            name: "lv1",
            model: Arc::new(lv1_model()),
            // away from z = 0, where the truncated coefficients vanish
            y0: positive(&[0.5]),
            default_policy: "scalar-default",
            default_jk: (4.0, 1.0),
        },
        _ => {
            return Err(Error::Config(format!(
                "unknown model '{name}' (known: {})",
                MODEL_NAMES.join(", ")
            )))
        }
    };
    Ok(p)
}

fn parse_eps(name: &str, prefix: &str) -> Option<Result<f64>> {
    let rest = name.strip_prefix(prefix)?;
    Some(
        rest.parse::<f64>()
            .map_err(|_| Error::Config(format!("policy '{name}': cannot parse ε from '{rest}'"))),
    )
}

/// Policy parts `(regime, envelope, η, bound constant)` of a named preset.
fn policy_parts(name: &str) -> Result<(Regime, Envelope, StepBound, f64)> {
    let exp = |scale: f64, eps: f64| -> Result<(Regime, Envelope, StepBound, f64)> {
        if !(eps > 0.0 && eps <= 0.5) {
            return Err(Error::Parameter(format!("ε = {eps} is outside (0, 1/2]")));
        }
        let c = scale * 5f64.exp();
        Ok((
            Regime::Multi,
            Envelope::exponential(scale, 1.0)?,
            StepBound::power_law(c, eps)?,
            c,
        ))
    };
    if let Some(eps) = parse_eps(name, "ex1-eps") {
        return exp(4.0, eps?);
    }
    if let Some(eps) = parse_eps(name, "fig2-eps") {
        return exp(20.0, eps?);
    }
    match name {
        "ex2" => Ok((
            Regime::Multi,
            Envelope::exponential(50.0, 1.0)?,
            StepBound::power_law(50.0, 0.5)?,
            50.0,
        )),
        "scalar-default" => Ok((
            Regime::Scalar,
            Envelope::exponential(4.0, 1.0)?,
            StepBound::power_law(8.0, 0.5)?,
            8.0,
        )),
        _ => Err(Error::Config(format!(
            "unknown policy '{name}' (known: {})",
            POLICY_NAMES.join(", ")
        ))),
    }
}

/// A validated policy preset.
pub fn policy(name: &str) -> Result<TruncationPolicy> {
    if name == "scalar-default" {
        // ψ = φ with C₀ = 1, α = 1, β = 0; η(Δ) = 8 Δ^{-1/2}, J₀ = 8
        return default_scalar_policy(1.0, 1.0, 0.0, StepBound::power_law(8.0, 0.5)?, 8.0);
    }
    let (regime, envelope, eta, bound) = policy_parts(name)?;
    TruncationPolicy::new(regime, envelope, eta, bound)
}

/// A policy preset with an optional bound-constant override, left unvalidated
/// so that inadmissible configurations can be diagnosed.
pub fn policy_unchecked(name: &str, bound_const: Option<f64>) -> Result<TruncationPolicy> {
    let (regime, envelope, eta, bound) = policy_parts(name)?;
    Ok(TruncationPolicy::new_unchecked(
        regime,
        envelope,
        eta,
        bound_const.unwrap_or(bound),
    ))
}

/// `sup_{y>0} (c2 y² + c3 y³)/(1 + y²)` on a log grid, with a 1% margin and a floor of 1.
fn growth_constant(c2: f64, c3: f64) -> f64 {
    let mut best: f64 = 0.0;
    for k in -300..=400 {
        let y = 10f64.powf(k as f64 / 100.0);
        best = best.max((c2 * y * y + c3 * y * y * y) / (1.0 + y * y));
    }
    (1.01 * best).max(1.0)
}

/// Assumption constants for a Lotka–Volterra model with `α = 1`, `β = 0`, `p* = 3`.
///
/// `y*ᵢ` is half the root of `bᵢ + aᵢᵢ y − (K+1)/2 μᵢ²` when that root is
/// positive and `0.1` otherwise. For a non-diagonal `A` only the diagonal
/// enters `H` and `L2`.
pub fn lv_assumption_params(model: &LotkaVolterra, big_j: f64, big_k: f64) -> AssumptionParams {
    let (b, a, mu) = (model.growth(), model.interaction(), model.noise());
    let d = b.len();
    let p_star = 3.0;
    let bmax = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mumax = mu.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let l1 = bmax.max(a.norm()).max(mumax).max(1e-3);
    let mut l2: f64 = 1e-3;
    let mut y_star = vec![0.1; d];
    let mut big_h = vec![1.0; d];
    for i in 0..d {
        let aii = a.get(i, i);
        l2 = l2.max(b[i] + 0.5 * (p_star - 1.0) * mu[i] * mu[i]);
        let margin = b[i] - 0.5 * (big_k + 1.0) * mu[i] * mu[i];
        if margin > 0.0 && aii < 0.0 {
            y_star[i] = 0.5 * margin / -aii;
        }
        big_h[i] = growth_constant(b[i] + 0.5 * (big_j - 1.0) * mu[i] * mu[i], aii.min(0.0));
    }
    AssumptionParams {
        alpha: 1.0,
        beta: 0.0,
        big_j,
        big_k,
        l1,
        l2,
        p_star,
        y_star,
        big_h,
    }
}

/// Assumption constants for the three-species model, using `N1 ≤ 10`, `N2 ≤ 2.5`, `N3 ≤ 7`.
pub fn lv3_assumption_params(big_j: f64, big_k: f64) -> AssumptionParams {
    let lin = [50.0, 30.0, 20.0];
    let quad = [-55.0, -10.0, -15.0];
    let nmax: [f64; 3] = [10.0, 2.5, 7.0];
    let big_h = (0..3)
        .map(|i| growth_constant(lin[i] + 0.5 * (big_j - 1.0) * nmax[i] * nmax[i], quad[i]))
        .collect();
    AssumptionParams {
        alpha: 1.0,
        beta: 0.0,
        big_j,
        big_k,
        l1: 60.0,
        l2: 450.0,
        p_star: 3.0,
        y_star: vec![0.1; 3],
        big_h,
    }
}

pub fn assumption_params(model_name: &str, big_j: f64, big_k: f64) -> Result<AssumptionParams> {
    let p = match model_name {
        "lv2" => lv_assumption_params(&lv2_model(), big_j, big_k),
        "lv2-fig2" => lv_assumption_params(&lv2_fig2_model(), big_j, big_k),
        "lv1" => lv_assumption_params(&lv1_model(), big_j, big_k),
        "lv3" => lv3_assumption_params(big_j, big_k),
        _ => return Err(Error::Config(format!("unknown model '{model_name}'"))),
    };
    let d = p.y_star.len();
    p.validate(d)?;
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assumptions::{check_assumptions, Clause, LogUniformSampler};

    #[test]
    fn every_model_and_policy_resolves() {
        for name in MODEL_NAMES {
            let p = model(name).unwrap();
            assert_eq!(p.model.name(), *name);
            assert_eq!(p.y0.dim(), p.model.dim());
            policy(p.default_policy).unwrap();
            p.default_assumption_params();
        }
        assert!(model("lv9").is_err());
        assert!(policy("ex1-epsx").is_err());
        assert!(policy("ex1-eps0.75").is_err());
        assert!(policy("nope").is_err());
    }

    #[test]
    fn ex1_radius_grows_with_eps_ln_inverse_dt() {
        let p = policy("ex1-eps0.25").unwrap();
        let dt = 2f64.powi(-8);
        let r = p.radius(dt).unwrap();
        assert!((r - (5.0 + 0.25 * 8.0 * 2f64.ln())).abs() < 1e-12);
        assert_eq!(p.radius(1.0).unwrap(), 5.0);
    }

    #[test]
    fn ex2_is_the_literal_three_species_policy() {
        let p = policy("ex2").unwrap();
        assert_eq!(p.eta(0.25), 100.0);
        assert_eq!(p.psi(0.0), 50.0);
        assert_eq!(p.scaled_bound(0.25), 50.0);
        assert_eq!(p.bound_const(), 50.0);
    }

    #[test]
    fn bound_override_is_unchecked() {
        let p = policy_unchecked("ex1-eps0.25", Some(100.0)).unwrap();
        assert!(p.validate().is_err());
        assert!(!p.admissible_at(2f64.powi(-6)));
    }

    #[test]
    fn lv_presets_pass_sampled_assumptions() {
        for name in ["lv2", "lv2-fig2", "lv1"] {
            let p = model(name).unwrap();
            let params = p.default_assumption_params();
            let mut s = LogUniformSampler::standard(3);
            let r = check_assumptions(p.model.as_ref(), &params, &mut s, 5000).unwrap();
            assert!(r.no_violation_found(), "{name}: {r:?}");
            assert!(r.moment_hypothesis == (params.big_j >= 4.0 && params.big_k >= 0.0));
        }
    }

    #[test]
    fn lv3_lower_boundary_fails_for_the_third_species() {
        let p = model("lv3").unwrap();
        let mut s = LogUniformSampler::standard(3);
        let r = check_assumptions(p.model.as_ref(), &p.default_assumption_params(), &mut s, 5000).unwrap();
        let lower = r.clause(Clause::LowerBoundary);
        assert!(lower.violations > 0);
        assert_eq!(lower.worst.as_ref().unwrap().component, Some(2));
        assert!(r.clause(Clause::LocalLipschitz).passed());
        assert!(r.clause(Clause::UpperGrowth).passed());
    }
}

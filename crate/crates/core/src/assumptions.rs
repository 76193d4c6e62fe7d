//! Sampled falsification of the growth and monotonicity conditions on a model.
//!
//! The conditions quantify over the whole positive cone, so sampling can only
//! find counterexamples. A clean report does not certify anything.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::SdeModel;
use crate::state::{check_positive, norm};

/// Constants of the local Lipschitz, one-sided growth and monotonicity conditions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionParams {
    /// Polynomial growth exponent α.
    pub alpha: f64,
    /// Inverse growth exponent β.
    pub beta: f64,
    /// Moment order J (> 1).
    pub big_j: f64,
    /// Inverse-moment order K.
    pub big_k: f64,
    /// Local Lipschitz scale L1.
    pub l1: f64,
    /// Monotonicity constant L2.
    pub l2: f64,
    /// Monotonicity exponent p* (> 2).
    pub p_star: f64,
    /// Per-component thresholds y*ᵢ separating the two one-sided conditions.
    pub y_star: Vec<f64>,
    /// Per-component constants Hⁱ.
    pub big_h: Vec<f64>,
}

impl AssumptionParams {
    pub fn default_for_dim(d: usize) -> Self {
        Self {
            alpha: 1.0,
            beta: 0.0,
            big_j: 4.0,
            big_k: 1.0,
            l1: 1.0,
            l2: 1.0,
            p_star: 3.0,
            y_star: vec![0.1; d],
            big_h: vec![1.0; d],
        }
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        let bad = |msg: &str| Err(Error::Parameter(msg.to_string()));
        if !(self.alpha >= 0.0 && self.beta >= 0.0) {
            return bad("α and β must be nonnegative");
        }
        if !(self.big_j > 1.0) {
            return bad("J must exceed 1");
        }
        if !(self.big_k > 0.0 && self.l1 > 0.0 && self.l2 > 0.0) {
            return bad("K, L1 and L2 must be positive");
        }
        if !(self.p_star > 2.0) {
            return bad("p* must exceed 2");
        }
        if self.y_star.len() != d || self.big_h.len() != d {
            return Err(Error::Dimension {
                what: "y* / H vectors",
                expected: d,
                got: self.y_star.len().min(self.big_h.len()),
            });
        }
        if self.y_star.iter().chain(&self.big_h).any(|v| !(*v > 0.0)) {
            return bad("y* and H must be positive");
        }
        Ok(())
    }

    /// `J ≥ 2(α+1)` and `K ≥ 2β`, needed for moment bounds of the exact solution.
    pub fn moment_hypothesis_holds(&self) -> bool {
        self.big_j >= 2.0 * (self.alpha + 1.0) && self.big_k >= 2.0 * self.beta
    }
}

/// Source of sample points in the positive cone.
pub trait PositiveSampler {
    fn sample(&mut self, out: &mut [f64]);
}

impl<F: FnMut(&mut [f64])> PositiveSampler for F {
    fn sample(&mut self, out: &mut [f64]) {
        self(out)
    }
}

/// Independent log-uniform components on `[lo, hi]`.
#[derive(Debug, Clone)]
pub struct LogUniformSampler {
    log_lo: f64,
    log_hi: f64,
    rng: ChaCha8Rng,
}

impl LogUniformSampler {
    pub fn new(lo: f64, hi: f64, seed: u64) -> Result<Self> {
        if !(lo > 0.0 && hi > lo && hi.is_finite()) {
            return Err(Error::Parameter(format!("invalid sampling range [{lo}, {hi}]")));
        }
        Ok(Self {
            log_lo: lo.ln(),
            log_hi: hi.ln(),
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    /// `[1e-3, 1e3]`.
    pub fn standard(seed: u64) -> Self {
        Self::new(1e-3, 1e3, seed).expect("static range is valid")
    }
}

impl PositiveSampler for LogUniformSampler {
    fn sample(&mut self, out: &mut [f64]) {
        for v in out.iter_mut() {
            let u = (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
            *v = (self.log_lo + u * (self.log_hi - self.log_lo)).exp();
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Clause {
    /// `|λ(a)−λ(b)| ∨ |σ(a)−σ(b)| ≤ L1(1+|a|^α+|b|^α+|a|^{-β}+|b|^{-β})|a−b|`.
    LocalLipschitz,
    /// `yᵢλⁱ(y) − (K+1)/2 |σᵢ(y)|² ≥ 0` for `yᵢ < y*ᵢ`.
    LowerBoundary,
    /// `yᵢλⁱ(y) + (J−1)/2 |σᵢ(y)|² ≤ Hⁱ(1+yᵢ²)` for `yᵢ ≥ y*ᵢ`.
    UpperGrowth,
    /// `(a−b)ᵀ(λ(a)−λ(b)) + (p*−1)/2 |σ(a)−σ(b)|² ≤ L2|a−b|²`.
    Monotone,
}

/// A sample at which a clause failed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub points: Vec<Vec<f64>>,
    pub component: Option<usize>,
    /// Left- and right-hand sides of the inequality, oriented as `lhs ≤ rhs`.
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClauseReport {
    pub clause: Clause,
    pub evaluations: usize,
    /// Smallest `rhs − lhs` seen; negative means a violation.
    pub worst_slack: f64,
    pub violations: usize,
    pub worst: Option<Witness>,
}

impl ClauseReport {
    fn new(clause: Clause) -> Self {
        Self {
            clause,
            evaluations: 0,
            worst_slack: f64::INFINITY,
            violations: 0,
            worst: None,
        }
    }

    fn record(&mut self, lhs: f64, rhs: f64, points: impl FnOnce() -> Vec<Vec<f64>>, component: Option<usize>) {
        self.evaluations += 1;
        let slack = rhs - lhs;
        let tol = 1e-12 * lhs.abs().max(rhs.abs());
        let violated = !(slack >= -tol);
        if violated {
            self.violations += 1;
        }
        if slack < self.worst_slack || (slack.is_nan() && self.worst.is_none()) {
            self.worst_slack = slack;
            if violated {
                self.worst = Some(Witness {
                    points: points(),
                    component,
                    lhs,
                    rhs,
                });
            }
        }
    }

    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionReport {
    pub samples: usize,
    pub clauses: Vec<ClauseReport>,
    /// Whether `J ≥ 2(α+1)` and `K ≥ 2β`.
    pub moment_hypothesis: bool,
}

impl AssumptionReport {
    pub fn clause(&self, c: Clause) -> &ClauseReport {
        self.clauses
            .iter()
            .find(|r| r.clause == c)
            .expect("every clause is reported")
    }

    /// No sampled violation. This does not certify the conditions.
    pub fn no_violation_found(&self) -> bool {
        self.clauses.iter().all(ClauseReport::passed)
    }
}

struct Eval {
    lam: Vec<f64>,
    sig: Vec<f64>,
}

fn eval(model: &dyn SdeModel, y: &[f64]) -> Eval {
    let mut lam = vec![0.0; model.dim()];
    let mut sig = vec![0.0; model.dim() * model.noise_dim()];
    model.drift_into(y, &mut lam);
    model.diffusion_into(y, &mut sig);
    Eval { lam, sig }
}

fn diff(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn pair_clauses(
    model: &dyn SdeModel,
    params: &AssumptionParams,
    a: &[f64],
    b: &[f64],
    lip: &mut ClauseReport,
    mono: &mut ClauseReport,
) {
    let (ea, eb) = (eval(model, a), eval(model, b));
    let dy = diff(a, b);
    let dlam = diff(&ea.lam, &eb.lam);
    let dsig = diff(&ea.sig, &eb.sig);
    let (na, nb, ndy) = (norm(a), norm(b), norm(&dy));
    let pts = || vec![a.to_vec(), b.to_vec()];

    let growth = 1.0
        + na.powf(params.alpha)
        + nb.powf(params.alpha)
        + na.powf(-params.beta)
        + nb.powf(-params.beta);
    lip.record(norm(&dlam).max(norm(&dsig)), params.l1 * growth * ndy, pts, None);

    let inner: f64 = dy.iter().zip(&dlam).map(|(x, y)| x * y).sum();
    let sq = norm(&dsig).powi(2);
    mono.record(
        inner + 0.5 * (params.p_star - 1.0) * sq,
        params.l2 * ndy * ndy,
        pts,
        None,
    );
}

/// Samples `n_samples` points (and pairs built from them) and evaluates every clause.
pub fn check_assumptions(
    model: &dyn SdeModel,
    params: &AssumptionParams,
    sampler: &mut dyn PositiveSampler,
    n_samples: usize,
) -> Result<AssumptionReport> {
    if n_samples == 0 {
        return Err(Error::Parameter("need at least one sample".into()));
    }
    let d = model.dim();
    let m = model.noise_dim();
    params.validate(d)?;

    let mut lip = ClauseReport::new(Clause::LocalLipschitz);
    let mut lower = ClauseReport::new(Clause::LowerBoundary);
    let mut upper = ClauseReport::new(Clause::UpperGrowth);
    let mut mono = ClauseReport::new(Clause::Monotone);

    let mut a = vec![0.0; d];
    let mut b = vec![0.0; d];
    let mut c = vec![0.0; d];
    for _ in 0..n_samples {
        sampler.sample(&mut a);
        sampler.sample(&mut b);
        sampler.sample(&mut c);
        for v in [&a, &b, &c] {
            check_positive(v)?;
        }
        // a nearby partner probes the local slope
        let near: Vec<f64> = a
            .iter()
            .zip(&c)
            .map(|(x, y)| x.powf(0.999) * y.powf(0.001))
            .collect();

        pair_clauses(model, params, &a, &b, &mut lip, &mut mono);
        pair_clauses(model, params, &a, &near, &mut lip, &mut mono);

        let ea = eval(model, &a);
        for i in 0..d {
            let row = &ea.sig[i * m..(i + 1) * m];
            let sq: f64 = row.iter().map(|s| s * s).sum();
            let yl = a[i] * ea.lam[i];
            let pts = || vec![a.clone()];
            if a[i] < params.y_star[i] {
                lower.record(0.0, yl - 0.5 * (params.big_k + 1.0) * sq, pts, Some(i));
            } else {
                upper.record(
                    yl + 0.5 * (params.big_j - 1.0) * sq,
                    params.big_h[i] * (1.0 + a[i] * a[i]),
                    pts,
                    Some(i),
                );
            }
        }
    }

    Ok(AssumptionReport {
        samples: n_samples,
        clauses: vec![lip, lower, upper, mono],
        moment_hypothesis: params.moment_hypothesis_holds(),
    })
}

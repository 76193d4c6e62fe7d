use rand_chacha::rand_core::RngCore;
use serde::Serialize;

use super::{pairwise_sum, par_map, steps_for, ExperimentConfig, Setup};
use crate::brownian::{channel_rng, standard_normal, BrownianPath};
use crate::error::{Error, Result};
use crate::integrators::LtemStepper;
use crate::state::norm;

/// Monte Carlo estimate of `E[e^{γ|Q|}]` for `Q ~ N(0, Δ I_m)` against `2^m e^{γ²Δ/2}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GaussianBoundReport {
    pub m: usize,
    pub gamma: f64,
    pub dt: f64,
    pub samples: usize,
    pub estimate: f64,
    pub stderr: f64,
    pub bound: f64,
    /// `estimate + 4·stderr ≤ bound`.
    pub passes: bool,
}

const CHUNK: usize = 1 << 14;

/// Samples `n_samples` Gaussian vectors from the counter-based stream keyed on `seed`.
pub fn gaussian_bound_check(m: usize, gamma: f64, dt: f64, n_samples: usize, seed: u64) -> Result<GaussianBoundReport> {
    if m == 0 || m > crate::brownian::MAX_CHANNELS {
        return Err(Error::Parameter(format!("dimension {m} is out of range")));
    }
    if !(gamma > 0.0 && dt > 0.0) {
        return Err(Error::Parameter(format!("need γ > 0 and Δ > 0, got γ={gamma}, Δ={dt}")));
    }
    if n_samples < 2 {
        return Err(Error::Parameter("need at least two samples".into()));
    }
    let scale = dt.sqrt();
    let chunks = n_samples.div_ceil(CHUNK);
    let sums = par_map(chunks, 0, |c| {
        let len = CHUNK.min(n_samples - c * CHUNK);
        let mut rngs: Vec<_> = (0..m).map(|j| channel_rng(seed, c as u64, j)).collect();
        let mut q = vec![0.0; m];
        let mut vals = Vec::with_capacity(len);
        for _ in 0..len {
            for (qj, rng) in q.iter_mut().zip(rngs.iter_mut()) {
                *qj = scale * standard_normal(rng.next_u64());
            }
            vals.push((gamma * norm(&q)).exp());
        }
        let sq: Vec<f64> = vals.iter().map(|v| v * v).collect();
        (pairwise_sum(&vals), pairwise_sum(&sq))
    })?;
    let n = n_samples as f64;
    let s1 = pairwise_sum(&sums.iter().map(|s| s.0).collect::<Vec<_>>());
    let s2 = pairwise_sum(&sums.iter().map(|s| s.1).collect::<Vec<_>>());
    let estimate = s1 / n;
    let var = ((s2 - n * estimate * estimate) / (n - 1.0)).max(0.0);
    let stderr = (var / n).sqrt();
    let bound = 2f64.powi(m as i32) * (0.5 * gamma * gamma * dt).exp();
    Ok(GaussianBoundReport {
        m,
        gamma,
        dt,
        samples: n_samples,
        estimate,
        stderr,
        bound,
        passes: estimate + 4.0 * stderr <= bound,
    })
}

/// Orders of the moment diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentOptions {
    /// `J` in `E|y_Δ(t)|^J`.
    pub big_j: f64,
    /// `K` in `E|y_Δ(t)|^{-K}`.
    pub big_k: f64,
    /// `p̄` in `E[(y_Δ,i(t)/y_Δ,i(t_k))^p̄]`.
    pub p_bar: f64,
    /// Where the ratio is sampled inside each step: `0` (grid point) or `1/2` (midpoint).
    pub fraction: f64,
}

impl Default for MomentOptions {
    fn default() -> Self {
        Self {
            big_j: 4.0,
            big_k: 2.0,
            p_bar: 2.0,
            fraction: 0.5,
        }
    }
}

/// Suprema over the grid of the Monte Carlo moments at one step size.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentRow {
    pub dt_exponent: u32,
    pub sup_moment: f64,
    pub sup_inverse_moment: f64,
    /// Largest over steps and components of the ratio moment.
    pub sup_ratio_moment: f64,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentReport {
    pub options: MomentOptions,
    pub rows: Vec<MomentRow>,
    /// `max/min` across the ladder of each supremum: moment, inverse moment, ratio.
    pub variation: [f64; 3],
}

impl MomentReport {
    /// Every supremum varies by less than `factor` across the ladder.
    pub fn is_flat(&self, factor: f64) -> bool {
        self.variation.iter().all(|v| *v < factor)
    }
}

const PATH_CHUNK: usize = 32;

/// Sup-over-grid moments of LTEM for every ladder step.
///
/// Each path draws fine noise at the reference step; the midpoint interpolant
/// `z_k + λ̃_Δ(z_k)Δ/2 + σ̃_Δ(z_k)(B(t_k+Δ/2) − B(t_k))` uses exact half-block sums.
pub fn moment_diagnostics(cfg: &ExperimentConfig, options: MomentOptions) -> Result<MomentReport> {
    moment_diagnostics_with(&cfg.resolve()?, cfg, options)
}

pub fn moment_diagnostics_with(setup: &Setup, cfg: &ExperimentConfig, options: MomentOptions) -> Result<MomentReport> {
    cfg.validate()?;
    if !(options.fraction == 0.0 || options.fraction == 0.5) {
        return Err(Error::Parameter("the ratio is sampled at fraction 0 or 1/2 only".into()));
    }
    if let Some(e) = cfg.ladder.iter().find(|e| **e >= cfg.ref_exponent) {
        return Err(Error::Config(format!(
            "ladder step 2^-{e} needs a strictly finer reference for midpoints"
        )));
    }
    let model = setup.model.as_ref();
    let (d, m) = (model.dim(), model.noise_dim());
    let ref_dt = 2f64.powi(-(cfg.ref_exponent as i32));
    let n_ref = steps_for(cfg.horizon, cfg.ref_exponent)?;

    let mut rows = Vec::new();
    for &e in &cfg.ladder {
        let dt = 2f64.powi(-(e as i32));
        let n = steps_for(cfg.horizon, e)?;
        let half_factor = 1usize << (cfg.ref_exponent - e - 1);
        // layout: n+1 moments, n+1 inverse moments, n·d ratio moments
        let width = 2 * (n + 1) + n * d;
        LtemStepper::new(model, &setup.policy, dt)?;

        let chunks = cfg.paths.div_ceil(PATH_CHUNK);
        let partial = par_map(chunks, cfg.workers, |c| -> Result<(Vec<f64>, usize)> {
            let mut acc = vec![0.0; width];
            let mut failures = 0;
            let mut vals = vec![0.0; width];
            for i in c * PATH_CHUNK..cfg.paths.min((c + 1) * PATH_CHUNK) {
                let path = BrownianPath::generate(cfg.seed, i as u64, m, ref_dt, n_ref)?;
                let half = path.coarsen(half_factor)?;
                let full = half.coarsen(2)?;
                let mut stepper = LtemStepper::new(model, &setup.policy, dt)?;
                let mut z: Vec<f64> = setup.y0.as_slice().iter().map(|v| v.ln()).collect();
                let mut mid = vec![0.0; d];
                let zero = vec![0.0; m];
                let mut ok = true;
                for k in 0..=n {
                    let y: Vec<f64> = z.iter().map(|v| v.exp()).collect();
                    let r = norm(&y);
                    vals[k] = r.powf(options.big_j);
                    vals[n + 1 + k] = r.powf(-options.big_k);
                    if k == n {
                        break;
                    }
                    let (tau, w) = if options.fraction == 0.0 {
                        (0.0, zero.as_slice())
                    } else {
                        (0.5 * dt, half.step(2 * k))
                    };
                    if stepper.partial_step(&z, tau, w, &mut mid).is_err() {
                        ok = false;
                        break;
                    }
                    for i in 0..d {
                        vals[2 * (n + 1) + k * d + i] = (options.p_bar * (mid[i] - z[i])).exp();
                    }
                    if stepper.step(&mut z, full.step(k)).is_err() {
                        ok = false;
                        break;
                    }
                }
                if ok {
                    for (a, v) in acc.iter_mut().zip(&vals) {
                        *a += v;
                    }
                } else {
                    failures += 1;
                }
            }
            Ok((acc, failures))
        })?
        .into_iter()
        .collect::<Result<Vec<_>>>()?;

        let failures: usize = partial.iter().map(|p| p.1).sum();
        let ok = (cfg.paths - failures) as f64;
        let mean_at = |j: usize| pairwise_sum(&partial.iter().map(|p| p.0[j]).collect::<Vec<_>>()) / ok;
        let sup = |range: std::ops::Range<usize>| range.map(mean_at).fold(f64::NEG_INFINITY, f64::max);
        rows.push(MomentRow {
            dt_exponent: e,
            sup_moment: sup(0..n + 1),
            sup_inverse_moment: sup(n + 1..2 * (n + 1)),
            sup_ratio_moment: sup(2 * (n + 1)..width),
            failures,
        });
    }

    let spread = |f: fn(&MomentRow) -> f64| {
        let v: Vec<f64> = rows.iter().map(f).collect();
        let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
        hi / lo
    };
    let variation = [
        spread(|r| r.sup_moment),
        spread(|r| r.sup_inverse_moment),
        spread(|r| r.sup_ratio_moment),
    ];
    Ok(MomentReport {
        options,
        rows,
        variation,
    })
}

use serde::Serialize;

use super::{distance_pow, mean_and_stderr, par_map, steps_for, ExperimentConfig, Setup, MAX_FAILURE_FRACTION};
use crate::brownian::BrownianPath;
use crate::error::{Error, Result};
use crate::integrators::Scheme;

/// Strong error estimate at one step size.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorRow {
    pub scheme: Scheme,
    pub dt_exponent: i32,
    pub dt: f64,
    /// Monte Carlo mean of `|y_ref(T) − y_Δ(T)|^p` over successful paths.
    pub error: f64,
    pub stderr: f64,
    /// Paths excluded because either run failed.
    pub failures: usize,
    pub paths: usize,
}

impl ErrorRow {
    /// A row with only a step size and an error, for fitting.
    pub fn synthetic(dt: f64, error: f64) -> Self {
        Self {
            scheme: Scheme::Ltem,
            dt_exponent: -dt.log2().round() as i32,
            dt,
            error,
            stderr: 0.0,
            failures: 0,
            paths: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorTable {
    pub rows: Vec<ErrorRow>,
}

impl ErrorTable {
    pub fn new(rows: Vec<ErrorRow>) -> Self {
        Self { rows }
    }

    /// Schemes in first-appearance order.
    pub fn schemes(&self) -> Vec<Scheme> {
        let mut out: Vec<Scheme> = Vec::new();
        for r in &self.rows {
            if !out.contains(&r.scheme) {
                out.push(r.scheme);
            }
        }
        out
    }

    pub fn for_scheme(&self, scheme: Scheme) -> ErrorTable {
        ErrorTable::new(self.rows.iter().filter(|r| r.scheme == scheme).cloned().collect())
    }

    /// No row lost more than 0.1% of its paths.
    pub fn is_valid(&self) -> bool {
        self.rows
            .iter()
            .all(|r| r.failures as f64 <= MAX_FAILURE_FRACTION * r.paths as f64)
    }
}

/// Least-squares line through `(log₂ Δ, log₂ error)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateEstimate {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

impl RateEstimate {
    /// Sentinel for tables with a zero error, where no finite order can be fitted.
    pub const INFINITE_ORDER: RateEstimate = RateEstimate {
        slope: f64::INFINITY,
        intercept: f64::NAN,
        r_squared: f64::NAN,
    };

    pub fn is_infinite_order(&self) -> bool {
        self.slope == f64::INFINITY
    }
}

/// Coupled strong-error estimates for every ladder step and scheme.
///
/// Path `i` draws one fine Brownian path at the reference step. The reference
/// solution is LTEM (the scalar variant for `ltem1d` rows) on that path; each
/// coarse run uses its exact block sums.
pub fn strong_error(cfg: &ExperimentConfig) -> Result<ErrorTable> {
    cfg.validate()?;
    strong_error_with(&cfg.resolve()?, cfg)
}

/// [`strong_error`] with an explicit model, policy and initial state.
pub fn strong_error_with(setup: &Setup, cfg: &ExperimentConfig) -> Result<ErrorTable> {
    cfg.validate()?;
    for s in &cfg.schemes {
        setup.check_scheme(*s)?;
    }
    let m = setup.model.noise_dim();
    let ref_dt = 2f64.powi(-(cfg.ref_exponent as i32));
    let n_ref = steps_for(cfg.horizon, cfg.ref_exponent)?;
    let rows: Vec<(Scheme, u32)> = cfg
        .schemes
        .iter()
        .flat_map(|s| cfg.ladder.iter().map(move |e| (*s, *e)))
        .collect();
    // surface configuration errors (e.g. undefined radius) before the parallel run
    for e in &cfg.ladder {
        setup.policy.radius(2f64.powi(-(*e as i32)))?;
    }
    setup.policy.radius(ref_dt)?;

    let per_path = par_map(cfg.paths, cfg.workers, |i| -> Result<Vec<Option<f64>>> {
        let path = BrownianPath::generate(cfg.seed, i as u64, m, ref_dt, n_ref)?;
        let fine = path.increments();
        let reference = setup.terminal(Scheme::Ltem, fine)?;
        let reference_1d = if cfg.schemes.contains(&Scheme::Ltem1d) {
            setup.terminal(Scheme::Ltem1d, fine)?
        } else {
            None
        };
        let mut out = Vec::with_capacity(rows.len());
        for (scheme, e) in &rows {
            let r = if *scheme == Scheme::Ltem1d { &reference_1d } else { &reference };
            let Some(r) = r else {
                out.push(None);
                continue;
            };
            let coarse = fine.coarsen(1usize << (cfg.ref_exponent - e))?;
            let err = setup
                .terminal(*scheme, &coarse)?
                .map(|y| distance_pow(r, &y, cfg.p_norm))
                .filter(|v| v.is_finite());
            out.push(err);
        }
        Ok(out)
    })?
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let table = rows
        .iter()
        .enumerate()
        .map(|(j, (scheme, e))| {
            let ok: Vec<f64> = per_path.iter().filter_map(|p| p[j]).collect();
            let (error, stderr) = mean_and_stderr(&ok);
            ErrorRow {
                scheme: *scheme,
                dt_exponent: *e as i32,
                dt: 2f64.powi(-(*e as i32)),
                error,
                stderr,
                failures: cfg.paths - ok.len(),
                paths: cfg.paths,
            }
        })
        .collect();
    Ok(ErrorTable::new(table))
}

/// Fits `log₂ error = slope · log₂ Δ + intercept` over a single-scheme table.
///
/// A zero error yields [`RateEstimate::INFINITE_ORDER`] instead of a fit.
pub fn fit_rate(table: &ErrorTable) -> Result<RateEstimate> {
    let rows = &table.rows;
    if rows.len() < 2 {
        return Err(Error::DegenerateFit(format!("need at least 2 rows, got {}", rows.len())));
    }
    if table.schemes().len() > 1 {
        return Err(Error::DegenerateFit("table mixes several schemes".into()));
    }
    if rows.iter().any(|r| !(r.error >= 0.0) || !r.error.is_finite() || !(r.dt > 0.0)) {
        return Err(Error::DegenerateFit("errors must be finite and nonnegative".into()));
    }
    if rows.iter().any(|r| r.error == 0.0) {
        return Ok(RateEstimate::INFINITE_ORDER);
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.dt.log2()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.error.log2()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateFit("all rows share one step size".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - slope * x - intercept).powi(2))
        .sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let r_squared = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    Ok(RateEstimate {
        slope,
        intercept,
        r_squared,
    })
}

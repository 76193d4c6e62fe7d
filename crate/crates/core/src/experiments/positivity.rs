use serde::Serialize;

use super::{par_map, steps_for, ExperimentConfig, Setup};
use crate::brownian::BrownianPath;
use crate::error::{Error, Result};
use crate::integrators::{drive_ltem, drive_tem, ltem1d_solve, ltem_solve, tem_solve, LtemStepper, Scheme, TemStepper, Trajectory};

/// Share of paths on which one component is non-positive somewhere on the grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PositivityCell {
    pub scheme: Scheme,
    /// 1-based component index.
    pub component: usize,
    pub horizon: f64,
    pub dt_exponent: u32,
    /// Percentage of successful paths with a value `≤ 0` (or NaN).
    pub percent: f64,
    pub count: usize,
    pub paths: usize,
    /// Paths whose log-domain run overflowed.
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PositivityReport {
    pub cells: Vec<PositivityCell>,
}

impl PositivityReport {
    pub fn cell(&self, scheme: Scheme, component: usize, horizon: f64, dt_exponent: u32) -> Option<&PositivityCell> {
        self.cells.iter().find(|c| {
            c.scheme == scheme && c.component == component && c.horizon == horizon && c.dt_exponent == dt_exponent
        })
    }
}

enum Outcome {
    Failed,
    /// Per-component flag: non-positive somewhere.
    Flags(Vec<bool>),
}

fn scan_path(setup: &Setup, scheme: Scheme, noise: &crate::brownian::Increments) -> Result<Outcome> {
    let model = setup.model.as_ref();
    let d = model.dim();
    let mut flags = vec![false; d];
    let mut mark = |y: &[f64]| {
        for (f, v) in flags.iter_mut().zip(y) {
            *f |= !(*v > 0.0);
        }
    };
    match scheme {
        Scheme::Ltem | Scheme::Ltem1d => {
            let mut stepper = LtemStepper::new(model, &setup.policy, noise.dt())?;
            let mut z: Vec<f64> = setup.y0.as_slice().iter().map(|v| v.ln()).collect();
            let mut y = vec![0.0; d];
            let run = drive_ltem(&mut stepper, &mut z, noise, |_, zk| {
                for (yi, zi) in y.iter_mut().zip(zk) {
                    *yi = zi.exp();
                }
                mark(&y);
            });
            if run.is_err() {
                return Ok(Outcome::Failed);
            }
        }
        Scheme::Tem => {
            let mut stepper = TemStepper::new(model, &setup.policy, noise.dt())?;
            let mut y = setup.y0.as_slice().to_vec();
            drive_tem(&mut stepper, &mut y, noise, |_, yk| mark(yk));
        }
    }
    Ok(Outcome::Flags(flags))
}

/// Percentage of paths with a non-positive value, per scheme, component and
/// `(T, 2^-e)` cell. All schemes in a cell share the same noise.
///
/// `cells` defaults to the configured horizon paired with every ladder step.
pub fn positivity_scan(cfg: &ExperimentConfig, cells: Option<&[(f64, u32)]>) -> Result<PositivityReport> {
    positivity_scan_with(&cfg.resolve()?, cfg, cells)
}

pub fn positivity_scan_with(
    setup: &Setup,
    cfg: &ExperimentConfig,
    cells: Option<&[(f64, u32)]>,
) -> Result<PositivityReport> {
    let default: Vec<(f64, u32)> = cfg.ladder.iter().map(|e| (cfg.horizon, *e)).collect();
    let cells = cells.unwrap_or(&default);
    if cfg.paths == 0 || cfg.schemes.is_empty() {
        return Err(Error::Config("need at least one path and one scheme".into()));
    }
    for s in &cfg.schemes {
        setup.check_scheme(*s)?;
    }
    let d = setup.model.dim();
    let m = setup.model.noise_dim();
    let mut out = Vec::new();
    for &(horizon, e) in cells {
        let n = steps_for(horizon, e)?;
        let dt = 2f64.powi(-(e as i32));
        setup.policy.radius(dt)?;
        let per_path = par_map(cfg.paths, cfg.workers, |i| -> Result<Vec<Outcome>> {
            let path = BrownianPath::generate(cfg.seed, i as u64, m, dt, n)?;
            cfg.schemes
                .iter()
                .map(|s| scan_path(setup, *s, path.increments()))
                .collect()
        })?
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
        for (si, scheme) in cfg.schemes.iter().enumerate() {
            let failures = per_path.iter().filter(|p| matches!(p[si], Outcome::Failed)).count();
            for c in 0..d {
                let count = per_path
                    .iter()
                    .filter(|p| matches!(&p[si], Outcome::Flags(f) if f[c]))
                    .count();
                let ok = cfg.paths - failures;
                out.push(PositivityCell {
                    scheme: *scheme,
                    component: c + 1,
                    horizon,
                    dt_exponent: e,
                    percent: if ok == 0 { f64::NAN } else { 100.0 * count as f64 / ok as f64 },
                    count,
                    paths: cfg.paths,
                    failures,
                });
            }
        }
    }
    Ok(PositivityReport { cells: out })
}

/// Full trajectories of the first `n_paths` paths, on the same noise as
/// [`positivity_scan`] uses for that cell.
pub fn sample_trajectories(
    setup: &Setup,
    scheme: Scheme,
    horizon: f64,
    dt_exponent: u32,
    seed: u64,
    n_paths: usize,
) -> Result<Vec<Trajectory>> {
    let n = steps_for(horizon, dt_exponent)?;
    let dt = 2f64.powi(-(dt_exponent as i32));
    let model = setup.model.as_ref();
    (0..n_paths)
        .map(|i| {
            let path = BrownianPath::generate(seed, i as u64, model.noise_dim(), dt, n)?;
            let noise = path.increments();
            match scheme {
                Scheme::Ltem => ltem_solve(model, &setup.policy, &setup.y0, horizon, n, noise),
                Scheme::Ltem1d => ltem1d_solve(model, &setup.policy, &setup.y0, horizon, n, noise),
                Scheme::Tem => tem_solve(model, &setup.y0, horizon, n, noise, &setup.policy),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ltem_never_leaves_the_cone_and_tem_does() {
        let cfg = ExperimentConfig {
            model: "lv2-fig2".into(),
            policy: "fig2-eps0.25".into(),
            horizon: 2.0,
            ladder: vec![5],
            paths: 200,
            schemes: vec![Scheme::Ltem, Scheme::Tem],
            ..Default::default()
        };
        let r = positivity_scan(&cfg, None).unwrap();
        assert_eq!(r.cells.len(), 4);
        for c in r.cells.iter().filter(|c| c.scheme == Scheme::Ltem) {
            assert_eq!(c.percent, 0.0);
            assert_eq!(c.failures, 0);
        }
        let tem: f64 = r.cells.iter().filter(|c| c.scheme == Scheme::Tem).map(|c| c.percent).sum();
        assert!(tem > 0.0);
    }

    #[test]
    fn trajectories_share_the_scan_noise() {
        let setup = ExperimentConfig::default().resolve().unwrap();
        let a = sample_trajectories(&setup, Scheme::Ltem, 1.0, 6, 3, 2).unwrap();
        let b = sample_trajectories(&setup, Scheme::Ltem, 1.0, 6, 3, 2).unwrap();
        assert_eq!(a, b);
        assert_eq!(a[0].len(), 65);
        assert_ne!(a[0], a[1]);
    }
}

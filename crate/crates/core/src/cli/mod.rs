//! The `ltem` command line: `converge`, `positivity` and `check`.
//!
//! Exit codes: 0 success, 1 failed check, 2 usage or configuration error,
//! 3 runtime failure.

mod args;
mod output;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::Parser;
use serde::Serialize;
use sha2::{Digest, Sha256};

pub use args::{Cli, Command, FileConfig, Format, GlobalArgs};
use output::OutputSet;

use crate::assumptions::{check_assumptions, LogUniformSampler};
use crate::error::Error;
use crate::experiments::{
    fit_rate, positivity_scan, sample_trajectories, strong_error, ExperimentConfig, RateEstimate,
};
use crate::integrators::Scheme;
use crate::presets;
use crate::truncation::validate_step_condition;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

/// A message with an exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Config(_)
            | Error::Parameter(_)
            | Error::Dimension { .. }
            | Error::Divisibility { .. }
            | Error::DegenerateFit(_) => EXIT_USAGE,
            Error::Domain { .. } | Error::Overflow { .. } | Error::StepFailed { .. } | Error::Io(_) => EXIT_RUNTIME,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

/// Parses `args` (including the program name), runs the command and returns the exit code.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

/// Settings after merging flags, the config file and defaults.
#[derive(Debug, Clone, Serialize)]
struct Resolved {
    #[serde(flatten)]
    experiment: ExperimentConfig,
    #[serde(skip)]
    out: PathBuf,
    #[serde(skip)]
    format: Format,
}

fn load_file(path: &Option<PathBuf>) -> Result<FileConfig, Failure> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::usage(format!("cannot read config {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| Failure::usage(format!("invalid config {}: {e}", path.display())))
}

fn env_seed() -> Result<Option<u64>, Failure> {
    match std::env::var("LTEM_SEED") {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Failure::usage(format!("LTEM_SEED='{v}' is not an unsigned integer"))),
        Err(_) => Ok(None),
    }
}

fn resolve(g: &GlobalArgs, f: &FileConfig) -> Result<(Resolved, presets::ModelPreset), Failure> {
    let model = g
        .model
        .clone()
        .or_else(|| f.model.clone())
        .ok_or_else(|| Failure::usage("missing --model (one of lv2, lv2-fig2, lv3, lv1)"))?;
    let preset = presets::model(&model)?;
    let seed = match g.seed.or(f.seed) {
        Some(s) => s,
        None => env_seed()?.unwrap_or(42),
    };
    let defaults = ExperimentConfig::default();
    let experiment = ExperimentConfig {
        model,
        policy: g
            .policy
            .clone()
            .or_else(|| f.policy.clone())
            .unwrap_or_else(|| preset.default_policy.to_string()),
        horizon: g.horizon.or(f.horizon).unwrap_or(defaults.horizon),
        ref_exponent: g.ref_exponent.or(f.ref_exponent).unwrap_or(defaults.ref_exponent),
        ladder: g.ladder.clone().or_else(|| f.ladder.clone()).unwrap_or(defaults.ladder),
        paths: g.paths.or(f.paths).unwrap_or(defaults.paths as u64) as usize,
        seed,
        workers: g.workers.or(f.workers).unwrap_or(0),
        ..defaults
    };
    if experiment.paths == 0 {
        return Err(Failure::usage("--paths must be at least 1"));
    }
    Ok((
        Resolved {
            experiment,
            out: g.out.clone().or_else(|| f.out.clone()).unwrap_or_else(|| PathBuf::from("out")),
            format: g.format.or(f.format).unwrap_or(Format::Csv),
        },
        preset,
    ))
}

pub fn run(cli: Cli) -> Result<i32, Failure> {
    let file = load_file(&cli.global.config)?;
    let (mut cfg, preset) = resolve(&cli.global, &file)?;
    match cli.command {
        Command::Converge { p_norm, schemes } => {
            cfg.experiment.p_norm = p_norm.or(file.p_norm).unwrap_or(1.0);
            cfg.experiment.schemes = schemes.or(file.schemes.clone()).unwrap_or(vec![Scheme::Ltem]);
            converge(&cfg)
        }
        Command::Positivity {
            cells,
            schemes,
            trajectories,
        } => {
            cfg.experiment.schemes = schemes
                .or(file.schemes.clone())
                .unwrap_or(vec![Scheme::Ltem, Scheme::Tem]);
            let cells = match cells {
                Some(c) => Some(c),
                None => file.parse_cells().map_err(Failure::usage)?,
            };
            positivity(&cfg, cells, trajectories.or(file.trajectories).unwrap_or(10))
        }
        Command::Check {
            p,
            big_j,
            big_k,
            samples,
            bound_const,
        } => check(
            &cfg,
            &preset,
            CheckArgs {
                p: p.or(file.p).unwrap_or(2.0),
                big_j: big_j.or(file.big_j).unwrap_or(preset.default_jk.0),
                big_k: big_k.or(file.big_k).unwrap_or(preset.default_jk.1),
                samples: samples.or(file.samples).unwrap_or(10_000),
                bound_const: bound_const.or(file.bound_const),
            },
        ),
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    seed: u64,
    config: &'a Resolved,
    config_sha256: String,
    outputs: Vec<String>,
    valid: bool,
    created_unix: u64,
}

fn manifest(command: &'static str, cfg: &Resolved, outputs: Vec<String>, valid: bool) -> String {
    let canonical = serde_json::to_string(cfg).expect("config serializes");
    let hash = hex::encode(Sha256::digest(canonical.as_bytes()));
    let m = Manifest {
        tool: "ltem",
        version: env!("CARGO_PKG_VERSION"),
        command,
        seed: cfg.experiment.seed,
        config: cfg,
        config_sha256: hash,
        outputs,
        valid,
        created_unix: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
    };
    serde_json::to_string_pretty(&m).expect("manifest serializes") + "\n"
}

fn converge(cfg: &Resolved) -> Result<i32, Failure> {
    let table = strong_error(&cfg.experiment)?;
    let mut rates = Vec::new();
    for scheme in table.schemes() {
        let rate = match fit_rate(&table.for_scheme(scheme)) {
            Ok(r) => r,
            Err(e) => {
                eprintln!("warning: {scheme}: {e}");
                RateEstimate {
                    slope: f64::NAN,
                    intercept: f64::NAN,
                    r_squared: f64::NAN,
                }
            }
        };
        rates.push((scheme, rate));
    }
    let valid = table.is_valid();

    let mut out = OutputSet::new(&cfg.out);
    out.add("errors.csv", output::errors_csv(&table));
    out.add("rate.csv", output::rate_csv(&rates));
    out.add("plotdata.csv", output::plotdata_csv(&table));
    if cfg.format == Format::CsvSvg {
        out.add("convergence.svg", output::convergence_svg(&table));
    }
    let names = out.names();
    out.add("manifest.json", manifest("converge", cfg, names, valid));
    out.commit()?;

    for r in &table.rows {
        println!(
            "{:>6} dt=2^-{:<2} error={:.6e} stderr={:.2e} failures={}",
            r.scheme, r.dt_exponent, r.error, r.stderr, r.failures
        );
    }
    for (scheme, r) in &rates {
        println!("{scheme}: slope {:.4} (r2 {:.4})", r.slope, r.r_squared);
    }
    if !valid {
        eprintln!("error: more than 0.1% of paths failed; the run is flagged invalid");
        return Ok(EXIT_RUNTIME);
    }
    Ok(EXIT_OK)
}

fn positivity(cfg: &Resolved, cells: Option<Vec<(f64, u32)>>, n_traj: usize) -> Result<i32, Failure> {
    let exp = &cfg.experiment;
    let setup = exp.resolve()?;
    let cells: Vec<(f64, u32)> = cells.unwrap_or_else(|| exp.ladder.iter().map(|e| (exp.horizon, *e)).collect());
    if cells.is_empty() {
        return Err(Failure::usage("no positivity cells"));
    }
    let report = positivity_scan(exp, Some(&cells))?;

    let mut csv = String::from("scheme,component,T,dt_exponent,percent\n");
    for c in &report.cells {
        let _ = writeln!(csv, "{},{},{},{},{}", c.scheme, c.component, c.horizon, c.dt_exponent, c.percent);
    }
    let (t0, e0) = cells[0];
    let d = setup.model.dim();
    let mut traj = String::from("scheme,path,step,t");
    for i in 1..=d {
        let _ = write!(traj, ",y{i}");
    }
    traj.push('\n');
    for scheme in &exp.schemes {
        let paths = sample_trajectories(&setup, *scheme, t0, e0, exp.seed, n_traj.min(exp.paths))
            .map_err(Failure::from)?;
        for (p, t) in paths.iter().enumerate() {
            for k in 0..t.len() {
                let _ = write!(traj, "{scheme},{p},{k},{}", t.times()[k]);
                for v in t.state(k) {
                    let _ = write!(traj, ",{v}");
                }
                traj.push('\n');
            }
        }
    }
    let valid = report
        .cells
        .iter()
        .all(|c| c.failures as f64 <= crate::experiments::MAX_FAILURE_FRACTION * c.paths as f64);

    let mut out = OutputSet::new(&cfg.out);
    out.add("positivity.csv", csv);
    out.add("trajectories.csv", traj);
    let names = out.names();
    out.add("manifest.json", manifest("positivity", cfg, names, valid));
    out.commit()?;

    for c in &report.cells {
        println!(
            "{:>6} y{} T={} dt=2^-{:<2} non-positive {:.2}% ({} of {}, failures {})",
            c.scheme, c.component, c.horizon, c.dt_exponent, c.percent, c.count, c.paths, c.failures
        );
    }
    if !valid {
        eprintln!("error: more than 0.1% of paths failed; the run is flagged invalid");
        return Ok(EXIT_RUNTIME);
    }
    Ok(EXIT_OK)
}

struct CheckArgs {
    p: f64,
    big_j: f64,
    big_k: f64,
    samples: usize,
    bound_const: Option<f64>,
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "FAIL"
    }
}

fn check(cfg: &Resolved, preset: &presets::ModelPreset, a: CheckArgs) -> Result<i32, Failure> {
    let exp = &cfg.experiment;
    let policy = presets::policy_unchecked(&exp.policy, a.bound_const)?;
    let params = preset.assumption_params(a.big_j, a.big_k)?;
    let mut all_ok = true;

    let invariants = policy.validate();
    println!(
        "policy {} ({:?} regime, bound constant {}): {}",
        exp.policy,
        policy.regime(),
        policy.bound_const(),
        match &invariants {
            Ok(()) => "invariants hold".to_string(),
            Err(e) => format!("FAIL: {e}"),
        }
    );
    all_ok &= invariants.is_ok();

    println!("step conditions with p = {}, J = {}, K = {}:", a.p, a.big_j, a.big_k);
    for &e in &exp.ladder {
        let dt = 2f64.powi(-(e as i32));
        let sc = validate_step_condition(&policy, &params, a.p, dt)?;
        let admissible = policy.admissible_at(dt);
        let radius = policy.radius(dt);
        let ok = admissible && sc.holds && radius.is_ok();
        all_ok &= ok;
        println!(
            "  dt=2^-{e:<2} scaled bound {:.6} <= {}: {}; eta {:.6} >= psi({:.6}) = {:.6}: {}; radius {}",
            policy.scaled_bound(dt),
            policy.bound_const(),
            verdict(admissible),
            sc.eta,
            sc.argument.max(0.0),
            sc.envelope_value,
            verdict(sc.holds),
            match radius {
                Ok(r) => format!("{r:.6}"),
                Err(_) => "undefined".into(),
            }
        );
    }

    let hyp = params.moment_hypothesis_holds();
    all_ok &= hyp;
    println!("moment hypothesis J >= 2(alpha+1), K >= 2 beta: {}", verdict(hyp));

    let mut sampler = LogUniformSampler::standard(exp.seed);
    let report = check_assumptions(preset.model.as_ref(), &params, &mut sampler, a.samples)?;
    println!(
        "sampled assumption diagnostics ({} samples; a clean report does not certify):",
        report.samples
    );
    for c in &report.clauses {
        all_ok &= c.passed();
        println!(
            "  {:<16} evaluations {:>6} worst slack {:.6e} violations {}: {}",
            serde_json::to_value(c.clause)
                .ok()
                .and_then(|v| v.as_str().map(String::from))
                .unwrap_or_default(),
            c.evaluations,
            c.worst_slack,
            c.violations,
            verdict(c.passed())
        );
        if let Some(w) = &c.worst {
            println!("    witness {:?} component {:?}: lhs {:.6e} > rhs {:.6e}", w.points, w.component, w.lhs, w.rhs);
        }
    }
    println!("overall: {}", verdict(all_ok));
    Ok(if all_ok { EXIT_OK } else { EXIT_CHECK_FAILED })
}

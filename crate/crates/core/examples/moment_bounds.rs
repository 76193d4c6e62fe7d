//! Sup-over-grid moments, inverse moments and intra-step ratio moments across a ladder.

use ltem::experiments::MomentOptions;
use ltem::{moment_diagnostics, ExperimentConfig};

fn main() -> ltem::Result<()> {
    let cfg = ExperimentConfig {
        ref_exponent: 11,
        paths: 500,
        ..ExperimentConfig::default()
    };
    let report = moment_diagnostics(&cfg, MomentOptions::default())?;
    for r in &report.rows {
        println!(
            "dt=2^-{:<2} E|y|^J {:.4}  E|y|^-K {:.4}  ratio {:.4}",
            r.dt_exponent, r.sup_moment, r.sup_inverse_moment, r.sup_ratio_moment
        );
    }
    println!("max/min across the ladder: {:?}, flat within 2: {}", report.variation, report.is_flat(2.0));
    Ok(())
}

//! Strong errors over a step ladder and the fitted order.
//!
//! `cargo run --release --example strong_convergence -- 1000` runs the full desk-scale study.

use ltem::{fit_rate, strong_error, ExperimentConfig};

fn main() -> ltem::Result<()> {
    let paths = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(200);
    let cfg = ExperimentConfig {
        paths,
        ..ExperimentConfig::default()
    };
    let table = strong_error(&cfg)?;
    for r in &table.rows {
        println!("dt=2^-{:<2} error={:.4e} +- {:.1e}", r.dt_exponent, r.error, r.stderr);
    }
    let fit = fit_rate(&table)?;
    println!("slope {:.3}, r2 {:.4}, {} paths", fit.slope, fit.r_squared, paths);
    Ok(())
}

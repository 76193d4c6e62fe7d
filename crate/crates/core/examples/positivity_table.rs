//! Percentages of paths with non-positive values for TEM and LTEM.

use ltem::{positivity_scan, ExperimentConfig, Scheme};

fn main() -> ltem::Result<()> {
    let cfg = ExperimentConfig {
        model: "lv3".into(),
        policy: "ex2".into(),
        paths: 2000,
        schemes: vec![Scheme::Tem, Scheme::Ltem],
        ..ExperimentConfig::default()
    };
    let report = positivity_scan(&cfg, Some(&[(2.0, 11), (4.0, 10), (8.0, 9)]))?;
    println!("scheme component   T   dt  percent");
    for c in &report.cells {
        println!(
            "{:>6} {:>9} {:>3} 2^-{:<2} {:>7.2}",
            c.scheme, c.component, c.horizon, c.dt_exponent, c.percent
        );
    }
    Ok(())
}

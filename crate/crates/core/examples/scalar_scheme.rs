//! The scalar-regime scheme on a one-dimensional logistic model.

use ltem::{fit_rate, ltem1d_solve, presets, strong_error, BrownianPath, ExperimentConfig, Scheme};

fn main() -> ltem::Result<()> {
    let preset = presets::model("lv1")?;
    let policy = presets::policy("scalar-default")?;
    let n = 256;
    let noise = BrownianPath::generate(5, 0, 1, 1.0 / n as f64, n)?;
    let traj = ltem1d_solve(preset.model.as_ref(), &policy, &preset.y0, 1.0, n, noise.increments())?;
    println!("y(1) = {:?}", traj.final_state());

    let cfg = ExperimentConfig {
        model: "lv1".into(),
        policy: "scalar-default".into(),
        paths: 300,
        schemes: vec![Scheme::Ltem1d],
        ..ExperimentConfig::default()
    };
    let fit = fit_rate(&strong_error(&cfg)?)?;
    println!("scalar scheme: slope {:.3}, r2 {:.4}", fit.slope, fit.r_squared);
    Ok(())
}

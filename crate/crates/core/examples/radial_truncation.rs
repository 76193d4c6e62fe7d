//! Truncation radius per step size and the truncated coefficients.

use ltem::{presets, radial_truncate, truncated_log_drift, LogState};

fn main() -> ltem::Result<()> {
    let policy = presets::policy("ex1-eps0.25")?;
    let model = presets::model("lv2")?.model;
    let far = LogState::new(vec![30.0, -40.0])?;
    for e in [6, 8, 10, 13] {
        let dt = 2f64.powi(-e);
        let r = policy.radius(dt)?;
        let projected = radial_truncate(&far, r);
        let drift = truncated_log_drift(model.as_ref(), &policy, dt, &far)?;
        println!(
            "dt=2^-{e:<2} eta={:>10.3} radius={r:.4} projected={:?} drift={:?}",
            policy.eta(dt),
            projected.as_slice(),
            drift
        );
    }
    Ok(())
}

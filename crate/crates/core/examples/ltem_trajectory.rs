//! A single LTEM trajectory of the three-species model.

use ltem::{ltem_solve, presets, BrownianPath};

fn main() -> ltem::Result<()> {
    let preset = presets::model("lv3")?;
    let policy = presets::policy("ex2")?;
    let n = 1 << 10;
    let noise = BrownianPath::generate(1, 0, preset.model.noise_dim(), 1.0 / n as f64, n)?;
    let traj = ltem_solve(preset.model.as_ref(), &policy, &preset.y0, 1.0, n, noise.increments())?;
    for k in (0..traj.len()).step_by(128) {
        println!("t={:.4} y={:?}", traj.times()[k], traj.state(k));
    }
    let min = traj.states().flatten().cloned().fold(f64::INFINITY, f64::min);
    println!("smallest component over the path: {min:e}");
    Ok(())
}

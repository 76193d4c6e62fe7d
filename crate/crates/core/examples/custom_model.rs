//! A user-defined model with a hand-built truncation policy.

use ltem::{ltem_solve, BrownianPath, Envelope, FnModel, PositiveState, Regime, StepBound, TruncationPolicy};

fn main() -> ltem::Result<()> {
    // dy = y(1 - y^2) dt + y^2 dB
    let model = FnModel::new(
        "cubic",
        1,
        1,
        |y, out| out[0] = y[0] * (1.0 - y[0] * y[0]),
        |y, out| out[0] = y[0] * y[0],
    );
    // log drift 1 - e^{2z} - e^{2z}/2 and log diffusion e^z are dominated by 3 e^{2v}
    let policy = TruncationPolicy::new(
        Regime::Multi,
        Envelope::exponential(3.0, 2.0)?,
        StepBound::power_law(30.0, 0.25)?,
        30.0,
    )?;
    let n = 512;
    let noise = BrownianPath::generate(11, 0, 1, 1.0 / n as f64, n)?;
    let y0 = PositiveState::new(vec![0.5])?;
    let traj = ltem_solve(&model, &policy, &y0, 1.0, n, noise.increments())?;
    for k in (0..traj.len()).step_by(64) {
        println!("t={:.3} y={:.6}", traj.times()[k], traj.state(k)[0]);
    }
    Ok(())
}

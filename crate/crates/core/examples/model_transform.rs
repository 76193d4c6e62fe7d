//! Evaluates a preset model and its log-transformed coefficients.

use ltem::{log_diffusion, log_drift, presets, to_log, PositiveState};

fn main() -> ltem::Result<()> {
    let preset = presets::model("lv2")?;
    let model = preset.model.as_ref();
    let y = PositiveState::new(vec![0.5, 2.0])?;
    let z = to_log(&y);

    println!("model {} (d = {}, m = {})", model.name(), model.dim(), model.noise_dim());
    println!("y = {:?}", y.as_slice());
    println!("drift     = {:?}", model.eval_drift(&y)?);
    println!("diffusion = {:?}", model.eval_diffusion(&y)?.as_slice());
    println!("z = ln y  = {:?}", z.as_slice());
    println!("log drift     = {:?}", log_drift(model, &z)?);
    println!("log diffusion = {:?}", log_diffusion(model, &z)?.as_slice());
    Ok(())
}

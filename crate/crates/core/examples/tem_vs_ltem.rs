//! Truncated Euler-Maruyama in the original variables against LTEM on the same noise.

use ltem::{ltem_solve, presets, tem_solve, BrownianPath};

fn main() -> ltem::Result<()> {
    let preset = presets::model("lv2-fig2")?;
    let policy = presets::policy("fig2-eps0.25")?;
    let (horizon, n) = (2.0, 128);
    let model = preset.model.as_ref();
    let mut tem_exits = 0;
    for path in 0..10 {
        let noise = BrownianPath::generate(42, path, 2, horizon / n as f64, n)?;
        let tem = tem_solve(model, &preset.y0, horizon, n, noise.increments(), &policy)?;
        let ltem = ltem_solve(model, &policy, &preset.y0, horizon, n, noise.increments())?;
        let ltem_min = ltem.states().flatten().cloned().fold(f64::INFINITY, f64::min);
        let first = (0..tem.len()).find(|k| tem.state(*k).iter().any(|v| v.is_nan() || *v <= 0.0));
        if first.is_some() {
            tem_exits += 1;
        }
        println!("path {path}: TEM first non-positive step {first:?}, LTEM minimum {ltem_min:.3e}");
    }
    println!("{tem_exits} of 10 TEM paths left the positive cone");
    Ok(())
}

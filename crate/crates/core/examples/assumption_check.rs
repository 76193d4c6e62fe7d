//! Sampled falsification of the structural assumptions and the step-size condition.

use ltem::{check_assumptions, presets, validate_step_condition, LogUniformSampler};

fn main() -> ltem::Result<()> {
    for name in ["lv2", "lv3"] {
        let preset = presets::model(name)?;
        let params = preset.default_assumption_params();
        let mut sampler = LogUniformSampler::standard(9);
        let report = check_assumptions(preset.model.as_ref(), &params, &mut sampler, 5000)?;
        println!("{name}: J = {}, K = {}", params.big_j, params.big_k);
        for c in &report.clauses {
            println!(
                "  {:?}: {} violations, worst slack {:.3e}",
                c.clause, c.violations, c.worst_slack
            );
        }
    }

    let policy = presets::policy("ex1-eps0.25")?;
    let params = presets::assumption_params("lv2", 100.0, 100.0)?;
    let c = validate_step_condition(&policy, &params, 2.0, 2f64.powi(-10))?;
    println!(
        "step condition at 2^-10: eta {:.3} vs psi({:.4}) = {:.3}: {}",
        c.eta, c.argument, c.envelope_value, c.holds
    );
    Ok(())
}

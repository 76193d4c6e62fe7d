//! Monte Carlo check of E exp(γ|Q|) <= 2^m exp(γ²Δ/2) for Q ~ N(0, Δ I_m).

use ltem::gaussian_bound_check;

fn main() -> ltem::Result<()> {
    for m in 1..=3 {
        for gamma in [0.5, 1.0, 2.0] {
            for dt in [1.0, 0.01] {
                let r = gaussian_bound_check(m, gamma, dt, 200_000, 1)?;
                println!(
                    "m={m} gamma={gamma:<3} dt={dt:<4} estimate {:>8.4} +- {:.4} bound {:>8.4} {}",
                    r.estimate,
                    r.stderr,
                    r.bound,
                    if r.passes { "ok" } else { "exceeded" }
                );
            }
        }
    }
    Ok(())
}

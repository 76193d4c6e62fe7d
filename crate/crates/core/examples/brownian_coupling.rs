//! One fine Brownian path and its coarsenings, which drive coupled runs.

use ltem::BrownianPath;

fn main() -> ltem::Result<()> {
    let fine = BrownianPath::generate(42, 0, 2, 2f64.powi(-8), 256)?;
    for factor in [1, 4, 16, 64, 256] {
        let coarse = fine.coarsen(factor)?;
        let total: Vec<f64> = (0..2)
            .map(|j| (0..coarse.n_steps()).map(|k| coarse.step(k)[j]).sum())
            .collect();
        println!(
            "factor {factor:>3}: {:>3} steps of {:.5}, B(1) ~ {total:?}",
            coarse.n_steps(),
            coarse.dt()
        );
    }
    let b = fine.coarsen(16)?.coarsen(4)?;
    assert_eq!(b.as_slice(), fine.coarsen(64)?.as_slice());
    println!("coarsening by 16 then 4 equals coarsening by 64 bit for bit");
    Ok(())
}

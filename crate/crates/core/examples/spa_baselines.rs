//! GSPA against the SPA-based baselines on one planted instance.

use gsnmf::datagen::gen_fully_random;
use gsnmf::decomposition::{accuracy, fit_weights_default};
use gsnmf::matrix::sinkhorn_scale_default;
use gsnmf::spa::{gspa, spa_c, spa_r, spa_star};

fn main() -> gsnmf::Result<()> {
    let inst = gen_fully_random(60, 60, 10, 10, 0.01, 7)?;
    let truth = &inst.truth.sets;
    println!("planted {}", truth.one_based());

    let ms = sinkhorn_scale_default(&inst.m)?.scaled;
    let candidates = [
        ("gspa", gspa(ms.view(), 20)?.0),
        ("spa-star", spa_star(&ms, 10, 10)?),
        ("spa-c", spa_c(&ms, 20)?),
        ("spa-r", spa_r(&ms, 20)?),
    ];
    println!("{:<9} {:>8} {:>10}", "algo", "accuracy", "rel.err");
    for (name, sets) in candidates {
        let fit = fit_weights_default(&inst.m, &sets)?;
        println!(
            "{name:<9} {:>8.3} {:>10.3e}",
            accuracy(&sets, truth)?,
            fit.relative_error
        );
    }
    Ok(())
}

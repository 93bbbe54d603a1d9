//! GS-FGM on a noisy planted instance: convergence log, both post-processing
//! rules and the λ̃ grid.

use gsnmf::datagen::gen_fully_random;
use gsnmf::decomposition::{accuracy, fit_weights_default};
use gsnmf::fgm::{
    gsfgm_best_of_grid, gsfgm_solve, lambda_tilde_grid, post_process_diagonal,
    post_process_real_data, FgmConfig,
};
use gsnmf::matrix::sinkhorn_scale_default;

fn main() -> gsnmf::Result<()> {
    let inst = gen_fully_random(40, 40, 6, 6, 0.05, 11)?;
    let ms = sinkhorn_scale_default(&inst.m)?.scaled;
    let log = std::env::temp_dir().join("gsfgm_log.csv");
    let cfg = FgmConfig {
        log_path: Some(log.clone()),
        ..FgmConfig::default()
    };

    let sol = gsfgm_solve(&ms, 6, 6, &cfg, None)?;
    println!(
        "{} iterations, objective {:.4e} -> {:.4e} (lambda {:.3e}), log in {}",
        sol.iterations,
        sol.objective_history[0],
        sol.final_objective(),
        sol.lambda,
        log.display()
    );

    let truth = &inst.truth.sets;
    let diag = post_process_diagonal(sol.x.view(), sol.y.view(), 6, 6)?;
    let greedy = post_process_real_data(&ms, sol.x.view(), sol.y.view(), 12)?;
    for (name, sets) in [("diagonal", diag), ("greedy", greedy)] {
        let err = fit_weights_default(&inst.m, &sets)?.relative_error;
        println!(
            "{name:<9} {} accuracy {:.3} error {err:.3e}",
            sets.one_based(),
            accuracy(&sets, truth)?
        );
    }

    let (best, err, lt) =
        gsfgm_best_of_grid(&ms, 6, 6, &FgmConfig::default(), &lambda_tilde_grid())?;
    println!(
        "best of grid: lambda~ {lt:.3e}, {} error {err:.3e}",
        best.one_based()
    );
    Ok(())
}

//! The 5 × 5 instance on which GSPA fails and GS-FGM succeeds.
//!
//! Run with `cargo run --release --example example1_walkthrough`.

use gsnmf::datagen::{example1_matrix, example1_truth};
use gsnmf::decomposition::fit_weights_default;
use gsnmf::fgm::{gsfgm_solve, post_process_diagonal, FgmConfig};
use gsnmf::matrix::sinkhorn_scale_default;
use gsnmf::spa::gspa;
use gsnmf::IndexSets;

fn main() -> gsnmf::Result<()> {
    let (m, printed) = example1_matrix(1e-3);
    println!("M =\n{:.3}", m.as_array());

    let scaled = sinkhorn_scale_default(&m)?;
    let ms = scaled.scaled;
    println!("Ms (sums 5) =\n{:.3}", ms.as_array());
    let dev = (ms.as_array() - printed.as_array())
        .mapv(f64::abs)
        .fold(0.0f64, |a, &b| a.max(b));
    println!("max deviation from reference: {dev:.1e}");

    let (sets, trace) = gspa(ms.view(), 4)?;
    println!("\nGSPA r=4 -> {}", sets.one_based());
    for step in &trace.steps {
        println!(
            "  {:?} {} score {:.4}",
            step.kind,
            step.index + 1,
            step.score
        );
    }
    let fit = fit_weights_default(&m, &sets)?;
    println!("  relative error on M: {:.4}%", 100.0 * fit.relative_error);

    let other = IndexSets::new(vec![0, 1, 2], vec![4])?;
    let fit = fit_weights_default(&m, &other)?;
    println!(
        "{} relative error: {:.4}%",
        other.one_based(),
        100.0 * fit.relative_error
    );

    for delta in [1e-4, 1e-9] {
        let cfg = FgmConfig {
            delta,
            max_iter: 5000,
            ..FgmConfig::default()
        };
        let sol = gsfgm_solve(&ms, 2, 2, &cfg, None)?;
        let found = post_process_diagonal(sol.x.view(), sol.y.view(), 2, 2)?;
        println!(
            "\nGS-FGM (delta={delta:e}): {} iterations -> {}",
            sol.iterations,
            found.one_based()
        );
        println!("  diag X = {:.3}", sol.x.diag());
        println!("  diag Y = {:.3}", sol.y.diag());
        let fit = fit_weights_default(&m, &found)?;
        println!("  relative error: {:.2e}", fit.relative_error);
    }
    println!("\nplanted: {}", example1_truth().one_based());
    Ok(())
}

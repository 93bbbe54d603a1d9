//! Unconstrained NMF next to GS-FGM on the middle-point instance, scored by
//! distance to the planted factors.

use gsnmf::datagen::gen_middle_point;
use gsnmf::decomposition::{assemble_factors, distance_to_ground_truth, fit_weights_default};
use gsnmf::fgm::{gsfgm, FgmConfig};
use gsnmf::matrix::sinkhorn_scale_default;
use gsnmf::nmf::nmf_ahals;

fn main() -> gsnmf::Result<()> {
    let inst = gen_middle_point(1e-3, 3)?;
    let (r1, r2) = inst.ranks();
    let truth = &inst.truth;

    let nmf = nmf_ahals(&inst.m, r1 + r2, 500, 0)?;
    let d_nmf = distance_to_ground_truth(nmf.w.view(), nmf.h.view(), truth)?;
    println!(
        "NMF    error {:.3e} distance {d_nmf:.3e}",
        nmf.relative_error()
    );

    let ms = sinkhorn_scale_default(&inst.m)?.scaled;
    let sets = gsfgm(&ms, r1, r2, &FgmConfig::default())?;
    let dec = fit_weights_default(&inst.m, &sets)?;
    let (w, h) = assemble_factors(&inst.m, &dec);
    let d_gs = distance_to_ground_truth(w.view(), h.view(), truth)?;
    println!(
        "GS-FGM error {:.3e} distance {d_gs:.3e}",
        dec.relative_error
    );
    Ok(())
}

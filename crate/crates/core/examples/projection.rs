//! Projection onto the weighted diagonal-dominance sets used by GS-FGM.

use gsnmf::fgm::{project_omega1, project_row_omega, OmegaSpec};
use gsnmf::DenseMatrix;
use ndarray::array;

fn main() -> gsnmf::Result<()> {
    let x = array![0.3, 1.4, -0.2, 0.9];
    let w = array![1.0, 2.0, 0.5, 1.0];
    let p = project_row_omega(x.view(), 0, w.view());
    println!("x      = {x:.4}\nP(x)   = {p:.4}");
    let again = project_row_omega(p.view(), 0, w.view());
    println!(
        "P(P(x)) - P(x) = {:.1e}",
        (&again - &p).mapv(f64::abs).sum()
    );

    let m = DenseMatrix::nonnegative(array![[1.0, 2.0, 0.0], [0.5, 0.0, 3.0]])?;
    let spec = OmegaSpec::for_columns_of(&m)?;
    let z = array![[1.2, 0.8, -0.1], [0.4, 0.2, 0.9], [0.0, 1.1, 0.3]];
    let pz = project_omega1(z.view(), &spec);
    println!(
        "\nZ projected onto Omega1 =\n{pz:.4}\nviolation {:.1e}",
        spec.violation(pz.view())
    );
    Ok(())
}

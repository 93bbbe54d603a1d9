//! Structured fixtures: the curve matrix, the compression example and a
//! matrix with two distinct exact decompositions.

use gsnmf::datagen::{compression_fixture, curve_matrix, non_unique_fixture};
use gsnmf::decomposition::{fit_weights, fit_weights_default, zero_block};
use gsnmf::{DenseMatrix, IndexSets};

fn main() -> gsnmf::Result<()> {
    let c = DenseMatrix::nonnegative(curve_matrix(8)?)?;
    let as_gs = fit_weights_default(&c, &IndexSets::new(vec![0, 1], vec![2])?)?;
    println!("curve 3x8: (2,1) error {:.1e}", as_gs.relative_error);

    let big = compression_fixture(20, 20)?;
    let sets = IndexSets::new(vec![2, 3, 4], vec![2, 3, 4])?;
    let dec = fit_weights_default(&big, &sets)?;
    let stored = 3 * big.rows() + 3 * big.cols();
    println!(
        "compression {}x{}: 3+3 indices, error {:.1e}, zero block {:?}, {} of {} entries stored",
        big.rows(),
        big.cols(),
        dec.relative_error,
        zero_block(big.view(), &sets).dim(),
        stored,
        big.rows() * big.cols()
    );

    let (m, n) = (12, 10);
    let nu = non_unique_fixture(4, 2, 2, 4, (m, n), 1)?;
    let a = IndexSets::new((0..4).collect(), (m - 2..m).collect())?;
    let b = IndexSets::new((0..2).collect(), (m - 4..m).collect())?;
    for sets in [a, b] {
        let dec = fit_weights(&nu, &sets, 20_000, 1e-12)?;
        println!(
            "non-unique {}: error {:.1e}",
            sets.one_based(),
            dec.relative_error
        );
    }
    Ok(())
}

//! Reading and writing matrices, equilibration, and saved decompositions.

use gsnmf::decomposition::{fit_weights_default, read_decomposition, write_decomposition};
use gsnmf::io::{read_matrix, write_matrix};
use gsnmf::matrix::sinkhorn_scale;
use gsnmf::{DenseMatrix, IndexSets};
use ndarray::array;

fn main() -> gsnmf::Result<()> {
    let dir = std::env::temp_dir().join("gsnmf_io_example");
    std::fs::create_dir_all(&dir)?;
    let m = DenseMatrix::nonnegative(array![[1.0, 2.0, 3.0], [4.0, 0.5, 1.0], [2.0, 2.0, 0.1]])?;

    for name in ["m.csv", "m.mtx"] {
        let path = dir.join(name);
        write_matrix(&path, m.as_array())?;
        println!("{name}: round trip exact = {}", read_matrix(&path)? == m);
    }

    let sc = sinkhorn_scale(&m, 1.0, 1.0, 1e-12, 10_000)?;
    println!(
        "doubly stochastic after {} iterations:\n{:.6}",
        sc.iterations,
        sc.scaled.as_array()
    );

    let dec = fit_weights_default(&m, &IndexSets::new(vec![0], vec![1])?)?;
    write_decomposition(&dir, "dec", &dec)?;
    let back = read_decomposition(&dir.join("dec.json"))?;
    println!(
        "saved decomposition {} error {:.4e}",
        back.sets.one_based(),
        back.relative_error
    );
    Ok(())
}

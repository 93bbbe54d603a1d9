//! Checks shared by the property suite and the acceptance runner. Each
//! returns `Err(description)` on violation.

#![allow(dead_code)]

use gsnmf::datagen::{
    example1_matrix, example1_truth, gen_fully_random, gen_middle_point, non_unique_fixture,
};
use gsnmf::decomposition::{fit_weights_exact, fit_weights_traced, zero_block};
use gsnmf::matrix::sinkhorn_scale;
use gsnmf::spa::{gspa, spa};
use gsnmf::{DenseMatrix, IndexSets, Permutation};
use ndarray::{Array1, Array2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Check = Result<(), String>;

pub fn random_matrix(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DenseMatrix::nonnegative(Array2::from_shape_simple_fn((rows, cols), || {
        rng.random::<f64>()
    }))
    .unwrap()
}

fn max_abs(a: &Array2<f64>) -> f64 {
    a.iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
}

/// `M(K₂, K₁) = 0` for every generator at ε = 0.
pub fn pattern_of_zeros(seed: u64) -> Check {
    let fr = gen_fully_random(20, 18, 3, 4, 0.0, seed).map_err(|e| e.to_string())?;
    let mp = gen_middle_point(0.0, seed).map_err(|e| e.to_string())?;
    let (ex, _) = example1_matrix(1e-3);
    let cases = [
        ("fully-random", fr.m, fr.truth.sets),
        ("middle-point", mp.m, mp.truth.sets),
        ("example1", ex, example1_truth()),
    ];
    for (name, m, sets) in cases {
        let z = max_abs(&zero_block(m.view(), &sets));
        if z > 1e-12 {
            return Err(format!("{name}: zero block max {z:e}"));
        }
    }
    Ok(())
}

/// The HALS objective never increases between sweeps.
pub fn fit_monotone(seed: u64) -> Check {
    let m = random_matrix(9, 7, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabc);
    let r1 = rng.random_range(0..4);
    let r2 = rng.random_range(if r1 == 0 { 1 } else { 0 }..4);
    let cols = Permutation::random(7, &mut rng).as_slice()[..r1].to_vec();
    let rows = Permutation::random(9, &mut rng).as_slice()[..r2].to_vec();
    let sets = IndexSets::new(cols, rows).unwrap();
    let trace = fit_weights_traced(&m, &sets, 200, 0.0).map_err(|e| e.to_string())?;
    for (k, w) in trace.objective.windows(2).enumerate() {
        if w[1] > w[0] * (1.0 + 1e-12) + 1e-15 {
            return Err(format!("sweep {k}: {} -> {}", w[0], w[1]));
        }
    }
    Ok(())
}

/// GSPA residual norms strictly decrease, and `gspa(Mᵀ)` is the transpose of `gspa(M)`.
pub fn gspa_decrease_and_duality(seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (rows, cols) = (rng.random_range(3..12), rng.random_range(3..12));
    let m = random_matrix(rows, cols, seed);
    let r = rng.random_range(1..=rows.min(cols));
    let (sets, trace) = gspa(m.view(), r).map_err(|e| e.to_string())?;
    let mut prev = m.frobenius_norm();
    for s in &trace.steps {
        if s.residual_norm_after >= prev {
            return Err(format!("residual {prev} -> {}", s.residual_norm_after));
        }
        prev = s.residual_norm_after;
    }
    let (t_sets, _) = gspa(m.view().t(), r).map_err(|e| e.to_string())?;
    if t_sets != sets.transposed() {
        return Err(format!("M gives {sets}, M^T gives {t_sets}"));
    }
    Ok(())
}

/// Scaling `D₁MD₂` gives the same result as scaling `M`.
pub fn sinkhorn_prescaling(seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (rows, cols) = (rng.random_range(2..10), rng.random_range(2..10));
    let m = random_matrix(rows, cols, seed).into_inner() + 0.05;
    let d1: Array1<f64> = Array1::from_shape_fn(rows, |_| rng.random_range(0.1..10.0));
    let d2: Array1<f64> = Array1::from_shape_fn(cols, |_| rng.random_range(0.1..10.0));
    let pre = &m * &d1.view().insert_axis(Axis(1)) * d2.view().insert_axis(Axis(0));
    let (k1, k2) = (rows as f64, cols as f64);
    let a = sinkhorn_scale(&DenseMatrix::new(m).unwrap(), k1, k2, 1e-13, 100_000)
        .map_err(|e| e.to_string())?;
    let b = sinkhorn_scale(&DenseMatrix::new(pre).unwrap(), k1, k2, 1e-13, 100_000)
        .map_err(|e| e.to_string())?;
    let diff = max_abs(&(a.scaled.as_array() - b.scaled.as_array()));
    if diff > 1e-9 * k1.max(k2) {
        return Err(format!("scaled matrices differ by {diff:e}"));
    }
    Ok(())
}

/// Both index-set pairs of the non-unique construction fit exactly.
pub fn non_unique_dual(seed: u64) -> Check {
    let (m, n) = (12, 10);
    let nu = non_unique_fixture(4, 2, 2, 4, (m, n), seed).map_err(|e| e.to_string())?;
    let pairs = [
        IndexSets::new((0..4).collect(), (m - 2..m).collect()).unwrap(),
        IndexSets::new((0..2).collect(), (m - 4..m).collect()).unwrap(),
    ];
    for sets in pairs {
        let dec = fit_weights_exact(&nu, &sets).map_err(|e| e.to_string())?;
        if dec.relative_error > 1e-8 {
            return Err(format!("{sets}: residual {:e}", dec.relative_error));
        }
    }
    Ok(())
}

/// SPA recovers the planted columns of `W [I H] Π` with column-stochastic `H`.
pub fn spa_recovery(seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (rows, r, extra) = (
        rng.random_range(6..15),
        rng.random_range(2..6),
        rng.random_range(3..20),
    );
    let w = Array2::from_shape_simple_fn((rows, r), || rng.random::<f64>());
    let mut h = Array2::<f64>::zeros((r, r + extra));
    for k in 0..r {
        h[[k, k]] = 1.0;
    }
    for j in r..r + extra {
        let mut col: Array1<f64> = Array1::from_shape_fn(r, |_| rng.random::<f64>());
        // strictly inside the simplex
        col /= col.sum() * 1.05;
        h.column_mut(j).assign(&col);
    }
    let perm = Permutation::random(r + extra, &mut rng);
    let m = w.dot(&h).select(Axis(1), perm.as_slice());
    let mut planted: Vec<usize> = (0..r + extra).filter(|&j| perm.as_slice()[j] < r).collect();
    let (mut found, _) = spa(m.view(), r).map_err(|e| e.to_string())?;
    found.sort_unstable();
    planted.sort_unstable();
    if found != planted {
        return Err(format!("found {found:?}, planted {planted:?}"));
    }
    Ok(())
}

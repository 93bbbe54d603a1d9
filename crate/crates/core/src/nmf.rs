//! Unconstrained NMF baseline: accelerated hierarchical alternating least
//! squares (A-HALS).

use ndarray::{Array2, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{GsError, Result};
use crate::matrix::{frobenius_norm, DenseMatrix};

/// Inner repeats stop once a pass changes the block by less than this
/// fraction of the first pass's change.
const INNER_RATIO: f64 = 0.01;
const MAX_INNER: usize = 10;

#[derive(Debug, Clone)]
pub struct NmfResult {
    pub w: Array2<f64>,
    pub h: Array2<f64>,
    /// `‖M − WH‖_F / ‖M‖_F` at the start and after every outer iteration.
    pub residual_history: Vec<f64>,
}

impl NmfResult {
    pub fn relative_error(&self) -> f64 {
        *self.residual_history.last().unwrap_or(&1.0)
    }
}

pub fn nmf_ahals(m: &DenseMatrix, r: usize, iters: usize, seed: u64) -> Result<NmfResult> {
    let (rows, cols) = m.shape();
    if r == 0 || r > rows.min(cols) {
        return Err(GsError::InvalidArgument(format!(
            "rank {r} outside 1..={}",
            rows.min(cols)
        )));
    }
    let mv = m.view();
    let norm = m.frobenius_norm();
    if norm == 0.0 {
        return Err(GsError::ZeroMatrix);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut w = Array2::from_shape_fn((rows, r), |_| rng.random::<f64>());
    let mut h = Array2::from_shape_fn((r, cols), |_| rng.random::<f64>());
    // optimal scalar rescaling of the random start
    let wh = w.dot(&h);
    let inner: f64 = (&wh * &mv).sum();
    let wh_sq: f64 = wh.iter().map(|v| v * v).sum();
    if inner > 0.0 && wh_sq > 0.0 {
        let s = (inner / wh_sq).sqrt();
        w *= s;
        h *= s;
    }

    let mut history = vec![frobenius_norm((&mv - &w.dot(&h)).view()) / norm];
    for _ in 0..iters {
        // W block: minimize ‖Mᵀ − Hᵀ Wᵀ‖ column by column of W
        let a = mv.dot(&h.t());
        let b = h.dot(&h.t());
        hals_block(&mut w, a.view(), b.view());
        // H block, on the transposed problem
        let c = mv.t().dot(&w);
        let d = w.t().dot(&w);
        let mut ht = h.t().to_owned();
        hals_block(&mut ht, c.view(), d.view());
        h = ht.t().to_owned();
        history.push(frobenius_norm((&mv - &w.dot(&h)).view()) / norm);
    }
    Ok(NmfResult {
        w,
        h,
        residual_history: history,
    })
}

/// Repeated HALS passes on `x` (p × r) for `min ‖A' − X Bᵀ‖` given
/// `a = M Hᵀ` and gram `b = H Hᵀ`.
fn hals_block(x: &mut Array2<f64>, a: ArrayView2<'_, f64>, b: ArrayView2<'_, f64>) {
    let r = x.ncols();
    let mut first_change = None;
    for _ in 0..MAX_INNER {
        let mut change_sq = 0.0;
        for k in 0..r {
            let bkk = b[[k, k]];
            if bkk <= 0.0 {
                continue;
            }
            let xb = x.dot(&b.column(k));
            let floor = 1e-16 * x.iter().fold(0.0f64, |acc, &v| acc.max(v));
            let mut col = x.column_mut(k);
            for i in 0..col.len() {
                let new = (col[i] + (a[[i, k]] - xb[i]) / bkk).max(0.0);
                change_sq += (new - col[i]) * (new - col[i]);
                col[i] = new;
            }
            // a vanished component could never come back; keep it alive
            if col.iter().all(|&v| v == 0.0) {
                col.fill(floor);
            }
        }
        let change = change_sq.sqrt();
        match first_change {
            None => first_change = Some(change),
            Some(f) if change <= INNER_RATIO * f => break,
            _ => {}
        }
        if change == 0.0 {
            break;
        }
    }
}

//! Successive projection: SPA for separable matrices, its generalization
//! GSPA that extracts columns and rows, and the SPA-based baselines
//! (SPA*, SPA-C, SPA-R).
//!
//! All variants work on a residual `R` that starts at `M`. Selecting a column
//! `u = R(:,p)` replaces `R` by `(I − uuᵀ/‖u‖²)R`; selecting a row
//! `v = R(q,:)` replaces `R` by `R(I − vᵀv/‖v‖²)`. Extraction stops early once
//! `‖R‖_F ≤ 1e-12·‖M‖_F`.

use std::io::Write;

use ndarray::{Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::decomposition::IndexSets;
use crate::error::{GsError, Result};
use crate::matrix::{frobenius_norm, DenseMatrix};

/// Relative residual norm below which `R` counts as zero.
pub const RESIDUAL_ZERO_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StepKind {
    Column,
    Row,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractionStep {
    pub kind: StepKind,
    pub index: usize,
    /// Weighted squared norm that won the selection.
    pub score: f64,
    pub residual_norm_after: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExtractionTrace {
    pub steps: Vec<ExtractionStep>,
}

impl ExtractionTrace {
    pub fn columns(&self) -> Vec<usize> {
        self.indices(StepKind::Column)
    }

    pub fn rows(&self) -> Vec<usize> {
        self.indices(StepKind::Row)
    }

    fn indices(&self, kind: StepKind) -> Vec<usize> {
        self.steps
            .iter()
            .filter(|s| s.kind == kind)
            .map(|s| s.index)
            .collect()
    }

    /// One JSON object per step, newline separated.
    pub fn write_json_lines<W: Write>(&self, mut w: W) -> Result<()> {
        for step in &self.steps {
            serde_json::to_writer(&mut w, step)?;
            writeln!(w)?;
        }
        Ok(())
    }
}

struct Extractor {
    r: Array2<f64>,
    zero_level: f64,
    col_taken: Vec<bool>,
    row_taken: Vec<bool>,
    trace: ExtractionTrace,
}

impl Extractor {
    fn new(m: ArrayView2<'_, f64>) -> Self {
        Self {
            r: m.to_owned(),
            zero_level: RESIDUAL_ZERO_TOL * frobenius_norm(m),
            col_taken: vec![false; m.ncols()],
            row_taken: vec![false; m.nrows()],
            trace: ExtractionTrace::default(),
        }
    }

    fn residual_vanished(&self) -> bool {
        frobenius_norm(self.r.view()) <= self.zero_level
    }

    /// Largest squared norm along `axis` among untaken indices; smallest index on ties.
    fn best(&self, axis: Axis) -> Option<(usize, f64)> {
        let taken = if axis == Axis(1) {
            &self.col_taken
        } else {
            &self.row_taken
        };
        let norms: Array1<f64> = self.r.map_axis(Axis(1 - axis.index()), |v| v.dot(&v));
        let mut best: Option<(usize, f64)> = None;
        for (i, &v) in norms.iter().enumerate() {
            if taken[i] {
                continue;
            }
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((i, v));
            }
        }
        best
    }

    fn take_column(&mut self, p: usize, score: f64) {
        let u = self.r.column(p).to_owned();
        let u_sq = u.dot(&u);
        let coeff = self.r.t().dot(&u) / u_sq;
        for (i, &ui) in u.iter().enumerate() {
            let mut row = self.r.row_mut(i);
            row.scaled_add(-ui, &coeff);
        }
        self.col_taken[p] = true;
        self.record(StepKind::Column, p, score);
    }

    fn take_row(&mut self, q: usize, score: f64) {
        let v = self.r.row(q).to_owned();
        let v_sq = v.dot(&v);
        let coeff = self.r.dot(&v) / v_sq;
        for (i, &ci) in coeff.iter().enumerate() {
            let mut row = self.r.row_mut(i);
            row.scaled_add(-ci, &v);
        }
        self.row_taken[q] = true;
        self.record(StepKind::Row, q, score);
    }

    fn record(&mut self, kind: StepKind, index: usize, score: f64) {
        self.trace.steps.push(ExtractionStep {
            kind,
            index,
            score,
            residual_norm_after: frobenius_norm(self.r.view()),
        });
    }
}

/// Successive projection algorithm on the columns of `m`; returns the
/// selected columns in extraction order.
pub fn spa(m: ArrayView2<'_, f64>, r: usize) -> Result<(Vec<usize>, ExtractionTrace)> {
    if r > m.ncols() {
        return Err(GsError::InvalidArgument(format!(
            "cannot extract {r} of {} columns",
            m.ncols()
        )));
    }
    let mut ex = Extractor::new(m);
    while ex.trace.steps.len() < r && !ex.residual_vanished() {
        let Some((p, score)) = ex.best(Axis(1)) else {
            break;
        };
        if score <= 0.0 {
            break;
        }
        ex.take_column(p, score);
    }
    Ok((ex.trace.columns(), ex.trace))
}

/// Generalized SPA: picks, at every step, the column or row of the residual
/// with the largest weighted squared norm (`n‖R(:,j)‖²` against
/// `m‖R(i,:)‖²`, columns winning ties) and projects it out. Extracts at most
/// `r` indices in total. The input should already be scaled.
pub fn gspa(m: ArrayView2<'_, f64>, r: usize) -> Result<(IndexSets, ExtractionTrace)> {
    let (rows, cols) = m.dim();
    if r == 0 || r > rows + cols {
        return Err(GsError::InvalidArgument(format!(
            "r = {r} outside 1..={}",
            rows + cols
        )));
    }
    let mut ex = Extractor::new(m);
    while ex.trace.steps.len() < r && !ex.residual_vanished() {
        let col = ex.best(Axis(1)).map(|(p, v)| (p, cols as f64 * v));
        let row = ex.best(Axis(0)).map(|(q, v)| (q, rows as f64 * v));
        match (col, row) {
            (Some((p, cs)), Some((_, rs))) if cs >= rs && cs > 0.0 => ex.take_column(p, cs),
            (Some((p, cs)), None) if cs > 0.0 => ex.take_column(p, cs),
            (_, Some((q, rs))) if rs > 0.0 => ex.take_row(q, rs),
            _ => break,
        }
    }
    let sets = IndexSets::new(ex.trace.columns(), ex.trace.rows())?;
    Ok((sets, ex.trace))
}

/// SPA on `M` for `r1` columns and on `Mᵀ` for `r2` rows.
pub fn spa_star(m: &DenseMatrix, r1: usize, r2: usize) -> Result<IndexSets> {
    let (cols, _) = spa(m.view(), r1)?;
    let (rows, _) = spa(m.view().t(), r2)?;
    IndexSets::new(cols, rows)
}

/// SPA on the columns only.
pub fn spa_c(m: &DenseMatrix, r: usize) -> Result<IndexSets> {
    let (cols, _) = spa(m.view(), r)?;
    IndexSets::new(cols, Vec::new())
}

/// SPA on the rows only.
pub fn spa_r(m: &DenseMatrix, r: usize) -> Result<IndexSets> {
    let (rows, _) = spa(m.view().t(), r)?;
    IndexSets::new(Vec::new(), rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn spa_picks_simplex_vertices() {
        let m = array![[1.0, 0.0, 0.5], [0.0, 1.0, 0.5]];
        let (mut idx, _) = spa(m.view(), 2).unwrap();
        idx.sort_unstable();
        assert_eq!(idx, vec![0, 1]);
    }

    #[test]
    fn spa_stops_on_rank_one() {
        let m = Array2::from_shape_fn((4, 5), |(i, j)| (i + 1) as f64 * (j + 2) as f64);
        let (idx, trace) = spa(m.view(), 2).unwrap();
        assert_eq!(idx.len(), 1);
        assert_eq!(trace.steps.len(), 1);
        let ms = DenseMatrix::new(m).unwrap();
        let (sets, _) = gspa(ms.view(), 2).unwrap();
        assert_eq!(sets.total(), 1);
    }

    #[test]
    fn spa_rejects_oversized_request() {
        let m = array![[1.0, 2.0]];
        assert!(spa(m.view(), 3).is_err());
        assert!(gspa(m.view(), 4).is_err());
        assert!(gspa(m.view(), 0).is_err());
    }

    #[test]
    fn spa_variant_reductions() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = DenseMatrix::new(Array2::from_shape_fn((6, 7), |_| rng.random())).unwrap();
        let c = spa_c(&m, 3).unwrap();
        assert!(c.rows().is_empty());
        let star = spa_star(&m, 3, 0).unwrap();
        assert_eq!(star, c);
        let rws = spa_r(&m, 4).unwrap();
        assert_eq!(spa_star(&m, 0, 4).unwrap(), rws);
        // transpose duality
        assert_eq!(spa_r(&m.transpose(), 3).unwrap().rows(), c.cols());
    }

    #[test]
    fn projected_column_vanishes() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let m = Array2::from_shape_fn((5, 6), |_| rng.random::<f64>());
        let mut ex = Extractor::new(m.view());
        let (p, s) = ex.best(Axis(1)).unwrap();
        ex.take_column(p, s);
        let col = ex.r.column(p);
        assert!(col.dot(&col).sqrt() <= 1e-10 * frobenius_norm(m.view()));
        let (q, s) = ex.best(Axis(0)).unwrap();
        ex.take_row(q, s);
        let row = ex.r.row(q);
        assert!(row.dot(&row).sqrt() <= 1e-10 * frobenius_norm(m.view()));
    }

    #[test]
    fn trace_json_lines() {
        let m = array![[1.0, 0.0, 0.5], [0.0, 1.0, 0.5]];
        let (_, trace) = gspa(m.view(), 2).unwrap();
        let mut buf = Vec::new();
        trace.write_json_lines(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), trace.steps.len());
        let first: ExtractionStep = serde_json::from_str(text.lines().next().unwrap()).unwrap();
        assert_eq!(first, trace.steps[0]);
    }
}

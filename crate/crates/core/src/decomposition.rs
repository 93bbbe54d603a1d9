//! Generalized separable decompositions `M ≈ M(:,K₁)P₁ + P₂M(K₂,:)`:
//! the data model, nonnegative weight fitting for fixed index sets, and the
//! quality metrics used to compare extraction algorithms.

use std::fs;
use std::path::Path;

use ndarray::{concatenate, Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::assignment::min_cost_assignment;
use crate::error::{GsError, Result};
use crate::io;
use crate::matrix::{frobenius_norm, DenseMatrix};

/// Selected columns `K₁` and rows `K₂` (0-based, sorted, distinct).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexSets {
    cols: Vec<usize>,
    rows: Vec<usize>,
}

impl IndexSets {
    pub fn new(mut cols: Vec<usize>, mut rows: Vec<usize>) -> Result<Self> {
        if cols.is_empty() && rows.is_empty() {
            return Err(GsError::InvalidArgument(
                "index sets must select at least one column or row".into(),
            ));
        }
        for (name, set) in [("column", &mut cols), ("row", &mut rows)] {
            set.sort_unstable();
            if set.windows(2).any(|w| w[0] == w[1]) {
                return Err(GsError::InvalidArgument(format!("duplicate {name} index")));
            }
        }
        Ok(Self { cols, rows })
    }

    pub fn cols(&self) -> &[usize] {
        &self.cols
    }

    pub fn rows(&self) -> &[usize] {
        &self.rows
    }

    /// `(r₁, r₂)`.
    pub fn sizes(&self) -> (usize, usize) {
        (self.cols.len(), self.rows.len())
    }

    pub fn total(&self) -> usize {
        self.cols.len() + self.rows.len()
    }

    pub fn validate_for(&self, shape: (usize, usize)) -> Result<()> {
        let (m, n) = shape;
        if self.cols.last().is_some_and(|&c| c >= n) || self.rows.last().is_some_and(|&r| r >= m) {
            return Err(GsError::Dimension(format!(
                "index sets {self} out of range for a {m}x{n} matrix"
            )));
        }
        Ok(())
    }

    /// Swaps the roles of columns and rows (the sets for `Mᵀ`).
    pub fn transposed(&self) -> Self {
        Self {
            cols: self.rows.clone(),
            rows: self.cols.clone(),
        }
    }

    /// Formats with 1-based indices, e.g. `K1={1,2} K2={5}`.
    pub fn one_based(&self) -> String {
        let fmt = |v: &[usize]| {
            v.iter()
                .map(|i| (i + 1).to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        format!("K1={{{}}} K2={{{}}}", fmt(&self.cols), fmt(&self.rows))
    }
}

impl std::fmt::Display for IndexSets {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "cols={:?} rows={:?}", self.cols, self.rows)
    }
}

#[derive(Debug, Clone)]
pub struct GsDecomposition {
    pub sets: IndexSets,
    /// `r₁ × n`, nonnegative.
    pub p1: Array2<f64>,
    /// `m × r₂`, nonnegative.
    pub p2: Array2<f64>,
    pub relative_error: f64,
}

/// Planted index sets and factors with `W*·H*` equal to the noiseless matrix.
#[derive(Debug, Clone)]
pub struct GroundTruth {
    pub sets: IndexSets,
    pub w: Array2<f64>,
    pub h: Array2<f64>,
}

impl GroundTruth {
    pub fn rank(&self) -> usize {
        self.w.ncols()
    }
}

pub const FIT_INNER_ITERS: usize = 500;
pub const FIT_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct FitTrace {
    pub decomposition: GsDecomposition,
    /// Squared residual after every full sweep (index 0 is the zero start).
    pub objective: Vec<f64>,
}

fn select_cols(m: ArrayView2<'_, f64>, idx: &[usize]) -> Array2<f64> {
    m.select(Axis(1), idx)
}

fn select_rows(m: ArrayView2<'_, f64>, idx: &[usize]) -> Array2<f64> {
    m.select(Axis(0), idx)
}

/// `M − M(:,K₁)P₁ − P₂M(K₂,:)`.
pub fn residual(
    m: ArrayView2<'_, f64>,
    sets: &IndexSets,
    p1: &Array2<f64>,
    p2: &Array2<f64>,
) -> Array2<f64> {
    let mut r = m.to_owned();
    if !sets.cols.is_empty() {
        r -= &select_cols(m, &sets.cols).dot(p1);
    }
    if !sets.rows.is_empty() {
        r -= &p2.dot(&select_rows(m, &sets.rows));
    }
    r
}

/// Nonnegative least-squares weights for fixed index sets.
///
/// Coordinate descent on the rows of `P₁` and the columns of `P₂`, each
/// update being the exact minimizer over that block (HALS). Starts from zero;
/// stops after `inner_iters` sweeps or when a sweep lowers the objective by
/// less than `tol` relatively.
pub fn fit_weights(
    m: &DenseMatrix,
    sets: &IndexSets,
    inner_iters: usize,
    tol: f64,
) -> Result<GsDecomposition> {
    fit_weights_traced(m, sets, inner_iters, tol).map(|t| t.decomposition)
}

pub fn fit_weights_default(m: &DenseMatrix, sets: &IndexSets) -> Result<GsDecomposition> {
    fit_weights(m, sets, FIT_INNER_ITERS, FIT_TOL)
}

pub fn fit_weights_traced(
    m: &DenseMatrix,
    sets: &IndexSets,
    inner_iters: usize,
    tol: f64,
) -> Result<FitTrace> {
    sets.validate_for(m.shape())?;
    let mv = m.view();
    let (rows, cols) = m.shape();
    let basis_cols = select_cols(mv, &sets.cols); // m × r1
    let basis_rows = select_rows(mv, &sets.rows); // r2 × n
    let col_sq: Array1<f64> = basis_cols.map_axis(Axis(0), |c| c.dot(&c));
    let row_sq: Array1<f64> = basis_rows.map_axis(Axis(1), |r| r.dot(&r));

    let mut p1 = Array2::<f64>::zeros((sets.cols.len(), cols));
    let mut p2 = Array2::<f64>::zeros((rows, sets.rows.len()));
    let mut r = mv.to_owned();
    let norm_sq = r.iter().map(|v| v * v).sum::<f64>();
    let mut objective = vec![norm_sq];

    for _ in 0..inner_iters {
        for k in 0..sets.cols.len() {
            if col_sq[k] == 0.0 {
                continue;
            }
            let a = basis_cols.column(k);
            let g = r.t().dot(&a);
            let mut row = p1.row_mut(k);
            let mut delta = Array1::<f64>::zeros(cols);
            for j in 0..cols {
                let new = (row[j] + g[j] / col_sq[k]).max(0.0);
                delta[j] = new - row[j];
                row[j] = new;
            }
            r -= &outer(a, delta.view());
        }
        for l in 0..sets.rows.len() {
            if row_sq[l] == 0.0 {
                continue;
            }
            let b = basis_rows.row(l);
            let g = r.dot(&b);
            let mut col = p2.column_mut(l);
            let mut delta = Array1::<f64>::zeros(rows);
            for i in 0..rows {
                let new = (col[i] + g[i] / row_sq[l]).max(0.0);
                delta[i] = new - col[i];
                col[i] = new;
            }
            r -= &outer(delta.view(), b);
        }
        // refresh to keep the incremental residual from drifting
        r = residual(mv, sets, &p1, &p2);
        let obj = r.iter().map(|v| v * v).sum::<f64>();
        let prev = *objective.last().unwrap();
        objective.push(obj);
        if prev - obj <= tol * prev || obj <= 1e-30 * norm_sq {
            break;
        }
    }

    let relative_error = if norm_sq > 0.0 {
        (objective.last().unwrap() / norm_sq).sqrt()
    } else {
        0.0
    };
    Ok(FitTrace {
        decomposition: GsDecomposition {
            sets: sets.clone(),
            p1,
            p2,
            relative_error,
        },
        objective,
    })
}

/// Largest number of unknowns `r₁n + mr₂` accepted by [`fit_weights_exact`].
pub const EXACT_FIT_MAX_UNKNOWNS: usize = 2000;

/// Optimal weights for fixed index sets, solving the joint nonnegative least
/// squares problem in `(P₁, P₂)` exactly by an active-set method.
///
/// The map `(P₁, P₂) ↦ M(:,K₁)P₁ + P₂M(K₂,:)` has a nullspace of dimension
/// at least `r₁r₂`, which makes coordinate descent slow on some inputs; this
/// solver is not affected. Cost grows with `(mn)·(r₁n + mr₂)²`, so it is
/// limited to [`EXACT_FIT_MAX_UNKNOWNS`] unknowns.
pub fn fit_weights_exact(m: &DenseMatrix, sets: &IndexSets) -> Result<GsDecomposition> {
    sets.validate_for(m.shape())?;
    let (rows, cols) = m.shape();
    let (r1, r2) = sets.sizes();
    let unknowns = r1 * cols + rows * r2;
    if unknowns > EXACT_FIT_MAX_UNKNOWNS {
        return Err(GsError::InvalidArgument(format!(
            "{unknowns} unknowns exceed the exact solver limit {EXACT_FIT_MAX_UNKNOWNS}"
        )));
    }
    let mv = m.view();
    let basis_cols = select_cols(mv, &sets.cols);
    let basis_rows = select_rows(mv, &sets.rows);
    // residual entry (i, j) is stored at i*cols + j
    let mut design = nalgebra::DMatrix::<f64>::zeros(rows * cols, unknowns);
    for k in 0..r1 {
        for j in 0..cols {
            let var = k * cols + j;
            for i in 0..rows {
                design[(i * cols + j, var)] = basis_cols[[i, k]];
            }
        }
    }
    for i in 0..rows {
        for l in 0..r2 {
            let var = r1 * cols + i * r2 + l;
            for j in 0..cols {
                design[(i * cols + j, var)] = basis_rows[[l, j]];
            }
        }
    }
    let target = nalgebra::DVector::from_iterator(rows * cols, mv.iter().copied());
    let x = crate::nnls::lawson_hanson(&design, &target)?;
    let p1 = Array2::from_shape_fn((r1, cols), |(k, j)| x[k * cols + j]);
    let p2 = Array2::from_shape_fn((rows, r2), |(i, l)| x[r1 * cols + i * r2 + l]);
    let norm = m.frobenius_norm();
    let relative_error = if norm > 0.0 {
        frobenius_norm(residual(mv, sets, &p1, &p2).view()) / norm
    } else {
        0.0
    };
    Ok(GsDecomposition {
        sets: sets.clone(),
        p1,
        p2,
        relative_error,
    })
}

fn outer(a: ndarray::ArrayView1<'_, f64>, b: ndarray::ArrayView1<'_, f64>) -> Array2<f64> {
    let a2 = a.insert_axis(Axis(1));
    let b2 = b.insert_axis(Axis(0));
    a2.dot(&b2)
}

/// `‖M − M(:,K₁)P₁ − P₂M(K₂,:)‖_F / ‖M‖_F`.
pub fn relative_error(m: &DenseMatrix, dec: &GsDecomposition) -> Result<f64> {
    check_shapes(m, dec)?;
    let norm = m.frobenius_norm();
    if norm == 0.0 {
        return Err(GsError::ZeroMatrix);
    }
    Ok(frobenius_norm(residual(m.view(), &dec.sets, &dec.p1, &dec.p2).view()) / norm)
}

fn check_shapes(m: &DenseMatrix, dec: &GsDecomposition) -> Result<()> {
    let (rows, cols) = m.shape();
    dec.sets.validate_for((rows, cols))?;
    let (r1, r2) = dec.sets.sizes();
    if dec.p1.dim() != (r1, cols) || dec.p2.dim() != (rows, r2) {
        return Err(GsError::Dimension(format!(
            "P1 {:?} / P2 {:?} inconsistent with a {rows}x{cols} matrix and (r1,r2)=({r1},{r2})",
            dec.p1.dim(),
            dec.p2.dim()
        )));
    }
    Ok(())
}

/// Fraction of planted column and row indices that were found.
pub fn accuracy(found: &IndexSets, truth: &IndexSets) -> Result<f64> {
    let total = truth.total();
    if total == 0 {
        return Err(GsError::InvalidArgument("empty ground truth".into()));
    }
    let hits = |a: &[usize], b: &[usize]| a.iter().filter(|x| b.binary_search(x).is_ok()).count();
    let correct = hits(&found.cols, &truth.cols) + hits(&found.rows, &truth.rows);
    Ok(correct as f64 / total as f64)
}

/// `W = [M(:,K₁), P₂]`, `H = [P₁; M(K₂,:)]`.
pub fn assemble_factors(m: &DenseMatrix, dec: &GsDecomposition) -> (Array2<f64>, Array2<f64>) {
    let mv = m.view();
    let w = concatenate(
        Axis(1),
        &[select_cols(mv, &dec.sets.cols).view(), dec.p2.view()],
    )
    .expect("row counts agree");
    let h = concatenate(
        Axis(0),
        &[dec.p1.view(), select_rows(mv, &dec.sets.rows).view()],
    )
    .expect("column counts agree");
    (w, h)
}

/// Permutation-matched factor distance:
/// `min ‖W*−W(:,π)‖/(2‖W*‖) + min ‖H*−H(π',:)‖/(2‖H*‖)`, the two permutations
/// chosen independently by optimal assignment.
pub fn distance_to_ground_truth(
    w: ArrayView2<'_, f64>,
    h: ArrayView2<'_, f64>,
    truth: &GroundTruth,
) -> Result<f64> {
    let r = truth.rank();
    if w.ncols() != r || h.nrows() != r || w.dim() != truth.w.dim() || h.dim() != truth.h.dim() {
        return Err(GsError::Dimension(format!(
            "factors {:?}/{:?} do not match ground truth {:?}/{:?}",
            w.dim(),
            h.dim(),
            truth.w.dim(),
            truth.h.dim()
        )));
    }
    let w_term = matched_distance(truth.w.view(), w) / (2.0 * frobenius_norm(truth.w.view()));
    let h_term = matched_distance(truth.h.t(), h.t()) / (2.0 * frobenius_norm(truth.h.view()));
    Ok(w_term + h_term)
}

/// `min_π ‖target − candidate(:,π)‖_F` over column permutations.
fn matched_distance(target: ArrayView2<'_, f64>, candidate: ArrayView2<'_, f64>) -> f64 {
    let r = target.ncols();
    let cost = Array2::from_shape_fn((r, r), |(i, j)| {
        target
            .column(i)
            .iter()
            .zip(candidate.column(j))
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
    });
    let assign = min_cost_assignment(cost.view());
    assign
        .iter()
        .enumerate()
        .map(|(i, &j)| cost[[i, j]])
        .sum::<f64>()
        .sqrt()
}

#[derive(Debug, Serialize, Deserialize)]
struct DecompositionDoc {
    cols: Vec<usize>,
    rows: Vec<usize>,
    relative_error: f64,
    p1_file: String,
    p2_file: String,
    /// `[m, n]` of the decomposed matrix.
    shape: [usize; 2],
}

/// Writes `<stem>.json` plus `<stem>_p1.csv` / `<stem>_p2.csv` into `dir`.
/// Indices in the JSON are 0-based.
pub fn write_decomposition(dir: &Path, stem: &str, dec: &GsDecomposition) -> Result<()> {
    fs::create_dir_all(dir)?;
    let doc = DecompositionDoc {
        cols: dec.sets.cols.clone(),
        rows: dec.sets.rows.clone(),
        relative_error: dec.relative_error,
        p1_file: format!("{stem}_p1.csv"),
        p2_file: format!("{stem}_p2.csv"),
        shape: [dec.p2.nrows(), dec.p1.ncols()],
    };
    write_sidecar(&dir.join(&doc.p1_file), &dec.p1)?;
    write_sidecar(&dir.join(&doc.p2_file), &dec.p2)?;
    fs::write(
        dir.join(format!("{stem}.json")),
        serde_json::to_string_pretty(&doc)?,
    )?;
    Ok(())
}

fn write_sidecar(path: &Path, p: &Array2<f64>) -> Result<()> {
    // empty blocks are written as empty files
    if p.is_empty() {
        fs::write(path, "")?;
        Ok(())
    } else {
        io::write_matrix(path, p)
    }
}

pub fn read_decomposition(json_path: &Path) -> Result<GsDecomposition> {
    let doc: DecompositionDoc = serde_json::from_str(&fs::read_to_string(json_path)?)?;
    let dir = json_path.parent().unwrap_or(Path::new("."));
    let [m, n] = doc.shape;
    let sets = IndexSets::new(doc.cols, doc.rows)?;
    sets.validate_for((m, n))?;
    let read = |name: &str, shape: (usize, usize)| -> Result<Array2<f64>> {
        if shape.0 == 0 || shape.1 == 0 {
            return Ok(Array2::zeros(shape));
        }
        let a = io::read_matrix(&dir.join(name))?.into_inner();
        if a.dim() != shape {
            return Err(GsError::Dimension(format!(
                "{name}: {:?} != {shape:?}",
                a.dim()
            )));
        }
        Ok(a)
    };
    let (r1, r2) = sets.sizes();
    Ok(GsDecomposition {
        p1: read(&doc.p1_file, (r1, n))?,
        p2: read(&doc.p2_file, (m, r2))?,
        sets,
        relative_error: doc.relative_error,
    })
}

/// The block `M(K₂, K₁)`, which vanishes for any exact decomposition.
pub fn zero_block(m: ArrayView2<'_, f64>, sets: &IndexSets) -> Array2<f64> {
    let sub = m.select(Axis(0), &sets.rows);
    sub.select(Axis(1), &sets.cols)
}

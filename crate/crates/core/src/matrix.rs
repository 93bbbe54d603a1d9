//! Dense matrix carrier and the numerical primitives shared by every algorithm:
//! norms, permutations, spectral-norm estimation and row/column equilibration.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{GsError, Result};

/// Dense real matrix with finite entries and at least one row and column.
///
/// Nonnegativity is checked by [`DenseMatrix::nonnegative`]; the general
/// constructor [`DenseMatrix::new`] only checks finiteness so that residuals
/// and weight matrices can share the type.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix(Array2<f64>);

impl DenseMatrix {
    pub fn new(data: Array2<f64>) -> Result<Self> {
        if data.nrows() == 0 || data.ncols() == 0 {
            return Err(GsError::EmptyMatrix);
        }
        if let Some(((row, col), _)) = data.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(GsError::NonFinite { row, col });
        }
        Ok(Self(data))
    }

    /// Builds a matrix and rejects any negative entry.
    pub fn nonnegative(data: Array2<f64>) -> Result<Self> {
        let m = Self::new(data)?;
        if let Some(((row, col), &value)) = m.0.indexed_iter().find(|(_, v)| **v < 0.0) {
            return Err(GsError::Negative { row, col, value });
        }
        Ok(m)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != ncols) {
            return Err(GsError::Dimension("ragged rows".into()));
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        let data = Array2::from_shape_vec((nrows, ncols), flat)
            .map_err(|e| GsError::Dimension(e.to_string()))?;
        Self::new(data)
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.0.dim()
    }

    pub fn view(&self) -> ArrayView2<'_, f64> {
        self.0.view()
    }

    pub fn as_array(&self) -> &Array2<f64> {
        &self.0
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[[i, j]]
    }

    pub fn transpose(&self) -> DenseMatrix {
        DenseMatrix(self.0.t().to_owned())
    }

    pub fn is_nonnegative(&self) -> bool {
        self.0.iter().all(|&v| v >= 0.0)
    }

    /// ℓ₁ norm of every column.
    pub fn col_l1_norms(&self) -> Array1<f64> {
        self.0.map(|v| v.abs()).sum_axis(Axis(0))
    }

    /// ℓ₁ norm of every row.
    pub fn row_l1_norms(&self) -> Array1<f64> {
        self.0.map(|v| v.abs()).sum_axis(Axis(1))
    }

    pub fn frobenius_norm(&self) -> f64 {
        frobenius_norm(self.view())
    }
}

impl std::ops::Index<(usize, usize)> for DenseMatrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.0[[i, j]]
    }
}

pub fn frobenius_norm(a: ArrayView2<'_, f64>) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// A bijection of `0..len`. `perm[i]` is the source index placed at position `i`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Permutation(Vec<usize>);

impl Permutation {
    pub fn identity(len: usize) -> Self {
        Self((0..len).collect())
    }

    pub fn new(map: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; map.len()];
        for &p in &map {
            if p >= map.len() || std::mem::replace(&mut seen[p], true) {
                return Err(GsError::InvalidArgument(format!(
                    "{map:?} is not a permutation"
                )));
            }
        }
        Ok(Self(map))
    }

    pub fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        use rand::seq::SliceRandom;
        let mut map: Vec<usize> = (0..len).collect();
        map.shuffle(rng);
        Self(map)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    /// The permutation `q` with `q[self[i]] = i`.
    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.0.len()];
        for (i, &p) in self.0.iter().enumerate() {
            inv[p] = i;
        }
        Self(inv)
    }
}

impl std::ops::Index<usize> for Permutation {
    type Output = usize;

    fn index(&self, i: usize) -> &usize {
        &self.0[i]
    }
}

impl TryFrom<Vec<usize>> for Permutation {
    type Error = GsError;

    fn try_from(v: Vec<usize>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<Permutation> for Vec<usize> {
    fn from(p: Permutation) -> Self {
        p.0
    }
}

/// `out(i, j) = m(row_perm[i], col_perm[j])`.
pub fn permute_rows_cols(
    m: &DenseMatrix,
    row_perm: &Permutation,
    col_perm: &Permutation,
) -> Result<DenseMatrix> {
    if row_perm.len() != m.rows() || col_perm.len() != m.cols() {
        return Err(GsError::Dimension(format!(
            "permutations of length ({}, {}) for a {}x{} matrix",
            row_perm.len(),
            col_perm.len(),
            m.rows(),
            m.cols()
        )));
    }
    Ok(DenseMatrix(permute_array(m.view(), row_perm, col_perm)))
}

pub(crate) fn permute_array(
    a: ArrayView2<'_, f64>,
    row_perm: &Permutation,
    col_perm: &Permutation,
) -> Array2<f64> {
    Array2::from_shape_fn(a.dim(), |(i, j)| a[[row_perm[i], col_perm[j]]])
}

pub const POWER_METHOD_TOL: f64 = 1e-8;
pub const POWER_METHOD_MAX_ITER: usize = 1000;
const POWER_METHOD_SEED: u64 = 0x005e_ed0f_5a1e;

/// Largest singular value by power iteration on `MᵀM`.
///
/// The start vector is a fixed-seed positive random vector, so the estimate
/// is deterministic. Iteration stops once the Rayleigh quotient changes by
/// less than `tol` relatively.
pub fn spectral_norm_estimate(m: ArrayView2<'_, f64>, tol: f64, max_iter: usize) -> f64 {
    assert!(tol > 0.0, "tolerance must be positive");
    let n = m.ncols();
    let mut rng = ChaCha8Rng::seed_from_u64(POWER_METHOD_SEED);
    let mut v: Array1<f64> = Array1::from_shape_fn(n, |_| rng.random_range(0.5..1.5));
    let mut norm = v.dot(&v).sqrt();
    v /= norm;
    let mut sigma_sq = 0.0;
    for _ in 0..max_iter.max(1) {
        let mv = m.dot(&v);
        let w = m.t().dot(&mv);
        let rayleigh = mv.dot(&mv);
        norm = w.dot(&w).sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        v = w / norm;
        let done = (rayleigh - sigma_sq).abs() <= tol * rayleigh;
        sigma_sq = rayleigh;
        if done {
            break;
        }
    }
    // one more quotient with the final vector
    let mv = m.dot(&v);
    mv.dot(&mv).max(sigma_sq).sqrt()
}

pub const SINKHORN_TOL: f64 = 1e-9;
pub const SINKHORN_MAX_ITER: usize = 10_000;

#[derive(Debug, Clone)]
pub struct ScalingResult {
    pub scaled: DenseMatrix,
    pub row_factors: Array1<f64>,
    pub col_factors: Array1<f64>,
    pub converged: bool,
    pub iterations: usize,
}

/// Alternating row/column ℓ₁ equilibration.
///
/// Rows are driven to sum `k2` and columns to sum `k1`, which requires
/// `n·k1 = m·k2`. Convergence is measured as the largest relative deviation
/// of any row or column sum from its target. When `max_iter` is exhausted the
/// result is returned with `converged = false`.
pub fn sinkhorn_scale(
    m: &DenseMatrix,
    k1: f64,
    k2: f64,
    tol: f64,
    max_iter: usize,
) -> Result<ScalingResult> {
    let (rows, cols) = m.shape();
    if !(k1 > 0.0 && k2 > 0.0) {
        return Err(GsError::InvalidArgument(
            "scaling targets must be positive".into(),
        ));
    }
    let total_c = cols as f64 * k1;
    let total_r = rows as f64 * k2;
    if (total_c - total_r).abs() > 1e-12 * total_c.max(total_r) {
        return Err(GsError::InvalidArgument(format!(
            "targets violate n*k1 = m*k2 ({total_c} vs {total_r})"
        )));
    }
    if !m.is_nonnegative() {
        return Err(GsError::NotScalable("matrix has negative entries".into()));
    }
    let a = m.as_array();
    if let Some(i) = m.row_l1_norms().iter().position(|&s| s == 0.0) {
        return Err(GsError::NotScalable(format!("row {i} is zero")));
    }
    if let Some(j) = m.col_l1_norms().iter().position(|&s| s == 0.0) {
        return Err(GsError::NotScalable(format!("column {j} is zero")));
    }

    let mut r = Array1::<f64>::ones(rows);
    let mut c = Array1::<f64>::ones(cols);
    let deviation = |r: &Array1<f64>, c: &Array1<f64>| {
        let mut worst = 0.0f64;
        let mut col_sums = Array1::<f64>::zeros(cols);
        for i in 0..rows {
            let mut s = 0.0;
            for j in 0..cols {
                let v = r[i] * a[[i, j]] * c[j];
                s += v;
                col_sums[j] += v;
            }
            worst = worst.max((s - k2).abs() / k2);
        }
        for s in col_sums.iter() {
            worst = worst.max((s - k1).abs() / k1);
        }
        worst
    };

    let mut iterations = 0;
    let mut converged = deviation(&r, &c) <= tol;
    while !converged && iterations < max_iter {
        iterations += 1;
        // rows: r_i = k2 / Σ_j a_ij c_j
        let ac = a.dot(&c);
        r.zip_mut_with(&ac, |ri, &s| *ri = k2 / s);
        // columns: c_j = k1 / Σ_i r_i a_ij
        let ra = a.t().dot(&r);
        c.zip_mut_with(&ra, |cj, &s| *cj = k1 / s);
        converged = deviation(&r, &c) <= tol;
    }

    let scaled = Array2::from_shape_fn((rows, cols), |(i, j)| r[i] * a[[i, j]] * c[j]);
    Ok(ScalingResult {
        scaled: DenseMatrix(scaled),
        row_factors: r,
        col_factors: c,
        converged,
        iterations,
    })
}

/// Scaling with the default targets `k1 = m`, `k2 = n`.
pub fn sinkhorn_scale_default(m: &DenseMatrix) -> Result<ScalingResult> {
    sinkhorn_scale(
        m,
        m.rows() as f64,
        m.cols() as f64,
        SINKHORN_TOL,
        SINKHORN_MAX_ITER,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn frobenius_basics() {
        assert_eq!(frobenius_norm(Array2::<f64>::zeros((2, 2)).view()), 0.0);
        let eye = Array2::<f64>::eye(3);
        assert!((frobenius_norm(eye.view()) - 3f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn rejects_negative_and_nonfinite() {
        assert!(matches!(
            DenseMatrix::nonnegative(array![[1.0, -0.5]]),
            Err(GsError::Negative { row: 0, col: 1, .. })
        ));
        assert!(matches!(
            DenseMatrix::new(array![[f64::NAN]]),
            Err(GsError::NonFinite { .. })
        ));
        assert!(matches!(
            DenseMatrix::new(Array2::zeros((0, 3))),
            Err(GsError::EmptyMatrix)
        ));
    }

    #[test]
    fn spectral_norm_simple_cases() {
        let d = array![[3.0, 0.0], [0.0, 1.0]];
        assert!((spectral_norm_estimate(d.view(), 1e-12, 1000) - 3.0).abs() < 1e-6);
        let u = array![0.6, 0.8];
        let v = array![1.0, 2.0, 2.0] / 3.0;
        let uv = Array2::from_shape_fn((2, 3), |(i, j)| u[i] * v[j]);
        assert!((spectral_norm_estimate(uv.view(), 1e-12, 1000) - 1.0).abs() < 1e-12);
        let z = Array2::<f64>::zeros((3, 2));
        assert_eq!(spectral_norm_estimate(z.view(), 1e-8, 100), 0.0);
    }

    #[test]
    fn permutation_validation() {
        assert!(Permutation::new(vec![0, 0]).is_err());
        assert!(Permutation::new(vec![2, 0]).is_err());
        let p = Permutation::new(vec![2, 0, 1]).unwrap();
        let q = p.inverse();
        for i in 0..3 {
            assert_eq!(q[p[i]], i);
        }
        let m = DenseMatrix::new(Array2::zeros((3, 2))).unwrap();
        assert!(permute_rows_cols(&m, &p, &p).is_err());
    }

    #[test]
    fn permute_swap_twice_is_identity() {
        let m = DenseMatrix::new(array![[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]]).unwrap();
        let swap = Permutation::new(vec![1, 0, 2]).unwrap();
        let id = Permutation::identity(2);
        let once = permute_rows_cols(&m, &swap, &id).unwrap();
        assert_eq!(once[(0, 0)], 3.0);
        let twice = permute_rows_cols(&once, &swap, &id).unwrap();
        assert_eq!(twice, m);
        let ident = permute_rows_cols(&m, &Permutation::identity(3), &id).unwrap();
        assert_eq!(ident, m);
    }

    #[test]
    fn sinkhorn_rejects_bad_input() {
        let m = DenseMatrix::new(array![[1.0, 0.0], [1.0, 0.0]]).unwrap();
        assert!(matches!(
            sinkhorn_scale(&m, 2.0, 2.0, 1e-9, 100),
            Err(GsError::NotScalable(_))
        ));
        let ok = DenseMatrix::new(array![[1.0, 1.0], [1.0, 1.0]]).unwrap();
        assert!(matches!(
            sinkhorn_scale(&ok, 1.0, 2.0, 1e-9, 100),
            Err(GsError::InvalidArgument(_))
        ));
    }

    #[test]
    fn sinkhorn_fixed_point() {
        // rows sum to 3, columns sum to 2
        let m = DenseMatrix::new(array![[1.0, 1.0, 1.0], [1.0, 1.0, 1.0]]).unwrap();
        let res = sinkhorn_scale(&m, 2.0, 3.0, 1e-12, 100).unwrap();
        assert!(res.converged);
        assert_eq!(res.iterations, 0);
        assert!(res.row_factors.iter().all(|&v| v == 1.0));
        assert!(res.col_factors.iter().all(|&v| v == 1.0));
        assert_eq!(res.scaled, m);
    }

    #[test]
    fn sinkhorn_reports_nonconvergence() {
        // has a zero pattern without total support; sums cannot be balanced exactly
        let m = DenseMatrix::new(array![[1.0, 1.0], [0.0, 1.0]]).unwrap();
        let res = sinkhorn_scale(&m, 2.0, 2.0, 1e-14, 50).unwrap();
        assert!(!res.converged);
        assert_eq!(res.iterations, 50);
    }
}

//! Convex self-expressive model and its fast gradient solver (GS-FGM).
//!
//! Minimizes
//!
//! ```text
//! F(X, Y) = ½‖M − MX − YM‖²_F + λ (tr X + tr Y)
//! ```
//!
//! over `X ∈ Ω₁` (n × n) and `Y ∈ Ω₂` (m × m), where
//!
//! ```text
//! Ω₁ = { X : 0 ≤ X ≤ 1,  w_i X(i,j) ≤ w_j X(i,i) },   w_j = ‖M(:,j)‖₁
//! Ω₂ = { Y : 0 ≤ Y ≤ 1,  ŵ_t Y(l,t) ≤ ŵ_l Y(t,t) },   ŵ_l = ‖M(l,:)‖₁
//! ```
//!
//! Large diagonal entries of `X` mark important columns of `M`, those of `Y`
//! important rows.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::time::Instant;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

use crate::decomposition::{fit_weights_default, IndexSets};
use crate::error::{GsError, Result};
use crate::matrix::{
    frobenius_norm, spectral_norm_estimate, DenseMatrix, POWER_METHOD_MAX_ITER, POWER_METHOD_TOL,
};
use crate::spa::{gspa, spa};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    /// Ω₁: each row of `X` is dominated by its diagonal entry.
    Rows,
    /// Ω₂: each column of `Y` is dominated by its diagonal entry.
    Columns,
}

/// Weight vector and orientation defining one of the feasible sets.
#[derive(Debug, Clone)]
pub struct OmegaSpec {
    weights: Array1<f64>,
    orientation: Orientation,
}

impl OmegaSpec {
    pub fn new(weights: Array1<f64>, orientation: Orientation) -> Result<Self> {
        if weights.iter().any(|&w| !(w > 0.0 && w.is_finite())) {
            return Err(GsError::InvalidArgument(
                "Ω weights must be positive and finite".into(),
            ));
        }
        Ok(Self {
            weights,
            orientation,
        })
    }

    /// Ω₁ for `m`, weighted by column ℓ₁ norms.
    pub fn for_columns_of(m: &DenseMatrix) -> Result<Self> {
        Self::new(m.col_l1_norms(), Orientation::Rows)
    }

    /// Ω₂ for `m`, weighted by row ℓ₁ norms.
    pub fn for_rows_of(m: &DenseMatrix) -> Result<Self> {
        Self::new(m.row_l1_norms(), Orientation::Columns)
    }

    /// Uniform weights, the set used for scaled matrices.
    pub fn uniform(len: usize, orientation: Orientation) -> Self {
        Self {
            weights: Array1::ones(len),
            orientation,
        }
    }

    pub fn weights(&self) -> ArrayView1<'_, f64> {
        self.weights.view()
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Largest violation of the set's constraints by `z` (0 when feasible).
    pub fn violation(&self, z: ArrayView2<'_, f64>) -> f64 {
        let w = &self.weights;
        let mut worst = 0.0f64;
        for ((a, b), &v) in z.indexed_iter() {
            // (diag index, off-diagonal index)
            let (d, o) = match self.orientation {
                Orientation::Rows => (a, b),
                Orientation::Columns => (b, a),
            };
            let diag = z[[d, d]];
            worst = worst.max(-v).max(v - 1.0);
            if d != o {
                worst = worst.max(v - w[o] / w[d] * diag);
            }
        }
        worst
    }
}

/// Euclidean projection of `x` onto
/// `{v : 0 ≤ v_diag ≤ 1, 0 ≤ v_j ≤ min(1, (w_j / w_diag)·v_diag)}`.
///
/// For a fixed diagonal value `d` every other coordinate clips independently,
/// so the squared distance is a convex piecewise quadratic in `d`. Its
/// breakpoints are where each clipping bound stops binding; after sorting them
/// the minimizer is found with one sweep over the pieces.
pub fn project_row_omega(
    x: ArrayView1<'_, f64>,
    diag: usize,
    weights: ArrayView1<'_, f64>,
) -> Array1<f64> {
    let n = x.len();
    assert_eq!(n, weights.len(), "weights and vector length differ");
    let wi = weights[diag];

    // (breakpoint, ratio, value) for coordinates that can bind
    let mut pieces: Vec<(f64, f64, f64)> = Vec::with_capacity(n);
    for j in 0..n {
        if j == diag || x[j] <= 0.0 {
            continue;
        }
        let c = weights[j] / wi;
        let b = (x[j].min(1.0) / c).min(1.0);
        pieces.push((b, c, x[j]));
    }
    pieces.sort_by(|a, b| a.0.total_cmp(&b.0));

    // suffix sums over pieces still binding to the right of each breakpoint
    let k = pieces.len();
    let mut sum_cx = vec![0.0; k + 1];
    let mut sum_cc = vec![0.0; k + 1];
    for t in (0..k).rev() {
        let (_, c, v) = pieces[t];
        sum_cx[t] = sum_cx[t + 1] + c * v;
        sum_cc[t] = sum_cc[t + 1] + c * c;
    }

    let xi = x[diag];
    let mut lo = 0.0;
    let mut d = 1.0;
    for t in 0..=k {
        let hi = if t < k { pieces[t].0 } else { 1.0 };
        let stationary = (xi + sum_cx[t]) / (1.0 + sum_cc[t]);
        if stationary <= hi {
            d = stationary.max(lo);
            break;
        }
        lo = hi;
    }
    let d = d.clamp(0.0, 1.0);

    let mut out = Array1::zeros(n);
    for j in 0..n {
        out[j] = if j == diag {
            d
        } else {
            let ub = (weights[j] / wi * d).min(1.0);
            x[j].clamp(0.0, ub)
        };
    }
    out
}

/// Projection onto Ω₁ (row-wise) or Ω₂ (column-wise), depending on `spec`.
pub fn project_omega(z: ArrayView2<'_, f64>, spec: &OmegaSpec) -> Array2<f64> {
    let n = spec.len();
    assert_eq!(z.dim(), (n, n), "matrix does not match the Ω dimension");
    let mut out = Array2::zeros((n, n));
    let w = spec.weights.view();
    match spec.orientation {
        Orientation::Rows => {
            for (i, (row, mut dst)) in z.outer_iter().zip(out.outer_iter_mut()).enumerate() {
                dst.assign(&project_row_omega(row, i, w));
            }
        }
        Orientation::Columns => {
            for (t, (col, mut dst)) in z
                .axis_iter(Axis(1))
                .zip(out.axis_iter_mut(Axis(1)))
                .enumerate()
            {
                dst.assign(&project_row_omega(col, t, w));
            }
        }
    }
    out
}

pub fn project_omega1(x: ArrayView2<'_, f64>, spec: &OmegaSpec) -> Array2<f64> {
    debug_assert_eq!(spec.orientation, Orientation::Rows);
    project_omega(x, spec)
}

pub fn project_omega2(y: ArrayView2<'_, f64>, spec: &OmegaSpec) -> Array2<f64> {
    debug_assert_eq!(spec.orientation, Orientation::Columns);
    project_omega(y, spec)
}

/// `M − MX − YM`.
pub fn self_expressive_residual(
    m: ArrayView2<'_, f64>,
    x: ArrayView2<'_, f64>,
    y: ArrayView2<'_, f64>,
) -> Array2<f64> {
    let mut r = m.to_owned();
    r -= &m.dot(&x);
    r -= &y.dot(&m);
    r
}

fn trace(a: ArrayView2<'_, f64>) -> f64 {
    a.diag().sum()
}

/// `F(X, Y)`.
pub fn objective(
    m: ArrayView2<'_, f64>,
    x: ArrayView2<'_, f64>,
    y: ArrayView2<'_, f64>,
    lambda: f64,
) -> f64 {
    let r = self_expressive_residual(m, x, y);
    0.5 * r.iter().map(|v| v * v).sum::<f64>() + lambda * (trace(x) + trace(y))
}

/// `(∇_X F, ∇_Y F) = (−MᵀR + λI, −RMᵀ + λI)` with `R = M − MX − YM`.
pub fn gradients(
    m: ArrayView2<'_, f64>,
    x: ArrayView2<'_, f64>,
    y: ArrayView2<'_, f64>,
    lambda: f64,
) -> (Array2<f64>, Array2<f64>) {
    gradients_from_residual(m, self_expressive_residual(m, x, y).view(), lambda)
}

fn gradients_from_residual(
    m: ArrayView2<'_, f64>,
    r: ArrayView2<'_, f64>,
    lambda: f64,
) -> (Array2<f64>, Array2<f64>) {
    let mut gx = -m.t().dot(&r);
    let mut gy = -r.dot(&m.t());
    gx.diag_mut().map_inplace(|v| *v += lambda);
    gy.diag_mut().map_inplace(|v| *v += lambda);
    (gx, gy)
}

#[derive(Debug, Clone)]
pub struct FgmConfig {
    /// Scales the initial residual into the penalty weight λ.
    pub lambda_tilde: f64,
    pub max_iter: usize,
    /// Stopping tolerance on relative objective change and iterate movement.
    pub delta: f64,
    /// Initial momentum parameter.
    pub alpha0: f64,
    /// Optional per-iteration CSV log.
    pub log_path: Option<PathBuf>,
}

impl Default for FgmConfig {
    fn default() -> Self {
        Self {
            lambda_tilde: 0.25,
            max_iter: 1000,
            delta: 1e-4,
            alpha0: 0.05,
            log_path: None,
        }
    }
}

impl FgmConfig {
    fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(GsError::InvalidArgument("delta must lie in (0, 1)".into()));
        }
        if !(self.alpha0 > 0.0 && self.alpha0 < 1.0) {
            return Err(GsError::InvalidArgument("alpha0 must lie in (0, 1)".into()));
        }
        if self.lambda_tilde.is_nan() || self.lambda_tilde < 0.0 {
            return Err(GsError::InvalidArgument(
                "lambda_tilde must be nonnegative".into(),
            ));
        }
        Ok(())
    }
}

/// Starting point and penalty weight for the solver.
#[derive(Debug, Clone)]
pub struct FgmInit {
    pub x0: Array2<f64>,
    pub y0: Array2<f64>,
    pub lambda: f64,
    /// Sets returned by the greedy extraction that seeded `x0`/`y0`.
    pub sets: Option<IndexSets>,
}

/// Warm start from GSPA: `X₀(K₁,:) = P₁*`, `Y₀(:,K₂) = P₂*`, zero elsewhere,
/// and `λ = λ̃·‖M − MX₀ − Y₀M‖_F / (2r)`.
pub fn init_fgm(m: &DenseMatrix, r: usize, lambda_tilde: f64) -> Result<FgmInit> {
    if r == 0 {
        return Err(GsError::InvalidArgument("r must be at least 1".into()));
    }
    let (rows, cols) = m.shape();
    let (sets, _) = gspa(m.view(), r.min(rows + cols))?;
    let fit = fit_weights_default(m, &sets)?;
    let mut x0 = Array2::zeros((cols, cols));
    let mut y0 = Array2::zeros((rows, rows));
    for (k, &c) in sets.cols().iter().enumerate() {
        x0.row_mut(c).assign(&fit.p1.row(k));
    }
    for (k, &q) in sets.rows().iter().enumerate() {
        y0.column_mut(q).assign(&fit.p2.column(k));
    }
    let res = frobenius_norm(self_expressive_residual(m.view(), x0.view(), y0.view()).view());
    Ok(FgmInit {
        x0,
        y0,
        lambda: lambda_tilde * res / (2.0 * r as f64),
        sets: Some(sets),
    })
}

#[derive(Debug, Clone)]
pub struct SelfExpressiveSolution {
    pub x: Array2<f64>,
    pub y: Array2<f64>,
    /// `F` at the starting point followed by `F` at every projected iterate.
    pub objective_history: Vec<f64>,
    pub lambda: f64,
    pub iterations: usize,
}

impl SelfExpressiveSolution {
    pub fn final_objective(&self) -> f64 {
        *self.objective_history.last().unwrap()
    }
}

/// Step size inflation applied to the power-method estimate of `2σ_max(M)²`.
const LIPSCHITZ_INFLATION: f64 = 1.01;

/// Accelerated projected gradient on `F` over `Ω₁ × Ω₂`.
///
/// Stops after `cfg.max_iter` iterations, or once
/// `|e(k) − e(k−1)| ≤ δ·e(k−1)` or `‖Z(k+1) − Z(k)‖_F ≤ δ‖Z(1) − Z(0)‖_F`, with
/// `e` the objective at the projected iterate `Z = (X, Y)`.
pub fn gsfgm_solve(
    m: &DenseMatrix,
    r1: usize,
    r2: usize,
    cfg: &FgmConfig,
    init: Option<FgmInit>,
) -> Result<SelfExpressiveSolution> {
    cfg.validate()?;
    let (rows, cols) = m.shape();
    if !m.is_nonnegative() {
        return Err(GsError::InvalidArgument("input must be nonnegative".into()));
    }
    if m.frobenius_norm() == 0.0 {
        return Err(GsError::ZeroMatrix);
    }
    let omega1 = OmegaSpec::for_columns_of(m).map_err(|_| {
        GsError::InvalidArgument("every column must have a positive ℓ₁ norm".into())
    })?;
    let omega2 = OmegaSpec::for_rows_of(m)
        .map_err(|_| GsError::InvalidArgument("every row must have a positive ℓ₁ norm".into()))?;
    let init = match init {
        Some(i) => i,
        None => init_fgm(m, (r1 + r2).max(1), cfg.lambda_tilde)?,
    };
    if init.x0.dim() != (cols, cols) || init.y0.dim() != (rows, rows) {
        return Err(GsError::Dimension("initial X/Y do not match M".into()));
    }
    let lambda = init.lambda;
    let mv = m.view();

    let sigma = spectral_norm_estimate(mv, POWER_METHOD_TOL, POWER_METHOD_MAX_ITER);
    let lipschitz = LIPSCHITZ_INFLATION * 2.0 * sigma * sigma;
    let step = 1.0 / lipschitz;

    let mut log = match &cfg.log_path {
        Some(p) => {
            let mut w = BufWriter::new(File::create(p)?);
            writeln!(w, "iteration,objective,constraint_violation,step_seconds")?;
            Some(w)
        }
        None => None,
    };

    let objective_of = |r: &Array2<f64>, x: &Array2<f64>, y: &Array2<f64>| {
        0.5 * r.iter().map(|v| v * v).sum::<f64>() + lambda * (trace(x.view()) + trace(y.view()))
    };

    // previous projected iterate and its residual
    let mut x_prev = init.x0.clone();
    let mut y_prev = init.y0.clone();
    let mut r_prev = self_expressive_residual(mv, x_prev.view(), y_prev.view());
    // extrapolated point and its residual (R is affine in (X, Y))
    let mut x = x_prev.clone();
    let mut y = y_prev.clone();
    let mut r = r_prev.clone();

    let mut history = vec![objective_of(&r_prev, &x_prev, &y_prev)];
    let mut alpha = cfg.alpha0;
    let mut first_move = None;
    let mut iterations = 0;

    for k in 1..=cfg.max_iter {
        let t0 = Instant::now();
        iterations = k;
        let (gx, gy) = gradients_from_residual(mv, r.view(), lambda);
        let xn = project_omega1((&x - &(gx * step)).view(), &omega1);
        let yn = project_omega2((&y - &(gy * step)).view(), &omega2);
        let rn = self_expressive_residual(mv, xn.view(), yn.view());
        let e = objective_of(&rn, &xn, &yn);
        if !e.is_finite() {
            return Err(GsError::Diverged(format!(
                "objective became {e} at iteration {k}"
            )));
        }
        debug_assert!(omega1.violation(xn.view()) <= 1e-9);
        debug_assert!(omega2.violation(yn.view()) <= 1e-9);

        // α_k ≥ 0 with α_k² = (1 − α_k)α_{k−1}²
        let a2 = alpha * alpha;
        let alpha_next = 0.5 * (-a2 + (a2 * a2 + 4.0 * a2).sqrt());
        let beta = alpha * (1.0 - alpha) / (a2 + alpha_next);
        alpha = alpha_next;

        let moved = (frobenius_norm((&xn - &x_prev).view()).powi(2)
            + frobenius_norm((&yn - &y_prev).view()).powi(2))
        .sqrt();
        let first = *first_move.get_or_insert(moved);
        let e_prev = *history.last().unwrap();
        history.push(e);

        x = &xn + &((&xn - &x_prev) * beta);
        y = &yn + &((&yn - &y_prev) * beta);
        r = &rn + &((&rn - &r_prev) * beta);
        x_prev = xn;
        y_prev = yn;
        r_prev = rn;

        if let Some(w) = log.as_mut() {
            let viol = omega1
                .violation(x_prev.view())
                .max(omega2.violation(y_prev.view()));
            writeln!(w, "{k},{e},{viol},{}", t0.elapsed().as_secs_f64())?;
        }

        if k >= 2 && ((e - e_prev).abs() <= cfg.delta * e_prev || moved <= cfg.delta * first) {
            break;
        }
    }
    if let Some(mut w) = log {
        w.flush()?;
    }

    Ok(SelfExpressiveSolution {
        x: x_prev,
        y: y_prev,
        objective_history: history,
        lambda,
        iterations,
    })
}

/// Indices of the `k` largest entries, ties broken by the smaller index.
fn top_k(v: ArrayView1<'_, f64>, k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[b].total_cmp(&v[a]).then(a.cmp(&b)));
    idx.truncate(k);
    idx
}

/// `K₁` = the `r1` largest diagonal entries of `X`, `K₂` = the `r2` largest of `Y`.
pub fn post_process_diagonal(
    x: ArrayView2<'_, f64>,
    y: ArrayView2<'_, f64>,
    r1: usize,
    r2: usize,
) -> Result<IndexSets> {
    if r1 > x.nrows() || r2 > y.nrows() {
        return Err(GsError::InvalidArgument(format!(
            "cannot pick ({r1}, {r2}) from diagonals of length ({}, {})",
            x.nrows(),
            y.nrows()
        )));
    }
    IndexSets::new(top_k(x.diag(), r1), top_k(y.diag(), r2))
}

/// Selection for data far from the model: candidate columns are ordered by
/// SPA on `Xᵀ` and candidate rows by SPA on `Y`; then, for `r` steps, the next
/// candidate column or row whose projection leaves the smaller residual of
/// `M` is taken and the residual deflated.
pub fn post_process_real_data(
    m: &DenseMatrix,
    x: ArrayView2<'_, f64>,
    y: ArrayView2<'_, f64>,
    r: usize,
) -> Result<IndexSets> {
    if r == 0 {
        return Err(GsError::InvalidArgument("r must be at least 1".into()));
    }
    let (rows, cols) = m.shape();
    let (cand_cols, _) = spa(x.t(), r.min(cols))?;
    let (cand_rows, _) = spa(y, r.min(rows))?;

    let mut res = m.as_array().clone();
    let zero = crate::spa::RESIDUAL_ZERO_TOL * m.frobenius_norm();
    let (mut ci, mut ri) = (0, 0);
    let (mut k1, mut k2) = (Vec::new(), Vec::new());
    for _ in 0..r {
        // skip candidates already spanned by the residual
        while ci < cand_cols.len() && norm(res.column(cand_cols[ci])) <= zero {
            ci += 1;
        }
        while ri < cand_rows.len() && norm(res.row(cand_rows[ri])) <= zero {
            ri += 1;
        }
        let col_left = cand_cols.get(ci).map(|&c| {
            let u = res.column(c);
            let proj = res.t().dot(&u);
            (c, residual_after(&res, &proj, u.dot(&u)))
        });
        let row_left = cand_rows.get(ri).map(|&q| {
            let v = res.row(q);
            let proj = res.dot(&v);
            (q, residual_after(&res, &proj, v.dot(&v)))
        });
        match (col_left, row_left) {
            (Some((c, cn)), Some((_, rn))) if cn <= rn => {
                deflate_column(&mut res, c);
                k1.push(c);
                ci += 1;
            }
            (Some((c, _)), None) => {
                deflate_column(&mut res, c);
                k1.push(c);
                ci += 1;
            }
            (_, Some((q, _))) => {
                deflate_row(&mut res, q);
                k2.push(q);
                ri += 1;
            }
            (None, None) => break,
        }
    }
    IndexSets::new(k1, k2)
}

fn norm(v: ArrayView1<'_, f64>) -> f64 {
    v.dot(&v).sqrt()
}

/// `‖R − u(uᵀR)/‖u‖²‖_F` from `uᵀR` without forming the projection.
fn residual_after(res: &Array2<f64>, proj: &Array1<f64>, u_sq: f64) -> f64 {
    let total: f64 = res.iter().map(|v| v * v).sum();
    (total - proj.dot(proj) / u_sq).max(0.0).sqrt()
}

fn deflate_column(res: &mut Array2<f64>, c: usize) {
    let u = res.column(c).to_owned();
    let coeff = res.t().dot(&u) / u.dot(&u);
    for (i, &ui) in u.iter().enumerate() {
        res.row_mut(i).scaled_add(-ui, &coeff);
    }
}

fn deflate_row(res: &mut Array2<f64>, q: usize) {
    let v = res.row(q).to_owned();
    let coeff = res.dot(&v) / v.dot(&v);
    for (i, &ci) in coeff.iter().enumerate() {
        res.row_mut(i).scaled_add(-ci, &v);
    }
}

/// Convenience pipeline: solve, then pick `(r1, r2)` by the diagonal rule.
pub fn gsfgm(m: &DenseMatrix, r1: usize, r2: usize, cfg: &FgmConfig) -> Result<IndexSets> {
    let sol = gsfgm_solve(m, r1, r2, cfg, None)?;
    post_process_diagonal(sol.x.view(), sol.y.view(), r1, r2)
}

/// Ten log-spaced values of λ̃ in `[1e-3, 10]`.
pub fn lambda_tilde_grid() -> Vec<f64> {
    (0..10)
        .map(|i| 10f64.powf(-3.0 + 4.0 * i as f64 / 9.0))
        .collect()
}

/// Runs the solver for every λ̃ in `grid` and keeps the index sets whose
/// fitted relative error is smallest (earliest wins ties).
pub fn gsfgm_best_of_grid(
    m: &DenseMatrix,
    r1: usize,
    r2: usize,
    cfg: &FgmConfig,
    grid: &[f64],
) -> Result<(IndexSets, f64, f64)> {
    let mut best: Option<(IndexSets, f64, f64)> = None;
    for &lt in grid {
        let cfg = FgmConfig {
            lambda_tilde: lt,
            ..cfg.clone()
        };
        let sets = gsfgm(m, r1, r2, &cfg)?;
        let err = fit_weights_default(m, &sets)?.relative_error;
        if best.as_ref().is_none_or(|b| err < b.1) {
            best = Some((sets, err, lt));
        }
    }
    best.ok_or_else(|| GsError::InvalidArgument("empty λ̃ grid".into()))
}

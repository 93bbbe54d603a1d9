//! Synthetic generalized separable instances and small constructive fixtures.
//!
//! Random draws come from a seeded ChaCha8 stream in a fixed order
//! (`W₁`, `H₁`, `W₂`, `H₂`, noise, permutations), so an instance depends only
//! on its parameters and seed.

use std::fs;
use std::path::Path;

use ndarray::{s, Array1, Array2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::decomposition::{GroundTruth, IndexSets};
use crate::error::{GsError, Result};
use crate::io;
use crate::matrix::{
    frobenius_norm, permute_array, sinkhorn_scale_default, DenseMatrix, Permutation,
};

/// Regeneration attempts when a drawn block matrix cannot be equilibrated.
pub const MAX_ATTEMPTS: u64 = 10;

#[derive(Debug, Clone)]
pub struct SyntheticInstance {
    /// Noisy, clamped, permuted matrix.
    pub m: DenseMatrix,
    /// Scaled matrix before noise, in the same permuted frame as `m`.
    pub noiseless: DenseMatrix,
    /// Planted sets and factors in the permuted frame.
    pub truth: GroundTruth,
    pub noise_level: f64,
    pub row_perm: Permutation,
    pub col_perm: Permutation,
    pub seed: u64,
}

impl SyntheticInstance {
    pub fn ranks(&self) -> (usize, usize) {
        self.truth.sets.sizes()
    }
}

fn uniform(rng: &mut ChaCha8Rng, shape: (usize, usize)) -> Array2<f64> {
    Array2::from_shape_simple_fn(shape, || rng.random::<f64>())
}

/// Each entry is zero with probability 1/2, otherwise uniform on `[0, 1)`.
fn sparse_uniform(rng: &mut ChaCha8Rng, shape: (usize, usize)) -> Array2<f64> {
    Array2::from_shape_simple_fn(shape, || {
        if rng.random_bool(0.5) {
            0.0
        } else {
            rng.random::<f64>()
        }
    })
}

/// `[[W₁, W₁H₁ + W₂H₂], [0, H₂]]`.
fn block_matrix(
    w1: &Array2<f64>,
    h1: &Array2<f64>,
    w2: &Array2<f64>,
    h2: &Array2<f64>,
) -> Array2<f64> {
    let (top, r1) = w1.dim();
    let (r2, right) = h2.dim();
    let mut b = Array2::zeros((top + r2, r1 + right));
    b.slice_mut(s![..top, ..r1]).assign(w1);
    b.slice_mut(s![..top, r1..])
        .assign(&(w1.dot(h1) + w2.dot(h2)));
    b.slice_mut(s![top.., r1..]).assign(h2);
    b
}

/// Scaled block matrix with its exact factors, un-permuted.
struct ScaledModel {
    ms: Array2<f64>,
    /// `[Ms(:,K₁), P̃₂]`.
    w: Array2<f64>,
    /// `[P̃₁; Ms(K₂,:)]`.
    h: Array2<f64>,
}

/// Equilibrates the block matrix and transfers the factors through the
/// scaling: `P̃₁ = D_c(K₁)⁻¹[I H₁]D_c`, `P̃₂ = D_r[W₂; I]D_r(K₂)⁻¹`.
fn scale_model(
    w1: &Array2<f64>,
    h1: &Array2<f64>,
    w2: &Array2<f64>,
    h2: &Array2<f64>,
) -> Option<ScaledModel> {
    let (top, r1) = w1.dim();
    let (r2, right) = h2.dim();
    let (m, n) = (top + r2, r1 + right);
    let b = DenseMatrix::nonnegative(block_matrix(w1, h1, w2, h2)).ok()?;
    let sc = sinkhorn_scale_default(&b).ok()?;
    if !sc.converged {
        return None;
    }
    let (dr, dc) = (&sc.row_factors, &sc.col_factors);
    let ms = sc.scaled.into_inner();

    let mut p1 = Array2::zeros((r1, n));
    for k in 0..r1 {
        p1[[k, k]] = 1.0;
        for j in 0..right {
            p1[[k, r1 + j]] = h1[[k, j]] * dc[r1 + j] / dc[k];
        }
    }
    let mut p2 = Array2::zeros((m, r2));
    for k in 0..r2 {
        for i in 0..top {
            p2[[i, k]] = dr[i] * w2[[i, k]] / dr[top + k];
        }
        p2[[top + k, k]] = 1.0;
    }
    let w = ndarray::concatenate(Axis(1), &[ms.slice(s![.., ..r1]), p2.view()]).ok()?;
    let h = ndarray::concatenate(Axis(0), &[p1.view(), ms.slice(s![top.., ..])]).ok()?;
    Some(ScaledModel { ms, w, h })
}

/// Rescales `noise` to `‖N‖_F = ε‖Ms‖_F`, adds, clamps at zero and permutes.
fn finish(
    model: ScaledModel,
    mut noise: Array2<f64>,
    eps: f64,
    r1: usize,
    r2: usize,
    rng: &mut ChaCha8Rng,
    seed: u64,
) -> Result<SyntheticInstance> {
    let (m, n) = model.ms.dim();
    let nn = frobenius_norm(noise.view());
    if eps == 0.0 || nn == 0.0 {
        noise.fill(0.0);
    } else {
        noise *= eps * frobenius_norm(model.ms.view()) / nn;
    }
    let noisy = (&model.ms + &noise).mapv(|v| v.max(0.0));

    let row_perm = Permutation::random(m, rng);
    let col_perm = Permutation::random(n, rng);
    let cols: Vec<usize> = (0..n).filter(|&j| col_perm[j] < r1).collect();
    let rows: Vec<usize> = (0..m).filter(|&i| row_perm[i] >= m - r2).collect();
    let sets = IndexSets::new(cols, rows)?;
    // truth factors follow the permuted frame; factor order stays planted
    let w = model.w.select(Axis(0), row_perm.as_slice());
    let h = model.h.select(Axis(1), col_perm.as_slice());

    Ok(SyntheticInstance {
        m: DenseMatrix::nonnegative(permute_array(noisy.view(), &row_perm, &col_perm))?,
        noiseless: DenseMatrix::nonnegative(permute_array(model.ms.view(), &row_perm, &col_perm))?,
        truth: GroundTruth { sets, w, h },
        noise_level: eps,
        row_perm,
        col_perm,
        seed,
    })
}

fn check_noise(eps: f64) -> Result<()> {
    if eps >= 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(GsError::InvalidArgument(format!(
            "noise level {eps} must be nonnegative"
        )))
    }
}

/// Random `(r1, r2)`-separable `m × n` matrix: `W₁`, `H₂` uniform, `H₁`, `W₂`
/// sparse-uniform, equilibrated, then Gaussian noise of relative Frobenius
/// size `eps`, clamping and random row/column permutations.
pub fn gen_fully_random(
    m: usize,
    n: usize,
    r1: usize,
    r2: usize,
    eps: f64,
    seed: u64,
) -> Result<SyntheticInstance> {
    check_noise(eps)?;
    if r1 + r2 == 0 || r1 + r2 > m.min(n) {
        return Err(GsError::InvalidArgument(format!(
            "ranks ({r1}, {r2}) need 1 <= r1 + r2 <= min(m, n) = {}",
            m.min(n)
        )));
    }
    let (top, right) = (m - r2, n - r1);
    for attempt in 0..MAX_ATTEMPTS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(attempt);
        let w1 = uniform(&mut rng, (top, r1));
        let h1 = sparse_uniform(&mut rng, (r1, right));
        let w2 = sparse_uniform(&mut rng, (top, r2));
        let h2 = uniform(&mut rng, (r2, right));
        let Some(model) = scale_model(&w1, &h1, &w2, &h2) else {
            continue;
        };
        let noise = Array2::from_shape_simple_fn((m, n), || rng.sample::<f64, _>(StandardNormal));
        return finish(model, noise, eps, r1, r2, &mut rng, seed);
    }
    Err(GsError::NotScalable(format!(
        "no scalable block matrix after {MAX_ATTEMPTS} attempts"
    )))
}

pub const MIDDLE_POINT_R1: usize = 10;
pub const MIDDLE_POINT_R2: usize = 12;

/// `k × C(k,2)` matrix whose columns are all two-element supports with entries ½.
fn pair_midpoints(k: usize) -> Array2<f64> {
    let pairs: Vec<(usize, usize)> = (0..k)
        .flat_map(|a| (a + 1..k).map(move |b| (a, b)))
        .collect();
    let mut out = Array2::zeros((k, pairs.len()));
    for (c, &(a, b)) in pairs.iter().enumerate() {
        out[[a, c]] = 0.5;
        out[[b, c]] = 0.5;
    }
    out
}

/// The 78 × 55, `(10, 12)`-separable middle-point instance. Interior columns
/// and rows are midpoints of pairs of basis elements; the noise moves the
/// interior block away from the basis centroids.
pub fn gen_middle_point(eps: f64, seed: u64) -> Result<SyntheticInstance> {
    check_noise(eps)?;
    let (r1, r2) = (MIDDLE_POINT_R1, MIDDLE_POINT_R2);
    let h1 = pair_midpoints(r1);
    let w2 = pair_midpoints(r2).reversed_axes();
    let (top, right) = (w2.nrows(), h1.ncols());
    let (m, n) = (top + r2, r1 + right);
    for attempt in 0..MAX_ATTEMPTS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(attempt);
        let w1 = uniform(&mut rng, (top, r1));
        let h2 = uniform(&mut rng, (r2, right));
        let Some(model) = scale_model(&w1, &h1, &w2, &h2) else {
            continue;
        };
        // centroids of the scaled basis columns and rows
        let ms = &model.ms;
        let w_bar: Array1<f64> = ms.slice(s![..top, ..r1]).mean_axis(Axis(1)).unwrap();
        let h_bar: Array1<f64> = ms.slice(s![top.., r1..]).mean_axis(Axis(0)).unwrap();
        let mut noise = Array2::zeros((m, n));
        let interior =
            Array2::from_shape_fn((top, right), |(i, j)| ms[[i, r1 + j]] - w_bar[i] - h_bar[j]);
        noise.slice_mut(s![..top, r1..]).assign(&interior);
        return finish(model, noise, eps, r1, r2, &mut rng, seed);
    }
    Err(GsError::NotScalable(format!(
        "no scalable block matrix after {MAX_ATTEMPTS} attempts"
    )))
}

/// The 5 × 5, `(2, 2)`-separable matrix built from
/// `W₁ = [[1,ε],[1,2],[1,3]]`, `H₁ = [[ε,2ε,3ε],[ε,1,2]]`, `H₂ = W₁ᵀ`,
/// `W₂ = H₁ᵀ`, together with the published 3-decimal equilibration of the
/// `ε = 0.001` instance (row and column sums 5).
pub fn example1_matrix(eps: f64) -> (DenseMatrix, DenseMatrix) {
    let w1 = ndarray::array![[1.0, eps], [1.0, 2.0], [1.0, 3.0]];
    let h1 = ndarray::array![[eps, 2.0 * eps, 3.0 * eps], [eps, 1.0, 2.0]];
    let h2 = w1.t().to_owned();
    let w2 = h1.t().to_owned();
    let m = DenseMatrix::new(block_matrix(&w1, &h1, &w2, &h2)).expect("finite entries");
    let reference = DenseMatrix::new(ndarray::array![
        [4.654, 0.028, 0.251, 0.034, 0.033],
        [0.212, 2.551, 0.034, 1.045, 1.157],
        [0.134, 2.421, 0.033, 1.157, 1.255],
        [0.0, 0.0, 4.654, 0.212, 0.134],
        [0.0, 0.0, 0.028, 2.551, 2.421],
    ])
    .expect("finite entries");
    (m, reference)
}

/// Planted sets of [`example1_matrix`]: columns {0, 1}, rows {3, 4}.
pub fn example1_truth() -> IndexSets {
    IndexSets::new(vec![0, 1], vec![3, 4]).expect("valid sets")
}

/// The 3 × n matrix whose columns are `e₁`, `e₂`, `(½,0,½)`, `(0,½,½)` and
/// `n − 4` distinct points `(x, 2(½−x)², 1−x−2(½−x)²)` with `0 < x < ½`.
/// It is `(2, 1)`-separable but not `(n−1, 0)`-separable.
pub fn curve_matrix(n: usize) -> Result<Array2<f64>> {
    if n < 4 {
        return Err(GsError::InvalidArgument(format!(
            "curve matrix needs n >= 4, got {n}"
        )));
    }
    let mut out = Array2::zeros((3, n));
    out.column_mut(0).assign(&ndarray::array![1.0, 0.0, 0.0]);
    out.column_mut(1).assign(&ndarray::array![0.0, 1.0, 0.0]);
    out.column_mut(2).assign(&ndarray::array![0.5, 0.0, 0.5]);
    out.column_mut(3).assign(&ndarray::array![0.0, 0.5, 0.5]);
    let extra = n - 4;
    for i in 0..extra {
        let x = 0.5 * (i + 1) as f64 / (extra + 1) as f64;
        let y = 2.0 * (0.5 - x) * (0.5 - x);
        out.column_mut(4 + i)
            .assign(&ndarray::array![x, y, 1.0 - x - y]);
    }
    Ok(out)
}

/// `(m+3) × (n+3)` matrix `[[0, M_n], [M_mᵀ, 0]]`: `(3, 3)`-separable but
/// neither `(n+2, 0)`- nor `(0, m+2)`-separable.
pub fn compression_fixture(m: usize, n: usize) -> Result<DenseMatrix> {
    let mn = curve_matrix(n)?;
    let mm = curve_matrix(m)?;
    let mut out = Array2::zeros((m + 3, n + 3));
    out.slice_mut(s![..3, 3..]).assign(&mn);
    out.slice_mut(s![3.., ..3]).assign(&mm.t());
    DenseMatrix::nonnegative(out)
}

/// Blocks of the non-unique construction; see [`non_unique_from_blocks`].
#[derive(Debug, Clone)]
pub struct NonUniqueBlocks {
    /// `(m−r₄) × r₃`
    pub m11: Array2<f64>,
    /// `(r₄−r₂) × (r₁−r₃)`
    pub m22: Array2<f64>,
    /// `r₂ × (n−r₁)`
    pub m33: Array2<f64>,
    /// `r₃ × (n−r₁)`
    pub x1: Array2<f64>,
    /// `(m−r₄) × r₂`
    pub y1: Array2<f64>,
    /// `(r₁−r₃) × (n−r₁)`
    pub x2: Array2<f64>,
    /// `(r₄−r₂) × r₂`
    pub y2: Array2<f64>,
}

/// ```text
/// [ M₁₁  0    M₁₁X₁ + Y₁M₃₃ ]
/// [ 0    M₂₂  M₂₂X₂ + Y₂M₃₃ ]
/// [ 0    0    M₃₃           ]
/// ```
/// which is both `(r₁, r₂)`-separable (first `r₁` columns, last `r₂` rows)
/// and `(r₃, r₄)`-separable (first `r₃` columns, last `r₄` rows).
pub fn non_unique_from_blocks(b: &NonUniqueBlocks) -> Result<DenseMatrix> {
    let (a, r3) = b.m11.dim();
    let (d, e) = b.m22.dim();
    let (r2, right) = b.m33.dim();
    let dims_ok = b.x1.dim() == (r3, right)
        && b.y1.dim() == (a, r2)
        && b.x2.dim() == (e, right)
        && b.y2.dim() == (d, r2);
    if !dims_ok {
        return Err(GsError::Dimension("inconsistent non-unique blocks".into()));
    }
    let (m, n) = (a + d + r2, r3 + e + right);
    let mut out = Array2::zeros((m, n));
    out.slice_mut(s![..a, ..r3]).assign(&b.m11);
    out.slice_mut(s![a..a + d, r3..r3 + e]).assign(&b.m22);
    out.slice_mut(s![a + d.., r3 + e..]).assign(&b.m33);
    out.slice_mut(s![..a, r3 + e..])
        .assign(&(b.m11.dot(&b.x1) + b.y1.dot(&b.m33)));
    out.slice_mut(s![a..a + d, r3 + e..])
        .assign(&(b.m22.dot(&b.x2) + b.y2.dot(&b.m33)));
    DenseMatrix::nonnegative(out)
}

/// Random-block instance of the non-unique construction with
/// `r1 > r3`, `r2 < r4`, `r1 + r2 = r3 + r4`.
pub fn non_unique_fixture(
    r1: usize,
    r2: usize,
    r3: usize,
    r4: usize,
    dims: (usize, usize),
    seed: u64,
) -> Result<DenseMatrix> {
    let (m, n) = dims;
    if !(r1 > r3 && r2 < r4 && r1 + r2 == r3 + r4 && r4 <= m && r1 <= n) {
        return Err(GsError::InvalidArgument(format!(
            "need r1 > r3, r2 < r4, r1 + r2 = r3 + r4 within {m}x{n}; got ({r1},{r2},{r3},{r4})"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (a, d, e, right) = (m - r4, r4 - r2, r1 - r3, n - r1);
    let blocks = NonUniqueBlocks {
        m11: uniform(&mut rng, (a, r3)),
        m22: uniform(&mut rng, (d, e)),
        m33: uniform(&mut rng, (r2, right)),
        x1: uniform(&mut rng, (r3, right)),
        y1: uniform(&mut rng, (a, r2)),
        x2: uniform(&mut rng, (e, right)),
        y2: uniform(&mut rng, (d, r2)),
    };
    non_unique_from_blocks(&blocks)
}

#[derive(Debug, Serialize, Deserialize)]
struct TruthDoc {
    cols: Vec<usize>,
    rows: Vec<usize>,
    cols_one_based: Vec<usize>,
    rows_one_based: Vec<usize>,
    seed: u64,
    noise_level: f64,
    shape: [usize; 2],
}

#[derive(Debug, Serialize, Deserialize)]
struct PermutationDoc {
    row_perm: Permutation,
    col_perm: Permutation,
}

/// Writes `matrix.csv`, `noiseless.csv`, `truth.json`, `truth_w.csv`,
/// `truth_h.csv` and `permutations.json` into `dir`.
pub fn write_instance(dir: &Path, inst: &SyntheticInstance) -> Result<()> {
    fs::create_dir_all(dir)?;
    io::write_matrix(&dir.join("matrix.csv"), inst.m.as_array())?;
    io::write_matrix(&dir.join("noiseless.csv"), inst.noiseless.as_array())?;
    io::write_matrix(&dir.join("truth_w.csv"), &inst.truth.w)?;
    io::write_matrix(&dir.join("truth_h.csv"), &inst.truth.h)?;
    let sets = &inst.truth.sets;
    let truth = TruthDoc {
        cols: sets.cols().to_vec(),
        rows: sets.rows().to_vec(),
        cols_one_based: sets.cols().iter().map(|c| c + 1).collect(),
        rows_one_based: sets.rows().iter().map(|r| r + 1).collect(),
        seed: inst.seed,
        noise_level: inst.noise_level,
        shape: [inst.m.rows(), inst.m.cols()],
    };
    fs::write(
        dir.join("truth.json"),
        serde_json::to_string_pretty(&truth)?,
    )?;
    let perms = PermutationDoc {
        row_perm: inst.row_perm.clone(),
        col_perm: inst.col_perm.clone(),
    };
    fs::write(
        dir.join("permutations.json"),
        serde_json::to_string_pretty(&perms)?,
    )?;
    Ok(())
}

/// Inverse of [`write_instance`].
pub fn read_instance(dir: &Path) -> Result<SyntheticInstance> {
    let truth: TruthDoc = serde_json::from_str(&fs::read_to_string(dir.join("truth.json"))?)?;
    let perms: PermutationDoc =
        serde_json::from_str(&fs::read_to_string(dir.join("permutations.json"))?)?;
    let m = io::read_matrix(&dir.join("matrix.csv"))?;
    let noiseless = io::read_matrix(&dir.join("noiseless.csv"))?;
    let w = io::read_matrix(&dir.join("truth_w.csv"))?.into_inner();
    let h = io::read_matrix(&dir.join("truth_h.csv"))?.into_inner();
    let sets = IndexSets::new(truth.cols, truth.rows)?;
    sets.validate_for(m.shape())?;
    Ok(SyntheticInstance {
        m,
        noiseless,
        truth: GroundTruth { sets, w, h },
        noise_level: truth.noise_level,
        row_perm: perms.row_perm,
        col_perm: perms.col_perm,
        seed: truth.seed,
    })
}

/// Reads the planted truth (sets and factors) of an instance directory.
pub fn read_truth(dir: &Path) -> Result<GroundTruth> {
    Ok(read_instance(dir)?.truth)
}

//! Seeded noise sweeps over synthetic instances, single-matrix runs and
//! plot-ready result tables.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datagen::{gen_fully_random, gen_middle_point, SyntheticInstance};
use crate::decomposition::{
    accuracy, assemble_factors, distance_to_ground_truth, fit_weights_default, GsDecomposition,
    IndexSets,
};
use crate::error::{GsError, Result};
use crate::fgm::{gsfgm_best_of_grid, gsfgm_solve, post_process_diagonal, FgmConfig};
use crate::matrix::{frobenius_norm, sinkhorn_scale_default, DenseMatrix};
use crate::nmf::nmf_ahals;
use crate::spa::{gspa, spa_c, spa_r, spa_star};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Gspa,
    Gsfgm,
    SpaStar,
    SpaC,
    SpaR,
    Nmf,
}

impl Algorithm {
    pub const ALL: [Algorithm; 6] = [
        Algorithm::Gspa,
        Algorithm::Gsfgm,
        Algorithm::SpaStar,
        Algorithm::SpaC,
        Algorithm::SpaR,
        Algorithm::Nmf,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Gspa => "gspa",
            Algorithm::Gsfgm => "gsfgm",
            Algorithm::SpaStar => "spa-star",
            Algorithm::SpaC => "spa-c",
            Algorithm::SpaR => "spa-r",
            Algorithm::Nmf => "nmf",
        }
    }

    /// Whether the algorithm selects index sets (everything except NMF).
    pub fn selects_indices(self) -> bool {
        self != Algorithm::Nmf
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = GsError;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| GsError::InvalidArgument(format!("unknown algorithm '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Generator {
    FullyRandom,
    MiddlePoint,
}

impl FromStr for Generator {
    type Err = GsError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fully-random" => Ok(Generator::FullyRandom),
            "middle-point" => Ok(Generator::MiddlePoint),
            _ => Err(GsError::InvalidArgument(format!("unknown generator '{s}'"))),
        }
    }
}

/// Solver settings shared by the sweep and single runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverParams {
    pub lambda_tilde: f64,
    pub delta: f64,
    pub max_iter: usize,
    pub nmf_iters: usize,
}

impl Default for SolverParams {
    fn default() -> Self {
        let fgm = FgmConfig::default();
        Self {
            lambda_tilde: fgm.lambda_tilde,
            delta: fgm.delta,
            max_iter: fgm.max_iter,
            nmf_iters: 500,
        }
    }
}

impl SolverParams {
    pub fn fgm_config(&self) -> FgmConfig {
        FgmConfig {
            lambda_tilde: self.lambda_tilde,
            delta: self.delta,
            max_iter: self.max_iter,
            ..FgmConfig::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub generator: Generator,
    /// Ignored by the middle-point generator, whose shape is fixed.
    pub m: usize,
    pub n: usize,
    pub r1: usize,
    pub r2: usize,
    pub noise_levels: Vec<f64>,
    pub trials: usize,
    pub algorithms: Vec<Algorithm>,
    pub base_seed: u64,
    pub solver: SolverParams,
}

/// `count` values log-spaced in `[lo, hi]`.
pub fn log_space(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.log10(), hi.log10());
            (0..count)
                .map(|i| 10f64.powf(a + (b - a) * i as f64 / (count - 1) as f64))
                .collect()
        }
    }
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            generator: Generator::FullyRandom,
            m: 60,
            n: 60,
            r1: 10,
            r2: 10,
            noise_levels: log_space(1e-3, 1.0, 20),
            trials: 25,
            algorithms: Algorithm::ALL.to_vec(),
            base_seed: 0,
            solver: SolverParams::default(),
        }
    }
}

impl SweepConfig {
    /// Middle-point defaults with fixed shape `78 × 55` and ranks `(10, 12)`.
    pub fn middle_point() -> Self {
        Self {
            generator: Generator::MiddlePoint,
            m: 78,
            n: 55,
            r1: crate::datagen::MIDDLE_POINT_R1,
            r2: crate::datagen::MIDDLE_POINT_R2,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(GsError::InvalidArgument("trials must be at least 1".into()));
        }
        if self.algorithms.is_empty() {
            return Err(GsError::InvalidArgument("no algorithms selected".into()));
        }
        if self.noise_levels.is_empty() {
            return Err(GsError::InvalidArgument("empty noise grid".into()));
        }
        if self
            .noise_levels
            .iter()
            .any(|&e| !(e >= 0.0 && e.is_finite()))
        {
            return Err(GsError::InvalidArgument(
                "noise levels must be nonnegative".into(),
            ));
        }
        if self.noise_levels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(GsError::InvalidArgument(
                "noise levels must be ascending".into(),
            ));
        }
        Ok(())
    }

    fn instance(&self, eps: f64, seed: u64) -> Result<SyntheticInstance> {
        match self.generator {
            Generator::FullyRandom => gen_fully_random(self.m, self.n, self.r1, self.r2, eps, seed),
            Generator::MiddlePoint => gen_middle_point(eps, seed),
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Per-trial seed: `s(s(s(base) ^ eps_index) ^ trial)` with `s` the
/// SplitMix64 finalizer.
pub fn trial_seed(base: u64, eps_index: usize, trial: usize) -> u64 {
    splitmix64(splitmix64(splitmix64(base) ^ eps_index as u64) ^ trial as u64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub algorithm: Algorithm,
    pub eps_index: usize,
    pub noise_level: f64,
    pub trial: usize,
    pub seed: u64,
    /// Absent for NMF, which selects no indices.
    pub accuracy: Option<f64>,
    pub relative_error: Option<f64>,
    pub distance: Option<f64>,
    pub r1_found: Option<usize>,
    pub r2_found: Option<usize>,
    /// Algorithm call only; excludes generation and metrics.
    #[serde(skip)]
    pub wall_time_seconds: f64,
    pub error: Option<String>,
}

impl ExperimentRecord {
    pub fn failed(&self) -> bool {
        self.error.is_some()
    }
}

struct Scored {
    accuracy: Option<f64>,
    relative_error: f64,
    distance: f64,
    found: Option<(usize, usize)>,
    seconds: f64,
}

/// Index sets for `algo` at ranks `(r1, r2)` on an already scaled matrix.
pub fn select_indices(
    algo: Algorithm,
    m: &DenseMatrix,
    r1: usize,
    r2: usize,
    fgm: &FgmConfig,
) -> Result<IndexSets> {
    let r = r1 + r2;
    match algo {
        Algorithm::Gspa => Ok(gspa(m.view(), r)?.0),
        Algorithm::Gsfgm => {
            let sol = gsfgm_solve(m, r1, r2, fgm, None)?;
            post_process_diagonal(sol.x.view(), sol.y.view(), r1, r2)
        }
        Algorithm::SpaStar => spa_star(m, r1, r2),
        Algorithm::SpaC => spa_c(m, r),
        Algorithm::SpaR => spa_r(m, r),
        Algorithm::Nmf => Err(GsError::InvalidArgument("NMF selects no indices".into())),
    }
}

fn score(
    algo: Algorithm,
    inst: &SyntheticInstance,
    solver: &SolverParams,
    fgm: &FgmConfig,
    seed: u64,
) -> Result<Scored> {
    let (r1, r2) = inst.ranks();
    let truth = &inst.truth;
    if algo == Algorithm::Nmf {
        let t0 = Instant::now();
        let res = nmf_ahals(&inst.m, r1 + r2, solver.nmf_iters, seed)?;
        let seconds = t0.elapsed().as_secs_f64();
        let rel = frobenius_norm((inst.m.as_array() - &res.w.dot(&res.h)).view())
            / inst.m.frobenius_norm();
        return Ok(Scored {
            accuracy: None,
            relative_error: rel,
            distance: distance_to_ground_truth(res.w.view(), res.h.view(), truth)?,
            found: None,
            seconds,
        });
    }
    let t0 = Instant::now();
    let sets = select_indices(algo, &inst.m, r1, r2, fgm)?;
    let seconds = t0.elapsed().as_secs_f64();
    let dec = fit_weights_default(&inst.m, &sets)?;
    let (w, h) = assemble_factors(&inst.m, &dec);
    // fewer than r indices (early stop) leaves nothing to match factors against
    let distance = if w.ncols() == truth.rank() {
        distance_to_ground_truth(w.view(), h.view(), truth)?
    } else {
        f64::NAN
    };
    Ok(Scored {
        accuracy: Some(accuracy(&sets, &truth.sets)?),
        relative_error: dec.relative_error,
        distance,
        found: Some(sets.sizes()),
        seconds,
    })
}

fn run_trial(cfg: &SweepConfig, eps_index: usize, trial: usize) -> Vec<ExperimentRecord> {
    let eps = cfg.noise_levels[eps_index];
    let seed = trial_seed(cfg.base_seed, eps_index, trial);
    let fgm = cfg.solver.fgm_config();
    let inst = cfg.instance(eps, seed);
    cfg.algorithms
        .iter()
        .map(|&algo| {
            let mut rec = ExperimentRecord {
                algorithm: algo,
                eps_index,
                noise_level: eps,
                trial,
                seed,
                accuracy: None,
                relative_error: None,
                distance: None,
                r1_found: None,
                r2_found: None,
                wall_time_seconds: 0.0,
                error: None,
            };
            match inst
                .as_ref()
                .map_err(|e| e.to_string())
                .and_then(|i| score(algo, i, &cfg.solver, &fgm, seed).map_err(|e| e.to_string()))
            {
                Ok(s) => {
                    rec.accuracy = s.accuracy;
                    rec.relative_error = Some(s.relative_error);
                    rec.distance = Some(s.distance).filter(|d| d.is_finite());
                    rec.r1_found = s.found.map(|f| f.0);
                    rec.r2_found = s.found.map(|f| f.1);
                    rec.wall_time_seconds = s.seconds;
                }
                Err(e) => rec.error = Some(e),
            }
            rec
        })
        .collect()
}

/// Runs every `(ε, trial)` pair, in parallel on `workers` threads (rayon's
/// default when `None`). Records come back ordered by `(ε, trial, algorithm)`
/// regardless of scheduling; failures are recorded and the sweep continues.
pub fn run_sweep(cfg: &SweepConfig, workers: Option<usize>) -> Result<Vec<ExperimentRecord>> {
    cfg.validate()?;
    let jobs: Vec<(usize, usize)> = (0..cfg.noise_levels.len())
        .flat_map(|e| (0..cfg.trials).map(move |t| (e, t)))
        .collect();
    let run = || -> Vec<ExperimentRecord> {
        jobs.par_iter()
            .map(|&(e, t)| run_trial(cfg, e, t))
            .collect::<Vec<_>>()
            .into_iter()
            .flatten()
            .collect()
    };
    match workers {
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w.max(1))
                .build()
                .map_err(|e| GsError::InvalidArgument(e.to_string()))?;
            Ok(pool.install(run))
        }
        None => Ok(run()),
    }
}

/// Means per `(algorithm, ε)` over successful trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub algorithm: Algorithm,
    pub noise_level: f64,
    pub accuracy: Option<f64>,
    pub relative_error: Option<f64>,
    pub distance: Option<f64>,
    pub mean_wall_time_seconds: f64,
    pub trials: usize,
    pub failures: usize,
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, count) = values.fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    (count > 0).then(|| sum / count as f64)
}

/// Aggregates ordered by ε, then by first appearance of the algorithm.
pub fn aggregate(records: &[ExperimentRecord]) -> Vec<AggregateRow> {
    let mut algo_order: Vec<Algorithm> = Vec::new();
    let mut groups: BTreeMap<(usize, usize), Vec<&ExperimentRecord>> = BTreeMap::new();
    for r in records {
        let pos = match algo_order.iter().position(|&a| a == r.algorithm) {
            Some(p) => p,
            None => {
                algo_order.push(r.algorithm);
                algo_order.len() - 1
            }
        };
        groups.entry((r.eps_index, pos)).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|((_, pos), recs)| {
            let ok: Vec<_> = recs.iter().filter(|r| !r.failed()).collect();
            AggregateRow {
                algorithm: algo_order[pos],
                noise_level: recs[0].noise_level,
                accuracy: mean(ok.iter().filter_map(|r| r.accuracy)),
                relative_error: mean(ok.iter().filter_map(|r| r.relative_error)),
                distance: mean(ok.iter().filter_map(|r| r.distance)),
                mean_wall_time_seconds: mean(ok.iter().map(|r| r.wall_time_seconds)).unwrap_or(0.0),
                trials: recs.len(),
                failures: recs.len() - ok.len(),
            }
        })
        .collect()
}

fn fmt_cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Writes `accuracy.csv`, `relative_error.csv`, `distance.csv` (rows = ε,
/// columns = algorithms, cells = means), `records.csv`, `timings.json` and a
/// `manifest.json` echoing `cfg`. Everything except `timings.json` is
/// independent of wall-clock time.
pub fn emit_figure_data(
    records: &[ExperimentRecord],
    cfg: Option<&SweepConfig>,
    out: &Path,
) -> Result<()> {
    if records.is_empty() {
        return Err(GsError::InvalidArgument("no records to emit".into()));
    }
    fs::create_dir_all(out)?;
    let rows = aggregate(records);
    let mut algos: Vec<Algorithm> = Vec::new();
    let mut levels: Vec<(usize, f64)> = Vec::new();
    for r in records {
        if !algos.contains(&r.algorithm) {
            algos.push(r.algorithm);
        }
        if !levels.iter().any(|&(i, _)| i == r.eps_index) {
            levels.push((r.eps_index, r.noise_level));
        }
    }
    levels.sort_by_key(|&(i, _)| i);

    type Pick = fn(&AggregateRow) -> Option<f64>;
    let metrics: [(&str, Pick); 3] = [
        ("accuracy.csv", |r| r.accuracy),
        ("relative_error.csv", |r| r.relative_error),
        ("distance.csv", |r| r.distance),
    ];
    for (file, pick) in metrics {
        let mut w = csv::Writer::from_path(out.join(file))?;
        let mut header = vec!["epsilon".to_string()];
        header.extend(algos.iter().map(|a| a.name().to_string()));
        w.write_record(&header)?;
        for &(_, eps) in &levels {
            let mut line = vec![eps.to_string()];
            for &a in &algos {
                let cell = rows
                    .iter()
                    .find(|r| r.algorithm == a && r.noise_level == eps)
                    .and_then(pick);
                line.push(fmt_cell(cell));
            }
            w.write_record(&line)?;
        }
        w.flush()?;
    }

    let mut w = csv::Writer::from_path(out.join("records.csv"))?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;

    let timings: Vec<serde_json::Value> = rows
        .iter()
        .map(|r| {
            serde_json::json!({
                "algorithm": r.algorithm,
                "noise_level": r.noise_level,
                "mean_wall_time_seconds": r.mean_wall_time_seconds,
            })
        })
        .collect();
    fs::write(
        out.join("timings.json"),
        serde_json::to_string_pretty(&timings)?,
    )?;

    let manifest = serde_json::json!({
        "config": cfg,
        "records": records.len(),
        "failures": records.iter().filter(|r| r.failed()).count(),
        "files": ["accuracy.csv", "relative_error.csv", "distance.csv", "records.csv"],
    });
    fs::write(
        out.join("manifest.json"),
        serde_json::to_string_pretty(&manifest)?,
    )?;
    Ok(())
}

/// Requested ranks: a total `r` or a split `(r1, r2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RankSpec {
    Total(usize),
    Split(usize, usize),
}

impl RankSpec {
    pub fn total(self) -> usize {
        match self {
            RankSpec::Total(r) => r,
            RankSpec::Split(a, b) => a + b,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub scale: bool,
    pub solver: SolverParams,
    pub seed: u64,
    /// For GS-FGM: try every λ̃ here and keep the best fit instead of
    /// `solver.lambda_tilde`.
    pub lambda_grid: Option<Vec<f64>>,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            scale: true,
            solver: SolverParams::default(),
            seed: 0,
            lambda_grid: None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub algorithm: Algorithm,
    /// 0-based.
    pub cols: Vec<usize>,
    pub rows: Vec<usize>,
    pub cols_one_based: Vec<usize>,
    pub rows_one_based: Vec<usize>,
    pub relative_error: f64,
    pub wall_time_seconds: f64,
    pub scaled: bool,
}

/// Scales `m` (unless disabled), runs `algo`, and fits the weights of the
/// selected sets on the unscaled input. NMF returns no decomposition.
pub fn run_single(
    m: &DenseMatrix,
    algo: Algorithm,
    ranks: RankSpec,
    opts: &RunOptions,
) -> Result<(Option<GsDecomposition>, RunReport)> {
    let work = if opts.scale {
        let sc = sinkhorn_scale_default(m)?;
        if !sc.converged {
            return Err(GsError::NotScalable(format!(
                "equilibration did not converge in {} iterations",
                sc.iterations
            )));
        }
        sc.scaled
    } else {
        m.clone()
    };
    let t0 = Instant::now();
    if algo == Algorithm::Nmf {
        let res = nmf_ahals(&work, ranks.total(), opts.solver.nmf_iters, opts.seed)?;
        let seconds = t0.elapsed().as_secs_f64();
        return Ok((
            None,
            RunReport {
                algorithm: algo,
                cols: Vec::new(),
                rows: Vec::new(),
                cols_one_based: Vec::new(),
                rows_one_based: Vec::new(),
                relative_error: res.relative_error(),
                wall_time_seconds: seconds,
                scaled: opts.scale,
            },
        ));
    }
    let (r1, r2) = match (algo, ranks) {
        (Algorithm::Gsfgm | Algorithm::SpaStar, RankSpec::Total(_)) => {
            return Err(GsError::InvalidArgument(format!(
                "{algo} needs --r1 and --r2"
            )))
        }
        (_, RankSpec::Split(a, b)) => (a, b),
        (_, RankSpec::Total(r)) => (r, 0),
    };
    let fgm = opts.solver.fgm_config();
    let sets = match (&opts.lambda_grid, algo) {
        (Some(grid), Algorithm::Gsfgm) => gsfgm_best_of_grid(&work, r1, r2, &fgm, grid)?.0,
        _ => select_indices(algo, &work, r1, r2, &fgm)?,
    };
    let seconds = t0.elapsed().as_secs_f64();
    let dec = fit_weights_default(m, &sets)?;
    let report = RunReport {
        algorithm: algo,
        cols: sets.cols().to_vec(),
        rows: sets.rows().to_vec(),
        cols_one_based: sets.cols().iter().map(|c| c + 1).collect(),
        rows_one_based: sets.rows().iter().map(|r| r + 1).collect(),
        relative_error: dec.relative_error,
        wall_time_seconds: seconds,
        scaled: opts.scale,
    };
    Ok((Some(dec), report))
}

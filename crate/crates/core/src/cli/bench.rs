//! Restart protocol, (alpha, lambda) grid search and single fits.

use std::path::PathBuf;
use std::time::Instant;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{fcrm_fit, fkpc_fit, kpc_fit, RegressionModel};
use crate::datagen::{self, SyntheticSpec};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::metrics::{NmiNorm, Scores};
use crate::rflkpc;
use crate::types::{minmax_normalize, Dataset, HyperParams, PlaneModel};

use super::csvio::{load_csv, ColumnRef};
use super::report::{csv_line, fmt_f64, Report, REPORT_VERSION};

/// Environment variable holding the default worker count.
pub const THREADS_ENV: &str = "PLANECLUST_THREADS";

pub const DEFAULT_ALPHA_GRID: [f64; 11] = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0];
pub const DEFAULT_LAMBDA_GRID: [f64; 5] = [1e-4, 1e-3, 1e-2, 1e-1, 1.0];
/// Wider lambda sweep used for sensitivity plots.
pub const SENSITIVITY_LAMBDA_GRID: [f64; 9] = [1e-4, 1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3, 1e4];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Rflkpc,
    Kpc,
    Fkpc,
    Fcrm,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Rflkpc, Method::Kpc, Method::Fkpc, Method::Fcrm];

    pub fn name(self) -> &'static str {
        match self {
            Method::Rflkpc => "rflkpc",
            Method::Kpc => "kpc",
            Method::Fkpc => "fkpc",
            Method::Fcrm => "fcrm",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::invalid(format!("unknown method {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum DataSource {
    Csv {
        path: PathBuf,
        has_header: bool,
        label_column: Option<ColumnRef>,
    },
    Synthetic(SyntheticSpec),
}

impl DataSource {
    pub fn load(&self) -> Result<Dataset> {
        match self {
            DataSource::Csv {
                path,
                has_header,
                label_column,
            } => load_csv(path, *has_header, label_column.as_ref()),
            DataSource::Synthetic(spec) => datagen::generate(spec),
        }
    }

    /// Short name used in reports.
    pub fn describe(&self) -> String {
        match self {
            DataSource::Csv { path, .. } => path.display().to_string(),
            DataSource::Synthetic(spec) => format!("{}@{}", spec.name(), spec.seed),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Selection {
    /// Highest mean ACC; needs labels.
    #[default]
    BestMetric,
    /// Lowest mean final objective.
    BestObjective,
}

impl std::str::FromStr for Selection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "best_metric" | "metric" => Ok(Selection::BestMetric),
            "best_objective" | "objective" => Ok(Selection::BestObjective),
            other => Err(Error::invalid(format!("unknown selection {other:?}"))),
        }
    }
}

/// Everything needed to reproduce one experiment.
///
/// `params.seed` is ignored; restart `r` uses [`restart_seed`]`(seed, r)`.
/// KPC and FkPC read `max_outer` as their iteration cap and FkPC/FCRM read
/// `eta` as their membership tolerance.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub method: Method,
    pub source: DataSource,
    pub params: HyperParams,
    pub alpha_grid: Vec<f64>,
    pub lambda_grid: Vec<f64>,
    pub restarts: usize,
    pub normalize: bool,
    /// FCRM response column; defaults to the last feature.
    pub response_column: Option<ColumnRef>,
    /// Score outliers (label -1) as their own class instead of dropping them.
    pub score_outliers: bool,
    pub nmi_norm: NmiNorm,
    /// Worker threads; `None` reads [`THREADS_ENV`], then uses all cores.
    pub threads: Option<usize>,
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn new(method: Method, source: DataSource, k: usize) -> Self {
        ExperimentConfig {
            method,
            source,
            params: HyperParams::with_k(k),
            alpha_grid: DEFAULT_ALPHA_GRID.to_vec(),
            lambda_grid: DEFAULT_LAMBDA_GRID.to_vec(),
            restarts: 100,
            normalize: false,
            response_column: None,
            score_outliers: false,
            nmi_norm: NmiNorm::default(),
            threads: None,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 {
            return Err(Error::invalid("restarts must be at least 1"));
        }
        if self.alpha_grid.is_empty() || self.lambda_grid.is_empty() {
            return Err(Error::invalid("grids must be nonempty"));
        }
        if self.threads == Some(0) {
            return Err(Error::invalid("threads must be at least 1"));
        }
        self.params.validate()
    }

    fn prepare(&self) -> Result<Dataset> {
        self.validate()?;
        let data = self.source.load()?;
        if self.normalize {
            minmax_normalize(&data)
        } else {
            Ok(data)
        }
    }
}

/// Seed for restart `r`: first output of the ChaCha8 stream `r` keyed by `seed`.
pub fn restart_seed(seed: u64, r: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(r as u64);
    rng.next_u64()
}

fn resolve_threads(threads: Option<usize>) -> Result<Option<usize>> {
    if let Some(t) = threads {
        return Ok(Some(t));
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) if !v.trim().is_empty() => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&t| t > 0)
            .map(Some)
            .ok_or_else(|| {
                Error::invalid(format!("{THREADS_ENV}={v:?} is not a positive integer"))
            }),
        _ => Ok(None),
    }
}

fn in_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = resolve_threads(threads)? {
        builder = builder.num_threads(t);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// Splits `data` into regressors and the response column.
pub fn split_response(data: &Dataset, column: Option<&ColumnRef>) -> Result<(Matrix, Vec<f64>)> {
    let d = data.dim();
    if d < 2 {
        return Err(Error::invalid(
            "FCRM needs at least one regressor besides the response",
        ));
    }
    let col = match column {
        Some(c) => c.resolve(data.feature_names(), d)?,
        None => d - 1,
    };
    let mut x = Vec::with_capacity(data.len() * (d - 1));
    let mut y = Vec::with_capacity(data.len());
    for i in 0..data.len() {
        for (j, &v) in data.point(i).iter().enumerate() {
            if j == col {
                y.push(v);
            } else {
                x.push(v);
            }
        }
    }
    Ok((Matrix::from_vec(data.len(), d - 1, x)?, y))
}

struct Outcome {
    labels: Vec<usize>,
    trace: Vec<f64>,
    iterations: usize,
    converged: bool,
    reseeds: usize,
    model: Option<PlaneModel>,
    regression: Option<RegressionModel>,
}

fn run_method(config: &ExperimentConfig, data: &Dataset, params: &HyperParams) -> Result<Outcome> {
    let p = params;
    Ok(match config.method {
        Method::Rflkpc => {
            let r = rflkpc::fit(data, p, None)?;
            Outcome {
                labels: r.hard_labels,
                trace: r.objective_trace,
                iterations: r.outer_iters,
                converged: r.converged,
                reseeds: r.reseeds,
                model: Some(r.model),
                regression: None,
            }
        }
        Method::Kpc | Method::Fkpc => {
            let r = if config.method == Method::Kpc {
                kpc_fit(data, p.k, p.seed, p.max_outer)?
            } else {
                fkpc_fit(data, p.k, p.m, p.seed, p.eta, p.max_outer)?
            };
            Outcome {
                labels: r.hard_labels,
                trace: r.objective_trace,
                iterations: r.outer_iters,
                converged: r.converged,
                reseeds: r.reseeds,
                model: Some(r.model),
                regression: None,
            }
        }
        Method::Fcrm => {
            let (x, y) = split_response(data, config.response_column.as_ref())?;
            let r = fcrm_fit(&x, &y, p.k, p.m, p.seed, p.eta, p.max_outer)?;
            Outcome {
                labels: r.hard_labels,
                trace: r.objective_trace,
                iterations: r.iterations,
                converged: r.converged,
                reseeds: 0,
                model: None,
                regression: Some(r.model),
            }
        }
    })
}

/// Scores `pred` against the dataset labels, or `None` without labels.
pub fn score(
    data: &Dataset,
    pred: &[usize],
    score_outliers: bool,
    norm: NmiNorm,
) -> Result<Option<Scores>> {
    let Some(truth) = data.labels() else {
        return Ok(None);
    };
    let (t, p): (Vec<i64>, Vec<usize>) = truth
        .iter()
        .zip(pred)
        .filter(|(l, _)| score_outliers || **l >= 0)
        .map(|(&l, &c)| (l, c))
        .unzip();
    if t.is_empty() {
        return Ok(None);
    }
    Scores::compute(&t, &p, norm).map(Some)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub restart: usize,
    pub seed: u64,
    pub scores: Option<Scores>,
    pub final_objective: f64,
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub reseeds: usize,
    pub wall_time: f64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailureRecord {
    pub restart: usize,
    pub seed: u64,
    pub error: String,
}

/// Mean and sample standard deviation (`n - 1` denominator, 0 for one value).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub mean: f64,
    pub std: f64,
}

impl Aggregate {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() < 2 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        };
        Some(Aggregate { mean, std })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreSummary {
    pub acc: Aggregate,
    pub nmi: Aggregate,
    pub ari: Aggregate,
    pub purity: Aggregate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub version: u32,
    pub method: Method,
    pub dataset: String,
    pub n: usize,
    pub dim: usize,
    pub params: HyperParams,
    pub restarts: usize,
    pub seed: u64,
    pub normalize: bool,
    pub score_outliers: bool,
    pub nmi_norm: NmiNorm,
    pub runs: Vec<RunRecord>,
    pub failures: Vec<FailureRecord>,
    pub n_failed: usize,
    pub scores: Option<ScoreSummary>,
    pub objective: Option<Aggregate>,
    pub total_time: f64,
}

impl BenchmarkReport {
    /// Zeroes every timing field so reports can be compared byte for byte.
    pub fn strip_timing(&mut self) {
        self.total_time = 0.0;
        self.runs.iter_mut().for_each(|r| r.wall_time = 0.0);
    }

    fn summarize(runs: &[RunRecord]) -> (Option<ScoreSummary>, Option<Aggregate>) {
        let objective = Aggregate::of(&runs.iter().map(|r| r.final_objective).collect::<Vec<_>>());
        let scored: Vec<Scores> = runs.iter().filter_map(|r| r.scores).collect();
        if scored.is_empty() || scored.len() != runs.len() {
            return (None, objective);
        }
        let agg = |f: fn(&Scores) -> f64| {
            Aggregate::of(&scored.iter().map(f).collect::<Vec<_>>()).expect("nonempty")
        };
        let summary = ScoreSummary {
            acc: agg(|s| s.acc),
            nmi: agg(|s| s.nmi),
            ari: agg(|s| s.ari),
            purity: agg(|s| s.purity),
        };
        (Some(summary), objective)
    }
}

impl Report for BenchmarkReport {
    /// One row per (restart, metric); the final objective is reported as
    /// metric `objective`.
    fn to_csv(&self) -> Result<String> {
        if self.runs.is_empty() {
            return Err(Error::invalid(
                "benchmark report has no successful restarts",
            ));
        }
        let mut out = csv_line(
            &["method", "dataset", "restart", "seed", "metric", "value"].map(String::from),
        );
        for run in &self.runs {
            let mut row = |metric: &str, value: f64| {
                out.push_str(&csv_line(&[
                    self.method.name().to_string(),
                    self.dataset.clone(),
                    run.restart.to_string(),
                    run.seed.to_string(),
                    metric.to_string(),
                    fmt_f64(value),
                ]))
            };
            if let Some(s) = run.scores {
                for m in crate::metrics::Metric::ALL {
                    row(m.name(), s.get(m));
                }
            }
            row("objective", run.final_objective);
        }
        Ok(out)
    }
}

fn benchmark_on(config: &ExperimentConfig, data: &Dataset) -> Result<BenchmarkReport> {
    let start = Instant::now();
    let attempts: Vec<std::result::Result<RunRecord, FailureRecord>> =
        in_pool(config.threads, || {
            (0..config.restarts)
                .into_par_iter()
                .map(|r| {
                    let seed = restart_seed(config.seed, r);
                    let fail = |e: Error| FailureRecord {
                        restart: r,
                        seed,
                        error: e.to_string(),
                    };
                    let t = Instant::now();
                    let params = HyperParams {
                        seed,
                        ..config.params.clone()
                    };
                    let out = run_method(config, data, &params).map_err(fail)?;
                    let scores = score(data, &out.labels, config.score_outliers, config.nmi_norm)
                        .map_err(fail)?;
                    Ok(RunRecord {
                        restart: r,
                        seed,
                        scores,
                        final_objective: out.trace.last().copied().unwrap_or(f64::NAN),
                        objective_trace: out.trace,
                        iterations: out.iterations,
                        converged: out.converged,
                        reseeds: out.reseeds,
                        wall_time: t.elapsed().as_secs_f64(),
                    })
                })
                .collect()
        })?;
    let mut runs = Vec::new();
    let mut failures = Vec::new();
    for a in attempts {
        match a {
            Ok(r) => runs.push(r),
            Err(f) => failures.push(f),
        }
    }
    let (scores, objective) = BenchmarkReport::summarize(&runs);
    Ok(BenchmarkReport {
        version: REPORT_VERSION,
        method: config.method,
        dataset: config.source.describe(),
        n: data.len(),
        dim: data.dim(),
        params: HyperParams {
            seed: config.seed,
            ..config.params.clone()
        },
        restarts: config.restarts,
        seed: config.seed,
        normalize: config.normalize,
        score_outliers: config.score_outliers,
        nmi_norm: config.nmi_norm,
        n_failed: failures.len(),
        runs,
        failures,
        scores,
        objective,
        total_time: start.elapsed().as_secs_f64(),
    })
}

/// Runs `config.restarts` seeded fits and aggregates their scores. Failed
/// restarts are recorded and left out of the aggregates.
pub fn run_benchmark(config: &ExperimentConfig) -> Result<BenchmarkReport> {
    let data = config.prepare()?;
    benchmark_on(config, &data)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub alpha: f64,
    pub lambda: f64,
    pub acc: Option<Aggregate>,
    pub objective: Option<Aggregate>,
    pub n_failed: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridReport {
    pub version: u32,
    pub method: Method,
    pub dataset: String,
    pub selection: Selection,
    pub alpha_grid: Vec<f64>,
    pub lambda_grid: Vec<f64>,
    pub restarts: usize,
    pub seed: u64,
    /// Alpha-major: cell `i * |lambda grid| + j` holds `(alpha_i, lambda_j)`.
    pub cells: Vec<GridCell>,
    pub best_alpha: f64,
    pub best_lambda: f64,
    pub best_index: usize,
    pub total_time: f64,
}

impl GridReport {
    pub fn strip_timing(&mut self) {
        self.total_time = 0.0;
    }

    pub fn best(&self) -> &GridCell {
        &self.cells[self.best_index]
    }
}

impl Report for GridReport {
    fn to_csv(&self) -> Result<String> {
        if self.cells.is_empty() {
            return Err(Error::invalid("grid report has no cells"));
        }
        let header = [
            "alpha",
            "lambda",
            "mean_acc",
            "std_acc",
            "mean_objective",
            "std_objective",
            "n_failed",
        ];
        let mut out = csv_line(&header.map(String::from));
        let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
        for c in &self.cells {
            out.push_str(&csv_line(&[
                fmt_f64(c.alpha),
                fmt_f64(c.lambda),
                opt(c.acc.map(|a| a.mean)),
                opt(c.acc.map(|a| a.std)),
                opt(c.objective.map(|a| a.mean)),
                opt(c.objective.map(|a| a.std)),
                c.n_failed.to_string(),
            ]));
        }
        Ok(out)
    }
}

/// Evaluates every `(alpha, lambda)` cell with the restart protocol and
/// selects one. Ties go to the smaller lambda, then the smaller alpha.
pub fn grid_search(config: &ExperimentConfig, selection: Selection) -> Result<GridReport> {
    let start = Instant::now();
    if config.method != Method::Rflkpc {
        return Err(Error::invalid(
            "grid search tunes alpha and lambda, which only rflkpc has",
        ));
    }
    let data = config.prepare()?;
    if selection == Selection::BestMetric && data.labels().is_none() {
        return Err(Error::invalid("best_metric selection needs labels"));
    }
    let mut cells = Vec::with_capacity(config.alpha_grid.len() * config.lambda_grid.len());
    for &alpha in &config.alpha_grid {
        for &lambda in &config.lambda_grid {
            let mut cfg = config.clone();
            cfg.params.alpha = alpha;
            cfg.params.lambda = lambda;
            cfg.params.validate()?;
            let rep = benchmark_on(&cfg, &data)?;
            cells.push(GridCell {
                alpha,
                lambda,
                acc: rep.scores.map(|s| s.acc),
                objective: rep.objective,
                n_failed: rep.n_failed,
            });
        }
    }

    // larger is better for ACC; negate objectives so one comparison serves both
    let key = |c: &GridCell| match selection {
        Selection::BestMetric => c.acc.map(|a| a.mean),
        Selection::BestObjective => c.objective.map(|a| -a.mean),
    };
    let mut best: Option<usize> = None;
    for (i, c) in cells.iter().enumerate() {
        let Some(v) = key(c).filter(|v| !v.is_nan()) else {
            continue;
        };
        let better = match best {
            None => true,
            Some(b) => {
                let (bc, bv) = (&cells[b], key(&cells[b]).expect("scored"));
                v > bv || (v == bv && (c.lambda, c.alpha) < (bc.lambda, bc.alpha))
            }
        };
        if better {
            best = Some(i);
        }
    }
    let best_index = best.ok_or_else(|| Error::invalid("every grid cell failed"))?;
    Ok(GridReport {
        version: REPORT_VERSION,
        method: config.method,
        dataset: config.source.describe(),
        selection,
        alpha_grid: config.alpha_grid.clone(),
        lambda_grid: config.lambda_grid.clone(),
        restarts: config.restarts,
        seed: config.seed,
        best_alpha: cells[best_index].alpha,
        best_lambda: cells[best_index].lambda,
        best_index,
        cells,
        total_time: start.elapsed().as_secs_f64(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitOutput {
    pub version: u32,
    pub method: Method,
    pub dataset: String,
    pub n: usize,
    pub dim: usize,
    pub params: HyperParams,
    pub model: Option<PlaneModel>,
    pub regression: Option<RegressionModel>,
    pub hard_labels: Vec<usize>,
    pub scores: Option<Scores>,
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub reseeds: usize,
    pub wall_time: f64,
}

impl Report for FitOutput {
    /// `index,cluster` rows.
    fn to_csv(&self) -> Result<String> {
        if self.hard_labels.is_empty() {
            return Err(Error::invalid("fit output has no labels"));
        }
        let mut out = csv_line(&["index".into(), "cluster".into()]);
        for (i, c) in self.hard_labels.iter().enumerate() {
            out.push_str(&csv_line(&[i.to_string(), c.to_string()]));
        }
        Ok(out)
    }
}

/// One fit seeded with `config.seed` directly.
pub fn run_fit(config: &ExperimentConfig) -> Result<FitOutput> {
    let data = config.prepare()?;
    let params = HyperParams {
        seed: config.seed,
        ..config.params.clone()
    };
    let t = Instant::now();
    let out = run_method(config, &data, &params)?;
    let scores = score(&data, &out.labels, config.score_outliers, config.nmi_norm)?;
    Ok(FitOutput {
        version: REPORT_VERSION,
        method: config.method,
        dataset: config.source.describe(),
        n: data.len(),
        dim: data.dim(),
        params,
        model: out.model,
        regression: out.regression,
        hard_labels: out.labels,
        scores,
        objective_trace: out.trace,
        iterations: out.iterations,
        converged: out.converged,
        reseeds: out.reseeds,
        wall_time: t.elapsed().as_secs_f64(),
    })
}

//! Benchmark harness behind the `planeclust` binary: CSV ingestion, config
//! files, the restart protocol, grid search and report emission.

mod args;
mod bench;
mod config;
mod csvio;
mod report;

use std::ffi::OsString;
use std::path::Path;

use clap::{CommandFactory, Parser};
use serde::Serialize;

pub use args::{
    Cli, Command, DataArgs, DatagenArgs, GridArgs, MetricsArgs, ModelArgs, OutputArgs, RunArgs,
};
pub use bench::{
    grid_search, restart_seed, run_benchmark, run_fit, score, split_response, Aggregate,
    BenchmarkReport, DataSource, ExperimentConfig, FailureRecord, FitOutput, GridCell, GridReport,
    Method, RunRecord, ScoreSummary, Selection, DEFAULT_ALPHA_GRID, DEFAULT_LAMBDA_GRID,
    SENSITIVITY_LAMBDA_GRID, THREADS_ENV,
};
pub use config::{load_config, parse_config};
pub use csvio::{load_csv, save_csv, write_csv, ColumnRef};
pub use report::{emit_report, fmt_f64, to_json, Format, Report, REPORT_VERSION};

use crate::datagen::{self, SyntheticSpec};
use crate::error::{Error, Result};
use crate::metrics::{NmiNorm, Scores};
use crate::types::HyperParams;

fn parse_nmi(s: &str) -> Result<NmiNorm> {
    match s.to_ascii_lowercase().as_str() {
        "geometric" | "sqrt" => Ok(NmiNorm::Geometric),
        "arithmetic" | "mean" => Ok(NmiNorm::Arithmetic),
        other => Err(Error::invalid(format!(
            "unknown NMI normalization {other:?}"
        ))),
    }
}

fn synthetic_spec(
    family: datagen::Family,
    noise: datagen::Noise,
    seed: u64,
    noise_scale: Option<f64>,
    outlier_fraction: Option<f64>,
    n_per_cluster: Option<&Vec<usize>>,
) -> SyntheticSpec {
    let mut spec = SyntheticSpec::new(family, noise, seed);
    if let Some(s) = noise_scale {
        spec.noise_scale = s;
    }
    if let Some(f) = outlier_fraction {
        spec.outlier_fraction = f;
    }
    if let Some(n) = n_per_cluster {
        spec.n_per_cluster = n.clone();
    }
    spec
}

impl RunArgs {
    /// Builds the experiment; the dataset is read once here to infer `k`.
    pub fn to_config(&self) -> Result<ExperimentConfig> {
        let d = &self.data;
        let source = match (&d.data, d.family) {
            (Some(path), None) => DataSource::Csv {
                path: path.clone(),
                has_header: d.header,
                label_column: d.label_col.as_deref().map(str::parse).transpose()?,
            },
            (None, Some(family)) => DataSource::Synthetic(synthetic_spec(
                family,
                d.noise,
                d.data_seed,
                d.noise_scale,
                d.outlier_fraction,
                d.n_per_cluster.as_ref(),
            )),
            _ => return Err(Error::invalid("give exactly one of --data and --family")),
        };
        let k = match (self.model.k, &source) {
            (Some(k), _) => k,
            (None, DataSource::Synthetic(spec)) => spec.k(),
            (None, csv) => match csv.load()?.n_classes() {
                0 => return Err(Error::invalid("--k is required for unlabeled data")),
                k => k,
            },
        };
        let m = &self.model;
        let method = m.method.parse()?;
        Ok(ExperimentConfig {
            method,
            params: HyperParams {
                k,
                m: m.m,
                alpha: m.alpha,
                lambda: m.lambda,
                eta: m.eta,
                max_outer: m.max_outer,
                max_inner: m.max_inner,
                inner_tol: m.inner_tol,
                eps_proj: m.eps_proj,
                seed: self.seed,
            },
            restarts: self.restarts,
            normalize: self.normalize,
            response_column: self.response_col.as_deref().map(str::parse).transpose()?,
            score_outliers: self.score_outliers,
            nmi_norm: parse_nmi(&self.nmi)?,
            threads: self.threads,
            seed: self.seed,
            ..ExperimentConfig::new(method, source, k)
        })
    }
}

/// Merges `--config` file entries into `raw` (program name first). File
/// entries go right after the subcommand so later command-line flags
/// override them. Keys that only other subcommands accept are skipped.
pub fn merge_config_args(raw: Vec<OsString>) -> Result<Vec<OsString>> {
    let mut config_path = None;
    let mut sub_pos = None;
    let names: Vec<String> = Cli::command()
        .get_subcommands()
        .map(|c| c.get_name().to_string())
        .collect();
    let mut i = 1;
    while i < raw.len() {
        let a = raw[i].to_string_lossy();
        if a == "--config" {
            config_path = raw.get(i + 1).cloned();
            i += 2;
            continue;
        }
        if let Some(p) = a.strip_prefix("--config=") {
            config_path = Some(OsString::from(p));
        } else if sub_pos.is_none() && names.iter().any(|n| *n == a) {
            sub_pos = Some(i);
        }
        i += 1;
    }
    let (Some(path), Some(pos)) = (config_path, sub_pos) else {
        return Ok(raw);
    };
    let entries = load_config(Path::new(&path))?;
    let cmd = Cli::command();
    let sub = cmd
        .find_subcommand(raw[pos].to_string_lossy().as_ref())
        .expect("matched above");
    let known = |c: &clap::Command, key: &str| c.get_arguments().any(|a| a.get_long() == Some(key));
    let mut injected = Vec::new();
    for (key, value) in entries {
        if key == "config" {
            continue;
        }
        if known(sub, &key) {
            injected.push(OsString::from(format!("--{key}")));
            injected.push(OsString::from(value));
        } else if !cmd.get_subcommands().any(|c| known(c, &key)) {
            return Err(Error::invalid(format!(
                "{}: unknown key {key:?}",
                Path::new(&path).display()
            )));
        }
    }
    let mut out = raw[..=pos].to_vec();
    out.extend(injected);
    out.extend_from_slice(&raw[pos + 1..]);
    Ok(out)
}

#[derive(Serialize)]
struct MetricsOutput {
    version: u32,
    n: usize,
    scores: Scores,
}

impl Report for MetricsOutput {
    fn to_csv(&self) -> Result<String> {
        let mut out = String::from("metric,value\n");
        for m in crate::metrics::Metric::ALL {
            out.push_str(&format!("{},{}\n", m.name(), fmt_f64(self.scores.get(m))));
        }
        Ok(out)
    }
}

fn read_label_pairs(a: &MetricsArgs) -> Result<(Vec<i64>, Vec<i64>)> {
    let path = &a.input;
    let truth_col: ColumnRef = a.truth_col.parse()?;
    let pred_col: ColumnRef = a.pred_col.parse()?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(a.header)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Io(std::io::Error::other(e)))?;
    let header: Option<Vec<String>> = if a.header {
        let h = reader
            .headers()
            .map_err(|e| Error::Io(std::io::Error::other(e)))?;
        Some(h.iter().map(str::to_string).collect())
    } else {
        None
    };
    let (mut truth, mut pred) = (Vec::new(), Vec::new());
    for record in reader.records() {
        let record = record.map_err(|e| Error::Parse {
            path: path.clone(),
            line: e.position().map_or(0, |p| p.line() as usize),
            column: 0,
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let t = truth_col.resolve(header.as_deref(), record.len())?;
        let p = pred_col.resolve(header.as_deref(), record.len())?;
        let cell = |j: usize| -> Result<i64> {
            record[j].parse().map_err(|_| Error::Parse {
                path: path.clone(),
                line,
                column: j + 1,
                message: format!("{:?} is not an integer label", &record[j]),
            })
        };
        let (tv, pv) = (cell(t)?, cell(p)?);
        if a.score_outliers || tv >= 0 {
            truth.push(tv);
            pred.push(pv);
        }
    }
    Ok((truth, pred))
}

fn write_output<R: Report>(report: &R, output: &OutputArgs) -> Result<()> {
    emit_report(report, output.format.parse()?, output.out.as_deref())
}

/// Runs a parsed command line.
pub fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Fit(a) => {
            let mut out = run_fit(&a.to_config()?)?;
            if a.output.strip_timing {
                out.wall_time = 0.0;
            }
            write_output(&out, &a.output)
        }
        Command::Benchmark(a) => {
            let mut rep = run_benchmark(&a.to_config()?)?;
            if a.output.strip_timing {
                rep.strip_timing();
            }
            write_output(&rep, &a.output)
        }
        Command::Gridsearch(g) => {
            let mut config = g.run.to_config()?;
            config.alpha_grid = g.alpha_grid.clone();
            config.lambda_grid = g.lambda_grid.clone();
            let mut rep = grid_search(&config, g.selection.parse()?)?;
            if g.run.output.strip_timing {
                rep.strip_timing();
            }
            write_output(&rep, &g.run.output)
        }
        Command::Datagen(a) => {
            let spec = synthetic_spec(
                a.family,
                a.noise,
                a.seed,
                a.noise_scale,
                a.outlier_fraction,
                a.n_per_cluster.as_ref(),
            );
            let data = datagen::generate(&spec)?;
            match &a.out {
                Some(p) => save_csv(&data, p),
                None => write_csv(&data, &mut std::io::stdout().lock()),
            }
        }
        Command::Metrics(a) => {
            let (truth, pred) = read_label_pairs(&a)?;
            let out = MetricsOutput {
                version: REPORT_VERSION,
                n: truth.len(),
                scores: Scores::compute(&truth, &pred, parse_nmi(&a.nmi)?)?,
            };
            emit_report(&out, a.format.parse()?, a.out.as_deref())
        }
    }
}

/// Entry point for the binary: config merge, parse, run. Returns the exit code.
pub fn main_with_args(raw: Vec<OsString>) -> i32 {
    let merged = match merge_config_args(raw) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let cli = match Cli::try_parse_from(merged) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

//! Dataset ingestion, synthetic problems, and the benchmark runner.
//!
//! A benchmark runs every `(solver, seed)` pair under one gradient budget,
//! writes one trace file per run and a `summary.json` that records the
//! problem statistics, the reference optimum and each run's final relative
//! suboptimality.

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constraints::{kappa, ConstraintSet, Norm};
use crate::error::{Error, Result};
use crate::numkit::DesignMatrix;
use crate::problem::{LossKind, LossModel, Problem};
use crate::solvers::{reference_optimum, run_solver, RunConfig, RunOutput, SolverKind, TraceRow};

/// Version of the summary JSON layout.
pub const SCHEMA_VERSION: u32 = 1;

/// Environment variable naming the default dataset root.
pub const DATA_DIR_ENV: &str = "SFWKIT_DATA_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Classification,
    Regression,
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "classification" => Ok(Task::Classification),
            "regression" => Ok(Task::Regression),
            other => Err(Error::usage(format!("unknown task '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub x: DesignMatrix,
    pub y: Vec<f64>,
    pub name: String,
    pub task: Task,
}

impl Dataset {
    pub fn new(x: DesignMatrix, y: Vec<f64>, name: impl Into<String>, task: Task) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(Error::usage(format!("{} rows but {} targets", x.nrows(), y.len())));
        }
        if task == Task::Classification && y.iter().any(|&v| v != 1.0 && v != -1.0) {
            return Err(Error::usage("classification targets must be -1 or +1"));
        }
        Ok(Self { x, y, name: name.into(), task })
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn d(&self) -> usize {
        self.x.ncols()
    }

    pub fn problem(&self, loss: LossKind) -> Result<Problem> {
        Problem::new(self.x.clone(), LossModel::new(loss, self.y.clone())?)
    }
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

/// Reads `label idx:val ...` lines with 1-based ascending indices.
///
/// Labels drawn from `{0, 1}` or `{-1, +1}` make a classification dataset
/// (with 0 mapped to -1); anything else is kept as a regression target.
/// `d` defaults to the largest index seen.
pub fn parse_libsvm<R: BufRead>(reader: R, d: Option<usize>) -> Result<Dataset> {
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    let mut max_col = 0usize;
    for (k, line) in reader.lines().enumerate() {
        let lineno = k + 1;
        let line = line.map_err(|e| parse_err(lineno, e.to_string()))?;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut tokens = content.split_whitespace();
        let label_tok = tokens.next().expect("non-empty line has a token");
        let label: f64 = label_tok
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| parse_err(lineno, format!("bad label '{label_tok}'")))?;
        let mut row = Vec::new();
        let mut last = 0usize;
        for tok in tokens {
            let (idx, val) = tok
                .split_once(':')
                .ok_or_else(|| parse_err(lineno, format!("expected idx:val, got '{tok}'")))?;
            let idx: usize = idx.parse().map_err(|_| parse_err(lineno, format!("bad index in '{tok}'")))?;
            let val: f64 = val
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| parse_err(lineno, format!("bad value in '{tok}'")))?;
            if idx == 0 {
                return Err(parse_err(lineno, "indices are 1-based"));
            }
            if idx <= last {
                return Err(parse_err(lineno, format!("index {idx} not ascending (after {last})")));
            }
            last = idx;
            row.push((idx - 1, val));
        }
        max_col = max_col.max(last);
        rows.push(row);
        labels.push(label);
    }
    let d = match d {
        Some(d) if d < max_col => {
            return Err(parse_err(0, format!("index {max_col} exceeds declared dimension {d}")))
        }
        Some(d) => d,
        None => max_col,
    };
    let binary = labels.iter().all(|&v| v == 0.0 || v == 1.0 || v == -1.0);
    let (y, task) = if binary {
        (labels.iter().map(|&v| if v == 1.0 { 1.0 } else { -1.0 }).collect(), Task::Classification)
    } else {
        (labels, Task::Regression)
    };
    Dataset::new(DesignMatrix::from_sparse_rows(d, &rows)?, y, "libsvm", task)
}

/// Writes a dataset in the format read by [`parse_libsvm`].
pub fn write_libsvm<W: Write>(data: &Dataset, mut out: W) -> std::io::Result<()> {
    for i in 0..data.n() {
        match data.task {
            Task::Classification => write!(out, "{}", if data.y[i] > 0.0 { "+1" } else { "-1" })?,
            Task::Regression => write!(out, "{:?}", data.y[i])?,
        }
        for (j, v) in data.x.row(i) {
            if v != 0.0 {
                write!(out, " {}:{v:?}", j + 1)?;
            }
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Reads a numeric CSV table with a header row into a dense regression
/// dataset. `target` names the target column; the last column by default.
pub fn parse_csv<R: Read>(reader: R, target: Option<&str>) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        return Err(parse_err(1, "missing header row"));
    }
    let target_col = match target {
        Some(name) => headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::usage(format!("no column named '{name}'")))?,
        None => headers.len() - 1,
    };
    let d = headers.len() - 1;
    let mut values = Vec::new();
    let mut y = Vec::new();
    for (k, record) in rdr.records().enumerate() {
        let record = record?;
        let row = k + 1;
        for (c, cell) in record.iter().enumerate() {
            let v: f64 = cell
                .trim()
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| Error::ParseCell { row, column: c + 1, msg: format!("not a number: '{cell}'") })?;
            if c == target_col {
                y.push(v);
            } else {
                values.push(v);
            }
        }
    }
    let n = y.len();
    Dataset::new(DesignMatrix::dense(n, d, values)?, y, "csv", Task::Regression)
}

/// Settings of a synthetic dataset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub seed: u64,
    pub n: usize,
    pub d: usize,
    pub density: f64,
    pub task: Task,
}

impl FromStr for SynthSpec {
    type Err = Error;

    /// `n=683,d=10,density=0.5,task=classification,seed=1`; `density`,
    /// `task` and `seed` default to 1, classification and 0.
    fn from_str(s: &str) -> Result<Self> {
        let mut spec = SynthSpec { seed: 0, n: 0, d: 0, density: 1.0, task: Task::Classification };
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| Error::usage(format!("expected key=value, got '{part}'")))?;
            let bad = || Error::usage(format!("bad value for {k}: '{v}'"));
            match k.trim() {
                "n" => spec.n = v.parse().map_err(|_| bad())?,
                "d" => spec.d = v.parse().map_err(|_| bad())?,
                "density" => spec.density = v.parse().map_err(|_| bad())?,
                "seed" => spec.seed = v.parse().map_err(|_| bad())?,
                "task" => spec.task = v.parse()?,
                other => return Err(Error::usage(format!("unknown synthetic key '{other}'"))),
            }
        }
        if spec.n == 0 || spec.d == 0 {
            return Err(Error::usage("synthetic spec needs n and d"));
        }
        Ok(spec)
    }
}

/// Reproducible sparse Gaussian features with a planted sparse weight
/// vector. Classification labels are `sign(x^T w)` (0 maps to +1);
/// regression targets are `x^T w` plus Gaussian noise of scale 0.1.
pub fn synth_dataset(spec: &SynthSpec) -> Result<Dataset> {
    let SynthSpec { seed, n, d, density, task } = *spec;
    if !(density > 0.0 && density <= 1.0) {
        return Err(Error::usage(format!("density {density} outside (0, 1]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let support = (d / 3).max(1);
    let mut planted = vec![0.0; d];
    for j in rand::seq::index::sample(&mut rng, d, support) {
        let g: f64 = rng.sample(StandardNormal);
        planted[j] = g + g.signum() * 0.5;
    }
    let mut rows = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let row: Vec<(usize, f64)> = (0..d)
            .filter_map(|j| {
                let keep = density >= 1.0 || rng.random_bool(density);
                let v: f64 = rng.sample(StandardNormal);
                (keep && v != 0.0).then_some((j, v))
            })
            .collect();
        let z: f64 = row.iter().map(|&(j, v)| planted[j] * v).sum();
        y.push(match task {
            Task::Classification => if z >= 0.0 { 1.0 } else { -1.0 },
            Task::Regression => z + 0.1 * rng.sample::<f64, _>(StandardNormal),
        });
        rows.push(row);
    }
    let x = DesignMatrix::from_sparse_rows(d, &rows)?;
    let x = if density >= 1.0 { x.to_dense() } else { x };
    Dataset::new(x, y, format!("synth-n{n}-d{d}-s{seed}"), task)
}

/// Maps objectives to `(f - f_min) / (f_max - f_min)` using extremes over all
/// traces (and the reference value, when given).
pub fn relative_suboptimality(traces: &[Vec<f64>], reference: Option<f64>) -> Result<Vec<Vec<f64>>> {
    if traces.iter().all(Vec::is_empty) {
        return Err(Error::Degenerate("no objective values".into()));
    }
    let all = traces.iter().flatten().copied().chain(reference);
    let (lo, hi) = all.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !(hi > lo) {
        return Err(Error::Degenerate(format!("objective range is empty (f_min = f_max = {lo})")));
    }
    Ok(traces.iter().map(|t| t.iter().map(|f| (f - lo) / (hi - lo)).collect()).collect())
}

/// Problem statistics reported by `stats` and the benchmark summary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Stats {
    pub n: usize,
    pub d: usize,
    pub nnz: usize,
    pub kappa: Option<f64>,
    pub d1: Option<f64>,
    pub d2: Option<f64>,
    pub d_inf: Option<f64>,
    pub smoothness: f64,
}

/// Statistics that cannot be computed (all-zero data, too many box
/// vertices) are reported as absent.
pub fn stats(data: &Dataset, loss: LossKind, set: &ConstraintSet) -> Stats {
    let diam = |p| set.diameter(&data.x, p).ok();
    Stats {
        n: data.n(),
        d: data.d(),
        nnz: data.x.nnz(),
        kappa: kappa(&data.x).ok(),
        d1: diam(Norm::L1),
        d2: diam(Norm::L2),
        d_inf: diam(Norm::Linf),
        smoothness: loss.smoothness(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutFormat {
    Csv,
    Json,
}

impl OutFormat {
    fn extension(self) -> &'static str {
        match self {
            OutFormat::Csv => "csv",
            OutFormat::Json => "json",
        }
    }
}

impl FromStr for OutFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutFormat::Csv),
            "json" => Ok(OutFormat::Json),
            other => Err(Error::usage(format!("unknown output format '{other}' (csv|json)"))),
        }
    }
}

impl fmt::Display for OutFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.extension())
    }
}

/// Writes trace rows as CSV (empty cells for absent values) or a JSON array.
pub fn write_trace<W: Write>(rows: &[TraceRow], format: OutFormat, out: W) -> Result<()> {
    match format {
        OutFormat::Csv => {
            let mut w = csv::Writer::from_writer(out);
            for row in rows {
                w.serialize(row)?;
            }
            w.flush().map_err(csv::Error::from)?;
        }
        OutFormat::Json => {
            let mut out = out;
            serde_json::to_writer_pretty(&mut out, rows)?;
            writeln!(out).map_err(serde_json::Error::io)?;
        }
    }
    Ok(())
}

/// Default batch size: 1% of the samples, at least 1.
pub fn default_batch_size(n: usize) -> usize {
    (n / 100).max(1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub loss: LossKind,
    pub constraint: ConstraintSet,
    pub solvers: Vec<SolverKind>,
    /// [`default_batch_size`] when absent.
    pub batch_size: Option<usize>,
    pub grad_budget: u64,
    pub seeds: Vec<u64>,
    pub trace_every: u64,
    pub gap_stop: Option<f64>,
    pub exact_diagnostics: bool,
    pub out_dir: PathBuf,
    pub out_format: OutFormat,
    /// Gradient budget of the deterministic run behind the reference optimum.
    pub reference_budget: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub solver: SolverKind,
    pub seed: u64,
    pub trace_file: Option<String>,
    pub iterations: Option<u64>,
    pub grad_calls: Option<u64>,
    pub final_objective: Option<f64>,
    pub final_relative_suboptimality: Option<f64>,
    pub stopped_by_gap: Option<bool>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReferenceSummary {
    pub value: f64,
    pub approximate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchSummary {
    pub schema_version: u32,
    pub dataset: String,
    pub task: Task,
    pub loss: LossKind,
    pub constraint: String,
    pub batch_size: usize,
    pub grad_budget: u64,
    pub stats: Stats,
    pub reference_optimum: Option<ReferenceSummary>,
    pub f_min: Option<f64>,
    pub f_max: Option<f64>,
    pub runs: Vec<RunSummary>,
}

impl BenchConfig {
    fn validate(&self, n: usize) -> Result<usize> {
        if self.solvers.is_empty() || self.seeds.is_empty() {
            return Err(Error::usage("need at least one solver and one seed"));
        }
        let b = self.batch_size.unwrap_or_else(|| default_batch_size(n));
        if b == 0 || b > n {
            return Err(Error::usage(format!("batch size {b} outside [1, {n}]")));
        }
        Ok(b)
    }
}

/// Runs every `(solver, seed)` pair in parallel and writes trace files plus
/// `summary.json` into `config.out_dir`. A failing run is recorded in the
/// summary without stopping the others.
pub fn run_benchmark(data: &Dataset, config: &BenchConfig) -> Result<BenchSummary> {
    let problem = data.problem(config.loss)?;
    let set = &config.constraint;
    let b = config.validate(problem.n())?;
    std::fs::create_dir_all(&config.out_dir).map_err(|e| Error::io(&config.out_dir, e))?;

    let jobs: Vec<(SolverKind, u64)> = config
        .solvers
        .iter()
        .flat_map(|&s| config.seeds.iter().map(move |&seed| (s, seed)))
        .collect();
    let reference = if config.reference_budget > 0 {
        Some(reference_optimum(&problem, set, config.reference_budget)?)
    } else {
        None
    };
    let outputs: Vec<Result<RunOutput>> = jobs
        .par_iter()
        .map(|&(kind, seed)| {
            let mut rc = RunConfig::new(kind, b, config.grad_budget, seed);
            rc.trace_every = config.trace_every;
            rc.gap_stop = config.gap_stop;
            rc.exact_diagnostics = config.exact_diagnostics;
            run_solver(&problem, set, &rc)
        })
        .collect();

    let objectives: Vec<Vec<f64>> = outputs
        .iter()
        .map(|o| o.as_ref().map(|o| o.rows.iter().map(|r| r.objective).collect()).unwrap_or_default())
        .collect();
    let ref_value = reference.as_ref().map(|r| r.value);
    let relative = relative_suboptimality(&objectives, ref_value).ok();
    let (f_min, f_max) = {
        let all = objectives.iter().flatten().copied().chain(ref_value);
        let (lo, hi) = all.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
        if lo.is_finite() { (Some(lo), Some(hi)) } else { (None, None) }
    };

    let mut runs = Vec::with_capacity(jobs.len());
    for (k, (&(kind, seed), output)) in jobs.iter().zip(&outputs).enumerate() {
        let summary = match output {
            Ok(out) => {
                let file = format!("{kind}_seed{seed}.{}", config.out_format.extension());
                let path = config.out_dir.join(&file);
                let handle = File::create(&path).map_err(|e| Error::io(&path, e))?;
                write_trace(&out.rows, config.out_format, BufWriter::new(handle))?;
                let last = out.rows.last().expect("trace has a t = 0 row");
                RunSummary {
                    solver: kind,
                    seed,
                    trace_file: Some(file),
                    iterations: Some(last.t),
                    grad_calls: Some(last.grad_calls),
                    final_objective: Some(last.objective),
                    final_relative_suboptimality: relative.as_ref().and_then(|r| r[k].last().copied()),
                    stopped_by_gap: Some(out.stopped_by_gap),
                    error: None,
                }
            }
            Err(e) => RunSummary {
                solver: kind,
                seed,
                trace_file: None,
                iterations: None,
                grad_calls: None,
                final_objective: None,
                final_relative_suboptimality: None,
                stopped_by_gap: None,
                error: Some(e.to_string()),
            },
        };
        runs.push(summary);
    }

    let summary = BenchSummary {
        schema_version: SCHEMA_VERSION,
        dataset: data.name.clone(),
        task: data.task,
        loss: config.loss,
        constraint: set.to_string(),
        batch_size: b,
        grad_budget: config.grad_budget,
        stats: stats(data, config.loss, set),
        reference_optimum: reference.map(|r| ReferenceSummary { value: r.value, approximate: r.approximate }),
        f_min,
        f_max,
        runs,
    };
    let path = config.out_dir.join("summary.json");
    let handle = File::create(&path).map_err(|e| Error::io(&path, e))?;
    let mut w = BufWriter::new(handle);
    serde_json::to_writer_pretty(&mut w, &summary)?;
    writeln!(w).map_err(|e| Error::io(&path, e))?;
    w.flush().map_err(|e| Error::io(&path, e))?;
    Ok(summary)
}

/// Resolves a relative dataset path against `root` when it does not exist
/// as given.
pub fn resolve_data_path(path: &Path, root: Option<&Path>) -> PathBuf {
    match root {
        Some(root) if path.is_relative() && !path.exists() => root.join(path),
        _ => path.to_path_buf(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataFormat {
    Libsvm,
    Csv,
    Synth,
}

impl FromStr for DataFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "libsvm" => Ok(DataFormat::Libsvm),
            "csv" => Ok(DataFormat::Csv),
            "synth" => Ok(DataFormat::Synth),
            other => Err(Error::usage(format!("unknown data format '{other}' (libsvm|csv|synth)"))),
        }
    }
}

/// Loads a dataset. For [`DataFormat::Synth`], `source` is a [`SynthSpec`]
/// string rather than a path.
pub fn load_dataset(source: &str, format: DataFormat, root: Option<&Path>) -> Result<Dataset> {
    if format == DataFormat::Synth {
        return synth_dataset(&source.parse()?);
    }
    let path = resolve_data_path(Path::new(source), root);
    let file = File::open(&path).map_err(|e| Error::io(&path, e))?;
    let name = path.file_stem().map_or_else(|| source.to_string(), |s| s.to_string_lossy().into_owned());
    let mut data = match format {
        DataFormat::Libsvm => parse_libsvm(std::io::BufReader::new(file), None)?,
        DataFormat::Csv => parse_csv(file, None)?,
        DataFormat::Synth => unreachable!(),
    };
    data.name = name;
    Ok(data)
}

//! Seeded experiment sweeps over rule sets and reservoir sizes.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ca::Rule;
use crate::diagram::SpaceTimeDiagram;
use crate::encoding::RNG_ALGORITHM;
use crate::error::{RecaError, Result};
use crate::readout::{self, ReadoutModel, SolverOptions, TrainingSet, DEFAULT_REGULARIZATION};
use crate::reservoir::{ReservoirConfig, ReservoirState, Transition};
use crate::tasks::{self, Dataset, RunScore, SequenceSample, INPUT_SIGNALS, OUTPUT_SIGNALS};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// The nine rules of the published sweep.
pub const TABLE_RULES: [u8; 9] = [60, 90, 102, 105, 150, 153, 165, 180, 195];

pub const SUCCESS_CRITERION: &str =
    "a run succeeds iff every step of every test sequence is predicted correctly";
pub const RUN_VARIATION: &str = "runs differ only in their random input mappings";

/// A uniform reservoir or a two-rule quasi-uniform one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RuleSpec {
    Single(Rule),
    Pair(Rule, Rule),
}

impl RuleSpec {
    pub fn rules(&self) -> Vec<Rule> {
        match *self {
            RuleSpec::Single(r) => vec![r],
            RuleSpec::Pair(a, b) => vec![a, b],
        }
    }

    pub fn table_singles() -> Vec<RuleSpec> {
        TABLE_RULES.iter().map(|&n| RuleSpec::Single(Rule::new(n))).collect()
    }

    /// Unordered pairs of distinct table rules, in table order.
    pub fn table_pairs() -> Vec<RuleSpec> {
        let mut out = Vec::new();
        for (i, &a) in TABLE_RULES.iter().enumerate() {
            for &b in &TABLE_RULES[i + 1..] {
                out.push(RuleSpec::Pair(Rule::new(a), Rule::new(b)));
            }
        }
        out
    }

    /// Parses a comma list such as `90,60+102`. The keywords `singles` and
    /// `pairs` expand to the published rule set.
    pub fn parse_list(s: &str) -> Result<Vec<RuleSpec>> {
        let mut out = Vec::new();
        for item in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            match item {
                "singles" => out.extend(RuleSpec::table_singles()),
                "pairs" => out.extend(RuleSpec::table_pairs()),
                other => out.push(other.parse()?),
            }
        }
        if out.is_empty() {
            return Err(RecaError::invalid("rules", "empty rule list"));
        }
        Ok(out)
    }
}

impl fmt::Display for RuleSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RuleSpec::Single(r) => write!(f, "{r}"),
            RuleSpec::Pair(a, b) => write!(f, "{a}+{b}"),
        }
    }
}

impl FromStr for RuleSpec {
    type Err = RecaError;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split('+').collect();
        match parts.as_slice() {
            [one] => Ok(RuleSpec::Single(one.parse()?)),
            [a, b] => Ok(RuleSpec::Pair(a.parse()?, b.parse()?)),
            _ => Err(RecaError::RuleCount(parts.len())),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub rule_set: Vec<RuleSpec>,
    pub iterations: Vec<usize>,
    pub mappings: Vec<usize>,
    pub c_multiplier: usize,
    pub distractor: usize,
    pub runs: usize,
    pub master_seed: u64,
    pub regularization: f64,
    pub transition: Transition,
    pub solver: SolverOptions,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec {
            rule_set: vec![RuleSpec::Single(Rule::new(90))],
            iterations: vec![2, 4],
            mappings: vec![4, 8],
            c_multiplier: 10,
            distractor: 200,
            runs: 20,
            master_seed: 0,
            regularization: DEFAULT_REGULARIZATION,
            transition: Transition::Permutation,
            solver: SolverOptions::default(),
        }
    }
}

/// One cell of the sweep: a rule spec at one `(I, R)` point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConfigPoint {
    pub index: usize,
    pub rules: RuleSpec,
    pub iterations: usize,
    pub r_count: usize,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(RecaError::invalid("runs", "must be at least 1"));
        }
        if self.rule_set.is_empty() {
            return Err(RecaError::invalid("rules", "empty rule list"));
        }
        if self.iterations.is_empty() {
            return Err(RecaError::invalid("iterations", "empty list"));
        }
        if self.mappings.is_empty() {
            return Err(RecaError::invalid("mappings", "empty list"));
        }
        if self.distractor == 0 {
            return Err(RecaError::invalid("distractor", "must be at least 1"));
        }
        if !(self.regularization.is_finite() && self.regularization > 0.0) {
            return Err(RecaError::invalid("reg", "must be a positive number"));
        }
        Ok(())
    }

    /// Configurations in output order: rule spec, then `I`, then `R`.
    pub fn points(&self) -> Vec<ConfigPoint> {
        let mut out = Vec::new();
        for &rules in &self.rule_set {
            for &iterations in &self.iterations {
                for &r_count in &self.mappings {
                    out.push(ConfigPoint {
                        index: out.len(),
                        rules,
                        iterations,
                        r_count,
                    });
                }
            }
        }
        out
    }

    pub fn reservoir_config(&self, point: &ConfigPoint, run: usize) -> ReservoirConfig {
        ReservoirConfig {
            rules: point.rules.rules(),
            iterations: point.iterations,
            r_count: point.r_count,
            c_multiplier: self.c_multiplier,
            input_length: INPUT_SIGNALS,
            transition: self.transition,
            seed: derive_seed(self.master_seed, point.index as u64, run as u64),
        }
    }

    pub fn metadata(&self) -> Metadata {
        Metadata {
            master_seed: self.master_seed,
            rng: RNG_ALGORITHM.to_string(),
            version: VERSION.to_string(),
            distractor: self.distractor,
            transition: self.transition,
            regularization: self.regularization,
            success_criterion: SUCCESS_CRITERION.to_string(),
            run_variation: RUN_VARIATION.to_string(),
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-run seed from the master seed and the run's own coordinates.
pub fn derive_seed(master: u64, config_index: u64, run_index: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ config_index) ^ run_index)
}

/// Trains the readout on the train split and scores the test split.
pub fn run_once(
    config: ReservoirConfig,
    dataset: &Dataset,
    regularization: f64,
    solver: SolverOptions,
) -> Result<RunScore> {
    let mut state = ReservoirState::new(config)?;
    let feature_width = state.config().feature_width();

    let mut training = TrainingSet::new(feature_width, OUTPUT_SIGNALS);
    for sample in &dataset.train {
        let traces = state.process_sequence(sample.inputs())?;
        for (trace, &label) in traces.iter().zip(sample.targets()) {
            training.push(trace.feature(), label)?;
        }
    }
    let model = readout::train_with(&training, regularization, solver)?;

    let predictions = predict_samples(&model, &mut state, &dataset.test)?;
    tasks::score_run(&predictions, &dataset.test)
}

fn predict_samples(
    model: &ReadoutModel,
    state: &mut ReservoirState,
    samples: &[SequenceSample],
) -> Result<Vec<Vec<usize>>> {
    samples
        .iter()
        .map(|sample| {
            state
                .process_sequence(sample.inputs())?
                .iter()
                .map(|trace| model.predict(&trace.feature()))
                .collect()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub rules: String,
    pub iterations: usize,
    pub r_count: usize,
    pub c_multiplier: usize,
    pub size_metric: usize,
    pub runs: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub mean_accuracy: f64,
    pub wall_time_s: f64,
    pub error: Option<String>,
}

/// Provenance written alongside every result file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub master_seed: u64,
    pub rng: String,
    pub version: String,
    pub distractor: usize,
    pub transition: Transition,
    pub regularization: f64,
    pub success_criterion: String,
    pub run_variation: String,
}

pub fn run_point(spec: &ExperimentSpec, point: &ConfigPoint, dataset: &Dataset) -> ResultRow {
    let started = Instant::now();
    let config = spec.reservoir_config(point, 0);
    let mut row = ResultRow {
        rules: point.rules.to_string(),
        iterations: point.iterations,
        r_count: point.r_count,
        c_multiplier: spec.c_multiplier,
        size_metric: config.size_metric(),
        runs: spec.runs,
        successes: 0,
        success_rate: 0.0,
        mean_accuracy: 0.0,
        wall_time_s: 0.0,
        error: None,
    };
    let scores: Result<Vec<RunScore>> = (0..spec.runs)
        .into_par_iter()
        .map(|run| {
            run_once(
                spec.reservoir_config(point, run),
                dataset,
                spec.regularization,
                spec.solver,
            )
        })
        .collect();
    match scores {
        Ok(scores) => {
            row.successes = scores.iter().filter(|s| s.success).count();
            row.success_rate = row.successes as f64 / spec.runs as f64;
            row.mean_accuracy = scores.iter().map(|s| s.accuracy).sum::<f64>() / spec.runs as f64;
        }
        Err(e) => row.error = Some(e.to_string()),
    }
    row.wall_time_s = started.elapsed().as_secs_f64();
    row
}

/// Runs every configuration of the sweep, rows in spec order.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<ResultRow>> {
    run_experiment_with(spec, |_| {})
}

/// As [`run_experiment`], calling `on_row` as each row completes.
pub fn run_experiment_with(
    spec: &ExperimentSpec,
    mut on_row: impl FnMut(&ResultRow),
) -> Result<Vec<ResultRow>> {
    spec.validate()?;
    let dataset = tasks::generate_5bit(spec.distractor)?;
    Ok(spec
        .points()
        .iter()
        .map(|point| {
            let row = run_point(spec, point, &dataset);
            on_row(&row);
            row
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = RecaError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(RecaError::Parse(format!("unknown format {other:?}"))),
        }
    }
}

/// Fixed CSV column order. Metadata is repeated on every row so the file
/// stays a single rectangular table.
pub const CSV_COLUMNS: [&str; 19] = [
    "rules",
    "iterations",
    "r_count",
    "c_multiplier",
    "size_metric",
    "runs",
    "successes",
    "success_rate",
    "mean_accuracy",
    "wall_time_s",
    "error",
    "distractor",
    "transition",
    "regularization",
    "master_seed",
    "rng",
    "version",
    "success_criterion",
    "run_variation",
];

pub fn write_results<W: Write>(
    rows: &[ResultRow],
    meta: &Metadata,
    format: OutputFormat,
    mut out: W,
) -> Result<()> {
    match format {
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(CSV_COLUMNS)?;
            for r in rows {
                w.write_record([
                    r.rules.clone(),
                    r.iterations.to_string(),
                    r.r_count.to_string(),
                    r.c_multiplier.to_string(),
                    r.size_metric.to_string(),
                    r.runs.to_string(),
                    r.successes.to_string(),
                    format!("{:.6}", r.success_rate),
                    format!("{:.6}", r.mean_accuracy),
                    format!("{:.3}", r.wall_time_s),
                    r.error.clone().unwrap_or_default(),
                    meta.distractor.to_string(),
                    meta.transition.to_string(),
                    meta.regularization.to_string(),
                    meta.master_seed.to_string(),
                    meta.rng.clone(),
                    meta.version.clone(),
                    meta.success_criterion.clone(),
                    meta.run_variation.clone(),
                ])?;
            }
            w.flush().map_err(|e| RecaError::io("<csv>", e))?;
        }
        OutputFormat::Json => {
            #[derive(Serialize)]
            struct Document<'a> {
                metadata: &'a Metadata,
                rows: &'a [ResultRow],
            }
            serde_json::to_writer_pretty(&mut out, &Document { metadata: meta, rows })?;
            out.write_all(b"\n").map_err(|e| RecaError::io("<json>", e))?;
        }
    }
    Ok(())
}

pub fn emit_results(
    rows: &[ResultRow],
    meta: &Metadata,
    format: OutputFormat,
    path: &Path,
) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| RecaError::io(path, e))?;
    let mut out = std::io::BufWriter::new(file);
    write_results(rows, meta, format, &mut out)?;
    out.flush().map_err(|e| RecaError::io(path, e))
}

/// Reads back the `rows` array of a JSON result document.
pub fn read_json_rows(text: &str) -> Result<Vec<ResultRow>> {
    #[derive(Deserialize)]
    struct Document {
        rows: Vec<ResultRow>,
    }
    Ok(serde_json::from_str::<Document>(text)?.rows)
}

/// Space-time diagram of test sequence `sequence` under `config`.
pub fn build_diagram(
    config: ReservoirConfig,
    distractor: usize,
    sequence: usize,
) -> Result<SpaceTimeDiagram> {
    let dataset = tasks::generate_5bit(distractor)?;
    let sample = dataset.test.get(sequence).ok_or(RecaError::IndexOutOfRange {
        index: sequence,
        len: dataset.test.len(),
    })?;
    let mut state = ReservoirState::new(config)?;
    let traces = state.process_sequence(sample.inputs())?;
    SpaceTimeDiagram::from_traces(&traces, true)
}

pub fn emit_diagram(
    config: ReservoirConfig,
    distractor: usize,
    sequence: usize,
    path: &Path,
) -> Result<SpaceTimeDiagram> {
    let diagram = build_diagram(config, distractor, sequence)?;
    diagram.write_pbm(path)?;
    Ok(diagram)
}

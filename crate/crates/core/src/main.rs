use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use reca::harness::{self, ExperimentSpec, OutputFormat, ResultRow, RuleSpec};
use reca::readout::SolverOptions;
use reca::reservoir::Transition;
use reca::tasks;

/// Reservoir computing with elementary cellular automata on the 5-bit memory task.
#[derive(Debug, Parser)]
#[command(name = "reca", version)]
struct Cli {
    /// Comma list of rules; `a+b` is a two-rule reservoir, `singles`/`pairs`
    /// expand to the standard nine rules and their 36 pairs.
    #[arg(long, default_value = "90")]
    rules: String,

    /// Iterations per step (I), comma list.
    #[arg(long, value_delimiter = ',', default_value = "2,4")]
    iterations: Vec<usize>,

    /// Random mappings (R), comma list.
    #[arg(long, value_delimiter = ',', default_value = "4,8")]
    mappings: Vec<usize>,

    /// Segment width multiple (C).
    #[arg(long, default_value_t = 10)]
    c_multiplier: usize,

    /// Distractor period length.
    #[arg(long, default_value_t = 200)]
    distractor: usize,

    /// Runs per configuration.
    #[arg(long, default_value_t = 20)]
    runs: usize,

    /// Master seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Time-transition: permutation or normadd.
    #[arg(long, default_value = "permutation")]
    transition: Transition,

    /// SVM cost parameter of the readout.
    #[arg(long, default_value_t = 1.0)]
    reg: f64,

    /// Result file; rows are also printed to stdout.
    #[arg(long)]
    out: Option<PathBuf>,

    #[arg(long, default_value = "csv")]
    format: OutputFormat,

    /// Write a PBM space-time diagram of the first configuration (run 0).
    #[arg(long)]
    diagram: Option<PathBuf>,

    /// Test sequence drawn in the diagram.
    #[arg(long, default_value_t = 0)]
    sequence: usize,

    /// Only write the diagram; skip the sweep.
    #[arg(long, requires = "diagram")]
    diagram_only: bool,

    /// Also export the generated dataset as CSV.
    #[arg(long)]
    dataset_csv: Option<PathBuf>,
}

fn print_row(row: &ResultRow) {
    match &row.error {
        Some(e) => println!(
            "{:>8}  I={:<2} R={:<2} C={:<3} size={:<5} error: {e}",
            row.rules, row.iterations, row.r_count, row.c_multiplier, row.size_metric
        ),
        None => println!(
            "{:>8}  I={:<2} R={:<2} C={:<3} size={:<5} success {:>3}/{:<3} = {:>6.1}%  acc {:.4}  {:.1}s",
            row.rules,
            row.iterations,
            row.r_count,
            row.c_multiplier,
            row.size_metric,
            row.successes,
            row.runs,
            100.0 * row.success_rate,
            row.mean_accuracy,
            row.wall_time_s
        ),
    }
}

fn run(cli: Cli) -> reca::Result<bool> {
    let spec = ExperimentSpec {
        rule_set: RuleSpec::parse_list(&cli.rules)?,
        iterations: cli.iterations,
        mappings: cli.mappings,
        c_multiplier: cli.c_multiplier,
        distractor: cli.distractor,
        runs: cli.runs,
        master_seed: cli.seed,
        regularization: cli.reg,
        transition: cli.transition,
        solver: SolverOptions::default(),
    };
    spec.validate()?;

    if let Some(path) = &cli.dataset_csv {
        tasks::export_csv(&tasks::generate_5bit(spec.distractor)?.test, path)?;
    }
    if let Some(path) = &cli.diagram {
        let config = spec.reservoir_config(&spec.points()[0], 0);
        config.validate()?;
        let d = harness::emit_diagram(config, spec.distractor, cli.sequence, path)?;
        eprintln!("wrote {} ({}x{})", path.display(), d.width(), d.height());
    }
    if cli.diagram_only {
        return Ok(true);
    }

    let rows = harness::run_experiment_with(&spec, print_row)?;
    if let Some(path) = &cli.out {
        harness::emit_results(&rows, &spec.metadata(), cli.format, path)?;
    }
    Ok(rows.iter().all(|r| r.error.is_none()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

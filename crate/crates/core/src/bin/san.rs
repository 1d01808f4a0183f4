//! `san`: dataset generation, complex inspection, training, evaluation and
//! gradient checking. Every subcommand prints one JSON document on stdout.
//! Exit status: 0 success, 2 configuration, 3 data, 4 numeric failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use simplicial_attention::experiment::{
    cmd_decompose, cmd_eval, cmd_gen, cmd_gradcheck, cmd_inspect, cmd_train, ExperimentError, RunConfig, Task,
    COMPLEX_FILE,
};
use simplicial_attention::nn::{Activation, Fault};
use simplicial_attention::san::Architecture;

#[derive(Parser)]
#[command(name = "san", version, about = "Simplicial attention networks on edge flows and simplicial data")]
struct Cli {
    /// JSON run configuration; task defaults are used when absent.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the run seed and every generator seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory for `gen`, `train` and `decompose`.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Worker threads; 1 gives bit-identical reruns.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct TaskArgs {
    /// trajectory or mdi; ignored when --config is given.
    #[arg(long, default_value = "trajectory", value_parser = parse_task)]
    task: Task,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset into --out-dir.
    Gen {
        #[command(flatten)]
        task: TaskArgs,
        /// Sample points of the flow domain.
        #[arg(long)]
        points: Option<usize>,
        /// Training trajectories.
        #[arg(long)]
        train: Option<usize>,
        /// Test trajectories.
        #[arg(long)]
        test: Option<usize>,
        /// Fraction of hidden values in the imputation task.
        #[arg(long)]
        miss: Option<f64>,
        /// Simplex order carrying the imputation values.
        #[arg(long)]
        order: Option<usize>,
    },
    /// Counts and Laplacian spectra of a complex file or dataset directory.
    Inspect {
        /// complex.txt or a directory written by `gen`.
        path: PathBuf,
    },
    /// Train a model; writes run.json, metrics.csv and checkpoint.json.
    Train {
        #[command(flatten)]
        task: TaskArgs,
        /// san, san-no-harmonic, scnn, snn, sat or gat.
        #[arg(long, value_parser = parse_arch)]
        arch: Option<Architecture>,
        /// Dataset directory written by `gen`.
        #[arg(long)]
        data: Option<PathBuf>,
        /// Overrides max_epochs.
        #[arg(long)]
        epochs: Option<usize>,
    },
    /// Score a checkpoint on a dataset directory or on its own regenerated data.
    Eval {
        checkpoint: PathBuf,
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Finite-difference check of every parameter gradient.
    Gradcheck {
        #[command(flatten)]
        task: TaskArgs,
        /// san, san-no-harmonic, scnn, snn, sat or gat.
        #[arg(long, value_parser = parse_arch)]
        arch: Option<Architecture>,
        /// id, relu or tanh for every layer.
        #[arg(long, value_parser = parse_activation)]
        activation: Option<Activation>,
        /// Complex with at most 30 edges; a small built-in complex otherwise.
        #[arg(long)]
        complex: Option<PathBuf>,
        #[arg(long, default_value_t = 1e-4)]
        tolerance: f64,
        /// Hidden widths above this are narrowed for the check.
        #[arg(long, default_value_t = 8)]
        max_width: usize,
        /// Scale one backward rule, `op:factor`.
        #[arg(long, hide = true, value_parser = parse_fault)]
        inject_fault: Option<Fault>,
    },
    /// Hodge decomposition of signals on a complex, written to --out-dir.
    Decompose {
        complex: PathBuf,
        /// Whitespace-separated rows, one per simplex.
        signal: PathBuf,
        #[arg(long, default_value_t = 1)]
        order: usize,
    },
}

fn parse_task(s: &str) -> Result<Task, String> {
    Task::parse(s).ok_or_else(|| format!("unknown task `{s}` (trajectory, mdi)"))
}

fn parse_arch(s: &str) -> Result<Architecture, String> {
    Architecture::parse(s).ok_or_else(|| {
        let names: Vec<&str> = Architecture::ALL.iter().map(|a| a.name()).collect();
        format!("unknown architecture `{s}` ({})", names.join(", "))
    })
}

fn parse_activation(s: &str) -> Result<Activation, String> {
    match s {
        "id" | "identity" => Ok(Activation::Identity),
        "relu" => Ok(Activation::Relu),
        "tanh" => Ok(Activation::Tanh),
        _ => Err(format!("unknown activation `{s}` (id, relu, tanh)")),
    }
}

fn parse_fault(s: &str) -> Result<Fault, String> {
    let (op, factor) = s.split_once(':').ok_or("expected op:factor")?;
    let factor = factor.parse().map_err(|e| format!("{e}"))?;
    Ok(Fault { op: Box::leak(op.to_owned().into_boxed_str()), factor })
}

fn base_config(cli: &Cli, task: Task) -> Result<RunConfig, ExperimentError> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default_for(task, cli.seed.unwrap_or(0)),
    };
    if let Some(seed) = cli.seed {
        config.set_seed(seed);
    }
    Ok(config)
}

/// Caps every hidden width, keeping the input and output widths.
fn narrow_hidden(config: &mut RunConfig, max_width: usize) {
    let layers = &mut config.model.layers;
    let last = layers.len().saturating_sub(1);
    for i in 0..last {
        layers[i].f_out = layers[i].f_out.min(max_width);
        layers[i + 1].f_in = layers[i].out_width();
    }
}

fn out_dir(cli: &Cli, default: &str) -> PathBuf {
    cli.out_dir.clone().unwrap_or_else(|| PathBuf::from(default))
}

fn emit<T: Serialize>(value: &T) -> Result<(), ExperimentError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| ExperimentError::Io(e.to_string()))?;
    println!("{text}");
    Ok(())
}

fn run(cli: &Cli) -> Result<(), ExperimentError> {
    match &cli.command {
        Command::Gen { task, points, train, test, miss, order } => {
            let mut config = base_config(cli, task.task)?;
            let flow = &mut config.data.flow;
            flow.n_points = points.unwrap_or(flow.n_points);
            flow.n_train = train.unwrap_or(flow.n_train);
            flow.n_test = test.unwrap_or(flow.n_test);
            let mdi = &mut config.data.mdi;
            mdi.missing_fraction = miss.unwrap_or(mdi.missing_fraction);
            mdi.order = order.unwrap_or(mdi.order);
            emit(&cmd_gen(&config, &out_dir(cli, "data"))?)
        }
        Command::Inspect { path } => {
            let file = if path.is_dir() { path.join(COMPLEX_FILE) } else { path.clone() };
            emit(&cmd_inspect(&file)?)
        }
        Command::Train { task, arch, data, epochs } => {
            let mut config = base_config(cli, task.task)?;
            config.arch = arch.unwrap_or(config.arch);
            config.optim.max_epochs = epochs.unwrap_or(config.optim.max_epochs);
            if data.is_some() {
                config.data.dir.clone_from(data);
            }
            emit(&cmd_train(&config, &out_dir(cli, "run"))?)
        }
        Command::Eval { checkpoint, data } => emit(&cmd_eval(checkpoint, data.as_deref())?),
        Command::Gradcheck { task, arch, activation, complex, tolerance, max_width, inject_fault } => {
            let mut config = base_config(cli, task.task)?;
            config.arch = arch.unwrap_or(config.arch);
            if let Some(act) = activation {
                config.model.layers.iter_mut().for_each(|l| l.activation = *act);
            }
            narrow_hidden(&mut config, (*max_width).max(1));
            let report = cmd_gradcheck(&config, complex.as_deref(), *tolerance, *inject_fault)?;
            emit(&report)?;
            if report.passed {
                Ok(())
            } else {
                Err(ExperimentError::Numeric(format!(
                    "gradient check failed: max relative error {:.3e} > {tolerance:.1e}",
                    report.max_relative_error
                )))
            }
        }
        Command::Decompose { complex, signal, order } => {
            emit(&cmd_decompose(complex, signal, *order, &out_dir(cli, "decomposition"))?)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads.max(1)).build_global() {
        eprintln!("error: thread pool: {e}");
        return ExitCode::from(2);
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

//! `iblab`: command-line front end for the bottleneck laboratory.
//!
//! Every subcommand writes CSV plot data and a JSON result into `--out`.
//! Exit status is 0 on success, 1 on a numerical failure and 2 on a
//! configuration error.

// Argument checks are written `!(x > 0.0)` on purpose so that NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

/// `println!` that tolerates a closed stdout, as when piped into `head`.
macro_rules! say {
    ($($arg:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

mod commands;
mod config;
mod error;
mod output;
mod sweep;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use iblab::encoder::Objective;
use iblab::manifold::Metric;
use iblab::tasks::TaskKind;

use crate::config::{
    overlay_file, BatchSource, ChainConfig, CurveConfig, EffdimConfig, MssConfig, Preset, SigregConfig, SolveConfig,
    TrainRunConfig,
};
use crate::error::Result;
use crate::output::OutDir;

#[derive(Parser, Debug)]
#[command(
    name = "iblab",
    version,
    about = "Information Bottleneck solvers, sweeps and trainers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Directory receiving the artifacts.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,

    /// JSON object of configuration fields; flags given on the command line
    /// take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Upper bound on concurrently running sweep jobs.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// List the built-in tasks with their information constants.
    Tasks,
    /// Solve the bottleneck at one beta.
    Solve(SolveArgs),
    /// Trace the bottleneck curve over a beta grid with warm starts.
    Curve(CurveArgs),
    /// Minimal sufficient statistic of a task.
    Mss(MssArgs),
    /// Covering-number dimension of a task's predictive manifold.
    Effdim(EffdimArgs),
    /// Sample the Gaussian-to-simplex chain.
    Chain(ChainArgs),
    /// Test a batch for isotropic Gaussianity with random projections.
    SigregTest(SigregArgs),
    /// Train Dirichlet encoders over a grid of beta, K and seeds.
    Train(TrainArgs),
}

fn parse_metric(s: &str) -> std::result::Result<Metric, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string()))
        .map_err(|_| format!("unknown metric `{s}`; expected hellinger, total_variation or kl_symmetrized"))
}

/// Solver flags shared by `solve` and `curve`.
#[derive(Args, Debug)]
struct SolverArgs {
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    n_latent: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    init_noise: Option<f64>,
    #[arg(long)]
    tau_mss: Option<f64>,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[arg(long)]
    task: Option<TaskKind>,
    #[arg(long)]
    beta: Option<f64>,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Args, Debug)]
struct CurveArgs {
    #[arg(long)]
    task: Option<TaskKind>,
    /// Comma-separated beta grid.
    #[arg(long, value_delimiter = ',')]
    betas: Option<Vec<f64>>,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Args, Debug)]
struct MssArgs {
    #[arg(long)]
    task: Option<TaskKind>,
    #[arg(long)]
    tau_mss: Option<f64>,
}

#[derive(Args, Debug)]
struct EffdimArgs {
    #[arg(long)]
    task: Option<TaskKind>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_parser = parse_metric)]
    metric: Option<Metric>,
    #[arg(long)]
    scale_count: Option<usize>,
    #[arg(long)]
    decades: Option<f64>,
    #[arg(long)]
    lipschitz_pairs: Option<usize>,
}

#[derive(Args, Debug)]
struct ChainArgs {
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug)]
struct SigregArgs {
    #[arg(long, value_enum)]
    source: Option<BatchSource>,
    /// CSV file of rows, used with `--source file`.
    #[arg(long)]
    input: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replicates: Option<usize>,
    #[arg(long)]
    null_seed: Option<u64>,
}

#[derive(Args, Debug)]
struct TrainArgs {
    /// Starting parameter set, applied before `--config` and flags.
    #[arg(long, value_enum)]
    preset: Option<Preset>,
    #[arg(long)]
    task: Option<TaskKind>,
    #[arg(long)]
    objective: Option<Objective>,
    #[arg(long, value_delimiter = ',')]
    betas: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    ks: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    step: Option<f64>,
    #[arg(long)]
    clip: Option<f64>,
    #[arg(long)]
    init_scale: Option<f64>,
    #[arg(long)]
    bins: Option<usize>,
    #[arg(long)]
    harmonics: Option<usize>,
    #[arg(long)]
    synthetic_points: Option<usize>,
    #[arg(long)]
    synthetic_seed: Option<u64>,
    #[arg(long)]
    eval_samples: Option<usize>,
    #[arg(long)]
    eval_every: Option<usize>,
}

/// Copies every flag that was given onto the configuration.
macro_rules! overlay {
    ($cfg:expr, $args:expr; $($field:ident),* $(,)?) => {
        $( if let Some(v) = $args.$field { $cfg.$field = v; } )*
    };
}

macro_rules! overlay_solver {
    ($cfg:expr, $s:expr) => {
        overlay!($cfg, $s; tol, max_iters, seed, init_noise, tau_mss);
        if let Some(n) = $s.n_latent {
            $cfg.n_latent = Some(n);
        }
    };
}

fn run(cli: Cli) -> Result<()> {
    let file = cli.config.as_deref();
    let out = OutDir::create(&cli.out)?;
    match cli.command {
        Command::Tasks => commands::tasks(&out),
        Command::Solve(a) => {
            let mut c = overlay_file(SolveConfig::default(), file)?;
            overlay!(c, a; task, beta);
            overlay_solver!(c, a.solver);
            commands::solve(c, &out)
        }
        Command::Curve(a) => {
            let mut c = overlay_file(CurveConfig::default(), file)?;
            overlay!(c, a; task, betas);
            overlay_solver!(c, a.solver);
            commands::curve(c, &out)
        }
        Command::Mss(a) => {
            let mut c = overlay_file(MssConfig::default(), file)?;
            overlay!(c, a; task, tau_mss);
            commands::mss(c, &out)
        }
        Command::Effdim(a) => {
            let mut c = overlay_file(EffdimConfig::default(), file)?;
            overlay!(c, a; task, samples, seed, metric, scale_count, decades, lipschitz_pairs);
            commands::effdim(c, &out)
        }
        Command::Chain(a) => {
            let mut c = overlay_file(ChainConfig::default(), file)?;
            overlay!(c, a; k, n, seed);
            commands::chain(c, &out)
        }
        Command::SigregTest(a) => {
            let mut c = overlay_file(SigregConfig::default(), file)?;
            overlay!(c, a; source, n, dim, m, seed, replicates, null_seed);
            if a.input.is_some() {
                c.input = a.input;
            }
            commands::sigreg_test(c, &out)
        }
        Command::Train(a) => {
            let base = a.preset.map_or_else(TrainRunConfig::default, TrainRunConfig::preset);
            let mut c = overlay_file(base, file)?;
            overlay!(c, a; task, betas, ks, seeds, samples, batch_size, epochs, step, clip, init_scale,
                bins, harmonics, synthetic_points, synthetic_seed, eval_samples, eval_every);
            if a.objective.is_some() {
                c.objective = a.objective;
            }
            commands::train(c, &out, cli.jobs)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("iblab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

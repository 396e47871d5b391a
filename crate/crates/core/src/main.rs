use autosc::cli::{
    bench_csv, cmd_bench, cmd_cluster, cmd_render, cmd_synth, parse_solver, BenchArgs,
    ClusterArgs, CliError, RenderArgs, SynthArgs,
};
use autosc::data::Params;
use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

/// Joint cluster-number estimation and subspace clustering.
#[derive(Parser)]
#[command(name = "autosc", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct SolverOpts {
    /// Similarity solver: lsr, omp or greedy-n.
    #[arg(long, default_value = "lsr")]
    solver: String,
    /// Neighbors preserved per sample.
    #[arg(long, default_value_t = 8)]
    m: usize,
    /// Self-representation trade-off (lsr only).
    #[arg(long, default_value_t = 0.1)]
    lambda: f64,
    /// Model-selection reward trade-off.
    #[arg(long, default_value_t = 1.0)]
    lambda_m: f64,
    /// Fusion reward trade-off.
    #[arg(long, default_value_t = 1.0)]
    lambda_f: f64,
}

impl SolverOpts {
    fn params(&self) -> Result<Params, CliError> {
        Ok(Params {
            m: self.m,
            lambda_reg: self.lambda,
            lambda_m: self.lambda_m,
            lambda_f: self.lambda_f,
            solver: parse_solver(&self.solver)?,
        })
    }
}

#[derive(Subcommand)]
enum Command {
    /// Cluster a CSV dataset (rows = features, columns = samples).
    Cluster {
        /// Dataset CSV path.
        #[arg(long)]
        input: PathBuf,
        /// Optional ground-truth labels (one integer per line) for metrics.
        #[arg(long)]
        labels: Option<PathBuf>,
        #[command(flatten)]
        solver: SolverOpts,
        /// Accept only cycles in ascending index order.
        #[arg(long)]
        strict_orientation: bool,
        /// Write the report here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a synthetic union-of-subspaces dataset.
    Synth {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        dim: usize,
        /// Samples per cluster.
        #[arg(long)]
        per: usize,
        /// Ambient dimensionality.
        #[arg(long)]
        ambient: usize,
        /// Noise scale relative to unit-norm signals.
        #[arg(long, default_value_t = 0.0)]
        sigma: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "X.csv")]
        out_x: PathBuf,
        #[arg(long, default_value = "gt.csv")]
        out_gt: PathBuf,
    },
    /// Sweep (k, m) configurations over seeded synthetic trials; CSV on
    /// standard output.
    Bench {
        /// Comma-separated true cluster counts.
        #[arg(long, value_delimiter = ',', default_value = "5")]
        k_list: Vec<usize>,
        /// Comma-separated m values.
        #[arg(long, value_delimiter = ',', default_value = "8")]
        m_list: Vec<usize>,
        #[arg(long, default_value_t = 10)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 4)]
        dim: usize,
        #[arg(long, default_value_t = 50)]
        per: usize,
        #[arg(long, default_value_t = 30)]
        ambient: usize,
        #[arg(long, default_value_t = 0.01)]
        sigma: f64,
        /// Similarity solver: lsr, omp or greedy-n.
        #[arg(long, default_value = "lsr")]
        solver: String,
        #[arg(long, default_value_t = 0.1)]
        lambda: f64,
        #[arg(long, default_value_t = 1.0)]
        lambda_f: f64,
    },
    /// Render a similarity matrix (or a dataset via --solver) as binary PGM.
    Render {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Treat the input as a dataset and solve with this solver first.
        #[arg(long)]
        solver: Option<String>,
        #[arg(long, default_value_t = 8)]
        m: usize,
        #[arg(long, default_value_t = 0.1)]
        lambda: f64,
    },
}

fn run(cli: Cli) -> Result<ExitCode, CliError> {
    match cli.command {
        Command::Cluster {
            input,
            labels,
            solver,
            strict_orientation,
            out,
        } => {
            let args = ClusterArgs {
                input,
                labels,
                params: solver.params()?,
                strict_orientation,
                out,
            };
            let report = cmd_cluster(&args)?;
            let text = report.to_text();
            match &args.out {
                Some(path) => std::fs::write(path, text)
                    .map_err(|e| CliError::BadInput(format!("{}: {e}", path.display())))?,
                None => print!("{text}"),
            }
            Ok(if report.degenerate_fallback {
                ExitCode::from(3)
            } else {
                ExitCode::SUCCESS
            })
        }
        Command::Synth {
            k,
            dim,
            per,
            ambient,
            sigma,
            seed,
            out_x,
            out_gt,
        } => {
            cmd_synth(&SynthArgs {
                k,
                dim,
                per_cluster: per,
                ambient_dim: ambient,
                sigma,
                seed,
                out_x,
                out_gt,
            })?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Bench {
            k_list,
            m_list,
            trials,
            seed,
            dim,
            per,
            ambient,
            sigma,
            solver,
            lambda,
            lambda_f,
        } => {
            let rows = cmd_bench(&BenchArgs {
                k_list,
                m_list,
                trials,
                seed,
                dim,
                per_cluster: per,
                ambient_dim: ambient,
                sigma,
                solver: parse_solver(&solver)?,
                lambda_reg: lambda,
                lambda_f,
            })?;
            print!("{}", bench_csv(&rows));
            Ok(ExitCode::SUCCESS)
        }
        Command::Render {
            input,
            out,
            solver,
            m,
            lambda,
        } => {
            let solver = solver.as_deref().map(parse_solver).transpose()?;
            cmd_render(&RenderArgs {
                input,
                out,
                solver,
                m,
                lambda_reg: lambda,
            })?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(CliError::BadInput(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

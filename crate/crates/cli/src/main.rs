//! basedlab: a desk-scale laboratory for the BasedAI network's quantitative
//! mechanisms — emissions, staking consensus, work routing, encryption step
//! costs, dynamic quantization, and a deterministic scenario simulator.

mod commands;
mod errors;
mod io;
mod scenario;

use std::path::PathBuf;

use basedlab_core::quant::SelectionMode;
use basedlab_core::routing::{DistanceAggregate, RoutingMetric};
use clap::{Parser, Subcommand, ValueEnum};

use commands::cost_cmd::{CostArgs, ModeArg};
use commands::econ_cmd::EconCommand;
use commands::quant_cmd::{HeadsArgs, QatArgs, QuantizeArgs};
use commands::route_cmd::RouteArgs;
use commands::simulate_cmd::SimulateArgs;
use errors::AppResult;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Text,
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AggregateArg {
    Min,
    Mean,
}

impl From<AggregateArg> for DistanceAggregate {
    fn from(value: AggregateArg) -> Self {
        match value {
            AggregateArg::Min => DistanceAggregate::Min,
            AggregateArg::Mean => DistanceAggregate::Mean,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MetricArg {
    Euclidean,
    Mahalanobis,
}

impl From<MetricArg> for RoutingMetric {
    fn from(value: MetricArg) -> Self {
        match value {
            MetricArg::Euclidean => RoutingMetric::Euclidean,
            MetricArg::Mahalanobis => RoutingMetric::Mahalanobis,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SelectModeArg {
    Auto,
    Exact,
    Greedy,
}

impl From<SelectModeArg> for SelectionMode {
    fn from(value: SelectModeArg) -> Self {
        match value {
            SelectModeArg::Auto => SelectionMode::Auto,
            SelectModeArg::Exact => SelectionMode::Exact,
            SelectModeArg::Greedy => SelectionMode::Greedy,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "basedlab",
    version,
    about = "Deterministic laboratory for BasedAI network economics, consensus, routing, encryption step costs, and quantization"
)]
struct Cli {
    /// Output format where the subcommand supports it.
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Text)]
    format: OutputFormat,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Token economics: emission table, burn audit, pricing, APY.
    Econ {
        #[command(subcommand)]
        command: EconCommand,
    },
    /// Step costs of an arithmetic expression under three encryption modes.
    Cost {
        /// Expression over lowercase variables, '+', '*' (or 'x-sign'), and
        /// parentheses, e.g. "(a+b)+(c*d)+(e*f)".
        expression: String,
        #[arg(long, value_enum, default_value_t = ModeArg::All)]
        mode: ModeArg,
        /// Print the fused execution plan.
        #[arg(long)]
        plan: bool,
        /// Charge one encryption per distinct variable instead of per
        /// occurrence.
        #[arg(long)]
        distinct_leaves: bool,
    },
    /// Squeeze a CSV matrix: adaptive scaling then row quantization.
    Quantize {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = basedlab_core::defaults::QUANT_LEVELS)]
        levels: u32,
        #[arg(long, default_value_t = basedlab_core::defaults::ADAPTIVE_THRESHOLD)]
        threshold: f64,
        #[arg(long, default_value_t = basedlab_core::defaults::SCALE_FACTOR)]
        alpha: f64,
        /// Also write the quantized matrix to a file.
        #[arg(long = "out")]
        output: Option<PathBuf>,
        /// Include per-row deviation and scaling diagnostics.
        #[arg(long)]
        stats: bool,
    },
    /// Quantization-aware-training round-trip error report for a CSV matrix.
    Qat {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        mu: f64,
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        #[arg(long, default_value_t = 1.0)]
        qscale: f64,
        #[arg(long, default_value_t = 0.0)]
        qzero: f64,
    },
    /// Route work items to the nearest peers by embedding distance.
    Route {
        /// CSV of item embeddings, one row per item.
        #[arg(long)]
        items: PathBuf,
        /// JSON list of {peer_id, previous_embeddings}.
        #[arg(long)]
        peers: PathBuf,
        #[arg(long, value_enum, default_value_t = AggregateArg::Min)]
        aggregate: AggregateArg,
        #[arg(long, value_enum, default_value_t = MetricArg::Euclidean)]
        metric: MetricArg,
        /// Include the covariance matrix of the item embeddings.
        #[arg(long)]
        covariance: bool,
        /// Include per-item distance vectors to every peer history.
        #[arg(long)]
        radii: bool,
        #[arg(long = "out")]
        output: Option<PathBuf>,
    },
    /// Evaluate the trust/consensus pipeline on a JSON instance.
    Consensus {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Score and select attention heads under a computational budget.
    Heads {
        /// Comma-separated significance scores.
        #[arg(long)]
        scores: Option<String>,
        /// Comma-separated per-head costs (defaults to 1 each).
        #[arg(long)]
        costs: Option<String>,
        /// Budget; total selected cost must stay strictly below it.
        #[arg(long)]
        budget: f64,
        #[arg(long, value_enum, default_value_t = SelectModeArg::Auto)]
        mode: SelectModeArg,
        /// Score heads from a JSON head spec instead of --scores.
        #[arg(long)]
        spec: Option<PathBuf>,
        /// Evaluation input CSV (with --spec).
        #[arg(long = "in")]
        input: Option<PathBuf>,
        /// Reference output CSV (with --spec).
        #[arg(long)]
        reference: Option<PathBuf>,
        /// Also report heads with significance strictly above this value.
        #[arg(long)]
        theta: Option<f64>,
    },
    /// Run a scenario file through the network simulator.
    Simulate {
        #[arg(long)]
        scenario: PathBuf,
        /// Directory for events.jsonl, summary.csv, credits.csv, digest.txt.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn dispatch(cli: Cli) -> AppResult<String> {
    match cli.command {
        Command::Econ { command } => commands::econ_cmd::run(command, cli.format),
        Command::Cost {
            expression,
            mode,
            plan,
            distinct_leaves,
        } => commands::cost_cmd::run(
            CostArgs {
                expression,
                mode,
                plan,
                distinct_leaves,
            },
            cli.format,
        ),
        Command::Quantize {
            input,
            levels,
            threshold,
            alpha,
            output,
            stats,
        } => commands::quant_cmd::run_quantize(
            QuantizeArgs {
                input,
                levels,
                threshold,
                alpha,
                output,
                stats,
            },
            cli.format,
        ),
        Command::Qat {
            input,
            mu,
            sigma,
            qscale,
            qzero,
        } => commands::quant_cmd::run_qat(
            QatArgs {
                input,
                mu,
                sigma,
                qscale,
                qzero,
            },
            cli.format,
        ),
        Command::Route {
            items,
            peers,
            aggregate,
            metric,
            covariance,
            radii,
            output,
        } => commands::route_cmd::run(
            RouteArgs {
                items,
                peers,
                aggregate: aggregate.into(),
                metric: metric.into(),
                covariance,
                radii,
                output,
            },
            cli.format,
        ),
        Command::Consensus { input } => commands::consensus_cmd::run(input, cli.format),
        Command::Heads {
            scores,
            costs,
            budget,
            mode,
            spec,
            input,
            reference,
            theta,
        } => commands::quant_cmd::run_heads(
            HeadsArgs {
                scores,
                costs,
                budget,
                mode: mode.into(),
                spec,
                input,
                reference,
                theta,
            },
            cli.format,
        ),
        Command::Simulate { scenario, out, seed } => {
            commands::simulate_cmd::run(SimulateArgs { scenario, out, seed })
        }
    }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("BASEDLAB_LOG", "warn"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(output) => {
            print!("{output}");
            if !output.ends_with('\n') {
                println!();
            }
        }
        Err(error) => {
            eprintln!("{error}");
            std::process::exit(error.exit_code());
        }
    }
}

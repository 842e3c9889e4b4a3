//! `graves`: extract program graphs, train and apply the verifier ranker,
//! evaluate selectors and explain predictions.

mod commands;
mod config;
mod stats;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use graves_core::graphio::{EdgeSet, PropertyKind};

#[derive(Parser, Debug)]
#[command(name = "graves", version, about)]
struct Cli {
    /// Worker threads for per-file and per-instance work.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Seed for every random choice the command makes.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Log progress (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse C sources into program-graph JSON files and report corpus statistics.
    Extract(ExtractArgs),
    /// Train a ranking model on labelled graphs.
    Train(TrainArgs),
    /// Rank the portfolio for one graph.
    Rank(RankArgs),
    /// Score the model and baseline selectors on labelled graphs.
    Evaluate(EvaluateArgs),
    /// Find the edges that drive a prediction.
    Explain(ExplainArgs),
}

#[derive(Args, Debug)]
pub struct ExtractArgs {
    /// Source files, or directories searched for `.c` and `.i` files.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    #[arg(long, short)]
    pub out_dir: PathBuf,
    /// Property the programs are verified against.
    #[arg(long, default_value = "reach-safety")]
    pub property: PropertyKind,
    /// Vocabulary manifest; the built-in one by default.
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    /// Reject graphs with more nodes than this.
    #[arg(long)]
    pub max_nodes: Option<usize>,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    /// TOML run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Directory of graph JSON files.
    #[arg(long)]
    pub graphs: PathBuf,
    /// Verifier results CSV.
    #[arg(long)]
    pub labels: PathBuf,
    /// Where to write the model file.
    #[arg(long, short)]
    pub out: PathBuf,
    /// Training history JSON; `<out>.history.json` by default.
    #[arg(long)]
    pub history: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct RankArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub graph: PathBuf,
    /// Property to rank for; replaces the one stored in the graph.
    #[arg(long)]
    pub property: PropertyKind,
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    /// Also write the ranking as JSON here.
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Directory of graph JSON files to evaluate on.
    #[arg(long)]
    pub graphs: PathBuf,
    #[arg(long)]
    pub labels: PathBuf,
    /// Cut-offs for the top-K error; 1, 3 and 5 (up to the portfolio size)
    /// when absent.
    #[arg(long, value_delimiter = ',')]
    pub k: Vec<usize>,
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    /// Graphs whose labels define the static baselines.
    #[arg(long)]
    pub train_graphs: Option<PathBuf>,
    /// Add a selector that ranks by the true labels.
    #[arg(long)]
    pub oracle: bool,
    /// Also write the reports as JSON here.
    #[arg(long)]
    pub json: Option<PathBuf>,
    /// Time limit used to turn raw results into labels.
    #[arg(long, default_value_t = 900.0)]
    pub time_limit: f64,
}

#[derive(Args, Debug)]
pub struct ExplainArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    pub iters: usize,
    #[arg(long, default_value_t = 0.01)]
    pub lr: f64,
    #[arg(long, default_value_t = 0.05)]
    pub size_weight: f64,
    #[arg(long, default_value_t = 0.1)]
    pub entropy_weight: f64,
    /// Restrict the mask to these edge sets (repeatable).
    #[arg(long = "edge-set")]
    pub edge_sets: Vec<EdgeSet>,
    /// Write the report JSON here.
    #[arg(long)]
    pub json: Option<PathBuf>,
    /// Write a Graphviz rendering here.
    #[arg(long)]
    pub dot: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    let ctx = commands::Context {
        jobs: cli.jobs,
        seed: cli.seed,
    };
    let result = graves_core::exec::with_jobs(cli.jobs, move || match cli.command {
        Command::Extract(a) => commands::extract(&ctx, &a),
        Command::Train(a) => commands::train(&ctx, &a),
        Command::Rank(a) => commands::rank(&ctx, &a),
        Command::Evaluate(a) => commands::evaluate(&ctx, &a),
        Command::Explain(a) => commands::explain(&ctx, &a),
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

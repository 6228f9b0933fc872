use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::columns::ColumnDecl;

#[derive(Debug, Parser)]
#[command(name = "vinelogit", version, about = "Logistic regression with vine-copula interaction terms")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a model to a CSV file and write it as JSON.
    Fit(FitArgs),
    /// Score a CSV file with a fitted model.
    Predict(PredictArgs),
    /// Draw one training set from a simulation scenario.
    Simulate(SimulateArgs),
    /// Compare methods over simulated replicates.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct SelectionArgs {
    /// Minimum log-likelihood gain for accepting a copula term.
    #[arg(long, default_value_t = 2.0, allow_negative_numbers = true)]
    pub tau: f64,
    /// Deepest vine tree that may receive edges.
    #[arg(long = "max-trees", default_value_t = 4)]
    pub max_trees: usize,
    /// Candidate copula families, comma separated.
    #[arg(long, default_value = "gaussian,clayton,gumbel")]
    pub families: String,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Training data with a header row.
    pub data: PathBuf,
    /// Column declaration `name:kind`; kinds are continuous, binary, count,
    /// categorical, response and ignore.
    #[arg(long = "col", value_name = "NAME:KIND")]
    pub columns: Vec<ColumnDecl>,
    /// TOML file with a `[columns]` table of `name = "kind"`.
    #[arg(long)]
    pub schema: Option<PathBuf>,
    #[command(flatten)]
    pub selection: SelectionArgs,
    /// Where to write the model JSON.
    #[arg(long, default_value = "model.json")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    pub model: PathBuf,
    pub data: PathBuf,
    /// Output CSV; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Scenario TOML; built-in defaults when absent.
    pub scenario: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output CSV; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Scenario TOML; built-in defaults when absent.
    pub scenario: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub replicates: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    pub tau: Option<f64>,
    #[arg(long = "max-trees")]
    pub max_trees: Option<usize>,
    #[arg(long)]
    pub families: Option<String>,
    /// Output CSV; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

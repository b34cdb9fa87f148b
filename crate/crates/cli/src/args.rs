use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "sepreg", version, about = "Exact polynomial relations on function graphs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Find the minimal polynomial relation between the variables and f.
    Annihilate(Common),
    /// Recover f(x, y) = P/Q from its slices.
    Reconstruct {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 25)]
        slices: usize,
        /// Use a single joint search instead of the slice pipeline.
        #[arg(long)]
        direct: bool,
    },
    /// Report the annihilator index of x -> f(x, y) for sampled y.
    SliceScan {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 25)]
        slices: usize,
    },
    /// Check that a relation vanishes on the graph at random points.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Polynomial in x1.., y1.., t.
        relation: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Output {
    Json,
    Text,
}

#[derive(Debug, Args)]
pub struct Common {
    /// `q` for the rationals, `fp:<p>` for a prime field.
    #[arg(long, default_value = "q")]
    pub field: String,
    /// Oracle expression, e.g. "x1*y1/(1+x1^2)".
    #[arg(long, conflicts_with = "table", required_unless_present = "table")]
    pub expr: Option<String>,
    /// CSV table with header x1,..,xm[,y1,..,yk],value.
    #[arg(long)]
    pub table: Option<PathBuf>,
    /// Number of x variables (inferred when omitted).
    #[arg(long)]
    pub x_vars: Option<usize>,
    /// Number of y variables (inferred when omitted).
    #[arg(long)]
    pub y_vars: Option<usize>,
    /// Largest power of t in the search space.
    #[arg(long, default_value_t = 1)]
    pub t_cap: u32,
    #[arg(long, default_value_t = 200)]
    pub n_max: usize,
    /// Initial sample size.
    #[arg(long, default_value_t = 16)]
    pub samples: usize,
    /// Sample growth factor per round, e.g. 2 or 3/2.
    #[arg(long, default_value = "2")]
    pub grow: String,
    /// Rounds with identical results required before verification.
    #[arg(long, default_value_t = 3)]
    pub window: usize,
    #[arg(long, default_value_t = 32)]
    pub verify_trials: usize,
    /// Integer coordinates are drawn from [-N, N].
    #[arg(long, default_value_t = 1_000_000)]
    pub range: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// `integers`, `uniform` (rationals) or `file:<path>`.
    #[arg(long)]
    pub a_sampler: Option<String>,
    #[arg(long, value_enum, default_value_t = Output::Json)]
    pub output: Output,
}

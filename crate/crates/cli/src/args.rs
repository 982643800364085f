use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "womble", version, about = "Bayesian boundary detection for areal disease counts")]
pub struct Cli {
    /// Print progress to stderr.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit the boundary model and write summaries, risks, boundaries and effects.
    #[command(args_override_self = true)]
    Fit(FitArgs),
    /// Run the simulation study and write the agreement scorecard.
    #[command(args_override_self = true)]
    Simulate(SimulateArgs),
    /// Moran's I permutation test on the residuals of a completed fit.
    #[command(args_override_self = true)]
    Diagnose(DiagnoseArgs),
    /// Boundary likelihood values from the model with every border kept.
    #[command(args_override_self = true)]
    Blv(BlvArgs),
}

#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    /// Areas CSV with header `area_id,y,E,<metrics>`.
    #[arg(long)]
    pub areas: PathBuf,
    /// Border pair list (`area_id_1,area_id_2`) or square 0/1 matrix.
    #[arg(long)]
    pub adjacency: PathBuf,
    /// GeoJSON polygons keyed by `area_id`, used for the boundary overlay.
    #[arg(long)]
    pub geojson: Option<PathBuf>,
    /// Comma-separated metric columns; defaults to every column after `E`.
    #[arg(long)]
    pub metrics: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct ChainArgs {
    #[arg(long, default_value_t = 5)]
    pub chains: usize,
    #[arg(long, default_value_t = 40_000)]
    pub burnin: usize,
    /// Post-burn-in iterations per chain.
    #[arg(long, default_value_t = 10_000)]
    pub keep: usize,
    #[arg(long, default_value_t = 1)]
    pub thin: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.5)]
    pub max_boundary_fraction: f64,
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub chain: ChainArgs,
    /// Hold every coefficient at zero and flag borders by BLV (`c1=<cutoff>`
    /// or `c2=<percent>`).
    #[arg(long)]
    pub baseline_blv: Option<String>,
    #[arg(long)]
    pub out: PathBuf,
    /// key=value file; every key mirrors a flag and flags given on the
    /// command line win.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct BlvArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub chain: ChainArgs,
    /// `c1=<cutoff>` or `c2=<percent>`.
    #[arg(long, default_value = "c2=10")]
    pub rule: String,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PairChoice {
    All,
    Adjacent,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    /// Comma-separated block mean offsets.
    #[arg(long, default_value = "0.4")]
    pub k1: String,
    /// Comma-separated metric separations.
    #[arg(long, default_value = "3")]
    pub k2: String,
    #[arg(long, default_value_t = 16)]
    pub rows: usize,
    #[arg(long, default_value_t = 16)]
    pub cols: usize,
    /// User geometry instead of the lattice: CSV `area_id,x,y,group`.
    #[arg(long, requires = "adjacency")]
    pub centroids: Option<PathBuf>,
    #[arg(long, requires = "centroids")]
    pub adjacency: Option<PathBuf>,
    #[arg(long, default_value_t = 20)]
    pub replicates: usize,
    /// Constant expected count per area.
    #[arg(long = "expected", default_value_t = 100.0)]
    pub expected: f64,
    /// Per-area expected counts, CSV `area_id,E`; overrides `--expected`.
    #[arg(long)]
    pub expected_file: Option<PathBuf>,
    #[arg(long, default_value_t = 2.5)]
    pub kappa: f64,
    /// Marginal variance of the simulated log-risk field.
    #[arg(long, default_value_t = womble::simulate::DEFAULT_FIELD_VARIANCE)]
    pub field_variance: f64,
    #[arg(long, default_value_t = 0.5)]
    pub target_correlation: f64,
    #[arg(long, value_enum, default_value_t = PairChoice::All)]
    pub pairs: PairChoice,
    #[command(flatten)]
    pub chain: ChainArgs,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum WeightChoice {
    /// Every border of the contiguity graph.
    All,
    /// Only borders the fit kept (posterior median `w = 1`).
    Fitted,
}

#[derive(Debug, Clone, Args)]
pub struct DiagnoseArgs {
    /// Output directory of a completed `fit`.
    #[arg(long)]
    pub fit: PathBuf,
    /// Override the areas file recorded by the fit.
    #[arg(long)]
    pub areas: Option<PathBuf>,
    /// Override the adjacency file recorded by the fit.
    #[arg(long)]
    pub adjacency: Option<PathBuf>,
    #[arg(long, default_value_t = 10_000)]
    pub permutations: usize,
    /// Defaults to the seed recorded by the fit.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = WeightChoice::All)]
    pub weights: WeightChoice,
    /// Defaults to the fit directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(name = "hidim", version, about = "High-dimensional two-sample tests, covariance tests and count models")]
pub struct Cli {
    /// Master seed; every random quantity derives from it.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, env = "HIDIM_THREADS", default_value_t = 0)]
    pub threads: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a single hypothesis test on data files.
    #[command(subcommand)]
    Test(TestCommand),
    /// Monte Carlo study described by a TOML config.
    Simulate(SimulateArgs),
    /// p-values of projected Hotelling tests over a range of k.
    ScanK(ScanArgs),
    /// Parameter estimation.
    #[command(subcommand)]
    Fit(FitCommand),
}

#[derive(Debug, Args)]
pub struct DataFiles {
    /// First sample (CSV, rows are observations).
    #[arg(long)]
    pub x: PathBuf,
    /// Second sample.
    #[arg(long)]
    pub y: Option<PathBuf>,
    /// Skip the first line of each file.
    #[arg(long)]
    pub header: bool,
}

#[derive(Debug, Subcommand)]
pub enum TestCommand {
    /// Two-sample mean test.
    Mean(MeanArgs),
    /// One-sample structure or two-sample equality test for covariances.
    Covariance(CovarianceArgs),
    /// Two-sample test of multinomial probabilities.
    Multinomial(MultinomialArgs),
}

#[derive(Debug, Args)]
pub struct MeanArgs {
    #[arg(long)]
    pub method: String,
    #[command(flatten)]
    pub files: DataFiles,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Permutations for permutation-calibrated tests.
    #[arg(long, default_value_t = 199)]
    pub permutations: usize,
    /// Random projections averaged by raptt.
    #[arg(long, default_value_t = 50)]
    pub projections: usize,
    /// Null replicates used by raptt's cutoff.
    #[arg(long, default_value_t = 200)]
    pub null_reps: usize,
    #[arg(long, default_value = "gaussian")]
    pub projection_kind: String,
    /// Projected dimension (projected, raptt).
    #[arg(long)]
    pub k: Option<usize>,
    /// Dependence order M for apr.
    #[arg(long, default_value_t = 0)]
    pub order: usize,
    /// Prior scale for the Bayes factor test.
    #[arg(long, default_value_t = 1.0)]
    pub tau0: f64,
    /// Precision plug-in for clx: identity or diagonal.
    #[arg(long, default_value = "diagonal")]
    pub clx_precision: String,
}

#[derive(Debug, Args)]
pub struct CovarianceArgs {
    #[arg(long)]
    pub method: String,
    #[command(flatten)]
    pub files: DataFiles,
    #[arg(long, default_value_t = 199)]
    pub permutations: usize,
}

#[derive(Debug, Args)]
pub struct MultinomialArgs {
    #[arg(long)]
    pub method: String,
    /// Counts of the first sample; several rows are summed.
    #[arg(long)]
    pub x: PathBuf,
    #[arg(long)]
    pub y: PathBuf,
    #[arg(long)]
    pub header: bool,
    #[arg(long, default_value_t = 199)]
    pub permutations: usize,
    /// χ² degrees of freedom for pearson/lrt (default: retained categories − 1).
    #[arg(long)]
    pub df: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Write per-replicate records here as CSV.
    #[arg(long)]
    pub records: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    /// Data mode: first sample.
    #[arg(long, requires = "y")]
    pub x: Option<PathBuf>,
    #[arg(long)]
    pub y: Option<PathBuf>,
    #[arg(long)]
    pub header: bool,
    /// Generator mode: sample sizes of the first group (comma separated).
    #[arg(long, value_delimiter = ',', default_value = "100")]
    pub n: Vec<usize>,
    /// Second group size; defaults to m-ratio · n.
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    pub m_ratio: f64,
    #[arg(long, default_value_t = 50)]
    pub p: usize,
    /// Mean shifts of the second group (comma separated).
    #[arg(long, value_delimiter = ',', default_value = "0")]
    pub delta: Vec<f64>,
    /// identity or diag_uniform.
    #[arg(long, default_value = "diag_uniform")]
    pub sigma: String,
    #[arg(long, default_value_t = 2.0)]
    pub sigma_low: f64,
    #[arg(long, default_value_t = 3.0)]
    pub sigma_high: f64,
    #[arg(long, default_value_t = 1)]
    pub k_min: usize,
    /// Defaults to the largest admissible k over all columns.
    #[arg(long)]
    pub k_max: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum FitCommand {
    /// Dirichlet-multinomial maximum likelihood.
    Dirmult(DirmultArgs),
    /// Banded covariance with cross-validated width.
    Banded(BandedArgs),
}

#[derive(Debug, Args)]
pub struct DirmultArgs {
    /// Count matrix, one vector per row.
    #[arg(long)]
    pub counts: PathBuf,
    #[arg(long)]
    pub header: bool,
    /// ronning or mom.
    #[arg(long, default_value = "ronning")]
    pub init: String,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long, default_value_t = 200)]
    pub max_iter: usize,
}

#[derive(Debug, Args)]
pub struct BandedArgs {
    #[arg(long)]
    pub x: PathBuf,
    #[arg(long)]
    pub header: bool,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    /// Largest band width tried (default p).
    #[arg(long)]
    pub k_max: Option<usize>,
}

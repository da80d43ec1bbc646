use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "bellsim", version, about = "Bell-CHSH analysis and Monte Carlo simulation")]
pub struct Cli {
    /// Output format written to stdout.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,

    /// Flat `key = value` file of long flag names; command-line flags win.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<String>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact joints, correlations and S for a model and settings.
    Analytic(AnalyticArgs),
    /// Monte Carlo run with self-check against the analytic values.
    Simulate(SimulateArgs),
    /// The coin-cutting apparatus with a faulty A(a)→L2 link.
    Coin(CoinArgs),
    /// Sampling and detection loophole calculations.
    Loopholes {
        #[command(subcommand)]
        command: LoopholeCommand,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Qm,
    LhvRef,
}

#[derive(Debug, Clone, Args)]
pub struct SettingsArgs {
    /// Use the settings that maximize S for the entangled pair.
    #[arg(long)]
    pub optimal: bool,
    #[arg(long, allow_hyphen_values = true)]
    pub a: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub b: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub c: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub d: Option<f64>,
    #[arg(long = "a-deg", allow_hyphen_values = true)]
    pub a_deg: Option<f64>,
    #[arg(long = "b-deg", allow_hyphen_values = true)]
    pub b_deg: Option<f64>,
    #[arg(long = "c-deg", allow_hyphen_values = true)]
    pub c_deg: Option<f64>,
    #[arg(long = "d-deg", allow_hyphen_values = true)]
    pub d_deg: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct NoiseArgs {
    /// Flip rate applied to all four channels.
    #[arg(long)]
    pub eps: Option<f64>,
    /// Wing I at setting a (overrides --eps).
    #[arg(long)]
    pub eps1: Option<f64>,
    /// Wing II at setting b (overrides --eps).
    #[arg(long)]
    pub eps2: Option<f64>,
    /// Wing I at setting c (overrides --eps).
    #[arg(long)]
    pub eps3: Option<f64>,
    /// Wing II at setting d (overrides --eps).
    #[arg(long)]
    pub eps4: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct AnalyticArgs {
    #[arg(long, value_enum, default_value_t = ModelArg::Qm)]
    pub model: ModelArg,
    #[command(flatten)]
    pub settings: SettingsArgs,
    #[command(flatten)]
    pub noise: NoiseArgs,
    /// Midpoint quadrature nodes for the hidden-variable average.
    #[arg(long, default_value_t = bellsim_core::models::DEFAULT_RESOLUTION)]
    pub resolution: usize,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub analytic: AnalyticArgs,
    #[arg(long)]
    pub trials: u64,
    #[arg(long, env = "BELLSIM_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Worker count; results do not depend on it.
    #[arg(long)]
    pub shards: Option<usize>,
    /// Non-detection probability on wing I.
    #[arg(long = "delta-a")]
    pub delta_a: Option<f64>,
    /// Non-detection probability on wing II.
    #[arg(long = "delta-b")]
    pub delta_b: Option<f64>,
    /// Detection rates `r1,r2` of two emitted classes (selection demo).
    #[arg(long = "class-rates", value_delimiter = ',')]
    pub class_rates: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Args)]
pub struct CoinArgs {
    /// Drop probability of the A(a)→L2 link.
    #[arg(long)]
    pub eps: f64,
    /// Also simulate this many coins.
    #[arg(long)]
    pub trials: Option<u64>,
    #[arg(long, env = "BELLSIM_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub shards: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum LoopholeCommand {
    /// Probability of a class-balanced detected sample.
    FairSampling {
        /// Emitted pairs N (even).
        #[arg(long)]
        n: u64,
        /// Detected fraction φ; N·φ must be an even integer.
        #[arg(long)]
        phi: f64,
    },
    /// Attainable range of the Δ-rescaled CHSH value.
    SDeltaRange {
        /// Correlations E(a,b),E(a,d),E(c,b),E(c,d).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        corr: Vec<f64>,
        /// Evaluate S for these Δ₁..Δ₄ as well.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        deltas: Option<Vec<f64>>,
    },
    /// Probability that two samples share their hidden variables.
    Overlap {
        #[arg(long)]
        n: u64,
        /// Ascending N_TOT values.
        #[arg(long = "ntot-list", value_delimiter = ',', required = true)]
        ntot_list: Vec<u64>,
    },
    /// Equal flip rate above which noise hides a violation.
    Threshold {
        #[arg(long = "s-ideal")]
        s_ideal: f64,
    },
}

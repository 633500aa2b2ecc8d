//! Command-line front end for qia-core. Every command writes JSON (CSV for exponent curves) to
//! stdout or to `--out`, and maps failures to exit codes: 1 for a failed check or numerical
//! failure, 2 for bad input, 3 for resource limits.

mod commands;
mod inputs;
mod verify;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use qia_core::rmi::OptimizerOpts;

pub use verify::{run_suite, FixtureOutcome};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Core(#[from] qia_core::Error),
    #[error("{0}")]
    Failed(String),
}

pub type Result<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use qia_core::Error as E;
        match self {
            CliError::Input(_) => 2,
            CliError::Failed(_) => 1,
            CliError::Core(e) => match e {
                E::InvalidInput(_) | E::NotPsd(_) | E::DimensionMismatch(_) | E::Unsupported(_) => 2,
                E::ResourceLimit(_) => 3,
                E::NotConverged { .. } | E::DegenerateVariance(_) | E::EquivalenceViolation { .. } => 1,
            },
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "qia", version, about = "Rényi mutual information, error exponents and correlation tests")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalOpts {
    /// Optimizer value-change tolerance.
    #[arg(long, global = true, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long, global = true, default_value_t = 10_000)]
    pub max_iter: usize,
    /// Random restarts of the alternating minimization.
    #[arg(long, global = true, default_value_t = 5)]
    pub restarts: usize,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Enable sandwiched minimized orders below one.
    #[arg(long, global = true)]
    pub allow_experimental: bool,
    /// Worker threads for sweeps (default: logical cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output file instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

impl GlobalOpts {
    pub fn optimizer(&self) -> Result<OptimizerOpts> {
        if !(self.tol > 0.0 && self.tol < 1e-2) {
            return Err(CliError::Input(format!("--tol must lie in (0, 0.01), got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(CliError::Input("--max-iter must be positive".into()));
        }
        Ok(OptimizerOpts {
            tol: self.tol,
            max_iter: self.max_iter,
            restarts: self.restarts,
            seed: self.seed,
            allow_experimental: self.allow_experimental,
        })
    }
}

/// Bipartite state source: a JSON file or one of the built-in families.
#[derive(Debug, Clone, Args)]
#[group(multiple = false)]
pub struct StateSource {
    /// State JSON: {"dim", "re", "im", "dA", "dB"}.
    #[arg(long)]
    pub state: Option<PathBuf>,
    /// Perfectly correlated qubit pair p|00⟩⟨00| + (1−p)|11⟩⟨11|.
    #[arg(long)]
    pub copy: Option<f64>,
    /// Random full-rank state "dAxdB" drawn from --seed.
    #[arg(long)]
    pub random: Option<String>,
    /// Classical state of a joint PMF JSON {"X", "Y", "p"}.
    #[arg(long)]
    pub joint: Option<PathBuf>,
}

/// Joint PMF source for the classical commands.
#[derive(Debug, Clone, Args)]
#[group(multiple = false)]
pub struct JointSource {
    #[arg(long)]
    pub joint: Option<PathBuf>,
    #[arg(long)]
    pub copy: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Variant {
    PetzUpUp,
    PetzUpDown,
    PetzDownDown,
    SandwichedUpUp,
    SandwichedUpDown,
    SandwichedDownDown,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SideArg {
    Left,
    Right,
    Central,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RegimeArg {
    Direct,
    StrongConverse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum HypArg {
    Iid,
    Symboth,
    Syma,
    Ind,
    Mar,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TestKind {
    Direct,
    StrongConverse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LinalgAction {
    Eig,
    Power,
    PartialTrace,
    Projector,
    Pinch,
    Support,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    #[value(alias = "paper-fixtures")]
    Fixtures,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Petz and sandwiched divergences; for a bipartite state, against its marginal product.
    Divergence {
        #[command(flatten)]
        source: StateSource,
        /// First argument as an operator JSON (with --sigma).
        #[arg(long, conflicts_with_all = ["state", "copy", "random", "joint"], requires = "sigma")]
        rho: Option<PathBuf>,
        #[arg(long)]
        sigma: Option<PathBuf>,
        #[arg(long, default_value = "1", value_parser = inputs::parse_order)]
        alpha: f64,
    },
    /// Rényi mutual information of one or all variants.
    Rmi {
        #[command(flatten)]
        source: StateSource,
        #[arg(long, value_parser = inputs::parse_order)]
        alpha: f64,
        #[arg(long, value_enum, default_value = "all")]
        variant: Variant,
        /// Also report the order derivative from this side.
        #[arg(long, value_enum)]
        derivative: Option<SideArg>,
    },
    /// Exponent curve as CSV with header R,exponent,argmax_s,regime.
    Exponents {
        #[command(flatten)]
        source: StateSource,
        #[arg(long, value_enum, default_value = "direct")]
        regime: RegimeArg,
        #[arg(long, default_value_t = 0.0)]
        r_min: f64,
        #[arg(long)]
        r_max: Option<f64>,
        /// Number of rates sampled on [r-min, r-max].
        #[arg(long, default_value_t = 21)]
        steps: usize,
        /// Print rates and exponents in bits.
        #[arg(long)]
        bits: bool,
    },
    /// Mutual information, its variance, and the threshold rates.
    Thresholds {
        #[command(flatten)]
        source: StateSource,
        /// Also compute the slope windows of both cutoff formulas.
        #[arg(long)]
        windows: bool,
    },
    /// Rate and exponent attained at a given order.
    OrderRate {
        #[command(flatten)]
        source: StateSource,
        #[arg(long)]
        s: f64,
        #[arg(long, value_enum, default_value = "direct")]
        regime: RegimeArg,
    },
    /// β-cutoff rate: forward for β in (−1, 0), reverse for β in (0, 1).
    Cutoff {
        #[command(flatten)]
        source: StateSource,
        #[arg(long, allow_hyphen_values = true)]
        beta: f64,
    },
    /// Moderate-deviation rate and second-order type-I error at rate offset r/√n.
    SecondOrder {
        #[command(flatten)]
        source: StateSource,
        #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
        r: f64,
    },
    /// Independence tests on n copies: brackets, Neyman–Pearson, explicit tests.
    #[command(subcommand)]
    Hyptest(HyptestCommand),
    /// Permutation symmetry: dimension bounds, projectors, twirling.
    #[command(subcommand)]
    Symmetry(SymmetryCommand),
    /// Classical distributions and the classical reference for the quantum brackets.
    #[command(subcommand)]
    Classical(ClassicalCommand),
    /// Matrix primitives on operator JSON files.
    Linalg {
        #[arg(long, value_enum)]
        action: LinalgAction,
        #[arg(long)]
        op: PathBuf,
        /// Second operator for projector, pinch and support.
        #[arg(long)]
        other: Option<PathBuf>,
        /// Exponent for power; left dimension for partial-trace.
        #[arg(long)]
        p: Option<f64>,
        #[arg(long)]
        d_a: Option<usize>,
        #[arg(long)]
        d_b: Option<usize>,
        /// Subsystem traced out by partial-trace.
        #[arg(long, default_value = "b")]
        trace_out: String,
    },
    /// Run a reference fixture suite; exits 1 if any fixture fails.
    Verify {
        #[arg(long, value_enum, default_value = "fixtures")]
        suite: Suite,
    },
}

#[derive(Debug, Subcommand)]
pub enum HyptestCommand {
    /// Certified bracket on the minimum type-I error at type-II level μ.
    Bracket {
        #[command(flatten)]
        source: StateSource,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        mu: f64,
        #[arg(long, value_enum, default_value = "all")]
        hyp: HypArg,
    },
    /// Neyman–Pearson test between two density matrices.
    Np {
        #[arg(long)]
        rho: PathBuf,
        #[arg(long)]
        sigma: PathBuf,
        #[arg(long)]
        mu: f64,
    },
    /// Build an explicit n-copy test and evaluate its errors.
    Build {
        #[command(flatten)]
        source: StateSource,
        #[arg(long, value_enum)]
        kind: TestKind,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        rate: f64,
        /// Order s (direct, in (0, 1)) or ŝ (strong converse, > 1).
        #[arg(long)]
        s: f64,
        #[arg(long)]
        rate_prime: Option<f64>,
        #[arg(long, value_enum, default_value = "symboth")]
        hyp: HypArg,
    },
    /// Pinched n-copy pair of distributions, optionally tilted at order s.
    Pinched {
        #[command(flatten)]
        source: StateSource,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        tilt: Option<f64>,
    },
}

#[derive(Debug, Subcommand)]
pub enum SymmetryCommand {
    /// Counting constants and checks of the universal state.
    Info {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: usize,
        /// Permutation of 0..n−1 whose unitary is checked against the universal state.
        #[arg(long, value_delimiter = ',')]
        perm: Option<Vec<usize>>,
    },
    /// Average an operator on (C^d)^{⊗n} over permutations of the copies.
    Twirl {
        #[arg(long)]
        op: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: usize,
    },
}

#[derive(Debug, Subcommand)]
pub enum ClassicalCommand {
    /// Rényi divergence between two PMFs given as comma-separated lists.
    Divergence {
        #[arg(long, value_delimiter = ',')]
        p: Vec<f64>,
        #[arg(long, value_delimiter = ',')]
        q: Vec<f64>,
        #[arg(long, value_parser = inputs::parse_order)]
        alpha: f64,
    },
    /// Classical Rényi mutual information.
    Rmi {
        #[command(flatten)]
        source: JointSource,
        #[arg(long, value_parser = inputs::parse_order)]
        alpha: f64,
        #[arg(long, value_enum, default_value = "all")]
        variant: Variant,
    },
    /// Diagonal state of a joint PMF, as state JSON.
    Embed {
        #[command(flatten)]
        source: JointSource,
    },
    /// Exact or certified classical minimum type-I error.
    Bracket {
        #[command(flatten)]
        source: JointSource,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        mu: f64,
        #[arg(long, value_enum, default_value = "all")]
        hyp: HypArg,
    },
    /// Compare the quantum bracket on the embedded state with the classical oracle.
    Check {
        #[command(flatten)]
        source: JointSource,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        mu: f64,
        #[arg(long, value_enum, default_value = "all")]
        hyp: HypArg,
    },
}

/// Which library operations each command path reaches.
pub const DISPATCH: &[(&str, &[&str])] = &[
    ("divergence", &["petz_divergence", "sandwiched_divergence", "mutual_information", "mi_variance"]),
    ("rmi", &["rmi", "rmi_derivative"]),
    ("exponents", &["direct_exponent", "strong_converse_exponent"]),
    ("thresholds", &["thresholds", "moderate_rate"]),
    ("order-rate", &["rate_of_order"]),
    ("cutoff", &["forward_cutoff", "reverse_cutoff"]),
    ("second-order", &["moderate_rate", "second_order_type1"]),
    ("hyptest bracket", &["min_type1_bounds"]),
    ("hyptest np", &["neyman_pearson_min_type1"]),
    ("hyptest build", &["build_direct_test", "build_sc_test", "worst_case_type2_bounds"]),
    ("hyptest pinched", &["pinched_pair", "tilt"]),
    ("symmetry info", &["g", "permutation_unitary", "sym_projector", "universal_state"]),
    ("symmetry twirl", &["twirl"]),
    ("classical divergence", &["classical_renyi_divergence"]),
    ("classical rmi", &["classical_rmi"]),
    ("classical embed", &["cc_state"]),
    ("classical bracket", &["classical_min_type1"]),
    ("classical check", &["cc_equivalence_check"]),
    ("linalg", &["eig_hermitian", "power_on_support", "partial_trace", "spectral_projector_geq", "pinch", "dominates", "orthogonal"]),
    ("verify", &[]),
];

/// Parses arguments, runs the command, and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn execute(cli: Cli) -> Result<()> {
    if let Ok(v) = std::env::var("RENYI_MAX_DIM") {
        let cap = v.trim().parse::<usize>().map_err(|_| CliError::Input(format!("RENYI_MAX_DIM must be a positive integer, got '{v}'")))?;
        if cap == 0 {
            return Err(CliError::Input("RENYI_MAX_DIM must be a positive integer, got '0'".into()));
        }
        qia_core::linalg::set_max_dim(cap);
    }
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cli.global.threads {
        if t == 0 {
            return Err(CliError::Input("--threads must be positive".into()));
        }
        pool = pool.num_threads(t);
    }
    let pool = pool.build().map_err(|e| CliError::Input(format!("--threads: {e}")))?;
    pool.install(|| commands::dispatch(&cli))
}

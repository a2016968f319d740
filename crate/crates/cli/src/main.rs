use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;

use config::RunConfig;

#[derive(Parser, Debug)]
#[command(name = "rcausal", version, about = "Exact polytope and entropy computations for relativistically causal correlations")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct GlobalArgs {
    /// Scenario file.
    #[arg(long, global = true, conflicts_with = "preset")]
    pub scenario: Option<PathBuf>,
    /// Built-in scenario (triangle, triangle-xor, triangle-hr, triangle-chsh, compass, line3, line, bipartite).
    #[arg(long, global = true)]
    pub preset: Option<String>,
    /// Directory for reports and tables.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Worker threads for vertex-parallel maps (default: all cores).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[arg(long, global = true)]
    pub max_rows: Option<usize>,
    #[arg(long, global = true)]
    pub max_vertices: Option<usize>,
    /// Wall-clock budget in seconds for each polyhedral computation.
    #[arg(long, global = true)]
    pub time_budget: Option<u64>,
    /// Seconds between progress lines on stderr (0 disables them).
    #[arg(long, global = true, default_value_t = 10)]
    pub progress: u64,
    /// Seed for randomized checks.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Input distribution: `uniform` or a file of rational weights, one per
    /// joint input assignment.
    #[arg(long, global = true, default_value = "uniform")]
    pub input_dist: String,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Retained and omitted constraint families with the light-cone reason
    /// for each omission.
    Geometry {
        /// Also recompute the families under this many random rational boosts.
        #[arg(long, default_value_t = 0)]
        boosts: usize,
    },
    /// Enumerate the vertices of the correlation polytope.
    Vertices,
    #[command(subcommand)]
    Analyze(Analysis),
    #[command(subcommand)]
    Entropy(EntropyCmd),
}

#[derive(Subcommand, Debug)]
pub enum Analysis {
    /// Histogram of vertices by the families they violate.
    Census {
        /// Vertex file ("num/den" per coordinate); enumerated when absent.
        #[arg(long)]
        vertices: Option<PathBuf>,
        /// Families as "A B | Z", separated by ';' (default: the omitted
        /// two-party families).
        #[arg(long)]
        families: Option<String>,
    },
    /// Maximum of an entropic expression over the vertices.
    Monogamy {
        #[arg(long)]
        vertices: Option<PathBuf>,
        /// Expression over the scenario's entropy roster, e.g. "I(AB:Z)+I(AC:Y)".
        #[arg(long)]
        expr: String,
    },
    /// Orbits of the vertices under party swaps and relabellings.
    Classify {
        #[arg(long)]
        vertices: Option<PathBuf>,
        /// Simultaneous party swap such as "A=C,X=Y"; repeatable.
        #[arg(long)]
        swap: Vec<String>,
    },
    /// Impose the scenario's marginal relations on one edge and test other edges.
    EdgeStudy {
        /// Target edge such as "A B | Z"; repeatable (default: the source edge
        /// and every omitted two-party family).
        #[arg(long)]
        target: Vec<String>,
    },
    /// Jamming feasibility on the grid p = k/steps.
    JammingScan {
        #[arg(long, default_value_t = 20)]
        steps: usize,
    },
    /// Entropic CHSH expressions of a three-party line distribution.
    Chsh {
        /// Distribution file (one line of "num/den" values); defaults to the
        /// built-in CHSH-monogamy-violating distribution.
        #[arg(long)]
        dist: Option<PathBuf>,
    },
}

#[derive(Subcommand, Debug)]
pub enum EntropyCmd {
    /// Elemental Shannon rows plus the causality equalities.
    ShannonCone {
        /// Emit every causality equality instead of one per output set.
        #[arg(long)]
        expand: bool,
        /// Add H(S) <= log|S| for every variable.
        #[arg(long)]
        bounds: bool,
    },
    /// Fourier-Motzkin projection onto the listed subsets.
    Project {
        /// Subsets to keep, separated by ';' (e.g. "A;B;A B;A_in").
        #[arg(long)]
        keep: String,
        #[arg(long)]
        expand: bool,
    },
    /// Check a certificate: target = sum of terms + combination of equalities.
    Certify {
        #[arg(long)]
        target: String,
        /// Non-negative term; repeatable.
        #[arg(long)]
        term: Vec<String>,
        /// Equality "lhs = rhs"; repeatable.
        #[arg(long)]
        equality: Vec<String>,
        /// Also use the scenario's causality equalities.
        #[arg(long)]
        rc: bool,
    },
    /// Post-selected copy system and its projection.
    Postselect {
        /// Largest number of copies per kept subset.
        #[arg(long, default_value_t = 2)]
        max_size: u32,
        /// Parties whose copies may not share a kept subset, as "B:C"; repeatable.
        #[arg(long)]
        exclude: Vec<String>,
        /// Expression whose non-negativity is checked against the projection
        /// and the full copy cone; repeatable.
        #[arg(long)]
        check: Vec<String>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    let run = || -> anyhow::Result<()> {
        let cfg = RunConfig::from_args(&cli.global)?;
        match cli.command {
            Command::Geometry { boosts } => commands::geometry(&cfg, boosts),
            Command::Vertices => commands::vertices(&cfg),
            Command::Analyze(a) => commands::analyze(&cfg, a),
            Command::Entropy(e) => commands::entropy(&cfg, e),
        }
    };
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

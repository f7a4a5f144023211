//! Command-line grammar.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "ucvx", version, about = "Uniform convexity toolkit on finite dyadic grids")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args, Serialize)]
pub struct Common {
    /// Worker threads (default: available cores). Results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true)]
    pub report: Option<PathBuf>,
    /// Write an SVG plot here.
    #[arg(long, global = true)]
    pub plot: Option<PathBuf>,
    /// Run manifest path (default: `<report>.manifest.json` when `--report` is set).
    #[arg(long, global = true)]
    pub manifest: Option<PathBuf>,
    /// Seed for randomized steps.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum NormArg {
    L1,
    L2,
    Linf,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModulusKind {
    Delta,
    Quasi,
    Gage,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TransformOp {
    Exp,
    Square,
    InfConv,
    Lipschitz,
    Series,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum HalfArg {
    Prose,
    Formula,
}

/// Function input plus the metric it is measured in.
#[derive(Debug, Args, Serialize)]
pub struct FnArgs {
    /// Function spec: a JSON path or `fixture:<id>`.
    #[arg(long = "fn", value_name = "PATH")]
    pub function: String,
    /// `norm`, `pullback:<fn>` or `table:<path>`.
    #[arg(long, default_value = "norm")]
    pub metric: String,
    /// Norm used by `--metric norm` and by norm-based steps.
    #[arg(long, value_enum, default_value = "l2")]
    pub norm: NormArg,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "subcommand", rename_all = "kebab-case")]
pub enum Command {
    /// Modulus of uniform convexity, quasi-convexity modulus or gage.
    Modulus {
        #[command(flatten)]
        input: FnArgs,
        #[arg(long)]
        eps: f64,
        #[arg(long, value_enum, default_value = "delta")]
        kind: ModulusKind,
    },
    /// Convex envelope, optionally with the local reduction at one point.
    Envelope {
        #[command(flatten)]
        input: FnArgs,
        /// Point for the local reduction, comma separated.
        #[arg(long, requires = "eps")]
        at: Option<String>,
        #[arg(long)]
        eps: Option<f64>,
        /// Also write the envelope as a function spec.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Function transforms.
    Transform {
        #[command(flatten)]
        input: FnArgs,
        #[arg(long, value_enum)]
        op: TransformOp,
        /// Scale of `exp` (`3^{f/delta}`).
        #[arg(long, default_value_t = 1.0)]
        delta: f64,
        /// Second operand of `inf-conv`, extra terms of `series`.
        #[arg(long = "with", value_name = "FN")]
        with: Vec<String>,
        /// Lipschitz constant of `lipschitz`.
        #[arg(long)]
        c: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Maximal height of an eps-separated dyadic tree in the support.
    Tree {
        #[command(flatten)]
        input: FnArgs,
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value_t = 64)]
        cap: usize,
        /// Root point, comma separated.
        #[arg(long)]
        root: Option<String>,
        /// Report the height function on the whole support.
        #[arg(long)]
        heights: bool,
    },
    /// Slice derivations and the dentability index of the support.
    Dent {
        #[command(flatten)]
        input: FnArgs,
        #[arg(long)]
        eps: f64,
        /// `axes` or `dirs:<n>` (default: axes plus the per-dimension default).
        #[arg(long)]
        dict: Option<String>,
        #[arg(long, default_value_t = 64)]
        cap: usize,
        /// Build the uniformly convex function from the half-derivation.
        #[arg(long, value_enum)]
        uc: Option<HalfArg>,
    },
    /// Sublevel-set renorming from a uniformly convex function.
    Renorm {
        #[command(flatten)]
        input: FnArgs,
        #[arg(long)]
        delta: f64,
    },
    /// Tree-height renorming of a plane norm on its grid ball.
    Enflo {
        #[arg(long, value_enum, default_value = "linf")]
        norm: NormArg,
        #[arg(long, default_value_t = 1.0 / 32.0)]
        step: f64,
        #[arg(long, value_delimiter = ',', default_value = "0.5")]
        eps: Vec<f64>,
        #[arg(long, default_value_t = 64)]
        cap: usize,
    },
    /// Difference-of-convex approximation.
    DcApprox {
        #[command(flatten)]
        input: FnArgs,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        dict: Option<String>,
        #[arg(long, default_value_t = 64)]
        cap: usize,
        #[arg(long, value_enum, default_value = "prose")]
        half: HalfArg,
        /// Also bracket the dentability and approximation thresholds.
        #[arg(long)]
        bounds: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Noncompactness proxies of the support and their comparison chain.
    Swc {
        #[command(flatten)]
        input: FnArgs,
        #[arg(long, value_delimiter = ',', default_value = "0.25,0.5,0.75,1,1.25,1.5,2")]
        eps_grid: Vec<f64>,
        #[arg(long, default_value_t = 4)]
        cap: usize,
        /// Prefix checks per separated-sequence search.
        #[arg(long, default_value_t = 200_000)]
        budget: usize,
        #[arg(long, default_value_t = 3)]
        bisect: usize,
    },
    /// Acceptance criteria and the fixture corpus.
    Reproduce {
        /// `A1` … `A15` or `all`.
        #[arg(long)]
        criterion: Option<String>,
        /// Write the fixture corpus as JSON specs into this directory.
        #[arg(long)]
        fixtures: Option<PathBuf>,
        /// Print the fixture catalog.
        #[arg(long)]
        list: bool,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Modulus { .. } => "modulus",
            Command::Envelope { .. } => "envelope",
            Command::Transform { .. } => "transform",
            Command::Tree { .. } => "tree",
            Command::Dent { .. } => "dent",
            Command::Renorm { .. } => "renorm",
            Command::Enflo { .. } => "enflo",
            Command::DcApprox { .. } => "dc-approx",
            Command::Swc { .. } => "swc",
            Command::Reproduce { .. } => "reproduce",
        }
    }
}

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use seirhcd_core::observations::Observable;
use seirhcd_core::SolverKind;

#[derive(Debug, Parser)]
#[command(
    name = "seirhcd",
    version,
    about = "Spatial SEIR-HCD epidemic model: simulation, sensitivity analysis, history matching and inversion"
)]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Scenario file (TOML or JSON). The bundled Novosibirsk 2022 scenario when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; all cores when omitted.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Overrides the solver named in the scenario.
    #[arg(long, global = true)]
    pub solver: Option<SolverKind>,
    #[arg(long, global = true, default_value = "seirhcd-out")]
    pub output_dir: PathBuf,
    /// Comma-separated whole days.
    #[arg(long, global = true, value_delimiter = ',')]
    pub days: Option<Vec<u32>>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Run the direct problem and export daily compartment totals.
    Simulate(SimulateArgs),
    /// First-order Sobol indices of one observable over parameter bounds.
    Sensitivity(SensitivityArgs),
    /// Gaussian-process emulators and history matching on H, R and D.
    Emulate(EmulateArgs),
    /// Recover source or parameter coordinates by tensor-train optimization.
    Invert(InvertArgs),
    /// Synthetic observation series from the scenario.
    Synth(SynthArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Simulate(_) => "simulate",
            Command::Sensitivity(_) => "sensitivity",
            Command::Emulate(_) => "emulate",
            Command::Invert(_) => "invert",
            Command::Synth(_) => "synth",
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    /// Also write every spatial node of every daily snapshot.
    #[arg(long)]
    pub fields: bool,
}

#[derive(Debug, Clone, Args)]
pub struct SensitivityArgs {
    /// Parameter bounds JSON; the bundled reference box when omitted.
    #[arg(long)]
    pub bounds: Option<PathBuf>,
    /// Base sample size N; N·(k+2) model runs.
    #[arg(long, default_value_t = 512)]
    pub samples: usize,
    #[arg(long, default_value = "I")]
    pub output: Observable,
    #[arg(long, default_value_t = 200)]
    pub bootstrap: usize,
}

#[derive(Debug, Clone, Args)]
pub struct EmulateArgs {
    /// Observation CSV with H and R columns. Data are generated from the
    /// scenario's own parameters when omitted.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub bounds: Option<PathBuf>,
    #[arg(long, default_value_t = 250)]
    pub design: usize,
    #[arg(long, default_value_t = 50_000)]
    pub candidates: usize,
    #[arg(long, default_value_t = 3.0)]
    pub threshold: f64,
    /// Degree of the monomial regression basis.
    #[arg(long, default_value_t = 1)]
    pub degree: usize,
    /// Relative observation error; the observation variance is `(e·z)²`.
    #[arg(long, default_value_t = 0.1)]
    pub obs_error: f64,
    #[arg(long, default_value_t = 5)]
    pub restarts: usize,
}

#[derive(Debug, Clone, Args)]
pub struct InvertArgs {
    /// Observation CSV (`day,I,C,D[,H,R]`).
    #[arg(long)]
    pub data: PathBuf,
    /// Optimizer configuration JSON; its bounds follow `--free`.
    #[arg(long)]
    pub tt: PathBuf,
    /// Comma-separated coordinates to recover: source coordinates such as
    /// `e1.a` or `i0`, or parameter names such as `alpha_i`.
    #[arg(long, value_delimiter = ',', required = true)]
    pub free: Vec<String>,
    /// Refined bounds JSON; intersected with the optimizer box by name.
    #[arg(long)]
    pub bounds: Option<PathBuf>,
    /// Source JSON holding the frozen coordinates; the scenario's source when omitted.
    #[arg(long)]
    pub source: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    /// Source JSON; overrides the scenario's initial profile.
    #[arg(long)]
    pub source: Option<PathBuf>,
    /// Relative multiplicative noise level.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
}

//! Command-line flags and the JSON configuration file they override.

use std::path::{Path, PathBuf};

use blocksplit::experiments::Experiment;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Parser)]
#[command(name = "blocksplit", version, about = "Block-activated proximal splitting solvers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one solver configuration and write its trace as CSV.
    Run(RunArgs),
    /// Run an algorithm x alpha x seed grid and write seed-averaged traces.
    Compare(CompareArgs),
    /// Run the built-in acceptance checks.
    Validate(ValidateArgs),
    /// Compute a high-accuracy Kuhn-Tucker point and store it as JSON.
    Reference(ReferenceArgs),
    /// Write a benchmark problem as JSON, for use with `--problem`.
    Export(ExportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlgorithmChoice {
    Dr,
    Ps,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlanKind {
    Full,
    Random,
    Cyclic,
}

#[derive(Debug, Clone, Default, Args)]
pub struct ProblemArgs {
    /// Benchmark problem: exp1 (group-sparse classification) or exp2 (image recovery).
    #[arg(long)]
    pub experiment: Option<Experiment>,
    /// Problem description in JSON instead of a benchmark.
    #[arg(long, conflicts_with = "experiment")]
    pub problem: Option<PathBuf>,
    /// Seed of the benchmark instance generator [default: 1].
    #[arg(long)]
    pub instance_seed: Option<u64>,
    /// JSON file with default values for any flag; flags win.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SolverArgs {
    /// Step size: gamma of Douglas-Rachford and primal scale of projective splitting.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Dual scale mu of projective splitting.
    #[arg(long)]
    pub mu: Option<f64>,
    /// Relaxation parameter of the selected algorithms.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Epoch budget [default: 300].
    #[arg(long)]
    pub epochs: Option<f64>,
    /// Record one row per E epochs instead of every iteration.
    #[arg(long, value_name = "E")]
    pub trace_every: Option<f64>,
    /// Reference point from `blocksplit reference`; computed when omitted.
    #[arg(long)]
    pub reference: Option<PathBuf>,
    /// Plot normalized error against epochs to this SVG file.
    #[arg(long)]
    pub plot: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// dr, ps, or both [default: dr].
    #[arg(long, value_enum)]
    pub algorithm: Option<AlgorithmChoice>,
    /// Fraction of blocks activated per iteration [default: 1].
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Activation plan [default: full at alpha = 1, random for dr, cyclic for ps].
    #[arg(long, value_enum)]
    pub plan: Option<PlanKind>,
    /// Seed of the random activation plan [default: 0].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Iteration cap [default: none].
    #[arg(long)]
    pub max_iterations: Option<usize>,
    /// Stop once the Kuhn-Tucker residual reaches this value [default: 0, off].
    #[arg(long)]
    pub tolerance: Option<f64>,
    /// Fill the wall_ms column (makes output nondeterministic).
    #[arg(long)]
    pub wall_clock: bool,
    /// Trace CSV path; with `--algorithm both`, `-dr`/`-ps` is appended to the file stem.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// dr, ps, or both [default: both].
    #[arg(long, value_enum)]
    pub algorithm: Option<AlgorithmChoice>,
    /// Comma-separated activation fractions [default: 0.1,0.4,0.7,1.0].
    #[arg(long, value_delimiter = ',')]
    pub alphas: Option<Vec<f64>>,
    /// Number of seeds, numbered from 0 [default: 20].
    #[arg(long)]
    pub seeds: Option<u64>,
    /// Run cells one after another instead of in parallel.
    #[arg(long)]
    pub serial: bool,
    /// Seed-averaged CSV path [default: stdout].
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    /// Also write every individual trace into this directory.
    #[arg(long)]
    pub trace_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ValidateArgs {
    /// Include the long convergence checks on the benchmark problems.
    #[arg(long)]
    pub full: bool,
    /// Directory for the comparison CSV and SVG of the full suite.
    #[arg(long)]
    pub artifacts: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ReferenceArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// Residual tolerance [default: 1e-10].
    #[arg(long)]
    pub tolerance: Option<f64>,
    /// Iteration cap [default: 1000000].
    #[arg(long)]
    pub max_iterations: Option<usize>,
    /// Output JSON path [default: stdout].
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ExportArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// Output JSON path [default: stdout].
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

/// Contents of `--config`: any subset of the long flag names, with dashes
/// replaced by underscores.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub experiment: Option<Experiment>,
    pub problem: Option<PathBuf>,
    pub instance_seed: Option<u64>,
    pub algorithm: Option<AlgorithmChoice>,
    pub alpha: Option<f64>,
    pub alphas: Option<Vec<f64>>,
    pub plan: Option<PlanKind>,
    pub seed: Option<u64>,
    pub seeds: Option<u64>,
    pub gamma: Option<f64>,
    pub mu: Option<f64>,
    pub lambda: Option<f64>,
    pub epochs: Option<f64>,
    pub max_iterations: Option<usize>,
    pub tolerance: Option<f64>,
    pub trace_every: Option<f64>,
    pub wall_clock: Option<bool>,
    pub reference: Option<PathBuf>,
    pub plot: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub trace_dir: Option<PathBuf>,
}

impl ConfigFile {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))
    }
}

impl ProblemArgs {
    /// Fills unset flags from `cfg`.
    pub fn merge(&mut self, cfg: &ConfigFile) {
        if self.experiment.is_none() && self.problem.is_none() {
            self.experiment = cfg.experiment;
            self.problem = cfg.problem.clone();
        }
        self.instance_seed = self.instance_seed.or(cfg.instance_seed);
    }
}

impl SolverArgs {
    pub fn merge(&mut self, cfg: &ConfigFile) {
        self.gamma = self.gamma.or(cfg.gamma);
        self.mu = self.mu.or(cfg.mu);
        self.lambda = self.lambda.or(cfg.lambda);
        self.epochs = self.epochs.or(cfg.epochs);
        self.trace_every = self.trace_every.or(cfg.trace_every);
        self.reference = self.reference.take().or_else(|| cfg.reference.clone());
        self.plot = self.plot.take().or_else(|| cfg.plot.clone());
    }
}

impl RunArgs {
    pub fn merge(&mut self, cfg: &ConfigFile) {
        self.problem.merge(cfg);
        self.solver.merge(cfg);
        self.algorithm = self.algorithm.or(cfg.algorithm);
        self.alpha = self.alpha.or(cfg.alpha);
        self.plan = self.plan.or(cfg.plan);
        self.seed = self.seed.or(cfg.seed);
        self.max_iterations = self.max_iterations.or(cfg.max_iterations);
        self.tolerance = self.tolerance.or(cfg.tolerance);
        self.wall_clock |= cfg.wall_clock.unwrap_or(false);
        self.out = self.out.take().or_else(|| cfg.out.clone());
    }
}

impl CompareArgs {
    pub fn merge(&mut self, cfg: &ConfigFile) {
        self.problem.merge(cfg);
        self.solver.merge(cfg);
        self.algorithm = self.algorithm.or(cfg.algorithm);
        self.alphas = self.alphas.take().or_else(|| cfg.alphas.clone());
        self.seeds = self.seeds.or(cfg.seeds);
        self.out = self.out.take().or_else(|| cfg.out.clone());
        self.trace_dir = self.trace_dir.take().or_else(|| cfg.trace_dir.clone());
    }
}

impl ReferenceArgs {
    pub fn merge(&mut self, cfg: &ConfigFile) {
        self.problem.merge(cfg);
        self.tolerance = self.tolerance.or(cfg.tolerance);
        self.max_iterations = self.max_iterations.or(cfg.max_iterations);
        self.out = self.out.take().or_else(|| cfg.out.clone());
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_win_over_config() {
        let cli = Cli::try_parse_from(["blocksplit", "run", "--experiment", "exp2", "--alpha", "0.5"]).unwrap();
        let Command::Run(mut args) = cli.command else { panic!() };
        let cfg: ConfigFile = serde_json::from_str(r#"{"alpha": 0.25, "seed": 9, "experiment": "exp1"}"#).unwrap();
        args.merge(&cfg);
        assert_eq!(args.alpha, Some(0.5));
        assert_eq!(args.seed, Some(9));
        assert_eq!(args.problem.experiment, Some(Experiment::Exp2));
    }

    #[test]
    fn config_rejects_unknown_keys() {
        assert!(serde_json::from_str::<ConfigFile>(r#"{"alhpa": 0.25}"#).is_err());
    }

    #[test]
    fn alphas_are_comma_separated() {
        let cli = Cli::try_parse_from(["blocksplit", "compare", "--alphas", "0.1,0.4"]).unwrap();
        let Command::Compare(args) = cli.command else { panic!() };
        assert_eq!(args.alphas, Some(vec![0.1, 0.4]));
    }
}

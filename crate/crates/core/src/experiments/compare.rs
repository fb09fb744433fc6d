//! Reference solutions and the algorithm x activation x seed comparison grid.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::block::BlockVector;
use crate::dr::{DouglasRachford, DrConfig};
use crate::error::{Error, Result};
use crate::linops::SubspaceProjector;
use crate::problem::{KtPoint, ProblemSpec};
use crate::ps::{ProjectiveSplitting, PsConfig};
use crate::run::{run, BlockSolver, Relaxation, RunOptions, TraceEvery};
use crate::schedule::{ActivationPlan, EpochBasis};
use crate::trace::{NullSink, TraceRecord};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceOptions {
    /// Stop once the unit-scale Kuhn-Tucker residual drops to this value.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// `(gamma, mu)` of the solver; `None` picks `(1 / ||L||, ||L||)`.
    pub scales: Option<(f64, f64)>,
}

impl Default for ReferenceOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            max_iterations: 1_000_000,
            scales: None,
        }
    }
}

/// `(1 / ||L||, ||L||)`, or `(1, 1)` for a zero operator.
pub fn balanced_scales(spec: &ProblemSpec) -> (f64, f64) {
    let norm = spec.grid().norm_estimate(50);
    if norm > 0.0 && norm.is_finite() {
        (1.0 / norm, norm)
    } else {
        (1.0, 1.0)
    }
}

/// High-accuracy Kuhn-Tucker point from projective splitting with full
/// activation and unit relaxation.
pub fn compute_reference(spec: &ProblemSpec) -> Result<KtPoint> {
    compute_reference_with(spec, &ReferenceOptions::default())
}

pub fn compute_reference_with(spec: &ProblemSpec, opts: &ReferenceOptions) -> Result<KtPoint> {
    let (gamma, mu) = opts.scales.unwrap_or_else(|| balanced_scales(spec));
    let solver = ProjectiveSplitting::new(spec, PsConfig::full(spec)?.with_scales(gamma, mu).with_lambda(1.0))?;
    let mut state = solver.init();
    let run_opts = RunOptions {
        max_iterations: opts.max_iterations,
        stop_tolerance: opts.tolerance,
        ..RunOptions::default()
    };
    let summary = run(&solver, &mut state, &run_opts, &mut NullSink)?;
    if !summary.converged {
        return Err(Error::ReferenceFailure(format!(
            "residual {:.3e} after {} iterations, wanted {:.1e}",
            summary.kt_residual, summary.iterations, opts.tolerance
        )));
    }
    Ok(solver.kt_point(&state))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    /// Randomly block-activated Douglas-Rachford.
    Dr,
    /// Deterministic block-activated projective splitting.
    Ps,
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Dr => "dr",
            Self::Ps => "ps",
        })
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dr" => Ok(Self::Dr),
            "ps" => Ok(Self::Ps),
            other => Err(Error::InvalidConfig(format!("unknown algorithm '{other}'"))),
        }
    }
}

/// Step sizes and relaxation of both solvers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverParams {
    pub dr_gamma: f64,
    pub dr_lambda: f64,
    pub ps_gamma: f64,
    pub ps_mu: f64,
    pub ps_lambda: f64,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            dr_gamma: 1.0,
            dr_lambda: 1.5,
            ps_gamma: 1.0,
            ps_mu: 1.0,
            ps_lambda: 1.9,
        }
    }
}

/// Activation plan used by `algorithm` at fraction `alpha`: random subsets
/// for Douglas-Rachford, cyclic sweeps for projective splitting, and full
/// activation at `alpha = 1` for both.
pub fn plan_for(algorithm: Algorithm, alpha: f64, m: usize, p: usize, seed: u64) -> Result<ActivationPlan> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidConfig(format!(
            "activation fraction must lie in (0, 1], got {alpha}"
        )));
    }
    if alpha == 1.0 {
        return ActivationPlan::full(m, p);
    }
    match algorithm {
        Algorithm::Dr => ActivationPlan::random_subset(m, p, alpha, alpha, seed),
        Algorithm::Ps => ActivationPlan::cyclic_from_fractions(m, p, alpha, alpha),
    }
}

/// Runs one configuration from the zero starting point.
pub fn run_single(
    spec: &ProblemSpec,
    algorithm: Algorithm,
    plan: ActivationPlan,
    params: &SolverParams,
    opts: &RunOptions,
    projector: Option<Arc<SubspaceProjector>>,
) -> Result<Vec<TraceRecord>> {
    let mut trace = Vec::new();
    match algorithm {
        Algorithm::Dr => {
            let mut cfg = DrConfig::new(plan).with_gamma(params.dr_gamma);
            cfg.lambda = Relaxation::Constant(params.dr_lambda);
            let solver = match projector {
                Some(p) => DouglasRachford::with_projector(spec, cfg, p)?,
                None => DouglasRachford::new(spec, cfg)?,
            };
            let mut state = solver.init();
            let opts = RunOptions {
                residual_scales: (params.dr_gamma, params.dr_gamma),
                ..opts.clone()
            };
            run(&solver, &mut state, &opts, &mut trace)?;
        }
        Algorithm::Ps => {
            let cfg = PsConfig::new(spec, plan)
                .with_scales(params.ps_gamma, params.ps_mu)
                .with_lambda(params.ps_lambda);
            let solver = ProjectiveSplitting::new(spec, cfg)?;
            let mut state = solver.init();
            let opts = RunOptions {
                residual_scales: (params.ps_gamma, params.ps_mu),
                ..opts.clone()
            };
            run(&solver, &mut state, &opts, &mut trace)?;
        }
    }
    Ok(trace)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonConfig {
    pub algorithms: Vec<Algorithm>,
    pub alphas: Vec<f64>,
    pub seeds: Vec<u64>,
    pub epoch_budget: f64,
    pub epoch_basis: EpochBasis,
    /// Trace thinning in epochs.
    pub trace_every: f64,
    pub params: SolverParams,
    pub parallel: bool,
}

impl ComparisonConfig {
    pub fn new(algorithms: Vec<Algorithm>, alphas: Vec<f64>, seeds: Vec<u64>, epoch_budget: f64) -> Self {
        Self {
            algorithms,
            alphas,
            seeds,
            epoch_budget,
            epoch_basis: EpochBasis::Primal,
            trace_every: 1.0,
            params: SolverParams::default(),
            parallel: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanPoint {
    pub epochs: f64,
    pub error_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonCell {
    pub algorithm: Algorithm,
    pub alpha: f64,
    pub seeds: Vec<u64>,
    /// One trace per seed.
    pub traces: Vec<Vec<TraceRecord>>,
    pub mean: Vec<MeanPoint>,
}

impl ComparisonCell {
    pub fn label(&self) -> String {
        format!("{} alpha={}", self.algorithm, self.alpha)
    }
}

/// Runs every `(algorithm, alpha, seed)` of the grid to the epoch budget and
/// averages the normalized errors of each cell over seeds.
///
/// Deterministic plans ignore the seed, so projective splitting runs once
/// per cell and its trace is repeated for every seed.
pub fn run_comparison(
    spec: &ProblemSpec,
    reference: &BlockVector,
    cfg: &ComparisonConfig,
) -> Result<Vec<ComparisonCell>> {
    if cfg.seeds.is_empty() || cfg.algorithms.is_empty() || cfg.alphas.is_empty() {
        return Err(Error::InvalidConfig("comparison grid is empty".into()));
    }
    if !(cfg.epoch_budget > 0.0 && cfg.epoch_budget.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "epoch budget must be positive, got {}",
            cfg.epoch_budget
        )));
    }
    if !(cfg.trace_every > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "trace spacing must be positive, got {}",
            cfg.trace_every
        )));
    }
    let projector = if cfg.algorithms.contains(&Algorithm::Dr) {
        Some(Arc::new(SubspaceProjector::build(spec.shared_grid())?))
    } else {
        None
    };
    let opts = RunOptions {
        max_iterations: usize::MAX,
        stop_tolerance: 0.0,
        epoch_basis: cfg.epoch_basis,
        epoch_budget: Some(cfg.epoch_budget),
        trace_every: TraceEvery::Epochs(cfg.trace_every),
        reference: Some(reference.clone()),
        ..RunOptions::default()
    };

    let mut jobs = Vec::new();
    for &algorithm in &cfg.algorithms {
        for &alpha in &cfg.alphas {
            let plan = plan_for(algorithm, alpha, spec.m(), spec.p(), cfg.seeds[0])?;
            let seeds: &[u64] = if plan.is_deterministic() {
                &cfg.seeds[..1]
            } else {
                &cfg.seeds
            };
            for &seed in seeds {
                jobs.push((algorithm, alpha, plan.clone().with_seed(seed)));
            }
        }
    }
    let exec = |(algorithm, _, plan): &(Algorithm, f64, ActivationPlan)| {
        run_single(spec, *algorithm, plan.clone(), &cfg.params, &opts, projector.clone())
    };
    let results: Vec<Result<Vec<TraceRecord>>> = if cfg.parallel {
        jobs.par_iter().map(exec).collect()
    } else {
        jobs.iter().map(exec).collect()
    };

    let mut results = results.into_iter();
    let mut cells = Vec::new();
    for &algorithm in &cfg.algorithms {
        for &alpha in &cfg.alphas {
            let deterministic = plan_for(algorithm, alpha, spec.m(), spec.p(), cfg.seeds[0])?.is_deterministic();
            let traces = if deterministic {
                let t = results.next().expect("one job per deterministic cell")?;
                vec![t; cfg.seeds.len()]
            } else {
                (0..cfg.seeds.len())
                    .map(|_| results.next().expect("one job per seed"))
                    .collect::<Result<Vec<_>>>()?
            };
            let mean = mean_trace(&traces);
            cells.push(ComparisonCell {
                algorithm,
                alpha,
                seeds: cfg.seeds.clone(),
                traces,
                mean,
            });
        }
    }
    Ok(cells)
}

/// Index-wise mean of `error_db`, truncated to the shortest trace.
pub fn mean_trace(traces: &[Vec<TraceRecord>]) -> Vec<MeanPoint> {
    let len = traces.iter().map(Vec::len).min().unwrap_or(0);
    (0..len)
        .map(|j| MeanPoint {
            epochs: traces[0][j].epochs,
            error_db: traces.iter().map(|t| t[j].normalized_error_db).sum::<f64>() / traces.len() as f64,
        })
        .collect()
}

pub const MEAN_CSV_HEADER: &str = "algorithm,alpha,epochs,error_db";

pub fn write_mean_csv<W: std::io::Write>(mut out: W, cells: &[ComparisonCell]) -> std::io::Result<()> {
    writeln!(out, "{MEAN_CSV_HEADER}")?;
    for c in cells {
        for p in &c.mean {
            writeln!(out, "{},{},{},{}", c.algorithm, c.alpha, p.epochs, p.error_db)?;
        }
    }
    Ok(())
}

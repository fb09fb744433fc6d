//! Iteration driver shared by both solvers: stopping rules, epoch accounting
//! and trace emission.

use std::fmt;
use std::sync::Arc;
use std::time::Instant;

use crate::block::BlockVector;
use crate::error::{Error, Result};
use crate::problem::{KtPoint, ProblemSpec};
use crate::schedule::{Activation, EpochBasis};
use crate::trace::{error_db, TraceRecord, TraceSink};

/// Relaxation parameters `lambda_n`, which must stay inside `]0, 2[`.
#[derive(Clone)]
pub enum Relaxation {
    Constant(f64),
    Schedule(Arc<dyn Fn(usize) -> f64 + Send + Sync>),
}

impl fmt::Debug for Relaxation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Constant(v) => f.debug_tuple("Constant").field(v).finish(),
            Self::Schedule(_) => f.write_str("Schedule(..)"),
        }
    }
}

impl Relaxation {
    pub fn validate(&self) -> Result<()> {
        if let Self::Constant(v) = self {
            check_relaxation(*v)?;
        }
        Ok(())
    }

    pub fn at(&self, n: usize) -> Result<f64> {
        let v = match self {
            Self::Constant(v) => *v,
            Self::Schedule(f) => f(n),
        };
        check_relaxation(v)?;
        Ok(v)
    }
}

fn check_relaxation(v: f64) -> Result<()> {
    if v > 0.0 && v < 2.0 {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!(
            "relaxation parameter must lie in ]0, 2[, got {v}"
        )))
    }
}

pub(crate) fn check_activation(a: &Activation, m: usize, p: usize) -> Result<()> {
    if a.primal.is_empty() || a.dual.is_empty() {
        return Err(Error::PlanViolation("empty activation set".into()));
    }
    if let Some(&i) = a.primal.iter().find(|&&i| i >= m) {
        return Err(Error::PlanViolation(format!("primal block {i} out of range 0..{m}")));
    }
    if let Some(&k) = a.dual.iter().find(|&&k| k >= p) {
        return Err(Error::PlanViolation(format!("dual block {k} out of range 0..{p}")));
    }
    Ok(())
}

/// What one iteration did.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub activation: Activation,
    pub macs: u64,
}

/// Common surface of the block-activated solvers.
pub trait BlockSolver {
    type State;

    fn spec(&self) -> &ProblemSpec;

    fn step(&self, state: &mut Self::State) -> Result<StepOutcome>;

    /// Current primal iterate `x_n`.
    fn primal<'s>(&self, state: &'s Self::State) -> &'s BlockVector;

    /// Current primal-dual estimate used for the Kuhn-Tucker residual.
    fn kt_point(&self, state: &Self::State) -> KtPoint;

    /// Work done before the first iteration.
    fn setup_macs(&self) -> u64 {
        0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TraceEvery {
    Iteration,
    /// First iteration at which each multiple of the given epoch count is reached.
    Epochs(f64),
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub max_iterations: usize,
    /// Stop once the Kuhn-Tucker residual drops to this value; `0` disables the check.
    pub stop_tolerance: f64,
    pub epoch_basis: EpochBasis,
    pub epoch_budget: Option<f64>,
    pub trace_every: TraceEvery,
    /// `x_inf` for the normalized error.
    pub reference: Option<BlockVector>,
    /// Scales `(gamma, mu)` of the residual.
    pub residual_scales: (f64, f64),
    /// Record elapsed time in `wall_ms`; left at `0` otherwise so traces are reproducible.
    pub wall_clock: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            max_iterations: 10_000,
            stop_tolerance: 1e-8,
            epoch_basis: EpochBasis::Primal,
            epoch_budget: None,
            trace_every: TraceEvery::Iteration,
            reference: None,
            residual_scales: (1.0, 1.0),
            wall_clock: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub iterations: usize,
    pub epochs: f64,
    pub kt_residual: f64,
    pub converged: bool,
    pub macs: u64,
}

/// Iterates `solver` from `state` until the iteration cap, the epoch budget,
/// or the residual tolerance is reached, emitting records to `sink`.
pub fn run<S: BlockSolver>(
    solver: &S,
    state: &mut S::State,
    opts: &RunOptions,
    sink: &mut dyn TraceSink,
) -> Result<RunSummary> {
    let spec = solver.spec();
    let (gamma, mu) = opts.residual_scales;
    let x0 = solver.primal(state).clone();
    let reference = match &opts.reference {
        Some(r) => {
            r.check_dims("run reference", spec.primal_dims())?;
            let d = x0.distance(r);
            if d == 0.0 {
                return Err(Error::UndefinedMetric);
            }
            Some((r, d))
        }
        None => None,
    };
    let started = Instant::now();
    let mut counter = opts.epoch_basis.counter(spec.m(), spec.p());
    let mut macs = solver.setup_macs();
    let residual = |state: &S::State| spec.kt_residual(&solver.kt_point(state), gamma, mu);
    let make_record = |state: &S::State,
                       iteration: usize,
                       epochs: f64,
                       act: (usize, usize),
                       macs: u64,
                       res: f64|
     -> Result<TraceRecord> {
        let x = solver.primal(state);
        Ok(TraceRecord {
            iteration,
            epochs,
            normalized_error_db: reference.map_or(f64::NAN, |(r, d)| error_db(x.distance(r), d)),
            objective: spec.objective(x)?,
            kt_residual: res,
            activated_primal: act.0,
            activated_dual: act.1,
            wall_ms: if opts.wall_clock {
                started.elapsed().as_secs_f64() * 1e3
            } else {
                0.0
            },
            macs,
        })
    };

    let mut last_residual = residual(state)?;
    sink.record(&make_record(state, 0, 0.0, (0, 0), macs, last_residual)?);
    let mut next_epoch_mark = match opts.trace_every {
        TraceEvery::Epochs(e) => e,
        TraceEvery::Iteration => 0.0,
    };
    let mut converged = opts.stop_tolerance > 0.0 && last_residual <= opts.stop_tolerance;
    let mut iterations = 0;

    while !converged && iterations < opts.max_iterations {
        let out = solver.step(state)?;
        iterations += 1;
        counter.record(opts.epoch_basis.count(&out.activation));
        macs += out.macs;
        let epochs = counter.epochs();
        let budget_hit = opts.epoch_budget.is_some_and(|b| epochs >= b - 1e-12);

        let mut record_now = match opts.trace_every {
            TraceEvery::Iteration => true,
            TraceEvery::Epochs(e) => {
                if epochs >= next_epoch_mark - 1e-12 {
                    while next_epoch_mark <= epochs + 1e-12 {
                        next_epoch_mark += e;
                    }
                    true
                } else {
                    false
                }
            }
        };
        let check_now = opts.stop_tolerance > 0.0;
        if record_now || check_now || budget_hit || iterations == opts.max_iterations {
            last_residual = residual(state)?;
        }
        converged = check_now && last_residual <= opts.stop_tolerance;
        record_now |= converged || budget_hit || iterations == opts.max_iterations;
        if record_now {
            let act = (out.activation.primal.len(), out.activation.dual.len());
            sink.record(&make_record(state, iterations, epochs, act, macs, last_residual)?);
        }
        if budget_hit {
            break;
        }
    }

    Ok(RunSummary {
        iterations,
        epochs: counter.epochs(),
        kt_residual: last_residual,
        converged,
        macs,
    })
}

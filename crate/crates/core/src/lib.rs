//! Block-activated proximal splitting for structured convex problems
//!
//! ```text
//! minimize  sum_i f_i(x_i) + sum_k g_k(sum_i L_{k,i} x_i)
//! ```
//!
//! Two solvers are provided: a randomly block-activated primal-dual
//! Douglas-Rachford method ([`DouglasRachford`]) and a deterministic
//! block-activated projective splitting method ([`ProjectiveSplitting`]).
//! Both touch only a subset of the functions `f_i`, `g_k` per iteration.
//!
//! ```no_run
//! use blocksplit::experiments::{compute_reference, Experiment};
//! use blocksplit::{run, ActivationPlan, DouglasRachford, DrConfig, RunOptions};
//!
//! # fn main() -> blocksplit::Result<()> {
//! let spec = Experiment::Exp2.build(1)?;
//! let reference = compute_reference(&spec)?;
//! let plan = ActivationPlan::random_subset(spec.m(), spec.p(), 1.0, 0.4, 7)?;
//! let solver = DouglasRachford::new(&spec, DrConfig::new(plan))?;
//! let mut state = solver.init();
//! let mut trace = Vec::new();
//! let opts = RunOptions {
//!     reference: Some(reference.x),
//!     epoch_budget: Some(100.0),
//!     ..RunOptions::default()
//! };
//! run(&solver, &mut state, &opts, &mut trace)?;
//! # Ok(())
//! # }
//! ```

// `!(x > 0.0)` is used on purpose to reject NaN along with nonpositive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod block;
pub mod dr;
pub mod error;
pub mod experiments;
pub mod linops;
pub mod oracle;
pub mod plot;
pub mod problem;
pub mod prox;
pub mod ps;
pub mod run;
pub mod schedule;
pub mod trace;
pub mod validation;

pub use block::BlockVector;
pub use dr::{DouglasRachford, DrConfig, DrState};
pub use error::{Error, Result};
pub use linops::{BlockOperatorGrid, BlurRows, GramSide, GridEntry, LinOp, SubspaceProjector};
pub use oracle::{brute_force_prox_oracle, brute_force_prox_oracle_with, OracleOptions};
pub use problem::{kt_residual, objective_value, KtPoint, ProblemSpec};
pub use prox::{prox_conjugate_moreau, ProxFunction};
pub use ps::{ProjectiveSplitting, PsConfig, PsState, PsStepReport};
pub use run::{run, BlockSolver, Relaxation, RunOptions, RunSummary, StepOutcome, TraceEvery};
pub use schedule::{verify_sweeping, Activation, ActivationPlan, BlockSchedule, EpochBasis, EpochCounter};
pub use trace::{normalized_error_db, write_csv, NullSink, TraceRecord, TraceSink, CSV_HEADER};

//! Randomly block-activated primal-dual Douglas-Rachford splitting.
//!
//! The iteration runs Douglas-Rachford on `H x G` for the sum of the separable
//! function `(x, w) -> sum_i f_i(x_i) + sum_k g_k(w_k)` and the indicator of
//! the graph `V` of the stacked operator. At iteration `n` only the blocks
//! `i in I_n` and `k in K_n` are refreshed:
//!
//! ```text
//! x_i <- Q_i(z, y),      z_i <- z_i + lambda (prox_{gamma f_i}(2 x_i - z_i) - x_i)
//! w_k <- Q_{m+k}(z, y),  y_k <- y_k + lambda (prox_{gamma g_k}(2 w_k - y_k) - w_k)
//! ```
//!
//! where `Q_j` are the block coordinates of `proj_V`. All other blocks are
//! carried over untouched.

use std::sync::Arc;

use crate::block::BlockVector;
use crate::error::{Error, Result};
use crate::linops::SubspaceProjector;
use crate::problem::{KtPoint, ProblemSpec};
use crate::run::{check_activation, BlockSolver, Relaxation, StepOutcome};
use crate::schedule::{ActivationPlan, BlockSchedule};

#[derive(Debug, Clone)]
pub struct DrConfig {
    pub gamma: f64,
    pub lambda: Relaxation,
    pub plan: Arc<dyn BlockSchedule>,
}

impl DrConfig {
    /// `gamma = 1`, `lambda = 1.5`.
    pub fn new(plan: impl BlockSchedule + 'static) -> Self {
        Self {
            gamma: 1.0,
            lambda: Relaxation::Constant(1.5),
            plan: Arc::new(plan),
        }
    }

    pub fn full(spec: &ProblemSpec) -> Result<Self> {
        Ok(Self::new(ActivationPlan::full(spec.m(), spec.p())?))
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = Relaxation::Constant(lambda);
        self
    }

    fn validate(&self, spec: &ProblemSpec) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "gamma must be positive, got {}",
                self.gamma
            )));
        }
        self.lambda.validate()?;
        if self.plan.m() != spec.m() || self.plan.p() != spec.p() {
            return Err(Error::InvalidConfig(format!(
                "plan sized for m={}, p={} but problem has m={}, p={}",
                self.plan.m(),
                self.plan.p(),
                spec.m(),
                spec.p()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DrState {
    pub x: BlockVector,
    pub z: BlockVector,
    pub w: BlockVector,
    pub y: BlockVector,
    pub n: usize,
}

pub struct DouglasRachford<'a> {
    spec: &'a ProblemSpec,
    config: DrConfig,
    projector: Arc<SubspaceProjector>,
}

impl<'a> DouglasRachford<'a> {
    /// Validates `config` and factorizes the projector onto `V`.
    pub fn new(spec: &'a ProblemSpec, config: DrConfig) -> Result<Self> {
        config.validate(spec)?;
        let projector = Arc::new(SubspaceProjector::build(spec.shared_grid())?);
        Ok(Self {
            spec,
            config,
            projector,
        })
    }

    /// Reuses an existing projector, e.g. across seeds of the same instance.
    pub fn with_projector(spec: &'a ProblemSpec, config: DrConfig, projector: Arc<SubspaceProjector>) -> Result<Self> {
        config.validate(spec)?;
        if projector.grid() != spec.grid() {
            return Err(Error::InvalidInput("projector built for another operator grid".into()));
        }
        Ok(Self {
            spec,
            config,
            projector,
        })
    }

    pub fn config(&self) -> &DrConfig {
        &self.config
    }

    pub fn projector(&self) -> &Arc<SubspaceProjector> {
        &self.projector
    }

    /// All-zero starting point.
    pub fn init(&self) -> DrState {
        DrState {
            x: self.spec.primal_zeros(),
            z: self.spec.primal_zeros(),
            w: self.spec.dual_zeros(),
            y: self.spec.dual_zeros(),
            n: 0,
        }
    }

    pub fn warm_start(&self, x: BlockVector, z: BlockVector, w: BlockVector, y: BlockVector) -> Result<DrState> {
        let (h, g) = (self.spec.primal_dims(), self.spec.dual_dims());
        x.check_dims("warm start x", h)?;
        z.check_dims("warm start z", h)?;
        w.check_dims("warm start w", g)?;
        y.check_dims("warm start y", g)?;
        Ok(DrState { x, z, w, y, n: 0 })
    }
}

impl BlockSolver for DouglasRachford<'_> {
    type State = DrState;

    fn spec(&self) -> &ProblemSpec {
        self.spec
    }

    fn step(&self, state: &mut DrState) -> Result<StepOutcome> {
        let lambda = self.config.lambda.at(state.n)?;
        let gamma = self.config.gamma;
        let activation = self.config.plan.next_blocks(state.n);
        check_activation(&activation, self.spec.m(), self.spec.p())?;

        let (t, lt) = self.projector.project(&state.z, &state.y)?;
        for &i in &activation.primal {
            relaxed_reflection(
                &self.spec.f()[i],
                gamma,
                lambda,
                t.block(i),
                state.x.block_mut(i),
                state.z.block_mut(i),
            );
        }
        for &k in &activation.dual {
            relaxed_reflection(
                &self.spec.g()[k],
                gamma,
                lambda,
                lt.block(k),
                state.w.block_mut(k),
                state.y.block_mut(k),
            );
        }
        if !(state.z.is_finite() && state.y.is_finite()) {
            return Err(Error::Numerical(format!("non-finite iterate at iteration {}", state.n)));
        }
        state.n += 1;
        Ok(StepOutcome {
            activation,
            macs: self.projector.project_macs(),
        })
    }

    fn primal<'s>(&self, state: &'s DrState) -> &'s BlockVector {
        &state.x
    }

    /// `(x_n, (w_n - y_n) / gamma)`; at a fixed point this pair is Kuhn-Tucker.
    fn kt_point(&self, state: &DrState) -> KtPoint {
        let mut v_star = state.w.clone();
        v_star.axpy(-1.0, &state.y);
        v_star.scale(1.0 / self.config.gamma);
        KtPoint {
            x: state.x.clone(),
            v_star,
        }
    }

    fn setup_macs(&self) -> u64 {
        self.projector.setup_macs()
    }
}

/// `x <- q`, `z <- z + lambda (prox_{gamma h}(2 x - z) - x)`.
fn relaxed_reflection(h: &crate::prox::ProxFunction, gamma: f64, lambda: f64, q: &[f64], x: &mut [f64], z: &mut [f64]) {
    x.copy_from_slice(q);
    let reflected: Vec<f64> = x.iter().zip(z.iter()).map(|(a, b)| 2.0 * a - b).collect();
    let p = h.prox(&reflected, gamma);
    for ((zi, pi), xi) in z.iter_mut().zip(&p).zip(x.iter()) {
        *zi += lambda * (pi - xi);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linops::{BlockOperatorGrid, LinOp};
    use crate::prox::ProxFunction;
    use crate::run::{run, RunOptions};

    fn zero_spec() -> ProblemSpec {
        let mut grid = BlockOperatorGrid::new(vec![2, 1], vec![1, 2]);
        grid.insert(0, 0, LinOp::RowFunctional { u: vec![1.0, -1.0] }).unwrap();
        grid.insert(1, 1, LinOp::dense(2, 1, vec![2.0, 0.5])).unwrap();
        ProblemSpec::new(
            vec![ProxFunction::zero(2), ProxFunction::zero(1)],
            vec![ProxFunction::zero(1), ProxFunction::zero(2)],
            grid,
        )
        .unwrap()
    }

    fn tiny() -> ProblemSpec {
        let mut grid = BlockOperatorGrid::new(vec![1], vec![1]);
        grid.insert(0, 0, LinOp::Scaled { alpha: 1.0, dim: 1 }).unwrap();
        ProblemSpec::new(
            vec![ProxFunction::zero_indicator(1)],
            vec![ProxFunction::scaled_l2_norm(1.0, 1).unwrap()],
            grid,
        )
        .unwrap()
    }

    #[test]
    fn points_of_v_are_fixed_for_zero_functions() {
        let spec = zero_spec();
        let solver = DouglasRachford::new(&spec, DrConfig::full(&spec).unwrap()).unwrap();
        let z = BlockVector::from_blocks(vec![vec![1.0, 2.0], vec![-1.0]]);
        let y = spec.grid().apply_stacked(&z).unwrap();
        let mut state = solver.warm_start(z.clone(), z.clone(), y.clone(), y.clone()).unwrap();
        let before = state.clone();
        solver.step(&mut state).unwrap();
        for (a, b) in state.z.to_flat().iter().zip(before.z.to_flat()) {
            assert!((a - b).abs() < 1e-12);
        }
        for (a, b) in state.y.to_flat().iter().zip(before.y.to_flat()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn unit_relaxation_with_zero_functions_lands_on_projection() {
        let spec = zero_spec();
        let cfg = DrConfig::full(&spec).unwrap().with_lambda(1.0);
        let solver = DouglasRachford::new(&spec, cfg).unwrap();
        let z = BlockVector::from_blocks(vec![vec![1.0, 2.0], vec![-1.0]]);
        let y = BlockVector::from_blocks(vec![vec![3.0], vec![0.0, 1.0]]);
        let mut state = solver
            .warm_start(spec.primal_zeros(), z.clone(), spec.dual_zeros(), y.clone())
            .unwrap();
        solver.step(&mut state).unwrap();
        let (t, _) = solver.projector().project(&z, &y).unwrap();
        assert_eq!(state.z, t);
        assert_eq!(state.x, t);
    }

    #[test]
    fn zero_functions_converge_immediately() {
        let spec = zero_spec();
        let solver = DouglasRachford::new(&spec, DrConfig::full(&spec).unwrap()).unwrap();
        let mut state = solver.init();
        let mut trace = Vec::new();
        let summary = run(&solver, &mut state, &RunOptions::default(), &mut trace).unwrap();
        assert!(summary.converged);
        assert!(summary.iterations <= 2);
        assert_eq!(summary.kt_residual, 0.0);
    }

    #[test]
    fn tiny_instance_converges() {
        let spec = tiny();
        let cfg = DrConfig::full(&spec).unwrap().with_lambda(1.0);
        let solver = DouglasRachford::new(&spec, cfg).unwrap();
        let mut state = solver
            .warm_start(
                BlockVector::from_blocks(vec![vec![1.0]]),
                BlockVector::from_blocks(vec![vec![3.0]]),
                BlockVector::from_blocks(vec![vec![1.0]]),
                BlockVector::from_blocks(vec![vec![-2.0]]),
            )
            .unwrap();
        let opts = RunOptions {
            max_iterations: 500,
            stop_tolerance: 1e-9,
            ..RunOptions::default()
        };
        let summary = run(&solver, &mut state, &opts, &mut crate::trace::NullSink).unwrap();
        assert!(summary.converged, "{summary:?}");
        assert!(state.x.block(0)[0].abs() < 1e-8);
    }

    #[test]
    fn unselected_blocks_are_untouched() {
        let spec = zero_spec();
        let plan = ActivationPlan::random_subset(2, 2, 0.5, 0.5, 3).unwrap();
        let solver = DouglasRachford::new(&spec, DrConfig::new(plan.clone())).unwrap();
        let mut state = solver
            .warm_start(
                BlockVector::from_blocks(vec![vec![1.0, 2.0], vec![3.0]]),
                BlockVector::from_blocks(vec![vec![-1.0, 0.5], vec![2.0]]),
                BlockVector::from_blocks(vec![vec![0.25], vec![1.0, 1.0]]),
                BlockVector::from_blocks(vec![vec![4.0], vec![-3.0, 2.0]]),
            )
            .unwrap();
        for n in 0..10 {
            let before = state.clone();
            let act = plan.next_blocks(n);
            solver.step(&mut state).unwrap();
            for i in (0..2).filter(|i| !act.primal.contains(i)) {
                assert_eq!(state.x.block(i), before.x.block(i));
                assert_eq!(state.z.block(i), before.z.block(i));
            }
            for k in (0..2).filter(|k| !act.dual.contains(k)) {
                assert_eq!(state.w.block(k), before.w.block(k));
                assert_eq!(state.y.block(k), before.y.block(k));
            }
        }
    }

    #[test]
    fn rejects_bad_configuration() {
        let spec = tiny();
        assert!(DouglasRachford::new(&spec, DrConfig::full(&spec).unwrap().with_gamma(0.0)).is_err());
        assert!(DouglasRachford::new(&spec, DrConfig::full(&spec).unwrap().with_lambda(2.0)).is_err());
        let wrong = DrConfig::new(ActivationPlan::full(2, 1).unwrap());
        assert!(DouglasRachford::new(&spec, wrong).is_err());
    }

    #[test]
    fn init_is_zero() {
        let spec = zero_spec();
        let solver = DouglasRachford::new(&spec, DrConfig::full(&spec).unwrap()).unwrap();
        let s = solver.init();
        assert_eq!(s.x.norm() + s.z.norm() + s.w.norm() + s.y.norm(), 0.0);
    }
}

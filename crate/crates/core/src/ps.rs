//! Deterministic block-activated primal-dual projective splitting.
//!
//! Each iteration evaluates the proximity operators of the active blocks,
//! forms an affine function whose zero set separates the current point
//! `(x, v*)` from the Kuhn-Tucker set, and takes a relaxed projection onto it.
//! Blocks outside `I_n` / `K_n` reuse their last prox evaluations.
//!
//! Linear-operator products are cached per grid entry: `L_{k,i} a_i` changes
//! only when `i` is active and `L_{k,i}^* b*_k` only when `k` is, so the
//! residuals `t_k` and `t*_i` are refreshed for every block without touching
//! inactive operators.

use std::sync::Arc;

use crate::block::{axpy, BlockVector};
use crate::error::{Error, Result};
use crate::problem::{KtPoint, ProblemSpec};
use crate::run::{check_activation, BlockSolver, Relaxation, StepOutcome};
use crate::schedule::{Activation, ActivationPlan, BlockSchedule};

#[derive(Debug, Clone)]
pub struct PsConfig {
    /// One scale per primal block.
    pub gamma: Vec<f64>,
    /// One scale per coupling block.
    pub mu: Vec<f64>,
    pub lambda: Relaxation,
    pub plan: Arc<dyn BlockSchedule>,
}

impl PsConfig {
    /// All scales `1`, `lambda = 1.9`.
    pub fn new(spec: &ProblemSpec, plan: impl BlockSchedule + 'static) -> Self {
        Self {
            gamma: vec![1.0; spec.m()],
            mu: vec![1.0; spec.p()],
            lambda: Relaxation::Constant(1.9),
            plan: Arc::new(plan),
        }
    }

    pub fn full(spec: &ProblemSpec) -> Result<Self> {
        Ok(Self::new(spec, ActivationPlan::full(spec.m(), spec.p())?))
    }

    pub fn with_scales(mut self, gamma: f64, mu: f64) -> Self {
        self.gamma.iter_mut().for_each(|g| *g = gamma);
        self.mu.iter_mut().for_each(|m| *m = mu);
        self
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = Relaxation::Constant(lambda);
        self
    }

    fn validate(&self, spec: &ProblemSpec) -> Result<()> {
        if self.gamma.len() != spec.m() || self.mu.len() != spec.p() {
            return Err(Error::InvalidConfig(format!(
                "expected {} primal and {} dual scales, got {} and {}",
                spec.m(),
                spec.p(),
                self.gamma.len(),
                self.mu.len()
            )));
        }
        if let Some(bad) = self
            .gamma
            .iter()
            .chain(&self.mu)
            .find(|v| !(**v > 0.0 && v.is_finite()))
        {
            return Err(Error::InvalidConfig(format!("scales must be positive, got {bad}")));
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
pub struct PsState {
    pub x: BlockVector,
    pub v_star: BlockVector,
    pub a: BlockVector,
    pub a_star: BlockVector,
    pub b: BlockVector,
    pub b_star: BlockVector,
    /// `t_k = b_k - sum_i L_{k,i} a_i` from the last step.
    pub t: BlockVector,
    /// `t*_i = a*_i + sum_k L_{k,i}^* b*_k` from the last step.
    pub t_star: BlockVector,
    /// `L_{k,i} a_i` per grid entry.
    la: Vec<Vec<f64>>,
    /// `L_{k,i}^* b*_k` per grid entry.
    ltb: Vec<Vec<f64>>,
    pub n: usize,
}

impl PsState {
    /// Value at the current `(x, v*)` of the affine function built in the last step,
    /// `sum_i (<x_i, t*_i> - <a_i, a*_i>) + sum_k (<t_k, v*_k> - <b_k, b*_k>)`.
    ///
    /// Evaluated as `<x - a, t*> + <t, v* - b*>`, which is the same affine
    /// function (it vanishes at `(a, b*)`) but avoids the cancellation between
    /// large terms near a solution.
    pub fn hyperplane_value(&self) -> f64 {
        let mut v = 0.0;
        for ((x, a), ts) in self.x.blocks().iter().zip(self.a.blocks()).zip(self.t_star.blocks()) {
            v += x.iter().zip(a).zip(ts).map(|((x, a), t)| (x - a) * t).sum::<f64>();
        }
        for ((t, vs), bs) in self
            .t
            .blocks()
            .iter()
            .zip(self.v_star.blocks())
            .zip(self.b_star.blocks())
        {
            v += t.iter().zip(vs).zip(bs).map(|((t, v), b)| t * (v - b)).sum::<f64>();
        }
        v
    }

    /// The affine value summed term by term as written in the definition.
    pub fn hyperplane_value_expanded(&self) -> f64 {
        self.x.dot(&self.t_star) - self.a.dot(&self.a_star) + self.t.dot(&self.v_star) - self.b.dot(&self.b_star)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsStepReport {
    pub tau: f64,
    /// `0` when not evaluated (`tau = 0`).
    pub pi: f64,
    pub theta: f64,
    pub updated: bool,
}

pub struct ProjectiveSplitting<'a> {
    spec: &'a ProblemSpec,
    config: PsConfig,
}

impl<'a> ProjectiveSplitting<'a> {
    pub fn new(spec: &'a ProblemSpec, config: PsConfig) -> Result<Self> {
        config.validate(spec)?;
        Ok(Self { spec, config })
    }

    pub fn config(&self) -> &PsConfig {
        &self.config
    }

    pub fn init(&self) -> PsState {
        self.state_from(self.spec.primal_zeros(), self.spec.dual_zeros())
    }

    pub fn warm_start(&self, x: BlockVector, v_star: BlockVector) -> Result<PsState> {
        x.check_dims("warm start x", self.spec.primal_dims())?;
        v_star.check_dims("warm start v*", self.spec.dual_dims())?;
        Ok(self.state_from(x, v_star))
    }

    fn state_from(&self, x: BlockVector, v_star: BlockVector) -> PsState {
        let spec = self.spec;
        let entries = spec.grid().entries();
        PsState {
            x,
            v_star,
            a: spec.primal_zeros(),
            a_star: spec.primal_zeros(),
            b: spec.dual_zeros(),
            b_star: spec.dual_zeros(),
            t: spec.dual_zeros(),
            t_star: spec.primal_zeros(),
            la: entries.iter().map(|e| vec![0.0; e.op.out_dim()]).collect(),
            ltb: entries.iter().map(|e| vec![0.0; e.op.in_dim()]).collect(),
            n: 0,
        }
    }

    /// Activation used at iteration `n`: everything at `n = 0`, then the plan.
    pub fn activation(&self, n: usize) -> Activation {
        if n == 0 {
            Activation::full(self.spec.m(), self.spec.p())
        } else {
            self.config.plan.next_blocks(n)
        }
    }

    /// One iteration, returning the separator quantities alongside the work done.
    pub fn step_report(&self, state: &mut PsState) -> Result<(PsStepReport, StepOutcome)> {
        let spec = self.spec;
        let grid = spec.grid();
        let lambda = self.config.lambda.at(state.n)?;
        let activation = self.activation(state.n);
        check_activation(&activation, spec.m(), spec.p())?;
        let mut macs = 0;

        for &i in &activation.primal {
            let gamma = self.config.gamma[i];
            let mut xs = vec![0.0; spec.primal_dims()[i]];
            macs += grid.apply_col_adjoint(i, &state.v_star, &mut xs);
            for (s, xi) in xs.iter_mut().zip(state.x.block(i)) {
                *s = xi - gamma * *s;
            }
            let a = spec.f()[i].prox(&xs, gamma);
            let a_star: Vec<f64> = xs.iter().zip(&a).map(|(s, ai)| (s - ai) / gamma).collect();
            state.a.set_block(i, &a);
            state.a_star.set_block(i, &a_star);
            for &e in grid.col_entries(i) {
                let op = &grid.entries()[e].op;
                state.la[e].fill(0.0);
                op.apply_add(&a, &mut state.la[e]);
                macs += op.macs();
            }
        }

        for &k in &activation.dual {
            let mu = self.config.mu[k];
            let mut ys = vec![0.0; spec.dual_dims()[k]];
            macs += grid.apply_row(k, &state.x, &mut ys);
            for (s, vk) in ys.iter_mut().zip(state.v_star.block(k)) {
                *s += mu * vk;
            }
            let b = spec.g()[k].prox(&ys, mu);
            let b_star: Vec<f64> = ys.iter().zip(&b).map(|(s, bk)| (s - bk) / mu).collect();
            state.b.set_block(k, &b);
            state.b_star.set_block(k, &b_star);
            for &e in grid.row_entries(k) {
                let op = &grid.entries()[e].op;
                state.ltb[e].fill(0.0);
                op.adjoint_add(&b_star, &mut state.ltb[e]);
                macs += op.macs();
            }
        }

        for k in 0..spec.p() {
            let tk = state.t.block_mut(k);
            tk.copy_from_slice(state.b.block(k));
            for &e in grid.row_entries(k) {
                axpy(tk, -1.0, &state.la[e]);
            }
        }
        for i in 0..spec.m() {
            let ti = state.t_star.block_mut(i);
            ti.copy_from_slice(state.a_star.block(i));
            for &e in grid.col_entries(i) {
                axpy(ti, 1.0, &state.ltb[e]);
            }
        }

        let tau = state.t_star.norm_sq() + state.t.norm_sq();
        let mut report = PsStepReport {
            tau,
            pi: 0.0,
            theta: 0.0,
            updated: false,
        };
        if !tau.is_finite() {
            return Err(Error::Numerical(format!("tau is not finite at iteration {}", state.n)));
        }
        if tau > 0.0 {
            let pi = state.hyperplane_value();
            if !pi.is_finite() {
                return Err(Error::Numerical(format!("pi is not finite at iteration {}", state.n)));
            }
            report.pi = pi;
            if pi > 0.0 {
                let theta = lambda * pi / tau;
                state.x.axpy(-theta, &state.t_star);
                state.v_star.axpy(-theta, &state.t);
                report.theta = theta;
                report.updated = true;
            }
        }
        state.n += 1;
        Ok((report, StepOutcome { activation, macs }))
    }
}

impl BlockSolver for ProjectiveSplitting<'_> {
    type State = PsState;

    fn spec(&self) -> &ProblemSpec {
        self.spec
    }

    fn step(&self, state: &mut PsState) -> Result<StepOutcome> {
        self.step_report(state).map(|(_, out)| out)
    }

    fn primal<'s>(&self, state: &'s PsState) -> &'s BlockVector {
        &state.x
    }

    fn kt_point(&self, state: &PsState) -> KtPoint {
        KtPoint {
            x: state.x.clone(),
            v_star: state.v_star.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linops::{BlockOperatorGrid, LinOp};
    use crate::prox::ProxFunction;
    use crate::run::{run, RunOptions};
    use crate::trace::NullSink;

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

    fn scalar(v: f64) -> BlockVector {
        BlockVector::from_blocks(vec![vec![v]])
    }

    #[test]
    fn hand_computed_step() {
        let spec = tiny();
        let solver = ProjectiveSplitting::new(&spec, PsConfig::full(&spec).unwrap().with_lambda(1.0)).unwrap();
        let mut state = solver.warm_start(scalar(1.0), scalar(0.0)).unwrap();
        let (rep, _) = solver.step_report(&mut state).unwrap();
        assert_eq!(state.a, scalar(0.0));
        assert_eq!(state.a_star, scalar(1.0));
        assert_eq!(state.b, scalar(0.0));
        assert_eq!(state.b_star, scalar(1.0));
        assert_eq!(state.t, scalar(0.0));
        assert_eq!(state.t_star, scalar(2.0));
        assert_eq!(
            rep,
            PsStepReport {
                tau: 4.0,
                pi: 2.0,
                theta: 0.5,
                updated: true
            }
        );
        assert_eq!(state.x, scalar(0.0));
        assert_eq!(state.v_star, scalar(0.0));
        let pt = solver.kt_point(&state);
        assert_eq!(spec.kt_residual(&pt, 1.0, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn kt_points_are_stationary() {
        let spec = tiny();
        let solver = ProjectiveSplitting::new(&spec, PsConfig::full(&spec).unwrap()).unwrap();
        for v in [0.0, 0.5, -1.0] {
            let mut state = solver.warm_start(scalar(0.0), scalar(v)).unwrap();
            let (rep, _) = solver.step_report(&mut state).unwrap();
            assert_eq!(rep.tau, 0.0);
            assert!(!rep.updated);
            assert_eq!(state.x, scalar(0.0));
            assert_eq!(state.v_star, scalar(v));
        }
    }

    #[test]
    fn zero_functions_are_stationary_at_start() {
        let mut grid = BlockOperatorGrid::new(vec![2], vec![1]);
        grid.insert(0, 0, LinOp::RowFunctional { u: vec![1.0, 2.0] }).unwrap();
        let spec = ProblemSpec::new(vec![ProxFunction::zero(2)], vec![ProxFunction::zero(1)], grid).unwrap();
        let solver = ProjectiveSplitting::new(&spec, PsConfig::full(&spec).unwrap()).unwrap();
        let mut state = solver.init();
        let (rep, _) = solver.step_report(&mut state).unwrap();
        assert_eq!(rep.tau, 0.0);
        let summary = run(&solver, &mut solver.init(), &RunOptions::default(), &mut NullSink).unwrap();
        assert!(summary.converged);
        assert_eq!(summary.iterations, 0);
    }

    #[test]
    fn unit_relaxation_zeroes_the_hyperplane() {
        let mut grid = BlockOperatorGrid::new(vec![2, 1], vec![1, 2]);
        grid.insert(0, 0, LinOp::RowFunctional { u: vec![1.0, -1.0] }).unwrap();
        grid.insert(1, 1, LinOp::dense(2, 1, vec![2.0, 0.5])).unwrap();
        grid.insert(0, 1, LinOp::Scaled { alpha: 0.3, dim: 1 }).unwrap();
        let spec = ProblemSpec::new(
            vec![
                ProxFunction::scaled_l2_norm(0.5, 2).unwrap(),
                ProxFunction::box_indicator(-1.0, 1.0, 1).unwrap(),
            ],
            vec![
                ProxFunction::hinge(1.0).unwrap(),
                ProxFunction::scaled_sq_l2(1.0, vec![1.0, -2.0]).unwrap(),
            ],
            grid,
        )
        .unwrap();
        let plan = ActivationPlan::cyclic(2, 2, 2, 2).unwrap();
        let solver = ProjectiveSplitting::new(&spec, PsConfig::new(&spec, plan).with_lambda(1.0)).unwrap();
        let mut state = solver.init();
        let mut updates = 0;
        for _ in 0..50 {
            let before = state.clone();
            let (rep, out) = solver.step_report(&mut state).unwrap();
            assert!(rep.tau >= 0.0);
            if rep.pi != 0.0 {
                let before_expanded = PsState {
                    x: before.x.clone(),
                    v_star: before.v_star.clone(),
                    ..state.clone()
                };
                assert!((before_expanded.hyperplane_value_expanded() - rep.pi).abs() < 1e-9);
            }
            if rep.updated {
                updates += 1;
                assert!(state.hyperplane_value().abs() <= 1e-10);
            }
            if before.n > 0 {
                for i in (0..2).filter(|i| !out.activation.primal.contains(i)) {
                    assert_eq!(state.a.block(i), before.a.block(i));
                    assert_eq!(state.a_star.block(i), before.a_star.block(i));
                }
                for k in (0..2).filter(|k| !out.activation.dual.contains(k)) {
                    assert_eq!(state.b.block(k), before.b.block(k));
                    assert_eq!(state.b_star.block(k), before.b_star.block(k));
                }
            }
        }
        assert!(updates > 10);
    }

    #[test]
    fn first_iteration_activates_everything() {
        let spec = tiny();
        let plan = ActivationPlan::cyclic(1, 1, 1, 1).unwrap();
        let solver = ProjectiveSplitting::new(&spec, PsConfig::new(&spec, plan)).unwrap();
        assert_eq!(solver.activation(0), Activation::full(1, 1));
    }

    #[test]
    fn rejects_bad_configuration() {
        let spec = tiny();
        let mut cfg = PsConfig::full(&spec).unwrap();
        cfg.gamma[0] = -1.0;
        assert!(ProjectiveSplitting::new(&spec, cfg).is_err());
        let mut cfg = PsConfig::full(&spec).unwrap();
        cfg.mu.push(1.0);
        assert!(ProjectiveSplitting::new(&spec, cfg).is_err());
        assert!(ProjectiveSplitting::new(&spec, PsConfig::full(&spec).unwrap().with_lambda(0.0)).is_err());
    }
}

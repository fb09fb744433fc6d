//! Problem instances
//!
//! ```text
//! minimize  sum_i f_i(x_i) + sum_k g_k( sum_i L_{k,i} x_i )
//! ```
//!
//! over `x = (x_1, ..., x_m)`, together with objective evaluation and a
//! Kuhn-Tucker residual certifying primal-dual optimality.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::block::{norm, BlockVector};
use crate::error::{check_dim, Error, Result};
use crate::linops::BlockOperatorGrid;
use crate::prox::ProxFunction;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ProblemRepr", into = "ProblemRepr")]
pub struct ProblemSpec {
    f: Vec<ProxFunction>,
    g: Vec<ProxFunction>,
    grid: Arc<BlockOperatorGrid>,
}

#[derive(Serialize, Deserialize)]
struct ProblemRepr {
    f: Vec<ProxFunction>,
    g: Vec<ProxFunction>,
    grid: Arc<BlockOperatorGrid>,
}

impl TryFrom<ProblemRepr> for ProblemSpec {
    type Error = Error;

    fn try_from(r: ProblemRepr) -> Result<Self> {
        Self::new(r.f, r.g, r.grid)
    }
}

impl From<ProblemSpec> for ProblemRepr {
    fn from(s: ProblemSpec) -> Self {
        Self {
            f: s.f,
            g: s.g,
            grid: s.grid,
        }
    }
}

impl ProblemSpec {
    pub fn new(f: Vec<ProxFunction>, g: Vec<ProxFunction>, grid: impl Into<Arc<BlockOperatorGrid>>) -> Result<Self> {
        let grid = grid.into();
        check_dim("number of primal functions", grid.m(), f.len())?;
        check_dim("number of coupling functions", grid.p(), g.len())?;
        for (fi, &d) in f.iter().zip(grid.primal_dims()) {
            fi.validate()?;
            check_dim("primal function domain", d, fi.dim())?;
        }
        for (gk, &d) in g.iter().zip(grid.dual_dims()) {
            gk.validate()?;
            check_dim("coupling function domain", d, gk.dim())?;
        }
        Ok(Self { f, g, grid })
    }

    pub fn m(&self) -> usize {
        self.f.len()
    }

    pub fn p(&self) -> usize {
        self.g.len()
    }

    pub fn f(&self) -> &[ProxFunction] {
        &self.f
    }

    pub fn g(&self) -> &[ProxFunction] {
        &self.g
    }

    pub fn grid(&self) -> &BlockOperatorGrid {
        &self.grid
    }

    pub fn shared_grid(&self) -> Arc<BlockOperatorGrid> {
        Arc::clone(&self.grid)
    }

    pub fn primal_dims(&self) -> &[usize] {
        self.grid.primal_dims()
    }

    pub fn dual_dims(&self) -> &[usize] {
        self.grid.dual_dims()
    }

    pub fn primal_zeros(&self) -> BlockVector {
        BlockVector::zeros(self.primal_dims())
    }

    pub fn dual_zeros(&self) -> BlockVector {
        BlockVector::zeros(self.dual_dims())
    }

    /// `sum_i f_i(x_i) + sum_k g_k(sum_i L_{k,i} x_i)`, `+inf` if any term is.
    pub fn objective(&self, x: &BlockVector) -> Result<f64> {
        x.check_dims("objective_value", self.primal_dims())?;
        let lx = self.grid.apply_stacked(x)?;
        let mut total = 0.0;
        for (fi, xi) in self.f.iter().zip(x.blocks()) {
            total += fi.eval(xi);
        }
        for (gk, yk) in self.g.iter().zip(lx.blocks()) {
            total += gk.eval(yk);
        }
        Ok(if total.is_nan() { f64::INFINITY } else { total })
    }

    /// Sum of block distances between `pt` and its image under the
    /// forward-backward maps whose fixed points are the Kuhn-Tucker points:
    ///
    /// ```text
    /// sum_i || x_i - prox_{gamma f_i}(x_i - gamma sum_k L_{k,i}^* v_k) ||
    ///   + sum_k || v_k - prox_{mu g_k^*}(v_k + mu sum_i L_{k,i} x_i) ||
    /// ```
    pub fn kt_residual(&self, pt: &KtPoint, gamma: f64, mu: f64) -> Result<f64> {
        if !(gamma > 0.0 && mu > 0.0) {
            return Err(Error::InvalidInput(format!(
                "residual scales must be positive, got gamma={gamma}, mu={mu}"
            )));
        }
        pt.x.check_dims("kt_residual primal", self.primal_dims())?;
        pt.v_star.check_dims("kt_residual dual", self.dual_dims())?;
        let ltv = self.grid.apply_stacked_adjoint(&pt.v_star)?;
        let lx = self.grid.apply_stacked(&pt.x)?;
        let mut total = 0.0;
        for (i, fi) in self.f.iter().enumerate() {
            let xi = pt.x.block(i);
            let arg: Vec<f64> = xi.iter().zip(ltv.block(i)).map(|(a, b)| a - gamma * b).collect();
            let p = fi.prox(&arg, gamma);
            total += distance(xi, &p);
        }
        for (k, gk) in self.g.iter().enumerate() {
            let vk = pt.v_star.block(k);
            let arg: Vec<f64> = vk.iter().zip(lx.block(k)).map(|(a, b)| a + mu * b).collect();
            let p = gk.prox_conjugate(&arg, mu);
            total += distance(vk, &p);
        }
        Ok(total)
    }
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    norm(&d)
}

/// A primal-dual pair `(x, v*)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KtPoint {
    pub x: BlockVector,
    pub v_star: BlockVector,
}

impl KtPoint {
    pub fn zeros(spec: &ProblemSpec) -> Self {
        Self {
            x: spec.primal_zeros(),
            v_star: spec.dual_zeros(),
        }
    }
}

pub fn objective_value(spec: &ProblemSpec, x: &BlockVector) -> Result<f64> {
    spec.objective(x)
}

pub fn kt_residual(spec: &ProblemSpec, pt: &KtPoint, gamma: f64, mu: f64) -> Result<f64> {
    spec.kt_residual(pt, gamma, mu)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::linops::LinOp;

    /// f = iota_{0}, g = |.|, L = 1 on the real line.
    pub(crate) fn tiny() -> ProblemSpec {
        let mut grid = BlockOperatorGrid::new(vec![1], vec![1]);
        grid.insert(0, 0, LinOp::Scaled { alpha: 1.0, dim: 1 }).unwrap();
        ProblemSpec::new(
            vec![ProxFunction::zero_indicator(1)],
            vec![ProxFunction::scaled_l2_norm(1.0, 1).unwrap()],
            grid,
        )
        .unwrap()
    }

    fn pt(x: f64, v: f64) -> KtPoint {
        KtPoint {
            x: BlockVector::from_blocks(vec![vec![x]]),
            v_star: BlockVector::from_blocks(vec![vec![v]]),
        }
    }

    #[test]
    fn zero_functions_have_zero_objective_and_residual() {
        let mut grid = BlockOperatorGrid::new(vec![2, 1], vec![1]);
        grid.insert(0, 1, LinOp::Scaled { alpha: 2.0, dim: 1 }).unwrap();
        let spec = ProblemSpec::new(
            vec![ProxFunction::zero(2), ProxFunction::zero(1)],
            vec![ProxFunction::zero(1)],
            grid,
        )
        .unwrap();
        let x = BlockVector::from_blocks(vec![vec![1.0, 2.0], vec![3.0]]);
        assert_eq!(spec.objective(&x).unwrap(), 0.0);
        assert_eq!(spec.kt_residual(&KtPoint::zeros(&spec), 1.0, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn objective_of_single_norm_block() {
        let spec = ProblemSpec::new(
            vec![ProxFunction::scaled_l2_norm(0.1, 3).unwrap()],
            vec![],
            BlockOperatorGrid::new(vec![3], vec![]),
        )
        .unwrap();
        let x = BlockVector::from_blocks(vec![vec![2.0, 0.0, 0.0]]);
        assert!((spec.objective(&x).unwrap() - 0.2).abs() < 1e-15);
    }

    #[test]
    fn objective_is_infinite_outside_box() {
        let spec = ProblemSpec::new(
            vec![ProxFunction::box_indicator(0.0, 255.0, 2).unwrap()],
            vec![],
            BlockOperatorGrid::new(vec![2], vec![]),
        )
        .unwrap();
        let x = BlockVector::from_blocks(vec![vec![300.0, 1.0]]);
        assert_eq!(spec.objective(&x).unwrap(), f64::INFINITY);
        assert!(spec.objective(&BlockVector::zeros(&[3])).is_err());
    }

    #[test]
    fn residual_on_tiny_instance() {
        let spec = tiny();
        assert_eq!(spec.kt_residual(&pt(0.0, 0.0), 1.0, 1.0).unwrap(), 0.0);
        // v* anywhere in [-1, 1] certifies x = 0
        assert_eq!(spec.kt_residual(&pt(0.0, 0.5), 1.0, 1.0).unwrap(), 0.0);
        assert!(spec.kt_residual(&pt(1.0, 0.0), 1.0, 1.0).unwrap() >= 1.0);
        assert!(spec.kt_residual(&pt(0.0, 0.0), 0.0, 1.0).is_err());
    }

    #[test]
    fn construction_checks_domains() {
        let grid = BlockOperatorGrid::new(vec![2], vec![1]);
        assert!(ProblemSpec::new(vec![ProxFunction::zero(3)], vec![ProxFunction::zero(1)], grid.clone()).is_err());
        assert!(ProblemSpec::new(vec![ProxFunction::zero(2)], vec![], grid).is_err());
    }
}

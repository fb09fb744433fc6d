use std::sync::Arc;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use super::BlockOperatorGrid;
use crate::block::BlockVector;
use crate::error::{Error, Result};

/// Which Gram operator was factorized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GramSide {
    /// `Id + L L^*` on `G` (size `M x M`); projection via `s`.
    Dual,
    /// `Id + L^* L` on `H` (size `N x N`); projection via `t`.
    Primal,
}

/// Projector onto the graph `V = {(z, y) : y = L z}` of the stacked operator.
///
/// Either
/// `t = (Id + L^* L)^{-1} (z + L^* y)` and the projection is `(t, L t)`, or
/// `s = (Id + L L^*)^{-1} (L z - y)` and the projection is `(z - L^* s, y + s)`.
/// Both give the same point; the smaller Gram is factorized by default.
#[derive(Debug, Clone)]
pub struct SubspaceProjector {
    grid: Arc<BlockOperatorGrid>,
    side: GramSide,
    factor: Cholesky<f64, Dyn>,
    setup_macs: u64,
}

impl SubspaceProjector {
    /// Factorizes `Id + L L^*` when `M <= N`, else `Id + L^* L`.
    pub fn build(grid: Arc<BlockOperatorGrid>) -> Result<Self> {
        let side = if grid.dual_total() <= grid.primal_total() {
            GramSide::Dual
        } else {
            GramSide::Primal
        };
        Self::build_with_side(grid, side)
    }

    pub fn build_with_side(grid: Arc<BlockOperatorGrid>, side: GramSide) -> Result<Self> {
        let l = grid.to_dense();
        let (m, n) = l.shape();
        let gram = match side {
            GramSide::Dual => &l * l.transpose(),
            GramSide::Primal => l.transpose() * &l,
        };
        let dim = gram.nrows();
        let gram = gram + DMatrix::identity(dim, dim);
        let factor = Cholesky::new(gram)
            .ok_or_else(|| Error::Factorization("Gram operator is not numerically positive definite".into()))?;
        let (small, large) = (m.min(n) as u64, m.max(n) as u64);
        let setup_macs = (m * n) as u64 + small * small * large + small.pow(3) / 3;
        Ok(Self {
            grid,
            side,
            factor,
            setup_macs,
        })
    }

    pub fn side(&self) -> GramSide {
        self.side
    }

    pub fn grid(&self) -> &BlockOperatorGrid {
        &self.grid
    }

    /// Approximate multiply-accumulate count spent materializing and factorizing.
    pub fn setup_macs(&self) -> u64 {
        self.setup_macs
    }

    /// Multiply-accumulate count of one call to [`Self::project`].
    pub fn project_macs(&self) -> u64 {
        let d = self.factor.l_dirty().nrows() as u64;
        2 * self.grid.stacked_macs() + 2 * d * d
    }

    fn solve(&self, rhs: Vec<f64>) -> Vec<f64> {
        let mut v = DVector::from_vec(rhs);
        self.factor.solve_mut(&mut v);
        v.data.into()
    }

    /// `proj_V(z, y) = (t, L t)`.
    pub fn project(&self, z: &BlockVector, y: &BlockVector) -> Result<(BlockVector, BlockVector)> {
        let grid = &self.grid;
        z.check_dims("project_V primal", grid.primal_dims())?;
        y.check_dims("project_V dual", grid.dual_dims())?;
        match self.side {
            GramSide::Dual => {
                let mut r = grid.apply_stacked(z)?;
                r.axpy(-1.0, y);
                let s = BlockVector::from_flat(grid.dual_dims(), &self.solve(r.to_flat()))?;
                let mut t = z.clone();
                t.axpy(-1.0, &grid.apply_stacked_adjoint(&s)?);
                let mut u = y.clone();
                u.axpy(1.0, &s);
                Ok((t, u))
            }
            GramSide::Primal => {
                let mut r = grid.apply_stacked_adjoint(y)?;
                r.axpy(1.0, z);
                let t = BlockVector::from_flat(grid.primal_dims(), &self.solve(r.to_flat()))?;
                let u = grid.apply_stacked(&t)?;
                Ok((t, u))
            }
        }
    }

    /// Coordinate operator `Q_j`: block `j` of `proj_V(z, y)`, where indices
    /// `0..m` address `t` and `m..m+p` address `L t`.
    pub fn coordinate(&self, j: usize, z: &BlockVector, y: &BlockVector) -> Result<Vec<f64>> {
        let (m, p) = (self.grid.m(), self.grid.p());
        if j >= m + p {
            return Err(Error::IndexOutOfRange { index: j, len: m + p });
        }
        let (t, u) = self.project(z, y)?;
        Ok(if j < m {
            t.block(j).to_vec()
        } else {
            u.block(j - m).to_vec()
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linops::LinOp;

    fn scalar(alpha: f64) -> Arc<BlockOperatorGrid> {
        let mut g = BlockOperatorGrid::new(vec![1], vec![1]);
        g.insert(0, 0, LinOp::Scaled { alpha, dim: 1 }).unwrap();
        Arc::new(g)
    }

    fn bv(v: &[f64]) -> BlockVector {
        BlockVector::from_blocks(vec![v.to_vec()])
    }

    #[test]
    fn scalar_projection_both_sides() {
        for side in [GramSide::Dual, GramSide::Primal] {
            let proj = SubspaceProjector::build_with_side(scalar(2.0), side).unwrap();
            let (t, u) = proj.project(&bv(&[1.0]), &bv(&[0.0])).unwrap();
            assert!((t.block(0)[0] - 0.2).abs() < 1e-15);
            assert!((u.block(0)[0] - 0.4).abs() < 1e-15);
            assert!((proj.coordinate(0, &bv(&[1.0]), &bv(&[0.0])).unwrap()[0] - 0.2).abs() < 1e-15);
            assert!((proj.coordinate(1, &bv(&[1.0]), &bv(&[0.0])).unwrap()[0] - 0.4).abs() < 1e-15);
            assert!(proj.coordinate(2, &bv(&[1.0]), &bv(&[0.0])).is_err());
        }
    }

    #[test]
    fn zero_grid_projects_dual_to_zero() {
        let g = Arc::new(BlockOperatorGrid::new(vec![2], vec![3]));
        let proj = SubspaceProjector::build(g).unwrap();
        let z = bv(&[1.0, -2.0]);
        let (t, u) = proj.project(&z, &bv(&[4.0, 5.0, 6.0])).unwrap();
        assert_eq!(t, z);
        assert_eq!(u, bv(&[0.0, 0.0, 0.0]));
    }

    #[test]
    fn identity_averages() {
        let mut g = BlockOperatorGrid::new(vec![2], vec![2]);
        g.insert(0, 0, LinOp::Scaled { alpha: 1.0, dim: 2 }).unwrap();
        let proj = SubspaceProjector::build(Arc::new(g)).unwrap();
        let (t, u) = proj.project(&bv(&[1.0, 3.0]), &bv(&[3.0, -1.0])).unwrap();
        for w in [t, u] {
            assert!((w.block(0)[0] - 2.0).abs() < 1e-15);
            assert!((w.block(0)[1] - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn points_of_the_graph_are_fixed() {
        let proj = SubspaceProjector::build(scalar(-3.0)).unwrap();
        let (t, u) = proj.project(&bv(&[0.7]), &bv(&[-2.1])).unwrap();
        assert!((t.block(0)[0] - 0.7).abs() < 1e-15);
        assert!((u.block(0)[0] + 2.1).abs() < 1e-15);
    }
}

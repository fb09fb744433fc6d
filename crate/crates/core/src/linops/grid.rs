use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::LinOp;
use crate::block::BlockVector;
use crate::error::{check_dim, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridEntry {
    /// Coupling-term index `k`.
    pub row: usize,
    /// Primal block index `i`.
    pub col: usize,
    pub op: LinOp,
}

#[derive(Serialize, Deserialize)]
struct GridRepr {
    primal_dims: Vec<usize>,
    dual_dims: Vec<usize>,
    entries: Vec<GridEntry>,
}

/// The `p x m` grid of operators `L_{k,i}: H_i -> G_k`. Missing entries are
/// structural zeros. Induces the stacked operator
/// `L x = (sum_i L_{1,i} x_i, ..., sum_i L_{p,i} x_i)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridRepr", into = "GridRepr")]
pub struct BlockOperatorGrid {
    primal_dims: Vec<usize>,
    dual_dims: Vec<usize>,
    entries: Vec<GridEntry>,
    by_row: Vec<Vec<usize>>,
    by_col: Vec<Vec<usize>>,
}

impl TryFrom<GridRepr> for BlockOperatorGrid {
    type Error = Error;

    fn try_from(repr: GridRepr) -> Result<Self> {
        let mut grid = Self::new(repr.primal_dims, repr.dual_dims);
        for e in repr.entries {
            grid.insert(e.row, e.col, e.op)?;
        }
        Ok(grid)
    }
}

impl From<BlockOperatorGrid> for GridRepr {
    fn from(g: BlockOperatorGrid) -> Self {
        Self {
            primal_dims: g.primal_dims,
            dual_dims: g.dual_dims,
            entries: g.entries,
        }
    }
}

impl BlockOperatorGrid {
    /// Empty grid between `H = prod_i R^{primal_dims[i]}` and `G = prod_k R^{dual_dims[k]}`.
    pub fn new(primal_dims: Vec<usize>, dual_dims: Vec<usize>) -> Self {
        Self {
            by_row: vec![Vec::new(); dual_dims.len()],
            by_col: vec![Vec::new(); primal_dims.len()],
            primal_dims,
            dual_dims,
            entries: Vec::new(),
        }
    }

    /// Sets `L_{row,col} = op`, replacing any previous entry.
    pub fn insert(&mut self, row: usize, col: usize, op: LinOp) -> Result<()> {
        if row >= self.p() {
            return Err(Error::IndexOutOfRange {
                index: row,
                len: self.p(),
            });
        }
        if col >= self.m() {
            return Err(Error::IndexOutOfRange {
                index: col,
                len: self.m(),
            });
        }
        check_dim("grid entry input", self.primal_dims[col], op.in_dim())?;
        check_dim("grid entry output", self.dual_dims[row], op.out_dim())?;
        if let Some(&idx) = self.by_row[row].iter().find(|&&e| self.entries[e].col == col) {
            self.entries[idx].op = op;
        } else {
            self.by_row[row].push(self.entries.len());
            self.by_col[col].push(self.entries.len());
            self.entries.push(GridEntry { row, col, op });
        }
        Ok(())
    }

    /// Number of primal blocks.
    pub fn m(&self) -> usize {
        self.primal_dims.len()
    }

    /// Number of coupling terms.
    pub fn p(&self) -> usize {
        self.dual_dims.len()
    }

    pub fn primal_dims(&self) -> &[usize] {
        &self.primal_dims
    }

    pub fn dual_dims(&self) -> &[usize] {
        &self.dual_dims
    }

    /// `N = dim H`
    pub fn primal_total(&self) -> usize {
        self.primal_dims.iter().sum()
    }

    /// `M = dim G`
    pub fn dual_total(&self) -> usize {
        self.dual_dims.iter().sum()
    }

    pub fn entries(&self) -> &[GridEntry] {
        &self.entries
    }

    pub fn get(&self, row: usize, col: usize) -> Option<&LinOp> {
        self.by_row
            .get(row)?
            .iter()
            .map(|&e| &self.entries[e])
            .find(|e| e.col == col)
            .map(|e| &e.op)
    }

    /// Positions in [`Self::entries`] of the entries of row `k`.
    pub fn row_entries(&self, k: usize) -> &[usize] {
        &self.by_row[k]
    }

    /// Positions in [`Self::entries`] of the entries of column `i`.
    pub fn col_entries(&self, i: usize) -> &[usize] {
        &self.by_col[i]
    }

    /// Power-iteration estimate of the spectral norm `||L||`.
    pub fn norm_estimate(&self, iterations: usize) -> f64 {
        let mut x = BlockVector::from_blocks(
            self.primal_dims
                .iter()
                .enumerate()
                .map(|(i, &n)| (0..n).map(|j| 1.0 + ((i * 31 + j * 17) % 7) as f64 / 7.0).collect())
                .collect(),
        );
        let mut est = 0.0;
        for _ in 0..iterations.max(1) {
            let nx = x.norm();
            if nx == 0.0 {
                return 0.0;
            }
            x.scale(1.0 / nx);
            let lx = self.apply_stacked(&x).expect("dims fixed by construction");
            est = lx.norm();
            x = self.apply_stacked_adjoint(&lx).expect("dims fixed by construction");
        }
        est
    }

    /// Nonzero entries `(i, L_{k,i})` of row `k`.
    pub fn row(&self, k: usize) -> impl Iterator<Item = (usize, &LinOp)> {
        self.by_row[k]
            .iter()
            .map(move |&e| (self.entries[e].col, &self.entries[e].op))
    }

    /// Nonzero entries `(k, L_{k,i})` of column `i`.
    pub fn col(&self, i: usize) -> impl Iterator<Item = (usize, &LinOp)> {
        self.by_col[i]
            .iter()
            .map(move |&e| (self.entries[e].row, &self.entries[e].op))
    }

    /// `out = sum_i L_{k,i} x_i`; returns the multiply-accumulate count.
    pub fn apply_row(&self, k: usize, x: &BlockVector, out: &mut [f64]) -> u64 {
        out.fill(0.0);
        self.row(k)
            .map(|(i, op)| {
                op.apply_add(x.block(i), out);
                op.macs()
            })
            .sum()
    }

    /// `out = sum_k L_{k,i}^* v_k`; returns the multiply-accumulate count.
    pub fn apply_col_adjoint(&self, i: usize, v: &BlockVector, out: &mut [f64]) -> u64 {
        out.fill(0.0);
        self.col(i)
            .map(|(k, op)| {
                op.adjoint_add(v.block(k), out);
                op.macs()
            })
            .sum()
    }

    /// Cost of one full application of the stacked operator.
    pub fn stacked_macs(&self) -> u64 {
        self.entries.iter().map(|e| e.op.macs()).sum()
    }

    /// Stacked operator `L: H -> G`.
    pub fn apply_stacked(&self, x: &BlockVector) -> Result<BlockVector> {
        x.check_dims("apply_stacked", &self.primal_dims)?;
        let mut out = BlockVector::zeros(&self.dual_dims);
        for e in &self.entries {
            e.op.apply_add(x.block(e.col), out.block_mut(e.row));
        }
        Ok(out)
    }

    /// Adjoint `L^*: G -> H`.
    pub fn apply_stacked_adjoint(&self, v: &BlockVector) -> Result<BlockVector> {
        v.check_dims("apply_stacked_adjoint", &self.dual_dims)?;
        let mut out = BlockVector::zeros(&self.primal_dims);
        for e in &self.entries {
            e.op.adjoint_add(v.block(e.row), out.block_mut(e.col));
        }
        Ok(out)
    }

    /// Dense `M x N` matrix of the stacked operator.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let row_off = offsets(&self.dual_dims);
        let col_off = offsets(&self.primal_dims);
        let mut m = DMatrix::zeros(self.dual_total(), self.primal_total());
        for e in &self.entries {
            let block = e.op.to_dense();
            m.view_mut((row_off[e.row], col_off[e.col]), (block.nrows(), block.ncols()))
                .copy_from(&block);
        }
        m
    }
}

pub(crate) fn offsets(dims: &[usize]) -> Vec<usize> {
    let mut acc = 0;
    dims.iter()
        .map(|d| {
            let o = acc;
            acc += d;
            o
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_grid_maps_to_zero() {
        let g = BlockOperatorGrid::new(vec![2, 1], vec![3]);
        let x = BlockVector::from_blocks(vec![vec![1.0, 2.0], vec![3.0]]);
        assert_eq!(g.apply_stacked(&x).unwrap(), BlockVector::zeros(&[3]));
    }

    #[test]
    fn scalar_grid() {
        let mut g = BlockOperatorGrid::new(vec![1], vec![1]);
        g.insert(0, 0, LinOp::Scaled { alpha: 2.0, dim: 1 }).unwrap();
        let one = BlockVector::from_blocks(vec![vec![1.0]]);
        assert_eq!(g.apply_stacked(&one).unwrap().block(0), &[2.0]);
        assert_eq!(g.apply_stacked_adjoint(&one).unwrap().block(0), &[2.0]);
        let zero = BlockVector::zeros(&[1]);
        assert_eq!(g.apply_stacked_adjoint(&zero).unwrap(), zero);
    }

    #[test]
    fn insert_checks_dimensions() {
        let mut g = BlockOperatorGrid::new(vec![2], vec![1]);
        assert!(g.insert(0, 0, LinOp::RowFunctional { u: vec![1.0; 3] }).is_err());
        assert!(g.insert(1, 0, LinOp::RowFunctional { u: vec![1.0; 2] }).is_err());
        g.insert(0, 0, LinOp::RowFunctional { u: vec![1.0; 2] }).unwrap();
        g.insert(0, 0, LinOp::RowFunctional { u: vec![2.0; 2] }).unwrap();
        assert_eq!(g.entries().len(), 1);
        let x = BlockVector::from_blocks(vec![vec![1.0, 1.0]]);
        assert_eq!(g.apply_stacked(&x).unwrap().block(0), &[4.0]);
    }

    #[test]
    fn serde_round_trip_rebuilds_indices() {
        let mut g = BlockOperatorGrid::new(vec![1, 2], vec![1, 1]);
        g.insert(1, 1, LinOp::RowFunctional { u: vec![1.0, -1.0] }).unwrap();
        g.insert(0, 0, LinOp::Scaled { alpha: 3.0, dim: 1 }).unwrap();
        let json = serde_json::to_string(&g).unwrap();
        let back: BlockOperatorGrid = serde_json::from_str(&json).unwrap();
        assert_eq!(back, g);
        assert_eq!(back.col(1).count(), 1);
    }

    #[test]
    fn mismatched_input_is_rejected() {
        let g = BlockOperatorGrid::new(vec![2], vec![1]);
        assert!(g.apply_stacked(&BlockVector::zeros(&[3])).is_err());
        assert!(g.apply_stacked_adjoint(&BlockVector::zeros(&[2])).is_err());
    }
}

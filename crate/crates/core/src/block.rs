//! Elements of product spaces `H_1 x ... x H_m`.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

/// A vector in a product of Euclidean spaces, stored one block at a time so
/// that updating a subset of blocks never touches the others.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockVector {
    blocks: Vec<Vec<f64>>,
}

impl BlockVector {
    pub fn zeros(dims: &[usize]) -> Self {
        Self {
            blocks: dims.iter().map(|&d| vec![0.0; d]).collect(),
        }
    }

    pub fn from_blocks(blocks: Vec<Vec<f64>>) -> Self {
        Self { blocks }
    }

    /// Splits a flat vector into consecutive blocks of the given sizes.
    pub fn from_flat(dims: &[usize], flat: &[f64]) -> Result<Self> {
        check_dim("BlockVector::from_flat", dims.iter().sum(), flat.len())?;
        let mut offset = 0;
        let blocks = dims
            .iter()
            .map(|&d| {
                let b = flat[offset..offset + d].to_vec();
                offset += d;
                b
            })
            .collect();
        Ok(Self { blocks })
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.blocks.iter().map(Vec::len).collect()
    }

    /// Total dimension of the product space.
    pub fn total_dim(&self) -> usize {
        self.blocks.iter().map(Vec::len).sum()
    }

    pub fn block(&self, i: usize) -> &[f64] {
        &self.blocks[i]
    }

    pub fn block_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.blocks[i]
    }

    pub fn blocks(&self) -> &[Vec<f64>] {
        &self.blocks
    }

    pub fn into_blocks(self) -> Vec<Vec<f64>> {
        self.blocks
    }

    pub fn set_block(&mut self, i: usize, values: &[f64]) {
        self.blocks[i].copy_from_slice(values);
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.blocks.iter().flatten().copied().collect()
    }

    pub fn check_dims(&self, context: &'static str, dims: &[usize]) -> Result<()> {
        check_dim(context, dims.len(), self.blocks.len())?;
        for (b, &d) in self.blocks.iter().zip(dims) {
            check_dim(context, d, b.len())?;
        }
        Ok(())
    }

    pub fn norm_sq(&self) -> f64 {
        self.blocks.iter().map(|b| dot(b, b)).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.blocks.iter().zip(&other.blocks).map(|(a, b)| dot(a, b)).sum()
    }

    /// `self += alpha * other`
    pub fn axpy(&mut self, alpha: f64, other: &Self) {
        for (a, b) in self.blocks.iter_mut().zip(&other.blocks) {
            axpy(a, alpha, b);
        }
    }

    pub fn scale(&mut self, alpha: f64) {
        for v in self.blocks.iter_mut().flatten() {
            *v *= alpha;
        }
    }

    /// Euclidean distance `||self - other||`.
    pub fn distance(&self, other: &Self) -> f64 {
        self.blocks
            .iter()
            .zip(&other.blocks)
            .flat_map(|(a, b)| a.iter().zip(b))
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt()
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        if self.dims() != other.dims() {
            return Err(Error::InvalidInput(
                "block vectors live in different product spaces".into(),
            ));
        }
        let mut out = self.clone();
        out.axpy(-1.0, other);
        Ok(out)
    }

    pub fn is_finite(&self) -> bool {
        self.blocks.iter().flatten().all(|v| v.is_finite())
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn axpy(y: &mut [f64], alpha: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

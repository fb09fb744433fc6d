use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::block::dot;

/// Rows `[start, start + len)` of a nonstationary Gaussian blur acting on a
/// `side x side` image stored row-major.
///
/// The kernel width grows linearly with the image row of the output pixel,
/// from `sigma_top` on the first row to `sigma_bottom` on the last. Kernels
/// are truncated to a `(2 radius + 1)^2` window and renormalized over the
/// pixels that fall inside the image, so constant images are preserved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlurRows {
    pub side: usize,
    pub start: usize,
    pub len: usize,
    pub sigma_top: f64,
    pub sigma_bottom: f64,
    pub radius: usize,
}

impl BlurRows {
    fn sigma(&self, row: usize) -> f64 {
        if self.side <= 1 {
            return self.sigma_top;
        }
        let t = row as f64 / (self.side - 1) as f64;
        self.sigma_top + t * (self.sigma_bottom - self.sigma_top)
    }

    /// Calls `visit(input_pixel, weight)` for every tap of output pixel `out`.
    fn for_each_tap(&self, out: usize, mut visit: impl FnMut(usize, f64)) {
        let (r, c) = (out / self.side, out % self.side);
        let sigma = self.sigma(r);
        let rad = self.radius as isize;
        let kernel: Vec<f64> = (-rad..=rad)
            .map(|d| (-((d * d) as f64) / (2.0 * sigma * sigma)).exp())
            .collect();
        let range = |center: usize| {
            let lo = (center as isize - rad).max(0);
            let hi = (center as isize + rad).min(self.side as isize - 1);
            (lo, hi)
        };
        let (r_lo, r_hi) = range(r);
        let (c_lo, c_hi) = range(c);
        let k = |center: usize, at: isize| kernel[(at - center as isize + rad) as usize];
        let row_mass: f64 = (r_lo..=r_hi).map(|rr| k(r, rr)).sum();
        let col_mass: f64 = (c_lo..=c_hi).map(|cc| k(c, cc)).sum();
        let norm = row_mass * col_mass;
        for rr in r_lo..=r_hi {
            let wr = k(r, rr);
            for cc in c_lo..=c_hi {
                visit(rr as usize * self.side + cc as usize, wr * k(c, cc) / norm);
            }
        }
    }
}

/// A linear map between Euclidean spaces together with its adjoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LinOp {
    /// Row-major `rows x cols` matrix.
    Dense {
        rows: usize,
        cols: usize,
        data: Vec<f64>,
    },
    /// `x -> <x, u>`, a map into the reals.
    RowFunctional {
        u: Vec<f64>,
    },
    /// `x -> alpha x`
    Scaled {
        alpha: f64,
        dim: usize,
    },
    /// Extracts image row `row` from a `side x side` image.
    RowSelect {
        side: usize,
        row: usize,
    },
    /// Forward differences with reflecting boundary, horizontal differences
    /// stacked above vertical ones: `R^N -> R^N x R^N`.
    Difference {
        side: usize,
    },
    Blur(BlurRows),
}

impl LinOp {
    pub fn dense(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "dense operator data length");
        Self::Dense { rows, cols, data }
    }

    pub fn from_matrix(m: &DMatrix<f64>) -> Self {
        let (rows, cols) = m.shape();
        let data = (0..rows).flat_map(|r| (0..cols).map(move |c| m[(r, c)])).collect();
        Self::Dense { rows, cols, data }
    }

    pub fn in_dim(&self) -> usize {
        match self {
            Self::Dense { cols, .. } => *cols,
            Self::RowFunctional { u } => u.len(),
            Self::Scaled { dim, .. } => *dim,
            Self::RowSelect { side, .. } | Self::Difference { side } => side * side,
            Self::Blur(b) => b.side * b.side,
        }
    }

    pub fn out_dim(&self) -> usize {
        match self {
            Self::Dense { rows, .. } => *rows,
            Self::RowFunctional { .. } => 1,
            Self::Scaled { dim, .. } => *dim,
            Self::RowSelect { side, .. } => *side,
            Self::Difference { side } => 2 * side * side,
            Self::Blur(b) => b.len,
        }
    }

    /// Multiply-accumulate count of one forward (or adjoint) application.
    pub fn macs(&self) -> u64 {
        let n = match self {
            Self::Dense { rows, cols, .. } => rows * cols,
            Self::RowFunctional { u } => u.len(),
            Self::Scaled { dim, .. } => *dim,
            Self::RowSelect { side, .. } => *side,
            Self::Difference { side } => 2 * side * side,
            Self::Blur(b) => b.len * (2 * b.radius + 1).pow(2),
        };
        n as u64
    }

    /// `out += A x`
    pub fn apply_add(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.in_dim());
        debug_assert_eq!(out.len(), self.out_dim());
        match self {
            Self::Dense { cols, data, .. } => {
                for (o, row) in out.iter_mut().zip(data.chunks_exact(*cols)) {
                    *o += dot(row, x);
                }
            }
            Self::RowFunctional { u } => out[0] += dot(u, x),
            Self::Scaled { alpha, .. } => {
                for (o, v) in out.iter_mut().zip(x) {
                    *o += alpha * v;
                }
            }
            Self::RowSelect { side, row } => {
                for (o, v) in out.iter_mut().zip(&x[row * side..(row + 1) * side]) {
                    *o += v;
                }
            }
            Self::Difference { side } => {
                let s = *side;
                let (horiz, vert) = out.split_at_mut(s * s);
                for r in 0..s {
                    for c in 0..s {
                        let j = r * s + c;
                        if c + 1 < s {
                            horiz[j] += x[j + 1] - x[j];
                        }
                        if r + 1 < s {
                            vert[j] += x[j + s] - x[j];
                        }
                    }
                }
            }
            Self::Blur(b) => {
                for (o_idx, o) in out.iter_mut().enumerate() {
                    let mut acc = 0.0;
                    b.for_each_tap(b.start + o_idx, |j, w| acc += w * x[j]);
                    *o += acc;
                }
            }
        }
    }

    /// `out += A^* v`
    pub fn adjoint_add(&self, v: &[f64], out: &mut [f64]) {
        debug_assert_eq!(v.len(), self.out_dim());
        debug_assert_eq!(out.len(), self.in_dim());
        match self {
            Self::Dense { cols, data, .. } => {
                for (vi, row) in v.iter().zip(data.chunks_exact(*cols)) {
                    if *vi != 0.0 {
                        for (o, a) in out.iter_mut().zip(row) {
                            *o += vi * a;
                        }
                    }
                }
            }
            Self::RowFunctional { u } => {
                for (o, a) in out.iter_mut().zip(u) {
                    *o += v[0] * a;
                }
            }
            Self::Scaled { alpha, .. } => {
                for (o, vi) in out.iter_mut().zip(v) {
                    *o += alpha * vi;
                }
            }
            Self::RowSelect { side, row } => {
                for (o, vi) in out[row * side..(row + 1) * side].iter_mut().zip(v) {
                    *o += vi;
                }
            }
            Self::Difference { side } => {
                let s = *side;
                let (horiz, vert) = v.split_at(s * s);
                for r in 0..s {
                    for c in 0..s {
                        let j = r * s + c;
                        if c + 1 < s {
                            out[j + 1] += horiz[j];
                            out[j] -= horiz[j];
                        }
                        if r + 1 < s {
                            out[j + s] += vert[j];
                            out[j] -= vert[j];
                        }
                    }
                }
            }
            Self::Blur(b) => {
                for (o_idx, vi) in v.iter().enumerate() {
                    b.for_each_tap(b.start + o_idx, |j, w| out[j] += w * vi);
                }
            }
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.out_dim()];
        self.apply_add(x, &mut out);
        out
    }

    pub fn adjoint(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.in_dim()];
        self.adjoint_add(v, &mut out);
        out
    }

    /// Dense materialization, built column by column from forward applications.
    pub fn to_dense(&self) -> DMatrix<f64> {
        match self {
            Self::Dense { rows, cols, data } => DMatrix::from_row_slice(*rows, *cols, data),
            _ => {
                let (rows, cols) = (self.out_dim(), self.in_dim());
                let mut m = DMatrix::zeros(rows, cols);
                let mut e = vec![0.0; cols];
                for c in 0..cols {
                    e[c] = 1.0;
                    let col = self.apply(&e);
                    m.column_mut(c).copy_from_slice(&col);
                    e[c] = 0.0;
                }
                m
            }
        }
    }
}

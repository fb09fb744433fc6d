//! Image recovery from a row-masked observation and a blurred observation,
//! regularized by isotropic total variation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::block::norm;
use crate::error::{Error, Result};
use crate::linops::{BlockOperatorGrid, BlurRows, LinOp};
use crate::problem::ProblemSpec;
use crate::prox::ProxFunction;

pub const PIXEL_MAX: f64 = 255.0;
pub const ROW_WEIGHT: f64 = 10.0;
pub const BLUR_WEIGHT: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageRecoveryInstance {
    pub side: usize,
    /// Image rows kept by the mask, increasing.
    pub rows: Vec<usize>,
    /// Number of row blocks of the blur operator.
    pub s: usize,
    pub sigma_top: f64,
    pub sigma_bottom: f64,
    pub radius: usize,
    pub truth: Vec<f64>,
    /// Masked observation; rows outside `rows` are zero.
    pub b: Vec<f64>,
    /// Blurred observation.
    pub c: Vec<f64>,
    pub w1: Vec<f64>,
    pub w2: Vec<f64>,
    pub lo: f64,
    pub hi: f64,
}

impl ImageRecoveryInstance {
    pub fn n(&self) -> usize {
        self.side * self.side
    }

    pub fn q(&self) -> usize {
        self.rows.len()
    }

    pub fn block_len(&self) -> usize {
        self.n() / self.s
    }

    pub fn blur_block(&self, k: usize) -> BlurRows {
        BlurRows {
            side: self.side,
            start: k * self.block_len(),
            len: self.block_len(),
            sigma_top: self.sigma_top,
            sigma_bottom: self.sigma_bottom,
            radius: self.radius,
        }
    }

    /// The full blur as one operator.
    pub fn blur(&self) -> LinOp {
        LinOp::Blur(BlurRows {
            start: 0,
            len: self.n(),
            ..self.blur_block(0)
        })
    }

    /// `M x`: kept rows copied, the rest zeroed.
    pub fn mask(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n()];
        for &r in &self.rows {
            let span = r * self.side..(r + 1) * self.side;
            out[span.clone()].copy_from_slice(&x[span]);
        }
        out
    }

    /// Achieved `20 log10(||M x|| / ||w1||)`.
    pub fn snr_mask_db(&self) -> f64 {
        20.0 * (norm(&self.mask(&self.truth)) / norm(&self.w1)).log10()
    }

    /// Achieved `20 log10(||H x|| / ||w2||)`.
    pub fn snr_blur_db(&self) -> f64 {
        20.0 * (norm(&self.blur().apply(&self.truth)) / norm(&self.w2)).log10()
    }
}

/// `q` evenly spaced rows of a `side`-row image.
pub fn evenly_spaced_rows(side: usize, q: usize) -> Vec<usize> {
    (0..q).map(|k| (2 * k + 1) * side / (2 * q)).collect()
}

/// Piecewise-constant shapes over a horizontal ramp, values in `[0, 255]`.
pub fn synthetic_image(side: usize) -> Vec<f64> {
    let s = side as f64;
    let mut img = vec![0.0; side * side];
    for r in 0..side {
        for c in 0..side {
            let (y, x) = ((r as f64 + 0.5) / s, (c as f64 + 0.5) / s);
            let mut v = 30.0 + 60.0 * x;
            if (0.15..0.55).contains(&y) && (0.1..0.45).contains(&x) {
                v = 200.0;
            }
            if (0.6..0.9).contains(&y) && (0.2..0.8).contains(&x) {
                v = 120.0;
            }
            if (x - 0.72).powi(2) + (y - 0.3).powi(2) < 0.04 {
                v = 235.0;
            }
            img[r * side + c] = v;
        }
    }
    img
}

/// Noise with the shape of `signal`'s support, scaled so that
/// `20 log10(||signal|| / ||noise||) = snr_db` exactly.
fn scaled_noise(rng: &mut ChaCha8Rng, signal: &[f64], support: impl Fn(usize) -> bool, snr_db: f64) -> Vec<f64> {
    let mut w: Vec<f64> = (0..signal.len())
        .map(|j| if support(j) { StandardNormal.sample(rng) } else { 0.0 })
        .collect();
    let scale = norm(signal) * 10f64.powf(-snr_db / 20.0) / norm(&w);
    w.iter_mut().for_each(|v| *v *= scale);
    w
}

pub fn gen_image_instance(
    side: usize,
    q: usize,
    s: usize,
    snr1_db: f64,
    snr2_db: f64,
    seed: u64,
) -> Result<ImageRecoveryInstance> {
    if side < 2 || q == 0 || q >= side {
        return Err(Error::InvalidInput(format!(
            "need side >= 2 and 0 < q < side, got side={side}, q={q}"
        )));
    }
    if s == 0 || !(side * side).is_multiple_of(s) {
        return Err(Error::InvalidInput(format!(
            "{s} blocks do not partition {} pixels",
            side * side
        )));
    }
    if !(snr1_db.is_finite() && snr2_db.is_finite()) {
        return Err(Error::InvalidInput("target SNRs must be finite".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let truth = synthetic_image(side);
    let mut inst = ImageRecoveryInstance {
        side,
        rows: evenly_spaced_rows(side, q),
        s,
        sigma_top: 0.5,
        sigma_bottom: 2.0,
        radius: 3,
        truth,
        b: Vec::new(),
        c: Vec::new(),
        w1: Vec::new(),
        w2: Vec::new(),
        lo: 0.0,
        hi: PIXEL_MAX,
    };
    let masked = inst.mask(&inst.truth);
    let rows = inst.rows.clone();
    inst.w1 = scaled_noise(&mut rng, &masked, |j| rows.contains(&(j / side)), snr1_db);
    let blurred = inst.blur().apply(&inst.truth);
    inst.w2 = scaled_noise(&mut rng, &blurred, |_| true, snr2_db);
    inst.b = masked.iter().zip(&inst.w1).map(|(a, w)| a + w).collect();
    inst.c = blurred.iter().zip(&inst.w2).map(|(a, w)| a + w).collect();
    Ok(inst)
}

/// `f_1 = iota_[lo, hi]^N`; `g` = `10 ||. - b^(r_k)||` on each kept row,
/// `5 ||. - c_k||^2` on each blur block, and `||.||_{1,2}` on the gradient.
pub fn build_exp2_problem(inst: &ImageRecoveryInstance) -> Result<ProblemSpec> {
    let (n, side) = (inst.n(), inst.side);
    if inst.truth.len() != n || inst.b.len() != n || inst.c.len() != n {
        return Err(Error::InvalidInput("image arrays do not match side * side".into()));
    }
    if inst.s == 0 || n % inst.s != 0 {
        return Err(Error::InvalidInput(format!(
            "{} blocks do not partition {n} pixels",
            inst.s
        )));
    }
    let len = inst.block_len();
    let mut dual_dims = vec![side; inst.q()];
    dual_dims.extend(std::iter::repeat_n(len, inst.s));
    dual_dims.push(2 * n);
    let mut grid = BlockOperatorGrid::new(vec![n], dual_dims);
    let mut g = Vec::with_capacity(inst.q() + inst.s + 1);
    for (k, &r) in inst.rows.iter().enumerate() {
        if r >= side {
            return Err(Error::IndexOutOfRange { index: r, len: side });
        }
        grid.insert(k, 0, LinOp::RowSelect { side, row: r })?;
        g.push(ProxFunction::scaled_l2_distance(
            ROW_WEIGHT,
            inst.b[r * side..(r + 1) * side].to_vec(),
        )?);
    }
    for k in 0..inst.s {
        grid.insert(inst.q() + k, 0, LinOp::Blur(inst.blur_block(k)))?;
        g.push(ProxFunction::scaled_sq_l2(
            BLUR_WEIGHT,
            inst.c[k * len..(k + 1) * len].to_vec(),
        )?);
    }
    grid.insert(inst.q() + inst.s, 0, LinOp::Difference { side })?;
    g.push(ProxFunction::l12_pairs(n));
    ProblemSpec::new(vec![ProxFunction::box_indicator(inst.lo, inst.hi, n)?], g, grid)
}

//! Catalog of proper lower semicontinuous convex functions exposed through
//! evaluation and their proximity operators.
//!
//! For `gamma > 0` the proximity operator of `gamma * f` is
//! `prox(x, gamma) = argmin_u f(u) + ||u - x||^2 / (2 gamma)`.
//! Evaluation returns `f64::INFINITY` outside the domain.

use serde::{Deserialize, Serialize};

use crate::block::{dot, norm};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProxFunction {
    /// `f = 0`
    Zero { dim: usize },
    /// Indicator of the origin, `f = iota_{0}`. Its conjugate is `0`.
    ZeroIndicator { dim: usize },
    /// `f = tau * ||.||_2`
    ScaledL2Norm { tau: f64, dim: usize },
    /// Scalar hinge `xi -> max{0, 1 - beta * xi}`.
    Hinge { beta: f64 },
    /// Indicator of the box `[lo, hi]^dim`.
    BoxIndicator { lo: f64, hi: f64, dim: usize },
    /// `f = alpha * ||. - center||_2`
    ScaledL2Distance { alpha: f64, center: Vec<f64> },
    /// `f = alpha * ||. - center||_2^2`
    ScaledSqL2 { alpha: f64, center: Vec<f64> },
    /// Mixed norm `sum_j ||(eta_{1,j}, eta_{2,j})||_2` on a vector laid out as
    /// `[eta_1; eta_2]`, each half of length `pairs`.
    L12Pairs { pairs: usize },
}

fn positive(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("{name} must be positive, got {value}")))
    }
}

impl ProxFunction {
    pub fn zero(dim: usize) -> Self {
        Self::Zero { dim }
    }

    pub fn zero_indicator(dim: usize) -> Self {
        Self::ZeroIndicator { dim }
    }

    pub fn scaled_l2_norm(tau: f64, dim: usize) -> Result<Self> {
        positive("tau", tau)?;
        Ok(Self::ScaledL2Norm { tau, dim })
    }

    pub fn hinge(beta: f64) -> Result<Self> {
        if beta == 0.0 || !beta.is_finite() {
            return Err(Error::InvalidInput(format!(
                "hinge slope must be finite and nonzero, got {beta}"
            )));
        }
        Ok(Self::Hinge { beta })
    }

    pub fn box_indicator(lo: f64, hi: f64, dim: usize) -> Result<Self> {
        if !(lo < hi) {
            return Err(Error::InvalidInput(format!(
                "box bounds must satisfy lo < hi, got [{lo}, {hi}]"
            )));
        }
        Ok(Self::BoxIndicator { lo, hi, dim })
    }

    pub fn scaled_l2_distance(alpha: f64, center: Vec<f64>) -> Result<Self> {
        positive("alpha", alpha)?;
        Ok(Self::ScaledL2Distance { alpha, center })
    }

    pub fn scaled_sq_l2(alpha: f64, center: Vec<f64>) -> Result<Self> {
        positive("alpha", alpha)?;
        Ok(Self::ScaledSqL2 { alpha, center })
    }

    pub fn l12_pairs(pairs: usize) -> Self {
        Self::L12Pairs { pairs }
    }

    /// Re-checks constructor invariants, for values that arrived through
    /// deserialization.
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::ScaledL2Norm { tau, dim } => Self::scaled_l2_norm(*tau, *dim).map(drop),
            Self::Hinge { beta } => Self::hinge(*beta).map(drop),
            Self::BoxIndicator { lo, hi, dim } => Self::box_indicator(*lo, *hi, *dim).map(drop),
            Self::ScaledL2Distance { alpha, .. } | Self::ScaledSqL2 { alpha, .. } => positive("alpha", *alpha),
            Self::Zero { .. } | Self::ZeroIndicator { .. } | Self::L12Pairs { .. } => Ok(()),
        }
    }

    /// Dimension of the domain.
    pub fn dim(&self) -> usize {
        match self {
            Self::Zero { dim }
            | Self::ZeroIndicator { dim }
            | Self::ScaledL2Norm { dim, .. }
            | Self::BoxIndicator { dim, .. } => *dim,
            Self::Hinge { .. } => 1,
            Self::ScaledL2Distance { center, .. } | Self::ScaledSqL2 { center, .. } => center.len(),
            Self::L12Pairs { pairs } => 2 * pairs,
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.dim(), "ProxFunction::eval dimension");
        match self {
            Self::Zero { .. } => 0.0,
            Self::ZeroIndicator { .. } => {
                if x.iter().all(|&v| v == 0.0) {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            Self::ScaledL2Norm { tau, .. } => tau * norm(x),
            Self::Hinge { beta } => (1.0 - beta * x[0]).max(0.0),
            Self::BoxIndicator { lo, hi, .. } => {
                if x.iter().all(|v| (*lo..=*hi).contains(v)) {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            Self::ScaledL2Distance { alpha, center } => alpha * distance(x, center),
            Self::ScaledSqL2 { alpha, center } => {
                let d = distance(x, center);
                alpha * d * d
            }
            Self::L12Pairs { pairs } => {
                let (a, b) = x.split_at(*pairs);
                a.iter().zip(b).map(|(u, v)| u.hypot(*v)).sum()
            }
        }
    }

    /// `prox_{gamma f}(x)`.
    pub fn prox(&self, x: &[f64], gamma: f64) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        self.prox_into(x, gamma, &mut out);
        out
    }

    pub fn prox_into(&self, x: &[f64], gamma: f64, out: &mut [f64]) {
        assert_eq!(x.len(), self.dim(), "ProxFunction::prox dimension");
        assert_eq!(out.len(), x.len(), "ProxFunction::prox output dimension");
        debug_assert!(gamma > 0.0);
        match self {
            Self::Zero { .. } => out.copy_from_slice(x),
            Self::ZeroIndicator { .. } => out.fill(0.0),
            Self::ScaledL2Norm { tau, .. } => {
                let scale = shrink_factor(norm(x), gamma * tau);
                for (o, v) in out.iter_mut().zip(x) {
                    *o = scale * v;
                }
            }
            Self::Hinge { beta } => {
                // g(xi) = h(beta xi) with h(s) = max{0, 1 - s}
                let c = gamma * beta * beta;
                let s = beta * x[0];
                let p = if s < 1.0 - c {
                    s + c
                } else if s <= 1.0 {
                    1.0
                } else {
                    s
                };
                out[0] = p / beta;
            }
            Self::BoxIndicator { lo, hi, .. } => {
                for (o, v) in out.iter_mut().zip(x) {
                    *o = v.clamp(*lo, *hi);
                }
            }
            Self::ScaledL2Distance { alpha, center } => {
                let scale = shrink_factor(distance(x, center), gamma * alpha);
                for ((o, v), c) in out.iter_mut().zip(x).zip(center) {
                    *o = c + scale * (v - c);
                }
            }
            Self::ScaledSqL2 { alpha, center } => {
                let w = 2.0 * alpha * gamma;
                for ((o, v), c) in out.iter_mut().zip(x).zip(center) {
                    *o = (v + w * c) / (1.0 + w);
                }
            }
            Self::L12Pairs { pairs } => {
                let (xa, xb) = x.split_at(*pairs);
                let (oa, ob) = out.split_at_mut(*pairs);
                for j in 0..*pairs {
                    let scale = shrink_factor(xa[j].hypot(xb[j]), gamma);
                    oa[j] = scale * xa[j];
                    ob[j] = scale * xb[j];
                }
            }
        }
    }

    /// `prox_{gamma f*}(x)` through the Moreau decomposition
    /// `x = prox_{gamma f*}(x) + gamma prox_{f / gamma}(x / gamma)`.
    pub fn prox_conjugate(&self, x: &[f64], gamma: f64) -> Vec<f64> {
        let scaled: Vec<f64> = x.iter().map(|v| v / gamma).collect();
        let p = self.prox(&scaled, 1.0 / gamma);
        x.iter().zip(&p).map(|(v, q)| v - gamma * q).collect()
    }
}

/// Block soft-threshold multiplier: `0` when `r <= threshold`, else `1 - threshold / r`.
fn shrink_factor(r: f64, threshold: f64) -> f64 {
    if r <= threshold {
        0.0
    } else {
        1.0 - threshold / r
    }
}

fn distance(x: &[f64], c: &[f64]) -> f64 {
    x.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

/// Free-function form of [`ProxFunction::prox_conjugate`].
pub fn prox_conjugate_moreau(f: &ProxFunction, x: &[f64], gamma: f64) -> Vec<f64> {
    f.prox_conjugate(x, gamma)
}

/// Value of the prox objective `f(u) + ||u - x||^2 / (2 gamma)`.
pub fn prox_objective(f: &ProxFunction, u: &[f64], x: &[f64], gamma: f64) -> f64 {
    let d: Vec<f64> = u.iter().zip(x).map(|(a, b)| a - b).collect();
    f.eval(u) + dot(&d, &d) / (2.0 * gamma)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn scaled_l2_norm_cases() {
        let f = ProxFunction::scaled_l2_norm(1.0, 2).unwrap();
        assert_eq!(f.prox(&[0.5, 0.0], 1.0), vec![0.0, 0.0]);
        assert_eq!(f.prox(&[0.0, 0.0], 1.0), vec![0.0, 0.0]);
        let f = ProxFunction::scaled_l2_norm(0.1, 2).unwrap();
        assert!(close(&f.prox(&[2.0, 0.0], 1.0), &[1.9, 0.0], 1e-15));
        assert!(ProxFunction::scaled_l2_norm(0.0, 2).is_err());
    }

    #[test]
    fn hinge_cases() {
        let f = ProxFunction::hinge(1.0).unwrap();
        assert_eq!(f.prox(&[3.0], 1.0), vec![3.0]);
        assert_eq!(f.prox(&[-1.0], 1.0), vec![0.0]);
        assert_eq!(f.prox(&[0.5], 1.0), vec![1.0]);
        let f = ProxFunction::hinge(-1.0).unwrap();
        assert_eq!(f.prox(&[1.0], 1.0), vec![0.0]);
        assert!(ProxFunction::hinge(0.0).is_err());
    }

    #[test]
    fn box_clamps() {
        let f = ProxFunction::box_indicator(0.0, 255.0, 3).unwrap();
        assert_eq!(f.prox(&[300.0, 17.0, -4.0], 0.3), vec![255.0, 17.0, 0.0]);
        assert_eq!(f.eval(&[300.0, 0.0, 0.0]), f64::INFINITY);
        assert_eq!(f.eval(&[3.0, 0.0, 0.0]), 0.0);
        assert!(ProxFunction::box_indicator(1.0, 1.0, 1).is_err());
    }

    #[test]
    fn scaled_l2_distance_cases() {
        let f = ProxFunction::scaled_l2_distance(10.0, vec![0.0, 0.0]).unwrap();
        assert!(close(&f.prox(&[3.0, 0.0], 0.1), &[2.0, 0.0], 1e-15));
        let f = ProxFunction::scaled_l2_distance(1.0, vec![0.0, 0.0]).unwrap();
        assert_eq!(f.prox(&[1.0, 0.0], 5.0), vec![0.0, 0.0]);
        let b = vec![1.5, -2.0];
        let f = ProxFunction::scaled_l2_distance(2.0, b.clone()).unwrap();
        assert_eq!(f.prox(&b, 1.0), b);
    }

    #[test]
    fn scaled_sq_l2_cases() {
        let f = ProxFunction::scaled_sq_l2(5.0, vec![1.0]).unwrap();
        assert!(close(&f.prox(&[0.0], 0.1), &[0.5], 1e-15));
        assert_eq!(f.prox(&[1.0], 3.0), vec![1.0]);
        let g = 1e-6;
        assert!((f.prox(&[4.0], g)[0] - 4.0).abs() <= 100.0 * g);
    }

    #[test]
    fn l12_pairs_cases() {
        let f = ProxFunction::l12_pairs(1);
        assert!(close(&f.prox(&[3.0, 4.0], 1.0), &[2.4, 3.2], 1e-15));
        assert_eq!(f.prox(&[3.0, 4.0], 10.0), vec![0.0, 0.0]);
        assert_eq!(ProxFunction::l12_pairs(3).prox(&[0.0; 6], 1.0), vec![0.0; 6]);
        assert_eq!(f.eval(&[3.0, 4.0]), 5.0);
    }

    #[test]
    fn zero_is_identity() {
        let f = ProxFunction::zero(3);
        for x in [[1.0, -2.0, 3.0], [0.0, 0.5, 0.25], [-7.0, 1e3, 2.0]] {
            assert_eq!(f.prox(&x, 0.7), x.to_vec());
        }
    }

    #[test]
    fn conjugate_of_known_functions() {
        // 0* = iota_{0}
        assert_eq!(ProxFunction::zero(2).prox_conjugate(&[1.0, 2.0], 0.5), vec![0.0, 0.0]);
        // iota_{0}* = 0
        assert_eq!(
            ProxFunction::zero_indicator(2).prox_conjugate(&[1.0, 2.0], 0.5),
            vec![1.0, 2.0]
        );
        // ||.||* = indicator of the unit ball
        let f = ProxFunction::scaled_l2_norm(1.0, 2).unwrap();
        assert!(close(&f.prox_conjugate(&[0.5, 0.0], 1.0), &[0.5, 0.0], 1e-15));
        assert!(close(&f.prox_conjugate(&[3.0, 4.0], 1.0), &[0.6, 0.8], 1e-15));
    }
}

//! Brute-force verification oracle for proximity operators.
//!
//! Minimizes `phi(u) = f(u) + ||u - x||^2 / (2 gamma)` for small dimensions
//! using nothing but evaluations of `f`: exact line minimization (golden
//! section) along coordinate axes, seeded random directions restricted to
//! random coordinate subsets, and the last successful displacement. The
//! objective is strongly convex, so a point where no such direction improves
//! is the prox. Several seeded starting points must agree before a result is
//! returned. Intended for tests only; it is slow.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub const MAX_ORACLE_DIM: usize = 5;

#[derive(Debug, Clone)]
pub struct OracleOptions {
    pub tol: f64,
    pub max_rounds: usize,
    pub seed: u64,
    /// Number of starting points refined to convergence.
    pub starts: usize,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_rounds: 20_000,
            seed: 0x5eed,
            starts: 3,
        }
    }
}

/// Approximates `prox_{gamma f}(x)` to within `tol` from evaluations of `f`.
pub fn brute_force_prox_oracle<F>(f_eval: F, x: &[f64], gamma: f64, tol: f64) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> f64,
{
    brute_force_prox_oracle_with(
        f_eval,
        x,
        gamma,
        &OracleOptions {
            tol,
            ..OracleOptions::default()
        },
    )
}

pub fn brute_force_prox_oracle_with<F>(f_eval: F, x: &[f64], gamma: f64, opts: &OracleOptions) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> f64,
{
    let dim = x.len();
    if dim == 0 || dim > MAX_ORACLE_DIM {
        return Err(Error::InvalidInput(format!(
            "oracle supports dimensions 1..={MAX_ORACLE_DIM}, got {dim}"
        )));
    }
    if !(gamma > 0.0) {
        return Err(Error::InvalidInput(format!("gamma must be positive, got {gamma}")));
    }
    let phi = |u: &[f64]| {
        let q: f64 = u.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
        f_eval(u) + q / (2.0 * gamma)
    };

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let radius = 1.0 + x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut candidates: Vec<Vec<f64>> = vec![x.to_vec(), vec![0.0; dim]];
    for _ in 0..4 * opts.starts {
        candidates.push(
            (0..dim)
                .map(|_| radius * rng.sample::<f64, _>(StandardNormal))
                .collect(),
        );
    }
    let mut starts: Vec<(f64, Vec<f64>)> = candidates
        .into_iter()
        .map(|u| (phi(&u), u))
        .filter(|(v, _)| v.is_finite())
        .collect();
    if starts.is_empty() {
        return Err(Error::OracleFailure("no starting point inside the domain".into()));
    }
    starts.sort_by(|a, b| a.0.total_cmp(&b.0));
    starts.truncate(opts.starts.max(1));

    let mut results = Vec::with_capacity(starts.len());
    for (_, u0) in starts {
        results.push(refine(&phi, u0, opts, &mut rng)?);
    }
    let best = results
        .iter()
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .map(|r| r.1.clone())
        .expect("at least one start");
    for (_, u) in &results {
        let gap = u.iter().zip(&best).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        if gap > opts.tol {
            return Err(Error::OracleFailure(format!(
                "multistart disagreement {gap:e} exceeds tolerance {:e}",
                opts.tol
            )));
        }
    }
    Ok(best)
}

fn refine<P>(phi: &P, mut u: Vec<f64>, opts: &OracleOptions, rng: &mut ChaCha8Rng) -> Result<(f64, Vec<f64>)>
where
    P: Fn(&[f64]) -> f64,
{
    let dim = u.len();
    let mut value = phi(&u);
    let mut step = 1.0_f64;
    let mut last_move: Option<Vec<f64>> = None;
    let mut quiet_rounds = 0;
    let mut trial = vec![0.0; dim];

    for _ in 0..opts.max_rounds {
        let mut directions: Vec<Vec<f64>> = (0..dim)
            .map(|j| {
                let mut e = vec![0.0; dim];
                e[j] = 1.0;
                e
            })
            .collect();
        for _ in 0..2 * dim {
            let mut d: Vec<f64> = (0..dim)
                .map(|_| {
                    if rng.random_bool(0.6) {
                        rng.sample(StandardNormal)
                    } else {
                        0.0
                    }
                })
                .collect();
            let n = d.iter().map(|v| v * v).sum::<f64>().sqrt();
            if n > 0.0 {
                d.iter_mut().for_each(|v| *v /= n);
                directions.push(d);
            }
        }
        if let Some(m) = last_move.take() {
            directions.push(m);
        }

        let start = u.clone();
        for d in &directions {
            let along = |t: f64, buf: &mut Vec<f64>| {
                for ((b, ui), di) in buf.iter_mut().zip(&u).zip(d) {
                    *b = ui + t * di;
                }
                phi(buf)
            };
            let t = line_minimize(&along, &mut trial, value, step);
            if t != 0.0 {
                let v = along(t, &mut trial);
                if v < value {
                    value = v;
                    u.copy_from_slice(&trial);
                    step = step.max(2.0 * t.abs());
                }
            }
        }

        let moved: Vec<f64> = u.iter().zip(&start).map(|(a, b)| a - b).collect();
        let dist = moved.iter().map(|v| v * v).sum::<f64>().sqrt();
        if dist > 0.0 {
            last_move = Some(moved.iter().map(|v| v / dist).collect());
            step = step.min(4.0 * dist).max(1e-3 * opts.tol);
        }
        if dist < 1e-3 * opts.tol {
            quiet_rounds += 1;
            if quiet_rounds >= 4 {
                return Ok((value, u));
            }
        } else {
            quiet_rounds = 0;
        }
    }
    Err(Error::OracleFailure(format!(
        "no convergence within {} rounds",
        opts.max_rounds
    )))
}

/// Minimizes a convex function of one variable whose value at `0` is `at_zero`.
/// Returns the minimizing offset, or `0` when no improvement exists.
fn line_minimize<G>(g: &G, buf: &mut Vec<f64>, at_zero: f64, initial: f64) -> f64
where
    G: Fn(f64, &mut Vec<f64>) -> f64,
{
    // bracket: convexity puts the minimizer inside [-h, h] once both ends are
    // no better than the center
    let mut h = initial.max(1e-12);
    for _ in 0..80 {
        if g(h, buf) < at_zero || g(-h, buf) < at_zero {
            h *= 2.0;
        } else {
            break;
        }
    }
    let (mut a, mut b) = (-h, h);
    let ratio = (5.0_f64.sqrt() - 1.0) / 2.0;
    let width_floor = 1e-15 * (1.0 + h);
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let mut fc = g(c, buf);
    let mut fd = g(d, buf);
    while b - a > width_floor {
        if fc.is_infinite() && fd.is_infinite() {
            // domain lies strictly between the probes
            a = c;
            b = d;
            c = b - ratio * (b - a);
            d = a + ratio * (b - a);
            fc = g(c, buf);
            fd = g(d, buf);
            continue;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = g(c, buf);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = g(d, buf);
        }
    }
    let (t, ft) = if fc <= fd { (c, fc) } else { (d, fd) };
    if ft < at_zero {
        t
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prox::ProxFunction;

    fn gap(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
    }

    #[test]
    fn zero_function_returns_input() {
        let x = [0.3, -1.2, 2.0];
        let u = brute_force_prox_oracle(|_| 0.0, &x, 0.7, 1e-6).unwrap();
        assert!(gap(&u, &x) <= 1e-6);
    }

    #[test]
    fn matches_norm_closed_form() {
        let f = ProxFunction::scaled_l2_norm(0.8, 3).unwrap();
        for x in [[1.0, 2.0, -0.5], [0.1, 0.2, 0.1], [-3.0, 0.0, 4.0]] {
            let u = brute_force_prox_oracle(|v| f.eval(v), &x, 1.3, 1e-6).unwrap();
            assert!(gap(&u, &f.prox(&x, 1.3)) <= 1e-5, "{x:?}");
        }
    }

    #[test]
    fn matches_hinge_closed_form() {
        let f = ProxFunction::hinge(-1.0).unwrap();
        for x in [-3.0, -0.5, 0.2, 2.0] {
            let u = brute_force_prox_oracle(|v| f.eval(v), &[x], 0.9, 1e-6).unwrap();
            assert!(gap(&u, &f.prox(&[x], 0.9)) <= 1e-5, "{x}");
        }
    }

    #[test]
    fn handles_indicator_domains() {
        let f = ProxFunction::box_indicator(0.0, 1.0, 2).unwrap();
        let u = brute_force_prox_oracle(|v| f.eval(v), &[2.0, -1.0], 1.0, 1e-6).unwrap();
        assert!(gap(&u, &[1.0, 0.0]) <= 1e-5);
    }

    #[test]
    fn rejects_large_dimension() {
        assert!(brute_force_prox_oracle(|_| 0.0, &[0.0; 6], 1.0, 1e-6).is_err());
    }
}

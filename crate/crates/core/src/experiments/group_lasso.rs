//! Group-sparse binary classification with a latent group lasso penalty.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::block::BlockVector;
use crate::error::{check_dim, Error, Result};
use crate::linops::{BlockOperatorGrid, LinOp};
use crate::problem::ProblemSpec;
use crate::prox::ProxFunction;

pub const GROUP_WIDTH: usize = 10;
pub const GROUP_STRIDE: usize = 7;

/// Windows of [`GROUP_WIDTH`] consecutive indices starting every
/// [`GROUP_STRIDE`], the last one truncated at `d`. 0-based.
pub fn gen_group_cover(d: usize) -> Result<Vec<Vec<usize>>> {
    if d < GROUP_WIDTH {
        return Err(Error::InvalidInput(format!(
            "group cover needs d >= {GROUP_WIDTH}, got {d}"
        )));
    }
    let m = (d - GROUP_WIDTH).div_ceil(GROUP_STRIDE) + 1;
    Ok((0..m)
        .map(|i| {
            let start = i * GROUP_STRIDE;
            (start..(start + GROUP_WIDTH).min(d)).collect()
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupLassoInstance {
    pub d: usize,
    pub groups: Vec<Vec<usize>>,
    /// Measurement vectors, one per label.
    pub u: Vec<Vec<f64>>,
    /// Labels in `{-1, 1}`.
    pub beta: Vec<f64>,
    pub tau: Vec<f64>,
    pub true_signal: Vec<f64>,
    /// Indices of flipped labels.
    pub flipped: Vec<usize>,
}

impl GroupLassoInstance {
    pub fn m(&self) -> usize {
        self.groups.len()
    }

    pub fn p(&self) -> usize {
        self.u.len()
    }

    /// Latent components of `y`: each coordinate goes to the first group
    /// containing it, so that `assemble(lift(y)) = y`.
    pub fn lift(&self, y: &[f64]) -> Result<BlockVector> {
        check_dim("lifted signal", self.d, y.len())?;
        let mut owner = vec![usize::MAX; self.d];
        for (i, g) in self.groups.iter().enumerate().rev() {
            g.iter().for_each(|&j| owner[j] = i);
        }
        Ok(BlockVector::from_blocks(
            self.groups
                .iter()
                .enumerate()
                .map(|(i, g)| g.iter().map(|&j| if owner[j] == i { y[j] } else { 0.0 }).collect())
                .collect(),
        ))
    }

    /// `sum_i x_i`, each block zero-padded to `R^d`.
    pub fn assemble(&self, x: &BlockVector) -> Result<Vec<f64>> {
        let dims: Vec<usize> = self.groups.iter().map(Vec::len).collect();
        x.check_dims("latent components", &dims)?;
        let mut y = vec![0.0; self.d];
        for (g, xi) in self.groups.iter().zip(x.blocks()) {
            for (&j, v) in g.iter().zip(xi) {
                y[j] += v;
            }
        }
        Ok(y)
    }
}

/// Draws a group-sparse signal on `active_groups` evenly spread groups,
/// standard normal measurement vectors, and labels `beta_k = omega_k
/// sign(<y, u_k>)` with exactly `ceil(flip_rate p)` flips.
pub fn gen_classification_instance(
    d: usize,
    p: usize,
    active_groups: usize,
    flip_rate: f64,
    seed: u64,
) -> Result<GroupLassoInstance> {
    let groups = gen_group_cover(d)?;
    let m = groups.len();
    if p == 0 || active_groups == 0 || active_groups > m {
        return Err(Error::InvalidInput(format!(
            "need p >= 1 and 1 <= active_groups <= {m}, got p={p}, active_groups={active_groups}"
        )));
    }
    if !(0.0..1.0).contains(&flip_rate) {
        return Err(Error::InvalidInput(format!(
            "flip rate must lie in [0, 1), got {flip_rate}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = |rng: &mut ChaCha8Rng| -> f64 { StandardNormal.sample(rng) };

    let mut true_signal = vec![0.0; d];
    let mut chosen: Vec<usize> = (0..m).collect();
    chosen.shuffle(&mut rng);
    chosen.truncate(active_groups);
    chosen.sort_unstable();
    for &i in &chosen {
        for &j in &groups[i] {
            true_signal[j] = normal(&mut rng);
        }
    }

    let mut u = Vec::with_capacity(p);
    let mut beta = Vec::with_capacity(p);
    for _ in 0..p {
        loop {
            let uk: Vec<f64> = (0..d).map(|_| normal(&mut rng)).collect();
            let s = crate::block::dot(&uk, &true_signal);
            if s != 0.0 {
                beta.push(s.signum());
                u.push(uk);
                break;
            }
        }
    }
    let flips = crate::schedule::activated_count(flip_rate, p);
    let mut order: Vec<usize> = (0..p).collect();
    order.shuffle(&mut rng);
    let mut flipped = order[..flips].to_vec();
    flipped.sort_unstable();
    for &k in &flipped {
        beta[k] = -beta[k];
    }

    Ok(GroupLassoInstance {
        d,
        tau: vec![0.1; m],
        groups,
        u,
        beta,
        true_signal,
        flipped,
    })
}

/// `f_i = tau_i ||.||`, `g_k = max{0, 1 - beta_k .}`, `L_{k,i} = <., u_k|G_i>`.
pub fn build_exp1_problem(inst: &GroupLassoInstance) -> Result<ProblemSpec> {
    let dims: Vec<usize> = inst.groups.iter().map(Vec::len).collect();
    if inst.tau.len() != inst.m() || inst.beta.len() != inst.p() {
        return Err(Error::InvalidInput("instance arrays have inconsistent lengths".into()));
    }
    let mut grid = BlockOperatorGrid::new(dims.clone(), vec![1; inst.p()]);
    for (k, uk) in inst.u.iter().enumerate() {
        check_dim("measurement vector", inst.d, uk.len())?;
        for (i, g) in inst.groups.iter().enumerate() {
            grid.insert(
                k,
                i,
                LinOp::RowFunctional {
                    u: g.iter().map(|&j| uk[j]).collect(),
                },
            )?;
        }
    }
    let f = inst
        .tau
        .iter()
        .zip(&dims)
        .map(|(&t, &n)| ProxFunction::scaled_l2_norm(t, n))
        .collect::<Result<_>>()?;
    let g = inst
        .beta
        .iter()
        .map(|&b| ProxFunction::hinge(b))
        .collect::<Result<_>>()?;
    ProblemSpec::new(f, g, grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cover_counts() {
        assert_eq!(gen_group_cover(10000).unwrap().len(), 1429);
        assert_eq!(gen_group_cover(10).unwrap(), vec![(0..10).collect::<Vec<_>>()]);
        assert_eq!(
            gen_group_cover(17).unwrap(),
            vec![(0..10).collect::<Vec<_>>(), (7..17).collect()]
        );
        assert!(gen_group_cover(9).is_err());
    }

    #[test]
    fn cover_structure_by_enumeration() {
        for d in 10..=200 {
            let groups = gen_group_cover(d).unwrap();
            assert_eq!(groups.len(), (d - 10).div_ceil(7) + 1, "d={d}");
            let mut seen = vec![false; d];
            for g in &groups {
                g.iter().for_each(|&j| seen[j] = true);
            }
            assert!(seen.iter().all(|&s| s), "d={d}");
            for w in groups.windows(2) {
                if w[1].len() == 10 {
                    assert_eq!(w[0].len(), 10);
                    let overlap = w[0].iter().filter(|j| w[1].contains(j)).count();
                    assert_eq!(overlap, 3, "d={d}");
                }
            }
        }
    }

    #[test]
    fn exact_flip_count_and_determinism() {
        let a = gen_classification_instance(60, 1000, 2, 0.25, 9).unwrap();
        assert_eq!(a.flipped.len(), 250);
        let disagree =
            a.u.iter()
                .zip(&a.beta)
                .filter(|(u, b)| crate::block::dot(u, &a.true_signal).signum() != **b)
                .count();
        assert_eq!(disagree, 250);
        assert_eq!(a, gen_classification_instance(60, 1000, 2, 0.25, 9).unwrap());
        let clean = gen_classification_instance(30, 50, 1, 0.0, 1).unwrap();
        assert!(clean.flipped.is_empty());
        for (u, b) in clean.u.iter().zip(&clean.beta) {
            assert_eq!(crate::block::dot(u, &clean.true_signal).signum(), *b);
        }
    }

    #[test]
    fn problem_matches_instance() {
        let inst = gen_classification_instance(50, 12, 2, 0.25, 4).unwrap();
        let spec = build_exp1_problem(&inst).unwrap();
        assert_eq!((spec.m(), spec.p()), (inst.m(), inst.p()));
        assert_eq!(spec.objective(&spec.primal_zeros()).unwrap(), 12.0);
        let x = inst.lift(&inst.true_signal).unwrap();
        assert_eq!(inst.assemble(&x).unwrap(), inst.true_signal);
        let lx = spec.grid().apply_stacked(&x).unwrap();
        for (k, uk) in inst.u.iter().enumerate() {
            let want = crate::block::dot(uk, &inst.true_signal);
            assert!((lx.block(k)[0] - want).abs() < 1e-10);
        }
    }
}

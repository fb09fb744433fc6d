//! Block activation plans and epoch accounting.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Blocks activated at one iteration, in increasing index order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Activation {
    pub primal: Vec<usize>,
    pub dual: Vec<usize>,
}

impl Activation {
    pub fn full(m: usize, p: usize) -> Self {
        Self {
            primal: (0..m).collect(),
            dual: (0..p).collect(),
        }
    }
}

/// Which blocks are activated at which iteration.
///
/// Plans are pure functions of the iteration index: the random variant derives
/// an independent stream per iteration from its seed, so draws can never
/// depend on solver state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ActivationPlan {
    Full {
        m: usize,
        p: usize,
    },
    /// Uniformly random subsets of fixed sizes, i.i.d. across iterations.
    RandomSubset {
        m: usize,
        p: usize,
        primal_count: usize,
        dual_count: usize,
        seed: u64,
    },
    /// Contiguous slices visited round-robin.
    CyclicSweep {
        m: usize,
        p: usize,
        primal_slices: usize,
        dual_slices: usize,
    },
}

/// `ceil(alpha * n)`, robust to the rounding of products such as `0.7 * 10`.
pub fn activated_count(alpha: f64, n: usize) -> usize {
    ((alpha * n as f64) - 1e-9).ceil().max(0.0) as usize
}

fn check_fraction(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!(
            "activation fraction must lie in (0, 1], got {alpha}"
        )))
    }
}

fn check_sizes(m: usize, p: usize) -> Result<()> {
    if m == 0 || p == 0 {
        return Err(Error::InvalidConfig(format!(
            "activation plans need m, p >= 1, got m={m}, p={p}"
        )));
    }
    Ok(())
}

impl ActivationPlan {
    pub fn full(m: usize, p: usize) -> Result<Self> {
        check_sizes(m, p)?;
        Ok(Self::Full { m, p })
    }

    /// `|I_n| = ceil(alpha_primal m)`, `|K_n| = ceil(alpha_dual p)`.
    pub fn random_subset(m: usize, p: usize, alpha_primal: f64, alpha_dual: f64, seed: u64) -> Result<Self> {
        check_sizes(m, p)?;
        check_fraction(alpha_primal)?;
        check_fraction(alpha_dual)?;
        let primal_count = activated_count(alpha_primal, m);
        let dual_count = activated_count(alpha_dual, p);
        if primal_count == 0 || dual_count == 0 {
            return Err(Error::InvalidConfig("activation fraction selects no block".into()));
        }
        Ok(Self::RandomSubset {
            m,
            p,
            primal_count,
            dual_count,
            seed,
        })
    }

    pub fn cyclic(m: usize, p: usize, primal_slices: usize, dual_slices: usize) -> Result<Self> {
        check_sizes(m, p)?;
        if primal_slices == 0 || primal_slices > m || dual_slices == 0 || dual_slices > p {
            return Err(Error::InvalidConfig(format!(
                "slice counts must lie in 1..=block count, got {primal_slices}/{m} and {dual_slices}/{p}"
            )));
        }
        Ok(Self::CyclicSweep {
            m,
            p,
            primal_slices,
            dual_slices,
        })
    }

    /// Cyclic plan with `ceil(1 / alpha)` slices per side (capped by the block count).
    pub fn cyclic_from_fractions(m: usize, p: usize, alpha_primal: f64, alpha_dual: f64) -> Result<Self> {
        check_fraction(alpha_primal)?;
        check_fraction(alpha_dual)?;
        let slices = |alpha: f64, n: usize| (activated_count(1.0 / alpha, 1)).clamp(1, n.max(1));
        Self::cyclic(m, p, slices(alpha_primal, m), slices(alpha_dual, p))
    }

    pub fn m(&self) -> usize {
        match self {
            Self::Full { m, .. } | Self::RandomSubset { m, .. } | Self::CyclicSweep { m, .. } => *m,
        }
    }

    pub fn p(&self) -> usize {
        match self {
            Self::Full { p, .. } | Self::RandomSubset { p, .. } | Self::CyclicSweep { p, .. } => *p,
        }
    }

    pub fn is_deterministic(&self) -> bool {
        !matches!(self, Self::RandomSubset { .. })
    }

    /// Replaces the seed of a random plan; other plans are returned unchanged.
    pub fn with_seed(mut self, new_seed: u64) -> Self {
        if let Self::RandomSubset { seed, .. } = &mut self {
            *seed = new_seed;
        }
        self
    }

    /// Window length `T` for which every `T + 1` consecutive iterations
    /// activate every block, when the plan guarantees one.
    pub fn sweep_window(&self) -> Option<usize> {
        match self {
            Self::Full { .. } => Some(0),
            Self::CyclicSweep {
                primal_slices,
                dual_slices,
                ..
            } => Some(primal_slices.max(dual_slices) - 1),
            Self::RandomSubset { .. } => None,
        }
    }

    /// `(I_n, K_n)`.
    pub fn next_blocks(&self, n: usize) -> Activation {
        match *self {
            Self::Full { m, p } => Activation::full(m, p),
            Self::RandomSubset {
                m,
                p,
                primal_count,
                dual_count,
                seed,
            } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(n as u64);
                Activation {
                    primal: sample_subset(&mut rng, m, primal_count),
                    dual: sample_subset(&mut rng, p, dual_count),
                }
            }
            Self::CyclicSweep {
                m,
                p,
                primal_slices,
                dual_slices,
            } => Activation {
                primal: slice(m, primal_slices, n % primal_slices),
                dual: slice(p, dual_slices, n % dual_slices),
            },
        }
    }
}

/// Uniform `count`-subset of `0..n` by partial Fisher-Yates, sorted.
fn sample_subset(rng: &mut ChaCha8Rng, n: usize, count: usize) -> Vec<usize> {
    if count >= n {
        return (0..n).collect();
    }
    let mut idx: Vec<usize> = (0..n).collect();
    for j in 0..count {
        let r = rng.random_range(j..n);
        idx.swap(j, r);
    }
    idx.truncate(count);
    idx.sort_unstable();
    idx
}

/// Slice `s` of a balanced contiguous partition of `0..n` into `slices` parts.
fn slice(n: usize, slices: usize, s: usize) -> Vec<usize> {
    (s * n / slices..(s + 1) * n / slices).collect()
}

/// A rule selecting the blocks `(I_n, K_n)` activated at iteration `n`.
///
/// Implementations must depend on `n` alone (and on their own fixed
/// parameters), never on solver state.
pub trait BlockSchedule: Send + Sync + std::fmt::Debug {
    fn m(&self) -> usize;
    fn p(&self) -> usize;
    fn next_blocks(&self, n: usize) -> Activation;

    fn is_deterministic(&self) -> bool {
        true
    }
}

impl BlockSchedule for ActivationPlan {
    fn m(&self) -> usize {
        ActivationPlan::m(self)
    }

    fn p(&self) -> usize {
        ActivationPlan::p(self)
    }

    fn next_blocks(&self, n: usize) -> Activation {
        ActivationPlan::next_blocks(self, n)
    }

    fn is_deterministic(&self) -> bool {
        ActivationPlan::is_deterministic(self)
    }
}

/// True iff each window of `window + 1` consecutive iterations starting at
/// `0..horizon` activates every primal and every dual block.
pub fn verify_sweeping(plan: &dyn BlockSchedule, horizon: usize, window: usize) -> bool {
    let (m, p) = (plan.m(), plan.p());
    let draws: Vec<Activation> = (0..horizon + window).map(|n| plan.next_blocks(n)).collect();
    (0..horizon).all(|start| {
        let mut seen_primal = vec![false; m];
        let mut seen_dual = vec![false; p];
        for a in &draws[start..=start + window] {
            a.primal.iter().for_each(|&i| seen_primal[i] = true);
            a.dual.iter().for_each(|&k| seen_dual[k] = true);
        }
        seen_primal.into_iter().all(|s| s) && seen_dual.into_iter().all(|s| s)
    })
}

/// Which side's activations define an epoch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpochBasis {
    /// Activated primal blocks divided by `m`.
    Primal,
    /// Activated coupling blocks divided by `p`.
    Dual,
}

impl EpochBasis {
    pub fn counter(self, m: usize, p: usize) -> EpochCounter {
        EpochCounter::new(match self {
            Self::Primal => m,
            Self::Dual => p,
        })
    }

    pub fn count(self, a: &Activation) -> usize {
        match self {
            Self::Primal => a.primal.len(),
            Self::Dual => a.dual.len(),
        }
    }
}

/// Cumulative number of activated blocks over the number of blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EpochCounter {
    cumulative: u64,
    denominator: usize,
}

impl EpochCounter {
    pub fn new(denominator: usize) -> Self {
        assert!(denominator > 0, "epoch denominator must be positive");
        Self {
            cumulative: 0,
            denominator,
        }
    }

    pub fn record(&mut self, activated: usize) {
        self.cumulative += activated as u64;
    }

    pub fn cumulative(&self) -> u64 {
        self.cumulative
    }

    pub fn epochs(&self) -> f64 {
        self.cumulative as f64 / self.denominator as f64
    }
}

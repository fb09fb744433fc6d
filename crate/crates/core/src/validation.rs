//! Acceptance checks shared by the `acceptance` test target and the CLI.
//!
//! Each check returns a [`CheckReport`] with a one-line verdict. Tolerances
//! and runtime limits are fixed constants of the check, not parameters.

use std::fmt;
use std::path::PathBuf;
use std::sync::OnceLock;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::block::BlockVector;
use crate::dr::{DouglasRachford, DrConfig};
use crate::error::{Error, Result};
use crate::experiments::{
    self, compute_reference, run_comparison, write_mean_csv, Algorithm, ComparisonConfig, Experiment,
};
use crate::linops::{BlockOperatorGrid, GramSide, LinOp, SubspaceProjector};
use crate::oracle::{brute_force_prox_oracle_with, OracleOptions};
use crate::plot::{render_svg, Series};
use crate::problem::ProblemSpec;
use crate::prox::ProxFunction;
use crate::ps::{ProjectiveSplitting, PsConfig};
use crate::run::{BlockSolver, RunOptions, TraceEvery};
use crate::schedule::{verify_sweeping, ActivationPlan};
use crate::trace::write_csv;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Check {
    ProxOracle,
    LinearAlgebra,
    CrossSolver,
    HyperplaneIdentity,
    Fejer,
    ActivationConditions,
    BlockActivation,
    Structure,
    FigureShape,
    Determinism,
}

impl Check {
    pub const ALL: [Check; 10] = [
        Check::ProxOracle,
        Check::LinearAlgebra,
        Check::CrossSolver,
        Check::HyperplaneIdentity,
        Check::Fejer,
        Check::ActivationConditions,
        Check::BlockActivation,
        Check::Structure,
        Check::FigureShape,
        Check::Determinism,
    ];

    /// Checks that verify invariants rather than convergence speed on the
    /// benchmark problems; these run in seconds.
    pub const INVARIANTS: [Check; 8] = [
        Check::ProxOracle,
        Check::LinearAlgebra,
        Check::CrossSolver,
        Check::HyperplaneIdentity,
        Check::Fejer,
        Check::ActivationConditions,
        Check::Structure,
        Check::Determinism,
    ];

    pub fn ordinal(self) -> usize {
        Self::ALL.iter().position(|&c| c == self).unwrap() + 1
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::ProxOracle => "prox oracle suite",
            Self::LinearAlgebra => "linear algebra suite",
            Self::CrossSolver => "cross-solver agreement",
            Self::HyperplaneIdentity => "hyperplane identity",
            Self::Fejer => "Fejer monotonicity",
            Self::ActivationConditions => "activation plan conditions",
            Self::BlockActivation => "block-activation convergence",
            Self::Structure => "structural reproduction",
            Self::FigureShape => "comparison figure shape",
            Self::Determinism => "determinism",
        }
    }

    /// Wall-clock limit in seconds.
    pub fn time_limit(self) -> Option<f64> {
        match self {
            Self::ProxOracle | Self::LinearAlgebra => Some(30.0),
            Self::CrossSolver => Some(120.0),
            Self::BlockActivation => Some(300.0),
            Self::FigureShape => Some(600.0),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub check: Check,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} [{:>2}] {}: {} ({:.1} s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.check.ordinal(),
            self.check.name(),
            self.detail,
            self.seconds
        )
    }
}

#[derive(Debug, Clone, Default)]
pub struct ValidationOptions {
    /// Where the comparison check writes its CSV and SVG; skipped if `None`.
    pub artifact_dir: Option<PathBuf>,
}

/// Runs `check`, converting errors into failures and enforcing its time limit.
pub fn run_check(check: Check, opts: &ValidationOptions) -> CheckReport {
    let started = Instant::now();
    let outcome = match check {
        Check::ProxOracle => prox_oracle_suite(),
        Check::LinearAlgebra => linear_algebra_suite(),
        Check::CrossSolver => shared_cross_solver().map(|r| r.agreement_verdict()),
        Check::HyperplaneIdentity => shared_cross_solver().map(|r| r.hyperplane_verdict()),
        Check::Fejer => shared_cross_solver().map(|r| r.fejer_verdict()),
        Check::ActivationConditions => activation_conditions(),
        Check::BlockActivation => block_activation(),
        Check::Structure => structure(),
        Check::FigureShape => figure_shape(opts),
        Check::Determinism => determinism(),
    };
    let seconds = started.elapsed().as_secs_f64();
    let (mut passed, mut detail) = match outcome {
        Ok(v) => v,
        Err(e) => (false, format!("error: {e}")),
    };
    if let Some(limit) = check.time_limit() {
        if seconds >= limit {
            passed = false;
            detail.push_str(&format!("; exceeded time limit of {limit} s"));
        }
    }
    CheckReport {
        check,
        passed,
        detail,
        seconds,
    }
}

type Verdict = (bool, String);

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn normal_vec(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| scale * normal(rng)).collect()
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (rng.random_range(lo.ln()..hi.ln())).exp()
}

fn diff_norm(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// One random member of each prox family, with dimension at most 5.
pub fn random_catalog_member(family: usize, rng: &mut ChaCha8Rng) -> ProxFunction {
    let dim = rng.random_range(1..=5);
    let center = |rng: &mut ChaCha8Rng| normal_vec(rng, dim, 1.5);
    match family % 8 {
        0 => ProxFunction::zero(dim),
        1 => ProxFunction::zero_indicator(dim),
        2 => ProxFunction::scaled_l2_norm(log_uniform(rng, 0.1, 3.0), dim).unwrap(),
        3 => {
            let b = log_uniform(rng, 0.5, 2.0);
            ProxFunction::hinge(if rng.random_bool(0.5) { b } else { -b }).unwrap()
        }
        4 => ProxFunction::box_indicator(-log_uniform(rng, 0.1, 2.0), log_uniform(rng, 0.1, 2.0), dim).unwrap(),
        5 => ProxFunction::scaled_l2_distance(log_uniform(rng, 0.1, 3.0), center(rng)).unwrap(),
        6 => ProxFunction::scaled_sq_l2(log_uniform(rng, 0.1, 3.0), center(rng)).unwrap(),
        _ => ProxFunction::l12_pairs(rng.random_range(1..=2)),
    }
}

fn prox_oracle_suite() -> Result<Verdict> {
    const DRAWS: usize = 100;
    const TOL: f64 = 1e-4;
    let mut rng = ChaCha8Rng::seed_from_u64(0xc1);
    let mut worst: f64 = 0.0;
    let mut failures = Vec::new();
    for family in 0..8 {
        for draw in 0..DRAWS {
            let f = random_catalog_member(family, &mut rng);
            let x = normal_vec(&mut rng, f.dim(), 2.0);
            let gamma = log_uniform(&mut rng, 0.1, 3.0);
            let opts = OracleOptions {
                seed: draw as u64,
                ..OracleOptions::default()
            };
            let want = brute_force_prox_oracle_with(|u| f.eval(u), &x, gamma, &opts)?;
            let err = diff_norm(&f.prox(&x, gamma), &want);
            worst = worst.max(err);
            if err > TOL {
                failures.push(format!("{f:?} at x={x:?}, gamma={gamma}: err {err:.2e}"));
            }
        }
    }
    let detail = format!(
        "{} functions x {DRAWS} draws, max deviation {worst:.2e} (tol {TOL:.0e})",
        8
    );
    Ok(match failures.first() {
        None => (true, detail),
        Some(first) => (false, format!("{detail}; {} failures, first: {first}", failures.len())),
    })
}

/// Random operator of shape `rows x cols`, drawn from the representations
/// that fit that shape.
fn random_op(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> LinOp {
    let pick = rng.random_range(0..3);
    if pick == 0 && rows == cols {
        LinOp::Scaled {
            alpha: normal(rng),
            dim: cols,
        }
    } else if pick == 1 && rows == 1 {
        LinOp::RowFunctional {
            u: normal_vec(rng, cols, 1.0 / (cols as f64).sqrt()),
        }
    } else {
        LinOp::dense(rows, cols, normal_vec(rng, rows * cols, 1.0 / (cols as f64).sqrt()))
    }
}

fn random_grid(rng: &mut ChaCha8Rng, case: usize) -> BlockOperatorGrid {
    if case % 5 == 4 {
        // structured operators on a small image
        let side = rng.random_range(3..=10);
        let n = side * side;
        let row = rng.random_range(0..side);
        let mut grid = BlockOperatorGrid::new(vec![n], vec![side, 2 * n]);
        grid.insert(0, 0, LinOp::RowSelect { side, row }).unwrap();
        grid.insert(1, 0, LinOp::Difference { side }).unwrap();
        return grid;
    }
    if case % 5 == 3 {
        let side = rng.random_range(3..=10);
        let n = side * side;
        let len = side * rng.random_range(1..=side);
        let mut grid = BlockOperatorGrid::new(vec![n], vec![len]);
        let blur = crate::linops::BlurRows {
            side,
            start: 0,
            len,
            sigma_top: 0.5,
            sigma_bottom: 2.0,
            radius: 2,
        };
        grid.insert(0, 0, LinOp::Blur(blur)).unwrap();
        return grid;
    }
    let m = rng.random_range(1..=5);
    let p = rng.random_range(1..=5);
    let primal: Vec<usize> = (0..m).map(|_| rng.random_range(1..=40)).collect();
    let dual: Vec<usize> = (0..p).map(|_| rng.random_range(1..=40)).collect();
    let mut grid = BlockOperatorGrid::new(primal.clone(), dual.clone());
    for (k, &r) in dual.iter().enumerate() {
        for (i, &c) in primal.iter().enumerate() {
            if rng.random_bool(0.6) {
                grid.insert(k, i, random_op(rng, r, c)).unwrap();
            }
        }
    }
    grid
}

fn random_block(rng: &mut ChaCha8Rng, dims: &[usize]) -> BlockVector {
    BlockVector::from_blocks(dims.iter().map(|&n| normal_vec(rng, n, 1.0)).collect())
}

fn linear_algebra_suite() -> Result<Verdict> {
    const GRIDS: usize = 50;
    const ADJOINT_TOL: f64 = 1e-10;
    const PROJ_TOL: f64 = 1e-9;
    let mut rng = ChaCha8Rng::seed_from_u64(0xc2);
    let (mut adj, mut idem, mut range, mut orth, mut forms): (f64, f64, f64, f64, f64) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let mut largest = (0, 0);
    for case in 0..GRIDS {
        let grid = std::sync::Arc::new(random_grid(&mut rng, case));
        let (n, m) = (grid.primal_total(), grid.dual_total());
        if n > 200 || m > 200 {
            return Err(Error::InvalidInput(format!("generated grid {m}x{n} exceeds 200")));
        }
        largest = largest.max((m, n));
        for _ in 0..3 {
            let x = random_block(&mut rng, grid.primal_dims());
            let v = random_block(&mut rng, grid.dual_dims());
            let lx = grid.apply_stacked(&x)?;
            let ltv = grid.apply_stacked_adjoint(&v)?;
            let scale = (lx.norm() * v.norm()).max(x.norm() * ltv.norm()).max(f64::MIN_POSITIVE);
            adj = adj.max((lx.dot(&v) - x.dot(&ltv)).abs() / scale);
        }
        let dual = SubspaceProjector::build_with_side(grid.clone(), GramSide::Dual)?;
        let primal = SubspaceProjector::build_with_side(grid.clone(), GramSide::Primal)?;
        let mut z = random_block(&mut rng, grid.primal_dims());
        let mut y = random_block(&mut rng, grid.dual_dims());
        let s = (z.norm_sq() + y.norm_sq()).sqrt();
        z.scale(1.0 / s);
        y.scale(1.0 / s);
        for proj in [&dual, &primal] {
            let (t, u) = proj.project(&z, &y)?;
            let (t2, u2) = proj.project(&t, &u)?;
            idem = idem.max((t2.distance(&t).powi(2) + u2.distance(&u).powi(2)).sqrt());
            range = range.max(grid.apply_stacked(&t)?.distance(&u));
            let w = random_block(&mut rng, grid.primal_dims());
            let lw = grid.apply_stacked(&w)?;
            let scale = (w.norm_sq() + lw.norm_sq()).sqrt().max(f64::MIN_POSITIVE);
            let rz = z.sub(&t)?;
            let ry = y.sub(&u)?;
            orth = orth.max((rz.dot(&w) + ry.dot(&lw)).abs() / scale);
        }
        let (ta, ua) = dual.project(&z, &y)?;
        let (tb, ub) = primal.project(&z, &y)?;
        forms = forms.max((ta.distance(&tb).powi(2) + ua.distance(&ub).powi(2)).sqrt());
    }
    let passed = adj <= ADJOINT_TOL && idem <= PROJ_TOL && range <= PROJ_TOL && orth <= PROJ_TOL && forms <= PROJ_TOL;
    Ok((
        passed,
        format!(
            "{GRIDS} grids up to {}x{}: adjoint {adj:.1e}, idempotence {idem:.1e}, range {range:.1e}, orthogonality {orth:.1e}, closed forms {forms:.1e}",
            largest.0, largest.1
        ),
    ))
}

/// Small random instance with a mixed prox catalog and a unique solution.
///
/// Coupling term 0 is a strongly convex quadratic composed with an
/// invertible map of the whole primal vector, which makes the primal
/// solution unique; the remaining terms are drawn from the catalog.
pub fn random_desk_instance(seed: u64) -> Result<ProblemSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = rng.random_range(1..=4);
    let p = rng.random_range(2..=5);
    let primal: Vec<usize> = (0..m).map(|_| rng.random_range(1..=4)).collect();
    let n: usize = primal.iter().sum();

    let mut g = vec![ProxFunction::scaled_sq_l2(
        log_uniform(&mut rng, 0.2, 1.0),
        normal_vec(&mut rng, n, 1.0),
    )?];
    let mut dual = vec![n];
    for _ in 1..p {
        let d = rng.random_range(1..=4);
        let gk = match rng.random_range(0..6) {
            0 => ProxFunction::hinge(if rng.random_bool(0.5) { 1.0 } else { -1.0 })?,
            1 => ProxFunction::scaled_l2_norm(log_uniform(&mut rng, 0.1, 1.0), d)?,
            2 => ProxFunction::scaled_l2_distance(log_uniform(&mut rng, 0.1, 1.0), normal_vec(&mut rng, d, 1.0))?,
            3 => ProxFunction::scaled_sq_l2(log_uniform(&mut rng, 0.1, 1.0), normal_vec(&mut rng, d, 1.0))?,
            4 => ProxFunction::l12_pairs(d.div_ceil(2)),
            _ => ProxFunction::zero(d),
        };
        dual.push(gk.dim());
        g.push(gk);
    }
    let f = primal
        .iter()
        .map(|&d| match rng.random_range(0..5) {
            0 => Ok(ProxFunction::zero(d)),
            1 => ProxFunction::scaled_l2_norm(log_uniform(&mut rng, 0.1, 1.0), d),
            2 => ProxFunction::box_indicator(-log_uniform(&mut rng, 0.3, 2.0), log_uniform(&mut rng, 0.3, 2.0), d),
            3 => ProxFunction::scaled_l2_distance(log_uniform(&mut rng, 0.1, 1.0), normal_vec(&mut rng, d, 1.0)),
            _ => ProxFunction::scaled_sq_l2(log_uniform(&mut rng, 0.1, 1.0), normal_vec(&mut rng, d, 1.0)),
        })
        .collect::<Result<Vec<_>>>()?;

    let mut grid = BlockOperatorGrid::new(primal.clone(), dual.clone());
    // identity plus a small perturbation, split by primal block
    let a = nalgebra::DMatrix::<f64>::from_fn(n, n, |r, c| {
        let e = if r == c { 1.0 } else { 0.0 };
        e + 0.3 * normal(&mut rng) / (n as f64).sqrt()
    });
    let mut off = 0;
    for (i, &d) in primal.iter().enumerate() {
        grid.insert(0, i, LinOp::from_matrix(&a.columns(off, d).into_owned()))?;
        off += d;
    }
    for (k, &r) in dual.iter().enumerate().skip(1) {
        let forced = rng.random_range(0..m);
        for (i, &c) in primal.iter().enumerate() {
            if i == forced || rng.random_bool(0.5) {
                grid.insert(k, i, random_op(&mut rng, r, c))?;
            }
        }
    }
    ProblemSpec::new(f, g, grid)
}

pub const CROSS_SOLVER_INSTANCES: usize = 10;
const LIMIT_TOL: f64 = 1e-12;
const LIMIT_CAP: usize = 200_000;

/// Everything the cross-solver, hyperplane and Fejer checks need from full
/// activation runs of both solvers on the random desk instances.
#[derive(Debug, Clone, Default)]
pub struct CrossSolverRuns {
    pub max_limit_gap: f64,
    pub max_dr_residual: f64,
    pub max_ps_residual: f64,
    pub max_hyperplane: f64,
    pub updates: usize,
    pub max_dr_fejer_rise: f64,
    pub max_ps_fejer_rise: f64,
    pub iterations: (usize, usize),
}

impl CrossSolverRuns {
    fn agreement_verdict(&self) -> Verdict {
        let passed = self.max_limit_gap <= 1e-4 && self.max_dr_residual <= 1e-6 && self.max_ps_residual <= 1e-6;
        (
            passed,
            format!(
                "{CROSS_SOLVER_INSTANCES} instances: max limit gap {:.1e} (tol 1e-4), residuals dr {:.1e} / ps {:.1e} (tol 1e-6)",
                self.max_limit_gap, self.max_dr_residual, self.max_ps_residual
            ),
        )
    }

    fn hyperplane_verdict(&self) -> Verdict {
        (
            self.updates > 0 && self.max_hyperplane <= 1e-10,
            format!(
                "{} updated steps with lambda=1, max |affine value at new point| {:.1e} (tol 1e-10)",
                self.updates, self.max_hyperplane
            ),
        )
    }

    fn fejer_verdict(&self) -> Verdict {
        (
            self.max_dr_fejer_rise <= 1e-9 && self.max_ps_fejer_rise <= 1e-9,
            format!(
                "max distance increase dr {:.1e} / ps {:.1e} over {} / {} iterations (slack 1e-9)",
                self.max_dr_fejer_rise, self.max_ps_fejer_rise, self.iterations.0, self.iterations.1
            ),
        )
    }
}

fn max_rise(distances: &[f64]) -> f64 {
    distances.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
}

/// The cross-solver runs are computed once per process and reused.
fn shared_cross_solver() -> Result<CrossSolverRuns> {
    static RUNS: OnceLock<std::result::Result<CrossSolverRuns, String>> = OnceLock::new();
    RUNS.get_or_init(|| cross_solver().map_err(|e| e.to_string()))
        .clone()
        .map_err(Error::Numerical)
}

/// Runs both solvers with full activation to high precision on every random
/// desk instance, recording their whole trajectories.
pub fn cross_solver() -> Result<CrossSolverRuns> {
    let mut out = CrossSolverRuns::default();
    for j in 0..CROSS_SOLVER_INSTANCES {
        let spec = random_desk_instance(1000 + j as u64)?;

        let dr = DouglasRachford::new(&spec, DrConfig::full(&spec)?)?;
        let mut st = dr.init();
        let mut path = vec![[st.z.to_flat(), st.y.to_flat()].concat()];
        for _ in 0..LIMIT_CAP {
            dr.step(&mut st)?;
            path.push([st.z.to_flat(), st.y.to_flat()].concat());
            if spec.kt_residual(&dr.kt_point(&st), 1.0, 1.0)? <= LIMIT_TOL {
                break;
            }
        }
        let limit = path.last().unwrap().clone();
        let dists: Vec<f64> = path.iter().map(|p| diff_norm(p, &limit)).collect();
        out.max_dr_fejer_rise = out.max_dr_fejer_rise.max(max_rise(&dists));
        out.iterations.0 += path.len() - 1;
        let x_dr = st.x.clone();
        out.max_dr_residual = out.max_dr_residual.max(spec.kt_residual(&dr.kt_point(&st), 1.0, 1.0)?);

        let ps = ProjectiveSplitting::new(&spec, PsConfig::full(&spec)?.with_lambda(1.0))?;
        let mut st = ps.init();
        let mut path = vec![[st.x.to_flat(), st.v_star.to_flat()].concat()];
        for _ in 0..LIMIT_CAP {
            let (rep, _) = ps.step_report(&mut st)?;
            if rep.updated {
                out.updates += 1;
                let v = st.hyperplane_value().abs().max(st.hyperplane_value_expanded().abs());
                out.max_hyperplane = out.max_hyperplane.max(v);
            }
            path.push([st.x.to_flat(), st.v_star.to_flat()].concat());
            if spec.kt_residual(&ps.kt_point(&st), 1.0, 1.0)? <= LIMIT_TOL {
                break;
            }
        }
        let limit = path.last().unwrap().clone();
        let dists: Vec<f64> = path.iter().map(|p| diff_norm(p, &limit)).collect();
        out.max_ps_fejer_rise = out.max_ps_fejer_rise.max(max_rise(&dists));
        out.iterations.1 += path.len() - 1;
        out.max_ps_residual = out.max_ps_residual.max(spec.kt_residual(&ps.kt_point(&st), 1.0, 1.0)?);

        out.max_limit_gap = out.max_limit_gap.max(x_dr.distance(&st.x));
    }
    Ok(out)
}

fn activation_conditions() -> Result<Verdict> {
    let mut sizes = vec![(experiments::EXP1_D, experiments::EXP1_P)];
    let exp1_m = experiments::gen_group_cover(experiments::EXP1_D)?.len();
    sizes[0].0 = exp1_m;
    sizes.push((1, experiments::EXP2_Q + experiments::EXP2_S + 1));
    sizes.extend([(4, 5), (8, 8), (3, 2)]);
    let mut plans = 0;
    let mut bad = Vec::new();
    for &(m, p) in &sizes {
        for alpha in [0.1, 0.25, 0.4, 0.5, 0.7, 1.0] {
            let plan = ActivationPlan::cyclic_from_fractions(m, p, alpha, alpha)?;
            // ceil(1/alpha) slices per side, fewer when a side has fewer blocks
            let slices = (1.0 / alpha - 1e-9).ceil() as usize;
            let t = slices.min(m).max(slices.min(p)) - 1;
            plans += 1;
            let horizon = 3 * slices + 7;
            let exact = verify_sweeping(&plan, horizon, t) && (t == 0 || !verify_sweeping(&plan, horizon, t - 1));
            if !exact || plan.sweep_window() != Some(t) {
                bad.push(format!("m={m} p={p} alpha={alpha}"));
            }
        }
    }
    const DRAWS: usize = 100_000;
    let plan = ActivationPlan::random_subset(8, 8, 0.25, 0.25, 0xc6)?;
    let mut counts = [[0usize; 8]; 2];
    for n in 0..DRAWS {
        let a = plan.next_blocks(n);
        a.primal.iter().for_each(|&i| counts[0][i] += 1);
        a.dual.iter().for_each(|&k| counts[1][k] += 1);
    }
    let dev = counts
        .iter()
        .flatten()
        .map(|&c| (c as f64 / DRAWS as f64 - 0.25).abs())
        .fold(0.0, f64::max);
    let passed = bad.is_empty() && dev <= 0.01;
    let mut detail = format!(
        "{plans} cyclic plans sweep with exactly T = ceil(1/alpha) - 1 (capped by block count); random marginals max |freq - 0.25| = {dev:.4} over {DRAWS} draws"
    );
    if !bad.is_empty() {
        detail.push_str(&format!("; sweeping failed for {}", bad.join(", ")));
    }
    Ok((passed, detail))
}

/// Douglas-Rachford with random subsets over 20 seeds and projective
/// splitting with a cyclic sweep, both at `alpha = 0.25` on the desk
/// classification problem, must get 30 dB closer to the reference within
/// 300 epochs.
fn block_activation() -> Result<Verdict> {
    const TARGET_DB: f64 = -30.0;
    const BUDGET: f64 = 300.0;
    let exp = Experiment::Exp1;
    let spec = exp.build(1)?;
    let reference = compute_reference(&spec)?;
    let mut cfg = ComparisonConfig::new(
        vec![Algorithm::Dr, Algorithm::Ps],
        vec![0.25],
        (0..20).collect(),
        BUDGET,
    );
    cfg.params = exp.params(&spec);
    cfg.epoch_basis = exp.epoch_basis();
    let cells = run_comparison(&spec, &reference.x, &cfg)?;
    let mut passed = true;
    let mut parts = Vec::new();
    for c in &cells {
        let best: Vec<f64> = c
            .traces
            .iter()
            .map(|t| {
                t.iter()
                    .filter(|r| r.epochs <= BUDGET + 1e-9)
                    .map(|r| r.normalized_error_db)
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        let worst = best.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let ok = worst <= TARGET_DB;
        passed &= ok;
        let runs = if c.algorithm == Algorithm::Ps { 1 } else { best.len() };
        parts.push(format!(
            "{} ({} run{}) worst {worst:.1} dB{}",
            c.label(),
            runs,
            if runs == 1 { "" } else { "s" },
            if ok { "" } else { " [above target]" }
        ));
    }
    Ok((
        passed,
        format!("target {TARGET_DB} dB by {BUDGET} epochs: {}", parts.join("; ")),
    ))
}

fn structure() -> Result<Verdict> {
    let m = experiments::gen_group_cover(10_000)?.len();
    let (inst, spec) = experiments::desk_exp2(1)?;
    let p_ok = spec.p() == inst.q() + inst.s + 1;
    let snr1 = inst.snr_mask_db();
    let snr2 = inst.snr_blur_db();
    let snr_ok =
        (snr1 - experiments::EXP2_SNR_MASK_DB).abs() <= 0.1 && (snr2 - experiments::EXP2_SNR_BLUR_DB).abs() <= 0.1;
    Ok((
        m == 1429 && p_ok && snr_ok,
        format!(
            "group cover of d=10000 has m={m}; image problem p={} = q+s+1 = {}; SNRs {snr1:.3} / {snr2:.3} dB",
            spec.p(),
            inst.q() + inst.s + 1
        ),
    ))
}

/// Mean traces of the comparison grid must be nonincreasing after a 5-epoch
/// burn-in, up to 0.5 dB above the best value seen so far.
fn figure_shape(opts: &ValidationOptions) -> Result<Verdict> {
    const BURN_IN: f64 = 5.0;
    const SLACK_DB: f64 = 0.5;
    let exp = Experiment::Exp1;
    let spec = exp.build(1)?;
    let reference = compute_reference(&spec)?;
    let mut cfg = ComparisonConfig::new(
        vec![Algorithm::Dr, Algorithm::Ps],
        vec![0.1, 0.4, 0.7, 1.0],
        (0..20).collect(),
        300.0,
    );
    cfg.params = exp.params(&spec);
    cfg.epoch_basis = exp.epoch_basis();
    let cells = run_comparison(&spec, &reference.x, &cfg)?;
    let mut worst: f64 = 0.0;
    let mut offenders = Vec::new();
    for c in &cells {
        let mut best = f64::INFINITY;
        let mut rise: f64 = 0.0;
        for q in c.mean.iter().filter(|q| q.epochs >= BURN_IN) {
            rise = rise.max(q.error_db - best);
            best = best.min(q.error_db);
        }
        worst = worst.max(rise);
        if rise > SLACK_DB {
            offenders.push(format!("{} rises {rise:.2} dB", c.label()));
        }
    }
    if let Some(dir) = &opts.artifact_dir {
        std::fs::create_dir_all(dir)?;
        write_mean_csv(std::fs::File::create(dir.join("comparison_mean.csv"))?, &cells)?;
        let series: Vec<Series> = cells
            .iter()
            .map(|c| Series {
                label: c.label(),
                points: c.mean.iter().map(|q| (q.epochs, q.error_db)).collect(),
            })
            .collect();
        std::fs::write(
            dir.join("comparison.svg"),
            render_svg(
                "desk classification problem",
                "epochs",
                "normalized error (dB)",
                &series,
            ),
        )?;
    }
    let mut detail = format!(
        "{} mean traces, max rise after {BURN_IN} epochs {worst:.3} dB (slack {SLACK_DB} dB)",
        cells.len()
    );
    if !offenders.is_empty() {
        detail.push_str(&format!("; {}", offenders.join(", ")));
    }
    Ok((offenders.is_empty(), detail))
}

fn csv_bytes(
    spec: &ProblemSpec,
    algorithm: Algorithm,
    plan: ActivationPlan,
    params: &experiments::SolverParams,
    reference: &BlockVector,
) -> Result<Vec<u8>> {
    let opts = RunOptions {
        max_iterations: usize::MAX,
        stop_tolerance: 0.0,
        epoch_budget: Some(20.0),
        trace_every: TraceEvery::Iteration,
        reference: Some(reference.clone()),
        ..RunOptions::default()
    };
    let trace = experiments::run_single(spec, algorithm, plan, params, &opts, None)?;
    let mut buf = Vec::new();
    write_csv(&mut buf, &trace)?;
    Ok(buf)
}

fn determinism() -> Result<Verdict> {
    let exp = Experiment::Exp1;
    let spec = exp.build(3)?;
    let reference = compute_reference(&spec)?;
    let params = exp.params(&spec);
    let mut identical = 0;
    let mut total = 0;
    for (algorithm, alpha) in [
        (Algorithm::Dr, 0.25),
        (Algorithm::Dr, 1.0),
        (Algorithm::Ps, 0.25),
        (Algorithm::Ps, 1.0),
    ] {
        let plan = experiments::plan_for(algorithm, alpha, spec.m(), spec.p(), 42)?;
        let a = csv_bytes(&spec, algorithm, plan.clone(), &params, &reference.x)?;
        let b = csv_bytes(&spec, algorithm, plan, &params, &reference.x)?;
        total += 1;
        identical += usize::from(a == b);
    }
    let small = random_desk_instance(7)?;
    let small_ref = compute_reference(&small)?;
    let cfg = ComparisonConfig::new(vec![Algorithm::Dr, Algorithm::Ps], vec![0.5, 1.0], vec![1, 2, 3], 10.0);
    let par = run_comparison(&small, &small_ref.x, &cfg)?;
    let ser = run_comparison(&small, &small_ref.x, &ComparisonConfig { parallel: false, ..cfg })?;
    let render = |cells: &[experiments::ComparisonCell]| -> Result<Vec<u8>> {
        let mut buf = Vec::new();
        for c in cells {
            for t in &c.traces {
                write_csv(&mut buf, t)?;
            }
        }
        Ok(buf)
    };
    let grid_same = render(&par)? == render(&ser)?;
    Ok((
        identical == total && grid_same,
        format!(
            "{identical}/{total} repeated runs byte-identical; parallel and serial comparison grids {}",
            if grid_same { "identical" } else { "differ" }
        ),
    ))
}

//! Python bindings for the block-activated proximal splitting solvers.
//!
//! Block vectors cross the boundary as lists of lists of floats, traces as
//! lists of dicts keyed by the CSV column names.

use blocksplit::experiments::{
    compute_reference_with, plan_for, run_comparison, run_single, Algorithm, ComparisonConfig, Experiment,
    ReferenceOptions, SolverParams,
};
use blocksplit::validation::{run_check, Check, ValidationOptions};
use blocksplit::{ActivationPlan, BlockVector, EpochBasis, KtPoint, ProxFunction, RunOptions, TraceEvery, TraceRecord};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

type Blocks = Vec<Vec<f64>>;

fn to_py_err(e: blocksplit::Error) -> PyErr {
    use blocksplit::Error as E;
    match e {
        E::InvalidInput(_)
        | E::InvalidConfig(_)
        | E::DimensionMismatch { .. }
        | E::IndexOutOfRange { .. }
        | E::Json(_)
        | E::UndefinedMetric => PyValueError::new_err(e.to_string()),
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

/// An instance of `min sum_i f_i(x_i) + sum_k g_k(sum_i L_ki x_i)`.
#[pyclass(name = "Problem", module = "blocksplit_py", frozen)]
pub struct PyProblem {
    spec: blocksplit::ProblemSpec,
    experiment: Option<Experiment>,
}

impl PyProblem {
    fn basis(&self) -> EpochBasis {
        self.experiment.map_or(EpochBasis::Primal, Experiment::epoch_basis)
    }

    fn params(&self) -> SolverParams {
        self.experiment
            .map_or_else(SolverParams::default, |e| e.params(&self.spec))
    }

    fn block_vector(&self, x: Vec<Vec<f64>>) -> PyResult<BlockVector> {
        let x = BlockVector::from_blocks(x);
        x.check_dims("primal point", self.spec.primal_dims())
            .map_err(to_py_err)?;
        Ok(x)
    }
}

#[pymethods]
impl PyProblem {
    /// Parses the JSON written by `to_json` or `blocksplit export`.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let spec = serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(Self { spec, experiment: None })
    }

    /// Benchmark problem `"exp1"` or `"exp2"`.
    #[staticmethod]
    #[pyo3(signature = (name, seed = 1))]
    fn experiment(name: &str, seed: u64) -> PyResult<Self> {
        let exp: Experiment = name.parse().map_err(to_py_err)?;
        let spec = exp.build(seed).map_err(to_py_err)?;
        Ok(Self {
            spec,
            experiment: Some(exp),
        })
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.spec).map_err(|e| PyRuntimeError::new_err(e.to_string()))
    }

    #[getter]
    fn m(&self) -> usize {
        self.spec.m()
    }

    #[getter]
    fn p(&self) -> usize {
        self.spec.p()
    }

    #[getter]
    fn primal_dims(&self) -> Vec<usize> {
        self.spec.primal_dims().to_vec()
    }

    #[getter]
    fn dual_dims(&self) -> Vec<usize> {
        self.spec.dual_dims().to_vec()
    }

    fn objective(&self, x: Vec<Vec<f64>>) -> PyResult<f64> {
        self.spec.objective(&self.block_vector(x)?).map_err(to_py_err)
    }

    fn __repr__(&self) -> String {
        format!("Problem(m={}, p={})", self.spec.m(), self.spec.p())
    }
}

/// `prox_{gamma f}(x)` for a catalog function given as JSON, e.g.
/// `{"kind": "hinge", "beta": 1.0}`.
#[pyfunction]
fn prox(function: &str, x: Vec<f64>, gamma: f64) -> PyResult<Vec<f64>> {
    let f: ProxFunction = serde_json::from_str(function).map_err(|e| PyValueError::new_err(e.to_string()))?;
    f.validate().map_err(to_py_err)?;
    if x.len() != f.dim() {
        return Err(PyValueError::new_err(format!(
            "expected {} entries, got {}",
            f.dim(),
            x.len()
        )));
    }
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(PyValueError::new_err("gamma must be positive"));
    }
    Ok(f.prox(&x, gamma))
}

/// High-accuracy Kuhn-Tucker point as `(x, v_star)`.
#[pyfunction]
#[pyo3(signature = (problem, tolerance = 1e-10, max_iterations = 1_000_000))]
fn reference(py: Python<'_>, problem: &PyProblem, tolerance: f64, max_iterations: usize) -> PyResult<(Blocks, Blocks)> {
    let opts = ReferenceOptions {
        tolerance,
        max_iterations,
        ..ReferenceOptions::default()
    };
    let pt = py
        .detach(|| compute_reference_with(&problem.spec, &opts))
        .map_err(to_py_err)?;
    Ok((pt.x.into_blocks(), pt.v_star.into_blocks()))
}

fn resolve_reference(py: Python<'_>, problem: &PyProblem, given: Option<Vec<Vec<f64>>>) -> PyResult<BlockVector> {
    match given {
        Some(x) => problem.block_vector(x),
        None => {
            let pt: KtPoint = py
                .detach(|| compute_reference_with(&problem.spec, &ReferenceOptions::default()))
                .map_err(to_py_err)?;
            Ok(pt.x)
        }
    }
}

fn override_params(mut params: SolverParams, gamma: Option<f64>, mu: Option<f64>, lambda: Option<f64>) -> SolverParams {
    if let Some(g) = gamma {
        params.dr_gamma = g;
        params.ps_gamma = g;
    }
    if let Some(m) = mu {
        params.ps_mu = m;
    }
    if let Some(l) = lambda {
        params.dr_lambda = l;
        params.ps_lambda = l;
    }
    params
}

fn record_dict<'py>(py: Python<'py>, r: &TraceRecord) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("iteration", r.iteration)?;
    d.set_item("epochs", r.epochs)?;
    d.set_item("error_db", r.normalized_error_db)?;
    d.set_item("objective", r.objective)?;
    d.set_item("kt_residual", r.kt_residual)?;
    d.set_item("activated_primal", r.activated_primal)?;
    d.set_item("activated_dual", r.activated_dual)?;
    d.set_item("wall_ms", r.wall_ms)?;
    d.set_item("macs", r.macs)?;
    Ok(d)
}

/// Runs one solver from zero and returns its trace.
///
/// `plan` is `"full"`, `"random"` or `"cyclic"`; by default full activation
/// at `alpha = 1`, random subsets for `"dr"` and a cyclic sweep for `"ps"`.
#[pyfunction]
#[pyo3(signature = (problem, algorithm = "dr", alpha = 1.0, plan = None, seed = 0, epochs = 300.0,
    gamma = None, mu = None, lambda_ = None, trace_every = None, reference = None))]
#[allow(clippy::too_many_arguments)]
fn run<'py>(
    py: Python<'py>,
    problem: &PyProblem,
    algorithm: &str,
    alpha: f64,
    plan: Option<&str>,
    seed: u64,
    epochs: f64,
    gamma: Option<f64>,
    mu: Option<f64>,
    lambda_: Option<f64>,
    trace_every: Option<f64>,
    reference: Option<Vec<Vec<f64>>>,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let algorithm: Algorithm = algorithm.parse().map_err(to_py_err)?;
    let spec = &problem.spec;
    let (m, p) = (spec.m(), spec.p());
    let plan = match plan {
        None => plan_for(algorithm, alpha, m, p, seed),
        Some("full") => ActivationPlan::full(m, p),
        Some("random") => ActivationPlan::random_subset(m, p, alpha, alpha, seed),
        Some("cyclic") => ActivationPlan::cyclic_from_fractions(m, p, alpha, alpha),
        Some(other) => return Err(PyValueError::new_err(format!("unknown plan '{other}'"))),
    }
    .map_err(to_py_err)?;
    if !(epochs > 0.0 && epochs.is_finite()) {
        return Err(PyValueError::new_err("epochs must be positive"));
    }
    let trace_every = match trace_every {
        None => TraceEvery::Iteration,
        Some(e) if e > 0.0 => TraceEvery::Epochs(e),
        Some(_) => return Err(PyValueError::new_err("trace_every must be positive")),
    };
    let params = override_params(problem.params(), gamma, mu, lambda_);
    let reference = resolve_reference(py, problem, reference)?;
    let opts = RunOptions {
        max_iterations: usize::MAX,
        stop_tolerance: 0.0,
        epoch_basis: problem.basis(),
        epoch_budget: Some(epochs),
        trace_every,
        reference: Some(reference),
        ..RunOptions::default()
    };
    let trace = py
        .detach(|| run_single(spec, algorithm, plan, &params, &opts, None))
        .map_err(to_py_err)?;
    trace.iter().map(|r| record_dict(py, r)).collect()
}

/// Seed-averaged normalized error over an algorithm x alpha grid, one dict
/// per cell with keys `algorithm`, `alpha`, `epochs` and `error_db`.
#[pyfunction]
#[pyo3(signature = (problem, alphas = vec![0.1, 0.4, 0.7, 1.0], seeds = 20, epochs = 300.0,
    algorithms = vec!["dr".to_string(), "ps".to_string()], reference = None))]
fn compare<'py>(
    py: Python<'py>,
    problem: &PyProblem,
    alphas: Vec<f64>,
    seeds: u64,
    epochs: f64,
    algorithms: Vec<String>,
    reference: Option<Vec<Vec<f64>>>,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let algorithms = algorithms
        .iter()
        .map(|a| a.parse::<Algorithm>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(to_py_err)?;
    let mut cfg = ComparisonConfig::new(algorithms, alphas, (0..seeds).collect(), epochs);
    cfg.params = problem.params();
    cfg.epoch_basis = problem.basis();
    let reference = resolve_reference(py, problem, reference)?;
    let cells = py
        .detach(|| run_comparison(&problem.spec, &reference, &cfg))
        .map_err(to_py_err)?;
    cells
        .iter()
        .map(|c| {
            let d = PyDict::new(py);
            d.set_item("algorithm", c.algorithm.to_string())?;
            d.set_item("alpha", c.alpha)?;
            d.set_item("epochs", c.mean.iter().map(|q| q.epochs).collect::<Vec<_>>())?;
            d.set_item("error_db", c.mean.iter().map(|q| q.error_db).collect::<Vec<_>>())?;
            Ok(d)
        })
        .collect()
}

/// Runs the invariant checks (all checks with `full=True`); returns
/// `(index, name, passed, detail)` per check.
#[pyfunction]
#[pyo3(signature = (full = false))]
fn validate(py: Python<'_>, full: bool) -> Vec<(usize, String, bool, String)> {
    let checks: &[Check] = if full { &Check::ALL } else { &Check::INVARIANTS };
    py.detach(|| {
        checks
            .iter()
            .map(|&c| {
                let r = run_check(c, &ValidationOptions::default());
                (c.ordinal(), c.name().to_string(), r.passed, r.detail)
            })
            .collect()
    })
}

#[pymodule]
fn blocksplit_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyProblem>()?;
    m.add_function(wrap_pyfunction!(prox, m)?)?;
    m.add_function(wrap_pyfunction!(reference, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(compare, m)?)?;
    m.add_function(wrap_pyfunction!(validate, m)?)?;
    m.add("CSV_HEADER", blocksplit::CSV_HEADER)?;
    Ok(())
}

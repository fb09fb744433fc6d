//! `blocksplit`: run, compare and validate the block-activated solvers.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use blocksplit::experiments::{
    compute_reference_with, run_comparison, run_single, write_mean_csv, Algorithm, ComparisonConfig, Experiment,
    ReferenceOptions, SolverParams,
};
use blocksplit::plot::{render_svg, Series};
use blocksplit::validation::{run_check, Check, ValidationOptions};
use blocksplit::{write_csv, ActivationPlan, EpochBasis, KtPoint, ProblemSpec, RunOptions, TraceEvery, TraceRecord};
use clap::Parser;

use config::{
    AlgorithmChoice, Cli, Command, CompareArgs, ConfigFile, ExportArgs, PlanKind, ProblemArgs, ReferenceArgs, RunArgs,
    SolverArgs,
};

const DEFAULT_EPOCHS: f64 = 300.0;
const DEFAULT_INSTANCE_SEED: u64 = 1;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad flags, configuration or input files.
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Solver(#[from] blocksplit::Error),
    #[error("{0}")]
    Io(#[from] io::Error),
    #[error("{0} of {1} checks failed")]
    ChecksFailed(usize, usize),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            Self::Usage(_) => 2,
            _ => 1,
        }
    }
}

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if matches!(e, CliError::Usage(_)) {
                eprintln!("\nFor more information, try '--help'.");
            }
            ExitCode::from(e.exit_code())
        }
    }
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Run(mut args) => {
            args.merge(&ConfigFile::load(args.problem.config.as_deref())?);
            cmd_run(args)
        }
        Command::Compare(mut args) => {
            args.merge(&ConfigFile::load(args.problem.config.as_deref())?);
            cmd_compare(args)
        }
        Command::Reference(mut args) => {
            args.merge(&ConfigFile::load(args.problem.config.as_deref())?);
            cmd_reference(args)
        }
        Command::Export(mut args) => {
            args.problem.merge(&ConfigFile::load(args.problem.config.as_deref())?);
            cmd_export(args)
        }
        Command::Validate(args) => {
            let checks: &[Check] = if args.full { &Check::ALL } else { &Check::INVARIANTS };
            let opts = ValidationOptions {
                artifact_dir: args.artifacts,
            };
            let mut failed = 0;
            for &check in checks {
                let report = run_check(check, &opts);
                println!("{report}");
                failed += usize::from(!report.passed);
            }
            if failed > 0 {
                return Err(CliError::ChecksFailed(failed, checks.len()));
            }
            Ok(())
        }
    }
}

/// A problem together with the presets that go with it.
struct Loaded {
    spec: ProblemSpec,
    basis: EpochBasis,
    params: SolverParams,
    name: String,
}

fn load_problem(args: &ProblemArgs) -> Result<Loaded, CliError> {
    if let Some(path) = &args.problem {
        let text =
            std::fs::read_to_string(path).map_err(|e| usage(format!("cannot read problem {}: {e}", path.display())))?;
        let spec: ProblemSpec =
            serde_json::from_str(&text).map_err(|e| usage(format!("invalid problem {}: {e}", path.display())))?;
        return Ok(Loaded {
            spec,
            basis: EpochBasis::Primal,
            params: SolverParams::default(),
            name: path.display().to_string(),
        });
    }
    let exp = args
        .experiment
        .ok_or_else(|| usage("one of --experiment or --problem is required"))?;
    let spec = exp.build(args.instance_seed.unwrap_or(DEFAULT_INSTANCE_SEED))?;
    Ok(Loaded {
        basis: exp.epoch_basis(),
        params: exp.params(&spec),
        name: exp_title(exp),
        spec,
    })
}

fn exp_title(exp: Experiment) -> String {
    match exp {
        Experiment::Exp1 => "group-sparse classification".into(),
        Experiment::Exp2 => "image recovery".into(),
    }
}

fn apply_overrides(mut params: SolverParams, solver: &SolverArgs) -> Result<SolverParams, CliError> {
    for (name, v) in [("gamma", solver.gamma), ("mu", solver.mu), ("lambda", solver.lambda)] {
        if v.is_some_and(|v| !(v > 0.0 && v.is_finite())) {
            return Err(usage(format!("--{name} must be positive")));
        }
    }
    if let Some(g) = solver.gamma {
        params.dr_gamma = g;
        params.ps_gamma = g;
    }
    if let Some(mu) = solver.mu {
        params.ps_mu = mu;
    }
    if let Some(l) = solver.lambda {
        params.dr_lambda = l;
        params.ps_lambda = l;
    }
    Ok(params)
}

fn algorithms(choice: AlgorithmChoice) -> Vec<Algorithm> {
    match choice {
        AlgorithmChoice::Dr => vec![Algorithm::Dr],
        AlgorithmChoice::Ps => vec![Algorithm::Ps],
        AlgorithmChoice::Both => vec![Algorithm::Dr, Algorithm::Ps],
    }
}

fn reference_point(solver: &SolverArgs, spec: &ProblemSpec) -> Result<KtPoint, CliError> {
    match &solver.reference {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| usage(format!("cannot read reference {}: {e}", path.display())))?;
            let pt: KtPoint =
                serde_json::from_str(&text).map_err(|e| usage(format!("invalid reference {}: {e}", path.display())))?;
            pt.x.check_dims("reference", spec.primal_dims()).map_err(usage)?;
            Ok(pt)
        }
        None => Ok(compute_reference_with(spec, &ReferenceOptions::default())?),
    }
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            Box::new(BufWriter::new(File::create(p)?))
        }
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{stem}-{suffix}.{}", ext.to_string_lossy()),
        None => format!("{stem}-{suffix}"),
    };
    path.with_file_name(name)
}

fn write_plot(path: &Path, title: &str, series: &[Series]) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, render_svg(title, "epochs", "normalized error (dB)", series))?;
    Ok(())
}

fn build_plan(
    kind: Option<PlanKind>,
    algorithm: Algorithm,
    alpha: f64,
    spec: &ProblemSpec,
    seed: u64,
) -> Result<ActivationPlan, CliError> {
    let kind = kind.unwrap_or(match algorithm {
        _ if alpha == 1.0 => PlanKind::Full,
        Algorithm::Dr => PlanKind::Random,
        Algorithm::Ps => PlanKind::Cyclic,
    });
    let (m, p) = (spec.m(), spec.p());
    match kind {
        PlanKind::Full => ActivationPlan::full(m, p),
        PlanKind::Random => ActivationPlan::random_subset(m, p, alpha, alpha, seed),
        PlanKind::Cyclic => ActivationPlan::cyclic_from_fractions(m, p, alpha, alpha),
    }
    .map_err(usage)
}

fn trace_every(solver: &SolverArgs) -> Result<TraceEvery, CliError> {
    match solver.trace_every {
        None => Ok(TraceEvery::Iteration),
        Some(e) if e > 0.0 && e.is_finite() => Ok(TraceEvery::Epochs(e)),
        Some(e) => Err(usage(format!("--trace-every must be positive, got {e}"))),
    }
}

fn epoch_budget(solver: &SolverArgs) -> Result<f64, CliError> {
    match solver.epochs.unwrap_or(DEFAULT_EPOCHS) {
        e if e > 0.0 && e.is_finite() => Ok(e),
        e => Err(usage(format!("--epochs must be positive, got {e}"))),
    }
}

fn cmd_run(args: RunArgs) -> Result<(), CliError> {
    let loaded = load_problem(&args.problem)?;
    let spec = &loaded.spec;
    let params = apply_overrides(loaded.params, &args.solver)?;
    let algs = algorithms(args.algorithm.unwrap_or(AlgorithmChoice::Dr));
    if algs.len() > 1 && args.out.is_none() {
        return Err(usage("--algorithm both needs --out"));
    }
    let alpha = args.alpha.unwrap_or(1.0);
    let seed = args.seed.unwrap_or(0);
    let plans = algs
        .iter()
        .map(|&a| build_plan(args.plan, a, alpha, spec, seed))
        .collect::<Result<Vec<_>, _>>()?;
    let trace_every = trace_every(&args.solver)?;
    let budget = epoch_budget(&args.solver)?;
    if args.tolerance.is_some_and(|t| !(t >= 0.0)) {
        return Err(usage("--tolerance must be nonnegative"));
    }
    let reference = reference_point(&args.solver, spec)?;
    let opts = RunOptions {
        max_iterations: args.max_iterations.unwrap_or(usize::MAX),
        stop_tolerance: args.tolerance.unwrap_or(0.0),
        epoch_basis: loaded.basis,
        epoch_budget: Some(budget),
        trace_every,
        reference: Some(reference.x),
        wall_clock: args.wall_clock,
        ..RunOptions::default()
    };

    let mut series = Vec::new();
    for (&algorithm, plan) in algs.iter().zip(plans) {
        let trace = run_single(spec, algorithm, plan, &params, &opts, None)?;
        let out = match &args.out {
            Some(p) if algs.len() > 1 => Some(with_suffix(p, &algorithm.to_string())),
            other => other.clone(),
        };
        let mut w = open_output(out.as_deref())?;
        write_csv(&mut w, &trace)?;
        w.flush()?;
        series.push(series_of(&format!("{algorithm} alpha={alpha}"), &trace));
    }
    if let Some(path) = &args.solver.plot {
        write_plot(path, &loaded.name, &series)?;
    }
    Ok(())
}

fn series_of(label: &str, trace: &[TraceRecord]) -> Series {
    Series {
        label: label.to_string(),
        points: trace.iter().map(|r| (r.epochs, r.normalized_error_db)).collect(),
    }
}

fn cmd_compare(args: CompareArgs) -> Result<(), CliError> {
    let loaded = load_problem(&args.problem)?;
    let spec = &loaded.spec;
    let mut cfg = ComparisonConfig::new(
        algorithms(args.algorithm.unwrap_or(AlgorithmChoice::Both)),
        args.alphas.clone().unwrap_or_else(|| vec![0.1, 0.4, 0.7, 1.0]),
        (0..args.seeds.unwrap_or(20)).collect(),
        epoch_budget(&args.solver)?,
    );
    if cfg.seeds.is_empty() {
        return Err(usage("--seeds must be at least 1"));
    }
    for &alpha in &cfg.alphas {
        for &algorithm in &cfg.algorithms {
            build_plan(None, algorithm, alpha, spec, 0)?;
        }
    }
    cfg.params = apply_overrides(loaded.params, &args.solver)?;
    cfg.epoch_basis = loaded.basis;
    cfg.parallel = !args.serial;
    if let Some(e) = args.solver.trace_every {
        if !(e > 0.0 && e.is_finite()) {
            return Err(usage(format!("--trace-every must be positive, got {e}")));
        }
        cfg.trace_every = e;
    }
    let reference = reference_point(&args.solver, spec)?;
    let cells = run_comparison(spec, &reference.x, &cfg)?;

    if let Some(dir) = &args.trace_dir {
        std::fs::create_dir_all(dir)?;
        for c in &cells {
            for (seed, trace) in c.seeds.iter().zip(&c.traces) {
                let name = format!("{}_alpha{}_seed{seed}.csv", c.algorithm, c.alpha);
                let mut w = BufWriter::new(File::create(dir.join(name))?);
                write_csv(&mut w, trace)?;
                w.flush()?;
            }
        }
    }
    let mut w = open_output(args.out.as_deref())?;
    write_mean_csv(&mut w, &cells)?;
    w.flush()?;
    if let Some(path) = &args.solver.plot {
        let series: Vec<Series> = cells
            .iter()
            .map(|c| Series {
                label: c.label(),
                points: c.mean.iter().map(|q| (q.epochs, q.error_db)).collect(),
            })
            .collect();
        write_plot(path, &loaded.name, &series)?;
    }
    Ok(())
}

fn cmd_reference(args: ReferenceArgs) -> Result<(), CliError> {
    let loaded = load_problem(&args.problem)?;
    let mut opts = ReferenceOptions::default();
    if let Some(t) = args.tolerance {
        if !(t > 0.0) {
            return Err(usage("--tolerance must be positive"));
        }
        opts.tolerance = t;
    }
    if let Some(n) = args.max_iterations {
        opts.max_iterations = n;
    }
    let pt = compute_reference_with(&loaded.spec, &opts)?;
    let mut w = open_output(args.out.as_deref())?;
    serde_json::to_writer(&mut w, &pt).map_err(blocksplit::Error::from)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn cmd_export(args: ExportArgs) -> Result<(), CliError> {
    let loaded = load_problem(&args.problem)?;
    let mut w = open_output(args.out.as_deref())?;
    serde_json::to_writer(&mut w, &loaded.spec).map_err(blocksplit::Error::from)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

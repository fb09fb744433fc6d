use blocksplit::experiments::{compute_reference, Experiment};
use blocksplit::validation::random_desk_instance;
use blocksplit::{
    run, ActivationPlan, BlockSolver, BlockVector, DouglasRachford, DrConfig, KtPoint, NullSink, ProblemSpec,
    ProjectiveSplitting, PsConfig, RunOptions, TraceRecord,
};

fn solve_dr(spec: &ProblemSpec, plan: ActivationPlan) -> (KtPoint, bool) {
    let dr = DouglasRachford::new(spec, DrConfig::new(plan)).unwrap();
    let mut st = dr.init();
    let opts = RunOptions {
        max_iterations: 400_000,
        stop_tolerance: 1e-11,
        ..RunOptions::default()
    };
    let summary = run(&dr, &mut st, &opts, &mut NullSink).unwrap();
    (dr.kt_point(&st), summary.converged)
}

fn solve_ps(spec: &ProblemSpec, plan: ActivationPlan) -> (KtPoint, bool) {
    let ps = ProjectiveSplitting::new(spec, PsConfig::new(spec, plan)).unwrap();
    let mut st = ps.init();
    let opts = RunOptions {
        max_iterations: 400_000,
        stop_tolerance: 1e-11,
        ..RunOptions::default()
    };
    let summary = run(&ps, &mut st, &opts, &mut NullSink).unwrap();
    (ps.kt_point(&st), summary.converged)
}

#[test]
fn full_activation_solvers_agree_in_objective() {
    for seed in 0..8 {
        let spec = random_desk_instance(500 + seed).unwrap();
        let (m, p) = (spec.m(), spec.p());
        let (a, ca) = solve_dr(&spec, ActivationPlan::full(m, p).unwrap());
        let (b, cb) = solve_ps(&spec, ActivationPlan::full(m, p).unwrap());
        assert!(ca && cb, "seed {seed}");
        assert!(a.x.distance(&b.x) < 1e-6, "seed {seed}");
        let (fa, fb) = (spec.objective(&a.x).unwrap(), spec.objective(&b.x).unwrap());
        if fa.is_finite() && fb.is_finite() {
            assert!((fa - fb).abs() <= 1e-6 * (1.0 + fa.abs()), "seed {seed}: {fa} vs {fb}");
        }
    }
}

#[test]
fn block_activation_reaches_the_full_activation_limit() {
    for seed in 0..6 {
        let spec = random_desk_instance(900 + seed).unwrap();
        let (m, p) = (spec.m(), spec.p());
        let (full, _) = solve_ps(&spec, ActivationPlan::full(m, p).unwrap());
        let cyclic = ActivationPlan::cyclic(m, p, m.min(4), p.min(4)).unwrap();
        let (ps, conv) = solve_ps(&spec, cyclic);
        assert!(conv && ps.x.distance(&full.x) < 1e-4, "seed {seed}");
        let random = ActivationPlan::random_subset(m, p, 0.5, 0.5, seed).unwrap();
        let (dr, conv) = solve_dr(&spec, random);
        assert!(conv && dr.x.distance(&full.x) < 1e-4, "seed {seed}");
    }
}

#[test]
fn kt_residual_vanishes_at_the_reference() {
    let spec = random_desk_instance(3).unwrap();
    let r = compute_reference(&spec).unwrap();
    assert!(spec.kt_residual(&r, 1.0, 1.0).unwrap() < 1e-8);
}

#[test]
fn traces_are_ordered_and_budgeted() {
    let spec = Experiment::Exp2.build(2).unwrap();
    let plan = ActivationPlan::cyclic_from_fractions(spec.m(), spec.p(), 0.4, 0.4).unwrap();
    let ps = ProjectiveSplitting::new(&spec, PsConfig::new(&spec, plan)).unwrap();
    let mut st = ps.init();
    let opts = RunOptions {
        max_iterations: usize::MAX,
        stop_tolerance: 0.0,
        epoch_basis: Experiment::Exp2.epoch_basis(),
        epoch_budget: Some(4.0),
        reference: Some(BlockVector::from_blocks(vec![vec![1.0; 576]])),
        ..RunOptions::default()
    };
    let mut trace: Vec<TraceRecord> = Vec::new();
    let summary = run(&ps, &mut st, &opts, &mut trace).unwrap();
    assert!(trace
        .windows(2)
        .all(|w| w[0].iteration < w[1].iteration && w[0].epochs <= w[1].epochs));
    assert!(summary.epochs >= 4.0 && trace.last().unwrap().epochs < 5.0);
    assert!(trace.iter().skip(1).all(|r| r.activated_dual > 0));
}

#[test]
fn problem_json_round_trip_preserves_solutions() {
    let spec = random_desk_instance(21).unwrap();
    let text = serde_json::to_string(&spec).unwrap();
    let back: ProblemSpec = serde_json::from_str(&text).unwrap();
    assert_eq!(spec, back);
    let full = |s: &ProblemSpec| solve_dr(s, ActivationPlan::full(s.m(), s.p()).unwrap()).0;
    assert_eq!(full(&spec), full(&back));
}

#[test]
fn malformed_problem_json_is_rejected() {
    let spec = random_desk_instance(4).unwrap();
    let mut v: serde_json::Value = serde_json::to_value(&spec).unwrap();
    v["f"].as_array_mut().unwrap().pop();
    assert!(serde_json::from_value::<ProblemSpec>(v).is_err());
}

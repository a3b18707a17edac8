//! Acceptance checks. Runs without the libtest harness so that every
//! criterion prints exactly one PASS/FAIL line; the process fails if any
//! criterion fails. Pass a substring to run a subset, e.g.
//! `cargo test --test acceptance -- 07`.

mod common;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::Rng;

use pcbsp::belief_tree::{BeliefTree, LaceSource, SyntheticLaces};
use pcbsp::constraint_eval::{adaptive_feasibility, full_feasibility, ConstraintSpec, Form, Verdict};
use pcbsp::experiment::{plan, prepare, run_experiment, Prepared};
use pcbsp::gaussian_belief::{dopt_gain, dopt_gain_bounds, SubsetMarginal};
use pcbsp::planners::{alg1_adaptive_constrained, sample_var, Algorithm, PlanResult};
use pcbsp::scenario::{load_scenario, Scenario};

use common::*;

/// Number of random scenarios shared by criteria 3 and 4.
const EQUIVALENCE_SCENARIOS: u64 = 20;
/// Number of random scenarios whose adaptive traces criterion 2 inspects.
const MONOTONICITY_SCENARIOS: u64 = 100;
const ALG3_RELATIVE_PRECISION: f64 = 1e-6;
const BELIEF_MEAN_TOL: f64 = 1e-9;
const BELIEF_COV_REL_TOL: f64 = 1e-9;
const DET_ROOT_REL_TOL: f64 = 1e-9;
const MIN_ALG3_FRACTION: f64 = 0.10;
const MAX_LOOSE_RUNTIME_RATIO: f64 = 1.10;
const TIMING_REPEATS: usize = 5;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

fn scenario_file(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name)
}

fn random_laces<R: Rng>(rng: &mut R) -> Vec<SubsetMarginal> {
    let horizon = rng.random_range(1..=5);
    let landmarks = rng.random_range(0..=6);
    let blocks = slam_blocks(landmarks);
    let dim: usize = blocks.iter().sum();
    // Alternate between diffuse and concentrated beliefs so that gains of
    // both signs appear.
    (0..=horizon)
        .map(|_| {
            let scale = 10f64.powf(rng.random_range(-4.0..-1.0));
            SubsetMarginal::from_cov(random_spd(rng, dim, scale), blocks.clone()).unwrap()
        })
        .collect()
}

fn exact_indicator(values: &[f64], form: Form, delta: f64) -> bool {
    match form {
        Form::Cumulative => values.iter().sum::<f64>() > delta,
        Form::Multiplicative => values.iter().all(|v| *v >= delta),
    }
}

fn bound_indicators(steps: &[(f64, f64)], form: Form, delta: f64) -> (bool, bool) {
    let lower: Vec<f64> = steps.iter().map(|s| s.0).collect();
    let upper: Vec<f64> = steps.iter().map(|s| s.1).collect();
    (exact_indicator(&lower, form, delta), exact_indicator(&upper, form, delta))
}

fn criterion_1() -> Outcome {
    let mut rng = rng(1);
    let mut checked = 0usize;
    let mut violations = 0usize;
    let mut laces = 0usize;
    while laces < 1200 {
        let marginals = random_laces(&mut rng);
        laces += 1;
        let exact: Vec<f64> = marginals
            .windows(2)
            .map(|w| dopt_gain(&w[0], &w[1]).unwrap())
            .collect();
        let top = marginals[0].top_level();
        for form in [Form::Cumulative, Form::Multiplicative] {
            let pivot = match form {
                Form::Cumulative => exact.iter().sum::<f64>(),
                Form::Multiplicative => exact.iter().copied().fold(f64::INFINITY, f64::min),
            };
            let spread = exact.iter().map(|v| v.abs()).fold(1e-6, f64::max);
            let deltas = [
                pivot,
                pivot - 1e-12,
                pivot + 1e-12,
                pivot + rng.random_range(-1.0..1.0) * spread,
                0.0,
            ];
            for level in 0..=top {
                let steps: Vec<(f64, f64)> = marginals
                    .windows(2)
                    .map(|w| dopt_gain_bounds(&w[0], &w[1], level).unwrap())
                    .collect();
                for &delta in &deltas {
                    let c = exact_indicator(&exact, form, delta);
                    let (lo, up) = bound_indicators(&steps, form, delta);
                    checked += 1;
                    if (lo && !c) || (c && !up) {
                        violations += 1;
                    }
                }
            }
        }
    }
    Outcome::new(
        violations == 0,
        format!("{laces} laces, {checked} (form, level, delta) cases, {violations} violations"),
    )
}

struct ScenarioRuns {
    scenario: Scenario,
    prepared: Prepared,
    alg1: PlanResult,
    alg2: PlanResult,
    alg3: PlanResult,
    alg4: PlanResult,
    trees: Vec<BeliefTree>,
}

fn run_all(scenario: Scenario) -> ScenarioRuns {
    let prepared = prepare(&scenario).unwrap();
    let belief = &prepared.session.belief;
    let run = |a| plan(&scenario, belief, &prepared.paths, a).unwrap();
    let (alg1, trees) = run(Algorithm::Alg1);
    let (alg2, _) = run(Algorithm::Alg2);
    let (alg3, _) = run(Algorithm::Alg3);
    let (alg4, _) = run(Algorithm::Alg4);
    ScenarioRuns {
        scenario,
        prepared,
        alg1,
        alg2,
        alg3,
        alg4,
        trees,
    }
}

fn trace_is_monotone(result: &PlanResult) -> (usize, usize) {
    let mut traces = 0;
    let mut bad = 0;
    for a in &result.per_action {
        for t in &a.traces {
            traces += 1;
            if t.rows
                .windows(2)
                .any(|w| w[1].lb < w[0].lb || w[1].ub > w[0].ub)
            {
                bad += 1;
            }
        }
    }
    (traces, bad)
}

fn det_bounds_never_widen(m: &SubsetMarginal) -> bool {
    let mut prev: Option<(f64, f64)> = None;
    let exact = m.det_root();
    for level in 0..=m.top_level() {
        let b = m.det_root_bounds(level).unwrap();
        if !(b.lower <= exact && exact <= b.upper) {
            return false;
        }
        if let Some((lo, up)) = prev {
            if b.lower < lo || b.upper > up {
                return false;
            }
        }
        prev = Some((b.lower, b.upper));
    }
    true
}

fn criterion_2(shared: &[ScenarioRuns]) -> Outcome {
    let mut traces = 0;
    let mut bad_traces = 0;
    let mut marginals = 0;
    let mut bad_marginals = 0;
    for i in 0..MONOTONICITY_SCENARIOS {
        let mut s = random_scenario(1000 + i);
        s.planner.m = 50;
        let prepared = prepare(&s).unwrap();
        let (r, trees) = plan(&s, &prepared.session.belief, &prepared.paths, Algorithm::Alg1).unwrap();
        let (t, b) = trace_is_monotone(&r);
        traces += t;
        bad_traces += b;
        for tree in &trees {
            for lace in 0..tree.laces().len().min(4) {
                for m in tree.lace_marginals(lace) {
                    marginals += 1;
                    if !det_bounds_never_widen(m) {
                        bad_marginals += 1;
                    }
                }
            }
        }
    }
    for runs in shared {
        for r in [&runs.alg1, &runs.alg3] {
            let (t, b) = trace_is_monotone(r);
            traces += t;
            bad_traces += b;
        }
    }
    let mut rng = rng(2);
    for _ in 0..500 {
        let n = rng.random_range(1..=10);
        let scale = 10f64.powf(rng.random_range(-4.0..0.0));
        let cov = random_spd(&mut rng, 3 + 2 * n, scale);
        marginals += 1;
        if !det_bounds_never_widen(&SubsetMarginal::from_cov(cov, slam_blocks(n)).unwrap()) {
            bad_marginals += 1;
        }
    }
    Outcome::new(
        bad_traces == 0 && bad_marginals == 0,
        format!(
            "{} scenarios, {traces} traces ({bad_traces} violations), {marginals} marginals ({bad_marginals} violations)",
            MONOTONICITY_SCENARIOS + shared.len() as u64
        ),
    )
}

fn criterion_3(shared: &[ScenarioRuns]) -> Outcome {
    let mut failures = Vec::new();
    let (mut e1, mut e2) = (0, 0);
    for runs in shared {
        let (a1, a2) = (&runs.alg1, &runs.alg2);
        e1 += a1.n_expanded;
        e2 += a2.n_expanded;
        let more = a1
            .per_action
            .iter()
            .zip(&a2.per_action)
            .any(|(x, y)| x.laces_expanded > y.laces_expanded);
        if a1.chosen_path_id != a2.chosen_path_id || a1.feasible_set() != a2.feasible_set() || more {
            failures.push(runs.scenario.name.clone());
        }
    }
    let landmarks: Vec<usize> = shared.iter().map(|r| r.prepared.landmarks.len()).collect();
    let paths: Vec<usize> = shared.iter().map(|r| r.prepared.paths.len()).collect();
    Outcome::new(
        failures.is_empty() && !shared.is_empty(),
        format!(
            "{} scenarios (landmarks {}..={}, paths {}..={}), laces expanded alg1 {e1} vs alg2 {e2}, mismatches {:?}",
            shared.len(),
            landmarks.iter().min().unwrap_or(&0),
            landmarks.iter().max().unwrap_or(&0),
            paths.iter().min().unwrap_or(&0),
            paths.iter().max().unwrap_or(&0),
            failures
        ),
    )
}

fn criterion_4(shared: &[ScenarioRuns]) -> Outcome {
    let mut failures = Vec::new();
    let mut ties = 0;
    let mut none_below_range = 0;
    let mut worst: f64 = 0.0;
    for runs in shared {
        let (a3, a4) = (&runs.alg3, &runs.alg4);
        let delta_max = runs.trees[0].root_marginal().det_root();
        let precision = ALG3_RELATIVE_PRECISION * delta_max;
        let vars: Vec<(usize, f64)> = a4
            .per_action
            .iter()
            .map(|a| (a.path_id, a.var.unwrap()))
            .collect();
        let best = vars.iter().map(|v| v.1).fold(f64::NEG_INFINITY, f64::max);
        let name = &runs.scenario.name;
        if best <= 0.0 {
            // Nothing is feasible anywhere in the threshold range.
            none_below_range += 1;
            if a3.chosen_path_id.is_some() {
                failures.push(format!("{name}: alg3 chose a path with VaR {best:.3e} <= 0"));
            }
            continue;
        }
        if best <= precision {
            ties += 1;
            continue;
        }
        let tied: Vec<usize> = vars
            .iter()
            .filter(|v| best - v.1 <= precision)
            .map(|v| v.0)
            .collect();
        if tied.len() > 1 {
            ties += 1;
        }
        let ok_choice = match a3.chosen_path_id {
            Some(id) => tied.contains(&id) && (tied.len() > 1 || a4.chosen_path_id == Some(id)),
            None => false,
        };
        let gap = a3.delta_star.map_or(f64::INFINITY, |d| (d - best).abs());
        worst = worst.max(gap / precision);
        if !ok_choice || gap > precision {
            failures.push(format!(
                "{name}: alg3 {:?} delta* {:?}, alg4 {:?} VaR {best:.9}",
                a3.chosen_path_id, a3.delta_star, a4.chosen_path_id
            ));
        }
    }
    Outcome::new(
        failures.is_empty(),
        format!(
            "{} scenarios, {ties} sub-precision ties, {none_below_range} with no positive VaR, worst |delta* - VaR| = {worst:.3} x precision; {failures:?}",
            shared.len()
        ),
    )
}

fn criterion_5() -> Outcome {
    let eps: [(u64, u64); 5] = [(0, 1), (1, 10), (1, 4), (1, 2), (9, 10)];
    let mut rng = rng(5);
    let mut cases = 0;
    let mut mismatches = 0;
    for m in 1..=12usize {
        for &(p, q) in &eps {
            for trial in 0..300 {
                // Small alphabets force ties, wide ones give distinct values.
                let alphabet = if trial % 2 == 0 { 3 } else { 1000 };
                let samples: Vec<f64> = (0..m)
                    .map(|_| rng.random_range(0..alphabet) as f64 * 0.25 - 1.0)
                    .collect();
                let got = sample_var(&samples, p as f64 / q as f64).unwrap();
                cases += 1;
                if got != var_by_enumeration(&samples, p, q) {
                    mismatches += 1;
                }
            }
        }
    }
    Outcome::new(mismatches == 0, format!("{cases} samples, {mismatches} mismatches"))
}

fn criterion_6() -> Outcome {
    const M: usize = 300;
    const K: usize = 7;
    let violating: Vec<usize> = (0..K).map(|i| 13 + 41 * i).collect();
    let values: Vec<Vec<f64>> = (0..M)
        .map(|l| {
            let v = if violating.contains(&l) { -1.0 } else { 1.0 };
            vec![v * 0.4, v * 0.6]
        })
        .collect();
    let source = || SyntheticLaces::new(14, values.clone(), 0.6, 3);
    let mut grid: Vec<(f64, bool)> = (0..3000).map(|j| (j as f64 / 3000.0, j >= 70)).collect();
    grid.push((K as f64 / M as f64, true));
    grid.push((0.023, false));
    let mut wrong = Vec::new();
    let mut early = 0;
    for &(epsilon, feasible) in &grid {
        let spec = ConstraintSpec::new(Form::Cumulative, 0.0, epsilon).unwrap();
        let expected = if feasible {
            Verdict::Feasible
        } else {
            Verdict::Infeasible
        };
        let mut s = source();
        let adaptive = adaptive_feasibility(&mut s, &spec).unwrap();
        if s.expanded() < M {
            early += 1;
        }
        let full = full_feasibility(&mut source(), &spec).unwrap();
        if adaptive.verdict != expected || full != expected {
            wrong.push(epsilon);
        }
    }
    let all_discarded = [0.0, 0.01, 0.023].iter().all(|&e| {
        let spec = ConstraintSpec::new(Form::Cumulative, 0.0, e).unwrap();
        let mut one = vec![source()];
        alg1_adaptive_constrained(&mut one, &spec).unwrap().chosen_path_id.is_none()
    });
    Outcome::new(
        wrong.is_empty() && all_discarded,
        format!(
            "m={M} k={K}: {} epsilon values, flip at {K}/{M}, {early} decided before full expansion, alg1 discards for eps in [0, 0.023]: {all_discarded}, wrong at {:?}",
            grid.len(),
            wrong.iter().take(5).collect::<Vec<_>>()
        ),
    )
}

fn criterion_7() -> Outcome {
    let mut worst_mean: f64 = 0.0;
    let mut worst_cov: f64 = 0.0;
    let mut steps_ok = true;
    for seed in 0..5 {
        let (belief, factors) = linear_slam_run(seed, 20);
        steps_ok &= belief.latest_pose_time() == 20;
        let layout: Vec<_> = belief
            .index()
            .blocks()
            .iter()
            .map(|b| (b.key, b.offset, b.width))
            .collect();
        let (x, cov) = batch_least_squares(&factors, &layout, belief.dim());
        let filtered_cov = belief.covariance().unwrap();
        worst_mean = worst_mean.max((belief.mean() - &x).amax());
        worst_cov = worst_cov.max((&filtered_cov - &cov).norm() / cov.norm());
    }
    let mut rng = rng(7);
    let mut worst_det: f64 = 0.0;
    for i in 0..100 {
        let n = 1 + i % 8;
        let scale = 10f64.powf(rng.random_range(-4.0..1.0));
        let cov = random_spd(&mut rng, 3 + 2 * n, scale);
        let oracle = eig_det_root(&cov);
        let m = SubsetMarginal::from_cov(cov, slam_blocks(n)).unwrap();
        worst_det = worst_det.max((m.det_root() - oracle).abs() / oracle);
    }
    Outcome::new(
        steps_ok && worst_mean <= BELIEF_MEAN_TOL && worst_cov <= BELIEF_COV_REL_TOL && worst_det <= DET_ROOT_REL_TOL,
        format!(
            "mean err {worst_mean:.2e} (tol {BELIEF_MEAN_TOL:.0e}), cov rel err {worst_cov:.2e} (tol {BELIEF_COV_REL_TOL:.0e}), det_root rel err {worst_det:.2e} (tol {DET_ROOT_REL_TOL:.0e})"
        ),
    )
}

fn criterion_8() -> Outcome {
    let mut s = load_scenario(scenario_file("desk_scale.toml")).unwrap();
    let prepared = prepare(&s).unwrap();
    let belief = &prepared.session.belief;
    let paths = &prepared.paths;
    let mut results = BTreeMap::new();
    for a in [Algorithm::Alg1, Algorithm::Alg2, Algorithm::Alg3, Algorithm::Alg4] {
        s.planner.algorithm = a;
        results.insert(a.name(), plan(&s, belief, paths, a).unwrap().0);
    }
    let (a1, a2, a3, a4) = (&results["alg1"], &results["alg2"], &results["alg3"], &results["alg4"]);
    let discarded = a1.per_action.iter().filter(|a| a.verdict == Verdict::Infeasible).count();
    let binding = a1.feasible_set().len() < paths.len();
    let speed_12 = a2.runtime_s / a1.runtime_s - 1.0;
    let speed_34 = a4.runtime_s / a3.runtime_s - 1.0;
    let pass = paths.len() >= 10
        && s.map.visibility_radius == 0.8
        && s.planner.m == 300
        && a3.laces_fraction() >= MIN_ALG3_FRACTION
        && binding
        && discarded >= 1
        && a1.laces_fraction() > 0.0;
    Outcome::new(
        pass,
        format!(
            "{} paths; alg3 fraction {:.3} (min {MIN_ALG3_FRACTION}), speedup vs alg4 {:+.1}%; alg1 discards {discarded}, fraction {:.3}, speedup vs alg2 {:+.1}% (reference figure 30%)",
            paths.len(),
            a3.laces_fraction(),
            100.0 * speed_34,
            a1.laces_fraction(),
            100.0 * speed_12
        ),
    )
}

fn criterion_9() -> Outcome {
    let s = load_scenario(scenario_file("loose_constraint.toml")).unwrap();
    let prepared = prepare(&s).unwrap();
    let belief = &prepared.session.belief;
    let paths = &prepared.paths;
    let time = |a| plan(&s, belief, paths, a).unwrap().0.runtime_s;
    time(Algorithm::Alg1);
    time(Algorithm::Alg2);
    let (mut t1, mut t2) = (0.0, 0.0);
    for _ in 0..TIMING_REPEATS {
        t1 += time(Algorithm::Alg1);
        t2 += time(Algorithm::Alg2);
    }
    t1 /= TIMING_REPEATS as f64;
    t2 /= TIMING_REPEATS as f64;
    Outcome::new(
        t1 <= MAX_LOOSE_RUNTIME_RATIO * t2,
        format!(
            "epsilon {}: alg1 mean {t1:.3} s, alg2 mean {t2:.3} s over {TIMING_REPEATS} repeats, ratio {:.3} (max {MAX_LOOSE_RUNTIME_RATIO})",
            s.planner.epsilon,
            t1 / t2
        ),
    )
}

/// CSV content with every column whose header ends in `_s` removed.
fn csv_without_wall_time(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    let headers = r.headers().unwrap().clone();
    let keep: Vec<usize> = (0..headers.len())
        .filter(|&i| !headers[i].ends_with("_s"))
        .collect();
    let mut rows = vec![keep.iter().map(|&i| headers[i].to_string()).collect()];
    for rec in r.records() {
        let rec = rec.unwrap();
        rows.push(keep.iter().map(|&i| rec[i].to_string()).collect());
    }
    rows
}

fn criterion_10() -> Outcome {
    let mut desk = load_scenario(scenario_file("desk_scale.toml")).unwrap();
    desk.planner.algorithm = Algorithm::Alg3;
    desk.planner.m = 50;
    let multiplicative = load_scenario(scenario_file("multiplicative.toml")).unwrap();
    let mut differing = Vec::new();
    let mut files = 0;
    for s in [desk, multiplicative] {
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        let ra = run_experiment(&s, a.path()).unwrap();
        let rb = run_experiment(&s, b.path()).unwrap();
        let mut names: Vec<_> = std::fs::read_dir(&ra.run_dir)
            .unwrap()
            .map(|e| e.unwrap().file_name().into_string().unwrap())
            .collect();
        names.sort();
        for name in names {
            if name == "timings.csv" {
                continue;
            }
            files += 1;
            let (pa, pb) = (ra.run_dir.join(&name), rb.run_dir.join(&name));
            let same = if name.ends_with(".csv") {
                csv_without_wall_time(&pa) == csv_without_wall_time(&pb)
            } else {
                std::fs::read(&pa).unwrap() == std::fs::read(&pb).unwrap()
            };
            if !same {
                differing.push(format!("{}/{name}", s.name));
            }
        }
    }
    Outcome::new(
        differing.is_empty() && files > 0,
        format!("{files} files compared across 2 scenarios, differing: {differing:?}"),
    )
}

fn main() {
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let selected = |n: usize| filters.is_empty() || filters.iter().any(|f| format!("{n:02}").contains(f.as_str()));

    let start = Instant::now();
    let shared: Vec<ScenarioRuns> = if [2, 3, 4].iter().any(|&n| selected(n)) {
        (0..EQUIVALENCE_SCENARIOS).map(|i| run_all(random_scenario(i))).collect()
    } else {
        Vec::new()
    };
    let shared_time = start.elapsed().as_secs_f64();

    let names = [
        "bound sandwich",
        "bound monotonicity",
        "alg1 equals alg2",
        "alg3 equals alg4",
        "sample VaR oracle",
        "feasibility flip at k/m",
        "belief equals batch least squares",
        "lace savings at desk scale",
        "no overhead under a loose constraint",
        "determinism",
    ];
    let mut failed = 0;
    let mut ran = 0;
    for (i, name) in names.iter().enumerate() {
        let n = i + 1;
        if !selected(n) {
            continue;
        }
        let t = Instant::now();
        let out = match n {
            1 => criterion_1(),
            2 => criterion_2(&shared),
            3 => criterion_3(&shared),
            4 => criterion_4(&shared),
            5 => criterion_5(),
            6 => criterion_6(),
            7 => criterion_7(),
            8 => criterion_8(),
            9 => criterion_9(),
            _ => criterion_10(),
        };
        ran += 1;
        let verdict = if out.pass { "PASS" } else { "FAIL" };
        if !out.pass {
            failed += 1;
        }
        println!(
            "criterion {n:>2} {verdict} {name}: {} [{:.1} s]",
            out.detail,
            t.elapsed().as_secs_f64()
        );
    }
    println!(
        "acceptance: {} passed, {failed} failed ({:.1} s shared scenario runs, {:.1} s total)",
        ran - failed,
        shared_time,
        start.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}


//! End-to-end runs: mapping session, roadmap, planning, execution, and the
//! run directory.
//!
//! A run directory holds:
//!
//! | file | content |
//! |------|---------|
//! | `scenario.toml` | resolved scenario, defaults filled in |
//! | `results.json` | plan outcome and diagnostics, no wall-clock values |
//! | `metrics.csv` | one summary row, including wall-clock columns (`*_s`) |
//! | `timings.csv` | per-repeat and per-candidate wall-clock times |
//! | `laces.csv` | one row per expanded lace |
//! | `bounds.csv` | adaptive-evaluation trace rows |
//! | `beliefs.csv` | true and estimated pose per time step |
//! | `landmarks.csv` | true and estimated landmarks after mapping |
//! | `paths.csv` | candidate path waypoints |
//! | `prm_vertices.csv`, `prm_edges.csv` | the roadmap |
//!
//! Column-by-column descriptions are in `docs/run_format.md`.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::info;
use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use crate::belief_tree::{BeliefTree, LaceSource, TreeConfig};
use crate::constraint_eval::{constraining_return, inner_indicator, Verdict};
use crate::error::{PlanError, Result};
use crate::gaussian_belief::GaussianBelief;
use crate::path_gen::{build_prm, diverse_paths, CandidatePath, RoadMap, GOAL, START};
use crate::planners::{
    alg1_adaptive_constrained, alg2_baseline_constrained, alg3_var_bisection, alg4_var_bruteforce, build_trees,
    laces_fraction, speedup, Algorithm, PlanResult,
};
use crate::scenario::Scenario;
use crate::sim_world::{
    ml_observation, sample_motion, sample_observation, stream_rng, visible_config, Landmark, Pose,
};

pub const SCHEMA_VERSION: u32 = 1;

/// Stream ids of the simulated world.
const MAPPING_STREAM: u64 = 0xfff0;
const EXECUTION_STREAM: u64 = 0xfff1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeliefRow {
    pub phase: Phase,
    pub t: usize,
    pub true_x: f64,
    pub true_y: f64,
    pub true_theta: f64,
    pub est_x: f64,
    pub est_y: f64,
    pub est_theta: f64,
    pub cov_xx: f64,
    pub cov_xy: f64,
    pub cov_yy: f64,
    pub cov_tt: f64,
    pub det_root: f64,
    pub n_visible: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Mapping,
    Execution,
}

/// Simulated robot together with its belief.
#[derive(Debug, Clone)]
pub struct Session {
    pub truth: Pose,
    pub belief: GaussianBelief,
    pub rows: Vec<BeliefRow>,
}

impl Session {
    fn record(&mut self, phase: Phase, n_visible: usize) -> Result<()> {
        let t = self.belief.latest_pose_time();
        let est = self.belief.latest_pose_mean();
        let cov = self.belief.covariance()?;
        let (_, b) = self.belief.index().latest_pose().unwrap();
        let o = b.offset;
        self.rows.push(BeliefRow {
            phase,
            t,
            true_x: self.truth.x,
            true_y: self.truth.y,
            true_theta: self.truth.theta,
            est_x: est[0],
            est_y: est[1],
            est_theta: est[2],
            cov_xx: cov[(o, o)],
            cov_xy: cov[(o, o + 1)],
            cov_yy: cov[(o + 1, o + 1)],
            cov_tt: cov[(o + 2, o + 2)],
            det_root: self.belief.subset_marginal()?.det_root(),
            n_visible,
        });
        Ok(())
    }

    /// Moves the true robot, then filters the belief with the resulting
    /// measurement. Unseen landmarks are registered on first sighting.
    fn step<R: rand::Rng>(
        &mut self,
        scenario: &Scenario,
        landmarks: &[Landmark],
        action: &Vector2<f64>,
        phase: Phase,
        rng: &mut R,
    ) -> Result<()> {
        let noise = scenario.noise_spec();
        self.truth = sample_motion(&self.truth, action, &noise, rng);
        self.belief = self.belief.predict(action, &noise)?;
        self.observe(scenario, landmarks, phase, rng)
    }

    fn observe<R: rand::Rng>(&mut self, scenario: &Scenario, landmarks: &[Landmark], phase: Phase, rng: &mut R) -> Result<()> {
        let noise = scenario.noise_spec();
        let config = visible_config(&self.truth, landmarks, scenario.map.visibility_radius);
        let obs = sample_observation(&self.truth, landmarks, &config, &noise, scenario.noise.sensor, rng)?;
        self.belief = self.belief.update_mapping(&obs, &noise, scenario.noise.sensor)?;
        self.record(phase, obs.len())
    }
}

/// Everything fixed before planning starts.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub landmarks: Vec<Landmark>,
    pub session: Session,
    pub roadmap: RoadMap,
    pub paths: Vec<CandidatePath>,
}

/// Runs the mapping session and builds the candidate set from the
/// resulting belief.
pub fn prepare(scenario: &Scenario) -> Result<Prepared> {
    let landmarks = scenario.landmarks();
    let belief = GaussianBelief::prior(&scenario.prior_mean(), &scenario.prior_cov())?;
    let mut session = Session {
        truth: Pose::from_vector(&scenario.prior_mean()),
        belief,
        rows: Vec::new(),
    };
    let mut rng = stream_rng(scenario.seed, MAPPING_STREAM, 0);
    session.observe(scenario, &landmarks, Phase::Mapping, &mut rng)?;
    for a in scenario.preliminary_actions() {
        session.step(scenario, &landmarks, &a, Phase::Mapping, &mut rng)?;
    }
    let start = session.belief.latest_pose_mean();
    let start = Vector2::new(start[0], start[1]);
    let roadmap = build_prm(
        &scenario.bounds(),
        &scenario.prm_params(),
        scenario.seed,
        start,
        Vector2::from(scenario.prm.goal),
    )?;
    let paths = diverse_paths(&roadmap, START, GOAL, scenario.prm.path_count)?;
    info!(
        "mapping done: {} landmarks registered, {} candidate paths",
        session.belief.index().landmark_ids().len(),
        paths.len()
    );
    Ok(Prepared {
        landmarks,
        session,
        roadmap,
        paths,
    })
}

pub fn tree_config(scenario: &Scenario) -> TreeConfig {
    TreeConfig {
        m: scenario.planner.m,
        n0: scenario.planner.n0,
        seed: scenario.seed,
        reward: scenario.planner.reward,
        radius: scenario.map.visibility_radius,
        noise: scenario.noise_spec(),
        sensor: scenario.noise.sensor,
    }
}

/// Runs `algorithm` once on fresh trees and returns the trees with it.
pub fn plan(
    scenario: &Scenario,
    belief: &GaussianBelief,
    paths: &[CandidatePath],
    algorithm: Algorithm,
) -> Result<(PlanResult, Vec<BeliefTree>)> {
    let start = Instant::now();
    let mut trees = build_trees(belief, paths, tree_config(scenario))?;
    let p = &scenario.planner;
    let mut result = match algorithm {
        Algorithm::Alg1 => alg1_adaptive_constrained(&mut trees, &scenario.constraint()?)?,
        Algorithm::Alg2 => alg2_baseline_constrained(&mut trees, &scenario.constraint()?)?,
        Algorithm::Alg3 => {
            let range = trees
                .first()
                .map(|t| t.root_marginal().det_root())
                .unwrap_or(0.0);
            alg3_var_bisection(&mut trees, p.form, p.epsilon, p.precision * range, (0.0, range))?
        }
        Algorithm::Alg4 => alg4_var_bruteforce(&mut trees, p.form, p.epsilon)?,
    };
    result.runtime_s = start.elapsed().as_secs_f64();
    Ok((result, trees))
}

/// Per-candidate comparison numbers that the planners do not use.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathDiagnostics {
    pub path_id: usize,
    pub horizon: usize,
    pub length: f64,
    /// Constraining return along the most likely observations.
    pub ml_return: f64,
    pub ml_satisfied: bool,
    /// Mean constraining return over all laces, when all were evaluated.
    pub expected_return: Option<f64>,
    pub expected_satisfied: Option<bool>,
}

/// Constraining return along the most-likely-observation rollout.
pub fn ml_rollout_steps(scenario: &Scenario, belief: &GaussianBelief, path: &CandidatePath) -> Result<Vec<f64>> {
    let noise = scenario.noise_spec();
    let mut b = belief.clone();
    let mut prior = b.subset_marginal()?;
    let mut steps = Vec::with_capacity(path.actions.len());
    for a in &path.actions {
        let (_, obs) = ml_observation(&b, a, scenario.map.visibility_radius, scenario.noise.sensor);
        let (next, post) = b.predict(a, &noise)?.update_with_marginal(&obs, &noise, scenario.noise.sensor)?;
        steps.push(prior.det_root() - post.det_root());
        b = next;
        prior = post;
    }
    Ok(steps)
}

fn diagnostics(scenario: &Scenario, belief: &GaussianBelief, trees: &[BeliefTree], paths: &[CandidatePath]) -> Result<Vec<PathDiagnostics>> {
    let spec = scenario.constraint()?;
    paths
        .iter()
        .zip(trees)
        .map(|(path, tree)| {
            let steps = ml_rollout_steps(scenario, belief, path)?;
            let complete = tree.expanded() == tree.budget() && (0..tree.expanded()).all(|l| tree.is_exact(l));
            let expected_return = if complete {
                let total: f64 = (0..tree.budget())
                    .map(|l| constraining_return(&tree.exact_steps(l).unwrap(), spec.form))
                    .sum();
                Some(total / tree.budget() as f64)
            } else {
                None
            };
            Ok(PathDiagnostics {
                path_id: path.id,
                horizon: path.horizon(),
                length: path.length(),
                ml_return: constraining_return(&steps, spec.form),
                ml_satisfied: inner_indicator(&steps, &spec),
                expected_return,
                expected_satisfied: expected_return.map(|r| r > spec.delta),
            })
        })
        .collect()
}

/// Action report without wall-clock fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionSummary {
    pub path_id: usize,
    pub verdict: Verdict,
    pub laces_expanded: usize,
    pub utility: Option<f64>,
    pub var: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultsFile {
    pub schema_version: u32,
    pub scenario: String,
    pub seed: u64,
    pub algorithm: Algorithm,
    pub exit_code: i32,
    pub chosen_path_id: Option<usize>,
    pub delta_star: Option<f64>,
    pub feasible_set: Vec<usize>,
    pub n_total: usize,
    pub n_expanded: usize,
    pub laces_fraction: f64,
    pub landmarks_registered: usize,
    pub bisection_iterations: Option<usize>,
    pub per_action: Vec<ActionSummary>,
    pub diagnostics: Vec<PathDiagnostics>,
    pub final_pose_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub algorithm: Algorithm,
    pub m: usize,
    pub epsilon: f64,
    pub delta: f64,
    pub n_paths: usize,
    pub n_total: usize,
    pub n_expanded: usize,
    pub laces_fraction: f64,
    pub chosen_path_id: Option<usize>,
    pub delta_star: Option<f64>,
    pub bisection_iterations: Option<usize>,
    pub repeats: usize,
    pub runtime_mean_s: f64,
    pub runtime_min_s: f64,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub run_dir: PathBuf,
    pub exit_code: i32,
    pub result: PlanResult,
    pub results: ResultsFile,
    pub metrics: MetricsRow,
}

/// Full experiment: mapping, planning (`repeats` times), execution of the
/// chosen path, and the run directory under `out_root`.
///
/// The exit code is 0 when a path was chosen and 2 when every candidate
/// was discarded.
pub fn run_experiment(scenario: &Scenario, out_root: &Path) -> Result<RunOutcome> {
    scenario
        .validate()
        .map_err(|(key, msg)| PlanError::InvalidArgument(format!("{key}: {msg}")))?;
    let prepared = prepare(scenario)?;
    let algorithm = scenario.planner.algorithm;
    let mut runtimes = Vec::new();
    let mut last = None;
    for r in 0..scenario.planner.repeats {
        let (result, trees) = plan(scenario, &prepared.session.belief, &prepared.paths, algorithm)?;
        info!("{algorithm} repeat {r}: {:.3} s", result.runtime_s);
        runtimes.push(result.runtime_s);
        last = Some((result, trees));
    }
    let (result, trees) = last.expect("at least one repeat");

    let mut session = prepared.session.clone();
    let mut final_pose_error = None;
    if let Some(id) = result.chosen_path_id {
        let path = prepared.paths.iter().find(|p| p.id == id).unwrap();
        let mut rng = stream_rng(scenario.seed, EXECUTION_STREAM, 0);
        for a in &path.actions {
            session.step(scenario, &prepared.landmarks, a, Phase::Execution, &mut rng)?;
        }
        let est = session.belief.latest_pose_mean();
        final_pose_error = Some((Vector2::new(est[0], est[1]) - session.truth.position()).norm());
    }
    let exit_code = if result.chosen_path_id.is_some() { 0 } else { 2 };

    let results = ResultsFile {
        schema_version: SCHEMA_VERSION,
        scenario: scenario.name.clone(),
        seed: scenario.seed,
        algorithm,
        exit_code,
        chosen_path_id: result.chosen_path_id,
        delta_star: result.delta_star,
        feasible_set: result.feasible_set(),
        n_total: result.n_total,
        n_expanded: result.n_expanded,
        laces_fraction: result.laces_fraction(),
        landmarks_registered: prepared.session.belief.index().landmark_ids().len(),
        bisection_iterations: result.bisection.as_ref().map(|b| b.iterations),
        per_action: result
            .per_action
            .iter()
            .map(|a| ActionSummary {
                path_id: a.path_id,
                verdict: a.verdict,
                laces_expanded: a.laces_expanded,
                utility: a.utility,
                var: a.var,
            })
            .collect(),
        diagnostics: diagnostics(scenario, &prepared.session.belief, &trees, &prepared.paths)?,
        final_pose_error,
    };
    let metrics = MetricsRow {
        algorithm,
        m: scenario.planner.m,
        epsilon: scenario.planner.epsilon,
        delta: scenario.planner.delta,
        n_paths: prepared.paths.len(),
        n_total: result.n_total,
        n_expanded: result.n_expanded,
        laces_fraction: result.laces_fraction(),
        chosen_path_id: result.chosen_path_id,
        delta_star: result.delta_star,
        bisection_iterations: results.bisection_iterations,
        repeats: runtimes.len(),
        runtime_mean_s: runtimes.iter().sum::<f64>() / runtimes.len() as f64,
        runtime_min_s: runtimes.iter().copied().fold(f64::INFINITY, f64::min),
    };

    let run_dir = create_run_dir(out_root, &scenario.name, algorithm)?;
    fs::write(run_dir.join("scenario.toml"), scenario.to_toml())?;
    fs::write(run_dir.join("results.json"), serde_json::to_string_pretty(&results)? + "\n")?;
    write_csv(&run_dir.join("metrics.csv"), std::slice::from_ref(&metrics))?;
    write_timings(&run_dir.join("timings.csv"), &runtimes, &result)?;
    write_laces(&run_dir.join("laces.csv"), &trees)?;
    write_bounds(&run_dir.join("bounds.csv"), &result)?;
    write_csv(&run_dir.join("beliefs.csv"), &session.rows)?;
    write_landmarks(&run_dir.join("landmarks.csv"), &prepared)?;
    write_paths(&run_dir.join("paths.csv"), &prepared.paths, result.chosen_path_id)?;
    write_roadmap(&run_dir, &prepared.roadmap)?;
    info!("run written to {}", run_dir.display());

    Ok(RunOutcome {
        run_dir,
        exit_code,
        result,
        results,
        metrics,
    })
}

fn create_run_dir(root: &Path, name: &str, algorithm: Algorithm) -> Result<PathBuf> {
    fs::create_dir_all(root)?;
    let stamp = chrono::Local::now().format("%Y%m%dT%H%M%S%.3f");
    let base = format!("{name}-{algorithm}-{stamp}");
    for k in 0.. {
        let dir = if k == 0 {
            root.join(&base)
        } else {
            root.join(format!("{base}-{k}"))
        };
        match fs::create_dir(&dir) {
            Ok(()) => return Ok(dir),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => continue,
            Err(e) => return Err(e.into()),
        }
    }
    unreachable!()
}

fn csv_err(e: csv::Error) -> PlanError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => PlanError::Io(io),
        other => PlanError::InvalidArgument(format!("csv: {other:?}")),
    }
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// [`write_csv`] that still writes `header` when there are no rows.
fn write_csv_with_header<T: Serialize>(path: &Path, header: &[&str], rows: &[T]) -> Result<()> {
    if !rows.is_empty() {
        return write_csv(path, rows);
    }
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(header).map_err(csv_err)?;
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct TimingRow {
    kind: &'static str,
    index: usize,
    wall_time_s: f64,
}

fn write_timings(path: &Path, runtimes: &[f64], result: &PlanResult) -> Result<()> {
    let mut rows: Vec<TimingRow> = runtimes
        .iter()
        .enumerate()
        .map(|(i, t)| TimingRow {
            kind: "repeat",
            index: i,
            wall_time_s: *t,
        })
        .collect();
    rows.extend(result.per_action.iter().map(|a| TimingRow {
        kind: "path",
        index: a.path_id,
        wall_time_s: a.wall_time_s,
    }));
    write_csv(path, &rows)
}

#[derive(Serialize)]
struct LaceRow {
    path_id: usize,
    lace_id: usize,
    level: usize,
    top_level: usize,
    s_lower: f64,
    s_upper: f64,
    s_exact: Option<f64>,
    utility: Option<f64>,
}

fn write_laces(path: &Path, trees: &[BeliefTree]) -> Result<()> {
    let mut rows = Vec::new();
    for t in trees {
        for (l, lace) in t.laces().iter().enumerate() {
            let (s_lower, s_upper) = lace.s_bounds();
            let exact = t.is_exact(l);
            rows.push(LaceRow {
                path_id: t.path_id(),
                lace_id: lace.id,
                level: lace.level,
                top_level: t.top_level(),
                s_lower,
                s_upper,
                s_exact: exact.then_some(s_lower),
                utility: t.utility_return(l).ok(),
            });
        }
    }
    let header = ["path_id", "lace_id", "level", "top_level", "s_lower", "s_upper", "s_exact", "utility"];
    write_csv_with_header(path, &header, &rows)
}

#[derive(Serialize)]
struct BoundsRow {
    path_id: usize,
    delta: f64,
    iteration: usize,
    expanded: usize,
    lb: f64,
    ub: f64,
    verdict: Verdict,
}

fn write_bounds(path: &Path, result: &PlanResult) -> Result<()> {
    let mut rows = Vec::new();
    for a in &result.per_action {
        for tr in &a.traces {
            rows.extend(tr.rows.iter().map(|r| BoundsRow {
                path_id: a.path_id,
                delta: tr.delta,
                iteration: r.iteration,
                expanded: r.expanded,
                lb: r.lb,
                ub: r.ub,
                verdict: r.verdict,
            }));
        }
    }
    let header = ["path_id", "delta", "iteration", "expanded", "lb", "ub", "verdict"];
    write_csv_with_header(path, &header, &rows)
}

#[derive(Serialize)]
struct LandmarkRow {
    id: usize,
    true_x: f64,
    true_y: f64,
    registered: bool,
    est_x: Option<f64>,
    est_y: Option<f64>,
    cov_xx: Option<f64>,
    cov_xy: Option<f64>,
    cov_yy: Option<f64>,
}

fn write_landmarks(path: &Path, prepared: &Prepared) -> Result<()> {
    let belief = &prepared.session.belief;
    let cov = belief.covariance()?;
    let rows: Vec<LandmarkRow> = prepared
        .landmarks
        .iter()
        .map(|l| {
            let block = belief.index().get(crate::gaussian_belief::VarKey::Landmark(l.id));
            let o = block.map(|b| b.offset);
            LandmarkRow {
                id: l.id,
                true_x: l.position[0],
                true_y: l.position[1],
                registered: block.is_some(),
                est_x: o.map(|o| belief.mean()[o]),
                est_y: o.map(|o| belief.mean()[o + 1]),
                cov_xx: o.map(|o| cov[(o, o)]),
                cov_xy: o.map(|o| cov[(o, o + 1)]),
                cov_yy: o.map(|o| cov[(o + 1, o + 1)]),
            }
        })
        .collect();
    write_csv(path, &rows)
}

#[derive(Serialize)]
struct PathRow {
    path_id: usize,
    chosen: bool,
    index: usize,
    vertex: Option<usize>,
    x: f64,
    y: f64,
}

fn write_paths(path: &Path, paths: &[CandidatePath], chosen: Option<usize>) -> Result<()> {
    let mut rows = Vec::new();
    for p in paths {
        for (i, w) in p.waypoints.iter().enumerate() {
            rows.push(PathRow {
                path_id: p.id,
                chosen: Some(p.id) == chosen,
                index: i,
                vertex: p.vertex_seq.get(i).copied(),
                x: w[0],
                y: w[1],
            });
        }
    }
    write_csv_with_header(path, &["path_id", "chosen", "index", "vertex", "x", "y"], &rows)
}

fn write_roadmap(dir: &Path, map: &RoadMap) -> Result<()> {
    #[derive(Serialize)]
    struct V {
        id: usize,
        x: f64,
        y: f64,
    }
    #[derive(Serialize)]
    struct E {
        a: usize,
        b: usize,
        length: f64,
    }
    let vs: Vec<V> = map
        .vertices
        .iter()
        .enumerate()
        .map(|(id, v)| V { id, x: v[0], y: v[1] })
        .collect();
    let es: Vec<E> = map
        .edges
        .iter()
        .map(|e| E {
            a: e.a,
            b: e.b,
            length: e.length,
        })
        .collect();
    write_csv(&dir.join("prm_vertices.csv"), &vs)?;
    write_csv_with_header(&dir.join("prm_edges.csv"), &["a", "b", "length"], &es)
}

/// Speedup and skipped-lace fraction of `ours` against `baseline`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub algorithm_ours: Algorithm,
    pub algorithm_baseline: Algorithm,
    pub runtime_ours_s: f64,
    pub runtime_baseline_s: f64,
    pub speedup: f64,
    pub n_total: usize,
    pub n_expanded: usize,
    pub laces_fraction: f64,
    pub same_choice: bool,
}

fn read_metrics(dir: &Path) -> Result<MetricsRow> {
    let mut r = csv::Reader::from_path(dir.join("metrics.csv")).map_err(csv_err)?;
    r.deserialize()
        .next()
        .ok_or_else(|| PlanError::MismatchedRuns(format!("{}: empty metrics.csv", dir.display())))?
        .map_err(csv_err)
}

fn read_results(dir: &Path) -> Result<ResultsFile> {
    Ok(serde_json::from_str(&fs::read_to_string(dir.join("results.json"))?)?)
}

fn read_scenario(dir: &Path) -> Result<Scenario> {
    crate::scenario::load_scenario(dir.join("scenario.toml"))
}

/// Compares two completed runs of the same scenario. The lace total is
/// taken from the baseline run, which expands every lace in the constrained
/// and brute-force planners.
pub fn compare_runs(ours: &Path, baseline: &Path) -> Result<Comparison> {
    let (mut sa, mut sb) = (read_scenario(ours)?, read_scenario(baseline)?);
    for s in [&mut sa, &mut sb] {
        s.planner.algorithm = Algorithm::default();
        s.planner.repeats = 1;
    }
    if sa != sb {
        return Err(PlanError::MismatchedRuns(format!(
            "{} and {} were run on different scenarios",
            ours.display(),
            baseline.display()
        )));
    }
    let (ma, mb) = (read_metrics(ours)?, read_metrics(baseline)?);
    let (ra, rb) = (read_results(ours)?, read_results(baseline)?);
    Ok(Comparison {
        algorithm_ours: ma.algorithm,
        algorithm_baseline: mb.algorithm,
        runtime_ours_s: ma.runtime_mean_s,
        runtime_baseline_s: mb.runtime_mean_s,
        speedup: speedup(mb.runtime_mean_s, ma.runtime_mean_s),
        n_total: mb.n_expanded,
        n_expanded: ra.n_expanded,
        laces_fraction: laces_fraction(mb.n_expanded, ra.n_expanded),
        same_choice: ra.chosen_path_id == rb.chosen_path_id,
    })
}

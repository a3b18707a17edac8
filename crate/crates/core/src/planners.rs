//! The four planners.
//!
//! * `alg1`: adaptive feasibility per candidate, then utility of the
//!   feasible ones.
//! * `alg2`: baseline that expands every lace of every candidate before
//!   checking the constraint.
//! * `alg3`: bisection on `delta` for the largest value-at-risk, reusing
//!   laces across thresholds and discarding candidates for good.
//! * `alg4`: brute-force value-at-risk of every candidate.
//!
//! Every planner works on one [`LaceSource`] per candidate; ties are broken
//! by the lowest path id.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::belief_tree::{BeliefTree, LaceSource, TreeConfig};
use crate::constraint_eval::{
    adaptive_feasibility, bound_state, constraining_return, required_count, ConstraintSpec, Form, TraceRow,
    Verdict,
};
use crate::error::{PlanError, Result};
use crate::gaussian_belief::GaussianBelief;
use crate::path_gen::CandidatePath;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    #[default]
    Alg1,
    Alg2,
    Alg3,
    Alg4,
}

impl Algorithm {
    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Alg1 => "alg1",
            Algorithm::Alg2 => "alg2",
            Algorithm::Alg3 => "alg3",
            Algorithm::Alg4 => "alg4",
        }
    }

    /// Whether the planner maximizes value-at-risk instead of utility.
    pub fn is_var(&self) -> bool {
        matches!(self, Algorithm::Alg3 | Algorithm::Alg4)
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Algorithm {
    type Err = PlanError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "alg1" => Ok(Algorithm::Alg1),
            "alg2" => Ok(Algorithm::Alg2),
            "alg3" => Ok(Algorithm::Alg3),
            "alg4" => Ok(Algorithm::Alg4),
            other => Err(PlanError::InvalidArgument(format!("unknown algorithm {other:?}"))),
        }
    }
}

/// Adaptive-evaluation trace of one candidate at one threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaTrace {
    pub delta: f64,
    pub rows: Vec<TraceRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionReport {
    pub path_id: usize,
    pub verdict: Verdict,
    pub laces_expanded: usize,
    /// Mean utility over all laces, when the candidate was fully evaluated.
    pub utility: Option<f64>,
    /// Sample value-at-risk, when the candidate was fully evaluated.
    pub var: Option<f64>,
    pub wall_time_s: f64,
    pub traces: Vec<DeltaTrace>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BisectionStep {
    pub iteration: usize,
    pub delta: f64,
    pub step: f64,
    pub feasible: bool,
    pub survivors: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BisectionReport {
    pub delta_min: f64,
    pub delta_max: f64,
    pub precision: f64,
    pub iterations: usize,
    pub steps: Vec<BisectionStep>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanResult {
    pub algorithm: Algorithm,
    pub chosen_path_id: Option<usize>,
    pub delta_star: Option<f64>,
    pub per_action: Vec<ActionReport>,
    pub n_total: usize,
    pub n_expanded: usize,
    pub runtime_s: f64,
    pub bisection: Option<BisectionReport>,
}

impl PlanResult {
    /// Ids of the candidates that met the constraint.
    pub fn feasible_set(&self) -> Vec<usize> {
        self.per_action
            .iter()
            .filter(|a| a.verdict == Verdict::Feasible)
            .map(|a| a.path_id)
            .collect()
    }

    /// Fraction of laces never expanded.
    pub fn laces_fraction(&self) -> f64 {
        laces_fraction(self.n_total, self.n_expanded)
    }
}

pub fn speedup(t_baseline: f64, t_ours: f64) -> f64 {
    (t_baseline - t_ours) / t_baseline
}

pub fn laces_fraction(n_total: usize, n_expanded: usize) -> f64 {
    (n_total as f64 - n_expanded as f64) / n_total as f64
}

/// Mean utility over all `m` laces; every lace must be expanded and exact.
pub fn utility_estimate<S: LaceSource + ?Sized>(source: &S) -> Result<f64> {
    if source.expanded() < source.budget() {
        return Err(PlanError::NotExact {
            lace: source.expanded() + 1,
        });
    }
    let mut total = 0.0;
    for l in 0..source.budget() {
        total += source.utility_return(l)?;
    }
    Ok(total / source.budget() as f64)
}

/// Largest `delta` with at least a `1 - epsilon` fraction of `returns`
/// exceeding it: the `(m - k + 1)`-th smallest return with
/// `k = ceil(m (1 - epsilon))`.
pub fn sample_var(returns: &[f64], epsilon: f64) -> Result<f64> {
    if returns.is_empty() {
        return Err(PlanError::InvalidArgument("value-at-risk of an empty sample".into()));
    }
    if !(0.0..1.0).contains(&epsilon) {
        return Err(PlanError::InvalidArgument(format!("epsilon must lie in [0, 1), got {epsilon}")));
    }
    let mut sorted = returns.to_vec();
    sorted.sort_by(f64::total_cmp);
    let k = required_count(sorted.len(), epsilon).max(1);
    Ok(sorted[sorted.len() - k])
}

/// Sample value-at-risk of a completed candidate.
pub fn candidate_var<S: LaceSource + ?Sized>(source: &S, form: Form, epsilon: f64) -> Result<f64> {
    let returns = (0..source.budget())
        .map(|l| source.exact_steps(l).map(|v| constraining_return(&v, form)))
        .collect::<Result<Vec<f64>>>()?;
    sample_var(&returns, epsilon)
}

/// One tree per candidate, all rooted at `root`.
pub fn build_trees(root: &GaussianBelief, paths: &[CandidatePath], config: TreeConfig) -> Result<Vec<BeliefTree>> {
    let marginal = root.subset_marginal()?;
    paths
        .iter()
        .map(|p| BeliefTree::with_root_marginal(root, marginal.clone(), p, config))
        .collect()
}

/// `[0, det_root(root subset)]`, the range searched by [`alg3_var_bisection`].
pub fn delta_range(root: &GaussianBelief) -> Result<(f64, f64)> {
    Ok((0.0, root.subset_marginal()?.det_root()))
}

fn argmax_lowest_id(items: impl Iterator<Item = (usize, f64)>) -> Option<(usize, f64)> {
    items.fold(None, |best, (id, v)| match best {
        Some((bid, bv)) if bv > v || (bv == v && bid < id) => Some((bid, bv)),
        _ => Some((id, v)),
    })
}

fn totals<S: LaceSource>(sources: &[S]) -> (usize, usize) {
    (
        sources.iter().map(|s| s.budget()).sum(),
        sources.iter().map(|s| s.expanded()).sum(),
    )
}

pub fn alg1_adaptive_constrained<S: LaceSource>(sources: &mut [S], spec: &ConstraintSpec) -> Result<PlanResult> {
    spec.validate()?;
    let start = Instant::now();
    let mut per_action = Vec::with_capacity(sources.len());
    for src in sources.iter_mut() {
        let t = Instant::now();
        let eval = adaptive_feasibility(src, spec)?;
        let utility = if eval.verdict == Verdict::Feasible {
            src.complete()?;
            Some(utility_estimate(src)?)
        } else {
            None
        };
        per_action.push(ActionReport {
            path_id: src.path_id(),
            verdict: eval.verdict,
            laces_expanded: src.expanded(),
            utility,
            var: None,
            wall_time_s: t.elapsed().as_secs_f64(),
            traces: vec![DeltaTrace {
                delta: spec.delta,
                rows: eval.trace,
            }],
        });
    }
    let chosen = argmax_lowest_id(per_action.iter().filter_map(|a| a.utility.map(|u| (a.path_id, u))));
    let (n_total, n_expanded) = totals(sources);
    Ok(PlanResult {
        algorithm: Algorithm::Alg1,
        chosen_path_id: chosen.map(|c| c.0),
        delta_star: None,
        per_action,
        n_total,
        n_expanded,
        runtime_s: start.elapsed().as_secs_f64(),
        bisection: None,
    })
}

pub fn alg2_baseline_constrained<S: LaceSource>(sources: &mut [S], spec: &ConstraintSpec) -> Result<PlanResult> {
    spec.validate()?;
    let start = Instant::now();
    let mut per_action = Vec::with_capacity(sources.len());
    for src in sources.iter_mut() {
        let t = Instant::now();
        src.complete()?;
        let utility = utility_estimate(src)?;
        let verdict = bound_state(src, spec).check(spec.epsilon);
        per_action.push(ActionReport {
            path_id: src.path_id(),
            verdict,
            laces_expanded: src.expanded(),
            utility: Some(utility),
            var: None,
            wall_time_s: t.elapsed().as_secs_f64(),
            traces: Vec::new(),
        });
    }
    // Best utility first; the first feasible candidate wins.
    let mut order: Vec<&ActionReport> = per_action.iter().collect();
    order.sort_by(|a, b| {
        b.utility
            .unwrap()
            .total_cmp(&a.utility.unwrap())
            .then(a.path_id.cmp(&b.path_id))
    });
    let chosen = order.iter().find(|a| a.verdict == Verdict::Feasible).map(|a| a.path_id);
    let (n_total, n_expanded) = totals(sources);
    Ok(PlanResult {
        algorithm: Algorithm::Alg2,
        chosen_path_id: chosen,
        delta_star: None,
        per_action,
        n_total,
        n_expanded,
        runtime_s: start.elapsed().as_secs_f64(),
        bisection: None,
    })
}

/// Bisection for the largest threshold some candidate still meets.
///
/// Each round evaluates the surviving candidates at `delta`. If any is
/// feasible, the infeasible ones are dropped and `delta` moves up,
/// otherwise it moves down; the step halves every round. The search stops
/// once the bracket between the highest feasible and lowest infeasible
/// threshold is at most `precision` wide. Remaining survivors are then
/// ranked by their exact sample value-at-risk.
pub fn alg3_var_bisection<S: LaceSource>(
    sources: &mut [S],
    form: Form,
    epsilon: f64,
    precision: f64,
    (delta_min, delta_max): (f64, f64),
) -> Result<PlanResult> {
    if !(precision > 0.0) {
        return Err(PlanError::InvalidArgument("precision must be positive".into()));
    }
    if !(delta_max >= delta_min) {
        return Err(PlanError::InvalidArgument(format!(
            "empty threshold range [{delta_min}, {delta_max}]"
        )));
    }
    let base = ConstraintSpec::new(form, delta_min, epsilon)?;
    let start = Instant::now();
    let n = sources.len();
    let mut alive = vec![true; n];
    let mut verdicts = vec![Verdict::Unknown; n];
    let mut times = vec![0.0; n];
    let mut traces: Vec<Vec<DeltaTrace>> = vec![Vec::new(); n];
    let mut steps = Vec::new();

    let (mut lo, mut hi) = (delta_min, delta_max);
    let mut delta = 0.5 * (delta_min + delta_max);
    let mut step = 0.25 * (delta_max - delta_min);
    let mut delta_star = None;
    while hi - lo > precision {
        let spec = base.with_delta(delta);
        let mut round = vec![Verdict::Unknown; n];
        for (i, src) in sources.iter_mut().enumerate() {
            if !alive[i] {
                continue;
            }
            let t = Instant::now();
            let eval = adaptive_feasibility(src, &spec)?;
            times[i] += t.elapsed().as_secs_f64();
            round[i] = eval.verdict;
            traces[i].push(DeltaTrace { delta, rows: eval.trace });
        }
        let feasible = round.contains(&Verdict::Feasible);
        if feasible {
            for i in 0..n {
                if alive[i] {
                    verdicts[i] = round[i];
                    if round[i] == Verdict::Infeasible {
                        alive[i] = false;
                    }
                }
            }
            delta_star = Some(delta);
            lo = delta;
            delta += step;
        } else {
            hi = delta;
            delta -= step;
        }
        steps.push(BisectionStep {
            iteration: steps.len(),
            delta: spec.delta,
            step,
            feasible,
            survivors: alive.iter().filter(|a| **a).count(),
        });
        step *= 0.5;
    }

    let mut vars = vec![None; n];
    let chosen = if delta_star.is_some() {
        let survivors: Vec<usize> = (0..n).filter(|i| alive[*i]).collect();
        if survivors.len() == 1 {
            Some(sources[survivors[0]].path_id())
        } else {
            for &i in &survivors {
                let t = Instant::now();
                sources[i].complete()?;
                vars[i] = Some(candidate_var(&sources[i], form, epsilon)?);
                times[i] += t.elapsed().as_secs_f64();
            }
            argmax_lowest_id(survivors.iter().map(|&i| (sources[i].path_id(), vars[i].unwrap()))).map(|c| c.0)
        }
    } else {
        verdicts.iter_mut().for_each(|v| *v = Verdict::Infeasible);
        None
    };

    let per_action = sources
        .iter()
        .enumerate()
        .map(|(i, src)| ActionReport {
            path_id: src.path_id(),
            verdict: if alive[i] && delta_star.is_some() {
                Verdict::Feasible
            } else {
                Verdict::Infeasible
            },
            laces_expanded: src.expanded(),
            utility: None,
            var: vars[i],
            wall_time_s: times[i],
            traces: std::mem::take(&mut traces[i]),
        })
        .collect();
    let (n_total, n_expanded) = totals(sources);
    Ok(PlanResult {
        algorithm: Algorithm::Alg3,
        chosen_path_id: chosen,
        delta_star,
        per_action,
        n_total,
        n_expanded,
        runtime_s: start.elapsed().as_secs_f64(),
        bisection: Some(BisectionReport {
            delta_min,
            delta_max,
            precision,
            iterations: steps.len(),
            steps,
        }),
    })
}

pub fn alg4_var_bruteforce<S: LaceSource>(sources: &mut [S], form: Form, epsilon: f64) -> Result<PlanResult> {
    let start = Instant::now();
    let mut per_action = Vec::with_capacity(sources.len());
    for src in sources.iter_mut() {
        let t = Instant::now();
        src.complete()?;
        let var = candidate_var(src, form, epsilon)?;
        per_action.push(ActionReport {
            path_id: src.path_id(),
            verdict: Verdict::Feasible,
            laces_expanded: src.expanded(),
            utility: None,
            var: Some(var),
            wall_time_s: t.elapsed().as_secs_f64(),
            traces: Vec::new(),
        });
    }
    let best = argmax_lowest_id(per_action.iter().map(|a| (a.path_id, a.var.unwrap())));
    let (n_total, n_expanded) = totals(sources);
    Ok(PlanResult {
        algorithm: Algorithm::Alg4,
        chosen_path_id: best.map(|b| b.0),
        delta_star: best.map(|b| b.1),
        per_action,
        n_total,
        n_expanded,
        runtime_s: start.elapsed().as_secs_f64(),
        bisection: None,
    })
}

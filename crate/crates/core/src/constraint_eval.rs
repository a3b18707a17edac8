//! Chance-constraint evaluation over laces.
//!
//! A lace satisfies the inner constraint when its cumulative return exceeds
//! `delta` (cumulative form) or when every step reaches `delta`
//! (multiplicative form). The outer constraint asks for at least a
//! `1 - epsilon` fraction of the `m` laces to satisfy it.
//!
//! Indicators evaluated on per-step lower and upper bounds bracket the
//! exact indicator, and unexpanded laces count as unknown, which gives
//! bounds on the satisfied fraction that tighten as laces are expanded and
//! refined. [`adaptive_feasibility`] alternates the two until the bounds
//! decide the constraint.

use serde::{Deserialize, Serialize};

use crate::belief_tree::LaceSource;
use crate::error::{PlanError, Result};

/// Absorbs rounding in `m * (1 - epsilon)` when it is meant to be an integer.
const COUNT_SNAP: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Form {
    #[default]
    Cumulative,
    Multiplicative,
}

impl std::str::FromStr for Form {
    type Err = PlanError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cumulative" => Ok(Form::Cumulative),
            "multiplicative" => Ok(Form::Multiplicative),
            other => Err(PlanError::InvalidArgument(format!(
                "unknown constraint form {other:?} (expected cumulative or multiplicative)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstraintSpec {
    pub form: Form,
    pub delta: f64,
    pub epsilon: f64,
}

impl ConstraintSpec {
    pub fn new(form: Form, delta: f64, epsilon: f64) -> Result<Self> {
        let spec = Self { form, delta, epsilon };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.epsilon) {
            return Err(PlanError::InvalidArgument(format!(
                "epsilon must lie in [0, 1), got {}",
                self.epsilon
            )));
        }
        if !self.delta.is_finite() {
            return Err(PlanError::InvalidArgument("delta must be finite".into()));
        }
        Ok(())
    }

    pub fn with_delta(&self, delta: f64) -> Self {
        Self { delta, ..*self }
    }
}

/// Smallest number of satisfying laces out of `m` that meets a
/// `1 - epsilon` fraction.
pub fn required_count(m: usize, epsilon: f64) -> usize {
    let need = (m as f64 * (1.0 - epsilon) - COUNT_SNAP).ceil();
    need.clamp(0.0, m as f64) as usize
}

/// Constraining return of a lace: the step sum (cumulative form) or the
/// smallest step (multiplicative form).
pub fn constraining_return(values: &[f64], form: Form) -> f64 {
    match form {
        Form::Cumulative => values.iter().sum(),
        Form::Multiplicative => values.iter().copied().fold(f64::INFINITY, f64::min),
    }
}

pub fn inner_indicator(values: &[f64], spec: &ConstraintSpec) -> bool {
    match spec.form {
        Form::Cumulative => values.iter().sum::<f64>() > spec.delta,
        Form::Multiplicative => values.iter().all(|v| *v >= spec.delta),
    }
}

/// Indicators of the all-lower and all-upper step values.
pub fn inner_indicator_bounds(steps: &[(f64, f64)], spec: &ConstraintSpec) -> (bool, bool) {
    match spec.form {
        Form::Cumulative => {
            let (lo, up) = steps
                .iter()
                .fold((0.0, 0.0), |(lo, up), (l, u)| (lo + l, up + u));
            (lo > spec.delta, up > spec.delta)
        }
        Form::Multiplicative => (
            steps.iter().all(|s| s.0 >= spec.delta),
            steps.iter().all(|s| s.1 >= spec.delta),
        ),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Feasible,
    Infeasible,
    Unknown,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Feasible => "feasible",
            Verdict::Infeasible => "infeasible",
            Verdict::Unknown => "unknown",
        })
    }
}

/// Lace counts behind the bounds on the satisfied fraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct BoundState {
    pub m: usize,
    pub expanded: usize,
    /// Expanded laces certainly satisfying the inner constraint.
    pub count_lower: usize,
    /// Expanded laces possibly satisfying it.
    pub count_upper: usize,
}

impl BoundState {
    pub fn new(m: usize) -> Self {
        Self {
            m,
            ..Self::default()
        }
    }

    pub fn push(&mut self, (lower, upper): (bool, bool)) {
        self.expanded += 1;
        self.count_lower += lower as usize;
        self.count_upper += upper as usize;
    }

    pub fn lb(&self) -> f64 {
        self.count_lower as f64 / self.m as f64
    }

    pub fn ub(&self) -> f64 {
        (self.m - self.expanded + self.count_upper) as f64 / self.m as f64
    }

    /// Feasible once the certain count reaches the requirement, infeasible
    /// once even the optimistic count cannot; the lower side is checked first.
    pub fn check(&self, epsilon: f64) -> Verdict {
        let required = required_count(self.m, epsilon);
        if self.count_lower >= required {
            Verdict::Feasible
        } else if self.m - self.expanded + self.count_upper < required {
            Verdict::Infeasible
        } else {
            Verdict::Unknown
        }
    }
}

pub fn merged_check(state: &BoundState, spec: &ConstraintSpec) -> Verdict {
    state.check(spec.epsilon)
}

/// Bounds on the satisfied fraction from all laces expanded so far.
pub fn bound_state<S: LaceSource + ?Sized>(source: &S, spec: &ConstraintSpec) -> BoundState {
    let mut state = BoundState::new(source.budget());
    for l in 0..source.expanded() {
        state.push(inner_indicator_bounds(source.step_bounds(l), spec));
    }
    state
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub expanded: usize,
    pub lb: f64,
    pub ub: f64,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub verdict: Verdict,
    pub state: BoundState,
    pub trace: Vec<TraceRow>,
}

/// Decides the outer constraint, expanding and refining laces only while
/// the current bounds leave it open. Each undecided round expands one more
/// lace (if any remain) and raises by one level the expanded lace with
/// undecided indicator bounds and the widest bound interval. Undecided
/// laces whose bounds are already available at a higher level, through
/// nodes shared with other laces, are moved there in the same round.
pub fn adaptive_feasibility<S: LaceSource + ?Sized>(source: &mut S, spec: &ConstraintSpec) -> Result<Evaluation> {
    let m = source.budget();
    if m == 0 {
        return Err(PlanError::InvalidArgument("lace budget m must be at least 1".into()));
    }
    let mut state = BoundState::new(m);
    let mut indicators: Vec<(bool, bool)> = Vec::with_capacity(m);
    let mut undecided: Vec<usize> = Vec::new();
    for l in 0..source.expanded() {
        let ind = inner_indicator_bounds(source.step_bounds(l), spec);
        state.push(ind);
        indicators.push(ind);
        if ind.0 != ind.1 {
            undecided.push(l);
        }
    }
    let mut trace = Vec::new();
    let top = source.top_level();
    loop {
        let verdict = state.check(spec.epsilon);
        trace.push(TraceRow {
            iteration: trace.len(),
            expanded: state.expanded,
            lb: state.lb(),
            ub: state.ub(),
            verdict,
        });
        if verdict != Verdict::Unknown {
            return Ok(Evaluation { verdict, state, trace });
        }

        let victim = undecided
            .iter()
            .copied()
            .filter(|&l| source.lace_level(l) < top)
            .map(|l| {
                let width: f64 = source.step_bounds(l).iter().map(|(lo, up)| up - lo).sum();
                (l, width)
            })
            .fold(None, |best: Option<(usize, f64)>, cand| match best {
                Some(b) if b.1 >= cand.1 => Some(b),
                _ => Some(cand),
            });
        let mut progressed = false;
        if source.expanded() < m {
            source.expand_next()?;
            let l = source.expanded() - 1;
            let ind = inner_indicator_bounds(source.step_bounds(l), spec);
            state.push(ind);
            indicators.push(ind);
            if ind.0 != ind.1 {
                undecided.push(l);
            }
            progressed = true;
        }
        if let Some((l, _)) = victim {
            source.refine(l, source.lace_level(l) + 1)?;
            progressed = true;
        }
        // Laces through nodes that were already refined for other laces
        // catch up for free.
        for &l in &undecided {
            let shared = source.shared_level(l);
            if shared > source.lace_level(l) {
                source.refine(l, shared)?;
            }
        }
        undecided.retain(|&l| {
            let ind = inner_indicator_bounds(source.step_bounds(l), spec);
            let old = std::mem::replace(&mut indicators[l], ind);
            state.count_lower = state.count_lower + ind.0 as usize - old.0 as usize;
            state.count_upper = state.count_upper + ind.1 as usize - old.1 as usize;
            ind.0 != ind.1
        });
        if !progressed {
            // Every lace is expanded and every undecided one is exact, so
            // the indicators are exact and the check cannot stay open.
            unreachable!("adaptive evaluation stalled with all laces exact");
        }
    }
}

/// Verdict from expanding and refining every lace, for comparison with the
/// adaptive evaluation.
pub fn full_feasibility<S: LaceSource + ?Sized>(source: &mut S, spec: &ConstraintSpec) -> Result<Verdict> {
    source.complete()?;
    Ok(bound_state(source, spec).check(spec.epsilon))
}

//! Experiment configuration.
//!
//! Scenarios are TOML files; every key is optional and missing ones take
//! the defaults below. An empty file gives the default desk-scale setup:
//! a 5 m square map, four landmarks around a 3 m mapping loop driven twice,
//! and a planning session towards the far corner.

use std::path::{Path, PathBuf};

use nalgebra::{Matrix3, Vector2, Vector3};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::belief_tree::Reward;
use crate::constraint_eval::{ConstraintSpec, Form};
use crate::error::{PlanError, Result};
use crate::path_gen::{Bounds, PrmParams};
use crate::planners::Algorithm;
use crate::sim_world::{stream_rng, Landmark, NoiseSpec, SensorModel};

/// Stream id for drawing random landmark positions.
const LANDMARK_STREAM: u64 = 0xfffd;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub seed: u64,
    /// Discount factor; the objective is undiscounted, so only 1 is accepted.
    pub gamma: f64,
    pub map: MapConfig,
    pub landmarks: LandmarkConfig,
    pub noise: NoiseConfig,
    pub prior: PriorConfig,
    pub preliminary: PreliminaryConfig,
    pub prm: PrmConfig,
    pub planner: PlannerConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MapConfig {
    pub min: [f64; 2],
    pub max: [f64; 2],
    pub visibility_radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LandmarkConfig {
    /// Explicit positions, ids 1.. in order.
    pub positions: Vec<[f64; 2]>,
    /// Extra landmarks drawn uniformly in a region, numbered after the
    /// explicit ones.
    pub random: RandomLandmarks,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RandomLandmarks {
    pub count: usize,
    pub region_min: [f64; 2],
    pub region_max: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    /// Diagonal of the motion covariance per unit action length.
    pub motion_base: [f64; 3],
    /// Diagonal of the observation covariance.
    pub obs_cov: [f64; 2],
    pub sensor: SensorModel,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PriorConfig {
    pub mean: [f64; 3],
    /// Diagonal of the prior covariance.
    pub cov: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PreliminaryConfig {
    /// Displacements driven during the mapping session.
    pub actions: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PrmConfig {
    pub n_vertices: usize,
    pub connect_radius: f64,
    pub max_attempts: usize,
    pub path_count: usize,
    pub goal: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlannerConfig {
    pub algorithm: Algorithm,
    pub m: usize,
    pub delta: f64,
    pub epsilon: f64,
    pub form: Form,
    /// Bisection precision relative to the largest threshold searched.
    pub precision: f64,
    pub n0: usize,
    pub reward: Reward,
    pub repeats: usize,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            name: "default".into(),
            seed: 1,
            gamma: 1.0,
            map: MapConfig::default(),
            landmarks: LandmarkConfig::default(),
            noise: NoiseConfig::default(),
            prior: PriorConfig::default(),
            preliminary: PreliminaryConfig::default(),
            prm: PrmConfig::default(),
            planner: PlannerConfig::default(),
        }
    }
}

impl Default for MapConfig {
    fn default() -> Self {
        Self {
            min: [0.0, 0.0],
            max: [5.0, 5.0],
            visibility_radius: 0.8,
        }
    }
}

impl Default for LandmarkConfig {
    fn default() -> Self {
        Self {
            positions: vec![[1.5, 0.5], [3.5, 1.5], [2.5, 3.5], [0.5, 2.0]],
            random: RandomLandmarks::default(),
        }
    }
}

impl Default for RandomLandmarks {
    fn default() -> Self {
        Self {
            count: 0,
            region_min: [2.0, 2.0],
            region_max: [5.0, 5.0],
        }
    }
}

impl Default for NoiseConfig {
    fn default() -> Self {
        let n = NoiseSpec::default();
        Self {
            motion_base: [n.motion_base[0], n.motion_base[1], n.motion_base[2]],
            obs_cov: [n.obs_cov[0], n.obs_cov[1]],
            sensor: SensorModel::default(),
        }
    }
}

impl Default for PriorConfig {
    fn default() -> Self {
        Self {
            mean: [0.0; 3],
            cov: [0.001; 3],
        }
    }
}

impl Default for PreliminaryConfig {
    fn default() -> Self {
        Self {
            actions: square_loop(3, 2),
        }
    }
}

impl Default for PrmConfig {
    fn default() -> Self {
        let p = PrmParams::default();
        Self {
            n_vertices: p.n_vertices,
            connect_radius: p.connect_radius,
            max_attempts: p.max_attempts,
            path_count: 12,
            goal: [4.5, 4.5],
        }
    }
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::Alg1,
            m: 300,
            delta: 0.0,
            epsilon: 0.05,
            form: Form::Cumulative,
            precision: 1e-6,
            n0: 4,
            reward: Reward::Phi,
            repeats: 1,
        }
    }
}

/// Unit steps around a `side`-metre square from the origin, counter
/// clockwise, `laps` times.
pub fn square_loop(side: usize, laps: usize) -> Vec<[f64; 2]> {
    let dirs = [[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]];
    (0..laps)
        .flat_map(|_| dirs.iter().flat_map(move |d| std::iter::repeat_n(*d, side)))
        .collect()
}

impl Scenario {
    pub fn bounds(&self) -> Bounds {
        Bounds {
            min: self.map.min,
            max: self.map.max,
        }
    }

    pub fn noise_spec(&self) -> NoiseSpec {
        NoiseSpec {
            motion_base: Vector3::from(self.noise.motion_base),
            obs_cov: Vector2::from(self.noise.obs_cov),
        }
    }

    pub fn prior_mean(&self) -> Vector3<f64> {
        Vector3::from(self.prior.mean)
    }

    pub fn prior_cov(&self) -> Matrix3<f64> {
        Matrix3::from_diagonal(&Vector3::from(self.prior.cov))
    }

    pub fn prm_params(&self) -> PrmParams {
        PrmParams {
            n_vertices: self.prm.n_vertices,
            connect_radius: self.prm.connect_radius,
            max_attempts: self.prm.max_attempts,
        }
    }

    pub fn constraint(&self) -> Result<ConstraintSpec> {
        ConstraintSpec::new(self.planner.form, self.planner.delta, self.planner.epsilon)
    }

    pub fn preliminary_actions(&self) -> Vec<Vector2<f64>> {
        self.preliminary.actions.iter().map(|a| Vector2::from(*a)).collect()
    }

    /// Ground-truth landmarks: explicit ones first, then the random draw.
    pub fn landmarks(&self) -> Vec<Landmark> {
        let mut positions = self.landmarks.positions.clone();
        let r = &self.landmarks.random;
        let mut rng = stream_rng(self.seed, LANDMARK_STREAM, 0);
        for _ in 0..r.count {
            positions.push([
                rng.random_range(r.region_min[0]..=r.region_max[0]),
                rng.random_range(r.region_min[1]..=r.region_max[1]),
            ]);
        }
        crate::sim_world::landmarks_from_positions(&positions)
    }

    /// Checks every invariant; the error names the offending key.
    pub fn validate(&self) -> std::result::Result<(), (&'static str, String)> {
        let fail = |key: &'static str, msg: String| Err((key, msg));
        if self.gamma != 1.0 {
            return fail("gamma", format!("only an undiscounted objective is supported, got {}", self.gamma));
        }
        if !(self.map.min[0] < self.map.max[0] && self.map.min[1] < self.map.max[1]) {
            return fail("min", "map min must be below max on both axes".into());
        }
        if !(self.map.visibility_radius > 0.0) {
            return fail("visibility_radius", "must be positive".into());
        }
        let r = &self.landmarks.random;
        if r.count > 0 && !(r.region_min[0] <= r.region_max[0] && r.region_min[1] <= r.region_max[1]) {
            return fail("region_min", "random landmark region is empty".into());
        }
        if self.noise.motion_base.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return fail("motion_base", "motion covariance must be positive definite".into());
        }
        if self.noise.obs_cov.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return fail("obs_cov", "observation covariance must be positive definite".into());
        }
        if self.prior.cov.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return fail("cov", "prior covariance must be positive definite".into());
        }
        if self.preliminary.actions.iter().any(|a| !(a[0].hypot(a[1]) > 0.0)) {
            return fail("actions", "preliminary actions must have nonzero length".into());
        }
        if self.prm.n_vertices < 2 {
            return fail("n_vertices", "need at least start and goal".into());
        }
        if !(self.prm.connect_radius > 0.0) {
            return fail("connect_radius", "must be positive".into());
        }
        if self.prm.path_count == 0 {
            return fail("path_count", "must be at least 1".into());
        }
        let p = &self.planner;
        if !(0.0..1.0).contains(&p.epsilon) {
            return fail("epsilon", format!("must lie in [0, 1), got {}", p.epsilon));
        }
        if !p.delta.is_finite() {
            return fail("delta", "must be finite".into());
        }
        if p.m == 0 {
            return fail("m", "must be at least 1".into());
        }
        if !(p.precision > 0.0) {
            return fail("precision", "must be positive".into());
        }
        if p.n0 == 0 {
            return fail("n0", "must be at least 1".into());
        }
        if p.repeats == 0 {
            return fail("repeats", "must be at least 1".into());
        }
        Ok(())
    }

    pub fn from_toml_str(src: &str, path: &Path) -> Result<Self> {
        let err = |message: String| PlanError::Scenario {
            path: path.to_path_buf(),
            message,
        };
        let scenario: Scenario = toml::from_str(src).map_err(|e| {
            let line = e.span().map(|s| line_of(src, s.start));
            match line {
                Some(l) => err(format!("line {l}: {}", e.message())),
                None => err(e.message().to_string()),
            }
        })?;
        scenario.validate().map_err(|(key, msg)| match find_key_line(src, key) {
            Some(l) => err(format!("line {l}: {key}: {msg}")),
            None => err(format!("{key}: {msg}")),
        })?;
        Ok(scenario)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }
}

fn line_of(src: &str, offset: usize) -> usize {
    src[..offset.min(src.len())].matches('\n').count() + 1
}

fn find_key_line(src: &str, key: &str) -> Option<usize> {
    src.lines().position(|l| {
        let t = l.trim_start();
        t.strip_prefix(key)
            .is_some_and(|rest| rest.trim_start().starts_with('='))
    })
    .map(|i| i + 1)
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    let path = path.as_ref();
    let src = std::fs::read_to_string(path).map_err(|e| PlanError::Scenario {
        path: PathBuf::from(path),
        message: e.to_string(),
    })?;
    Scenario::from_toml_str(&src, path)
}

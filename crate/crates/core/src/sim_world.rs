//! Planar ground-truth world: poses, landmarks, radius visibility, and the
//! stochastic motion and observation models.
//!
//! Motion composes additively in the world frame and points the heading
//! along the displacement; a zero displacement keeps the heading. Motion
//! noise is scaled by the displacement length. Observations are landmark
//! positions relative to the robot, expressed in the robot frame
//! ([`SensorModel::RobotFrame`]) or in the world frame
//! ([`SensorModel::WorldFrame`], which makes the model linear).

use nalgebra::{Matrix2, Matrix2x3, Vector2, Vector3};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{PlanError, Result};
use crate::gaussian_belief::GaussianBelief;
use crate::linalg::wrap_angle;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self {
            x,
            y,
            theta: wrap_angle(theta),
        }
    }

    pub fn from_vector(v: &Vector3<f64>) -> Self {
        Self::new(v[0], v[1], v[2])
    }

    pub fn to_vector(&self) -> Vector3<f64> {
        Vector3::new(self.x, self.y, self.theta)
    }

    pub fn position(&self) -> Vector2<f64> {
        Vector2::new(self.x, self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Landmark {
    /// 1-based identifier.
    pub id: usize,
    pub position: Vector2<f64>,
}

impl Landmark {
    pub fn new(id: usize, x: f64, y: f64) -> Self {
        Self {
            id,
            position: Vector2::new(x, y),
        }
    }
}

/// Builds landmarks with contiguous ids `1..=n` from positions.
pub fn landmarks_from_positions(positions: &[[f64; 2]]) -> Vec<Landmark> {
    positions
        .iter()
        .enumerate()
        .map(|(i, p)| Landmark::new(i + 1, p[0], p[1]))
        .collect()
}

/// Which landmarks of an ordered landmark list are visible. Bit `i` refers
/// to the `i`-th landmark of the list the configuration was computed for.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct VisibilityConfig {
    pub bits: Vec<bool>,
}

impl VisibilityConfig {
    pub fn none(len: usize) -> Self {
        Self {
            bits: vec![false; len],
        }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// Number of visible landmarks.
    pub fn count(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    pub fn visible_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits
            .iter()
            .enumerate()
            .filter_map(|(i, b)| b.then_some(i))
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Observation {
    /// `(landmark id, measurement)` sorted by landmark id.
    pub entries: Vec<(usize, Vector2<f64>)>,
}

impl Observation {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Diagonal motion and observation noise. Motion covariance is per unit of
/// displacement length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub motion_base: Vector3<f64>,
    pub obs_cov: Vector2<f64>,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self {
            motion_base: Vector3::new(0.015, 0.015, 0.015),
            obs_cov: Vector2::new(0.001, 0.001),
        }
    }
}

impl NoiseSpec {
    pub fn zero() -> Self {
        Self {
            motion_base: Vector3::zeros(),
            obs_cov: Vector2::zeros(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self
            .motion_base
            .iter()
            .chain(self.obs_cov.iter())
            .all(|v| v.is_finite() && *v > 0.0);
        if ok {
            Ok(())
        } else {
            Err(PlanError::NotPositiveDefinite {
                what: "noise covariance".into(),
            })
        }
    }

    pub fn motion_variances(&self, action: &Vector2<f64>) -> Vector3<f64> {
        self.motion_base * action.norm()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SensorModel {
    /// Relative landmark position rotated into the robot frame.
    #[default]
    RobotFrame,
    /// Relative landmark position in the world frame.
    WorldFrame,
}

impl SensorModel {
    pub fn predict(&self, pose: &Vector3<f64>, landmark: &Vector2<f64>) -> Vector2<f64> {
        let rel = landmark - Vector2::new(pose[0], pose[1]);
        match self {
            SensorModel::RobotFrame => rotation(pose[2]).transpose() * rel,
            SensorModel::WorldFrame => rel,
        }
    }

    /// Jacobians of [`Self::predict`] with respect to the pose and the landmark.
    pub fn jacobians(
        &self,
        pose: &Vector3<f64>,
        landmark: &Vector2<f64>,
    ) -> (Matrix2x3<f64>, Matrix2<f64>) {
        match self {
            SensorModel::RobotFrame => {
                let (s, c) = pose[2].sin_cos();
                let rt = Matrix2::new(c, s, -s, c);
                let rel = landmark - Vector2::new(pose[0], pose[1]);
                let d_theta = Matrix2::new(-s, c, -c, -s) * rel;
                let mut jp = Matrix2x3::zeros();
                jp.fixed_view_mut::<2, 2>(0, 0).copy_from(&(-rt));
                jp.set_column(2, &d_theta);
                (jp, rt)
            }
            SensorModel::WorldFrame => {
                let mut jp = Matrix2x3::zeros();
                jp.fixed_view_mut::<2, 2>(0, 0)
                    .copy_from(&(-Matrix2::identity()));
                (jp, Matrix2::identity())
            }
        }
    }

    /// Landmark position that would produce `z` from `pose`.
    pub fn invert(&self, pose: &Vector3<f64>, z: &Vector2<f64>) -> Vector2<f64> {
        let p = Vector2::new(pose[0], pose[1]);
        match self {
            SensorModel::RobotFrame => p + rotation(pose[2]) * z,
            SensorModel::WorldFrame => p + z,
        }
    }
}

fn rotation(theta: f64) -> Matrix2<f64> {
    let (s, c) = theta.sin_cos();
    Matrix2::new(c, -s, s, c)
}

/// Noise-free motion model.
pub fn motion_mean(pose: &Vector3<f64>, action: &Vector2<f64>) -> Vector3<f64> {
    let theta = if action.norm() > 0.0 {
        action[1].atan2(action[0])
    } else {
        pose[2]
    };
    Vector3::new(pose[0] + action[0], pose[1] + action[1], theta)
}

/// Visibility by radius; a landmark exactly at distance `radius` is visible.
pub fn visible_config(pose: &Pose, landmarks: &[Landmark], radius: f64) -> VisibilityConfig {
    visible_config_at(&pose.position(), landmarks.iter().map(|l| l.position), radius)
}

pub(crate) fn visible_config_at(
    position: &Vector2<f64>,
    landmarks: impl Iterator<Item = Vector2<f64>>,
    radius: f64,
) -> VisibilityConfig {
    VisibilityConfig {
        bits: landmarks.map(|l| (l - position).norm() <= radius).collect(),
    }
}

pub fn sample_motion<R: Rng + ?Sized>(
    pose: &Pose,
    action: &Vector2<f64>,
    noise: &NoiseSpec,
    rng: &mut R,
) -> Pose {
    let mean = motion_mean(&pose.to_vector(), action);
    let std = noise.motion_variances(action).map(f64::sqrt);
    let w = Vector3::from_fn(|i, _| std[i] * rng.sample::<f64, _>(StandardNormal));
    Pose::from_vector(&(mean + w))
}

/// Draws one measurement per visible landmark around the sensor prediction.
pub fn sample_observation<R: Rng + ?Sized>(
    pose: &Pose,
    landmarks: &[Landmark],
    config: &VisibilityConfig,
    noise: &NoiseSpec,
    sensor: SensorModel,
    rng: &mut R,
) -> Result<Observation> {
    if config.len() != landmarks.len() {
        return Err(PlanError::DimensionMismatch {
            expected: landmarks.len(),
            actual: config.len(),
        });
    }
    let std = noise.obs_cov.map(f64::sqrt);
    let x = pose.to_vector();
    let mut entries: Vec<(usize, Vector2<f64>)> = config
        .visible_indices()
        .map(|i| {
            let l = &landmarks[i];
            let v = Vector2::from_fn(|k, _| std[k] * rng.sample::<f64, _>(StandardNormal));
            (l.id, sensor.predict(&x, &l.position) + v)
        })
        .collect();
    entries.sort_by_key(|(id, _)| *id);
    Ok(Observation { entries })
}

/// Most likely visibility configuration and observation after `action`.
pub fn ml_observation(
    belief: &GaussianBelief,
    action: &Vector2<f64>,
    radius: f64,
    sensor: SensorModel,
) -> (VisibilityConfig, Observation) {
    let pose = motion_mean(&belief.latest_pose_mean(), action);
    let landmarks = belief.landmark_means();
    let config = visible_config(&Pose::from_vector(&pose), &landmarks, radius);
    let entries = config
        .visible_indices()
        .map(|i| (landmarks[i].id, sensor.predict(&pose, &landmarks[i].position)))
        .collect();
    (config, Observation { entries })
}

/// Independent random stream for `(stream, substream)` under a run seed.
pub fn stream_rng(seed: u64, stream: u64, substream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((stream << 32) ^ substream);
    rng
}

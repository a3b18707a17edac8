//! Joint Gaussian belief over the pose trajectory and the landmark map, kept
//! in information form.
//!
//! Every motion and observation factor is linearized once, at the mean
//! current when it is inserted, and added to the information matrix and
//! vector. The mean is re-solved densely after each update. Past poses are
//! never marginalized out.
//!
//! The planner measures uncertainty on a fixed subset of the state: all
//! landmarks plus the latest pose ([`SubsetMarginal`]). On that subset this
//! module provides the d-th root of the covariance determinant, the
//! D-optimality gain between two beliefs, differential entropy, and a
//! family of cheap determinant bounds indexed by a simplification level.

use std::collections::HashMap;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, Matrix3, Vector2, Vector3};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{PlanError, Result};
use crate::linalg::{cholesky, log_det_from_cholesky, log_det_spd, symmetrize};
use crate::sim_world::{motion_mean, sample_motion, Landmark, NoiseSpec, Observation, Pose, SensorModel};

pub const POSE_DIM: usize = 3;
pub const LANDMARK_DIM: usize = 2;

/// Relative widening applied to non-exact determinant bounds so that they
/// bracket the exactly computed value in floating point.
const BOUND_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VarKey {
    Pose(usize),
    Landmark(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Block {
    pub key: VarKey,
    pub offset: usize,
    pub width: usize,
}

/// Layout of the state vector: 3-wide pose blocks and 2-wide landmark
/// blocks in insertion order.
#[derive(Debug, Clone, Default)]
pub struct VariableIndex {
    blocks: Vec<Block>,
    lookup: HashMap<VarKey, usize>,
    latest_pose: Option<usize>,
    dim: usize,
}

impl VariableIndex {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn get(&self, key: VarKey) -> Option<Block> {
        self.lookup.get(&key).map(|&i| self.blocks[i])
    }

    fn push(&mut self, key: VarKey) -> Block {
        let width = match key {
            VarKey::Pose(_) => POSE_DIM,
            VarKey::Landmark(_) => LANDMARK_DIM,
        };
        let block = Block {
            key,
            offset: self.dim,
            width,
        };
        self.lookup.insert(key, self.blocks.len());
        if let VarKey::Pose(_) = key {
            self.latest_pose = Some(self.blocks.len());
        }
        self.blocks.push(block);
        self.dim += width;
        block
    }

    /// Time index and block of the most recent pose.
    pub fn latest_pose(&self) -> Option<(usize, Block)> {
        self.latest_pose.map(|i| {
            let b = self.blocks[i];
            match b.key {
                VarKey::Pose(t) => (t, b),
                VarKey::Landmark(_) => unreachable!("latest pose points at a landmark"),
            }
        })
    }

    /// Registered landmark ids, ascending.
    pub fn landmark_ids(&self) -> Vec<usize> {
        let mut ids: Vec<usize> = self
            .blocks
            .iter()
            .filter_map(|b| match b.key {
                VarKey::Landmark(j) => Some(j),
                VarKey::Pose(_) => None,
            })
            .collect();
        ids.sort_unstable();
        ids
    }

    pub fn num_poses(&self) -> usize {
        self.blocks
            .iter()
            .filter(|b| matches!(b.key, VarKey::Pose(_)))
            .count()
    }
}

/// Whether an update may register landmarks it has not seen before.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Registration {
    Forbid,
    AutoRegister,
}

#[derive(Debug, Clone)]
pub struct GaussianBelief {
    index: VariableIndex,
    info_matrix: DMatrix<f64>,
    info_vector: DVector<f64>,
    mean: DVector<f64>,
}

impl GaussianBelief {
    /// Belief over the initial pose only.
    pub fn prior(mu0: &Vector3<f64>, sigma0: &Matrix3<f64>) -> Result<Self> {
        let sigma = DMatrix::from_fn(3, 3, |i, j| sigma0[(i, j)]);
        let chol = cholesky(&sigma, "prior covariance")?;
        let mut info = chol.inverse();
        symmetrize(&mut info);
        let mut index = VariableIndex::default();
        index.push(VarKey::Pose(0));
        let mean = DVector::from_column_slice(mu0.as_slice());
        let info_vector = &info * &mean;
        Ok(Self {
            index,
            info_matrix: info,
            info_vector,
            mean,
        })
    }

    pub fn dim(&self) -> usize {
        self.index.dim()
    }

    pub fn index(&self) -> &VariableIndex {
        &self.index
    }

    pub fn info_matrix(&self) -> &DMatrix<f64> {
        &self.info_matrix
    }

    pub fn info_vector(&self) -> &DVector<f64> {
        &self.info_vector
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    fn block_mean(&self, b: Block) -> DVector<f64> {
        self.mean.rows(b.offset, b.width).into_owned()
    }

    pub fn latest_pose_mean(&self) -> Vector3<f64> {
        let (_, b) = self.index.latest_pose().expect("belief has a pose");
        Vector3::from_column_slice(self.mean.rows(b.offset, 3).as_slice())
    }

    pub fn latest_pose_time(&self) -> usize {
        self.index.latest_pose().expect("belief has a pose").0
    }

    pub fn pose_mean(&self, t: usize) -> Option<Pose> {
        self.index
            .get(VarKey::Pose(t))
            .map(|b| Pose::new(self.mean[b.offset], self.mean[b.offset + 1], self.mean[b.offset + 2]))
    }

    /// Landmark means sorted by id.
    pub fn landmark_means(&self) -> Vec<Landmark> {
        self.index
            .landmark_ids()
            .into_iter()
            .map(|j| {
                let b = self.index.get(VarKey::Landmark(j)).unwrap();
                Landmark::new(j, self.mean[b.offset], self.mean[b.offset + 1])
            })
            .collect()
    }

    /// Adds `sum_i J_i x_i ~ N(innovation + sum_i J_i xbar_i, omega^-1)`
    /// linearized at the current mean.
    fn add_factor(&mut self, jacobians: &[(Block, DMatrix<f64>)], omega: &DMatrix<f64>, innovation: &DVector<f64>) {
        let mut rhs = innovation.clone();
        for (b, j) in jacobians {
            rhs += j * self.block_mean(*b);
        }
        let weighted_rhs = omega * rhs;
        for (bi, ji) in jacobians {
            let jt_omega = ji.transpose() * omega;
            let mut eta = self.info_vector.rows_mut(bi.offset, bi.width);
            eta += ji.transpose() * &weighted_rhs;
            for (bj, jj) in jacobians {
                let mut view = self
                    .info_matrix
                    .view_mut((bi.offset, bj.offset), (bi.width, bj.width));
                view += &jt_omega * jj;
            }
        }
    }

    /// Appends the next pose with a motion factor from the latest pose.
    pub fn predict(&self, action: &Vector2<f64>, noise: &NoiseSpec) -> Result<Self> {
        let len = action.norm();
        if !(len > 0.0 && len.is_finite()) {
            return Err(PlanError::InvalidArgument(format!(
                "motion factor needs a nonzero finite displacement, got ({}, {})",
                action[0], action[1]
            )));
        }
        let variances = noise.motion_variances(action);
        if variances.iter().any(|v| *v <= 0.0) {
            return Err(PlanError::NotPositiveDefinite {
                what: "motion noise".into(),
            });
        }
        let (t, prev) = self.index.latest_pose().expect("belief has a pose");
        let prev_mean = self.latest_pose_mean();
        let next_mean = motion_mean(&prev_mean, action);

        let mut index = self.index.clone();
        let next = index.push(VarKey::Pose(t + 1));
        let dim = index.dim();
        let mut info_matrix = DMatrix::zeros(dim, dim);
        info_matrix
            .view_mut((0, 0), (self.dim(), self.dim()))
            .copy_from(&self.info_matrix);
        let mut info_vector = DVector::zeros(dim);
        info_vector.rows_mut(0, self.dim()).copy_from(&self.info_vector);
        let mut mean = DVector::zeros(dim);
        mean.rows_mut(0, self.dim()).copy_from(&self.mean);
        mean.rows_mut(next.offset, 3).copy_from(&next_mean);

        let mut out = Self {
            index,
            info_matrix,
            info_vector,
            mean,
        };
        // Residual x' - f(x, a); the heading of f depends only on the action.
        let j_prev = -DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1.0, 0.0]));
        let j_next = DMatrix::identity(3, 3);
        let omega = DMatrix::from_diagonal(&DVector::from_iterator(3, variances.iter().map(|v| 1.0 / v)));
        // The new pose sits exactly at the motion prediction, so the
        // innovation is zero.
        let innovation = DVector::zeros(3);
        out.add_factor(&[(prev, j_prev), (next, j_next)], &omega, &innovation);
        Ok(out)
    }

    fn insert_observations(
        &mut self,
        obs: &Observation,
        noise: &NoiseSpec,
        sensor: SensorModel,
        registration: Registration,
    ) -> Result<()> {
        let (_, pose_block) = self.index.latest_pose().expect("belief has a pose");
        let omega = DMatrix::from_diagonal(&DVector::from_iterator(2, noise.obs_cov.iter().map(|v| 1.0 / v)));
        for (id, z) in &obs.entries {
            let pose = self.latest_pose_mean();
            let lm_block = match (self.index.get(VarKey::Landmark(*id)), registration) {
                (Some(b), _) => b,
                (None, Registration::Forbid) => return Err(PlanError::UnregisteredLandmark(*id)),
                (None, Registration::AutoRegister) => self.register_landmark(*id, sensor.invert(&pose, z)),
            };
            let lm = Vector2::new(self.mean[lm_block.offset], self.mean[lm_block.offset + 1]);
            let (jp, jl) = sensor.jacobians(&pose, &lm);
            let innovation = z - sensor.predict(&pose, &lm);
            self.add_factor(
                &[
                    (pose_block, DMatrix::from_column_slice(2, 3, jp.as_slice())),
                    (lm_block, DMatrix::from_column_slice(2, 2, jl.as_slice())),
                ],
                &omega,
                &DVector::from_column_slice(innovation.as_slice()),
            );
        }
        Ok(())
    }

    fn register_landmark(&mut self, id: usize, initial: Vector2<f64>) -> Block {
        let block = self.index.push(VarKey::Landmark(id));
        let dim = self.index.dim();
        self.info_matrix = self.info_matrix.clone().resize(dim, dim, 0.0);
        self.info_vector = self.info_vector.clone().resize_vertically(dim, 0.0);
        self.mean = self.mean.clone().resize_vertically(dim, 0.0);
        self.mean.rows_mut(block.offset, 2).copy_from(&initial);
        block
    }

    fn resolve(&mut self) -> Result<Cholesky<f64, Dyn>> {
        let chol = cholesky(&self.info_matrix, "information matrix")?;
        self.mean = chol.solve(&self.info_vector);
        Ok(chol)
    }

    /// Adds one observation factor per entry and re-solves the mean.
    /// Every observed landmark must already be registered.
    pub fn update(&self, obs: &Observation, noise: &NoiseSpec, sensor: SensorModel) -> Result<Self> {
        Ok(self.update_with_marginal(obs, noise, sensor)?.0)
    }

    /// [`Self::update`] that registers unseen landmarks at their first
    /// sighting. Used outside of planning only.
    pub fn update_mapping(&self, obs: &Observation, noise: &NoiseSpec, sensor: SensorModel) -> Result<Self> {
        let mut out = self.clone();
        out.insert_observations(obs, noise, sensor, Registration::AutoRegister)?;
        out.resolve()?;
        Ok(out)
    }

    /// Update plus the subset marginal of the posterior, sharing one
    /// factorization of the information matrix.
    pub fn update_with_marginal(
        &self,
        obs: &Observation,
        noise: &NoiseSpec,
        sensor: SensorModel,
    ) -> Result<(Self, SubsetMarginal)> {
        let mut out = self.clone();
        out.insert_observations(obs, noise, sensor, Registration::Forbid)?;
        let chol = out.resolve()?;
        let marginal = out.subset_marginal_with(&chol)?;
        Ok((out, marginal))
    }

    fn subset_layout(&self) -> (Vec<usize>, Vec<usize>, Vec<usize>) {
        let (_, pose) = self.index.latest_pose().expect("belief has a pose");
        let ids = self.index.landmark_ids();
        let mut rows: Vec<usize> = (pose.offset..pose.offset + 3).collect();
        let mut sizes = vec![POSE_DIM];
        for j in &ids {
            let b = self.index.get(VarKey::Landmark(*j)).unwrap();
            rows.extend(b.offset..b.offset + 2);
            sizes.push(LANDMARK_DIM);
        }
        (rows, sizes, ids)
    }

    fn subset_marginal_with(&self, chol: &Cholesky<f64, Dyn>) -> Result<SubsetMarginal> {
        let (rows, sizes, ids) = self.subset_layout();
        let d = rows.len();
        let mut selector = DMatrix::zeros(self.dim(), d);
        for (c, r) in rows.iter().enumerate() {
            selector[(*r, c)] = 1.0;
        }
        let cols = chol.solve(&selector);
        let mut cov = DMatrix::from_fn(d, d, |i, j| cols[(rows[i], j)]);
        symmetrize(&mut cov);
        let mean = DVector::from_iterator(d, rows.iter().map(|r| self.mean[*r]));
        SubsetMarginal::new(cov, mean, sizes, ids)
    }

    /// Marginal over the latest pose and all landmarks.
    pub fn subset_marginal(&self) -> Result<SubsetMarginal> {
        let chol = cholesky(&self.info_matrix, "information matrix")?;
        self.subset_marginal_with(&chol)
    }

    /// Full covariance (dense inverse of the information matrix).
    pub fn covariance(&self) -> Result<DMatrix<f64>> {
        let mut cov = cholesky(&self.info_matrix, "information matrix")?.inverse();
        symmetrize(&mut cov);
        Ok(cov)
    }

    /// Draws the next pose and all landmark positions from the predictive
    /// marginal of the latest pose and the map.
    pub fn sample_next_state<R: Rng + ?Sized>(
        &self,
        action: &Vector2<f64>,
        noise: &NoiseSpec,
        rng: &mut R,
    ) -> Result<(Pose, Vec<Landmark>)> {
        Ok(self.subset_marginal()?.sample_next_state(action, noise, rng))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetBoundPair {
    pub lower: f64,
    pub upper: f64,
    pub level: usize,
}

/// Covariance (and its inverse) over the latest pose followed by every
/// landmark in id order.
#[derive(Debug, Clone)]
pub struct SubsetMarginal {
    cov: DMatrix<f64>,
    info: DMatrix<f64>,
    mean: DVector<f64>,
    block_sizes: Vec<usize>,
    landmark_ids: Vec<usize>,
    chol_l: DMatrix<f64>,
    log_det: f64,
}

impl SubsetMarginal {
    pub fn new(cov: DMatrix<f64>, mean: DVector<f64>, block_sizes: Vec<usize>, landmark_ids: Vec<usize>) -> Result<Self> {
        let d: usize = block_sizes.iter().sum();
        if cov.nrows() != d || mean.len() != d {
            return Err(PlanError::DimensionMismatch {
                expected: d,
                actual: cov.nrows(),
            });
        }
        let chol = cholesky(&cov, "subset covariance")?;
        let log_det = log_det_from_cholesky(&chol);
        let mut info = chol.inverse();
        symmetrize(&mut info);
        Ok(Self {
            cov,
            info,
            mean,
            block_sizes,
            landmark_ids,
            chol_l: chol.l(),
            log_det,
        })
    }

    /// Marginal with one block per variable of the given sizes and a zero mean.
    pub fn from_cov(cov: DMatrix<f64>, block_sizes: Vec<usize>) -> Result<Self> {
        let d = cov.nrows();
        Self::new(cov, DVector::zeros(d), block_sizes, Vec::new())
    }

    pub fn dim(&self) -> usize {
        self.cov.nrows()
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    /// Inverse of the subset covariance, i.e. the Schur complement of the
    /// full information matrix onto the subset.
    pub fn info(&self) -> &DMatrix<f64> {
        &self.info
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn block_sizes(&self) -> &[usize] {
        &self.block_sizes
    }

    pub fn landmark_ids(&self) -> &[usize] {
        &self.landmark_ids
    }

    pub fn log_det(&self) -> f64 {
        self.log_det
    }

    /// Highest simplification level; bounds there are exact.
    pub fn top_level(&self) -> usize {
        let n = self.block_sizes.len().max(1);
        (usize::BITS - (n - 1).leading_zeros()) as usize
    }

    /// `det(cov)^(1/d)`.
    pub fn det_root(&self) -> f64 {
        (self.log_det / self.dim() as f64).exp()
    }

    /// Raw Fischer bounds on `det_root` with blocks merged in runs of
    /// `2^level`: product of covariance block determinants from above,
    /// inverse product of information block determinants from below.
    pub(crate) fn raw_level_bounds(&self, level: usize) -> Result<(f64, f64)> {
        let group = 1usize << level.min(usize::BITS as usize - 1);
        let mut start = 0;
        let mut log_upper = 0.0;
        let mut log_lower = 0.0;
        for chunk in self.block_sizes.chunks(group) {
            let w: usize = chunk.iter().sum();
            let cov_block = self.cov.view((start, start), (w, w)).into_owned();
            let info_block = self.info.view((start, start), (w, w)).into_owned();
            log_upper += log_det_spd(&cov_block, "covariance block")?;
            log_lower -= log_det_spd(&info_block, "information block")?;
            start += w;
        }
        let d = self.dim() as f64;
        Ok(((log_lower / d).exp(), (log_upper / d).exp()))
    }

    /// Exact-or-widened bounds at `level`, intersected with `previous`.
    pub(crate) fn refine_bounds(&self, level: usize, previous: Option<DetBoundPair>) -> Result<DetBoundPair> {
        let top = self.top_level();
        if level > top {
            return Err(PlanError::InvalidArgument(format!(
                "simplification level {level} above top level {top}"
            )));
        }
        if level == top {
            let exact = self.det_root();
            debug_assert!(previous.is_none_or(|p| p.lower <= exact && exact <= p.upper));
            return Ok(DetBoundPair {
                lower: exact,
                upper: exact,
                level,
            });
        }
        let (lo, up) = self.raw_level_bounds(level)?;
        let mut pair = DetBoundPair {
            lower: lo * (1.0 - BOUND_SLACK),
            upper: up * (1.0 + BOUND_SLACK),
            level,
        };
        if let Some(p) = previous {
            pair.lower = pair.lower.max(p.lower);
            pair.upper = pair.upper.min(p.upper);
        }
        Ok(pair)
    }

    /// Deterministic bounds on [`Self::det_root`] at simplification level
    /// `level`; exact at [`Self::top_level`] and never wider at a higher level.
    pub fn det_root_bounds(&self, level: usize) -> Result<DetBoundPair> {
        let mut pair = None;
        for s in 0..=level {
            pair = Some(self.refine_bounds(s, pair)?);
        }
        Ok(pair.expect("at least one level"))
    }

    /// Gaussian differential entropy.
    pub fn entropy(&self) -> f64 {
        let d = self.dim() as f64;
        0.5 * d * (1.0 + (2.0 * std::f64::consts::PI).ln()) + 0.5 * self.log_det
    }

    /// Joint draw of the latest pose and the landmarks, followed by a noisy
    /// motion step.
    pub fn sample_next_state<R: Rng + ?Sized>(
        &self,
        action: &Vector2<f64>,
        noise: &NoiseSpec,
        rng: &mut R,
    ) -> (Pose, Vec<Landmark>) {
        let d = self.dim();
        let u = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
        let x = &self.mean + &self.chol_l * u;
        let pose = Pose::new(x[0], x[1], x[2]);
        let landmarks = self
            .landmark_ids
            .iter()
            .enumerate()
            .map(|(k, id)| Landmark::new(*id, x[3 + 2 * k], x[4 + 2 * k]))
            .collect();
        (sample_motion(&pose, action, noise, rng), landmarks)
    }
}

fn check_same_dim(prior: &SubsetMarginal, post: &SubsetMarginal) -> Result<()> {
    if prior.dim() != post.dim() {
        return Err(PlanError::DimensionMismatch {
            expected: prior.dim(),
            actual: post.dim(),
        });
    }
    Ok(())
}

/// D-optimality information gain: drop of the covariance determinant root
/// from `prior` to `post`.
pub fn dopt_gain(prior: &SubsetMarginal, post: &SubsetMarginal) -> Result<f64> {
    check_same_dim(prior, post)?;
    Ok(prior.det_root() - post.det_root())
}

/// `(lower, upper)` on [`dopt_gain`] with both beliefs bounded at `level`.
pub fn dopt_gain_bounds(prior: &SubsetMarginal, post: &SubsetMarginal, level: usize) -> Result<(f64, f64)> {
    check_same_dim(prior, post)?;
    let p = prior.det_root_bounds(level)?;
    let q = post.det_root_bounds(level)?;
    Ok(gain_bounds(&p, &q))
}

pub(crate) fn gain_bounds(prior: &DetBoundPair, post: &DetBoundPair) -> (f64, f64) {
    (prior.lower - post.upper, prior.upper - post.lower)
}

//! Belief-space planning under probabilistic constraints on a Gaussian
//! landmark-SLAM belief.
//!
//! The crate is organised bottom-up:
//!
//! * [`sim_world`]: poses, landmarks, motion and sensor models, sampling.
//! * [`gaussian_belief`]: information-form belief, D-optimality gain and
//!   simplified determinant bounds.
//! * [`path_gen`]: probabilistic roadmap and diverse candidate paths.
//! * [`belief_tree`]: sampled future-belief trees and their laces.
//! * [`constraint_eval`]: adaptive feasibility check of the chance
//!   constraint and the sample value-at-risk.
//! * [`planners`]: the four planners built on top.
//! * [`scenario`] and [`experiment`]: configuration, runs and artifacts.

pub mod belief_tree;
pub mod constraint_eval;
pub mod error;
pub mod experiment;
pub mod gaussian_belief;
pub mod linalg;
pub mod path_gen;
pub mod planners;
pub mod scenario;
pub mod sim_world;

pub use error::{PlanError, Result};

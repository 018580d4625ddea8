//! The arm: kinematics, collision checking, motion planning and the
//! pick/place skills built on them.

pub mod chain;
pub mod collision;
pub mod ik;
pub mod problem;
pub mod rrt;
pub mod skills;

use thiserror::Error;

pub use chain::{ChainConfig, DhJoint, KinematicChain};
pub use collision::{
    collision_check, contacts, link_capsules, segment_is_free, AttachedObject, Capsule, ContactReport, OrientedBox,
    PlanningScene, SceneObject, WorkspaceBounds, CONTACT_TOLERANCE,
};
pub use ik::{IkConfig, IkSolver};
pub use problem::PlanningProblem;
pub use rrt::{plan_rrt_connect, MotionPlan, RrtConfig};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ArmError {
    #[error("joint vector has {found} entries, chain has {expected}")]
    Dimension { expected: usize, found: usize },
    #[error("invalid chain: {0}")]
    InvalidChain(String),
    #[error("start configuration is in collision")]
    StartInCollision,
    #[error("invalid document: {0}")]
    InvalidDocument(String),
    #[error("unknown object {0:?}")]
    UnknownObject(String),
    #[error(transparent)]
    Geometry(#[from] crate::geometry::GeometryError),
}

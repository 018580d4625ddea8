//! The simulated workspace: ground-truth objects, detection and task scoring.

pub mod detection;
pub mod evaluate;
pub mod scenario;
pub mod world;

pub use detection::{detect_objects, DetectionSnapshot};
pub use evaluate::{evaluate_task, TaskReport, TaskSpec};
pub use scenario::{ObjectSpec, Scenario, ScenarioDoc, ScenarioError};
pub use world::{Attachment, GripperState, Workspace, WorldObject, WorldState};

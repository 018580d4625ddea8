//! Stand-alone planning problems: a start, a goal and the obstacles between them.

use serde::{Deserialize, Serialize};

use super::collision::{PlanningScene, SceneObject, WorkspaceBounds};
use super::{ArmError, KinematicChain};
use crate::geometry::JointConfig;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanningProblem {
    pub name: String,
    pub start: JointConfig,
    pub goal: JointConfig,
    #[serde(default)]
    pub bounds: WorkspaceBounds,
    pub obstacles: Vec<SceneObject>,
}

impl PlanningProblem {
    pub fn parse(text: &str) -> Result<Self, ArmError> {
        serde_json::from_str(text).map_err(|e| ArmError::InvalidDocument(e.to_string()))
    }

    /// Checks joint counts and that every obstacle id is unique.
    pub fn check(&self, chain: &KinematicChain) -> Result<(), ArmError> {
        chain.check_dof(&self.start)?;
        chain.check_dof(&self.goal)?;
        for (i, o) in self.obstacles.iter().enumerate() {
            if self.obstacles[..i].iter().any(|p| p.id == o.id) {
                return Err(ArmError::InvalidDocument(format!("duplicate obstacle {:?}", o.id)));
            }
        }
        Ok(())
    }

    pub fn scene(&self) -> PlanningScene {
        let mut scene = PlanningScene::with_bounds(self.bounds);
        for o in &self.obstacles {
            scene.upsert(o.clone());
        }
        scene
    }
}

//! Scenario documents: the table, the objects on it and what the task asks for.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::evaluate::TaskSpec;
use super::world::{GripperState, Workspace, WorldObject, WorldState};
use crate::arm::CONTACT_TOLERANCE;
use crate::geometry::{JointConfig, Pose};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScenarioError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("objects {0:?} and {1:?} overlap")]
    Overlap(String, String),
    #[error("duplicate object uid {0:?}")]
    DuplicateUid(String),
    #[error("object {0:?} is below the table surface")]
    BelowTable(String),
    #[error("object {0:?} has non-positive dimensions")]
    BadDims(String),
    #[error("workspace radius must be positive")]
    BadWorkspace,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uid: Option<String>,
    #[serde(rename = "class")]
    pub object_class: String,
    pub pose: Pose,
    pub dims: [f64; 3],
    /// z-rotation symmetry order; defaults by class (node 4, link 2, other 1).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub symmetry: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDoc {
    pub name: String,
    pub table_frame: Pose,
    pub workspace: Workspace,
    /// Static, known geometry such as the table top.
    #[serde(default)]
    pub fixtures: Vec<ObjectSpec>,
    pub objects: Vec<ObjectSpec>,
    pub task: TaskSpec,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub world: WorldState,
    pub task: TaskSpec,
}

fn default_symmetry(class: &str) -> usize {
    match class {
        "node" => 4,
        "link" => 2,
        _ => 1,
    }
}

impl ScenarioDoc {
    pub fn parse(text: &str) -> Result<Self, ScenarioError> {
        serde_json::from_str(text).map_err(|e| ScenarioError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario documents always serialize")
    }

    /// Builds the world with the arm at `home`, gripper open.
    pub fn load(&self, home: JointConfig) -> Result<Scenario, ScenarioError> {
        if !(self.workspace.radius > 0.0) {
            return Err(ScenarioError::BadWorkspace);
        }
        let mut objects: Vec<WorldObject> = Vec::new();
        let mut counters: std::collections::BTreeMap<&str, usize> = Default::default();
        let specs = self
            .fixtures
            .iter()
            .map(|s| (s, true))
            .chain(self.objects.iter().map(|s| (s, false)));
        for (spec, fixed) in specs {
            let n = counters.entry(spec.object_class.as_str()).or_default();
            *n += 1;
            let uid = spec
                .uid
                .clone()
                .unwrap_or_else(|| format!("{}#{}", spec.object_class, n));
            if objects.iter().any(|o| o.uid == uid) {
                return Err(ScenarioError::DuplicateUid(uid));
            }
            if spec.dims.iter().any(|d| !(*d > 0.0) || !d.is_finite()) {
                return Err(ScenarioError::BadDims(uid));
            }
            if !spec.pose.translation.iter().all(|v| v.is_finite()) {
                return Err(ScenarioError::BadDims(uid));
            }
            if !fixed && spec.pose.translation.z < self.table_frame.translation.z {
                return Err(ScenarioError::BelowTable(uid));
            }
            objects.push(WorldObject {
                uid,
                object_class: spec.object_class.clone(),
                pose: spec.pose,
                initial_pose: spec.pose,
                dims: spec.dims,
                symmetry_order: spec
                    .symmetry
                    .unwrap_or_else(|| default_symmetry(&spec.object_class))
                    .max(1),
                fixed,
            });
        }
        for (i, a) in objects.iter().enumerate() {
            for b in &objects[i + 1..] {
                if a.shape().intersects(&b.shape(), CONTACT_TOLERANCE) {
                    return Err(ScenarioError::Overlap(a.uid.clone(), b.uid.clone()));
                }
            }
        }
        Ok(Scenario {
            name: self.name.clone(),
            world: WorldState {
                objects,
                table_frame: self.table_frame,
                workspace: self.workspace,
                q: home,
                gripper: GripperState::Open,
                attached: None,
            },
            task: self.task.clone(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assets;

    #[test]
    fn shipped_scenes_load() {
        for (name, text) in assets::SCENES {
            let doc = ScenarioDoc::parse(text).unwrap_or_else(|e| panic!("{name}: {e}"));
            let s = doc
                .load(JointConfig::zeros(6))
                .unwrap_or_else(|e| panic!("{name}: {e}"));
            let nodes = s.world.objects.iter().filter(|o| o.object_class == "node").count();
            let links = s.world.objects.iter().filter(|o| o.object_class == "link").count();
            assert_eq!(links, 1, "{name}");
            assert!(nodes == 2 || nodes == 3, "{name}");
            let back = ScenarioDoc::parse(&doc.to_json()).unwrap();
            assert_eq!(back.objects.len(), doc.objects.len());
            for (a, b) in back.objects.iter().zip(&doc.objects) {
                assert_eq!(a.pose.translation, b.pose.translation);
                assert!(crate::geometry::rotation_distance(&a.pose, &b.pose) < 1e-9);
            }
            assert_eq!(back.task, doc.task);
        }
    }

    #[test]
    fn overlapping_objects_fail_to_load() {
        let mut doc = ScenarioDoc::parse(assets::TASK1_SCENE).unwrap();
        let first = doc.objects[0].clone();
        doc.objects.push(ObjectSpec {
            uid: Some("copy".into()),
            ..first
        });
        assert!(matches!(
            doc.load(JointConfig::zeros(6)),
            Err(ScenarioError::Overlap(_, _))
        ));
    }

    #[test]
    fn malformed_document_reports_position() {
        let err = ScenarioDoc::parse("{\n \"name\": 3\n}").unwrap_err();
        assert!(matches!(err, ScenarioError::Parse { line: 2, .. }));
    }
}

//! Component registry: which component offers which operations, predicates,
//! symbols and data streams, plus the parameter schema of every operation.

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ParamKind {
    /// Name of a world-frame symbol (waypoint or region).
    Waypoint,
    /// Name of a symbol taught relative to an object.
    ObjectPose,
    /// Canonical predicate expression text.
    Predicate,
    /// Session id of a detected object.
    ObjectId,
    /// Distance in meters within `[min, max]`.
    Meters { min: f64, max: f64, default: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamSpec {
    pub name: String,
    pub kind: ParamKind,
    pub required: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperationSpec {
    pub name: String,
    pub component: String,
    pub params: Vec<ParamSpec>,
    pub summary: String,
}

impl OperationSpec {
    pub fn param(&self, name: &str) -> Option<&ParamSpec> {
        self.params.iter().find(|p| p.name == name)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComponentEntry {
    pub name: String,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub predicates: Vec<String>,
    pub symbols: Vec<String>,
    pub operations: Vec<OperationSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComponentRegistry {
    pub components: Vec<ComponentEntry>,
}

pub const BACKOFF_MIN: f64 = 0.01;
pub const BACKOFF_MAX: f64 = 0.10;
pub const BACKOFF_DEFAULT: f64 = 0.05;

fn req(name: &str, kind: ParamKind) -> ParamSpec {
    ParamSpec {
        name: name.into(),
        kind,
        required: true,
    }
}

fn backoff() -> ParamSpec {
    ParamSpec {
        name: "backoff".into(),
        kind: ParamKind::Meters {
            min: BACKOFF_MIN,
            max: BACKOFF_MAX,
            default: BACKOFF_DEFAULT,
        },
        required: false,
    }
}

fn op(component: &str, name: &str, params: Vec<ParamSpec>, summary: &str) -> OperationSpec {
    OperationSpec {
        name: name.into(),
        component: component.into(),
        params,
        summary: summary.into(),
    }
}

fn strings(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| s.to_string()).collect()
}

impl ComponentRegistry {
    /// The registry of the simulated workcell.
    pub fn standard() -> Self {
        let arm = ComponentEntry {
            name: "Arm".into(),
            inputs: strings(&["joint_states", "planning_scene"]),
            outputs: strings(&["joint_trajectory"]),
            predicates: vec![],
            symbols: strings(&["home"]),
            operations: vec![
                op("Arm", "MoveToHome", vec![], "straight joint-space move to home"),
                op("Arm", "PlanToHome", vec![], "collision-free planned move to home"),
                op(
                    "Arm",
                    "MoveToWaypoint",
                    vec![req("waypoint", ParamKind::Waypoint)],
                    "straight joint-space move to a taught waypoint",
                ),
                op(
                    "Arm",
                    "PlanToWaypoint",
                    vec![req("waypoint", ParamKind::Waypoint)],
                    "planned move to a taught waypoint",
                ),
                op(
                    "Arm",
                    "MoveRelativeToObject",
                    vec![req("pose", ParamKind::ObjectPose)],
                    "straight move to a pose taught relative to a detected object",
                ),
                op(
                    "Arm",
                    "DisableCollisions",
                    vec![req("object", ParamKind::ObjectId)],
                    "remove an object from the planning scene",
                ),
                op(
                    "Arm",
                    "EnableCollisions",
                    vec![req("object", ParamKind::ObjectId)],
                    "restore an object to the planning scene",
                ),
                op(
                    "Arm",
                    "SmartGrasp",
                    vec![
                        req("predicate", ParamKind::Predicate),
                        req("grasp", ParamKind::ObjectPose),
                        backoff(),
                    ],
                    "grasp the best object matching a query",
                ),
                op(
                    "Arm",
                    "SmartRelease",
                    vec![
                        req("predicate", ParamKind::Predicate),
                        req("place", ParamKind::ObjectPose),
                        backoff(),
                    ],
                    "place the held object relative to the best matching object",
                ),
            ],
        };
        let gripper = ComponentEntry {
            name: "Gripper".into(),
            inputs: strings(&["gripper_command"]),
            outputs: strings(&["gripper_state"]),
            predicates: strings(&["gripper_closed"]),
            symbols: vec![],
            operations: vec![
                op("Gripper", "OpenGripper", vec![], "open the gripper"),
                op("Gripper", "CloseGripper", vec![], "close the gripper"),
            ],
        };
        let perception = ComponentEntry {
            name: "Perception".into(),
            inputs: strings(&["rgbd_camera"]),
            outputs: strings(&["detected_objects"]),
            predicates: vec![],
            symbols: strings(&["detected objects"]),
            operations: vec![op(
                "Perception",
                "DetectObjects",
                vec![],
                "refresh the detected object list",
            )],
        };
        let predicator = ComponentEntry {
            name: "Predicator".into(),
            inputs: strings(&["detected_objects"]),
            outputs: strings(&["predicates"]),
            predicates: strings(&[
                "class",
                "LEFT_OF",
                "RIGHT_OF",
                "IN_FRONT_OF",
                "BEHIND",
                "ABOVE",
                "BELOW",
            ]),
            symbols: strings(&["waypoints", "object poses", "regions"]),
            operations: vec![op(
                "Predicator",
                "KnowledgeTest",
                vec![req("predicate", ParamKind::Predicate)],
                "succeed iff some detected object satisfies the predicate",
            )],
        };
        Self {
            components: vec![arm, gripper, perception, predicator],
        }
    }

    pub fn operations(&self) -> impl Iterator<Item = &OperationSpec> {
        self.components.iter().flat_map(|c| c.operations.iter())
    }

    pub fn operation(&self, name: &str) -> Option<&OperationSpec> {
        self.operations().find(|o| o.name == name)
    }

    pub fn operation_names(&self) -> Vec<&str> {
        self.operations().map(|o| o.name.as_str()).collect()
    }
}

impl Default for ComponentRegistry {
    fn default() -> Self {
        Self::standard()
    }
}

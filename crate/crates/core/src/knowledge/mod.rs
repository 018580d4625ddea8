//! What the robot knows: named symbols, the latest detection snapshot, predicate
//! evaluation, goal ranking and the component registry.

pub mod cost;
pub mod predicate;
pub mod query;
pub mod registry;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use tracing::warn;

use crate::geometry::Pose;

pub use cost::{compute_cost, CostWeights};
pub use predicate::{Atom, PredicateExpr, PredicateParseError, Relation};
pub use query::{pose_query, GoalCandidate, QueryContext};
pub use registry::{ComponentRegistry, OperationSpec, ParamKind};

/// Frame name meaning the world frame.
pub const WORLD: &str = "WORLD";
/// Reserved symbol name for the arm's home configuration.
pub const HOME: &str = "home";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KnowledgeError {
    #[error("symbol name must not be empty")]
    EmptyName,
    #[error("\"home\" is reserved for the home symbol")]
    ReservedName,
    #[error("unknown symbol {0:?}")]
    UnknownSymbol(String),
    #[error("symbol {0:?} is stale: its reference object was not re-detected")]
    StaleSymbol(String),
    #[error("cannot resolve reference frame {0:?}")]
    UnresolvedFrame(String),
    #[error("invalid cost weights: {0}")]
    InvalidWeights(String),
    #[error("forward kinematics failed for the current configuration: {0}")]
    Kinematics(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SymbolKind {
    Waypoint,
    ObjectPose,
    Home,
    Region,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SymbolEntry {
    pub name: String,
    pub kind: SymbolKind,
    /// Pose relative to `reference_frame`.
    pub pose: Pose,
    #[serde(default = "world_frame")]
    pub reference_frame: String,
    #[serde(default)]
    pub stale: bool,
}

fn world_frame() -> String {
    WORLD.to_string()
}

impl SymbolEntry {
    pub fn new(name: impl Into<String>, kind: SymbolKind, pose: Pose, frame: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            kind,
            pose,
            reference_frame: frame.into(),
            stale: false,
        }
    }

    pub fn waypoint(name: impl Into<String>, pose: Pose) -> Self {
        Self::new(name, SymbolKind::Waypoint, pose, WORLD)
    }

    pub fn is_world_relative(&self) -> bool {
        self.reference_frame == WORLD
    }
}

/// One object instance in a detection snapshot. `pose` is the box center.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectedObject {
    pub id: String,
    #[serde(rename = "class")]
    pub object_class: String,
    pub pose: Pose,
    pub dims: [f64; 3],
    /// Transforms mapping the object onto itself; the first entry is identity.
    pub symmetries: Vec<Pose>,
}

impl DetectedObject {
    /// `order`-fold symmetry about the object's z axis.
    pub fn z_symmetries(order: usize) -> Vec<Pose> {
        let n = order.max(1);
        (0..n)
            .map(|k| Pose::rot_z(std::f64::consts::TAU * k as f64 / n as f64))
            .collect()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct KnowledgeStore {
    symbols: BTreeMap<String, SymbolEntry>,
    objects: Vec<DetectedObject>,
    detections: u64,
}

impl KnowledgeStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds or replaces a symbol. Replacing logs a warning; the latest entry wins.
    pub fn register_symbol(&mut self, mut entry: SymbolEntry) -> Result<(), KnowledgeError> {
        if entry.name.trim().is_empty() {
            return Err(KnowledgeError::EmptyName);
        }
        if entry.name == HOME && entry.kind != SymbolKind::Home {
            return Err(KnowledgeError::ReservedName);
        }
        entry.stale =
            entry.kind == SymbolKind::ObjectPose && self.detections > 0 && !self.frame_exists(&entry.reference_frame);
        if self.symbols.contains_key(&entry.name) {
            warn!(symbol = %entry.name, "overwriting existing symbol");
        }
        self.symbols.insert(entry.name.clone(), entry);
        Ok(())
    }

    pub fn symbol(&self, name: &str) -> Option<&SymbolEntry> {
        self.symbols.get(name)
    }

    /// All symbols, ordered by name.
    pub fn list_symbols(&self) -> Vec<&SymbolEntry> {
        self.symbols.values().collect()
    }

    pub fn objects(&self) -> &[DetectedObject] {
        &self.objects
    }

    pub fn object(&self, id: &str) -> Option<&DetectedObject> {
        self.objects.iter().find(|o| o.id == id)
    }

    pub fn detection_count(&self) -> u64 {
        self.detections
    }

    /// Replaces the object snapshot and re-flags object-relative symbols.
    pub fn ingest_detection(&mut self, objects: Vec<DetectedObject>) {
        self.objects = objects;
        self.detections += 1;
        let stale: Vec<String> = self
            .symbols
            .values()
            .filter(|e| e.kind == SymbolKind::ObjectPose && !self.frame_exists(&e.reference_frame))
            .map(|e| e.name.clone())
            .collect();
        for entry in self.symbols.values_mut() {
            if entry.kind == SymbolKind::ObjectPose {
                entry.stale = stale.contains(&entry.name);
            }
        }
    }

    /// Updates the believed pose of an object, e.g. after the robot placed it.
    pub fn update_object_pose(&mut self, id: &str, pose: Pose) -> bool {
        match self.objects.iter_mut().find(|o| o.id == id) {
            Some(o) => {
                o.pose = pose;
                true
            }
            None => false,
        }
    }

    fn frame_exists(&self, name: &str) -> bool {
        name == WORLD || self.symbols.contains_key(name) || self.object(name).is_some()
    }

    /// World pose of a named frame: `WORLD`, a symbol, or a detected object id.
    pub fn frame_pose(&self, name: &str) -> Result<Pose, KnowledgeError> {
        self.frame_pose_depth(name, 0)
    }

    fn frame_pose_depth(&self, name: &str, depth: usize) -> Result<Pose, KnowledgeError> {
        if depth > 16 {
            return Err(KnowledgeError::UnresolvedFrame(name.to_string()));
        }
        if name == WORLD {
            return Ok(Pose::identity());
        }
        if let Some(entry) = self.symbols.get(name) {
            return self.resolve_entry(entry, depth + 1);
        }
        if let Some(obj) = self.object(name) {
            return Ok(obj.pose);
        }
        Err(KnowledgeError::UnresolvedFrame(name.to_string()))
    }

    fn resolve_entry(&self, entry: &SymbolEntry, depth: usize) -> Result<Pose, KnowledgeError> {
        if entry.stale {
            return Err(KnowledgeError::StaleSymbol(entry.name.clone()));
        }
        let frame = self.frame_pose_depth(&entry.reference_frame, depth)?;
        Ok(frame * entry.pose)
    }

    /// World pose of a symbol.
    pub fn resolve_symbol(&self, name: &str) -> Result<Pose, KnowledgeError> {
        let entry = self
            .symbols
            .get(name)
            .ok_or_else(|| KnowledgeError::UnknownSymbol(name.to_string()))?;
        self.resolve_entry(entry, 0)
    }

    /// True iff some detected object satisfies every atom of `expr`.
    ///
    /// Every reference frame in `expr` must resolve, even when no object would
    /// reach the region atom.
    pub fn knowledge_test(&self, expr: &PredicateExpr) -> Result<bool, KnowledgeError> {
        let frames = self.resolve_frames(expr)?;
        let lookup = |f: &str| {
            frames
                .get(f)
                .copied()
                .ok_or_else(|| KnowledgeError::UnresolvedFrame(f.to_string()))
        };
        for obj in &self.objects {
            if expr.matches(&obj.object_class, &obj.pose, lookup)? {
                return Ok(true);
            }
        }
        Ok(false)
    }

    /// Objects satisfying `expr`, in snapshot order.
    pub fn matching_objects(&self, expr: &PredicateExpr) -> Result<Vec<&DetectedObject>, KnowledgeError> {
        let frames = self.resolve_frames(expr)?;
        let lookup = |f: &str| {
            frames
                .get(f)
                .copied()
                .ok_or_else(|| KnowledgeError::UnresolvedFrame(f.to_string()))
        };
        let mut out = Vec::new();
        for obj in &self.objects {
            if expr.matches(&obj.object_class, &obj.pose, lookup)? {
                out.push(obj);
            }
        }
        Ok(out)
    }

    pub fn resolve_frames(&self, expr: &PredicateExpr) -> Result<BTreeMap<String, Pose>, KnowledgeError> {
        expr.frames()
            .map(|f| Ok((f.to_string(), self.frame_pose(f)?)))
            .collect()
    }
}

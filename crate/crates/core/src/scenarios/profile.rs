//! The four capability sets a tree may be authored against.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

/// Training operations available in every condition.
pub const GRIPPER_OPS: [&str; 2] = ["OpenGripper", "CloseGripper"];

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConditionProfile {
    pub id: u8,
    pub name: String,
    pub allowed_actions: BTreeSet<String>,
    pub allowed_knowledge: BTreeSet<String>,
    /// Operations outside the action/knowledge columns that every condition has.
    pub always_allowed: BTreeSet<String>,
    pub collisions_enforced_on_unplanned_moves: bool,
}

fn set(items: &[&str]) -> BTreeSet<String> {
    items.iter().map(|s| s.to_string()).collect()
}

impl ConditionProfile {
    fn make(id: u8, name: &str, actions: &[&str], knowledge: &[&str], enforced: bool) -> Self {
        Self {
            id,
            name: name.into(),
            allowed_actions: set(actions),
            allowed_knowledge: set(knowledge),
            always_allowed: set(&GRIPPER_OPS),
            collisions_enforced_on_unplanned_moves: enforced,
        }
    }

    pub fn baseline() -> Self {
        Self::make(1, "Baseline", &["MoveToHome", "MoveToWaypoint"], &[], false)
    }

    pub fn planning() -> Self {
        Self::make(
            2,
            "Planning",
            &["PlanToHome", "PlanToWaypoint"],
            &["DetectObjects", "EnableCollisions", "DisableCollisions"],
            true,
        )
    }

    pub fn perception() -> Self {
        Self::make(
            3,
            "Perception",
            &["MoveToHome", "MoveRelativeToObject"],
            &["DetectObjects"],
            false,
        )
    }

    pub fn smart_move() -> Self {
        Self::make(
            4,
            "SmartMove",
            &["PlanToHome", "SmartGrasp", "SmartRelease"],
            &["DetectObjects"],
            true,
        )
    }

    /// Everything in the registry; used for scripted sessions outside the study conditions.
    pub fn unrestricted(operations: &[&str]) -> Self {
        Self::make(0, "Unrestricted", operations, &[], true)
    }

    /// Conditions 1 to 4; `None` for anything else.
    pub fn by_id(id: u8) -> Option<Self> {
        match id {
            1 => Some(Self::baseline()),
            2 => Some(Self::planning()),
            3 => Some(Self::perception()),
            4 => Some(Self::smart_move()),
            _ => None,
        }
    }

    pub fn all() -> [Self; 4] {
        [
            Self::baseline(),
            Self::planning(),
            Self::perception(),
            Self::smart_move(),
        ]
    }

    pub fn allows(&self, operation: &str) -> bool {
        self.allowed_actions.contains(operation)
            || self.allowed_knowledge.contains(operation)
            || self.always_allowed.contains(operation)
    }

    /// Every operation the profile permits, sorted.
    pub fn palette(&self) -> Vec<String> {
        let mut all: BTreeSet<String> = self.allowed_actions.clone();
        all.extend(self.allowed_knowledge.iter().cloned());
        all.extend(self.always_allowed.iter().cloned());
        all.into_iter().collect()
    }
}

//! Data files shipped with the crate.

use crate::arm::KinematicChain;

pub const DEFAULT_CHAIN: &str = include_str!("../data/chains/ur5_like.json");

pub const TASK1_SCENE: &str = include_str!("../data/scenes/task1.scene");
pub const TASK2_SCENE: &str = include_str!("../data/scenes/task2.scene");
pub const TASK3_SCENE: &str = include_str!("../data/scenes/task3.scene");

pub const SCENES: [(&str, &str); 3] = [("task1", TASK1_SCENE), ("task2", TASK2_SCENE), ("task3", TASK3_SCENE)];

pub fn default_chain() -> KinematicChain {
    KinematicChain::from_json(DEFAULT_CHAIN).expect("shipped chain config is valid")
}

pub fn scene(name: &str) -> Option<&'static str> {
    SCENES.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

/// A shipped tree with the symbols it was taught with.
#[derive(Clone, Copy, Debug)]
pub struct Reference {
    pub id: &'static str,
    pub scene: &'static str,
    pub condition: u8,
    pub tree: &'static str,
    pub teach: &'static str,
}

macro_rules! reference {
    ($id:literal, $scene:literal, $cond:literal) => {
        Reference {
            id: $id,
            scene: $scene,
            condition: $cond,
            tree: include_str!(concat!("../data/trees/", $id, ".json")),
            teach: include_str!(concat!("../data/teach/", $id, ".json")),
        }
    };
}

pub const REFERENCES: [Reference; 8] = [
    reference!("task1_c1", "task1", 1),
    reference!("task1_c2", "task1", 2),
    reference!("task1_c3", "task1", 3),
    reference!("task1_c4", "task1", 4),
    reference!("task2_c1", "task2", 1),
    reference!("task2_c2", "task2", 2),
    reference!("task2_c4", "task2", 4),
    reference!("task3_c4", "task3", 4),
];

/// Task 1 under Condition 3, but detecting again before the second part and
/// still naming objects by session id. Uses the `task1_c3` teach script.
pub const REDETECT_TREE: &str = include_str!("../data/trees/task1_redetect.json");

pub fn reference(id: &str) -> Option<&'static Reference> {
    REFERENCES.iter().find(|r| r.id == id)
}

/// Start and goal on either side of a wall with a slot the arm must pass through.
pub const CORRIDOR_PROBLEM: &str = include_str!("../data/planning/corridor.json");

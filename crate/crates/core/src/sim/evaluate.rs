use serde::{Deserialize, Serialize};

use super::world::{WorldObject, WorldState};
use crate::geometry::{rotation_distance, translation_distance};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskSpec {
    pub required_moves: usize,
    #[serde(default)]
    pub stack_link: bool,
    #[serde(default)]
    pub protect_obstacle: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskReport {
    pub parts_moved: usize,
    pub link_stacked: bool,
    pub obstacle_disturbed: bool,
    pub success: bool,
}

pub const STACK_LATERAL_TOLERANCE: f64 = 0.01;
pub const STACK_CONTACT_TOLERANCE: f64 = 0.005;
pub const DISTURB_TRANSLATION: f64 = 0.005;
pub const DISTURB_ROTATION: f64 = 0.02;

fn resting(world: &WorldState, o: &WorldObject) -> bool {
    !o.fixed && !world.is_attached(&o.uid)
}

/// True when `top` rests on `base`: centered within the lateral tolerance and
/// its bottom face touching `base`'s top face.
pub fn rests_on(top: &WorldObject, base: &WorldObject) -> bool {
    let dx = top.pose.translation.x - base.pose.translation.x;
    let dy = top.pose.translation.y - base.pose.translation.y;
    let bottom = top.pose.translation.z - 0.5 * top.dims[2];
    (dx * dx + dy * dy).sqrt() <= STACK_LATERAL_TOLERANCE && (bottom - base.top()).abs() <= STACK_CONTACT_TOLERANCE
}

/// Scores the world against the task. Left and right follow the table frame's
/// y axis, the same convention the region predicates use.
pub fn evaluate_task(world: &WorldState, task: &TaskSpec) -> TaskReport {
    let parts_moved = world
        .objects
        .iter()
        .filter(|o| resting(world, o))
        .filter(|o| {
            let start = world.in_table_frame(&o.initial_pose.translation);
            let now = world.in_table_frame(&o.pose.translation);
            start.y < 0.0 && now.y > 0.0 && world.workspace.contains(&o.pose.translation)
        })
        .count();
    let links: Vec<&WorldObject> = world
        .objects
        .iter()
        .filter(|o| o.object_class == "link" && resting(world, o))
        .collect();
    let nodes: Vec<&WorldObject> = world
        .objects
        .iter()
        .filter(|o| o.object_class == "node" && resting(world, o))
        .collect();
    let link_stacked = links.iter().any(|l| nodes.iter().any(|n| rests_on(l, n)));
    let obstacle_disturbed = task.protect_obstacle
        && world.objects.iter().filter(|o| o.object_class == "link").any(|o| {
            translation_distance(&o.pose, &o.initial_pose) > DISTURB_TRANSLATION
                || rotation_distance(&o.pose, &o.initial_pose) > DISTURB_ROTATION
        });
    let success = parts_moved >= task.required_moves && (!task.stack_link || link_stacked) && !obstacle_disturbed;
    TaskReport {
        parts_moved,
        link_stacked,
        obstacle_disturbed,
        success,
    }
}

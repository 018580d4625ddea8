//! Seeded variations of a scene: the parts to be moved are shifted while
//! staying on the right side of the table and clear of everything else.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::{JointConfig, Pose};
use crate::sim::ScenarioDoc;

/// Smallest horizontal distance kept between object centers.
pub const MIN_SPACING: f64 = 0.075;
/// Parts stay at least this far right of the table's center line.
pub const RIGHT_MARGIN: f64 = 0.03;
const TRIES: usize = 200;

fn is_part(doc: &ScenarioDoc, i: usize) -> bool {
    let o = &doc.objects[i];
    let local = doc.table_frame.inverse().transform_point(&o.pose.translation);
    o.object_class == "node" && local.y < 0.0
}

fn acceptable(doc: &ScenarioDoc, i: usize, pose: &Pose) -> bool {
    let local = doc.table_frame.inverse().transform_point(&pose.translation);
    if local.y > -RIGHT_MARGIN {
        return false;
    }
    let c = doc.workspace.center;
    let p = pose.translation;
    let r = ((p.x - c[0]).powi(2) + (p.y - c[1]).powi(2)).sqrt();
    if r > doc.workspace.radius - 0.04 {
        return false;
    }
    doc.objects
        .iter()
        .enumerate()
        .all(|(j, o)| j == i || (o.pose.translation.xy() - p.xy()).norm() >= MIN_SPACING)
}

/// Shifts every node that starts right of center by up to `amplitude` meters
/// in x and y. A part keeps its original position if no acceptable shift is
/// found.
pub fn perturb_parts(doc: &ScenarioDoc, seed: u64, amplitude: f64) -> ScenarioDoc {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = doc.clone();
    out.name = format!("{}~{seed}", doc.name);
    for i in 0..out.objects.len() {
        if !is_part(&out, i) {
            continue;
        }
        for _ in 0..TRIES {
            let mut pose = out.objects[i].pose;
            pose.translation.x += rng.random_range(-amplitude..=amplitude);
            pose.translation.y += rng.random_range(-amplitude..=amplitude);
            if acceptable(&out, i, &pose) {
                out.objects[i].pose = pose;
                break;
            }
        }
    }
    debug_assert!(out.load(JointConfig::zeros(6)).is_ok());
    out
}

//! Simulated object detection. Every call hands out fresh session ids: within
//! each class the ids `{class}_1..n` are shuffled with the run's generator.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::world::WorldState;
use crate::knowledge::DetectedObject;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectionSnapshot {
    /// Simulated seconds since the run started.
    pub timestamp: f64,
    pub objects: Vec<DetectedObject>,
    /// Session id to ground-truth uid. Kept by the simulator, never by the robot.
    #[serde(skip)]
    pub uids: BTreeMap<String, String>,
}

/// Detects everything on the table except a held object. `noise` is the
/// standard deviation in meters of Gaussian noise added to x and y of movable
/// objects.
pub fn detect_objects<R: Rng>(world: &WorldState, rng: &mut R, noise: f64, timestamp: f64) -> DetectionSnapshot {
    let mut by_class: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, o) in world.objects.iter().enumerate() {
        if !world.is_attached(&o.uid) {
            by_class.entry(o.object_class.as_str()).or_default().push(i);
        }
    }
    let normal = (noise > 0.0).then(|| Normal::new(0.0, noise).expect("positive std dev"));
    let mut objects = Vec::new();
    let mut uids = BTreeMap::new();
    for (class, members) in by_class {
        let mut labels: Vec<usize> = (1..=members.len()).collect();
        labels.shuffle(rng);
        for (idx, label) in members.into_iter().zip(labels) {
            let o = &world.objects[idx];
            let mut pose = o.pose;
            if let (Some(n), false) = (&normal, o.fixed) {
                pose.translation.x += n.sample(rng);
                pose.translation.y += n.sample(rng);
            }
            let id = format!("{class}_{label}");
            uids.insert(id.clone(), o.uid.clone());
            objects.push(DetectedObject {
                id,
                object_class: o.object_class.clone(),
                pose,
                dims: o.dims,
                symmetries: DetectedObject::z_symmetries(o.symmetry_order),
            });
        }
    }
    objects.sort_by(|a, b| a.id.cmp(&b.id));
    DetectionSnapshot {
        timestamp,
        objects,
        uids,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assets;
    use crate::geometry::JointConfig;
    use crate::sim::ScenarioDoc;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn world() -> WorldState {
        ScenarioDoc::parse(assets::TASK1_SCENE)
            .unwrap()
            .load(JointConfig::zeros(6))
            .unwrap()
            .world
    }

    fn pose_multiset(s: &DetectionSnapshot) -> Vec<String> {
        let mut v: Vec<String> = s
            .objects
            .iter()
            .map(|o| {
                format!(
                    "{} {:?} {:?}",
                    o.object_class,
                    o.pose.translation_array(),
                    o.pose.rotation_array()
                )
            })
            .collect();
        v.sort();
        v
    }

    #[test]
    fn classes_and_ids() {
        let w = world();
        let s = detect_objects(&w, &mut ChaCha8Rng::seed_from_u64(3), 0.0, 0.0);
        let ids: Vec<&str> = s.objects.iter().map(|o| o.id.as_str()).collect();
        assert_eq!(ids, vec!["link_1", "node_1", "node_2", "table_1"]);
        for o in &s.objects {
            assert_eq!(o.symmetries[0], crate::geometry::Pose::identity());
        }
    }

    #[test]
    fn repeated_detection_permutes_ids_but_not_poses() {
        let w = world();
        let mut permuted = 0;
        for seed in 0..50 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = detect_objects(&w, &mut rng, 0.0, 0.0);
            let b = detect_objects(&w, &mut rng, 0.0, 1.0);
            assert_eq!(pose_multiset(&a), pose_multiset(&b));
            if a.uids != b.uids {
                permuted += 1;
            }
            let mut ua: Vec<_> = a.uids.values().collect();
            let mut ub: Vec<_> = b.uids.values().collect();
            ua.sort();
            ub.sort();
            assert_eq!(ua, ub);
        }
        assert!(permuted > 0);
    }

    #[test]
    fn noise_moves_only_loose_objects() {
        let w = world();
        let s = detect_objects(&w, &mut ChaCha8Rng::seed_from_u64(1), 0.01, 0.0);
        let table = s.objects.iter().find(|o| o.object_class == "table").unwrap();
        let truth = w.objects.iter().find(|o| o.fixed).unwrap();
        assert_eq!(table.pose, truth.pose);
        let moved = s
            .objects
            .iter()
            .filter(|o| o.object_class == "node")
            .any(|o| w.objects.iter().all(|t| t.pose != o.pose));
        assert!(moved);
    }
}

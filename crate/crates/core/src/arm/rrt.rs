//! Bidirectional RRT-Connect in joint space with shortcut smoothing.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::chain::KinematicChain;
use super::collision::{collision_check, segment_is_free, PlanningScene};
use super::ArmError;
use crate::geometry::{joint_distance, JointConfig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RrtConfig {
    /// Extension step (L2, radians).
    pub step: f64,
    pub max_extensions: usize,
    pub smoothing_attempts: usize,
    /// Edge validation resolution (largest per-joint step, radians).
    pub check_resolution: f64,
}

impl Default for RrtConfig {
    fn default() -> Self {
        Self {
            step: 0.1,
            max_extensions: 10_000,
            smoothing_attempts: 200,
            check_resolution: 0.02,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MotionPlan {
    pub waypoints: Vec<JointConfig>,
    /// Sum of L2 segment lengths.
    pub length: f64,
}

impl MotionPlan {
    pub fn from_waypoints(waypoints: Vec<JointConfig>) -> Self {
        let length = path_length(&waypoints);
        Self { waypoints, length }
    }

    pub fn start(&self) -> &JointConfig {
        &self.waypoints[0]
    }

    pub fn goal(&self) -> &JointConfig {
        self.waypoints.last().expect("plans are never empty")
    }
}

pub fn path_length(path: &[JointConfig]) -> f64 {
    path.windows(2)
        .map(|w| joint_distance(&w[0], &w[1]).unwrap_or(0.0))
        .sum()
}

/// Counts densified configurations along `plan` that collide with `scene`.
pub fn count_plan_violations(
    chain: &KinematicChain,
    plan: &MotionPlan,
    scene: &PlanningScene,
    resolution: f64,
) -> Result<usize, ArmError> {
    let mut violations = usize::from(collision_check(chain, plan.start(), scene)?);
    for w in plan.waypoints.windows(2) {
        let steps = (w[0].max_abs_diff(&w[1]) / resolution).ceil().max(1.0) as usize;
        for k in 1..=steps {
            let q = w[0].lerp(&w[1], k as f64 / steps as f64);
            if collision_check(chain, &q, scene)? {
                violations += 1;
            }
        }
    }
    Ok(violations)
}

struct Tree {
    nodes: Vec<JointConfig>,
    parents: Vec<Option<usize>>,
}

enum Extend {
    Reached(usize),
    Advanced(usize),
    Trapped,
}

impl Tree {
    fn new(root: JointConfig) -> Self {
        Self {
            nodes: vec![root],
            parents: vec![None],
        }
    }

    fn nearest(&self, q: &JointConfig) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, n) in self.nodes.iter().enumerate() {
            let d: f64 = n.0.iter().zip(&q.0).map(|(a, b)| (a - b) * (a - b)).sum();
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        best
    }

    fn push(&mut self, q: JointConfig, parent: usize) -> usize {
        self.nodes.push(q);
        self.parents.push(Some(parent));
        self.nodes.len() - 1
    }

    fn path_to_root(&self, mut idx: usize) -> Vec<JointConfig> {
        let mut out = vec![self.nodes[idx].clone()];
        while let Some(p) = self.parents[idx] {
            out.push(self.nodes[p].clone());
            idx = p;
        }
        out
    }
}

struct Planner<'a> {
    chain: &'a KinematicChain,
    scene: &'a PlanningScene,
    config: &'a RrtConfig,
    extensions: usize,
}

impl Planner<'_> {
    fn extend(&mut self, tree: &mut Tree, target: &JointConfig) -> Result<Extend, ArmError> {
        self.extensions += 1;
        let near = tree.nearest(target);
        let from = tree.nodes[near].clone();
        let dist = joint_distance(&from, target)?;
        let (new, reached) = if dist <= self.config.step {
            (target.clone(), true)
        } else {
            (from.lerp(target, self.config.step / dist), false)
        };
        if !segment_is_free(self.chain, &from, &new, self.scene, self.config.check_resolution)? {
            return Ok(Extend::Trapped);
        }
        let idx = tree.push(new, near);
        Ok(if reached {
            Extend::Reached(idx)
        } else {
            Extend::Advanced(idx)
        })
    }

    fn connect(&mut self, tree: &mut Tree, target: &JointConfig) -> Result<Extend, ArmError> {
        loop {
            if self.extensions >= self.config.max_extensions {
                return Ok(Extend::Trapped);
            }
            match self.extend(tree, target)? {
                Extend::Advanced(_) => continue,
                other => return Ok(other),
            }
        }
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> JointConfig {
        JointConfig(self.chain.limits().map(|(lo, hi)| rng.random_range(lo..=hi)).collect())
    }
}

/// Plans a collision-free joint path from `start` to `goal`.
///
/// Returns `Ok(None)` when the goal collides or the extension budget runs out,
/// and an error when `start` itself is in collision.
pub fn plan_rrt_connect<R: Rng>(
    chain: &KinematicChain,
    start: &JointConfig,
    goal: &JointConfig,
    scene: &PlanningScene,
    config: &RrtConfig,
    rng: &mut R,
) -> Result<Option<MotionPlan>, ArmError> {
    chain.check_dof(start)?;
    chain.check_dof(goal)?;
    if collision_check(chain, start, scene)? {
        return Err(ArmError::StartInCollision);
    }
    if !chain.within_limits(goal) || collision_check(chain, goal, scene)? {
        return Ok(None);
    }
    if start.max_abs_diff(goal) < 1e-12 {
        return Ok(Some(MotionPlan::from_waypoints(vec![start.clone()])));
    }

    let mut planner = Planner {
        chain,
        scene,
        config,
        extensions: 0,
    };
    let mut a = Tree::new(start.clone());
    let mut b = Tree::new(goal.clone());
    let mut a_is_start = true;
    let mut raw = None;
    while planner.extensions < config.max_extensions {
        let sample = planner.sample(rng);
        let new_idx = match planner.extend(&mut a, &sample)? {
            Extend::Trapped => None,
            Extend::Advanced(i) | Extend::Reached(i) => Some(i),
        };
        if let Some(i) = new_idx {
            let q_new = a.nodes[i].clone();
            if let Extend::Reached(j) = planner.connect(&mut b, &q_new)? {
                let mut from_a = a.path_to_root(i);
                from_a.reverse();
                let from_b = b.path_to_root(j);
                // q_new appears at the end of from_a and the start of from_b
                from_a.extend(from_b.into_iter().skip(1));
                if !a_is_start {
                    from_a.reverse();
                }
                raw = Some(from_a);
                break;
            }
        }
        std::mem::swap(&mut a, &mut b);
        a_is_start = !a_is_start;
    }
    let Some(path) = raw else {
        return Ok(None);
    };
    // Resampling moves the points the edge checks look at, so the final path is
    // checked again. Unsmoothed tree edges resample to themselves.
    let smoothed = resample(&shortcut(chain, path.clone(), scene, config, rng)?, config.step);
    let mut valid = true;
    for w in smoothed.windows(2) {
        if !segment_is_free(chain, &w[0], &w[1], scene, config.check_resolution)? {
            valid = false;
            break;
        }
    }
    let waypoints = if valid { smoothed } else { resample(&path, config.step) };
    Ok(Some(MotionPlan::from_waypoints(waypoints)))
}

fn shortcut<R: Rng>(
    chain: &KinematicChain,
    mut path: Vec<JointConfig>,
    scene: &PlanningScene,
    config: &RrtConfig,
    rng: &mut R,
) -> Result<Vec<JointConfig>, ArmError> {
    for _ in 0..config.smoothing_attempts {
        if path.len() < 3 {
            break;
        }
        let i = rng.random_range(0..path.len() - 2);
        let j = rng.random_range(i + 2..path.len());
        if segment_is_free(chain, &path[i], &path[j], scene, config.check_resolution)? {
            path.drain(i + 1..j);
        }
    }
    Ok(path)
}

/// Splits each segment so consecutive waypoints are at most `step` apart (L2).
pub fn resample(path: &[JointConfig], step: f64) -> Vec<JointConfig> {
    let mut out = vec![path[0].clone()];
    for w in path.windows(2) {
        let d = joint_distance(&w[0], &w[1]).unwrap_or(0.0);
        let n = (d / step - 1e-9).ceil().max(1.0) as usize;
        for k in 1..=n {
            out.push(w[0].lerp(&w[1], k as f64 / n as f64));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arm::collision::{OrientedBox, SceneObject, WorkspaceBounds};
    use crate::assets::default_chain;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn open_scene() -> PlanningScene {
        PlanningScene::with_bounds(WorkspaceBounds {
            radius: 10.0,
            z_min: -10.0,
            z_max: 10.0,
        })
    }

    #[test]
    fn trivial_plan() {
        let chain = default_chain();
        let q = chain.home();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let plan = plan_rrt_connect(&chain, &q, &q, &open_scene(), &RrtConfig::default(), &mut rng)
            .unwrap()
            .unwrap();
        assert_eq!(plan.waypoints.len(), 1);
        assert_eq!(plan.length, 0.0);
    }

    #[test]
    fn empty_scene_plans_are_near_straight() {
        let chain = default_chain();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let a = JointConfig(chain.limits().map(|(lo, hi)| rng.random_range(lo..hi)).collect());
            let b = JointConfig(chain.limits().map(|(lo, hi)| rng.random_range(lo..hi)).collect());
            let plan = plan_rrt_connect(&chain, &a, &b, &open_scene(), &RrtConfig::default(), &mut rng)
                .unwrap()
                .unwrap();
            let straight = joint_distance(&a, &b).unwrap();
            assert!(plan.length <= 1.05 * straight + 1e-9, "{} vs {}", plan.length, straight);
            for w in plan.waypoints.windows(2) {
                assert!(joint_distance(&w[0], &w[1]).unwrap() <= 0.1 + 1e-9);
            }
            assert_eq!(plan.start(), &a);
            assert_eq!(plan.goal(), &b);
        }
    }

    #[test]
    fn start_in_collision_is_an_error() {
        let chain = default_chain();
        let q = chain.home();
        let tool = chain.forward_kinematics(&q).unwrap();
        let mut scene = open_scene();
        scene.upsert(SceneObject {
            id: "block".into(),
            shape: OrientedBox::new(tool, [0.2, 0.2, 0.2]),
        });
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let goal = JointConfig(vec![1.0; 6]);
        assert!(matches!(
            plan_rrt_connect(&chain, &q, &goal, &scene, &RrtConfig::default(), &mut rng),
            Err(ArmError::StartInCollision)
        ));
    }

    #[test]
    fn colliding_goal_returns_none() {
        let chain = default_chain();
        let goal = JointConfig(vec![0.5, -1.0, 1.0, -1.5, -1.5, 0.0]);
        let tool = chain.forward_kinematics(&goal).unwrap();
        let mut scene = open_scene();
        scene.upsert(SceneObject {
            id: "block".into(),
            shape: OrientedBox::new(tool, [0.1, 0.1, 0.1]),
        });
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let res = plan_rrt_connect(&chain, &chain.home(), &goal, &scene, &RrtConfig::default(), &mut rng).unwrap();
        assert!(res.is_none());
    }

    #[test]
    fn resample_bounds_spacing() {
        let path = vec![JointConfig(vec![0.0, 0.0]), JointConfig(vec![0.35, 0.0])];
        let out = resample(&path, 0.1);
        assert_eq!(out.len(), 5);
        assert_eq!(out.last().unwrap(), &path[1]);
    }
}

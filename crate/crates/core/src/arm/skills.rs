//! Planning for the query-driven grasp and place composites.
//!
//! A composite is planned completely before anything moves: a planned move to
//! the backoff pose, a straight Cartesian approach, the gripper action and a
//! straight retreat back to the backoff pose. If no candidate admits all of
//! that, nothing is executed.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::collision::{segment_is_free, AttachedObject, PlanningScene};
use super::rrt::{plan_rrt_connect, MotionPlan, RrtConfig};
use super::{ArmError, IkSolver, KinematicChain};
use crate::geometry::{JointConfig, Pose};
use crate::knowledge::{pose_query, CostWeights, GoalCandidate, KnowledgeStore, PredicateExpr, QueryContext};

/// Cartesian interpolation step along approach lines, meters.
pub const APPROACH_STEP: f64 = 0.005;
/// Largest joint jump tolerated between consecutive approach samples.
const APPROACH_JUMP: f64 = 0.25;

#[derive(Clone, Copy)]
pub struct SkillContext<'a> {
    pub chain: &'a KinematicChain,
    pub ik: &'a IkSolver,
    pub rrt: &'a RrtConfig,
    pub weights: CostWeights,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SkillKind {
    Grasp,
    Release,
}

/// What happened to one candidate, in the order candidates were tried.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Attempt {
    pub object_id: String,
    pub symmetry_index: usize,
    pub cost: f64,
    pub outcome: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SkillPlan {
    pub kind: SkillKind,
    pub object_id: String,
    pub goal_pose: Pose,
    pub backoff_pose: Pose,
    pub to_backoff: MotionPlan,
    /// Backoff configuration first, goal configuration last.
    pub approach: Vec<JointConfig>,
    /// Goal configuration first, backoff configuration last.
    pub retreat: Vec<JointConfig>,
    /// For grasps: the target's pose in the tool frame once held.
    pub grasp: Pose,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SkillFailure {
    pub reason: String,
    /// True when planning (not a precondition) was what failed.
    pub planning: bool,
}

#[derive(Clone, Debug)]
pub struct SkillOutcome {
    pub result: Result<SkillPlan, SkillFailure>,
    pub attempts: Vec<Attempt>,
}

/// Tool poses on the straight line `from -> to`, solved one after another by
/// seeding each IK with the previous answer. `None` if any sample fails or the
/// joints jump.
pub fn cartesian_path(
    chain: &KinematicChain,
    ik: &IkSolver,
    start: &JointConfig,
    from: &Pose,
    to: &Pose,
) -> Option<Vec<JointConfig>> {
    let dist = (to.translation - from.translation).norm();
    let n = (dist / APPROACH_STEP).ceil().max(1.0) as usize;
    let mut path = vec![start.clone()];
    let mut q = start.clone();
    for k in 1..=n {
        let target = from.interpolate(to, k as f64 / n as f64);
        let next = ik.descend(chain, &target, q.clone())?;
        if next.max_abs_diff(&q) > APPROACH_JUMP {
            return None;
        }
        path.push(next.clone());
        q = next;
    }
    Some(path)
}

fn path_is_free(
    chain: &KinematicChain,
    path: &[JointConfig],
    scene: &PlanningScene,
    resolution: f64,
) -> Result<bool, ArmError> {
    for w in path.windows(2) {
        if !segment_is_free(chain, &w[0], &w[1], scene, resolution)? {
            return Ok(false);
        }
    }
    Ok(true)
}

struct Leg<'a> {
    kind: SkillKind,
    candidate: &'a GoalCandidate,
    backoff_pose: Pose,
    /// Scene for the approach (target disabled).
    approach_scene: PlanningScene,
    /// Scene for the retreat.
    retreat_scene: PlanningScene,
    grasp: Pose,
}

fn try_candidate<R: Rng>(
    ctx: &SkillContext<'_>,
    scene: &PlanningScene,
    q: &JointConfig,
    leg: Leg<'_>,
    rng: &mut R,
) -> Result<Result<SkillPlan, &'static str>, ArmError> {
    let c = leg.candidate;
    let Some(q_back) = ctx.ik.solve(ctx.chain, &leg.backoff_pose, &c.ik_solution) else {
        return Ok(Err("backoff unreachable"));
    };
    let Some(approach) = cartesian_path(ctx.chain, ctx.ik, &q_back, &leg.backoff_pose, &c.goal_pose) else {
        return Ok(Err("approach not straight"));
    };
    if !path_is_free(ctx.chain, &approach, &leg.approach_scene, ctx.rrt.check_resolution)? {
        return Ok(Err("approach blocked"));
    }
    let mut retreat = approach.clone();
    retreat.reverse();
    if !path_is_free(ctx.chain, &retreat, &leg.retreat_scene, ctx.rrt.check_resolution)? {
        return Ok(Err("retreat blocked"));
    }
    let Some(to_backoff) = plan_rrt_connect(ctx.chain, q, &q_back, scene, ctx.rrt, rng)? else {
        return Ok(Err("no plan to backoff"));
    };
    Ok(Ok(SkillPlan {
        kind: leg.kind,
        object_id: c.object_id.clone(),
        goal_pose: c.goal_pose,
        backoff_pose: leg.backoff_pose,
        to_backoff,
        approach,
        retreat,
        grasp: leg.grasp,
    }))
}

fn fail(reason: &str, planning: bool) -> SkillFailure {
    SkillFailure {
        reason: reason.into(),
        planning,
    }
}

/// Plans a grasp of the best object matching `expr` using the object-relative
/// tool pose `t_ee`. The backoff pose sits `backoff` meters behind the goal
/// along the gripper's x (approach) axis.
#[allow(clippy::too_many_arguments)]
pub fn plan_smart_grasp<R: Rng>(
    ctx: &SkillContext<'_>,
    knowledge: &KnowledgeStore,
    scene: &PlanningScene,
    q: &JointConfig,
    expr: &PredicateExpr,
    t_ee: &Pose,
    backoff: f64,
    rng: &mut R,
) -> SkillOutcome {
    let mut attempts = Vec::new();
    if scene.attached.is_some() {
        return SkillOutcome {
            result: Err(fail("gripper already holding an object", false)),
            attempts,
        };
    }
    let qctx = QueryContext {
        chain: ctx.chain,
        ik: ctx.ik,
        scene,
        weights: ctx.weights,
    };
    let candidates = match pose_query(knowledge, expr, t_ee, q, &qctx) {
        Ok(c) => c,
        Err(e) => {
            return SkillOutcome {
                result: Err(fail(&e.to_string(), false)),
                attempts,
            }
        }
    };
    if candidates.is_empty() {
        let matching = knowledge.matching_objects(expr).map(|m| m.len()).unwrap_or(0);
        let reason = if matching == 0 {
            "no matching object"
        } else {
            "no feasible grasp"
        };
        return SkillOutcome {
            result: Err(fail(reason, matching > 0)),
            attempts,
        };
    }
    for c in &candidates {
        let Some(object) = knowledge.object(&c.object_id) else {
            continue;
        };
        let backoff_pose = c.goal_pose.translated(&(-backoff * c.goal_pose.x_axis()));
        let approach_scene = scene.without(&c.object_id);
        let grasp = c.goal_pose.inverse() * object.pose;
        let mut retreat_scene = approach_scene.clone();
        retreat_scene.attached = Some(AttachedObject {
            id: c.object_id.clone(),
            dims: object.dims,
            grasp,
        });
        let leg = Leg {
            kind: SkillKind::Grasp,
            candidate: c,
            backoff_pose,
            approach_scene,
            retreat_scene,
            grasp,
        };
        let outcome = match try_candidate(ctx, scene, q, leg, rng) {
            Ok(r) => r,
            Err(ArmError::StartInCollision) => {
                return SkillOutcome {
                    result: Err(fail("start configuration in collision", true)),
                    attempts,
                }
            }
            Err(e) => {
                return SkillOutcome {
                    result: Err(fail(&e.to_string(), false)),
                    attempts,
                }
            }
        };
        attempts.push(Attempt {
            object_id: c.object_id.clone(),
            symmetry_index: c.symmetry_index,
            cost: c.cost,
            outcome: match &outcome {
                Ok(_) => "planned".into(),
                Err(why) => (*why).into(),
            },
        });
        if let Ok(plan) = outcome {
            return SkillOutcome {
                result: Ok(plan),
                attempts,
            };
        }
    }
    SkillOutcome {
        result: Err(fail("no feasible grasp", true)),
        attempts,
    }
}

/// Plans placing the held object at the tool pose `t_ee` relative to the best
/// object matching `expr`. The backoff pose sits `backoff` meters above the
/// goal along world z so objects can be stacked.
#[allow(clippy::too_many_arguments)]
pub fn plan_smart_release<R: Rng>(
    ctx: &SkillContext<'_>,
    knowledge: &KnowledgeStore,
    scene: &PlanningScene,
    q: &JointConfig,
    expr: &PredicateExpr,
    t_ee: &Pose,
    backoff: f64,
    rng: &mut R,
) -> SkillOutcome {
    let mut attempts = Vec::new();
    let Some(held) = scene.attached.clone() else {
        return SkillOutcome {
            result: Err(fail("nothing held", false)),
            attempts,
        };
    };
    let qctx = QueryContext {
        chain: ctx.chain,
        ik: ctx.ik,
        scene,
        weights: ctx.weights,
    };
    let candidates = match pose_query(knowledge, expr, t_ee, q, &qctx) {
        Ok(c) => c,
        Err(e) => {
            return SkillOutcome {
                result: Err(fail(&e.to_string(), false)),
                attempts,
            }
        }
    };
    let candidates: Vec<GoalCandidate> = candidates.into_iter().filter(|c| c.object_id != held.id).collect();
    if candidates.is_empty() {
        let matching = knowledge.matching_objects(expr).map(|m| m.len()).unwrap_or(0);
        let reason = if matching == 0 {
            "no matching object"
        } else {
            "no feasible placement"
        };
        return SkillOutcome {
            result: Err(fail(reason, matching > 0)),
            attempts,
        };
    }
    for c in &candidates {
        let backoff_pose = c.goal_pose.translated(&(backoff * nalgebra::Vector3::z()));
        let approach_scene = scene.without(&c.object_id);
        let mut retreat_scene = approach_scene.clone();
        retreat_scene.attached = None;
        let leg = Leg {
            kind: SkillKind::Release,
            candidate: c,
            backoff_pose,
            approach_scene,
            retreat_scene,
            grasp: held.grasp,
        };
        let outcome = match try_candidate(ctx, scene, q, leg, rng) {
            Ok(r) => r,
            Err(ArmError::StartInCollision) => {
                return SkillOutcome {
                    result: Err(fail("start configuration in collision", true)),
                    attempts,
                }
            }
            Err(e) => {
                return SkillOutcome {
                    result: Err(fail(&e.to_string(), false)),
                    attempts,
                }
            }
        };
        attempts.push(Attempt {
            object_id: c.object_id.clone(),
            symmetry_index: c.symmetry_index,
            cost: c.cost,
            outcome: match &outcome {
                Ok(_) => "planned".into(),
                Err(why) => (*why).into(),
            },
        });
        if let Ok(plan) = outcome {
            return SkillOutcome {
                result: Ok(plan),
                attempts,
            };
        }
    }
    SkillOutcome {
        result: Err(fail("no feasible placement", true)),
        attempts,
    }
}

//! Ranking goal configurations over every matching object and each of its
//! symmetric grasp variants.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::{compute_cost, CostWeights, KnowledgeError, KnowledgeStore, PredicateExpr};
use crate::arm::{collision_check, IkSolver, KinematicChain, PlanningScene};
use crate::geometry::{joint_distance_with, rotation_distance, translation_distance, JointConfig, Pose};

#[derive(Clone, Copy)]
pub struct QueryContext<'a> {
    pub chain: &'a KinematicChain,
    pub ik: &'a IkSolver,
    /// Scene used for the goal collision flag. Each candidate's own object is
    /// excluded since the gripper has to reach into it.
    pub scene: &'a PlanningScene,
    pub weights: CostWeights,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GoalCandidate {
    pub object_id: String,
    pub symmetry_index: usize,
    pub goal_pose: Pose,
    pub ik_solution: JointConfig,
    pub dq: f64,
    pub dt: f64,
    pub dr: f64,
    pub in_collision: bool,
    pub cost: f64,
}

/// Tool pose for grasping `object` through symmetry `k` with the object-relative
/// tool pose `t_ee`.
pub fn symmetric_tool_pose(object: &Pose, symmetry: &Pose, t_ee: &Pose) -> Pose {
    &(object * symmetry) * t_ee
}

fn by_rank(a: &GoalCandidate, b: &GoalCandidate) -> Ordering {
    a.cost
        .total_cmp(&b.cost)
        .then_with(|| a.object_id.cmp(&b.object_id))
        .then_with(|| a.symmetry_index.cmp(&b.symmetry_index))
}

/// Every (object, symmetry) pair matching `expr` that has an IK solution, sorted
/// by ascending cost with ties broken by object id and then symmetry index.
pub fn pose_query(
    knowledge: &KnowledgeStore,
    expr: &PredicateExpr,
    t_ee: &Pose,
    current: &JointConfig,
    ctx: &QueryContext<'_>,
) -> Result<Vec<GoalCandidate>, KnowledgeError> {
    ctx.weights.validate(ctx.chain)?;
    let tool_now = ctx
        .chain
        .forward_kinematics(current)
        .map_err(|e| KnowledgeError::Kinematics(e.to_string()))?;
    let mut out = Vec::new();
    for object in knowledge.matching_objects(expr)? {
        let scene = ctx.scene.without(&object.id);
        for (k, sym) in object.symmetries.iter().enumerate() {
            let target = symmetric_tool_pose(&object.pose, sym, t_ee);
            let Some(q) = ctx.ik.solve(ctx.chain, &target, current) else {
                continue;
            };
            let dq = joint_distance_with(current, &q, ctx.weights.joint_metric)
                .map_err(|e| KnowledgeError::Kinematics(e.to_string()))?;
            let dt = translation_distance(&tool_now, &target);
            let dr = rotation_distance(&tool_now, &target);
            let in_collision =
                collision_check(ctx.chain, &q, &scene).map_err(|e| KnowledgeError::Kinematics(e.to_string()))?;
            out.push(GoalCandidate {
                object_id: object.id.clone(),
                symmetry_index: k,
                goal_pose: target,
                cost: compute_cost(dq, dt, dr, in_collision, &ctx.weights),
                ik_solution: q,
                dq,
                dt,
                dr,
                in_collision,
            });
        }
    }
    out.sort_by(by_rank);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arm::{OrientedBox, SceneObject, WorkspaceBounds};
    use crate::assets::default_chain;
    use crate::knowledge::{DetectedObject, Relation, SymbolEntry, SymbolKind, WORLD};
    use proptest::prelude::*;

    fn top_down() -> Pose {
        Pose::from_axis_angle(nalgebra::Vector3::z(), std::f64::consts::PI)
            * Pose::from_axis_angle(nalgebra::Vector3::y(), std::f64::consts::FRAC_PI_2)
    }

    fn cube(id: &str, class: &str, x: f64, y: f64, yaw: f64, order: usize) -> DetectedObject {
        DetectedObject {
            id: id.into(),
            object_class: class.into(),
            pose: Pose::from_translation(x, y, 0.025) * Pose::rot_z(yaw),
            dims: [0.05; 3],
            symmetries: DetectedObject::z_symmetries(order),
        }
    }

    fn node(id: &str, x: f64, y: f64, yaw: f64) -> DetectedObject {
        cube(id, "node", x, y, yaw, 4)
    }

    fn knowledge(objects: Vec<DetectedObject>) -> KnowledgeStore {
        let mut k = KnowledgeStore::new();
        k.register_symbol(SymbolEntry::new(
            "table",
            SymbolKind::Region,
            Pose::from_translation(0.5, 0.0, 0.0),
            WORLD,
        ))
        .unwrap();
        k.ingest_detection(objects);
        k
    }

    fn scene() -> PlanningScene {
        let mut s = PlanningScene::with_bounds(WorkspaceBounds::default());
        s.upsert(SceneObject {
            id: "table_1".into(),
            shape: OrientedBox::new(Pose::from_translation(0.5, 0.0, -0.025), [0.8, 1.2, 0.05]),
        });
        s
    }

    /// Enumerates every (object, symmetry) pair, recomputes each cost from raw
    /// quaternion and vector arithmetic and sorts independently.
    fn brute_force(
        k: &KnowledgeStore,
        expr: &PredicateExpr,
        t_ee: &Pose,
        current: &JointConfig,
        ctx: &QueryContext<'_>,
    ) -> Vec<(String, usize, f64)> {
        let chain = ctx.chain;
        let now = chain.forward_kinematics(current).unwrap();
        let frames = k.resolve_frames(expr).unwrap();
        let mut all = Vec::new();
        for o in k.objects() {
            let ok = expr
                .matches(&o.object_class, &o.pose, |f| Ok::<_, ()>(frames[f]))
                .unwrap();
            if !ok {
                continue;
            }
            for (i, s) in o.symmetries.iter().enumerate() {
                let target = o.pose * *s * *t_ee;
                let Some(q) = ctx.ik.solve(chain, &target, current) else {
                    continue;
                };
                let dq: f64 =
                    q.0.iter()
                        .zip(&current.0)
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum::<f64>()
                        .sqrt();
                let p = now.translation - target.translation;
                let rel = now.rotation.inverse() * target.rotation;
                let dr = rel.angle();
                let mut c = ctx.weights.w_q * dq + ctx.weights.w_t * p.norm() + ctx.weights.w_r * dr;
                let mut sc = ctx.scene.clone();
                sc.disabled.insert(o.id.clone());
                if collision_check(chain, &q, &sc).unwrap() {
                    c += ctx.weights.lambda;
                }
                all.push((o.id.clone(), i, c));
            }
        }
        all.sort_by(|a, b| {
            a.2.partial_cmp(&b.2)
                .unwrap()
                .then_with(|| (a.0.as_str(), a.1).cmp(&(b.0.as_str(), b.1)))
        });
        all
    }

    fn assert_matches_oracle(got: &[GoalCandidate], want: &[(String, usize, f64)]) {
        assert_eq!(got.len(), want.len());
        for (g, (id, i, c)) in got.iter().zip(want) {
            assert_eq!((g.object_id.as_str(), g.symmetry_index), (id.as_str(), *i));
            assert!((g.cost - c).abs() < 1e-9, "{} vs {}", g.cost, c);
        }
    }

    fn ctx<'a>(chain: &'a KinematicChain, ik: &'a IkSolver, sc: &'a PlanningScene) -> QueryContext<'a> {
        QueryContext {
            chain,
            ik,
            scene: sc,
            weights: CostWeights::default(),
        }
    }

    #[test]
    fn zero_objects_give_no_candidates() {
        let chain = default_chain();
        let ik = IkSolver::default();
        let sc = scene();
        let k = knowledge(vec![]);
        let got = pose_query(
            &k,
            &PredicateExpr::class_is("node"),
            &top_down(),
            &chain.home(),
            &ctx(&chain, &ik, &sc),
        )
        .unwrap();
        assert!(got.is_empty());
    }

    #[test]
    fn one_object_four_symmetries() {
        let chain = default_chain();
        let ik = IkSolver::default();
        let sc = scene();
        let c = ctx(&chain, &ik, &sc);
        let k = knowledge(vec![node("node_1", 0.5, 0.1, 0.3)]);
        let expr = PredicateExpr::class_is("node");
        let got = pose_query(&k, &expr, &top_down(), &chain.home(), &c).unwrap();
        assert_eq!(got.len(), 4);
        assert_matches_oracle(&got, &brute_force(&k, &expr, &top_down(), &chain.home(), &c));
    }

    #[test]
    fn matches_brute_force_with_region_filter() {
        let chain = default_chain();
        let ik = IkSolver::default();
        let sc = scene();
        let c = ctx(&chain, &ik, &sc);
        let k = knowledge(vec![
            node("node_1", 0.45, 0.15, 0.3),
            node("node_2", 0.55, -0.1, -0.7),
            cube("link_1", "link", 0.6, 0.2, 1.2, 2),
        ]);
        let home = chain.home();
        let expr = PredicateExpr::class_is("node").and(PredicateExpr::region(Relation::LeftOf, "table"));
        let got = pose_query(&k, &expr, &top_down(), &home, &c).unwrap();
        assert!(!got.is_empty());
        assert!(got.iter().all(|g| g.object_id == "node_1"));
        assert_matches_oracle(&got, &brute_force(&k, &expr, &top_down(), &home, &c));
    }

    #[test]
    fn unreachable_objects_are_dropped() {
        let chain = default_chain();
        let ik = IkSolver::default();
        let sc = scene();
        let k = knowledge(vec![node("node_1", 0.5, 0.0, 0.0), node("node_9", 3.0, 0.0, 0.0)]);
        let got = pose_query(
            &k,
            &PredicateExpr::class_is("node"),
            &top_down(),
            &chain.home(),
            &ctx(&chain, &ik, &sc),
        )
        .unwrap();
        assert!(!got.is_empty());
        assert!(got.iter().all(|c| c.object_id == "node_1"));
    }

    #[test]
    fn colliding_goals_rank_last() {
        let chain = default_chain();
        let ik = IkSolver::default();
        let mut sc = scene();
        // a slab hanging just above node_1 blocks every grasp of it
        sc.upsert(SceneObject {
            id: "slab".into(),
            shape: OrientedBox::new(Pose::from_translation(0.45, 0.1, 0.12), [0.2, 0.2, 0.02]),
        });
        let k = knowledge(vec![node("node_1", 0.45, 0.1, 0.0), node("node_2", 0.5, -0.2, 0.0)]);
        let expr = PredicateExpr::class_is("node");
        for lambda in [1e3, 1e4, 1e6] {
            let c = QueryContext {
                weights: CostWeights {
                    lambda,
                    ..CostWeights::default()
                },
                ..ctx(&chain, &ik, &sc)
            };
            let got = pose_query(&k, &expr, &top_down(), &chain.home(), &c).unwrap();
            assert_eq!(got[0].object_id, "node_2");
            let first_hit = got.iter().position(|g| g.in_collision).unwrap();
            assert!(got[first_hit..].iter().all(|g| g.in_collision));
            assert!(got.iter().filter(|g| g.object_id == "node_1").all(|g| g.in_collision));
        }
    }

    #[test]
    fn raising_w_q_never_lengthens_the_chosen_motion() {
        let chain = default_chain();
        let ik = IkSolver::default();
        let sc = scene();
        let k = knowledge(vec![node("node_1", 0.4, 0.2, 0.4), node("node_2", 0.65, -0.15, -0.2)]);
        let expr = PredicateExpr::class_is("node");
        let home = chain.home();
        let mut last_dq = f64::INFINITY;
        for w_q in [0.0, 0.5, 1.0, 4.0, 16.0] {
            let c = QueryContext {
                weights: CostWeights {
                    w_q,
                    ..CostWeights::default()
                },
                ..ctx(&chain, &ik, &sc)
            };
            let best = pose_query(&k, &expr, &top_down(), &home, &c).unwrap().remove(0);
            assert!(best.dq <= last_dq + 1e-9);
            last_dq = best.dq;
        }
    }

    #[test]
    fn max_norm_joint_term() {
        let chain = default_chain();
        let ik = IkSolver::default();
        let sc = scene();
        let k = knowledge(vec![node("node_1", 0.45, 0.1, 0.3)]);
        let expr = PredicateExpr::class_is("node");
        let home = chain.home();
        let l2 = pose_query(&k, &expr, &top_down(), &home, &ctx(&chain, &ik, &sc)).unwrap();
        let c = QueryContext {
            weights: CostWeights {
                joint_metric: crate::geometry::JointMetric::LInf,
                ..CostWeights::default()
            },
            ..ctx(&chain, &ik, &sc)
        };
        let inf = pose_query(&k, &expr, &top_down(), &home, &c).unwrap();
        assert!(!inf.is_empty());
        for g in &inf {
            let expected = g
                .ik_solution
                .0
                .iter()
                .zip(&home.0)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            assert!((g.dq - expected).abs() < 1e-12);
            let same = l2
                .iter()
                .find(|c| c.object_id == g.object_id && c.symmetry_index == g.symmetry_index)
                .unwrap();
            assert!(g.dq <= same.dq + 1e-12);
        }
    }

    fn arb_world() -> impl Strategy<Value = Vec<DetectedObject>> {
        prop::collection::vec(
            (0.3f64..0.75, -0.35f64..0.35, -3.1f64..3.1, 1usize..=8, prop::bool::ANY),
            0..=5,
        )
        .prop_map(|specs| {
            specs
                .into_iter()
                .enumerate()
                .map(|(i, (x, y, yaw, order, is_node))| {
                    let class = if is_node { "node" } else { "link" };
                    cube(&format!("{class}_{i}"), class, x, y, yaw, order)
                })
                .collect()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn ordering_equals_oracle(objects in arb_world(), left in prop::bool::ANY) {
            let chain = default_chain();
            let ik = IkSolver::default();
            let sc = scene();
            let c = ctx(&chain, &ik, &sc);
            let k = knowledge(objects);
            let mut expr = PredicateExpr::class_is("node");
            if left {
                expr = expr.and(PredicateExpr::region(Relation::LeftOf, "table"));
            }
            let home = chain.home();
            let got = pose_query(&k, &expr, &top_down(), &home, &c).unwrap();
            assert_matches_oracle(&got, &brute_force(&k, &expr, &top_down(), &home, &c));
        }

        #[test]
        fn ordering_is_scale_invariant(objects in arb_world(), scale in 0.01f64..100.0) {
            let chain = default_chain();
            let ik = IkSolver::default();
            let sc = scene();
            let base = ctx(&chain, &ik, &sc);
            let scaled = QueryContext { weights: CostWeights::default().scaled(scale), ..base };
            let k = knowledge(objects);
            let expr = PredicateExpr::class_is("node");
            let home = chain.home();
            let a = pose_query(&k, &expr, &top_down(), &home, &base).unwrap();
            let b = pose_query(&k, &expr, &top_down(), &home, &scaled).unwrap();
            let ids = |v: &[GoalCandidate]| v.iter().map(|g| (g.object_id.clone(), g.symmetry_index)).collect::<Vec<_>>();
            prop_assert_eq!(ids(&a), ids(&b));
        }
    }
}

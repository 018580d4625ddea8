//! The simulated workcell: executes leaf operations against the world over
//! simulated time.
//!
//! Each tree tick hands the cell a time budget. A leaf plans everything it
//! needs on its first tick, then consumes the budget moving the arm, waiting
//! for the gripper or the camera. Unused budget carries over to the next leaf
//! in the same tick.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::arm::skills::{plan_smart_grasp, plan_smart_release, Attempt, SkillContext, SkillOutcome, SkillPlan};
use crate::arm::{
    link_capsules, plan_rrt_connect, segment_is_free, ArmError, AttachedObject, IkConfig, IkSolver, KinematicChain,
    OrientedBox, PlanningScene, RrtConfig, SceneObject, WorkspaceBounds,
};
use crate::bt::{LeafExecutor, LeafResult, OperationBinding};
use crate::geometry::{JointConfig, Pose};
use crate::knowledge::registry::BACKOFF_DEFAULT;
use crate::knowledge::{CostWeights, DetectedObject, KnowledgeError, KnowledgeStore, PredicateExpr, SymbolKind};
use crate::scenarios::ConditionProfile;
use crate::sim::world::grasp_offset;
use crate::sim::{detect_objects, DetectionSnapshot, WorldState};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CellConfig {
    /// Largest joint speed, rad/s; motions are timed by their largest joint change.
    pub joint_speed: f64,
    pub detection_time: f64,
    pub gripper_time: f64,
    /// Standard deviation of detection noise, meters.
    pub noise: f64,
    pub require_home_for_detection: bool,
    pub weights: CostWeights,
    pub rrt: RrtConfig,
    pub ik: IkConfig,
    pub bounds: WorkspaceBounds,
    /// Clearance added around detected loose objects when planning, meters.
    pub padding: f64,
    /// Emit a robot-state note for every tick the arm moves.
    pub stream_motion: bool,
}

impl Default for CellConfig {
    fn default() -> Self {
        Self {
            joint_speed: 1.0,
            detection_time: 1.0,
            gripper_time: 0.5,
            noise: 0.0,
            require_home_for_detection: true,
            weights: CostWeights::default(),
            rrt: RrtConfig::default(),
            ik: IkConfig::default(),
            bounds: WorkspaceBounds::default(),
            padding: 0.005,
            stream_motion: false,
        }
    }
}

/// What the robot believes it holds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeldBelief {
    pub id: String,
    pub dims: [f64; 3],
    /// Object pose in the tool frame.
    pub grasp: Pose,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobotState {
    pub q: JointConfig,
    pub tool: Pose,
    pub gripper: crate::sim::GripperState,
    pub holding: Option<String>,
}

/// Side effects worth reporting, drained by the session.
#[derive(Clone, Debug, PartialEq)]
pub enum CellNote {
    Robot(RobotState),
    WorldChanged,
    Detection(DetectionSnapshot),
    Log(String),
}

#[derive(Clone, Debug)]
enum Effect {
    Close { believed: Option<(String, Pose)> },
    Open,
    Detect,
}

#[derive(Clone, Debug)]
enum Step {
    Move {
        path: Vec<JointConfig>,
        next: usize,
        immune: Vec<String>,
    },
    Wait {
        remaining: f64,
        effect: Effect,
    },
}

#[derive(Clone, Debug)]
struct Activity {
    steps: VecDeque<Step>,
    detail: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CellStats {
    pub leaf_executions: usize,
    pub planning_failures: usize,
}

pub struct Workcell {
    pub chain: KinematicChain,
    pub ik: IkSolver,
    pub config: CellConfig,
    pub profile: ConditionProfile,
    pub world: WorldState,
    pub knowledge: KnowledgeStore,
    pub disabled: BTreeSet<String>,
    pub held: Option<HeldBelief>,
    pub stats: CellStats,
    /// Candidate attempts of every query-driven composite, by node id.
    pub attempts: Vec<(String, Vec<Attempt>)>,
    /// Every configuration the arm came to rest at or passed as a waypoint.
    pub trajectory: Vec<JointConfig>,
    /// The most recent plan of a query-driven composite.
    pub last_skill: Option<SkillPlan>,
    /// Set to let the current leaf finish without starting any other node.
    pub halting: bool,
    session_uids: BTreeMap<String, String>,
    rng: ChaCha8Rng,
    time: f64,
    budget: f64,
    activity: Option<Activity>,
    notes: Vec<CellNote>,
}

/// Straight joint moves are checked against the scene at this resolution.
const MOVE_CHECK_RESOLUTION: f64 = 0.02;

fn param_str<'a>(b: &'a OperationBinding, key: &str) -> Result<&'a str, String> {
    b.str_param(key)
        .filter(|s| !s.is_empty())
        .ok_or_else(|| format!("missing parameter {key:?}"))
}

impl Workcell {
    pub fn new(
        chain: KinematicChain,
        world: WorldState,
        profile: ConditionProfile,
        config: CellConfig,
        seed: u64,
    ) -> Self {
        let ik = IkSolver::new(config.ik.clone());
        Self {
            chain,
            ik,
            config,
            profile,
            world,
            knowledge: KnowledgeStore::new(),
            disabled: BTreeSet::new(),
            held: None,
            stats: CellStats::default(),
            attempts: vec![],
            trajectory: vec![],
            last_skill: None,
            halting: false,
            session_uids: BTreeMap::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            time: 0.0,
            budget: 0.0,
            activity: None,
            notes: vec![],
        }
    }

    /// Simulated seconds consumed by operations so far.
    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn begin_tick(&mut self, dt: f64) {
        self.budget = dt;
    }

    pub fn is_busy(&self) -> bool {
        self.activity.is_some()
    }

    /// Drops any half-finished operation, leaving the arm where it is.
    pub fn abort(&mut self) {
        self.activity = None;
    }

    pub fn drain_notes(&mut self) -> Vec<CellNote> {
        std::mem::take(&mut self.notes)
    }

    pub fn tool_pose(&self) -> Pose {
        self.chain
            .forward_kinematics(&self.world.q)
            .expect("world q always matches the chain")
    }

    pub fn robot_state(&self) -> RobotState {
        RobotState {
            q: self.world.q.clone(),
            tool: self.tool_pose(),
            gripper: self.world.gripper,
            holding: self.held.as_ref().map(|h| h.id.clone()),
        }
    }

    /// Ground-truth uid behind a session id of the latest detection.
    pub fn uid_of(&self, session_id: &str) -> Option<&str> {
        self.session_uids.get(session_id).map(String::as_str)
    }

    fn fixture_ids(&self) -> Vec<(String, OrientedBox)> {
        let mut counters: BTreeMap<&str, usize> = BTreeMap::new();
        self.world
            .objects
            .iter()
            .filter(|o| o.fixed)
            .map(|o| {
                let n = counters.entry(o.object_class.as_str()).or_default();
                *n += 1;
                (format!("{}_{}", o.object_class, n), o.shape())
            })
            .collect()
    }

    /// The robot's view of the world for planning: fixtures, the latest
    /// detection, user-disabled ids and whatever it believes it holds.
    pub fn planning_scene(&self) -> PlanningScene {
        let mut scene = PlanningScene::with_bounds(self.config.bounds);
        let held = self.held.as_ref().map(|h| h.id.as_str());
        let fixtures = self.fixture_ids();
        for o in self.knowledge.objects() {
            if Some(o.id.as_str()) == held {
                continue;
            }
            let pad = if fixtures.iter().any(|(id, _)| *id == o.id) {
                0.0
            } else {
                2.0 * self.config.padding
            };
            scene.upsert(SceneObject {
                id: o.id.clone(),
                shape: OrientedBox::new(o.pose, o.dims.map(|d| d + pad)),
            });
        }
        for (id, shape) in fixtures {
            if !scene.contains(&id) {
                scene.upsert(SceneObject { id, shape });
            }
        }
        scene.disabled = self.disabled.clone();
        scene.attached = self.held.as_ref().map(|h| AttachedObject {
            id: h.id.clone(),
            dims: h.dims,
            grasp: h.grasp,
        });
        scene
    }

    fn at_home(&self) -> bool {
        self.world.q.max_abs_diff(&self.chain.home()) <= 1e-3
    }

    /// Ground-truth objects whose box contains the tool point at `q`.
    fn objects_at_tool(&self, q: &JointConfig) -> Vec<String> {
        match self.chain.forward_kinematics(q) {
            Ok(t) => self.world.objects_containing(&t.translation),
            Err(_) => vec![],
        }
    }

    fn resolve_target(&self, name: &str) -> Result<Pose, String> {
        self.knowledge.resolve_symbol(name).map_err(|e| match e {
            KnowledgeError::UnknownSymbol(_) => "unknown waypoint".to_string(),
            other => other.to_string(),
        })
    }

    fn straight_move(&mut self, goal: JointConfig) -> Result<Activity, String> {
        let q = self.world.q.clone();
        if self.profile.collisions_enforced_on_unplanned_moves {
            let scene = self.planning_scene();
            match segment_is_free(&self.chain, &q, &goal, &scene, MOVE_CHECK_RESOLUTION) {
                Ok(true) => {}
                Ok(false) => return Err("path in collision".into()),
                Err(e) => return Err(e.to_string()),
            }
        }
        let mut immune = self.objects_at_tool(&q);
        immune.extend(self.objects_at_tool(&goal));
        Ok(Activity {
            steps: VecDeque::from([Step::Move {
                path: vec![goal],
                next: 0,
                immune,
            }]),
            detail: None,
        })
    }

    fn planned_move(&mut self, goal: JointConfig) -> Result<Activity, String> {
        let q = self.world.q.clone();
        let scene = self.planning_scene();
        match plan_rrt_connect(&self.chain, &q, &goal, &scene, &self.config.rrt, &mut self.rng) {
            Ok(Some(plan)) => Ok(Activity {
                steps: VecDeque::from([Step::Move {
                    path: plan.waypoints[1..].to_vec(),
                    next: 0,
                    immune: [self.objects_at_tool(&q), self.objects_at_tool(&goal)].concat(),
                }]),
                detail: None,
            }),
            Ok(None) => {
                self.stats.planning_failures += 1;
                Err("no plan".into())
            }
            Err(ArmError::StartInCollision) => {
                self.stats.planning_failures += 1;
                Err("start configuration in collision".into())
            }
            Err(e) => Err(e.to_string()),
        }
    }

    fn solve_ik(&self, target: &Pose) -> Result<JointConfig, String> {
        self.ik
            .solve(&self.chain, target, &self.world.q)
            .ok_or_else(|| "unreachable pose".to_string())
    }

    fn wait(&self, remaining: f64, effect: Effect) -> Activity {
        Activity {
            steps: VecDeque::from([Step::Wait { remaining, effect }]),
            detail: None,
        }
    }

    fn instant(detail: Option<String>) -> Activity {
        Activity {
            steps: VecDeque::new(),
            detail,
        }
    }

    fn backoff(b: &OperationBinding) -> Result<f64, String> {
        let v = match b.parameters.get("backoff") {
            None => BACKOFF_DEFAULT,
            Some(v) => v.as_f64().ok_or("backoff must be a number")?,
        };
        if !(0.01..=0.10).contains(&v) {
            return Err(format!("backoff {v} outside [0.01, 0.1]"));
        }
        Ok(v)
    }

    fn object_relative_symbol(&self, name: &str) -> Result<Pose, String> {
        match self.knowledge.symbol(name) {
            None => Err(format!("unknown symbol {name:?}")),
            Some(e) if e.kind != SymbolKind::ObjectPose => {
                Err(format!("symbol {name:?} is not taught relative to an object"))
            }
            Some(e) => Ok(e.pose),
        }
    }

    fn smart(&mut self, node_id: &str, b: &OperationBinding, grasp: bool) -> Result<Activity, String> {
        let expr = PredicateExpr::parse(param_str(b, "predicate")?).map_err(|e| e.to_string())?;
        let key = if grasp { "grasp" } else { "place" };
        let t_ee = self.object_relative_symbol(param_str(b, key)?)?;
        let backoff = Self::backoff(b)?;
        let scene = self.planning_scene();
        let q = self.world.q.clone();
        let ctx = SkillContext {
            chain: &self.chain,
            ik: &self.ik,
            rrt: &self.config.rrt,
            weights: self.config.weights,
        };
        let SkillOutcome { result, attempts } = if grasp {
            plan_smart_grasp(&ctx, &self.knowledge, &scene, &q, &expr, &t_ee, backoff, &mut self.rng)
        } else {
            plan_smart_release(&ctx, &self.knowledge, &scene, &q, &expr, &t_ee, backoff, &mut self.rng)
        };
        self.attempts.push((node_id.to_string(), attempts));
        let plan = match result {
            Ok(p) => p,
            Err(f) => {
                if f.planning {
                    self.stats.planning_failures += 1;
                }
                return Err(f.reason);
            }
        };
        let target_uid = self.uid_of(&plan.object_id).map(str::to_string);
        let held_uid = self.world.attached.as_ref().map(|a| a.uid.clone());
        let goal_q = plan.approach.last().expect("approach has a goal").clone();
        let mut approach_immune = self.objects_at_tool(&goal_q);
        if grasp {
            approach_immune.extend(target_uid.clone());
        }
        let mut retreat_immune = approach_immune.clone();
        retreat_immune.extend(held_uid);
        let effect = if grasp {
            Effect::Close {
                believed: Some((plan.object_id.clone(), plan.grasp)),
            }
        } else {
            Effect::Open
        };
        let steps = VecDeque::from([
            Step::Move {
                path: plan.to_backoff.waypoints[1..].to_vec(),
                next: 0,
                immune: vec![],
            },
            Step::Move {
                path: plan.approach[1..].to_vec(),
                next: 0,
                immune: approach_immune,
            },
            Step::Wait {
                remaining: self.config.gripper_time,
                effect,
            },
            Step::Move {
                path: plan.retreat[1..].to_vec(),
                next: 0,
                immune: retreat_immune,
            },
        ]);
        self.last_skill = Some(plan.clone());
        let verb = if grasp { "grasped" } else { "placed relative to" };
        Ok(Activity {
            steps,
            detail: Some(format!("{verb} {}", plan.object_id)),
        })
    }

    fn start(&mut self, node_id: &str, b: &OperationBinding) -> Result<Activity, String> {
        match b.operation_name.as_str() {
            "MoveToHome" => self.straight_move(self.chain.home()),
            "PlanToHome" => self.planned_move(self.chain.home()),
            "MoveToWaypoint" | "PlanToWaypoint" => {
                let target = self.resolve_target(param_str(b, "waypoint")?)?;
                let goal = self.solve_ik(&target)?;
                if b.operation_name == "MoveToWaypoint" {
                    self.straight_move(goal)
                } else {
                    self.planned_move(goal)
                }
            }
            "MoveRelativeToObject" => {
                let name = param_str(b, "pose")?;
                self.object_relative_symbol(name)?;
                let target = self.knowledge.resolve_symbol(name).map_err(|e| e.to_string())?;
                let goal = self.solve_ik(&target)?;
                self.straight_move(goal)
            }
            "DetectObjects" => {
                if self.config.require_home_for_detection && !self.at_home() {
                    return Err("workspace occluded".into());
                }
                Ok(self.wait(self.config.detection_time, Effect::Detect))
            }
            op @ ("DisableCollisions" | "EnableCollisions") => {
                let id = param_str(b, "object")?;
                if !self.planning_scene().contains(id) {
                    return Err(format!("unknown object {id:?}"));
                }
                if op == "DisableCollisions" {
                    self.disabled.insert(id.to_string());
                } else {
                    self.disabled.remove(id);
                }
                Ok(Self::instant(None))
            }
            "OpenGripper" => Ok(self.wait(self.config.gripper_time, Effect::Open)),
            "CloseGripper" => Ok(self.wait(self.config.gripper_time, Effect::Close { believed: None })),
            "SmartGrasp" => self.smart(node_id, b, true),
            "SmartRelease" => {
                if self.held.is_none() {
                    return Err("nothing held".into());
                }
                self.smart(node_id, b, false)
            }
            "KnowledgeTest" => {
                let expr = PredicateExpr::parse(param_str(b, "predicate")?).map_err(|e| e.to_string())?;
                match self.knowledge.knowledge_test(&expr) {
                    Ok(true) => Ok(Self::instant(Some("predicate holds".into()))),
                    Ok(false) => Err("predicate is false".into()),
                    Err(e) => Err(e.to_string()),
                }
            }
            other => Err(format!("unknown operation {other:?}")),
        }
    }

    fn apply(&mut self, effect: Effect) {
        let tool = self.tool_pose();
        match effect {
            Effect::Close { believed } => {
                let physical = self.world.close_gripper(&tool);
                if self.held.is_none() {
                    self.held = match believed {
                        Some((id, grasp)) => {
                            let dims = self.knowledge.object(&id).map(|o| o.dims).unwrap_or([0.0; 3]);
                            Some(HeldBelief { id, dims, grasp })
                        }
                        None => self
                            .knowledge
                            .objects()
                            .iter()
                            .filter(|o| o.object_class != "table")
                            .filter_map(|o| Some((grasp_offset(&o.pose, o.dims, &tool.translation)?, o)))
                            .min_by(|a, b| a.0.total_cmp(&b.0))
                            .map(|(_, o)| HeldBelief {
                                id: o.id.clone(),
                                dims: o.dims,
                                grasp: tool.inverse() * o.pose,
                            }),
                    };
                }
                self.notes.push(CellNote::Log(match physical {
                    Some(uid) => format!("gripper closed on {}", self.session_label(&uid)),
                    None => "gripper closed".into(),
                }));
            }
            Effect::Open => {
                let dropped = self.world.open_gripper();
                if let Some(h) = self.held.take() {
                    let settled = dropped
                        .as_ref()
                        .filter(|uid| self.uid_of(&h.id) == Some(uid.as_str()))
                        .and_then(|uid| self.world.object(uid))
                        .map(|o| o.pose);
                    let pose = settled.unwrap_or(tool * h.grasp);
                    self.knowledge.update_object_pose(&h.id, pose);
                }
                self.notes.push(CellNote::Log("gripper opened".into()));
            }
            Effect::Detect => {
                self.ingest_detection();
            }
        }
        self.notes.push(CellNote::WorldChanged);
    }

    fn ingest_detection(&mut self) -> DetectionSnapshot {
        let snapshot = detect_objects(&self.world, &mut self.rng, self.config.noise, self.time);
        self.knowledge.ingest_detection(snapshot.objects.clone());
        self.session_uids = snapshot.uids.clone();
        self.notes.push(CellNote::Detection(snapshot.clone()));
        snapshot
    }

    /// Detection outside any tree, for operators poking at an idle cell.
    pub fn detect_now(&mut self) -> Result<DetectionSnapshot, String> {
        if self.is_busy() {
            return Err("arm is busy".into());
        }
        if self.config.require_home_for_detection && !self.at_home() {
            return Err("workspace occluded".into());
        }
        self.time += self.config.detection_time;
        let snapshot = self.ingest_detection();
        self.notes.push(CellNote::WorldChanged);
        Ok(snapshot)
    }

    /// Readies the cell for another tree under `profile`. The world, the
    /// knowledge store and the clock carry over.
    pub fn restart(&mut self, profile: ConditionProfile, seed: u64) {
        self.profile = profile;
        self.rng = ChaCha8Rng::seed_from_u64(seed);
        self.disabled.clear();
        self.stats = CellStats::default();
        self.attempts.clear();
        self.trajectory.clear();
        self.last_skill = None;
        self.halting = false;
        self.activity = None;
    }

    fn session_label(&self, uid: &str) -> String {
        self.session_uids
            .iter()
            .find(|(_, u)| u.as_str() == uid)
            .map(|(s, _)| s.clone())
            .unwrap_or_else(|| "an undetected object".into())
    }

    /// Moves the arm to `q`, dragging any held object and pushing loose ones.
    /// Fails when the arm would pass through a fixture.
    fn place_arm(&mut self, q: &JointConfig, immune: &[String]) -> Result<(), String> {
        let capsules = link_capsules(&self.chain, q).map_err(|e| e.to_string())?;
        for f in self.world.objects.iter().filter(|o| o.fixed) {
            if capsules.iter().any(|c| c.intersects_box(&f.shape())) {
                return Err("arm collided with a fixture".into());
            }
        }
        self.world.q = q.clone();
        let tool = self.tool_pose();
        self.world.carry(&tool);
        let held = self
            .world
            .attached
            .as_ref()
            .and_then(|a| self.world.object(&a.uid))
            .map(|o| o.shape());
        let pushed = self.world.push_objects(&capsules, held.as_ref(), immune);
        if !pushed.is_empty() {
            self.notes.push(CellNote::Log(format!(
                "arm pushed {}",
                pushed
                    .iter()
                    .map(|u| self.session_label(u))
                    .collect::<Vec<_>>()
                    .join(", ")
            )));
            self.notes.push(CellNote::WorldChanged);
        }
        Ok(())
    }

    /// Moves along the straight segment toward `target` for at most `seconds`.
    /// Returns the time used and whether the target was reached.
    fn travel(&mut self, target: &JointConfig, seconds: f64, immune: &[String]) -> Result<(f64, bool), String> {
        let start = self.world.q.clone();
        let span = start.max_abs_diff(target);
        let needed = span / self.config.joint_speed;
        let (fraction, used, reached) = if needed <= seconds {
            (1.0, needed, true)
        } else {
            (seconds / needed, seconds, false)
        };
        let steps = ((span * fraction) / MOVE_CHECK_RESOLUTION).ceil().max(1.0) as usize;
        for k in 1..=steps {
            let s = fraction * k as f64 / steps as f64;
            let q = start.lerp(target, s);
            self.place_arm(&q, immune)?;
        }
        if reached {
            self.world.q = target.clone();
            self.trajectory.push(target.clone());
        }
        Ok((used, reached))
    }

    /// Spends the tick budget on the current activity.
    fn advance(&mut self) -> LeafResult {
        let Some(mut act) = self.activity.take() else {
            return LeafResult::success();
        };
        let q_before = self.world.q.clone();
        let mut failure = None;
        while let Some(step) = act.steps.front_mut() {
            match step {
                Step::Move { path, next, immune } => {
                    if *next >= path.len() {
                        act.steps.pop_front();
                        continue;
                    }
                    if self.budget <= 0.0 && self.world.q.max_abs_diff(&path[*next]) > 0.0 {
                        break;
                    }
                    let target = path[*next].clone();
                    let immune = immune.clone();
                    match self.travel(&target, self.budget, &immune) {
                        Ok((used, reached)) => {
                            self.budget -= used;
                            self.time += used;
                            if reached {
                                if let Some(Step::Move { next, .. }) = act.steps.front_mut() {
                                    *next += 1;
                                }
                            } else {
                                break;
                            }
                        }
                        Err(e) => {
                            failure = Some(e);
                            break;
                        }
                    }
                }
                Step::Wait { remaining, .. } => {
                    if *remaining > self.budget {
                        *remaining -= self.budget;
                        self.time += self.budget;
                        self.budget = 0.0;
                        break;
                    }
                    self.budget -= *remaining;
                    self.time += *remaining;
                    if let Some(Step::Wait { effect, .. }) = act.steps.pop_front() {
                        self.apply(effect);
                    }
                }
            }
        }
        if self.config.stream_motion && self.world.q != q_before {
            self.notes.push(CellNote::Robot(self.robot_state()));
        }
        if let Some(reason) = failure {
            self.notes.push(CellNote::Robot(self.robot_state()));
            return LeafResult::failure(reason);
        }
        if act.steps.is_empty() {
            if self.world.q != q_before {
                self.notes.push(CellNote::Robot(self.robot_state()));
            }
            return LeafResult {
                status: crate::bt::NodeStatus::Success,
                detail: act.detail,
            };
        }
        self.activity = Some(act);
        LeafResult::running()
    }

    /// Objects in the latest detection.
    pub fn detected(&self) -> &[DetectedObject] {
        self.knowledge.objects()
    }
}

impl LeafExecutor for Workcell {
    fn tick_leaf(&mut self, node_id: &str, binding: &OperationBinding, first: bool) -> LeafResult {
        if first {
            self.stats.leaf_executions += 1;
            self.activity = None;
            match self.start(node_id, binding) {
                Ok(act) => self.activity = Some(act),
                Err(reason) => return LeafResult::failure(reason),
            }
        }
        self.advance()
    }

    fn may_start(&self) -> bool {
        !self.halting
    }
}

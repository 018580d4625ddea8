//! Headless runs: teach, validate, execute, score.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::session::{Outcome, Session, DEFAULT_TICK_HZ, DEFAULT_TIMEOUT};
use super::teach::{TeachError, TeachScript};
use super::ConditionProfile;
use crate::arm::KinematicChain;
use crate::bt::{document::parse_tree, validate, BtNode, TreeError, Violation};
use crate::cell::{CellConfig, Workcell};
use crate::knowledge::registry::ComponentRegistry;
use crate::sim::{evaluate_task, ScenarioDoc, ScenarioError, TaskReport};

#[derive(Debug, Error)]
pub enum RunError {
    #[error("tree: {0}")]
    Tree(#[from] TreeError),
    #[error("scene: {0}")]
    Scenario(#[from] ScenarioError),
    #[error("teach script: {0}")]
    Teach(#[from] TeachError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub cell: CellConfig,
    /// Simulated seconds before the run is abandoned.
    pub timeout: f64,
    pub tick_hz: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            cell: CellConfig::default(),
            timeout: DEFAULT_TIMEOUT,
            tick_hz: DEFAULT_TICK_HZ,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeafFailure {
    pub node_id: String,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub scenario: String,
    pub condition: u8,
    pub seed: u64,
    pub outcome: Outcome,
    /// Task success; false whenever the tree was rejected.
    pub success: bool,
    pub task: Option<TaskReport>,
    pub tree_nodes: usize,
    pub tree_leaves: usize,
    pub leaf_executions: usize,
    pub planning_failures: usize,
    /// Simulated seconds of motion and operation overheads.
    pub sim_duration: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub violations: Vec<Violation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<LeafFailure>,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports always serialize")
    }
}

/// Builds a session ready to run, or the reasons the tree may not run.
pub fn prepare(
    chain: &KinematicChain,
    tree: BtNode,
    scene: &ScenarioDoc,
    teach: &TeachScript,
    profile: &ConditionProfile,
    seed: u64,
    config: &RunConfig,
) -> Result<Result<Session, Vec<Violation>>, RunError> {
    let scenario = scene.load(chain.home())?;
    let mut cell = Workcell::new(
        chain.clone(),
        scenario.world,
        profile.clone(),
        config.cell.clone(),
        seed,
    );
    teach.apply(&mut cell.knowledge)?;
    let violations = validate(&tree, &ComponentRegistry::standard(), profile, &cell.knowledge);
    if !violations.is_empty() {
        return Ok(Err(violations));
    }
    let mut session = Session::new(tree, cell);
    session.dt = 1.0 / config.tick_hz;
    Ok(Ok(session))
}

pub fn run_parsed(
    chain: &KinematicChain,
    tree: BtNode,
    scene: &ScenarioDoc,
    teach: &TeachScript,
    profile: &ConditionProfile,
    seed: u64,
    config: &RunConfig,
) -> Result<RunReport, RunError> {
    let tree_nodes = tree.node_count();
    let tree_leaves = tree.leaf_count();
    let mut report = RunReport {
        scenario: scene.name.clone(),
        condition: profile.id,
        seed,
        outcome: Outcome::Invalid,
        success: false,
        task: None,
        tree_nodes,
        tree_leaves,
        leaf_executions: 0,
        planning_failures: 0,
        sim_duration: 0.0,
        violations: vec![],
        failure: None,
    };
    let mut session = match prepare(chain, tree, scene, teach, profile, seed, config)? {
        Ok(s) => s,
        Err(violations) => {
            report.violations = violations;
            return Ok(report);
        }
    };
    report.outcome = session.run(config.timeout);
    let task = evaluate_task(&session.cell.world, &scene.task);
    report.success = task.success && report.outcome == Outcome::Success;
    report.task = Some(task);
    report.leaf_executions = session.cell.stats.leaf_executions;
    report.planning_failures = session.cell.stats.planning_failures;
    report.sim_duration = session.cell.time();
    report.failure = session
        .failure()
        .map(|(node_id, reason)| LeafFailure { node_id, reason });
    Ok(report)
}

/// Parses the documents and runs them. An empty teach text means no symbols.
pub fn run_scenario(
    chain: &KinematicChain,
    tree: &str,
    scene: &str,
    teach: Option<&str>,
    profile: &ConditionProfile,
    seed: u64,
    config: &RunConfig,
) -> Result<RunReport, RunError> {
    let tree = parse_tree(tree)?;
    let scene = ScenarioDoc::parse(scene)?;
    let teach = match teach {
        Some(t) => TeachScript::parse(t)?,
        None => TeachScript::default(),
    };
    run_parsed(chain, tree, &scene, &teach, profile, seed, config)
}

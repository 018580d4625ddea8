//! The full matrix of shipped reference trees, and the perturbation sweep.

use std::fmt::Write;

use super::perturb::perturb_parts;
use super::runner::{run_parsed, RunConfig, RunError, RunReport};
use super::teach::TeachScript;
use super::ConditionProfile;
use crate::arm::KinematicChain;
use crate::assets::{self, Reference};
use crate::bt::document::parse_tree;
use crate::sim::ScenarioDoc;

/// Runs `reference` on `scene` (its own scene when `None`).
pub fn run_reference(
    chain: &KinematicChain,
    reference: &Reference,
    scene: Option<&ScenarioDoc>,
    seed: u64,
    config: &RunConfig,
) -> Result<RunReport, RunError> {
    let own;
    let scene = match scene {
        Some(s) => s,
        None => {
            own = ScenarioDoc::parse(assets::scene(reference.scene).expect("shipped scene"))?;
            &own
        }
    };
    let profile = ConditionProfile::by_id(reference.condition).expect("shipped condition");
    run_parsed(
        chain,
        parse_tree(reference.tree)?,
        scene,
        &TeachScript::parse(reference.teach)?,
        &profile,
        seed,
        config,
    )
}

pub fn run_suite(
    chain: &KinematicChain,
    seed: u64,
    config: &RunConfig,
) -> Result<Vec<(&'static str, RunReport)>, RunError> {
    assets::REFERENCES
        .iter()
        .map(|r| Ok((r.id, run_reference(chain, r, None, seed, config)?)))
        .collect()
}

/// Runs `reference` on `count` perturbations of its scene, seeds `0..count`.
pub fn perturbation_sweep(
    chain: &KinematicChain,
    reference: &Reference,
    count: u64,
    amplitude: f64,
    config: &RunConfig,
) -> Result<Vec<RunReport>, RunError> {
    let base = ScenarioDoc::parse(assets::scene(reference.scene).expect("shipped scene"))?;
    (0..count)
        .map(|seed| {
            let scene = perturb_parts(&base, seed, amplitude);
            run_reference(chain, reference, Some(&scene), seed, config)
        })
        .collect()
}

pub fn summary_table(rows: &[(&str, RunReport)]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<10} {:>4} {:>8} {:>7} {:>6} {:>7} {:>6} {:>6} {:>8}",
        "tree", "cond", "outcome", "success", "moved", "stacked", "nodes", "leaves", "sim_s"
    );
    for (id, r) in rows {
        let task = r.task.as_ref();
        let _ = writeln!(
            out,
            "{:<10} {:>4} {:>8} {:>7} {:>6} {:>7} {:>6} {:>6} {:>8.2}",
            id,
            r.condition,
            format!("{:?}", r.outcome).to_uppercase(),
            r.success,
            task.map_or(0, |t| t.parts_moved),
            task.is_some_and(|t| t.link_stacked),
            r.tree_nodes,
            r.tree_leaves,
            r.sim_duration
        );
    }
    out
}

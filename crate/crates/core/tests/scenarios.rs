use std::path::Path;

use cobot_core::arm::{KinematicChain, PlanningProblem};
use cobot_core::assets;
use cobot_core::bt::document::{parse_tree, to_document};
use cobot_core::knowledge::{KnowledgeStore, PredicateExpr};
use cobot_core::scenarios::suite::run_reference;
use cobot_core::scenarios::{run_scenario, ConditionProfile, Outcome, RunConfig, TeachScript};
use cobot_core::sim::ScenarioDoc;

#[test]
fn baseline_rejects_a_smart_grasp_tree_without_running_it() {
    let r = assets::reference("task1_c4").unwrap();
    let report = run_scenario(
        &assets::default_chain(),
        r.tree,
        assets::TASK1_SCENE,
        Some(r.teach),
        &ConditionProfile::baseline(),
        1,
        &RunConfig::default(),
    )
    .unwrap();
    assert_eq!(report.outcome, Outcome::Invalid);
    assert!(!report.success);
    assert_eq!(report.leaf_executions, 0);
    assert!(report.task.is_none());
    assert!(report.violations.iter().any(|v| v.node_id.starts_with("smartGrasp")));
}

#[test]
fn smart_tree_for_task2_uses_fewer_leaves() {
    let leaves = |id| parse_tree(assets::reference(id).unwrap().tree).unwrap().leaf_count();
    assert!(leaves("task2_c4") < leaves("task2_c1"));
}

#[test]
fn task2_smart_tree_still_moves_parts_on_task3() {
    let chain = assets::default_chain();
    let r = assets::reference("task2_c4").unwrap();
    let scene = ScenarioDoc::parse(assets::TASK3_SCENE).unwrap();
    let report = run_reference(&chain, r, Some(&scene), 1, &RunConfig::default()).unwrap();
    assert_eq!(report.outcome, Outcome::Success);
    let task = report.task.unwrap();
    assert_eq!(task.parts_moved, 2);
    // the Task 2 tree never stacks the link, so Task 3 as a whole is not done
    assert!(!task.link_stacked);
}

#[test]
fn waypoint_tree_breaks_when_parts_move() {
    let chain = assets::default_chain();
    let r = assets::reference("task2_c1").unwrap();
    let scene = ScenarioDoc::parse(assets::TASK3_SCENE).unwrap();
    let report = run_reference(&chain, r, Some(&scene), 1, &RunConfig::default()).unwrap();
    assert!(report.task.map_or(0, |t| t.parts_moved) < 2);
}

#[test]
fn seeds_change_ids_not_results() {
    let chain = assets::default_chain();
    let r = assets::reference("task1_c4").unwrap();
    for seed in 0..5 {
        let report = run_reference(&chain, r, None, seed, &RunConfig::default()).unwrap();
        assert!(report.success, "seed {seed}: {:?}", report.failure);
    }
}

#[test]
fn report_is_a_json_document() {
    let r = assets::reference("task1_c1").unwrap();
    let report = run_reference(&assets::default_chain(), r, None, 4, &RunConfig::default()).unwrap();
    let value: serde_json::Value = serde_json::from_str(&report.to_json()).unwrap();
    assert_eq!(value["outcome"], "SUCCESS");
    assert_eq!(value["condition"], 1);
    assert_eq!(value["seed"], 4);
    assert_eq!(value["task"]["parts_moved"], 2);
    assert!(value.get("violations").is_none());
}

fn corpus(target: &str) -> Vec<(String, String)> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../fuzz/corpus")
        .join(target);
    let mut out: Vec<_> = std::fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| e.unwrap().path())
        .map(|p| (p.display().to_string(), std::fs::read_to_string(&p).unwrap()))
        .collect();
    out.sort();
    assert!(!out.is_empty());
    out
}

// The same checks the fuzz targets make, over their seed corpora.
#[test]
fn fuzz_seeds_hold_their_properties() {
    for (name, text) in corpus("tree_document") {
        if let Ok(tree) = parse_tree(&text) {
            assert!(tree.same_structure(&parse_tree(&to_document(&tree)).unwrap()), "{name}");
        }
    }
    for (name, text) in corpus("predicate_expr") {
        if let Ok(expr) = PredicateExpr::parse(&text) {
            assert_eq!(PredicateExpr::parse(&expr.to_string()).unwrap(), expr, "{name}");
        }
    }
    let chain = assets::default_chain();
    for (name, text) in corpus("scenario_document") {
        let doc = ScenarioDoc::parse(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
        let world = doc.load(chain.home()).unwrap().world;
        assert_eq!(
            cobot_core::sim::evaluate_task(&world, &doc.task).parts_moved,
            0,
            "{name}"
        );
    }
    for (name, text) in corpus("chain_config") {
        let c = KinematicChain::from_json(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
        c.forward_kinematics(&c.home()).unwrap();
    }
    for (name, text) in corpus("teach_script") {
        let script = TeachScript::parse(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(TeachScript::parse(&script.to_json()).unwrap(), script, "{name}");
        script.apply(&mut KnowledgeStore::new()).unwrap();
    }
    for (name, text) in corpus("planning_problem") {
        let p = PlanningProblem::parse(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
        p.check(&chain).unwrap();
    }
}

#[test]
fn malformed_documents_are_errors_not_panics() {
    let junk = [
        "",
        "{",
        "[]",
        "null",
        "{\"id\":1}",
        "\u{0}",
        "{\"name\":\"x\",\"symbols\":[{}]}",
    ];
    for text in junk {
        assert!(parse_tree(text).is_err());
        assert!(ScenarioDoc::parse(text).is_err());
        assert!(KinematicChain::from_json(text).is_err());
        assert!(PlanningProblem::parse(text).is_err());
        assert!(PredicateExpr::parse(text).is_err());
    }
    assert!(TeachScript::parse("{\"symbols\":[{\"name\":\"a\"}]}").is_err());
}

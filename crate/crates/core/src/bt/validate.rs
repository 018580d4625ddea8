use serde::{Deserialize, Serialize};

use super::{BtNode, NodeKind};
use crate::knowledge::{ComponentRegistry, KnowledgeStore, ParamKind, PredicateExpr, SymbolKind};
use crate::scenarios::ConditionProfile;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub node_id: String,
    pub reason: String,
}

pub const NOT_IN_PROFILE: &str = "operation not in condition profile";
pub const UNRESOLVED_SYMBOL: &str = "unresolved symbol";

/// Every problem that would stop `tree` from running under `profile`. Symbol
/// references are checked against `knowledge` as it stands now, so teach
/// scripts must be applied first.
pub fn validate(
    tree: &BtNode,
    registry: &ComponentRegistry,
    profile: &ConditionProfile,
    knowledge: &KnowledgeStore,
) -> Vec<Violation> {
    let mut out = Vec::new();
    for node in tree.walk() {
        if node.kind != NodeKind::Leaf {
            continue;
        }
        let mut flag = |reason: String| {
            out.push(Violation {
                node_id: node.id.clone(),
                reason,
            })
        };
        let Some(binding) = &node.operation else {
            flag("leaf without operation".into());
            continue;
        };
        let Some(spec) = registry.operation(&binding.operation_name) else {
            flag(format!("unknown operation {:?}", binding.operation_name));
            continue;
        };
        if !profile.allows(&spec.name) {
            flag(format!("{NOT_IN_PROFILE}: {}", spec.name));
        }
        for key in binding.parameters.keys() {
            if spec.param(key).is_none() {
                flag(format!("unexpected parameter {key:?}"));
            }
        }
        for param in &spec.params {
            let Some(value) = binding.parameters.get(&param.name) else {
                if param.required {
                    flag(format!("missing parameter {:?}", param.name));
                }
                continue;
            };
            if let ParamKind::Meters { min, max, .. } = param.kind {
                match value.as_f64() {
                    Some(v) if v >= min && v <= max => {}
                    Some(v) => flag(format!("parameter {:?} = {v} outside [{min}, {max}]", param.name)),
                    None => flag(format!("parameter {:?} must be a number", param.name)),
                }
                continue;
            }
            let Some(text) = value.as_str().filter(|s| !s.is_empty()) else {
                flag(format!("parameter {:?} must be a non-empty string", param.name));
                continue;
            };
            match &param.kind {
                ParamKind::Waypoint | ParamKind::ObjectPose => {
                    let want_object = matches!(param.kind, ParamKind::ObjectPose);
                    match knowledge.symbol(text) {
                        None => flag(format!("{UNRESOLVED_SYMBOL} {text:?}")),
                        Some(e) if want_object && e.kind != SymbolKind::ObjectPose => {
                            flag(format!("symbol {text:?} is not taught relative to an object"))
                        }
                        Some(e) if !want_object && e.kind == SymbolKind::ObjectPose => {
                            flag(format!("symbol {text:?} is object-relative, not a waypoint"))
                        }
                        Some(_) => {}
                    }
                }
                ParamKind::Predicate => {
                    if let Err(e) = PredicateExpr::parse(text) {
                        flag(format!("invalid predicate: {e}"));
                    }
                }
                ParamKind::ObjectId | ParamKind::Meters { .. } => {}
            }
        }
    }
    out
}

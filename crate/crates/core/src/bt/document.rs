//! Tree documents: `{id, kind, operation?, parameters?, children[]}` in JSON.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use super::{BtNode, NodeKind, OperationBinding};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TreeError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("duplicate node id {0:?}")]
    DuplicateId(String),
    #[error("node {node_id:?}: {message}")]
    Structure { node_id: String, message: String },
}

impl TreeError {
    pub fn node_id(&self) -> Option<&str> {
        match self {
            TreeError::Parse { .. } => None,
            TreeError::DuplicateId(id) => Some(id),
            TreeError::Structure { node_id, .. } => Some(node_id),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeDoc {
    pub id: String,
    pub kind: NodeKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub operation: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parameters: Option<BTreeMap<String, serde_json::Value>>,
    #[serde(default)]
    pub children: Vec<NodeDoc>,
}

impl From<&BtNode> for NodeDoc {
    fn from(node: &BtNode) -> Self {
        Self {
            id: node.id.clone(),
            kind: node.kind,
            operation: node.operation.as_ref().map(|o| o.operation_name.clone()),
            parameters: node.operation.as_ref().map(|o| o.parameters.clone()),
            children: node.children.iter().map(NodeDoc::from).collect(),
        }
    }
}

fn structure(id: &str, message: &str) -> TreeError {
    TreeError::Structure {
        node_id: id.to_string(),
        message: message.to_string(),
    }
}

fn build(doc: NodeDoc, ids: &mut HashSet<String>) -> Result<BtNode, TreeError> {
    if doc.id.is_empty() {
        return Err(structure("", "node id must not be empty"));
    }
    if !ids.insert(doc.id.clone()) {
        return Err(TreeError::DuplicateId(doc.id));
    }
    match doc.kind {
        NodeKind::Leaf => {
            if !doc.children.is_empty() {
                return Err(structure(&doc.id, "a leaf has no children"));
            }
            let Some(name) = doc.operation else {
                return Err(structure(&doc.id, "a leaf needs an operation"));
            };
            Ok(BtNode::leaf(
                doc.id,
                OperationBinding {
                    operation_name: name,
                    parameters: doc.parameters.unwrap_or_default(),
                },
            ))
        }
        kind => {
            if doc.operation.is_some() || doc.parameters.is_some() {
                return Err(structure(&doc.id, "only leaves carry an operation"));
            }
            if doc.children.is_empty() {
                return Err(structure(&doc.id, "a composite needs at least one child"));
            }
            let children = doc
                .children
                .into_iter()
                .map(|c| build(c, ids))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(BtNode::composite(doc.id, kind, children))
        }
    }
}

impl TryFrom<NodeDoc> for BtNode {
    type Error = TreeError;

    fn try_from(doc: NodeDoc) -> Result<Self, TreeError> {
        build(doc, &mut HashSet::new())
    }
}

/// Parses a tree document. All statuses start IDLE.
pub fn parse_tree(text: &str) -> Result<BtNode, TreeError> {
    let doc: NodeDoc = serde_json::from_str(text).map_err(|e| TreeError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    BtNode::try_from(doc)
}

/// Pretty-printed document text.
pub fn to_document(node: &BtNode) -> String {
    serde_json::to_string_pretty(&NodeDoc::from(node)).expect("tree documents always serialize")
}

impl Serialize for BtNode {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        NodeDoc::from(self).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for BtNode {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let doc = NodeDoc::deserialize(deserializer)?;
        BtNode::try_from(doc).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bt::{tick, LeafExecutor, LeafResult, NodeStatus};
    use proptest::prelude::*;

    fn reference_tree() -> BtNode {
        BtNode::sequence(
            "root",
            vec![
                BtNode::leaf("detect", OperationBinding::new("DetectObjects")),
                BtNode::leaf(
                    "grasp",
                    OperationBinding::new("SmartGrasp")
                        .with("predicate", "class=node & region=RIGHT_OF@table")
                        .with("grasp", "grasp_node")
                        .with("backoff", 0.05),
                ),
                BtNode::leaf(
                    "release",
                    OperationBinding::new("SmartRelease")
                        .with("predicate", "class=table")
                        .with("place", "place_left")
                        .with("backoff", 0.05),
                ),
            ],
        )
    }

    #[test]
    fn single_leaf_round_trip() {
        let leaf = BtNode::leaf("home", OperationBinding::new("MoveToHome"));
        let back = parse_tree(&to_document(&leaf)).unwrap();
        assert!(back.same_structure(&leaf));
    }

    #[test]
    fn grasp_release_tree_round_trips_with_idle_statuses() {
        struct Ok_;
        impl LeafExecutor for Ok_ {
            fn tick_leaf(&mut self, _: &str, _: &OperationBinding, _: bool) -> LeafResult {
                LeafResult::success()
            }
        }
        let mut tree = reference_tree();
        tick(&mut tree, &mut Ok_, &mut vec![]);
        assert_eq!(tree.status, NodeStatus::Success);
        let back = parse_tree(&to_document(&tree)).unwrap();
        assert!(back.same_structure(&tree));
        assert!(back.statuses().iter().all(|(_, s)| *s == NodeStatus::Idle));
    }

    #[test]
    fn duplicate_ids_are_rejected() {
        let text = r#"{"id":"a","kind":"SEQUENCE","children":[
            {"id":"b","kind":"LEAF","operation":"MoveToHome"},
            {"id":"b","kind":"LEAF","operation":"OpenGripper"}]}"#;
        assert_eq!(parse_tree(text), Err(TreeError::DuplicateId("b".into())));
    }

    #[test]
    fn malformed_document_reports_position() {
        let text = "{\n  \"id\": \"a\",\n  \"kind\": \"LEAF\" \"operation\": \"X\"\n}";
        match parse_tree(text) {
            Err(TreeError::Parse { line, column, .. }) => {
                assert_eq!(line, 3);
                assert!(column > 1);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            parse_tree(r#"{"id":"a","kind":"LOOP","children":[]}"#),
            Err(TreeError::Parse { .. })
        ));
    }

    #[test]
    fn structural_rules() {
        let empty_seq = r#"{"id":"a","kind":"SEQUENCE","children":[]}"#;
        assert!(matches!(parse_tree(empty_seq), Err(TreeError::Structure { .. })));
        let bare_leaf = r#"{"id":"a","kind":"LEAF"}"#;
        assert!(matches!(parse_tree(bare_leaf), Err(TreeError::Structure { .. })));
        let leaf_with_kids =
            r#"{"id":"a","kind":"LEAF","operation":"X","children":[{"id":"b","kind":"LEAF","operation":"Y"}]}"#;
        assert!(matches!(parse_tree(leaf_with_kids), Err(TreeError::Structure { .. })));
    }

    fn arb_tree() -> impl Strategy<Value = BtNode> {
        let leaf = ("[A-Za-z]{1,12}", prop::option::of(-5.0f64..5.0)).prop_map(|(op, x)| {
            let mut b = OperationBinding::new(op);
            if let Some(x) = x {
                b = b.with("backoff", x);
            }
            BtNode::leaf("", b)
        });
        let tree = leaf.prop_recursive(5, 60, 4, |inner| {
            (prop::bool::ANY, prop::collection::vec(inner, 1..4)).prop_map(|(seq, kids)| {
                if seq {
                    BtNode::sequence("", kids)
                } else {
                    BtNode::selector("", kids)
                }
            })
        });
        tree.prop_map(|mut t| {
            fn number(n: &mut BtNode, next: &mut usize) {
                n.id = format!("n{next}");
                *next += 1;
                for c in &mut n.children {
                    number(c, next);
                }
            }
            number(&mut t, &mut 0);
            t
        })
    }

    proptest! {
        #[test]
        fn documents_round_trip(t in arb_tree()) {
            let back = parse_tree(&to_document(&t)).unwrap();
            prop_assert!(back.same_structure(&t));
        }

        #[test]
        fn parser_never_panics(s in "\\PC{0,80}") {
            let _ = parse_tree(&s);
        }
    }
}

//! Behavior trees: nodes, memory-semantics ticking, the JSON document format
//! and validation against a condition profile.

pub mod document;
pub mod validate;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use document::TreeError;
pub use validate::{validate, Violation};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum NodeKind {
    Sequence,
    Selector,
    Leaf,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum NodeStatus {
    #[default]
    Idle,
    Running,
    Success,
    Failure,
}

impl NodeStatus {
    pub fn is_terminal(self) -> bool {
        matches!(self, NodeStatus::Success | NodeStatus::Failure)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct OperationBinding {
    pub operation_name: String,
    pub parameters: BTreeMap<String, serde_json::Value>,
}

impl OperationBinding {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            operation_name: name.into(),
            parameters: BTreeMap::new(),
        }
    }

    pub fn with(mut self, key: &str, value: impl Into<serde_json::Value>) -> Self {
        self.parameters.insert(key.to_string(), value.into());
        self
    }

    pub fn str_param(&self, key: &str) -> Option<&str> {
        self.parameters.get(key).and_then(|v| v.as_str())
    }

    pub fn f64_param(&self, key: &str) -> Option<f64> {
        self.parameters.get(key).and_then(|v| v.as_f64())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BtNode {
    pub id: String,
    pub kind: NodeKind,
    pub children: Vec<BtNode>,
    pub operation: Option<OperationBinding>,
    pub status: NodeStatus,
    /// Index of the child a composite resumes at.
    cursor: usize,
}

impl BtNode {
    pub fn leaf(id: impl Into<String>, operation: OperationBinding) -> Self {
        Self {
            id: id.into(),
            kind: NodeKind::Leaf,
            children: vec![],
            operation: Some(operation),
            status: NodeStatus::Idle,
            cursor: 0,
        }
    }

    pub fn composite(id: impl Into<String>, kind: NodeKind, children: Vec<BtNode>) -> Self {
        Self {
            id: id.into(),
            kind,
            children,
            operation: None,
            status: NodeStatus::Idle,
            cursor: 0,
        }
    }

    pub fn sequence(id: impl Into<String>, children: Vec<BtNode>) -> Self {
        Self::composite(id, NodeKind::Sequence, children)
    }

    pub fn selector(id: impl Into<String>, children: Vec<BtNode>) -> Self {
        Self::composite(id, NodeKind::Selector, children)
    }

    /// Pre-order traversal.
    pub fn walk(&self) -> Vec<&BtNode> {
        let mut out = vec![self];
        for c in &self.children {
            out.extend(c.walk());
        }
        out
    }

    pub fn node_count(&self) -> usize {
        1 + self.children.iter().map(BtNode::node_count).sum::<usize>()
    }

    pub fn leaf_count(&self) -> usize {
        if self.kind == NodeKind::Leaf {
            1
        } else {
            self.children.iter().map(BtNode::leaf_count).sum()
        }
    }

    pub fn find(&self, id: &str) -> Option<&BtNode> {
        self.walk().into_iter().find(|n| n.id == id)
    }

    /// Node statuses in pre-order.
    pub fn statuses(&self) -> Vec<(String, NodeStatus)> {
        self.walk().into_iter().map(|n| (n.id.clone(), n.status)).collect()
    }

    /// Back to IDLE everywhere.
    pub fn reset(&mut self) {
        self.status = NodeStatus::Idle;
        self.cursor = 0;
        for c in &mut self.children {
            c.reset();
        }
    }

    /// Structural equality ignoring run-time state.
    pub fn same_structure(&self, other: &BtNode) -> bool {
        self.id == other.id
            && self.kind == other.kind
            && self.operation == other.operation
            && self.children.len() == other.children.len()
            && self
                .children
                .iter()
                .zip(&other.children)
                .all(|(a, b)| a.same_structure(b))
    }
}

/// Result of ticking one leaf.
#[derive(Clone, Debug, PartialEq)]
pub struct LeafResult {
    pub status: NodeStatus,
    pub detail: Option<String>,
}

impl LeafResult {
    pub fn running() -> Self {
        Self {
            status: NodeStatus::Running,
            detail: None,
        }
    }

    pub fn success() -> Self {
        Self {
            status: NodeStatus::Success,
            detail: None,
        }
    }

    pub fn success_with(detail: impl Into<String>) -> Self {
        Self {
            status: NodeStatus::Success,
            detail: Some(detail.into()),
        }
    }

    pub fn failure(reason: impl Into<String>) -> Self {
        Self {
            status: NodeStatus::Failure,
            detail: Some(reason.into()),
        }
    }
}

/// Runs leaf operations. `first` is true on the tick that starts the leaf.
pub trait LeafExecutor {
    fn tick_leaf(&mut self, node_id: &str, binding: &OperationBinding, first: bool) -> LeafResult;

    /// False once the executor is winding down: nodes not yet entered stay IDLE.
    fn may_start(&self) -> bool {
        true
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatusEvent {
    pub node_id: String,
    pub status: NodeStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

/// Ticks the tree once and returns the root status. Every status change is
/// appended to `events`; a node entering the tick for the first time always
/// reports RUNNING before any terminal status.
pub fn tick(node: &mut BtNode, exec: &mut dyn LeafExecutor, events: &mut Vec<StatusEvent>) -> NodeStatus {
    if node.status.is_terminal() {
        return node.status;
    }
    let first = node.status == NodeStatus::Idle;
    if first && !exec.may_start() {
        return NodeStatus::Idle;
    }
    if first {
        set_status(node, NodeStatus::Running, None, events);
    }
    match node.kind {
        NodeKind::Leaf => {
            let binding = node.operation.clone().unwrap_or_default();
            let r = exec.tick_leaf(&node.id, &binding, first);
            if r.status.is_terminal() {
                set_status(node, r.status, r.detail, events);
            }
        }
        NodeKind::Sequence | NodeKind::Selector => {
            // a sequence stops on FAILURE, a selector on SUCCESS
            let stop_on = if node.kind == NodeKind::Sequence {
                NodeStatus::Failure
            } else {
                NodeStatus::Success
            };
            let mut result = None;
            while node.cursor < node.children.len() {
                let child = &mut node.children[node.cursor];
                match tick(child, exec, events) {
                    NodeStatus::Running | NodeStatus::Idle => {
                        result = Some(NodeStatus::Running);
                        break;
                    }
                    s if s == stop_on => {
                        result = Some(s);
                        break;
                    }
                    _ => node.cursor += 1,
                }
            }
            let status = result.unwrap_or(if stop_on == NodeStatus::Failure {
                NodeStatus::Success
            } else {
                NodeStatus::Failure
            });
            if status.is_terminal() {
                set_status(node, status, None, events);
            }
        }
    }
    node.status
}

fn set_status(node: &mut BtNode, status: NodeStatus, detail: Option<String>, events: &mut Vec<StatusEvent>) {
    node.status = status;
    events.push(StatusEvent {
        node_id: node.id.clone(),
        status,
        detail,
    });
}

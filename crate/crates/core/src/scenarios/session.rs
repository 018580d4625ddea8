//! One tree running in one workcell, producing the event log clients replay.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::bt::{self, BtNode, NodeStatus, StatusEvent};
use crate::cell::{CellNote, Workcell};
use crate::sim::WorldState;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EventKind {
    NodeStatus,
    RobotState,
    WorldChanged,
    Detection,
    Log,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub seq: u64,
    /// Simulated seconds.
    pub time: f64,
    pub kind: EventKind,
    pub payload: Value,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Outcome {
    Success,
    Failure,
    Timeout,
    Stopped,
    Invalid,
}

/// The event a cell note is published as.
pub fn note_event(note: CellNote, world: &WorldState) -> (EventKind, Value) {
    match note {
        CellNote::Robot(r) => (EventKind::RobotState, json!(r)),
        CellNote::WorldChanged => (EventKind::WorldChanged, json!(world)),
        CellNote::Detection(d) => (EventKind::Detection, json!(d)),
        CellNote::Log(message) => (EventKind::Log, json!({ "message": message })),
    }
}

pub const DEFAULT_TICK_HZ: f64 = 20.0;
pub const DEFAULT_TIMEOUT: f64 = 300.0;

pub struct Session {
    pub tree: BtNode,
    pub cell: Workcell,
    pub dt: f64,
    events: Vec<Event>,
    next_seq: u64,
    ticks: u64,
    root: NodeStatus,
    stopped: bool,
}

impl Session {
    pub fn new(tree: BtNode, cell: Workcell) -> Self {
        Self {
            tree,
            cell,
            dt: 1.0 / DEFAULT_TICK_HZ,
            events: vec![],
            next_seq: 0,
            ticks: 0,
            root: NodeStatus::Idle,
            stopped: false,
        }
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn take_events(&mut self) -> Vec<Event> {
        std::mem::take(&mut self.events)
    }

    pub fn status(&self) -> NodeStatus {
        self.root
    }

    /// Simulated seconds of tree ticking so far.
    pub fn elapsed(&self) -> f64 {
        self.ticks as f64 * self.dt
    }

    pub fn is_finished(&self) -> bool {
        self.root.is_terminal() || self.stopped
    }

    pub fn push_event(&mut self, kind: EventKind, payload: Value) {
        self.events.push(Event {
            seq: self.next_seq,
            time: self.cell.time(),
            kind,
            payload,
        });
        self.next_seq += 1;
    }

    /// Lets the running leaf finish, then starts nothing else.
    pub fn request_stop(&mut self) {
        self.cell.halting = true;
    }

    fn record(&mut self, status_events: Vec<StatusEvent>) {
        // notes produced inside a leaf belong before its terminal status
        let notes = self.cell.drain_notes();
        let (terminal, entering): (Vec<_>, Vec<_>) = status_events.into_iter().partition(|e| e.status.is_terminal());
        for e in entering {
            self.push_event(EventKind::NodeStatus, json!(e));
        }
        for n in notes {
            let (kind, payload) = note_event(n, &self.cell.world);
            self.push_event(kind, payload);
        }
        for e in terminal {
            self.push_event(EventKind::NodeStatus, json!(e));
        }
    }

    /// One tree tick. Returns the root status.
    pub fn step(&mut self) -> NodeStatus {
        if self.is_finished() {
            return self.root;
        }
        self.cell.begin_tick(self.dt);
        let mut status_events = Vec::new();
        self.root = bt::tick(&mut self.tree, &mut self.cell, &mut status_events);
        self.ticks += 1;
        self.record(status_events);
        if self.cell.halting && !self.cell.is_busy() && !self.root.is_terminal() {
            self.stopped = true;
            self.push_event(EventKind::Log, json!({ "message": "execution stopped" }));
        }
        self.root
    }

    /// Ticks until the tree finishes or `timeout` simulated seconds pass.
    pub fn run(&mut self, timeout: f64) -> Outcome {
        while !self.is_finished() {
            if self.elapsed() >= timeout {
                self.cell.abort();
                return Outcome::Timeout;
            }
            self.step();
        }
        self.outcome().expect("finished")
    }

    pub fn outcome(&self) -> Option<Outcome> {
        match self.root {
            NodeStatus::Success => Some(Outcome::Success),
            NodeStatus::Failure => Some(Outcome::Failure),
            _ if self.stopped => Some(Outcome::Stopped),
            _ => None,
        }
    }

    /// The leaf whose failure ended the run, with its reason.
    pub fn failure(&self) -> Option<(String, String)> {
        self.events.iter().rev().find_map(|e| {
            let s: StatusEvent = serde_json::from_value(e.payload.clone()).ok()?;
            if e.kind != EventKind::NodeStatus || s.status != NodeStatus::Failure {
                return None;
            }
            let node = self.tree.find(&s.node_id)?;
            (node.kind == bt::NodeKind::Leaf).then(|| (s.node_id, s.detail.unwrap_or_default()))
        })
    }
}

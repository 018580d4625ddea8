//! Service state and every operation on it. The executor task owns the one
//! `Engine`; handlers reach it only through the command queue.

use std::sync::{Arc, RwLock};

use axum::http::StatusCode;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tokio::sync::broadcast;

use cobot_core::arm::KinematicChain;
use cobot_core::bt::document::parse_tree;
use cobot_core::bt::{validate, BtNode, NodeStatus, StatusEvent};
use cobot_core::cell::Workcell;
use cobot_core::knowledge::{ComponentRegistry, DetectedObject, PredicateExpr, SymbolEntry};
use cobot_core::scenarios::session::note_event;
use cobot_core::scenarios::{ConditionProfile, Event, EventKind, Outcome, RunConfig, Session, TeachScript};
use cobot_core::sim::{DetectionSnapshot, ScenarioDoc, WorldState};

use crate::error::ApiError;

/// Everything published so far, plus the live feed.
#[derive(Clone)]
pub struct EventLog {
    history: Arc<RwLock<Vec<Event>>>,
    tx: broadcast::Sender<Event>,
}

impl EventLog {
    pub fn new(buffer: usize) -> Self {
        Self {
            history: Arc::new(RwLock::new(Vec::new())),
            tx: broadcast::channel(buffer.max(1)).0,
        }
    }

    fn publish(&self, time: f64, kind: EventKind, payload: Value) {
        let mut history = self.history.write().expect("event log lock");
        let event = Event {
            seq: history.len() as u64,
            time,
            kind,
            payload,
        };
        history.push(event.clone());
        // no receivers is fine
        let _ = self.tx.send(event);
    }

    /// Subscribes, then copies the history from `since` on. Live events with a
    /// sequence number below the returned `next` are already in the copy.
    pub fn replay(&self, since: u64) -> (Vec<Event>, u64, broadcast::Receiver<Event>) {
        let rx = self.tx.subscribe();
        let history = self.history.read().expect("event log lock");
        let start = (since as usize).min(history.len());
        (history[start..].to_vec(), history.len() as u64, rx)
    }

    pub fn len(&self) -> u64 {
        self.history.read().expect("event log lock").len() as u64
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunRequest {
    pub condition: u8,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatusDoc {
    pub running: bool,
    pub condition: u8,
    pub seed: u64,
    pub outcome: Option<Outcome>,
    /// Simulated seconds on the cell clock.
    pub time: f64,
    pub events: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymbolsDoc {
    pub symbols: Vec<SymbolEntry>,
    pub objects: Vec<DetectedObject>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegistryDoc {
    pub condition: ConditionProfile,
    /// Operations a tree may use under `condition`.
    pub palette: Vec<String>,
    #[serde(flatten)]
    pub registry: ComponentRegistry,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueryDoc {
    pub predicate: String,
    pub holds: bool,
    pub matches: Vec<String>,
}

pub struct Engine {
    config: RunConfig,
    registry: ComponentRegistry,
    profile: ConditionProfile,
    seed: u64,
    tree: Option<BtNode>,
    idle: Option<Workcell>,
    session: Option<Session>,
    outcome: Option<Outcome>,
    log: EventLog,
}

impl Engine {
    pub fn new(
        chain: KinematicChain,
        scene: &ScenarioDoc,
        teach: &TeachScript,
        condition: u8,
        seed: u64,
        config: RunConfig,
        log: EventLog,
    ) -> Result<Self, String> {
        let profile = ConditionProfile::by_id(condition).ok_or(format!("no condition {condition}"))?;
        let world = scene.load(chain.home()).map_err(|e| e.to_string())?.world;
        let mut cell = Workcell::new(chain, world, profile.clone(), config.cell.clone(), seed);
        teach.apply(&mut cell.knowledge).map_err(|e| e.to_string())?;
        Ok(Self {
            config,
            registry: ComponentRegistry::standard(),
            profile,
            seed,
            tree: None,
            idle: Some(cell),
            session: None,
            outcome: None,
            log,
        })
    }

    pub fn events(&self) -> &EventLog {
        &self.log
    }

    fn cell(&self) -> &Workcell {
        match (&self.idle, &self.session) {
            (Some(c), _) => c,
            (None, Some(s)) => &s.cell,
            (None, None) => unreachable!("the cell is always somewhere"),
        }
    }

    fn idle_cell(&mut self) -> Result<&mut Workcell, ApiError> {
        self.idle.as_mut().ok_or_else(ApiError::running)
    }

    pub fn is_running(&self) -> bool {
        self.session.is_some()
    }

    fn publish_notes(&mut self) {
        let Some(cell) = self.idle.as_mut() else { return };
        let notes = cell.drain_notes();
        let time = cell.time();
        for n in notes {
            let (kind, payload) = note_event(n, &cell.world);
            self.log.publish(time, kind, payload);
        }
    }

    fn log_message(&self, message: &str, extra: Value) {
        let mut payload = json!({ "message": message });
        if let (Some(p), Value::Object(extra)) = (payload.as_object_mut(), extra) {
            p.extend(extra);
        }
        self.log.publish(self.cell().time(), EventKind::Log, payload);
    }

    pub fn status(&self) -> StatusDoc {
        StatusDoc {
            running: self.is_running(),
            condition: self.profile.id,
            seed: self.seed,
            outcome: self.outcome,
            time: self.cell().time(),
            events: self.log.len(),
        }
    }

    pub fn world(&self) -> WorldState {
        self.cell().world.clone()
    }

    pub fn detect(&mut self) -> Result<DetectionSnapshot, ApiError> {
        let snapshot = self
            .idle_cell()?
            .detect_now()
            .map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "OPERATION_FAILED", e))?;
        self.publish_notes();
        Ok(snapshot)
    }

    pub fn tree(&self) -> Result<&BtNode, ApiError> {
        self.tree.as_ref().ok_or_else(ApiError::no_tree)
    }

    pub fn put_tree(&mut self, text: &str) -> Result<&BtNode, ApiError> {
        if self.is_running() {
            return Err(ApiError::running());
        }
        let tree = parse_tree(text).map_err(|e| {
            ApiError::new(StatusCode::BAD_REQUEST, "TREE_PARSE_ERROR", e.to_string()).at_node(e.node_id())
        })?;
        self.log_message("tree replaced", json!({ "nodes": tree.node_count() }));
        self.outcome = None;
        Ok(self.tree.insert(tree))
    }

    pub fn run(&mut self, req: RunRequest) -> Result<StatusDoc, ApiError> {
        if self.is_running() {
            return Err(ApiError::running());
        }
        let profile = ConditionProfile::by_id(req.condition).ok_or_else(|| {
            ApiError::new(
                StatusCode::UNPROCESSABLE_ENTITY,
                "UNKNOWN_CONDITION",
                format!("condition must be 1 to 4, got {}", req.condition),
            )
        })?;
        let mut tree = self.tree.take().ok_or_else(ApiError::no_tree)?;
        let cell = self.idle.as_ref().expect("idle when not running");
        let violations = validate(&tree, &self.registry, &profile, &cell.knowledge);
        if let Some(first) = violations.first() {
            let message = violations
                .iter()
                .map(|v| format!("{}: {}", v.node_id, v.reason))
                .collect::<Vec<_>>()
                .join("; ");
            let err =
                ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "INVALID_TREE", message).at_node(Some(&first.node_id));
            self.tree = Some(tree);
            return Err(err);
        }
        tree.reset();
        self.profile = profile.clone();
        self.seed = req.seed;
        self.outcome = None;
        let mut cell = self.idle.take().expect("idle when not running");
        cell.restart(profile, req.seed);
        let time = cell.time();
        for (node_id, status) in tree.statuses() {
            let e = StatusEvent {
                node_id,
                status,
                detail: None,
            };
            self.log.publish(time, EventKind::NodeStatus, json!(e));
        }
        let mut session = Session::new(tree, cell);
        session.dt = 1.0 / self.config.tick_hz;
        self.session = Some(session);
        self.log_message("run started", json!({ "condition": req.condition, "seed": req.seed }));
        Ok(self.status())
    }

    pub fn stop(&mut self) -> Result<StatusDoc, ApiError> {
        let session = self.session.as_mut().ok_or_else(ApiError::not_running)?;
        session.request_stop();
        Ok(self.status())
    }

    /// Advances a running tree by one tick. Returns whether it is still running.
    pub fn step(&mut self) -> bool {
        let Some(session) = self.session.as_mut() else {
            return false;
        };
        let timed_out = session.elapsed() >= self.config.timeout;
        if timed_out {
            session.cell.abort();
        } else {
            session.step();
        }
        for e in session.take_events() {
            self.log.publish(e.time, e.kind, e.payload);
        }
        if !timed_out && !session.is_finished() {
            return true;
        }
        let outcome = if timed_out {
            Outcome::Timeout
        } else {
            session.outcome().expect("finished")
        };
        let session = self.session.take().expect("running");
        let failure = session.failure();
        let Session { tree, cell, .. } = session;
        self.tree = Some(tree);
        self.idle = Some(cell);
        self.outcome = Some(outcome);
        let mut extra = json!({ "outcome": outcome });
        if let Some((node_id, reason)) = failure.filter(|_| outcome == Outcome::Failure) {
            extra["node_id"] = json!(node_id);
            extra["reason"] = json!(reason);
        }
        self.log_message("run finished", extra);
        false
    }

    pub fn teach(&mut self, entry: SymbolEntry) -> Result<SymbolEntry, ApiError> {
        let name = entry.name.clone();
        let cell = self.idle_cell()?;
        cell.knowledge
            .register_symbol(entry)
            .map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "TEACH_REJECTED", e.to_string()))?;
        let stored = cell.knowledge.symbol(&name).expect("just registered").clone();
        self.log_message("symbol taught", json!({ "name": name }));
        Ok(stored)
    }

    pub fn symbols(&self) -> SymbolsDoc {
        let k = &self.cell().knowledge;
        SymbolsDoc {
            symbols: k.list_symbols().into_iter().cloned().collect(),
            objects: k.objects().to_vec(),
        }
    }

    pub fn registry(&self) -> RegistryDoc {
        RegistryDoc {
            condition: self.profile.clone(),
            palette: self.profile.palette(),
            registry: self.registry.clone(),
        }
    }

    pub fn query(&self, predicate: &str) -> Result<QueryDoc, ApiError> {
        let expr = PredicateExpr::parse(predicate)
            .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "PREDICATE_PARSE_ERROR", e.to_string()))?;
        let k = &self.cell().knowledge;
        let failed = |e: cobot_core::knowledge::KnowledgeError| {
            ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "QUERY_FAILED", e.to_string())
        };
        let holds = k.knowledge_test(&expr).map_err(failed)?;
        let matches = k.matching_objects(&expr).map_err(failed)?;
        Ok(QueryDoc {
            predicate: expr.to_string(),
            holds,
            matches: matches.into_iter().map(|o| o.id.clone()).collect(),
        })
    }

    /// Node statuses of the current tree, for clients that skip the stream.
    pub fn board(&self) -> Vec<(String, NodeStatus)> {
        match (&self.session, &self.tree) {
            (Some(s), _) => s.tree.statuses(),
            (None, Some(t)) => t.statuses(),
            (None, None) => vec![],
        }
    }
}

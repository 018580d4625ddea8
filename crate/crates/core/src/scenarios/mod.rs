//! Condition profiles, reference trees and the headless scenario runner.

pub mod perturb;
pub mod profile;
pub mod runner;
pub mod session;
pub mod suite;
pub mod teach;

pub use profile::ConditionProfile;
pub use runner::{run_parsed, run_scenario, RunConfig, RunError, RunReport};
pub use session::{Event, EventKind, Outcome, Session};
pub use teach::{TeachError, TeachScript};

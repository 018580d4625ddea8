//! Teach scripts: the symbol registrations a person would make by guiding the
//! arm, replayed in order before a tree runs.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::knowledge::{KnowledgeError, KnowledgeStore, SymbolEntry};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TeachError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("symbol {name:?}: {source}")]
    Register { name: String, source: KnowledgeError },
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TeachScript {
    #[serde(default)]
    pub name: String,
    pub symbols: Vec<SymbolEntry>,
}

impl TeachScript {
    pub fn parse(text: &str) -> Result<Self, TeachError> {
        serde_json::from_str(text).map_err(|e| TeachError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("teach scripts always serialize")
    }

    /// Registers every symbol in order; later entries overwrite earlier ones.
    pub fn apply(&self, knowledge: &mut KnowledgeStore) -> Result<(), TeachError> {
        for s in &self.symbols {
            knowledge
                .register_symbol(s.clone())
                .map_err(|source| TeachError::Register {
                    name: s.name.clone(),
                    source,
                })?;
        }
        Ok(())
    }
}

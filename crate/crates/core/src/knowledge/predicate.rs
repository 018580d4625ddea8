//! Predicate expressions over detected objects.
//!
//! Canonical text form: atoms joined by `&`, e.g. `class=node & region=LEFT_OF@table`.
//!
//! | relation      | half-space in the reference frame |
//! |---------------|-----------------------------------|
//! | `LEFT_OF`     | `y > 0`                           |
//! | `RIGHT_OF`    | `y < 0`                           |
//! | `IN_FRONT_OF` | `x > 0`                           |
//! | `BEHIND`      | `x < 0`                           |
//! | `ABOVE`       | `z > 0`                           |
//! | `BELOW`       | `z < 0`                           |

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::geometry::Pose;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Relation {
    LeftOf,
    RightOf,
    InFrontOf,
    Behind,
    Above,
    Below,
}

impl Relation {
    pub const ALL: [Relation; 6] = [
        Relation::LeftOf,
        Relation::RightOf,
        Relation::InFrontOf,
        Relation::Behind,
        Relation::Above,
        Relation::Below,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Relation::LeftOf => "LEFT_OF",
            Relation::RightOf => "RIGHT_OF",
            Relation::InFrontOf => "IN_FRONT_OF",
            Relation::Behind => "BEHIND",
            Relation::Above => "ABOVE",
            Relation::Below => "BELOW",
        }
    }

    /// Whether a point given in the reference frame lies in this open half-space.
    pub fn holds(self, local: &nalgebra::Vector3<f64>) -> bool {
        match self {
            Relation::LeftOf => local.y > 0.0,
            Relation::RightOf => local.y < 0.0,
            Relation::InFrontOf => local.x > 0.0,
            Relation::Behind => local.x < 0.0,
            Relation::Above => local.z > 0.0,
            Relation::Below => local.z < 0.0,
        }
    }
}

impl FromStr for Relation {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        Relation::ALL.into_iter().find(|r| r.as_str() == s).ok_or(())
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Atom {
    ClassIs(String),
    Region { relation: Relation, frame: String },
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::ClassIs(c) => write!(f, "class={c}"),
            Atom::Region { relation, frame } => write!(f, "region={relation}@{frame}"),
        }
    }
}

/// A conjunction of atoms; at least one atom.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PredicateExpr {
    atoms: Vec<Atom>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("predicate parse error at column {column}: {message}")]
pub struct PredicateParseError {
    /// 1-based character column.
    pub column: usize,
    pub message: String,
}

impl PredicateExpr {
    pub fn new(atoms: Vec<Atom>) -> Option<Self> {
        (!atoms.is_empty()).then_some(Self { atoms })
    }

    pub fn class_is(class: impl Into<String>) -> Self {
        Self {
            atoms: vec![Atom::ClassIs(class.into())],
        }
    }

    pub fn region(relation: Relation, frame: impl Into<String>) -> Self {
        Self {
            atoms: vec![Atom::Region {
                relation,
                frame: frame.into(),
            }],
        }
    }

    pub fn and(mut self, other: PredicateExpr) -> Self {
        self.atoms.extend(other.atoms);
        self
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    /// Reference frames named by region atoms, in order of appearance.
    pub fn frames(&self) -> impl Iterator<Item = &str> {
        self.atoms.iter().filter_map(|a| match a {
            Atom::Region { frame, .. } => Some(frame.as_str()),
            Atom::ClassIs(_) => None,
        })
    }

    /// Evaluates against one object given already-resolved frames.
    /// `frame_pose` must succeed for every name in [`frames`](Self::frames).
    pub fn matches<E>(
        &self,
        class: &str,
        pose: &Pose,
        mut frame_pose: impl FnMut(&str) -> Result<Pose, E>,
    ) -> Result<bool, E> {
        for atom in &self.atoms {
            let ok = match atom {
                Atom::ClassIs(c) => c == class,
                Atom::Region { relation, frame } => {
                    let reference = frame_pose(frame)?;
                    let local = reference.inverse().transform_point(&pose.translation);
                    relation.holds(&local)
                }
            };
            if !ok {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn parse(text: &str) -> Result<Self, PredicateParseError> {
        let mut atoms = Vec::new();
        let mut offset = 0;
        for part in text.split('&') {
            let lead = part.len() - part.trim_start().len();
            let column = text[..offset + lead].chars().count() + 1;
            atoms.push(parse_atom(part.trim(), column)?);
            offset += part.len() + 1;
        }
        Ok(Self { atoms })
    }
}

fn is_ident(s: &str) -> bool {
    !s.is_empty()
        && s.chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'))
}

fn parse_atom(atom: &str, column: usize) -> Result<Atom, PredicateParseError> {
    let err = |col_off: usize, message: String| PredicateParseError {
        column: column + col_off,
        message,
    };
    if atom.is_empty() {
        return Err(err(0, "empty atom".into()));
    }
    let Some((key, value)) = atom.split_once('=') else {
        return Err(err(0, format!("expected key=value, found {atom:?}")));
    };
    let value_col = key.chars().count() + 1;
    match key {
        "class" => {
            if !is_ident(value) {
                return Err(err(value_col, format!("invalid class name {value:?}")));
            }
            Ok(Atom::ClassIs(value.to_string()))
        }
        "region" => {
            let Some((rel, frame)) = value.split_once('@') else {
                return Err(err(value_col, "expected RELATION@frame".into()));
            };
            let relation = rel
                .parse::<Relation>()
                .map_err(|_| err(value_col, format!("unknown relation {rel:?}")))?;
            if !is_ident(frame) {
                let col = value_col + rel.chars().count() + 1;
                return Err(err(col, format!("invalid frame name {frame:?}")));
            }
            Ok(Atom::Region {
                relation,
                frame: frame.to_string(),
            })
        }
        other => Err(err(0, format!("unknown key {other:?}"))),
    }
}

impl fmt::Display for PredicateExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, atom) in self.atoms.iter().enumerate() {
            if i > 0 {
                f.write_str(" & ")?;
            }
            write!(f, "{atom}")?;
        }
        Ok(())
    }
}

impl FromStr for PredicateExpr {
    type Err = PredicateParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::parse(s)
    }
}

impl Serialize for PredicateExpr {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PredicateExpr {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

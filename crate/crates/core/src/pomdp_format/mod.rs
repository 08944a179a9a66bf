//! Reader for the text `.pomdp` format.
//!
//! Supported statements: `discount`, `values` (`reward` or `cost`), `states`,
//! `actions`, `observations` (a count or a list of names), `start` (a
//! probability list, `uniform`, a single state, or `include:`/`exclude:`
//! lists), and `T:`, `O:`, `R:` in their entry, row and matrix forms with `*`
//! wildcards, plus `uniform` and `identity`. Later statements override
//! earlier ones. `#` starts a comment. Unspecified rewards are 0; `cost`
//! files are negated on load.

mod build;
mod parse;

use std::fmt;

pub use build::{build_pomdp_from_file, ActionIndex, FilePomdp, FileProblem, FileTensors, ObsIndex, StateIndex};
pub use parse::{Check, ROW_TOLERANCE};

/// The classic tiger problem in this format.
pub const TIGER_POMDP: &str = include_str!("../../data/tiger.pomdp");

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParseErrorKind {
    Syntax,
    /// Well-formed text that describes an invalid model.
    Semantic,
}

/// A parse or validation failure at a 1-based line and column.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("line {line}, column {column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub kind: ParseErrorKind,
    pub message: String,
}

impl ParseError {
    fn syntax(line: usize, column: usize, message: impl Into<String>) -> Self {
        Self {
            line,
            column,
            kind: ParseErrorKind::Syntax,
            message: message.into(),
        }
    }

    fn semantic(line: usize, column: usize, message: impl Into<String>) -> Self {
        Self {
            line,
            column,
            kind: ParseErrorKind::Semantic,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Located {
    line: usize,
    column: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ValueCriterion {
    #[default]
    Reward,
    Cost,
}

impl fmt::Display for ValueCriterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ValueCriterion::Reward => "reward",
            ValueCriterion::Cost => "cost",
        })
    }
}

/// A validated model. Rewards are stored with the maximizing sign.
#[derive(Debug, Clone, PartialEq)]
pub struct PomdpFileModel {
    pub discount: f64,
    pub values: ValueCriterion,
    pub states: Vec<String>,
    pub actions: Vec<String>,
    pub observations: Vec<String>,
    /// `transition[a][s][s']`
    pub transition: Vec<Vec<Vec<f64>>>,
    /// `observation[a][s'][o]`
    pub observation: Vec<Vec<Vec<f64>>>,
    /// `reward[a][s][s'][o]`
    pub reward: Vec<Vec<Vec<Vec<f64>>>>,
    pub start: Option<Vec<f64>>,
}

impl PomdpFileModel {
    /// The start belief, or uniform when the file has none.
    pub fn start_belief(&self) -> Vec<f64> {
        self.start
            .clone()
            .unwrap_or_else(|| vec![1.0 / self.states.len() as f64; self.states.len()])
    }
}

/// Parses and validates. The first failing check is returned as the error.
pub fn parse_pomdp_file(text: &str) -> Result<PomdpFileModel, ParseError> {
    let raw = parse::parse_raw(text)?;
    if let Some(failed) = raw.checks().into_iter().find_map(|c| c.outcome.err()) {
        return Err(failed);
    }
    Ok(raw.into_model())
}

/// Outcome of every check, for reporting.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    /// `Err` when the text could not be parsed at all.
    pub syntax: Result<(), ParseError>,
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.syntax.is_ok() && self.checks.iter().all(|c| c.outcome.is_ok())
    }
}

pub fn validate_pomdp_text(text: &str) -> ValidationReport {
    match parse::parse_raw(text) {
        Ok(raw) => ValidationReport {
            syntax: Ok(()),
            checks: raw.checks(),
        },
        Err(e) => ValidationReport {
            syntax: Err(e),
            checks: Vec::new(),
        },
    }
}

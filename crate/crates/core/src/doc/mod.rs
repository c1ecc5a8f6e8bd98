//! Parsers and serializers for every artifact the design workflow produces.
//!
//! Parsing is line based and deterministic. Documents written by a model are
//! imperfect, so most defects surface as [`ParseWarning`]s rather than errors;
//! the auditor decides what they mean.

mod architecture;
mod diagram;
mod driver;
pub(crate) mod markdown;
mod plan;
mod record;
mod table;

use std::fmt;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use architecture::{
    parse_architecture_document, parse_architecture_document_lenient, section_spans, ArchitectureDocument,
    DecisionRow, Section, SectionBody, SectionKind, Subsection, DECISION_HEADERS,
};
pub use diagram::{
    parse_diagram, DiagramGraph, DiagramKind, Edge, Message, Node, Participant, DIAGRAM_FENCE_TAG,
};
pub use driver::{parse_driver_file, parse_drivers, Driver, DriverKind, DriverSet, Level};
pub use plan::{parse_iteration_plan, IterationPlan, PlannedIteration};
pub use record::{
    matches_signature,
    parse_iteration_record, ConceptRow, InstantiationRow, IterationRecord, CONCEPT_HEADERS,
    INSTANTIATION_HEADERS,
};
pub use table::Table;

/// A non-fatal defect found while parsing. `line` is 1-based; 0 means the
/// document as a whole.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseWarning {
    pub line: usize,
    pub message: String,
}

impl ParseWarning {
    pub fn new(line: usize, message: impl Into<String>) -> Self {
        Self {
            line,
            message: message.into(),
        }
    }
}

impl fmt::Display for ParseWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line == 0 {
            f.write_str(&self.message)
        } else {
            write!(f, "line {}: {}", self.line, self.message)
        }
    }
}

/// A parsed artifact together with the warnings produced on the way.
#[derive(Debug, Clone, PartialEq)]
pub struct Parsed<T> {
    pub value: T,
    pub warnings: Vec<ParseWarning>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DocError {
    #[error("DUPLICATE_DRIVER_ID: {id} declared twice with conflicting {field}")]
    DuplicateDriverId { id: String, field: &'static str },
    #[error("MALFORMED_PRIORITY_VALUE: {value:?} for {id} (line {line}) is not High, Medium or Low")]
    MalformedPriorityValue { id: String, value: String, line: usize },
    #[error("NONMONOTONIC_ITERATIONS: expected iteration {expected}, found {found:?} (line {line})")]
    NonmonotonicIterations { expected: u32, found: String, line: usize },
    #[error("EMPTY_GOAL: iteration {iteration} has no goal")]
    EmptyGoal { iteration: u32 },
    #[error("MISSING_DRIVER_REFS: iteration {iteration} lists no drivers")]
    MissingDriverRefs { iteration: u32 },
    #[error("SECTION_ORDER_VIOLATION: {found} (line {line}) appears after {previous}")]
    SectionOrderViolation {
        found: SectionKind,
        previous: SectionKind,
        line: usize,
    },
}

impl DocError {
    pub fn code(&self) -> &'static str {
        match self {
            DocError::DuplicateDriverId { .. } => "DUPLICATE_DRIVER_ID",
            DocError::MalformedPriorityValue { .. } => "MALFORMED_PRIORITY_VALUE",
            DocError::NonmonotonicIterations { .. } => "NONMONOTONIC_ITERATIONS",
            DocError::EmptyGoal { .. } => "EMPTY_GOAL",
            DocError::MissingDriverRefs { .. } => "MISSING_DRIVER_REFS",
            DocError::SectionOrderViolation { .. } => "SECTION_ORDER_VIOLATION",
        }
    }
}

/// Identifier of an architectural driver: two to four capitals, an optional
/// hyphen and one to four digits (`QA-1`, `CRN-5`, `US001`, `QAS015`).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DriverId(String);

fn driver_id_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\b[A-Z]{2,4}-?[0-9]{1,4}\b").unwrap())
}

fn leading_driver_id_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^\s*(?:\*\*)?([A-Z]{2,4}-?[0-9]{1,4})\b").unwrap())
}

impl DriverId {
    /// Validates a complete identifier.
    pub fn parse(s: &str) -> Option<Self> {
        let m = driver_id_re().find(s)?;
        (m.start() == 0 && m.end() == s.len()).then(|| Self(s.to_string()))
    }

    /// Every identifier mentioned in `text`, in order of first appearance.
    pub fn extract_all(text: &str) -> Vec<DriverId> {
        let mut out: Vec<DriverId> = Vec::new();
        for m in driver_id_re().find_iter(text) {
            let id = DriverId(m.as_str().to_string());
            if !out.contains(&id) {
                out.push(id);
            }
        }
        out
    }

    /// The identifier at the very start of `text` (ignoring whitespace and
    /// bold markers), plus the byte offset where it ends.
    pub fn leading(text: &str) -> Option<(DriverId, usize)> {
        let caps = leading_driver_id_re().captures(text)?;
        let m = caps.get(1).unwrap();
        Some((DriverId(m.as_str().to_string()), m.end()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Alphabetic prefix, e.g. `QAS` for `QAS015`.
    pub fn prefix(&self) -> &str {
        self.0.trim_end_matches(|c: char| c.is_ascii_digit()).trim_end_matches('-')
    }
}

impl fmt::Display for DriverId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Renders an artifact back to markdown.
pub trait ToMarkdown {
    fn to_markdown(&self) -> String;
}

/// Case-folded, trimmed form used for every cross-document name comparison.
pub fn fold_name(name: &str) -> String {
    name.trim().to_lowercase()
}

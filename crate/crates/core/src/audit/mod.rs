//! Cross-document consistency checks over a design corpus, and driver
//! traceability.

mod rules;
mod trace;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::doc::{
    parse_architecture_document_lenient, parse_driver_file, parse_drivers, parse_iteration_plan,
    parse_iteration_record, ArchitectureDocument, DriverSet, IterationPlan, IterationRecord,
};
use crate::engine::{read_journal, JournalEvent, Phase};
use crate::store::{ArtifactPath, Workspace, ARCHITECTURE_FILE, DRIVERS_FILE, EVENTS_FILE, PLAN_FILE};

pub use trace::{trace, DriverTrace, TraceMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
    Info,
}

impl Severity {
    pub fn as_str(self) -> &'static str {
        match self {
            Severity::Error => "error",
            Severity::Warning => "warning",
            Severity::Info => "info",
        }
    }
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Rule {
    OrphanElement,
    ArchDocUntouched,
    ContainerStale,
    MissingDecisions,
    ScopeCreep,
    Step4Table,
    Step5Table,
    PlanCoverage,
    ContextElementMissing,
    UnknownDriverRef,
    DiagramSyntax,
    GateViolation,
}

impl Rule {
    pub const ALL: [Rule; 12] = [
        Rule::OrphanElement,
        Rule::ArchDocUntouched,
        Rule::ContainerStale,
        Rule::MissingDecisions,
        Rule::ScopeCreep,
        Rule::Step4Table,
        Rule::Step5Table,
        Rule::PlanCoverage,
        Rule::ContextElementMissing,
        Rule::UnknownDriverRef,
        Rule::DiagramSyntax,
        Rule::GateViolation,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Rule::OrphanElement => "R-ORPHAN_ELEMENT",
            Rule::ArchDocUntouched => "R-ARCH_DOC_UNTOUCHED",
            Rule::ContainerStale => "R-CONTAINER_STALE",
            Rule::MissingDecisions => "R-MISSING_DECISIONS",
            Rule::ScopeCreep => "R-SCOPE_CREEP",
            Rule::Step4Table => "R-STEP4_TABLE",
            Rule::Step5Table => "R-STEP5_TABLE",
            Rule::PlanCoverage => "R-PLAN_COVERAGE",
            Rule::ContextElementMissing => "R-CONTEXT_ELEMENT_MISSING",
            Rule::UnknownDriverRef => "R-UNKNOWN_DRIVER_REF",
            Rule::DiagramSyntax => "R-DIAGRAM_SYNTAX",
            Rule::GateViolation => "R-GATE_VIOLATION",
        }
    }

    pub fn default_severity(self) -> Severity {
        match self {
            Rule::ScopeCreep | Rule::PlanCoverage | Rule::ContextElementMissing | Rule::DiagramSyntax => {
                Severity::Warning
            }
            _ => Severity::Error,
        }
    }

    /// Findings of repairable rules can be fixed by asking the model again.
    pub fn repairable(self) -> bool {
        matches!(
            self,
            Rule::ArchDocUntouched | Rule::MissingDecisions | Rule::Step4Table | Rule::Step5Table
        )
    }

    /// Rules that run after the given phase's output is applied.
    pub fn applies_in(self, phase: Phase) -> bool {
        match phase {
            Phase::ReviewDrivers | Phase::DomainModel => false,
            Phase::IterationPlanning => matches!(self, Rule::PlanCoverage | Rule::UnknownDriverRef),
            Phase::Skeleton => matches!(self, Rule::DiagramSyntax),
            Phase::Iterating { step, .. } => match self {
                Rule::Step4Table => step >= 4,
                Rule::Step5Table => step >= 5,
                Rule::OrphanElement
                | Rule::ContainerStale
                | Rule::ContextElementMissing
                | Rule::ScopeCreep
                | Rule::DiagramSyntax => step >= 5,
                Rule::ArchDocUntouched | Rule::MissingDecisions | Rule::UnknownDriverRef => step >= 6,
                Rule::PlanCoverage | Rule::GateViolation => false,
            },
            Phase::Finished => true,
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Rule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Rule::ALL
            .into_iter()
            .find(|r| r.id() == s)
            .ok_or_else(|| format!("unknown rule {s:?}"))
    }
}

impl TryFrom<String> for Rule {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<Rule> for String {
    fn from(r: Rule) -> Self {
        r.id().to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Location {
    pub artifact: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub section: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub element: Option<String>,
}

impl Location {
    pub fn artifact(artifact: impl Into<String>) -> Self {
        Self {
            artifact: artifact.into(),
            section: None,
            element: None,
        }
    }

    pub fn section(mut self, section: impl Into<String>) -> Self {
        self.section = Some(section.into());
        self
    }

    pub fn element(mut self, element: impl Into<String>) -> Self {
        self.element = Some(element.into());
        self
    }
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.artifact)?;
        if let Some(s) = &self.section {
            write!(f, " > {s}")?;
        }
        if let Some(e) = &self.element {
            write!(f, " > {e}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditFinding {
    pub rule_id: Rule,
    pub severity: Severity,
    pub location: Location,
    pub message: String,
    pub repairable: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedRule {
    pub rule_id: Rule,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditReport {
    pub findings: Vec<AuditFinding>,
    pub evaluated: Vec<Rule>,
    pub skipped: Vec<SkippedRule>,
}

impl AuditReport {
    pub fn count(&self, severity: Severity) -> usize {
        self.findings.iter().filter(|f| f.severity == severity).count()
    }

    pub fn has_errors(&self) -> bool {
        self.count(Severity::Error) > 0
    }

    pub fn of_rule(&self, rule: Rule) -> impl Iterator<Item = &AuditFinding> {
        self.findings.iter().filter(move |f| f.rule_id == rule)
    }

    pub fn rule_ids(&self) -> BTreeSet<Rule> {
        self.findings.iter().map(|f| f.rule_id).collect()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for f in &self.findings {
            out.push_str(&format!("{:<7} {} {}: {}\n", f.severity, f.rule_id, f.location, f.message));
        }
        for s in &self.skipped {
            out.push_str(&format!("skipped {}: {}\n", s.rule_id, s.reason));
        }
        out.push_str(&format!(
            "{} errors, {} warnings, {} infos; {} rules evaluated, {} skipped\n",
            self.count(Severity::Error),
            self.count(Severity::Warning),
            self.count(Severity::Info),
            self.evaluated.len(),
            self.skipped.len()
        ));
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AuditScope {
    All,
    /// Only rules that apply once the given phase's output is in.
    Step(Phase),
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AuditOptions {
    pub severity_overrides: BTreeMap<Rule, Severity>,
    pub disabled: BTreeSet<Rule>,
}

impl AuditOptions {
    /// Builds options from rule-id keyed overrides, ignoring unknown ids.
    pub fn from_overrides(overrides: &BTreeMap<String, Severity>) -> Self {
        Self {
            severity_overrides: overrides
                .iter()
                .filter_map(|(k, v)| k.parse::<Rule>().ok().map(|r| (r, *v)))
                .collect(),
            disabled: BTreeSet::new(),
        }
    }
}

/// The iteration record together with the artifact it came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecordEntry {
    pub artifact: String,
    pub record: IterationRecord,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Corpus {
    pub drivers: Option<DriverSet>,
    pub plan: Option<IterationPlan>,
    pub architecture: Option<ArchitectureDocument>,
    /// Raw text of the architecture document, for digest comparisons.
    pub architecture_text: Option<String>,
    pub iterations: Vec<RecordEntry>,
    pub journal: Option<Vec<JournalEvent>>,
    /// The phase whose output the corpus reflects, for step-scoped audits
    /// run before the gate.
    pub in_progress: Option<Phase>,
}

/// Artifacts that could not be read into the corpus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadIssue {
    pub artifact: String,
    pub message: String,
}

impl fmt::Display for LoadIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.artifact, self.message)
    }
}

impl Corpus {
    /// Builds a corpus from artifact contents. Artifacts that fail to parse
    /// are left out and reported.
    pub fn from_contents(
        contents: &BTreeMap<ArtifactPath, String>,
        journal: Option<Vec<JournalEvent>>,
    ) -> (Corpus, Vec<LoadIssue>) {
        let mut issues = Vec::new();
        let mut corpus = Corpus {
            journal,
            ..Corpus::default()
        };
        let mut drivers: Option<DriverSet> = None;
        for (path, text) in contents {
            let p = path.as_str();
            if p == DRIVERS_FILE || p.starts_with("Drivers/") {
                let parsed = if p == DRIVERS_FILE {
                    parse_drivers(text)
                } else {
                    parse_driver_file(text)
                };
                match parsed {
                    Ok(set) => {
                        let merged = match drivers.as_mut() {
                            Some(d) => d.merge(set.value),
                            None => {
                                drivers = Some(set.value);
                                Ok(())
                            }
                        };
                        if let Err(e) = merged {
                            issues.push(LoadIssue {
                                artifact: p.into(),
                                message: e.to_string(),
                            });
                        }
                    }
                    Err(e) => issues.push(LoadIssue {
                        artifact: p.into(),
                        message: e.to_string(),
                    }),
                }
            } else if p == PLAN_FILE {
                match parse_iteration_plan(text) {
                    Ok(plan) => corpus.plan = Some(plan.value),
                    Err(e) => issues.push(LoadIssue {
                        artifact: p.into(),
                        message: e.to_string(),
                    }),
                }
            } else if p == ARCHITECTURE_FILE {
                corpus.architecture = Some(parse_architecture_document_lenient(text).value);
                corpus.architecture_text = Some(text.clone());
            } else if let Some(n) = path.iteration_number() {
                let mut record = parse_iteration_record(text).value;
                if record.iteration_number == 0 {
                    record.iteration_number = n;
                }
                corpus.iterations.push(RecordEntry {
                    artifact: p.into(),
                    record,
                });
            }
        }
        corpus.drivers = drivers.filter(|d| !d.is_empty());
        corpus.iterations.sort_by_key(|r| r.record.iteration_number);
        (corpus, issues)
    }

    /// The committed workspace state, with its journal if one exists.
    pub fn from_workspace(ws: &Workspace) -> Result<(Corpus, Vec<LoadIssue>), LoadIssue> {
        let contents = ws.live_contents().map_err(|e| LoadIssue {
            artifact: ws.root().display().to_string(),
            message: e.to_string(),
        })?;
        let events = read_journal(&ws.path(EVENTS_FILE)).map_err(|message| LoadIssue {
            artifact: EVENTS_FILE.into(),
            message,
        })?;
        let journal = if events.is_empty() { None } else { Some(events) };
        Ok(Self::from_contents(&contents, journal))
    }

    pub fn record(&self, n: u32) -> Option<&RecordEntry> {
        self.iterations.iter().find(|r| r.record.iteration_number == n)
    }
}

/// Runs every applicable rule and returns findings sorted by severity, then
/// location.
pub fn audit(corpus: &Corpus, scope: &AuditScope, options: &AuditOptions) -> AuditReport {
    let mut report = AuditReport::default();
    for rule in Rule::ALL {
        if options.disabled.contains(&rule) {
            report.skipped.push(SkippedRule {
                rule_id: rule,
                reason: "disabled".into(),
            });
            continue;
        }
        if let AuditScope::Step(phase) = scope {
            if !rule.applies_in(*phase) {
                report.skipped.push(SkippedRule {
                    rule_id: rule,
                    reason: format!("not checked after {phase}"),
                });
                continue;
            }
        }
        match rules::evaluate(rule, corpus) {
            Err(reason) => report.skipped.push(SkippedRule { rule_id: rule, reason }),
            Ok(raw) => {
                report.evaluated.push(rule);
                let severity_default = options
                    .severity_overrides
                    .get(&rule)
                    .copied()
                    .unwrap_or(rule.default_severity());
                for f in raw {
                    report.findings.push(AuditFinding {
                        rule_id: rule,
                        severity: f.severity.unwrap_or(severity_default),
                        location: f.location,
                        message: f.message,
                        repairable: rule.repairable(),
                    });
                }
            }
        }
    }
    report.findings.sort_by(|a, b| {
        (a.severity, &a.location, a.rule_id, &a.message).cmp(&(b.severity, &b.location, b.rule_id, &b.message))
    });
    report
}

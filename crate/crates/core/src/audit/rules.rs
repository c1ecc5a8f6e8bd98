use std::collections::BTreeSet;

use super::{Corpus, Location, Rule, Severity};
use crate::doc::{fold_name, ArchitectureDocument, DiagramGraph, DiagramKind, DriverId, SectionKind};
use crate::engine::{gate_rule_violation, EventPayload, JournalEvent, Phase};
use crate::store::{content_digest, ARCHITECTURE_FILE, PLAN_FILE};

pub(super) struct RawFinding {
    pub location: Location,
    pub message: String,
    /// Overrides the rule's severity for this finding.
    pub severity: Option<Severity>,
}

fn finding(location: Location, message: impl Into<String>) -> RawFinding {
    RawFinding {
        location,
        message: message.into(),
        severity: None,
    }
}

type Outcome = Result<Vec<RawFinding>, String>;

pub(super) fn evaluate(rule: Rule, c: &Corpus) -> Outcome {
    match rule {
        Rule::OrphanElement => orphan_element(c),
        Rule::ArchDocUntouched => arch_doc_untouched(c),
        Rule::ContainerStale => container_stale(c),
        Rule::MissingDecisions => missing_decisions(c),
        Rule::ScopeCreep => scope_creep(c),
        Rule::Step4Table => step_table(c, 4),
        Rule::Step5Table => step_table(c, 5),
        Rule::PlanCoverage => plan_coverage(c),
        Rule::ContextElementMissing => context_element_missing(c),
        Rule::UnknownDriverRef => unknown_driver_ref(c),
        Rule::DiagramSyntax => diagram_syntax(c),
        Rule::GateViolation => gate_violation(c),
    }
}

fn need_architecture(c: &Corpus) -> Result<&ArchitectureDocument, String> {
    c.architecture.as_ref().ok_or_else(|| "no architecture document".to_string())
}

fn need_journal(c: &Corpus) -> Result<&[JournalEvent], String> {
    c.journal.as_deref().ok_or_else(|| "no session journal".to_string())
}

/// Names of elements drawn in a set of diagrams, case-folded. Diagrams the
/// parser could not structure are searched as text.
#[derive(Default)]
struct KnownNames {
    names: BTreeSet<String>,
    opaque: Vec<String>,
}

impl KnownNames {
    fn of_sections(doc: &ArchitectureDocument, kinds: &[SectionKind]) -> Self {
        let mut known = KnownNames::default();
        for kind in kinds {
            if let Some(section) = doc.section(*kind) {
                for (_, d) in section.all_diagrams() {
                    known.add(d);
                }
            }
        }
        known
    }

    fn add(&mut self, d: &DiagramGraph) {
        if d.kind == DiagramKind::Opaque {
            self.opaque.push(fold_name(&d.raw));
        } else {
            self.names.extend(d.element_names().into_iter().map(fold_name));
        }
    }

    fn contains(&self, name: &str) -> bool {
        let name = fold_name(name);
        if name.is_empty() {
            return true;
        }
        self.names.contains(&name) || self.opaque.iter().any(|t| contains_word(t, &name))
    }
}

fn contains_word(haystack: &str, needle: &str) -> bool {
    let is_word = |c: char| c.is_alphanumeric() || c == '_';
    haystack.match_indices(needle).any(|(i, _)| {
        let before = haystack[..i].chars().next_back();
        let after = haystack[i + needle.len()..].chars().next();
        !before.is_some_and(is_word) && !after.is_some_and(is_word)
    })
}

fn section_label(kind: SectionKind, sub: Option<&str>) -> String {
    match sub {
        Some(h) => format!("{} / {h}", kind.slug()),
        None => kind.slug().to_string(),
    }
}

fn orphan_element(c: &Corpus) -> Outcome {
    let doc = need_architecture(c)?;
    let known = KnownNames::of_sections(
        doc,
        &[SectionKind::ContextDiagram, SectionKind::ContainerDiagram, SectionKind::ComponentDiagrams],
    );
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for section in &doc.sections {
        for (sub, d) in section.all_diagrams() {
            if d.kind != DiagramKind::Sequence {
                continue;
            }
            for p in d.participants.iter().filter(|p| !p.actor) {
                if known.contains(&p.id) || known.contains(&p.label) {
                    continue;
                }
                if seen.insert(fold_name(&p.label)) {
                    out.push(finding(
                        Location::artifact(ARCHITECTURE_FILE)
                            .section(section_label(section.kind, sub))
                            .element(p.label.clone()),
                        format!(
                            "{} takes part in a sequence diagram but appears in no context, container or component diagram",
                            p.label
                        ),
                    ));
                }
            }
        }
    }
    Ok(out)
}

/// Container a component-diagram heading is about: the heading without
/// numbering, parentheses and words such as "component diagram".
pub(super) fn container_from_heading(heading: &str) -> String {
    const FILLER: [&str; 12] = [
        "component",
        "components",
        "diagram",
        "diagrams",
        "of",
        "the",
        "for",
        "container",
        "c4",
        "level",
        "view",
        "-",
    ];
    let h = regex!(r"^\s*[0-9]+(\.[0-9]+)*[.)-]*\s*").replace(heading, "");
    let h = regex!(r"\([^)]*\)").replace_all(&h, " ");
    let words: Vec<String> = h
        .split_whitespace()
        .map(|w| w.trim_matches(|c: char| c == ':' || c == ',' || c == '*').to_string())
        .filter(|w| !w.is_empty())
        .collect();
    let filler = |w: &String| FILLER.contains(&w.to_lowercase().as_str());
    let start = words.iter().position(|w| !filler(w)).unwrap_or(words.len());
    let end = words.iter().rposition(|w| !filler(w)).map_or(start, |i| i + 1);
    words[start..end.max(start)].join(" ")
}

fn container_stale(c: &Corpus) -> Outcome {
    let doc = need_architecture(c)?;
    let containers = doc
        .section(SectionKind::ContainerDiagram)
        .filter(|s| s.all_diagrams().next().is_some())
        .ok_or("no container diagram")?;
    let Some(components) = doc.section(SectionKind::ComponentDiagrams) else {
        return Err("no component diagrams section".into());
    };
    let mut known = KnownNames::default();
    for (_, d) in containers.all_diagrams() {
        known.add(d);
    }
    let mut out = Vec::new();
    for sub in &components.subsections {
        if sub.body.diagrams.is_empty() {
            continue;
        }
        let name = container_from_heading(&sub.heading);
        if name.is_empty() || known.contains(&name) {
            continue;
        }
        out.push(finding(
            Location::artifact(ARCHITECTURE_FILE)
                .section(section_label(SectionKind::ComponentDiagrams, Some(&sub.heading)))
                .element(name.clone()),
            format!("component diagram details container {name}, which is not in the container diagram"),
        ));
    }
    Ok(out)
}

fn context_element_missing(c: &Corpus) -> Outcome {
    let doc = need_architecture(c)?;
    let context = doc.section(SectionKind::ContextDiagram).ok_or("no context diagram section")?;
    let containers = doc
        .section(SectionKind::ContainerDiagram)
        .filter(|s| s.all_diagrams().next().is_some())
        .ok_or("no container diagram")?;
    let mut known = KnownNames::default();
    for (_, d) in containers.all_diagrams() {
        known.add(d);
    }
    let mut out = Vec::new();
    for (sub, d) in context.all_diagrams() {
        for node in external_nodes(d) {
            if known.contains(&node.id) || known.contains(&node.label) {
                continue;
            }
            out.push(finding(
                Location::artifact(ARCHITECTURE_FILE)
                    .section(section_label(SectionKind::ContextDiagram, sub))
                    .element(node.label.clone()),
                format!("{} appears in the context diagram but not in the container diagram", node.label),
            ));
        }
    }
    Ok(out)
}

/// External systems of a context diagram: nodes with an "external"
/// stereotype, or, when none carries one, every node except the most
/// connected one (the system itself), people and subgraphs.
fn external_nodes(d: &DiagramGraph) -> Vec<&crate::doc::Node> {
    let stereo = |n: &crate::doc::Node| n.stereotype.as_deref().map(str::to_lowercase);
    let marked: Vec<_> = d
        .nodes
        .iter()
        .filter(|n| stereo(n).is_some_and(|s| s.contains("external")))
        .collect();
    if !marked.is_empty() {
        return marked;
    }
    let degree = |id: &str| d.edges.iter().filter(|e| e.from == id || e.to == id).count();
    let system = d
        .nodes
        .iter()
        .filter(|n| stereo(n).as_deref() != Some("subgraph"))
        .max_by_key(|n| degree(&n.id))
        .map(|n| n.id.as_str());
    d.nodes
        .iter()
        .filter(|n| Some(n.id.as_str()) != system)
        .filter(|n| {
            !stereo(n).is_some_and(|s| ["subgraph", "person", "actor", "user"].contains(&s.as_str()))
        })
        .collect()
}

fn completed_iterations(c: &Corpus) -> BTreeSet<u32> {
    match &c.journal {
        Some(events) => events
            .iter()
            .filter(|e| e.is_approval())
            .filter_map(|e| match e.phase {
                Phase::Iterating { iteration, step: 7 } => Some(iteration),
                _ => None,
            })
            .collect(),
        None => c
            .iterations
            .iter()
            .filter(|r| !r.record.analysis.trim().is_empty())
            .map(|r| r.record.iteration_number)
            .collect(),
    }
}

fn goal_drivers(c: &Corpus, n: u32) -> BTreeSet<DriverId> {
    let mut out = BTreeSet::new();
    if let Some(it) = c.plan.as_ref().and_then(|p| p.get(n)) {
        out.extend(it.driver_refs.iter().cloned());
    }
    if let Some(r) = c.record(n) {
        out.extend(r.record.goal_drivers.iter().cloned());
    }
    out
}

fn scope_creep(c: &Corpus) -> Outcome {
    let doc = need_architecture(c)?;
    let Some(section) = doc.section(SectionKind::SequenceDiagrams) else {
        return Ok(Vec::new());
    };
    let mut iterations = completed_iterations(c);
    if let Some(n) = c.in_progress.and_then(Phase::iteration) {
        iterations.insert(n);
    }
    let goals: BTreeSet<DriverId> = iterations.iter().flat_map(|n| goal_drivers(c, *n)).collect();
    let mut out = Vec::new();
    for (i, (sub, _)) in section
        .all_diagrams()
        .filter(|(_, d)| d.kind == DiagramKind::Sequence)
        .enumerate()
    {
        let ids = sub.map(DriverId::extract_all).unwrap_or_default();
        let loc = Location::artifact(ARCHITECTURE_FILE).section(section_label(SectionKind::SequenceDiagrams, sub));
        if ids.is_empty() {
            out.push(RawFinding {
                location: loc.element(format!("sequence diagram {}", i + 1)),
                message: "sequence diagram is not bound to a driver; put the driver id in its heading".into(),
                severity: Some(Severity::Info),
            });
            continue;
        }
        for id in ids.iter().filter(|id| !goals.contains(*id)) {
            out.push(finding(
                loc.clone().element(id.to_string()),
                format!("sequence diagram for {id}, which is not the goal of any completed iteration"),
            ));
        }
    }
    Ok(out)
}

fn step_table(c: &Corpus, step: u8) -> Outcome {
    if c.iterations.is_empty() {
        return Err("no iteration documents".into());
    }
    let completed = completed_iterations(c);
    let (header, present): (&str, fn(&crate::doc::IterationRecord) -> bool) = if step == 4 {
        (
            "| Selected design concept | Rationale | Discarded Alternatives |",
            |r| !r.concept_table.is_empty(),
        )
    } else {
        ("| Instantiation decision | Rationale |", |r| !r.instantiation_table.is_empty())
    };
    let mut out = Vec::new();
    for entry in &c.iterations {
        let r = &entry.record;
        let n = r.iteration_number;
        let reached = r.steps_present.iter().any(|s| *s >= step)
            || completed.contains(&n)
            || matches!(c.in_progress, Some(Phase::Iterating { iteration, step: s }) if iteration == n && s >= step);
        if reached && !present(r) {
            out.push(finding(
                Location::artifact(entry.artifact.clone()).section(format!("step {step}")),
                format!("iteration {n} has no step {step} table with the columns {header}"),
            ));
        }
    }
    Ok(out)
}

fn plan_coverage(c: &Corpus) -> Outcome {
    let drivers = c.drivers.as_ref().ok_or("no drivers")?;
    let plan = c.plan.as_ref().ok_or("no iteration plan")?;
    Ok(drivers
        .primary()
        .filter(|d| plan.iterations_for(&d.id).next().is_none())
        .map(|d| {
            finding(
                Location::artifact(PLAN_FILE).element(d.id.to_string()),
                format!("primary driver {} is not addressed by any planned iteration", d.id),
            )
        })
        .collect())
}

fn unknown_driver_ref(c: &Corpus) -> Outcome {
    let drivers = c.drivers.as_ref().ok_or("no drivers")?;
    if c.plan.is_none() && c.architecture.is_none() {
        return Err("no iteration plan or architecture document".into());
    }
    let mut out = Vec::new();
    if let Some(plan) = &c.plan {
        for it in &plan.iterations {
            for id in it.driver_refs.iter().filter(|id| !drivers.contains(id)) {
                out.push(finding(
                    Location::artifact(PLAN_FILE)
                        .section(format!("iteration {}", it.number))
                        .element(id.to_string()),
                    format!("iteration {} refers to undeclared driver {id}", it.number),
                ));
            }
        }
    }
    if let Some(doc) = &c.architecture {
        for row in doc.decision_rows() {
            for id in row.driver_refs.iter().filter(|id| !drivers.contains(id)) {
                out.push(finding(
                    Location::artifact(ARCHITECTURE_FILE)
                        .section(SectionKind::DesignDecisions.slug())
                        .element(id.to_string()),
                    format!("decision row {} refers to undeclared driver {id}", row.index + 1),
                ));
            }
        }
    }
    Ok(out)
}

fn diagram_syntax(c: &Corpus) -> Outcome {
    let doc = need_architecture(c)?;
    let mut out = Vec::new();
    for section in &doc.sections {
        for (sub, d) in section.all_diagrams() {
            if let Some(err) = &d.syntax_error {
                out.push(finding(
                    Location::artifact(ARCHITECTURE_FILE).section(section_label(section.kind, sub)),
                    format!(
                        "{} diagram does not parse at line {}: {}",
                        err.attempted.as_str(),
                        err.line,
                        err.message
                    ),
                ));
            }
        }
    }
    Ok(out)
}

fn gate_violation(c: &Corpus) -> Outcome {
    let events = need_journal(c)?;
    Ok(gate_rule_violation(events)
        .map(|seq| {
            finding(
                Location::artifact(crate::store::EVENTS_FILE).element(format!("event {seq}")),
                "a response was applied while an earlier one was still waiting for a gate",
            )
        })
        .into_iter()
        .collect())
}

struct GateFacts {
    architecture_digest: Option<String>,
    decision_rows: Option<usize>,
}

fn facts(e: &JournalEvent) -> Option<GateFacts> {
    match &e.payload {
        EventPayload::GateRecorded {
            architecture_digest,
            decision_rows,
            ..
        } if e.is_approval() => Some(GateFacts {
            architecture_digest: architecture_digest.clone(),
            decision_rows: *decision_rows,
        }),
        _ => None,
    }
}

/// State recorded by the last approval of a phase before `phase`.
fn approved_before(events: &[JournalEvent], phase: Phase) -> Option<GateFacts> {
    events.iter().filter(|e| e.phase < phase).filter_map(facts).last()
}

fn approved_at(events: &[JournalEvent], phase: Phase) -> Option<GateFacts> {
    events.iter().filter(|e| e.phase == phase).filter_map(facts).last()
}

fn arch_doc_untouched(c: &Corpus) -> Outcome {
    let events = need_journal(c)?;
    let mut checks: Vec<(u32, Option<String>)> = Vec::new();
    let iterations: BTreeSet<u32> = events.iter().filter_map(|e| e.phase.iteration()).collect();
    for n in iterations {
        if let Some(f) = approved_at(events, Phase::iterating(n, 6)) {
            checks.push((n, f.architecture_digest));
        }
    }
    if let Some(Phase::Iterating { iteration, step: 6 }) = c.in_progress {
        checks.push((iteration, c.architecture_text.as_deref().map(content_digest)));
    }
    let mut out = Vec::new();
    for (n, current) in checks {
        let before = approved_before(events, Phase::iterating(n, 5)).and_then(|f| f.architecture_digest);
        if before == current {
            out.push(finding(
                Location::artifact(ARCHITECTURE_FILE).element(format!("iteration {n}")),
                format!("steps 5 and 6 of iteration {n} left the architecture document unchanged"),
            ));
        }
    }
    Ok(out)
}

fn missing_decisions(c: &Corpus) -> Outcome {
    let doc = need_architecture(c)?;
    let location = |n: u32| {
        Location::artifact(ARCHITECTURE_FILE)
            .section(SectionKind::DesignDecisions.slug())
            .element(format!("iteration {n}"))
    };
    let mut out = Vec::new();
    match &c.journal {
        Some(events) => {
            let mut checks: Vec<(u32, usize)> = Vec::new();
            for n in completed_iterations(c) {
                if let Some(rows) = approved_at(events, Phase::iterating(n, 7)).and_then(|f| f.decision_rows) {
                    checks.push((n, rows));
                }
            }
            if let Some(Phase::Iterating { iteration, step }) = c.in_progress {
                if step >= 6 {
                    checks.push((iteration, doc.decision_rows().len()));
                }
            }
            for (n, rows) in checks {
                let before = approved_before(events, Phase::iterating(n, 2))
                    .and_then(|f| f.decision_rows)
                    .unwrap_or(0);
                if rows <= before {
                    out.push(finding(location(n), format!("iteration {n} added no design-decisions row")));
                }
            }
        }
        None => {
            let rows = doc.decision_rows();
            for n in completed_iterations(c) {
                let goal = goal_drivers(c, n);
                if goal.is_empty() {
                    continue;
                }
                if !rows.iter().any(|r| r.driver_refs.iter().any(|id| goal.contains(id))) {
                    out.push(finding(
                        location(n),
                        format!("no design-decisions row refers to a driver of iteration {n}"),
                    ));
                }
            }
        }
    }
    Ok(out)
}

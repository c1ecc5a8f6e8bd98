//! Generators of valid artifacts and their round-trip checks.

use add_core::doc::{
    parse_architecture_document, parse_diagram, parse_drivers, parse_iteration_plan, parse_iteration_record,
    ConceptRow, DiagramGraph, Driver, DriverId, DriverKind, DriverSet, Edge, InstantiationRow, IterationPlan,
    IterationRecord, Level, Message, Node, Participant, PlannedIteration, Section, SectionBody, SectionKind,
    Subsection, Table, ToMarkdown, ArchitectureDocument,
};
use proptest::collection::{btree_set, vec};
use proptest::prelude::*;
use proptest::test_runner::{TestCaseError, TestRunner};
use proptest::sample::subsequence;

pub const CASES: u32 = 500;

pub fn word() -> impl Strategy<Value = String> {
    "[a-z]{1,8}"
}

pub fn words(max: usize) -> impl Strategy<Value = String> {
    vec(word(), 1..=max).prop_map(|w| w.join(" "))
}

pub fn capitalized() -> impl Strategy<Value = String> {
    ("[A-Z]", "[a-z]{1,7}").prop_map(|(a, b)| format!("{a}{b}"))
}

pub fn prose() -> impl Strategy<Value = String> {
    vec(words(12), 1..=3).prop_map(|p| p.join("\n\n"))
}

pub fn level() -> impl Strategy<Value = Level> {
    prop_oneof![Just(Level::High), Just(Level::Medium), Just(Level::Low)]
}

pub fn prefix(kind: DriverKind) -> &'static str {
    match kind {
        DriverKind::UserStory => "HPS-",
        DriverKind::QaScenario => "QA-",
        DriverKind::Constraint => "CON-",
        DriverKind::Concern => "CRN-",
    }
}

pub fn driver_id() -> impl Strategy<Value = DriverId> {
    ("[A-Z]{2,4}", prop::bool::ANY, 1u32..9999).prop_map(|(p, dash, n)| {
        DriverId::parse(&format!("{p}{}{n}", if dash { "-" } else { "" })).unwrap()
    })
}

pub fn driver(kind: DriverKind, number: u32) -> impl Strategy<Value = Driver> {
    let prioritized = kind.is_prioritized();
    (
        words(5),
        prop::option::of(words(10)),
        prop::option::of(level()),
        prop::option::of(level()),
        prop::bool::ANY,
    )
        .prop_map(move |(title, description, importance, difficulty, primary)| {
            let id = DriverId::parse(&format!("{}{number}", prefix(kind))).unwrap();
            let mut d = Driver::new(id, kind, title);
            d.description = description;
            if prioritized {
                d.importance = importance;
                d.difficulty = difficulty;
            }
            d.primary = primary;
            d
        })
}

/// A primary statement, when present, names the primary drivers, which is
/// what makes it a statement for the parser.
pub fn driver_set() -> impl Strategy<Value = DriverSet> {
    let per_kind = DriverKind::ALL.map(|k| btree_set(1u32..500, 0..6).prop_map(move |ns| (k, ns)));
    (per_kind, prop::bool::ANY)
        .prop_flat_map(|(kinds, with_statement)| {
            let drivers: Vec<_> = kinds
                .into_iter()
                .flat_map(|(k, ns)| ns.into_iter().map(move |n| driver(k, n)))
                .collect();
            (drivers, Just(with_statement))
        })
        .prop_map(|(drivers, with_statement)| {
            let primary: Vec<&str> = drivers.iter().filter(|d| d.primary).map(|d| d.id.as_str()).collect();
            let primary_statement = (with_statement && !primary.is_empty())
                .then(|| format!("From this list, {} are selected as primary drivers.", primary.join(", ")));
            DriverSet {
                drivers,
                primary_statement,
            }
        })
}

pub fn plan() -> impl Strategy<Value = IterationPlan> {
    vec((words(8), btree_set(driver_id(), 1..6)), 1..10).prop_map(|rows| IterationPlan {
        iterations: rows
            .into_iter()
            .enumerate()
            .map(|(i, (goal, refs))| PlannedIteration {
                number: i as u32 + 1,
                goal,
                driver_refs: refs.into_iter().collect(),
            })
            .collect(),
    })
}

pub fn record() -> impl Strategy<Value = IterationRecord> {
    (
        1u32..20,
        btree_set(driver_id(), 0..5),
        btree_set(capitalized(), 0..5),
        vec((words(3), words(6), words(4)), 0..4),
        vec((words(4), words(6)), 0..4),
        prop::option::of(prose()),
        subsequence(vec![2u8, 3, 4, 5, 6, 7], 0..=6),
    )
        .prop_map(|(n, goals, elements, concepts, insts, analysis, extra)| {
            let mut r = IterationRecord {
                iteration_number: n,
                goal_drivers: goals.into_iter().collect(),
                refined_elements: elements.into_iter().collect(),
                concept_table: concepts
                    .into_iter()
                    .map(|(concept, rationale, discarded_alternatives)| ConceptRow {
                        concept,
                        rationale,
                        discarded_alternatives,
                    })
                    .collect(),
                instantiation_table: insts
                    .into_iter()
                    .map(|(decision, rationale)| InstantiationRow { decision, rationale })
                    .collect(),
                analysis: analysis.unwrap_or_default(),
                steps_present: extra,
            };
            let needed = [
                (2, !r.goal_drivers.is_empty()),
                (3, !r.refined_elements.is_empty()),
                (4, !r.concept_table.is_empty()),
                (5, !r.instantiation_table.is_empty()),
                (7, !r.analysis.is_empty()),
            ];
            for (step, has) in needed {
                if has && !r.steps_present.contains(&step) {
                    r.steps_present.push(step);
                }
            }
            r.steps_present.sort_unstable();
            r
        })
}

pub fn labels(n: usize) -> impl Strategy<Value = Vec<String>> {
    vec(words(3), n)
}

pub fn class_diagram() -> impl Strategy<Value = DiagramGraph> {
    (1usize..8)
        .prop_flat_map(|n| {
            (
                vec((capitalized(), prop::bool::ANY, prop::option::of(word())), n),
                labels(n),
                vec((0..n, 0..n, prop::option::of(words(3))), 0..10),
            )
        })
        .prop_map(|(heads, labels, edges)| {
            let nodes: Vec<Node> = heads
                .into_iter()
                .zip(labels)
                .enumerate()
                .map(|(i, ((name, plain, stereotype), label))| {
                    let id = format!("{name}{i}");
                    Node {
                        label: if plain { id.clone() } else { label },
                        id,
                        stereotype,
                    }
                })
                .collect();
            let edges = edges
                .into_iter()
                .map(|(a, b, label)| Edge {
                    from: nodes[a].id.clone(),
                    to: nodes[b].id.clone(),
                    label,
                })
                .collect();
            DiagramGraph::class(nodes, edges)
        })
}

pub fn flowchart() -> impl Strategy<Value = DiagramGraph> {
    let stereotype = prop::option::of(prop_oneof![Just("subgraph".to_string()), word()]);
    (1usize..8)
        .prop_flat_map(move |n| {
            (
                vec((capitalized(), stereotype.clone()), n),
                labels(n),
                vec((0..n, 0..n, prop::option::of(words(3))), 0..10),
            )
        })
        .prop_map(|(heads, labels, edges)| {
            let nodes: Vec<Node> = heads
                .into_iter()
                .zip(labels)
                .enumerate()
                .map(|(i, ((name, stereotype), label))| Node {
                    id: format!("{name}{i}"),
                    label,
                    stereotype,
                })
                .collect();
            let edges = edges
                .into_iter()
                .map(|(a, b, label)| Edge {
                    from: nodes[a].id.clone(),
                    to: nodes[b].id.clone(),
                    label,
                })
                .collect();
            DiagramGraph::flowchart(nodes, edges)
        })
}

pub fn sequence_diagram() -> impl Strategy<Value = DiagramGraph> {
    (1usize..8)
        .prop_flat_map(|n| {
            (
                vec((capitalized(), prop::bool::ANY, prop::bool::ANY), n),
                labels(n),
                vec((0..n, 0..n, prop::option::of(words(4))), 0..15),
            )
        })
        .prop_map(|(heads, labels, messages)| {
            let participants: Vec<Participant> = heads
                .into_iter()
                .zip(labels)
                .enumerate()
                .map(|(i, ((name, plain, actor), label))| {
                    let id = format!("{name}{i}");
                    Participant {
                        label: if plain { id.clone() } else { label },
                        id,
                        actor,
                    }
                })
                .collect();
            let messages = messages
                .into_iter()
                .map(|(a, b, label)| Message {
                    from: participants[a].id.clone(),
                    to: participants[b].id.clone(),
                    label: label.unwrap_or_default(),
                })
                .collect();
            DiagramGraph::sequence(participants, messages)
        })
}

pub fn diagram() -> impl Strategy<Value = DiagramGraph> {
    prop_oneof![class_diagram(), flowchart(), sequence_diagram()]
}

pub fn table() -> impl Strategy<Value = Table> {
    (1usize..5).prop_flat_map(|cols| {
        (vec(capitalized(), cols), vec(vec(words(4), cols), 0..5)).prop_map(|(headers, rows)| Table { headers, rows })
    })
}

pub fn body() -> impl Strategy<Value = SectionBody> {
    (
        prop::option::of(prose()),
        vec(diagram(), 0..3),
        vec(table(), 0..3),
    )
        .prop_map(|(prose, diagrams, tables)| SectionBody {
            prose: prose.unwrap_or_default(),
            diagrams,
            tables,
        })
}

pub fn section(kind: SectionKind) -> impl Strategy<Value = Section> {
    (body(), vec((words(4), body()), 0..3)).prop_map(move |(body, subs)| Section {
        kind,
        heading: kind.default_heading(),
        body,
        subsections: subs
            .into_iter()
            .map(|(h, body)| Subsection {
                heading: format!("Detail {h}"),
                body,
            })
            .collect(),
    })
}

pub fn architecture() -> impl Strategy<Value = ArchitectureDocument> {
    (
        prop::option::of(words(4)),
        prop::option::of(prose()),
        subsequence(SectionKind::ALL.to_vec(), 1..=SectionKind::ALL.len()),
    )
        .prop_flat_map(|(title, preamble, kinds)| {
            let sections: Vec<_> = kinds.into_iter().map(section).collect();
            (Just(title), Just(preamble), sections)
        })
        .prop_map(|(title, preamble, sections)| ArchitectureDocument {
            title: title.map(|t| format!("Architecture {t}")),
            preamble: if sections.is_empty() { String::new() } else { preamble.unwrap_or_default() },
            sections,
        })
}

fn run<T: std::fmt::Debug>(
    name: &str,
    cases: u32,
    strategy: impl Strategy<Value = T>,
    check: impl Fn(T) -> Result<(), TestCaseError>,
) -> Result<(), String> {
    let config = ProptestConfig { failure_persistence: None, ..ProptestConfig::with_cases(cases) };
    let mut runner = TestRunner::new(config);
    runner.run(&strategy, check).map_err(|e| format!("{name}: {e}"))
}

pub fn check_drivers(set: DriverSet) -> Result<(), TestCaseError> {
    let parsed = parse_drivers(&set.to_markdown()).map_err(|e| TestCaseError::fail(e.to_string()))?;
    prop_assert_eq!(parsed.value, set);
    Ok(())
}

pub fn check_plan(p: IterationPlan) -> Result<(), TestCaseError> {
    let parsed = parse_iteration_plan(&p.to_markdown()).map_err(|e| TestCaseError::fail(e.to_string()))?;
    prop_assert_eq!(parsed.value, p);
    Ok(())
}

pub fn check_record(r: IterationRecord) -> Result<(), TestCaseError> {
    prop_assert_eq!(parse_iteration_record(&r.to_markdown()).value, r);
    Ok(())
}

pub fn check_diagram(g: DiagramGraph) -> Result<(), TestCaseError> {
    prop_assert_eq!(parse_diagram(&g.raw), g);
    Ok(())
}

pub fn check_architecture(d: ArchitectureDocument) -> Result<(), TestCaseError> {
    let parsed = parse_architecture_document(&d.to_markdown()).map_err(|e| TestCaseError::fail(e.to_string()))?;
    prop_assert_eq!(parsed.value, d);
    Ok(())
}

/// Every artifact type, `cases` values each.
pub fn check_all(cases: u32) -> Result<(), String> {
    run("drivers", cases, driver_set(), check_drivers)?;
    run("iteration plan", cases, plan(), check_plan)?;
    run("iteration record", cases, record(), check_record)?;
    run("diagram", cases, diagram(), check_diagram)?;
    run("architecture document", cases, architecture(), check_architecture)
}

use std::fmt;

use serde::{Deserialize, Serialize};

use super::diagram::{parse_diagram, DiagramGraph, DIAGRAM_FENCE_TAG};
use super::markdown::{scan, Block};
use super::table::Table;
use super::{DocError, DriverId, ParseWarning, Parsed, ToMarkdown};

pub const DECISION_HEADERS: [&str; 4] = ["driver", "decision", "rationale", "discarded alternative"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SectionKind {
    Introduction,
    ContextDiagram,
    ArchitecturalDrivers,
    DomainModel,
    ContainerDiagram,
    ComponentDiagrams,
    SequenceDiagrams,
    Interfaces,
    DesignDecisions,
}

impl SectionKind {
    pub const ALL: [SectionKind; 9] = [
        SectionKind::Introduction,
        SectionKind::ContextDiagram,
        SectionKind::ArchitecturalDrivers,
        SectionKind::DomainModel,
        SectionKind::ContainerDiagram,
        SectionKind::ComponentDiagrams,
        SectionKind::SequenceDiagrams,
        SectionKind::Interfaces,
        SectionKind::DesignDecisions,
    ];

    pub fn slug(self) -> &'static str {
        match self {
            SectionKind::Introduction => "introduction",
            SectionKind::ContextDiagram => "context-diagram",
            SectionKind::ArchitecturalDrivers => "architectural-drivers",
            SectionKind::DomainModel => "domain-model",
            SectionKind::ContainerDiagram => "container-diagram",
            SectionKind::ComponentDiagrams => "component-diagrams",
            SectionKind::SequenceDiagrams => "sequence-diagrams",
            SectionKind::Interfaces => "interfaces",
            SectionKind::DesignDecisions => "design-decisions",
        }
    }

    /// 1-based position in the canonical order.
    pub fn number(self) -> usize {
        self as usize + 1
    }

    /// Conventional heading text, numbered the way skeleton documents are.
    pub fn default_heading(self) -> String {
        let title = match self {
            SectionKind::Introduction => "Introduction",
            SectionKind::ContextDiagram => "Context diagram",
            SectionKind::ArchitecturalDrivers => "Architectural drivers",
            SectionKind::DomainModel => "Domain model",
            SectionKind::ContainerDiagram => "Container diagram",
            SectionKind::ComponentDiagrams => "Component diagrams",
            SectionKind::SequenceDiagrams => "Sequence diagrams",
            SectionKind::Interfaces => "Interfaces",
            SectionKind::DesignDecisions => "Design decisions",
        };
        format!("{}.- {title}", self.number())
    }

    pub fn from_slug(slug: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.slug() == slug)
    }

    /// Recognizes a section heading by its leading keywords once any
    /// numbering (`1.-`, `2.`, `3)`) is stripped.
    pub fn classify(heading: &str) -> Option<Self> {
        let stripped = regex!(r"^\s*(?:\d{1,2}(?:\.\d{1,2})*\s*[.)]?\s*-?\s*)?").replace(heading, "");
        let t = stripped.trim().trim_matches('*').trim().to_lowercase();
        const KEYWORDS: &[(&str, SectionKind)] = &[
            ("introduction", SectionKind::Introduction),
            ("context", SectionKind::ContextDiagram),
            ("system context", SectionKind::ContextDiagram),
            ("architectural driver", SectionKind::ArchitecturalDrivers),
            ("architecture driver", SectionKind::ArchitecturalDrivers),
            ("drivers", SectionKind::ArchitecturalDrivers),
            ("domain model", SectionKind::DomainModel),
            ("container", SectionKind::ContainerDiagram),
            ("component", SectionKind::ComponentDiagrams),
            ("sequence", SectionKind::SequenceDiagrams),
            ("interface", SectionKind::Interfaces),
            ("design decision", SectionKind::DesignDecisions),
            ("decisions", SectionKind::DesignDecisions),
        ];
        KEYWORDS
            .iter()
            .find(|(k, _)| t.starts_with(k))
            .map(|(_, kind)| *kind)
    }
}

impl fmt::Display for SectionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.slug())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SectionBody {
    pub prose: String,
    pub diagrams: Vec<DiagramGraph>,
    pub tables: Vec<Table>,
}

impl SectionBody {
    pub fn is_empty(&self) -> bool {
        self.prose.is_empty() && self.diagrams.is_empty() && self.tables.is_empty()
    }

    fn push_prose(&mut self, chunk: String) {
        if !self.prose.is_empty() {
            self.prose.push_str("\n\n");
        }
        self.prose.push_str(&chunk);
    }

    fn render(&self, out: &mut String) {
        let mut parts: Vec<String> = Vec::new();
        if !self.prose.is_empty() {
            parts.push(self.prose.clone());
        }
        for d in &self.diagrams {
            parts.push(fence(DIAGRAM_FENCE_TAG, &d.raw));
        }
        for t in &self.tables {
            parts.push(t.to_markdown().trim_end().to_string());
        }
        for p in parts {
            out.push('\n');
            out.push_str(&p);
            out.push('\n');
        }
    }
}

fn fence(tag: &str, body: &str) -> String {
    let longest = body
        .lines()
        .map(|l| l.trim_start().chars().take_while(|c| *c == '`').count())
        .max()
        .unwrap_or(0);
    let marker = "`".repeat(longest.max(2) + 1);
    format!("{marker}{tag}\n{body}\n{marker}")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Subsection {
    pub heading: String,
    pub body: SectionBody,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Section {
    pub kind: SectionKind,
    pub heading: String,
    pub body: SectionBody,
    pub subsections: Vec<Subsection>,
}

impl Section {
    pub fn new(kind: SectionKind) -> Self {
        Self {
            kind,
            heading: kind.default_heading(),
            body: SectionBody::default(),
            subsections: Vec::new(),
        }
    }

    /// Diagrams in the section body followed by those of each subsection,
    /// paired with the subsection heading they sit under.
    pub fn all_diagrams(&self) -> impl Iterator<Item = (Option<&str>, &DiagramGraph)> {
        self.body
            .diagrams
            .iter()
            .map(|d| (None, d))
            .chain(self.subsections.iter().flat_map(|s| {
                s.body.diagrams.iter().map(move |d| (Some(s.heading.as_str()), d))
            }))
    }

    pub fn all_tables(&self) -> impl Iterator<Item = &Table> {
        self.body
            .tables
            .iter()
            .chain(self.subsections.iter().flat_map(|s| s.body.tables.iter()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecisionRow {
    /// 0-based position among all decision rows of the document.
    pub index: usize,
    pub driver: String,
    pub driver_refs: Vec<DriverId>,
    pub decision: String,
    pub rationale: String,
    pub discarded_alternative: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArchitectureDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
    pub preamble: String,
    /// Present sections, in canonical order.
    pub sections: Vec<Section>,
}

impl ArchitectureDocument {
    /// A document with all nine sections and empty bodies.
    pub fn skeleton(title: &str) -> Self {
        Self {
            title: Some(title.to_string()),
            preamble: String::new(),
            sections: SectionKind::ALL.into_iter().map(Section::new).collect(),
        }
    }

    pub fn section(&self, kind: SectionKind) -> Option<&Section> {
        self.sections.iter().find(|s| s.kind == kind)
    }

    pub fn section_mut(&mut self, kind: SectionKind) -> Option<&mut Section> {
        self.sections.iter_mut().find(|s| s.kind == kind)
    }

    pub fn missing_sections(&self) -> Vec<SectionKind> {
        SectionKind::ALL
            .into_iter()
            .filter(|k| self.section(*k).is_none())
            .collect()
    }

    /// Rows of every table in the design-decisions section.
    pub fn decision_rows(&self) -> Vec<DecisionRow> {
        let Some(section) = self.section(SectionKind::DesignDecisions) else {
            return Vec::new();
        };
        let mut out = Vec::new();
        for table in section.all_tables() {
            let h = table.normalized_headers();
            let col = |needle: &str| h.iter().position(|x| x.contains(needle));
            let driver = col("driver");
            let decision = h.iter().position(|x| x.contains("decision") && !x.contains("driver"));
            let rationale = col("rationale");
            let discarded = col("discarded").or_else(|| col("alternative"));
            if driver.is_none() && decision.is_none() {
                continue;
            }
            let cell = |row: &[String], c: Option<usize>| c.map(|i| row[i].clone()).unwrap_or_default();
            for row in &table.rows {
                let driver_text = cell(row, driver);
                out.push(DecisionRow {
                    index: out.len(),
                    driver_refs: DriverId::extract_all(&driver_text),
                    driver: driver_text,
                    decision: cell(row, decision),
                    rationale: cell(row, rationale),
                    discarded_alternative: cell(row, discarded),
                });
            }
        }
        out
    }
}

struct Cursor {
    section: Option<usize>,
    subsection: Option<usize>,
}

fn body_of<'a>(doc: &'a mut ArchitectureDocument, cur: &Cursor) -> Option<&'a mut SectionBody> {
    let s = &mut doc.sections[cur.section?];
    Some(match cur.subsection {
        Some(i) => &mut s.subsections[i].body,
        None => &mut s.body,
    })
}

fn parse_impl(text: &str, strict: bool) -> Result<Parsed<ArchitectureDocument>, DocError> {
    let mut warnings = Vec::new();
    let blocks = scan(text, &mut warnings);
    let level = blocks.iter().find_map(|b| match b {
        Block::Heading { level, text, .. } if SectionKind::classify(text).is_some() => Some(*level),
        _ => None,
    });
    let mut doc = ArchitectureDocument::default();
    let mut cur = Cursor {
        section: None,
        subsection: None,
    };

    for block in &blocks {
        if let (Block::Heading { level: hl, text: htext, raw, line, .. }, Some(l)) = (block, level) {
            if *hl <= l {
                let kind = SectionKind::classify(htext);
                if let Some(kind) = kind {
                    let last = doc.sections.last().map(|s| s.kind);
                    match last {
                        Some(prev) if kind < prev && strict => {
                            return Err(DocError::SectionOrderViolation {
                                found: kind,
                                previous: prev,
                                line: *line,
                            });
                        }
                        Some(prev) if kind <= prev => {
                            warnings.push(ParseWarning::new(
                                *line,
                                if kind == prev || doc.section(kind).is_some() {
                                    format!("{kind} section repeated; kept as a subsection of {prev}")
                                } else {
                                    format!("{kind} section appears after {prev}; kept as a subsection")
                                },
                            ));
                        }
                        _ => {
                            doc.sections.push(Section {
                                kind,
                                heading: htext.clone(),
                                body: SectionBody::default(),
                                subsections: Vec::new(),
                            });
                            cur = Cursor {
                                section: Some(doc.sections.len() - 1),
                                subsection: None,
                            };
                            continue;
                        }
                    }
                } else if cur.section.is_none() {
                    if doc.title.is_none() && doc.preamble.is_empty() {
                        doc.title = Some(htext.clone());
                    } else {
                        push_preamble(&mut doc, raw.clone());
                    }
                    continue;
                } else {
                    warnings.push(ParseWarning::new(
                        *line,
                        format!("unrecognized section heading {htext:?}; kept as a subsection"),
                    ));
                }
                open_subsection(&mut doc, &mut cur, htext);
                continue;
            }
            if *hl == l + 1 && cur.section.is_some() {
                open_subsection(&mut doc, &mut cur, htext);
                continue;
            }
        } else if let Block::Heading { text: htext, .. } = block {
            // No recognized sections at all: the first heading is the title.
            if doc.title.is_none() && doc.preamble.is_empty() {
                doc.title = Some(htext.clone());
                continue;
            }
        }

        match body_of(&mut doc, &cur) {
            Some(body) => add_block(body, block),
            None => push_preamble(&mut doc, block.raw_text()),
        }
    }

    for kind in doc.missing_sections() {
        warnings.push(ParseWarning::new(0, format!("{kind} section is missing")));
    }
    if let Some(section) = doc.section(SectionKind::DesignDecisions) {
        for table in section.all_tables() {
            let h = table.normalized_headers();
            if h != DECISION_HEADERS {
                warnings.push(ParseWarning::new(
                    0,
                    format!("design decisions table has columns {h:?}; expected {DECISION_HEADERS:?}"),
                ));
            }
        }
    }
    for (n, d) in doc.sections.iter().flat_map(|s| s.all_diagrams()).enumerate() {
        if let Some(err) = &d.1.syntax_error {
            warnings.push(ParseWarning::new(
                0,
                format!("diagram {} ({} expected): {}", n + 1, err.attempted.as_str(), err.message),
            ));
        }
    }
    Ok(Parsed { value: doc, warnings })
}

fn open_subsection(doc: &mut ArchitectureDocument, cur: &mut Cursor, heading: &str) {
    let Some(si) = cur.section else {
        return;
    };
    let s = &mut doc.sections[si];
    s.subsections.push(Subsection {
        heading: heading.to_string(),
        body: SectionBody::default(),
    });
    cur.subsection = Some(s.subsections.len() - 1);
}

fn push_preamble(doc: &mut ArchitectureDocument, chunk: String) {
    if !doc.preamble.is_empty() {
        doc.preamble.push_str("\n\n");
    }
    doc.preamble.push_str(&chunk);
}

fn add_block(body: &mut SectionBody, block: &Block) {
    match block {
        Block::Table { table, .. } => body.tables.push(table.clone()),
        Block::Fence { info, body: src, .. }
            if info.split_whitespace().next() == Some(DIAGRAM_FENCE_TAG) =>
        {
            body.diagrams.push(parse_diagram(src));
        }
        other => body.push_prose(other.raw_text()),
    }
}

/// Parses an architecture document. Fails with SECTION_ORDER_VIOLATION when
/// a recognized section follows a later one; every other defect is a warning.
pub fn parse_architecture_document(text: &str) -> Result<Parsed<ArchitectureDocument>, DocError> {
    parse_impl(text, true)
}

/// Total variant: out-of-order sections are kept as subsections of the
/// section they follow and reported as warnings.
pub fn parse_architecture_document_lenient(text: &str) -> Parsed<ArchitectureDocument> {
    parse_impl(text, false).expect("lenient parsing never fails")
}

/// Line ranges (1-based, inclusive start, exclusive end) of each recognized
/// section in `text`, using the same heading rules as the parser.
pub fn section_spans(text: &str) -> Vec<(SectionKind, usize, usize)> {
    let mut warnings = Vec::new();
    let blocks = scan(text, &mut warnings);
    let Some(level) = blocks.iter().find_map(|b| match b {
        Block::Heading { level, text, .. } if SectionKind::classify(text).is_some() => Some(*level),
        _ => None,
    }) else {
        return Vec::new();
    };
    let total = text.lines().count() + 1;
    let mut spans: Vec<(SectionKind, usize, usize)> = Vec::new();
    for b in &blocks {
        if let Block::Heading { level: hl, text: t, line, .. } = b {
            if *hl > level {
                continue;
            }
            let kind = SectionKind::classify(t);
            let accepted = kind.filter(|k| spans.last().is_none_or(|(prev, _, _)| k > prev));
            if let Some(k) = accepted {
                if let Some(last) = spans.last_mut() {
                    last.2 = *line;
                }
                spans.push((k, *line, total));
            }
        }
    }
    spans
}

impl ToMarkdown for ArchitectureDocument {
    fn to_markdown(&self) -> String {
        let mut out = String::new();
        if let Some(t) = &self.title {
            out.push_str(&format!("# {t}\n"));
        }
        if !self.preamble.is_empty() {
            out.push('\n');
            out.push_str(&self.preamble);
            out.push('\n');
        }
        for s in &self.sections {
            if !out.is_empty() {
                out.push('\n');
            }
            out.push_str(&format!("# {}\n", s.heading));
            s.body.render(&mut out);
            for sub in &s.subsections {
                out.push_str(&format!("\n## {}\n", sub.heading));
                sub.body.render(&mut out);
            }
        }
        out
    }
}

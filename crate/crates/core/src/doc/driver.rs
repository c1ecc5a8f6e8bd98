use std::fmt;

use serde::{Deserialize, Serialize};

use super::markdown::{bullet_item, scan, Block};
use super::table::Table;
use super::{DocError, DriverId, ParseWarning, Parsed, ToMarkdown};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DriverKind {
    UserStory,
    QaScenario,
    Constraint,
    Concern,
}

impl DriverKind {
    pub const ALL: [DriverKind; 4] = [
        DriverKind::UserStory,
        DriverKind::QaScenario,
        DriverKind::Constraint,
        DriverKind::Concern,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DriverKind::UserStory => "user-story",
            DriverKind::QaScenario => "qa-scenario",
            DriverKind::Constraint => "constraint",
            DriverKind::Concern => "concern",
        }
    }

    /// Whether drivers of this kind carry importance/difficulty.
    pub fn is_prioritized(self) -> bool {
        matches!(self, DriverKind::UserStory | DriverKind::QaScenario)
    }

    fn section_title(self) -> &'static str {
        match self {
            DriverKind::UserStory => "User Stories",
            DriverKind::QaScenario => "Quality Attribute Scenarios",
            DriverKind::Constraint => "Constraints",
            DriverKind::Concern => "Concerns",
        }
    }

    fn from_prefix(id: &DriverId) -> Self {
        match id.prefix() {
            p if p.starts_with("QA") => DriverKind::QaScenario,
            "CON" => DriverKind::Constraint,
            "CRN" => DriverKind::Concern,
            _ => DriverKind::UserStory,
        }
    }

    /// Kind named by a heading, column header or statement, if any.
    fn from_context(text: &str) -> Option<Self> {
        let t = text.to_lowercase();
        if t.contains("user stor") || t.contains("use case") || t.contains("functional") {
            Some(DriverKind::UserStory)
        } else if t.contains("quality") || t.contains("scenario") {
            Some(DriverKind::QaScenario)
        } else if t.contains("constraint") {
            Some(DriverKind::Constraint)
        } else if t.contains("concern") {
            Some(DriverKind::Concern)
        } else {
            None
        }
    }
}

impl fmt::Display for DriverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Level {
    High,
    Medium,
    Low,
}

impl Level {
    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().trim_matches('*').trim().to_lowercase().as_str() {
            "high" => Some(Level::High),
            "medium" => Some(Level::Medium),
            "low" => Some(Level::Low),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Level::High => "High",
            Level::Medium => "Medium",
            Level::Low => "Low",
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Driver {
    pub id: DriverId,
    pub kind: DriverKind,
    pub title: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub importance: Option<Level>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub difficulty: Option<Level>,
    pub primary: bool,
}

impl Driver {
    pub fn new(id: DriverId, kind: DriverKind, title: impl Into<String>) -> Self {
        Self {
            id,
            kind,
            title: title.into(),
            description: None,
            importance: None,
            difficulty: None,
            primary: false,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DriverSet {
    pub drivers: Vec<Driver>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub primary_statement: Option<String>,
}

impl DriverSet {
    pub fn get(&self, id: &DriverId) -> Option<&Driver> {
        self.drivers.iter().find(|d| &d.id == id)
    }

    pub fn contains(&self, id: &DriverId) -> bool {
        self.get(id).is_some()
    }

    pub fn ids(&self) -> impl Iterator<Item = &DriverId> {
        self.drivers.iter().map(|d| &d.id)
    }

    pub fn primary(&self) -> impl Iterator<Item = &Driver> {
        self.drivers.iter().filter(|d| d.primary)
    }

    pub fn of_kind(&self, kind: DriverKind) -> impl Iterator<Item = &Driver> {
        self.drivers.iter().filter(move |d| d.kind == kind)
    }

    pub fn is_empty(&self) -> bool {
        self.drivers.is_empty()
    }

    /// Folds another set (e.g. from a `Drivers/` file) into this one.
    pub fn merge(&mut self, other: DriverSet) -> Result<(), DocError> {
        let mut acc = Accumulator::default();
        for d in self.drivers.drain(..) {
            acc.add(Candidate::settled(d))?;
        }
        for d in other.drivers {
            acc.add(Candidate::settled(d))?;
        }
        self.drivers = acc.finish();
        self.primary_statement = match (self.primary_statement.take(), other.primary_statement) {
            (Some(a), Some(b)) => Some(format!("{a}\n\n{b}")),
            (a, b) => a.or(b),
        };
        Ok(())
    }
}

/// A driver as seen at one declaration site, before merging.
struct Candidate {
    driver: Driver,
    kind_explicit: bool,
}

impl Candidate {
    fn settled(driver: Driver) -> Self {
        Self {
            driver,
            kind_explicit: true,
        }
    }
}

#[derive(Default)]
struct Accumulator {
    entries: Vec<Candidate>,
}

impl Accumulator {
    fn add(&mut self, c: Candidate) -> Result<(), DocError> {
        let Some(existing) = self.entries.iter_mut().find(|e| e.driver.id == c.driver.id) else {
            self.entries.push(c);
            return Ok(());
        };
        let id = c.driver.id.to_string();
        let conflict = |field| DocError::DuplicateDriverId { id: id.clone(), field };

        match (existing.kind_explicit, c.kind_explicit) {
            (true, true) if existing.driver.kind != c.driver.kind => return Err(conflict("kind")),
            (false, true) => {
                existing.driver.kind = c.driver.kind;
                existing.kind_explicit = true;
            }
            _ => {}
        }
        merge_text(&mut existing.driver.title, c.driver.title).map_err(|_| conflict("title"))?;
        merge_opt(&mut existing.driver.description, c.driver.description).map_err(|_| conflict("description"))?;
        merge_opt(&mut existing.driver.importance, c.driver.importance).map_err(|_| conflict("importance"))?;
        merge_opt(&mut existing.driver.difficulty, c.driver.difficulty).map_err(|_| conflict("difficulty"))?;
        existing.driver.primary |= c.driver.primary;
        Ok(())
    }

    /// Drivers grouped by kind (user stories, scenarios, constraints,
    /// concerns), first-appearance order within each group.
    fn finish(self) -> Vec<Driver> {
        let mut drivers: Vec<Driver> = self.entries.into_iter().map(|e| e.driver).collect();
        drivers.sort_by_key(|d| d.kind);
        for d in &mut drivers {
            if !d.kind.is_prioritized() {
                d.importance = None;
                d.difficulty = None;
            }
        }
        drivers
    }
}

fn merge_text(slot: &mut String, incoming: String) -> Result<(), ()> {
    if incoming.is_empty() || *slot == incoming {
        return Ok(());
    }
    if slot.is_empty() {
        *slot = incoming;
        return Ok(());
    }
    Err(())
}

fn merge_opt<T: PartialEq>(slot: &mut Option<T>, incoming: Option<T>) -> Result<(), ()> {
    match (slot.as_ref(), incoming) {
        (_, None) => Ok(()),
        (None, Some(v)) => {
            *slot = Some(v);
            Ok(())
        }
        (Some(a), Some(b)) if *a == b => Ok(()),
        _ => Err(()),
    }
}

/// Strips the separator between an id and its title: `QA-1 \- Performance`,
/// `HPS-2: Change Prices`, `CON-6 – Cloud-native`.
fn title_after_id(rest: &str) -> &str {
    let rest = rest.trim_start_matches("**").trim_start();
    let rest = rest
        .strip_prefix("\\-")
        .or_else(|| rest.strip_prefix(':'))
        .or_else(|| rest.strip_prefix('–'))
        .or_else(|| rest.strip_prefix('—'))
        .or_else(|| rest.strip_prefix('-'))
        .unwrap_or(rest);
    rest.trim().trim_start_matches("**").trim_end_matches("**").trim()
}

struct Columns {
    id: usize,
    title: Option<usize>,
    description: Option<usize>,
    importance: Option<usize>,
    difficulty: Option<usize>,
    primary: Option<usize>,
}

impl Columns {
    fn detect(table: &Table) -> Self {
        let h = table.normalized_headers();
        let find = |pred: &dyn Fn(&str) -> bool| h.iter().position(|x| pred(x));
        let importance = find(&|x| x.contains("importance"));
        let difficulty = find(&|x| x.contains("difficulty"));
        let primary = find(&|x| x == "primary");
        let description = find(&|x| x.contains("description") || x == "scenario" || x == "statement");
        let title = find(&|x| x == "title" || x == "name" || x.ends_with(" name"));
        let id = find(&|x| x == "id" || x.ends_with(" id") || x.contains("identifier"))
            .unwrap_or(0);
        Self {
            id,
            title: title.filter(|&c| c != id),
            description: description.filter(|&c| c != id),
            importance,
            difficulty,
            primary,
        }
    }
}

fn parse_level(cell: &str, id: &DriverId, line: usize) -> Result<Option<Level>, DocError> {
    if cell.trim().is_empty() {
        return Ok(None);
    }
    Level::parse(cell).map(Some).ok_or_else(|| DocError::MalformedPriorityValue {
        id: id.to_string(),
        value: cell.trim().to_string(),
        line,
    })
}

fn is_truthy(cell: &str) -> bool {
    matches!(cell.trim().to_lowercase().as_str(), "yes" | "y" | "true" | "x" | "✓" | "primary")
}

fn is_primary_statement(line: &str) -> bool {
    line.to_lowercase().contains("primary") && bullet_item(line).is_none()
}

/// Parses a drivers document: priority tables and primary-selection
/// statements declare drivers, plain prose mentions do not.
pub fn parse_drivers(doc: &str) -> Result<Parsed<DriverSet>, DocError> {
    let mut warnings = Vec::new();
    let blocks = scan(doc, &mut warnings);
    let mut acc = Accumulator::default();
    let mut statements: Vec<String> = Vec::new();
    let mut statement_ids: Vec<(DriverId, usize)> = Vec::new();
    let mut heading_kind: Option<DriverKind> = None;
    // A primary statement ending in ':' introduces a list of declarations.
    let mut pending_list: Option<(usize, Option<DriverKind>)> = None;

    for block in &blocks {
        match block {
            Block::Heading { text, .. } => {
                heading_kind = DriverKind::from_context(text);
                pending_list = None;
            }
            Block::Table { table, line, .. } => {
                pending_list = None;
                table_declarations(table, *line, heading_kind, &mut acc, &mut warnings)?;
            }
            Block::Fence { .. } => pending_list = None,
            Block::Paragraph { lines, line } => {
                let mut current: Option<usize> = pending_list.map(|(i, _)| i);
                let mut list_kind = pending_list.and_then(|(_, k)| k);
                let mut listing = pending_list.is_some();
                for (offset, text) in lines.iter().enumerate() {
                    let lineno = line + offset;
                    if listing {
                        if let Some(item) = bullet_item(text) {
                            if let Some((id, end)) = DriverId::leading(item) {
                                let rest = &item[end..];
                                let title = rest.split(" \\- ").next().unwrap_or("");
                                let mut d = Driver::new(id.clone(), list_kind.unwrap_or_else(|| DriverKind::from_prefix(&id)), title_after_id(title));
                                d.primary = true;
                                acc.add(Candidate {
                                    driver: d,
                                    kind_explicit: list_kind.is_some(),
                                })?;
                                if let Some(i) = current {
                                    statements[i].push('\n');
                                    statements[i].push_str(text);
                                }
                                continue;
                            }
                        }
                        listing = false;
                    }
                    if is_primary_statement(text) {
                        let ids = DriverId::extract_all(text);
                        let opens_list = text.trim_end().ends_with(':');
                        if ids.is_empty() && !opens_list {
                            continue;
                        }
                        statement_ids.extend(ids.into_iter().map(|id| (id, lineno)));
                        statements.push(text.clone());
                        current = Some(statements.len() - 1);
                        if opens_list {
                            listing = true;
                            list_kind = DriverKind::from_context(text);
                        }
                    } else {
                        current = None;
                    }
                }
                pending_list = if listing { current.map(|i| (i, list_kind)) } else { None };
            }
        }
    }

    let mut drivers = acc.finish();
    for (id, line) in statement_ids {
        match drivers.iter_mut().find(|d| d.id == id) {
            Some(d) => d.primary = true,
            None => warnings.push(ParseWarning::new(
                line,
                format!("{id} is named primary but never declared; ignored"),
            )),
        }
    }
    let primary_statement = (!statements.is_empty()).then(|| statements.join("\n\n"));
    Ok(Parsed {
        value: DriverSet {
            drivers,
            primary_statement,
        },
        warnings,
    })
}

fn table_declarations(
    table: &Table,
    line: usize,
    heading_kind: Option<DriverKind>,
    acc: &mut Accumulator,
    warnings: &mut Vec<ParseWarning>,
) -> Result<(), DocError> {
    let cols = Columns::detect(table);
    let header_kind = DriverKind::from_context(&table.headers[cols.id]);
    let explicit = header_kind.or(heading_kind);
    for (r, row) in table.rows.iter().enumerate() {
        let lineno = line + 2 + r;
        let Some((id, end)) = DriverId::leading(&row[cols.id]) else {
            continue;
        };
        let mut title = title_after_id(&row[cols.id][end..]).to_string();
        if let Some(c) = cols.title {
            if title.is_empty() {
                title = row[c].clone();
            }
        }
        let kind = explicit.unwrap_or_else(|| DriverKind::from_prefix(&id));
        let mut d = Driver::new(id.clone(), kind, title);
        d.description = cols.description.map(|c| row[c].clone()).filter(|s| !s.is_empty());
        if let Some(c) = cols.importance {
            d.importance = parse_level(&row[c], &id, lineno)?;
        }
        if let Some(c) = cols.difficulty {
            d.difficulty = parse_level(&row[c], &id, lineno)?;
        }
        if !kind.is_prioritized() && (d.importance.is_some() || d.difficulty.is_some()) {
            warnings.push(ParseWarning::new(
                lineno,
                format!("{id} is a {kind}; importance/difficulty ignored"),
            ));
        }
        d.primary = cols.primary.is_some_and(|c| is_truthy(&row[c]));
        acc.add(Candidate {
            driver: d,
            kind_explicit: explicit.is_some(),
        })?;
    }
    Ok(())
}

/// Parses a single driver file from `Drivers/`. A heading that starts with a
/// driver id declares that driver; the prose beneath it becomes its
/// description. Tables and statements are handled as in [`parse_drivers`].
pub fn parse_driver_file(doc: &str) -> Result<Parsed<DriverSet>, DocError> {
    let Parsed { value: mut set, mut warnings } = parse_drivers(doc)?;
    let mut scan_warnings = Vec::new();
    let blocks = scan(doc, &mut scan_warnings);
    let mut headed = DriverSet::default();
    let mut i = 0;
    while i < blocks.len() {
        if let Block::Heading { level, text, .. } = &blocks[i] {
            if let Some((id, end)) = DriverId::leading(text) {
                let mut body = Vec::new();
                let mut j = i + 1;
                while j < blocks.len() {
                    match &blocks[j] {
                        Block::Heading { level: l, .. } if l <= level => break,
                        Block::Paragraph { lines, .. } => body.push(lines.join("\n")),
                        _ => {}
                    }
                    j += 1;
                }
                let mut d = Driver::new(id.clone(), DriverKind::from_prefix(&id), title_after_id(&text[end..]));
                d.description = (!body.is_empty()).then(|| body.join("\n\n"));
                if headed.contains(&d.id) {
                    warnings.push(ParseWarning::new(blocks[i].line(), format!("{id} has a second heading; ignored")));
                } else {
                    headed.drivers.push(d);
                }
                i = j;
                continue;
            }
        }
        i += 1;
    }
    // Table declarations carry the authoritative kind; headed ones only add text.
    for d in headed.drivers {
        match set.drivers.iter_mut().find(|x| x.id == d.id) {
            Some(existing) => {
                if existing.title.is_empty() {
                    existing.title = d.title;
                }
                if existing.description.is_none() {
                    existing.description = d.description;
                }
            }
            None => set.drivers.push(d),
        }
    }
    set.drivers.sort_by_key(|d| d.kind);
    Ok(Parsed { value: set, warnings })
}

impl ToMarkdown for DriverSet {
    fn to_markdown(&self) -> String {
        let mut out = String::from("# Architectural Drivers\n");
        for kind in DriverKind::ALL {
            out.push_str(&format!("\n## {}\n\n", kind.section_title()));
            let mut table = if kind.is_prioritized() {
                Table::new(["ID", "Title", "Description", "Importance", "Difficulty", "Primary"])
            } else {
                Table::new(["ID", "Title", "Description", "Primary"])
            };
            for d in self.of_kind(kind) {
                let mut row = vec![
                    d.id.to_string(),
                    d.title.clone(),
                    d.description.clone().unwrap_or_default(),
                ];
                if kind.is_prioritized() {
                    row.push(d.importance.map(|l| l.to_string()).unwrap_or_default());
                    row.push(d.difficulty.map(|l| l.to_string()).unwrap_or_default());
                }
                row.push(if d.primary { "Yes" } else { "" }.to_string());
                table.rows.push(row);
            }
            out.push_str(&table.to_markdown());
        }
        if let Some(statement) = &self.primary_statement {
            out.push_str("\n## Priorities\n\n");
            out.push_str(statement);
            out.push('\n');
        }
        out
    }
}

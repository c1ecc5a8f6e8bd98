use serde::{Deserialize, Serialize};

use super::markdown::{bullet_item, scan, Block};
use super::table::Table;
use super::{DriverId, ParseWarning, Parsed, ToMarkdown};
use crate::method::{step_heading, FIRST_STEP, LAST_STEP};

pub const CONCEPT_HEADERS: [&str; 3] = ["Selected design concept", "Rationale", "Discarded Alternatives"];
pub const INSTANTIATION_HEADERS: [&str; 2] = ["Instantiation decision", "Rationale"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConceptRow {
    pub concept: String,
    pub rationale: String,
    pub discarded_alternatives: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstantiationRow {
    pub decision: String,
    pub rationale: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IterationRecord {
    /// 0 when the document names no iteration.
    pub iteration_number: u32,
    pub goal_drivers: Vec<DriverId>,
    pub refined_elements: Vec<String>,
    pub concept_table: Vec<ConceptRow>,
    pub instantiation_table: Vec<InstantiationRow>,
    pub analysis: String,
    /// Step numbers that have a heading in the document, ascending.
    pub steps_present: Vec<u8>,
}

impl IterationRecord {
    pub fn has_step(&self, step: u8) -> bool {
        self.steps_present.contains(&step)
    }
}

/// Header signature check: same number of columns, each equal after trimming
/// and case folding.
pub fn matches_signature(table: &Table, signature: &[&str]) -> bool {
    table.headers.len() == signature.len()
        && table
            .headers
            .iter()
            .zip(signature)
            .all(|(h, s)| h.trim().to_lowercase() == s.to_lowercase())
}

fn element_name(item: &str) -> String {
    let item = item.replace("**", "");
    let cut = [": ", " - ", " – ", " — "]
        .iter()
        .filter_map(|sep| item.find(sep))
        .min()
        .unwrap_or(item.len());
    item[..cut].trim().trim_end_matches(':').trim().to_string()
}

/// Parses an iteration document. Never fails; missing parts are warnings.
pub fn parse_iteration_record(doc: &str) -> Parsed<IterationRecord> {
    let mut warnings = Vec::new();
    let blocks = scan(doc, &mut warnings);
    let iteration_re = regex!(r"(?i)\biteration\s*(\d+)");
    let step_re = regex!(r"(?i)^\s*\**\s*step\s*(\d)\b");

    let mut rec = IterationRecord::default();
    let mut current_step: Option<u8> = None;
    let mut analysis: Vec<String> = Vec::new();
    let mut saw_concept = false;
    let mut saw_instantiation = false;

    for block in &blocks {
        if let Block::Heading { text, .. } = block {
            if rec.iteration_number == 0 {
                if let Some(c) = iteration_re.captures(text) {
                    rec.iteration_number = c[1].parse().unwrap_or(0);
                }
            }
            if let Some(c) = step_re.captures(text) {
                let step: u8 = c[1].parse().unwrap();
                current_step = Some(step);
                if !rec.steps_present.contains(&step) {
                    rec.steps_present.push(step);
                }
                continue;
            }
        }
        if let Block::Table { table, line, .. } = block {
            if matches_signature(table, &CONCEPT_HEADERS) {
                saw_concept = true;
                rec.concept_table.extend(table.rows.iter().map(|r| ConceptRow {
                    concept: r[0].clone(),
                    rationale: r[1].clone(),
                    discarded_alternatives: r[2].clone(),
                }));
                continue;
            }
            if matches_signature(table, &INSTANTIATION_HEADERS) {
                saw_instantiation = true;
                rec.instantiation_table.extend(table.rows.iter().map(|r| InstantiationRow {
                    decision: r[0].clone(),
                    rationale: r[1].clone(),
                }));
                continue;
            }
            match current_step {
                Some(4) => warnings.push(ParseWarning::new(
                    *line,
                    format!("step 4 table has columns {:?}, expected {CONCEPT_HEADERS:?}", table.headers),
                )),
                Some(5) => warnings.push(ParseWarning::new(
                    *line,
                    format!("step 5 table has columns {:?}, expected {INSTANTIATION_HEADERS:?}", table.headers),
                )),
                _ => {}
            }
        }
        match current_step {
            Some(2) => {
                for id in DriverId::extract_all(&block.raw_text()) {
                    if !rec.goal_drivers.contains(&id) {
                        rec.goal_drivers.push(id);
                    }
                }
            }
            Some(3) => {
                if let Block::Paragraph { lines, .. } = block {
                    for l in lines {
                        if let Some(item) = bullet_item(l) {
                            let name = element_name(item);
                            if !name.is_empty() {
                                rec.refined_elements.push(name);
                            }
                        }
                    }
                }
            }
            Some(7) => analysis.push(block.raw_text()),
            _ => {}
        }
    }
    rec.steps_present.sort_unstable();
    rec.analysis = analysis.join("\n\n");

    if rec.iteration_number == 0 {
        warnings.push(ParseWarning::new(0, "no \"Iteration N\" heading"));
    }
    if !saw_concept {
        warnings.push(ParseWarning::new(0, "step 4 concept table not found"));
    }
    if !saw_instantiation {
        warnings.push(ParseWarning::new(0, "step 5 instantiation table not found"));
    }
    Parsed { value: rec, warnings }
}

impl ToMarkdown for IterationRecord {
    fn to_markdown(&self) -> String {
        let mut out = format!("# Iteration {}\n", self.iteration_number);
        for step in FIRST_STEP..=LAST_STEP {
            let needed = match step {
                2 => !self.goal_drivers.is_empty(),
                3 => !self.refined_elements.is_empty(),
                4 => !self.concept_table.is_empty(),
                5 => !self.instantiation_table.is_empty(),
                7 => !self.analysis.is_empty(),
                _ => false,
            };
            if !needed && !self.has_step(step) {
                continue;
            }
            out.push_str(&format!("\n## {}\n", step_heading(step)));
            match step {
                2 if !self.goal_drivers.is_empty() => {
                    out.push('\n');
                    for id in &self.goal_drivers {
                        out.push_str(&format!("- {id}\n"));
                    }
                }
                3 if !self.refined_elements.is_empty() => {
                    out.push('\n');
                    for e in &self.refined_elements {
                        out.push_str(&format!("- {e}\n"));
                    }
                }
                4 => {
                    let mut t = Table::new(CONCEPT_HEADERS);
                    for r in &self.concept_table {
                        t.rows.push(vec![r.concept.clone(), r.rationale.clone(), r.discarded_alternatives.clone()]);
                    }
                    out.push('\n');
                    out.push_str(&t.to_markdown());
                }
                5 => {
                    let mut t = Table::new(INSTANTIATION_HEADERS);
                    for r in &self.instantiation_table {
                        t.rows.push(vec![r.decision.clone(), r.rationale.clone()]);
                    }
                    out.push('\n');
                    out.push_str(&t.to_markdown());
                }
                7 if !self.analysis.is_empty() => {
                    out.push('\n');
                    out.push_str(&self.analysis);
                    out.push('\n');
                }
                _ => {}
            }
        }
        out
    }
}

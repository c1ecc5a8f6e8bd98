use serde::{Deserialize, Serialize};

use super::ParseWarning;

/// A pipe table. Rows always have exactly `headers.len()` cells.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(headers: impl IntoIterator<Item = S>) -> Self {
        Self {
            headers: headers.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn with_row<S: Into<String>>(mut self, row: impl IntoIterator<Item = S>) -> Self {
        self.rows.push(row.into_iter().map(Into::into).collect());
        self
    }

    /// Index of the first header containing `needle` (case-insensitive).
    pub fn column(&self, needle: &str) -> Option<usize> {
        let needle = needle.to_lowercase();
        self.headers
            .iter()
            .position(|h| h.to_lowercase().contains(&needle))
    }

    /// Lowercased, trimmed headers.
    pub fn normalized_headers(&self) -> Vec<String> {
        self.headers.iter().map(|h| h.trim().to_lowercase()).collect()
    }

    pub(crate) fn is_delimiter_row(line: &str) -> bool {
        let trimmed = line.trim();
        if !trimmed.contains('-') || !(trimmed.starts_with('|') || trimmed.starts_with(':') || trimmed.starts_with('-')) {
            return false;
        }
        let cells = split_row(trimmed);
        !cells.is_empty()
            && cells.iter().all(|c| {
                let c = c.trim();
                let inner = c.strip_prefix(':').unwrap_or(c);
                let inner = inner.strip_suffix(':').unwrap_or(inner);
                !inner.is_empty() && inner.chars().all(|ch| ch == '-')
            })
    }

    /// Builds a table from raw lines: header, delimiter, body rows.
    pub(crate) fn from_lines(lines: &[String], first_line: usize, warnings: &mut Vec<ParseWarning>) -> Self {
        let headers = split_row(&lines[0]);
        let width = headers.len();
        let mut rows = Vec::new();
        for (offset, line) in lines.iter().enumerate().skip(2) {
            let mut cells = split_row(line);
            let lineno = first_line + offset;
            if cells.len() < width {
                warnings.push(ParseWarning::new(
                    lineno,
                    format!("table row has {} cells, expected {width}; padded", cells.len()),
                ));
                cells.resize(width, String::new());
            } else if cells.len() > width {
                warnings.push(ParseWarning::new(
                    lineno,
                    format!("table row has {} cells, expected {width}; truncated", cells.len()),
                ));
                cells.truncate(width);
            }
            rows.push(cells);
        }
        Self { headers, rows }
    }

    pub fn to_markdown(&self) -> String {
        let mut out = String::new();
        out.push_str(&format_row(&self.headers));
        out.push('\n');
        out.push('|');
        for _ in &self.headers {
            out.push_str(" --- |");
        }
        out.push('\n');
        for row in &self.rows {
            out.push_str(&format_row(row));
            out.push('\n');
        }
        out
    }
}

fn format_row(cells: &[String]) -> String {
    let mut out = String::from("|");
    for cell in cells {
        out.push(' ');
        out.push_str(&escape_cell(cell));
        out.push_str(" |");
    }
    out
}

fn escape_cell(cell: &str) -> String {
    cell.replace('|', "\\|").replace('\n', " ")
}

/// Splits one table line into trimmed cells, honouring `\|` escapes.
pub(crate) fn split_row(line: &str) -> Vec<String> {
    let mut trimmed = line.trim();
    if let Some(rest) = trimmed.strip_prefix('|') {
        trimmed = rest;
    }
    let mut cells = Vec::new();
    let mut current = String::new();
    let mut chars = trimmed.chars().peekable();
    let mut ended_with_pipe = false;
    while let Some(c) = chars.next() {
        ended_with_pipe = false;
        match c {
            '\\' if chars.peek() == Some(&'|') => {
                current.push('|');
                chars.next();
            }
            '|' => {
                cells.push(current.trim().to_string());
                current.clear();
                ended_with_pipe = true;
            }
            _ => current.push(c),
        }
    }
    if !ended_with_pipe {
        cells.push(current.trim().to_string());
    }
    cells
}

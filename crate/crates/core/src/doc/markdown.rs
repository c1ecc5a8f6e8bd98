//! Line-oriented block scanner for the markdown subset the artifacts use:
//! ATX headings, numbered prose headings (`1.- Introduction`), pipe tables
//! and fenced code blocks. Everything else is paragraph text.

use std::sync::OnceLock;

use regex::Regex;

use super::table::Table;
use super::ParseWarning;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Block {
    Heading {
        /// ATX level; numbered prose headings report level 1.
        level: usize,
        numbered: bool,
        text: String,
        raw: String,
        line: usize,
    },
    Table {
        table: Table,
        raw: Vec<String>,
        line: usize,
    },
    Fence {
        info: String,
        body: String,
        raw: Vec<String>,
        line: usize,
    },
    Paragraph {
        lines: Vec<String>,
        line: usize,
    },
}

impl Block {
    pub(crate) fn raw_text(&self) -> String {
        match self {
            Block::Heading { raw, .. } => raw.clone(),
            Block::Table { raw, .. } | Block::Fence { raw, .. } => raw.join("\n"),
            Block::Paragraph { lines, .. } => lines.join("\n"),
        }
    }

    pub(crate) fn line(&self) -> usize {
        match self {
            Block::Heading { line, .. }
            | Block::Table { line, .. }
            | Block::Fence { line, .. }
            | Block::Paragraph { line, .. } => *line,
        }
    }
}

fn atx_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^ {0,3}(#{1,6})(?:[ \t]+(.*?))?(?:[ \t]+#+)?[ \t]*$").unwrap())
}

fn numbered_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^ {0,3}\d{1,2}\s*\.\s*-\s*\S").unwrap())
}

fn fence_open_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^( {0,3})(`{3,}|~{3,})(.*)$").unwrap())
}

/// Normalizes CRLF and lone CR line endings to LF.
pub(crate) fn normalize_newlines(text: &str) -> String {
    if text.contains('\r') {
        text.replace("\r\n", "\n").replace('\r', "\n")
    } else {
        text.to_string()
    }
}

pub(crate) struct Fence {
    pub ch: char,
    pub len: usize,
    pub info: String,
}

/// Recognizes a fence opening line per CommonMark (backtick fences may not
/// carry backticks in their info string).
pub(crate) fn fence_open(line: &str) -> Option<Fence> {
    let caps = fence_open_re().captures(line)?;
    let marker = caps.get(2).unwrap().as_str();
    let info = caps.get(3).map_or("", |m| m.as_str());
    let ch = marker.chars().next().unwrap();
    if ch == '`' && info.contains('`') {
        return None;
    }
    Some(Fence {
        ch,
        len: marker.len(),
        info: info.trim().to_string(),
    })
}

pub(crate) fn fence_closes(line: &str, fence: &Fence) -> bool {
    let trimmed = line.trim_start_matches(' ');
    if line.len() - trimmed.len() > 3 {
        return false;
    }
    let run = trimmed.chars().take_while(|c| *c == fence.ch).count();
    run >= fence.len && trimmed[run..].trim().is_empty()
}

pub(crate) fn parse_heading(line: &str) -> Option<(usize, bool, String)> {
    if let Some(caps) = atx_re().captures(line) {
        let level = caps.get(1).unwrap().as_str().len();
        let text = caps.get(2).map_or("", |m| m.as_str()).trim().to_string();
        return Some((level, false, text));
    }
    if numbered_re().is_match(line) {
        return Some((1, true, line.trim().to_string()));
    }
    None
}

fn is_table_line(line: &str) -> bool {
    line.trim_start().starts_with('|')
}

/// Splits `text` into blocks. Parsing is total; table defects are reported
/// through `warnings`.
pub(crate) fn scan(text: &str, warnings: &mut Vec<ParseWarning>) -> Vec<Block> {
    let text = normalize_newlines(text);
    let lines: Vec<&str> = text.split('\n').collect();
    let mut blocks = Vec::new();
    let mut para: Vec<String> = Vec::new();
    let mut para_line = 0;
    let mut i = 0;

    macro_rules! flush_para {
        () => {
            if !para.is_empty() {
                blocks.push(Block::Paragraph {
                    lines: std::mem::take(&mut para),
                    line: para_line,
                });
            }
        };
    }

    while i < lines.len() {
        let line = lines[i];
        let lineno = i + 1;

        if line.trim().is_empty() {
            flush_para!();
            i += 1;
            continue;
        }

        if let Some(fence) = fence_open(line) {
            flush_para!();
            let mut raw = vec![line.to_string()];
            let mut body = Vec::new();
            i += 1;
            while i < lines.len() {
                if fence_closes(lines[i], &fence) {
                    raw.push(lines[i].to_string());
                    i += 1;
                    break;
                }
                raw.push(lines[i].to_string());
                body.push(lines[i]);
                i += 1;
            }
            blocks.push(Block::Fence {
                info: fence.info,
                body: body.join("\n"),
                raw,
                line: lineno,
            });
            continue;
        }

        if let Some((level, numbered, htext)) = parse_heading(line) {
            flush_para!();
            blocks.push(Block::Heading {
                level,
                numbered,
                text: htext,
                raw: line.to_string(),
                line: lineno,
            });
            i += 1;
            continue;
        }

        if is_table_line(line) && i + 1 < lines.len() && Table::is_delimiter_row(lines[i + 1]) {
            flush_para!();
            let mut raw = vec![line.to_string(), lines[i + 1].to_string()];
            let mut j = i + 2;
            while j < lines.len() && is_table_line(lines[j]) {
                raw.push(lines[j].to_string());
                j += 1;
            }
            let table = Table::from_lines(&raw, lineno, warnings);
            blocks.push(Block::Table {
                table,
                raw,
                line: lineno,
            });
            i = j;
            continue;
        }

        if para.is_empty() {
            para_line = lineno;
        }
        para.push(line.to_string());
        i += 1;
    }
    flush_para!();
    blocks
}

fn bullet_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^\s*(?:[*+\-]|\d+[.)])\s+(.*)$").unwrap())
}

/// Returns the item text when `line` is a list item.
pub(crate) fn bullet_item(line: &str) -> Option<&str> {
    bullet_re()
        .captures(line)
        .map(|c| c.get(1).unwrap().as_str().trim())
}

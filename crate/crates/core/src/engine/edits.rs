use crate::doc::markdown::{fence_closes, fence_open, normalize_newlines};

/// A file block found in a model response, before path validation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawEdit {
    pub path: String,
    pub content: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParsedResponse {
    pub edits: Vec<RawEdit>,
    /// Everything outside file blocks.
    pub commentary: String,
}

fn file_line(line: &str) -> Option<String> {
    let c = regex!(r"^\s*file:\s*(\S.*?)\s*$").captures(line)?;
    let p = c[1].trim_matches('`');
    let p = p.strip_prefix('@').unwrap_or(p);
    let p = p.strip_prefix("./").unwrap_or(p);
    Some(p.to_string())
}

/// Splits a response into file blocks and commentary. A file block is a
/// fenced block whose first line is `file: <path>`; its remaining lines are
/// the complete new content of that file. A later block for the same path
/// replaces an earlier one.
pub fn parse_response(text: &str) -> ParsedResponse {
    let text = normalize_newlines(text);
    let lines: Vec<&str> = text.split('\n').collect();
    let mut out = ParsedResponse::default();
    let mut commentary: Vec<&str> = Vec::new();
    let mut i = 0;
    while i < lines.len() {
        let Some(fence) = fence_open(lines[i]) else {
            commentary.push(lines[i]);
            i += 1;
            continue;
        };
        let start = i;
        let mut end = i + 1;
        while end < lines.len() && !fence_closes(lines[end], &fence) {
            end += 1;
        }
        let body = &lines[start + 1..end.min(lines.len())];
        match body.first().and_then(|l| file_line(l)) {
            Some(path) => {
                let mut content = body[1..].join("\n");
                if !content.is_empty() {
                    content.push('\n');
                }
                out.edits.retain(|e| e.path != path);
                out.edits.push(RawEdit { path, content });
            }
            None => commentary.extend_from_slice(&lines[start..(end + 1).min(lines.len())]),
        }
        i = end + 1;
    }
    out.commentary = commentary.join("\n").trim().to_string();
    out
}

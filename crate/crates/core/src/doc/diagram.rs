//! A small mermaid subset: class diagrams, flowcharts and sequence diagrams.
//! Anything else is kept as opaque text.

use serde::{Deserialize, Serialize};

pub const DIAGRAM_FENCE_TAG: &str = "mermaid";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DiagramKind {
    Class,
    Flowchart,
    Sequence,
    Opaque,
}

impl DiagramKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DiagramKind::Class => "class",
            DiagramKind::Flowchart => "flowchart",
            DiagramKind::Sequence => "sequence",
            DiagramKind::Opaque => "opaque",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Node {
    pub id: String,
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stereotype: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub from: String,
    pub to: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Participant {
    pub id: String,
    pub label: String,
    /// Declared with `actor` rather than `participant`.
    pub actor: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub from: String,
    pub to: String,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiagramSyntax {
    /// The kind the header announced.
    pub attempted: DiagramKind,
    /// 1-based line within the diagram source.
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiagramGraph {
    pub kind: DiagramKind,
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
    pub participants: Vec<Participant>,
    pub messages: Vec<Message>,
    pub raw: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub syntax_error: Option<DiagramSyntax>,
}

impl DiagramGraph {
    fn empty(kind: DiagramKind, raw: &str) -> Self {
        Self {
            kind,
            nodes: Vec::new(),
            edges: Vec::new(),
            participants: Vec::new(),
            messages: Vec::new(),
            raw: raw.to_string(),
            syntax_error: None,
        }
    }

    pub fn opaque(raw: &str) -> Self {
        Self::empty(DiagramKind::Opaque, raw)
    }

    /// Builds a graph from parts; `raw` is the canonical rendering.
    pub fn class(nodes: Vec<Node>, edges: Vec<Edge>) -> Self {
        let mut g = Self::empty(DiagramKind::Class, "");
        g.nodes = nodes;
        g.edges = edges;
        g.raw = g.to_mermaid();
        g
    }

    pub fn flowchart(nodes: Vec<Node>, edges: Vec<Edge>) -> Self {
        let mut g = Self::empty(DiagramKind::Flowchart, "");
        g.nodes = nodes;
        g.edges = edges;
        g.raw = g.to_mermaid();
        g
    }

    pub fn sequence(participants: Vec<Participant>, messages: Vec<Message>) -> Self {
        let mut g = Self::empty(DiagramKind::Sequence, "");
        g.participants = participants;
        g.messages = messages;
        g.raw = g.to_mermaid();
        g
    }

    pub fn node(&self, id: &str) -> Option<&Node> {
        self.nodes.iter().find(|n| n.id == id)
    }

    /// Element names a reader would recognize: node ids and labels, or
    /// participant ids and labels.
    pub fn element_names(&self) -> Vec<&str> {
        let mut out = Vec::new();
        for n in &self.nodes {
            out.push(n.id.as_str());
            if n.label != n.id {
                out.push(n.label.as_str());
            }
        }
        for p in &self.participants {
            out.push(p.id.as_str());
            if p.label != p.id {
                out.push(p.label.as_str());
            }
        }
        out
    }

    fn ensure_node(&mut self, id: &str, label: Option<String>, stereotype: Option<String>) {
        match self.nodes.iter_mut().find(|n| n.id == id) {
            Some(n) => {
                if let Some(l) = label {
                    if n.label == n.id {
                        n.label = l;
                    }
                }
                if stereotype.is_some() && n.stereotype.is_none() {
                    n.stereotype = stereotype;
                }
            }
            None => self.nodes.push(Node {
                id: id.to_string(),
                label: label.unwrap_or_else(|| id.to_string()),
                stereotype,
            }),
        }
    }

    fn ensure_participant(&mut self, id: &str) {
        if !self.participants.iter().any(|p| p.id == id) {
            self.participants.push(Participant {
                id: id.to_string(),
                label: id.to_string(),
                actor: false,
            });
        }
    }

    /// Canonical mermaid text for the graph structure.
    pub fn to_mermaid(&self) -> String {
        let mut out = String::new();
        match self.kind {
            DiagramKind::Opaque => return self.raw.clone(),
            DiagramKind::Class => {
                out.push_str("classDiagram\n");
                for n in &self.nodes {
                    if n.label == n.id {
                        out.push_str(&format!("    class {}\n", n.id));
                    } else {
                        out.push_str(&format!("    class {}[\"{}\"]\n", n.id, n.label));
                    }
                    if let Some(s) = &n.stereotype {
                        out.push_str(&format!("    <<{s}>> {}\n", n.id));
                    }
                }
                for e in &self.edges {
                    match &e.label {
                        Some(l) => out.push_str(&format!("    {} --> {} : {l}\n", e.from, e.to)),
                        None => out.push_str(&format!("    {} --> {}\n", e.from, e.to)),
                    }
                }
            }
            DiagramKind::Flowchart => {
                out.push_str("flowchart TD\n");
                for n in &self.nodes {
                    match n.stereotype.as_deref() {
                        Some("subgraph") => {
                            out.push_str(&format!("    subgraph {} [\"{}\"]\n    end\n", n.id, n.label));
                        }
                        Some(s) => out.push_str(&format!("    {}[\"{}\"]:::{s}\n", n.id, n.label)),
                        None => out.push_str(&format!("    {}[\"{}\"]\n", n.id, n.label)),
                    }
                }
                for e in &self.edges {
                    match &e.label {
                        Some(l) => out.push_str(&format!("    {} -->|{l}| {}\n", e.from, e.to)),
                        None => out.push_str(&format!("    {} --> {}\n", e.from, e.to)),
                    }
                }
            }
            DiagramKind::Sequence => {
                out.push_str("sequenceDiagram\n");
                for p in &self.participants {
                    let word = if p.actor { "actor" } else { "participant" };
                    if p.label == p.id {
                        out.push_str(&format!("    {word} {}\n", p.id));
                    } else {
                        out.push_str(&format!("    {word} {} as {}\n", p.id, p.label));
                    }
                }
                for m in &self.messages {
                    if m.label.is_empty() {
                        out.push_str(&format!("    {}->>{}:\n", m.from, m.to));
                    } else {
                        out.push_str(&format!("    {}->>{}: {}\n", m.from, m.to, m.label));
                    }
                }
            }
        }
        out
    }
}

/// Parses the body of a fenced diagram block. Parsing is total: unknown
/// diagram types come back opaque, and a recognized type whose body does not
/// parse comes back opaque with `syntax_error` set.
pub fn parse_diagram(source: &str) -> DiagramGraph {
    let lines: Vec<&str> = source.lines().collect();
    let mut i = 0;
    // Optional front matter block.
    if lines.first().map(|l| l.trim()) == Some("---") {
        i = 1;
        while i < lines.len() && lines[i].trim() != "---" {
            i += 1;
        }
        i += 1;
    }
    while i < lines.len() && (lines[i].trim().is_empty() || lines[i].trim_start().starts_with("%%")) {
        i += 1;
    }
    let Some(header) = lines.get(i) else {
        return DiagramGraph::opaque(source);
    };
    let keyword = header
        .split(|c: char| c.is_whitespace() || c == ';')
        .find(|s| !s.is_empty())
        .unwrap_or("");
    let kind = match keyword {
        "classDiagram" | "classDiagram-v2" => DiagramKind::Class,
        "graph" | "flowchart" | "flowchart-v2" | "flowchart-elk" => DiagramKind::Flowchart,
        "sequenceDiagram" => DiagramKind::Sequence,
        _ => return DiagramGraph::opaque(source),
    };
    let mut g = DiagramGraph::empty(kind, source);
    let body = &lines[i + 1..];
    let result = match kind {
        DiagramKind::Class => parse_class(body, &mut g),
        DiagramKind::Flowchart => parse_flowchart(body, &mut g),
        DiagramKind::Sequence => parse_sequence(body, &mut g),
        DiagramKind::Opaque => unreachable!(),
    };
    match result {
        Ok(()) => g,
        Err((offset, message)) => {
            let mut opaque = DiagramGraph::opaque(source);
            opaque.syntax_error = Some(DiagramSyntax {
                attempted: kind,
                line: i + 2 + offset,
                message,
            });
            opaque
        }
    }
}

type LineResult = Result<(), (usize, String)>;

fn statement(line: &str) -> &str {
    let t = line.trim();
    t.strip_suffix(';').unwrap_or(t).trim_end()
}

fn strip_quotes(s: &str) -> &str {
    let s = s.trim();
    s.strip_prefix('"').and_then(|x| x.strip_suffix('"')).unwrap_or(s)
}

fn starts_with_word(s: &str, word: &str) -> bool {
    s.strip_prefix(word)
        .is_some_and(|rest| rest.is_empty() || rest.starts_with(char::is_whitespace))
}

const CLASS_IGNORED: &[&str] = &[
    "direction", "note", "style", "classDef", "cssClass", "callback", "click", "link", "namespace",
    "accTitle", "accDescr", "title",
];

fn parse_class(body: &[&str], g: &mut DiagramGraph) -> LineResult {
    let decl = regex!(r#"^class\s+([\w.]+)(?:~[^~]*~)?(?:\s*\[\s*"?([^"\]]*)"?\s*\])?(?::::(\w+))?\s*(\{)?\s*$"#);
    let stereo_for = regex!(r"^<<\s*([^>]+?)\s*>>\s*([\w.]+)$");
    let stereo_inner = regex!(r"^<<\s*([^>]+?)\s*>>$");
    let member = regex!(r"^([\w.]+)\s*:\s*.*$");
    let relation = regex!(
        r#"^([\w.]+)(?:~[^~]*~)?\s*(?:"[^"]*"\s*)?(<\|--|<\|\.\.|\*--|o--|<--|<\.\.|--\|>|\.\.\|>|--\*|--o|-->|\.\.>|--|\.\.)\s*(?:"[^"]*"\s*)?([\w.]+)(?:~[^~]*~)?\s*(?::\s*(.*))?$"#
    );

    let mut open_class: Option<String> = None;
    let mut depth = 0usize;
    for (n, raw) in body.iter().enumerate() {
        let line = statement(raw);
        if line.is_empty() || line.starts_with("%%") {
            continue;
        }
        if let Some(class) = &open_class {
            if line == "}" {
                open_class = None;
            } else if let Some(c) = stereo_inner.captures(line) {
                let class = class.clone();
                g.ensure_node(&class, None, Some(c[1].to_string()));
            }
            continue;
        }
        if line == "}" {
            depth = depth.saturating_sub(1);
            continue;
        }
        if let Some(first) = line.split_whitespace().next() {
            if CLASS_IGNORED.contains(&first) {
                if first == "namespace" && line.ends_with('{') {
                    depth += 1;
                }
                continue;
            }
        }
        if let Some(c) = decl.captures(line) {
            let id = c[1].to_string();
            let label = c.get(2).map(|m| m.as_str().trim().to_string()).filter(|s| !s.is_empty());
            g.ensure_node(&id, label, c.get(3).map(|m| m.as_str().to_string()));
            if c.get(4).is_some() {
                open_class = Some(id);
            }
            continue;
        }
        if let Some(c) = stereo_for.captures(line) {
            g.ensure_node(&c[2], None, Some(c[1].to_string()));
            continue;
        }
        if let Some(c) = relation.captures(line) {
            let (from, to) = (c[1].to_string(), c[3].to_string());
            g.ensure_node(&from, None, None);
            g.ensure_node(&to, None, None);
            let label = c.get(4).map(|m| m.as_str().trim().to_string()).filter(|s| !s.is_empty());
            g.edges.push(Edge { from, to, label });
            continue;
        }
        if let Some(c) = member.captures(line) {
            g.ensure_node(&c[1], None, None);
            continue;
        }
        return Err((n, format!("unrecognized class diagram statement: {line}")));
    }
    if open_class.is_some() {
        return Err((body.len().saturating_sub(1), "unclosed class body".to_string()));
    }
    Ok(())
}

const FLOW_IGNORED: &[&str] = &[
    "classDef", "style", "linkStyle", "click", "direction", "accTitle", "accDescr", "title",
];

/// Shape delimiters, longest openers first.
const SHAPES: &[(&str, &str)] = &[
    ("(((", ")))"),
    ("((", "))"),
    ("([", "])"),
    ("[[", "]]"),
    ("[(", ")]"),
    ("[/", "/]"),
    ("[\\", "\\]"),
    ("{{", "}}"),
    ("(", ")"),
    ("[", "]"),
    ("{", "}"),
    (">", "]"),
];

struct NodeRef {
    id: String,
    label: Option<String>,
    class: Option<String>,
}

fn take_id(s: &str) -> Option<(&str, &str)> {
    let end = s
        .char_indices()
        .find(|(_, c)| !(c.is_alphanumeric() || *c == '_' || *c == '.'))
        .map_or(s.len(), |(i, _)| i);
    (end > 0).then(|| (&s[..end], &s[end..]))
}

fn take_node(s: &str) -> Option<(NodeRef, &str)> {
    let s = s.trim_start();
    let (id, mut rest) = take_id(s)?;
    let mut label = None;
    for (open, close) in SHAPES {
        if let Some(after) = rest.strip_prefix(open) {
            let (text, remaining) = if let Some(q) = after.strip_prefix('"') {
                let end = q.find('"')?;
                let tail = q[end + 1..].strip_prefix(close)?;
                (q[..end].to_string(), tail)
            } else {
                let end = after.find(close)?;
                (after[..end].trim().to_string(), &after[end + close.len()..])
            };
            label = Some(text);
            rest = remaining;
            break;
        }
    }
    let mut class = None;
    if let Some(after) = rest.strip_prefix(":::") {
        let (c, r) = take_id(after)?;
        class = Some(c.to_string());
        rest = r;
    }
    Some((
        NodeRef {
            id: id.to_string(),
            label,
            class,
        },
        rest,
    ))
}

fn take_node_group(s: &str) -> Option<(Vec<NodeRef>, &str)> {
    let (first, mut rest) = take_node(s)?;
    let mut group = vec![first];
    loop {
        let t = rest.trim_start();
        match t.strip_prefix('&') {
            Some(after) => {
                let (n, r) = take_node(after)?;
                group.push(n);
                rest = r;
            }
            None => return Some((group, rest)),
        }
    }
}

/// Returns (edge label, remaining text) when `s` starts with a link.
fn take_link(s: &str) -> Option<(Option<String>, &str)> {
    let link = regex!(
        r"^\s*<?(?:(?:--|==|-\.)\s+([^|>]*?)\s+(?:-{2,}>|-{3,}|={2,}>|={3,}|\.-+>|\.-+)|(?:-{2,}>|-{3,}|={2,}>|={3,}|-\.+->|-\.+-|~~~|--[xo]|==[xo]))\s*(?:\|([^|]*)\|)?"
    );
    let c = link.captures(s)?;
    let label = c
        .get(1)
        .or_else(|| c.get(2))
        .map(|m| strip_quotes(m.as_str()).to_string())
        .filter(|l| !l.is_empty());
    Some((label, &s[c.get(0).unwrap().end()..]))
}

fn parse_flowchart(body: &[&str], g: &mut DiagramGraph) -> LineResult {
    let subgraph = regex!(r#"^subgraph\s+(?:"([^"]*)"|([\w.]+)(?:\s*\[\s*"?([^"\]]*)"?\s*\])?(?:\s+(.+))?)\s*$"#);
    let class_assign = regex!(r"^class\s+([\w.,\s]+?)\s+(\w+)$");
    let mut anon = 0usize;
    for (n, raw) in body.iter().enumerate() {
        let line = statement(raw);
        if line.is_empty() || line.starts_with("%%") || line == "end" {
            continue;
        }
        if let Some(first) = line.split_whitespace().next() {
            if FLOW_IGNORED.contains(&first) {
                continue;
            }
        }
        if starts_with_word(line, "subgraph") {
            let Some(c) = subgraph.captures(line) else {
                return Err((n, format!("malformed subgraph: {line}")));
            };
            let (id, label) = match (c.get(1), c.get(2)) {
                (Some(title), _) => {
                    anon += 1;
                    (format!("subgraph{anon}"), title.as_str().to_string())
                }
                (None, Some(id)) => {
                    let label = c
                        .get(3)
                        .or_else(|| c.get(4))
                        .map(|m| strip_quotes(m.as_str()).to_string())
                        .unwrap_or_else(|| id.as_str().to_string());
                    (id.as_str().to_string(), label)
                }
                _ => unreachable!(),
            };
            g.ensure_node(&id, Some(label), Some("subgraph".to_string()));
            continue;
        }
        if let Some(c) = class_assign.captures(line) {
            for id in c[1].split(',').map(str::trim).filter(|s| !s.is_empty()) {
                g.ensure_node(id, None, Some(c[2].to_string()));
            }
            continue;
        }
        let Some((mut left, mut rest)) = take_node_group(line) else {
            return Err((n, format!("unrecognized flowchart statement: {line}")));
        };
        for r in &left {
            g.ensure_node(&r.id, r.label.clone(), r.class.clone());
        }
        while !rest.trim().is_empty() {
            let Some((label, after)) = take_link(rest) else {
                return Err((n, format!("expected a link in: {line}")));
            };
            let Some((right, after)) = take_node_group(after) else {
                return Err((n, format!("link without target in: {line}")));
            };
            for r in &right {
                g.ensure_node(&r.id, r.label.clone(), r.class.clone());
            }
            for a in &left {
                for b in &right {
                    g.edges.push(Edge {
                        from: a.id.clone(),
                        to: b.id.clone(),
                        label: label.clone(),
                    });
                }
            }
            left = right;
            rest = after;
        }
    }
    Ok(())
}

const SEQ_IGNORED: &[&str] = &[
    "autonumber", "activate", "deactivate", "note", "Note", "loop", "alt", "else", "opt", "par", "and",
    "critical", "option", "break", "rect", "box", "end", "title", "accTitle", "accDescr", "link",
    "links", "properties", "details", "destroy",
];

fn parse_sequence(body: &[&str], g: &mut DiagramGraph) -> LineResult {
    let decl = regex!(r"^(?:create\s+)?(participant|actor)\s+([^\s:]+?)(?:\s+as\s+(.+))?$");
    let message = regex!(
        r"^([\w.]+)\s*(<<-->>|<<->>|-->>|->>|--x|-x|--\)|-\)|-->|->)\s*[+-]?\s*([\w.]+)\s*(?::(.*))?$"
    );
    for (n, raw) in body.iter().enumerate() {
        let line = statement(raw);
        if line.is_empty() || line.starts_with("%%") {
            continue;
        }
        if let Some(c) = decl.captures(line) {
            let id = c[2].to_string();
            let label = c.get(3).map(|m| m.as_str().trim().to_string()).unwrap_or_else(|| id.clone());
            let actor = &c[1] == "actor";
            match g.participants.iter_mut().find(|p| p.id == id) {
                Some(p) => {
                    p.label = label;
                    p.actor = actor;
                }
                None => g.participants.push(Participant { id, label, actor }),
            }
            continue;
        }
        if let Some(c) = message.captures(line) {
            let (from, to) = (c[1].to_string(), c[3].to_string());
            g.ensure_participant(&from);
            g.ensure_participant(&to);
            let label = c.get(4).map_or("", |m| m.as_str()).trim().to_string();
            g.messages.push(Message { from, to, label });
            continue;
        }
        if let Some(first) = line.split_whitespace().next() {
            if SEQ_IGNORED.contains(&first) {
                continue;
            }
        }
        return Err((n, format!("unrecognized sequence diagram statement: {line}")));
    }
    Ok(())
}

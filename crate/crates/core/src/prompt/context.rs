use serde::{Deserialize, Serialize};

use super::PromptError;
use crate::doc::{Driver, DriverId, DriverSet};

/// Default context budget, in characters.
pub const DEFAULT_BUDGET: usize = 120_000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextItem {
    pub name: String,
    pub content: String,
    pub truncated: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextBundle {
    /// Absent for baseline runs.
    pub process_description: Option<String>,
    pub persona: String,
    /// Everything after process and persona, highest priority first.
    pub items: Vec<ContextItem>,
    pub budget: usize,
}

impl ContextBundle {
    pub fn total_chars(&self) -> usize {
        self.process_description.as_deref().map_or(0, char_len)
            + char_len(&self.persona)
            + self.items.iter().map(|i| char_len(&i.content)).sum::<usize>()
    }

    pub fn item(&self, name: &str) -> Option<&ContextItem> {
        self.items.iter().find(|i| i.name == name)
    }
}

/// What a planned action wants the model to see, before budgeting.
#[derive(Debug, Clone, Default)]
pub struct ContextSource {
    pub process_description: Option<String>,
    pub persona: String,
    /// (artifact name, content) of the iteration document being written.
    pub iteration_record: Option<(String, String)>,
    /// Architecture-document sections relevant to the step.
    pub sections: Vec<(String, String)>,
    pub drivers: DriverSet,
    /// Drivers the current iteration addresses, in plan order.
    pub focus: Vec<DriverId>,
    /// Lower-priority artifacts appended after the drivers.
    pub extra: Vec<(String, String)>,
}

fn char_len(s: &str) -> usize {
    s.chars().count()
}

fn take_chars(s: &str, n: usize) -> String {
    s.chars().take(n).collect()
}

pub fn render_driver(d: &Driver) -> String {
    let mut out = format!("{} ({}): {}", d.id, d.kind, d.title);
    if let Some(desc) = &d.description {
        out.push('\n');
        out.push_str(desc);
    }
    if let Some(i) = d.importance {
        out.push_str(&format!("\nImportance: {i}"));
    }
    if let Some(df) = d.difficulty {
        out.push_str(&format!("\nDifficulty: {df}"));
    }
    if d.primary {
        out.push_str("\nPrimary: yes");
    }
    out
}

/// Orders the source into a bundle and cuts it down to `budget` characters.
/// Process description, persona and iteration record must fit whole; past
/// that, the first item that overflows is cut at its tail and every later
/// item is emptied.
pub fn assemble_context(src: &ContextSource, budget: usize) -> Result<ContextBundle, PromptError> {
    let mut items: Vec<ContextItem> = Vec::new();
    let mut push = |name: String, content: String| {
        items.push(ContextItem {
            name,
            content,
            truncated: false,
        })
    };
    if let Some((name, content)) = &src.iteration_record {
        push(name.clone(), content.clone());
    }
    for (name, content) in &src.sections {
        push(name.clone(), content.clone());
    }
    for id in &src.focus {
        if let Some(d) = src.drivers.get(id) {
            push(format!("driver:{id}"), render_driver(d));
        }
    }
    for d in &src.drivers.drivers {
        if !src.focus.contains(&d.id) {
            push(format!("driver:{}", d.id), render_driver(d));
        }
    }
    for (name, content) in &src.extra {
        push(name.clone(), content.clone());
    }

    let fixed = src.process_description.as_deref().map_or(0, char_len) + char_len(&src.persona);
    let required = fixed + src.iteration_record.as_ref().map_or(0, |(_, c)| char_len(c));
    if required > budget {
        return Err(PromptError::BudgetTooSmall { budget, required });
    }
    let mut remaining = budget - fixed;
    for item in &mut items {
        let len = char_len(&item.content);
        if len <= remaining {
            remaining -= len;
        } else {
            item.content = take_chars(&item.content, remaining);
            item.truncated = true;
            remaining = 0;
        }
    }
    Ok(ContextBundle {
        process_description: src.process_description.clone(),
        persona: src.persona.clone(),
        items,
        budget,
    })
}

//! Prompt templates, the architect persona, the process description and the
//! context bundle attached to every model call.

mod context;
mod persona;

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use context::{assemble_context, render_driver, ContextBundle, ContextItem, ContextSource, DEFAULT_BUDGET};
pub use persona::{PersonaIdentity, PersonaMetadata, PersonaSpec};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PromptError {
    #[error("MISSING_BINDING: template {template} needs a value for {{{{{name}}}}}")]
    MissingBinding { template: TemplateId, name: String },
    #[error("UNDECLARED_PLACEHOLDER: template {template} uses {{{{{name}}}}}, which it does not declare")]
    UndeclaredPlaceholder { template: TemplateId, name: String },
    #[error("INVALID_PERSONA: {0}")]
    InvalidPersona(String),
    #[error("BUDGET_TOO_SMALL: {required} characters needed for process, persona and iteration record, budget is {budget}")]
    BudgetTooSmall { budget: usize, required: usize },
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
}

impl PromptError {
    pub fn code(&self) -> &'static str {
        match self {
            PromptError::MissingBinding { .. } => "MISSING_BINDING",
            PromptError::UndeclaredPlaceholder { .. } => "UNDECLARED_PLACEHOLDER",
            PromptError::InvalidPersona(_) => "INVALID_PERSONA",
            PromptError::BudgetTooSmall { .. } => "BUDGET_TOO_SMALL",
            PromptError::Io { .. } => "IO_ERROR",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TemplateId {
    ReviewDrivers,
    DomainModelDdd,
    DomainModelPlain,
    IterationPlan,
    Skeleton,
    IterateStart,
    StepAdvance,
    Repair,
    BaselineZeroShot,
    BaselineEmptyTemplate,
    BaselineTemplateInstructions,
}

impl TemplateId {
    pub const ALL: [TemplateId; 11] = [
        TemplateId::ReviewDrivers,
        TemplateId::DomainModelDdd,
        TemplateId::DomainModelPlain,
        TemplateId::IterationPlan,
        TemplateId::Skeleton,
        TemplateId::IterateStart,
        TemplateId::StepAdvance,
        TemplateId::Repair,
        TemplateId::BaselineZeroShot,
        TemplateId::BaselineEmptyTemplate,
        TemplateId::BaselineTemplateInstructions,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TemplateId::ReviewDrivers => "review-drivers",
            TemplateId::DomainModelDdd => "domain-model-ddd",
            TemplateId::DomainModelPlain => "domain-model-plain",
            TemplateId::IterationPlan => "iteration-plan",
            TemplateId::Skeleton => "skeleton",
            TemplateId::IterateStart => "iterate-start",
            TemplateId::StepAdvance => "step-advance",
            TemplateId::Repair => "repair",
            TemplateId::BaselineZeroShot => "baseline-zero-shot",
            TemplateId::BaselineEmptyTemplate => "baseline-empty-template",
            TemplateId::BaselineTemplateInstructions => "baseline-template-instructions",
        }
    }

    pub fn file_name(self) -> String {
        format!("{}.md", self.as_str())
    }

    /// Placeholders the template may use.
    pub fn placeholders(self) -> &'static [&'static str] {
        match self {
            TemplateId::IterateStart => &["iteration"],
            TemplateId::StepAdvance => &["iteration", "previous_step", "step_heading", "step_text"],
            TemplateId::Repair => &["activity", "reason"],
            _ => &[],
        }
    }

    fn builtin(self) -> &'static str {
        match self {
            TemplateId::ReviewDrivers => include_str!("../../assets/prompts/review-drivers.md"),
            TemplateId::DomainModelDdd => include_str!("../../assets/prompts/domain-model-ddd.md"),
            TemplateId::DomainModelPlain => include_str!("../../assets/prompts/domain-model-plain.md"),
            TemplateId::IterationPlan => include_str!("../../assets/prompts/iteration-plan.md"),
            TemplateId::Skeleton => include_str!("../../assets/prompts/skeleton.md"),
            TemplateId::IterateStart => include_str!("../../assets/prompts/iterate-start.md"),
            TemplateId::StepAdvance => include_str!("../../assets/prompts/step-advance.md"),
            TemplateId::Repair => include_str!("../../assets/prompts/repair.md"),
            TemplateId::BaselineZeroShot => include_str!("../../assets/prompts/baseline-zero-shot.md"),
            TemplateId::BaselineEmptyTemplate => include_str!("../../assets/prompts/baseline-empty-template.md"),
            TemplateId::BaselineTemplateInstructions => {
                include_str!("../../assets/prompts/baseline-template-instructions.md")
            }
        }
    }
}

impl fmt::Display for TemplateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TemplateId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| format!("unknown template {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BaselineMode {
    ZeroShot,
    EmptyTemplate,
    TemplateInstructions,
}

impl BaselineMode {
    pub const ALL: [BaselineMode; 3] = [
        BaselineMode::ZeroShot,
        BaselineMode::EmptyTemplate,
        BaselineMode::TemplateInstructions,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BaselineMode::ZeroShot => "zero-shot",
            BaselineMode::EmptyTemplate => "empty-template",
            BaselineMode::TemplateInstructions => "template-instructions",
        }
    }

    pub fn template(self) -> TemplateId {
        match self {
            BaselineMode::ZeroShot => TemplateId::BaselineZeroShot,
            BaselineMode::EmptyTemplate => TemplateId::BaselineEmptyTemplate,
            BaselineMode::TemplateInstructions => TemplateId::BaselineTemplateInstructions,
        }
    }
}

impl FromStr for BaselineMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| format!("unknown baseline mode {s:?}; expected zero-shot, empty-template or template-instructions"))
    }
}

impl fmt::Display for BaselineMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

pub type Bindings = BTreeMap<String, String>;

fn normalize_body(text: &str) -> String {
    let text = text.replace("\r\n", "\n");
    text.strip_suffix('\n').unwrap_or(&text).to_string()
}

/// Names of the `{{name}}` placeholders in `body`, in order of appearance.
pub fn placeholders_in(body: &str) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for c in regex!(r"\{\{\s*([A-Za-z_][A-Za-z0-9_]*)\s*\}\}").captures_iter(body) {
        let name = c[1].to_string();
        if !out.contains(&name) {
            out.push(name);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    pub id: TemplateId,
    pub body: String,
}

impl PromptTemplate {
    /// Checks that the body only uses declared placeholders.
    pub fn new(id: TemplateId, body: &str) -> Result<Self, PromptError> {
        let body = normalize_body(body);
        for name in placeholders_in(&body) {
            if !id.placeholders().contains(&name.as_str()) {
                return Err(PromptError::UndeclaredPlaceholder { template: id, name });
            }
        }
        Ok(Self { id, body })
    }

    /// Substitutes every placeholder; bound values are inserted verbatim and
    /// never re-expanded.
    pub fn render(&self, bindings: &Bindings) -> Result<String, PromptError> {
        let mut missing = None;
        let out = regex!(r"\{\{\s*([A-Za-z_][A-Za-z0-9_]*)\s*\}\}").replace_all(&self.body, |c: &regex::Captures| {
            match bindings.get(&c[1]) {
                Some(v) => v.clone(),
                None => {
                    missing.get_or_insert_with(|| c[1].to_string());
                    String::new()
                }
            }
        });
        match missing {
            Some(name) => Err(PromptError::MissingBinding { template: self.id, name }),
            None => Ok(out.into_owned()),
        }
    }
}

pub const PROCESS_FILE: &str = "AttributeDrivenDesign.md";
pub const PERSONA_FILE: &str = "persona.yaml";
pub const EDIT_PROTOCOL_FILE: &str = "edit-protocol.md";
pub const ARCHITECTURE_TEMPLATE_FILE: &str = "ArchitectureTemplate.md";
pub const ARCHITECTURE_TEMPLATE_INSTRUCTIONS_FILE: &str = "ArchitectureTemplateWithInstructions.md";

/// Every file of the default prompts directory, as (file name, content).
pub fn builtin_files() -> Vec<(String, &'static str)> {
    let mut files: Vec<(String, &'static str)> =
        TemplateId::ALL.iter().map(|t| (t.file_name(), t.builtin())).collect();
    files.push((PROCESS_FILE.into(), include_str!("../../assets/prompts/AttributeDrivenDesign.md")));
    files.push((PERSONA_FILE.into(), include_str!("../../assets/prompts/persona.yaml")));
    files.push((EDIT_PROTOCOL_FILE.into(), include_str!("../../assets/prompts/edit-protocol.md")));
    files.push((
        ARCHITECTURE_TEMPLATE_FILE.into(),
        include_str!("../../assets/prompts/ArchitectureTemplate.md"),
    ));
    files.push((
        ARCHITECTURE_TEMPLATE_INSTRUCTIONS_FILE.into(),
        include_str!("../../assets/prompts/ArchitectureTemplateWithInstructions.md"),
    ));
    files
}

/// Everything prompt-related a session needs.
#[derive(Debug, Clone)]
pub struct PromptLibrary {
    templates: BTreeMap<TemplateId, PromptTemplate>,
    pub process_description: String,
    pub persona: PersonaSpec,
    pub edit_protocol: String,
    pub architecture_template: String,
    pub architecture_template_instructions: String,
}

impl PromptLibrary {
    pub fn builtin() -> Self {
        let files: BTreeMap<String, &str> = builtin_files().into_iter().collect();
        Self::from_lookup(|name| Ok(files.get(name).map(|s| s.to_string()))).expect("shipped prompts are valid")
    }

    /// Loads from a prompts directory; files absent there fall back to the
    /// shipped defaults.
    pub fn load(dir: &Path) -> Result<Self, PromptError> {
        let defaults: BTreeMap<String, &str> = builtin_files().into_iter().collect();
        Self::from_lookup(|name| {
            let path = dir.join(name);
            match std::fs::read_to_string(&path) {
                Ok(s) => Ok(Some(s)),
                Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(defaults.get(name).map(|s| s.to_string())),
                Err(e) => Err(PromptError::Io {
                    path: path.display().to_string(),
                    message: e.to_string(),
                }),
            }
        })
    }

    fn from_lookup(lookup: impl Fn(&str) -> Result<Option<String>, PromptError>) -> Result<Self, PromptError> {
        let get = |name: &str| -> Result<String, PromptError> {
            lookup(name)?.ok_or_else(|| PromptError::Io {
                path: name.to_string(),
                message: "missing".into(),
            })
        };
        let mut templates = BTreeMap::new();
        for id in TemplateId::ALL {
            templates.insert(id, PromptTemplate::new(id, &get(&id.file_name())?)?);
        }
        Ok(Self {
            templates,
            process_description: get(PROCESS_FILE)?,
            persona: PersonaSpec::parse(&get(PERSONA_FILE)?)?,
            edit_protocol: normalize_body(&get(EDIT_PROTOCOL_FILE)?),
            architecture_template: get(ARCHITECTURE_TEMPLATE_FILE)?,
            architecture_template_instructions: get(ARCHITECTURE_TEMPLATE_INSTRUCTIONS_FILE)?,
        })
    }

    pub fn template(&self, id: TemplateId) -> &PromptTemplate {
        &self.templates[&id]
    }

    pub fn render(&self, id: TemplateId, bindings: &Bindings) -> Result<String, PromptError> {
        self.template(id).render(bindings)
    }

    /// The prompt of a no-process baseline run.
    pub fn baseline_prompt(&self, mode: BaselineMode) -> String {
        self.render(mode.template(), &Bindings::new())
            .expect("baseline templates take no placeholders")
    }

    /// The template document attached to a baseline run, if the mode uses one.
    pub fn baseline_attachment(&self, mode: BaselineMode) -> Option<&str> {
        match mode {
            BaselineMode::ZeroShot => None,
            BaselineMode::EmptyTemplate => Some(&self.architecture_template),
            BaselineMode::TemplateInstructions => Some(&self.architecture_template_instructions),
        }
    }

    /// The text of one step of the process description: everything after the
    /// `### Step N` heading up to the next heading.
    pub fn step_text(&self, step: u8) -> String {
        let mut out: Vec<&str> = Vec::new();
        let mut inside = false;
        let re = regex!(r"(?i)^#{1,6}\s*step\s*(\d)\b");
        for line in self.process_description.lines() {
            if line.trim_start().starts_with('#') {
                if inside {
                    break;
                }
                inside = re.captures(line).is_some_and(|c| c[1].parse::<u8>().ok() == Some(step));
                continue;
            }
            if inside {
                out.push(line);
            }
        }
        out.join("\n").trim().to_string()
    }
}

/// Convenience wrapper over the shipped templates.
pub fn render_prompt(id: TemplateId, bindings: &Bindings) -> Result<String, PromptError> {
    PromptLibrary::builtin().render(id, bindings)
}

pub fn bindings<const N: usize>(pairs: [(&str, String); N]) -> Bindings {
    pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

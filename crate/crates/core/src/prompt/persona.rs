use serde::{Deserialize, Serialize};

use super::PromptError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PersonaMetadata {
    pub name: String,
    #[serde(default)]
    pub version: String,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub domain: String,
    #[serde(default)]
    pub expertise_level: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PersonaIdentity {
    pub role: String,
    #[serde(default)]
    pub responsibilities: Vec<String>,
    #[serde(default)]
    pub key_competencies: Vec<String>,
}

/// The architect persona. The source text is kept alongside the parsed
/// fields because it is sent to the model unchanged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersonaSpec {
    pub metadata: PersonaMetadata,
    pub identity: PersonaIdentity,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extension: Option<serde_yaml::Value>,
    #[serde(skip)]
    pub source: String,
}

#[derive(Deserialize)]
struct Envelope {
    agent_specification: PersonaSpec,
}

impl PersonaSpec {
    pub fn parse(text: &str) -> Result<Self, PromptError> {
        let env: Envelope = serde_yaml::from_str(text).map_err(|e| PromptError::InvalidPersona(e.to_string()))?;
        let mut spec = env.agent_specification;
        if spec.metadata.name.trim().is_empty() {
            return Err(PromptError::InvalidPersona("metadata.name is empty".into()));
        }
        if spec.identity.role.trim().is_empty() {
            return Err(PromptError::InvalidPersona("identity.role is empty".into()));
        }
        if spec.identity.responsibilities.iter().all(|r| r.trim().is_empty()) {
            return Err(PromptError::InvalidPersona("identity.responsibilities is empty".into()));
        }
        spec.source = text.to_string();
        Ok(spec)
    }
}

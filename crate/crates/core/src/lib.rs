//! Gated Attribute-Driven Design sessions with a language model.
//!
//! The crate is organised around the artifacts a design session produces
//! ([`doc`]), the prompts that produce them ([`prompt`]), the model transport
//! ([`gateway`]), the on-disk workspace ([`store`]), the workflow state
//! machine ([`engine`]) and the cross-document checks ([`audit`]).

macro_rules! regex {
    ($re:literal) => {{
        static RE: std::sync::OnceLock<regex::Regex> = std::sync::OnceLock::new();
        RE.get_or_init(|| regex::Regex::new($re).unwrap())
    }};
}

pub mod audit;
pub mod doc;
pub mod engine;
pub mod gateway;
pub mod method;
pub mod prompt;
pub mod store;

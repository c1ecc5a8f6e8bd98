use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::method::{FIRST_STEP, LAST_STEP};

/// Position in the workflow. The derived order is the order phases are
/// visited in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Phase {
    ReviewDrivers,
    DomainModel,
    IterationPlanning,
    Skeleton,
    Iterating { iteration: u32, step: u8 },
    Finished,
}

impl Phase {
    pub fn iterating(iteration: u32, step: u8) -> Self {
        Phase::Iterating { iteration, step }
    }

    pub fn iteration(self) -> Option<u32> {
        match self {
            Phase::Iterating { iteration, .. } => Some(iteration),
            _ => None,
        }
    }

    pub fn step(self) -> Option<u8> {
        match self {
            Phase::Iterating { step, .. } => Some(step),
            _ => None,
        }
    }

    /// The phase an approval leads to. `more_iterations` is the number of
    /// the next planned iteration, if any.
    pub fn after_approval(self, next_iteration: Option<u32>) -> Phase {
        match self {
            Phase::ReviewDrivers => Phase::DomainModel,
            Phase::DomainModel => Phase::IterationPlanning,
            Phase::IterationPlanning => Phase::Skeleton,
            Phase::Skeleton => Phase::iterating(next_iteration.unwrap_or(1), FIRST_STEP),
            Phase::Iterating { iteration, step } if step < LAST_STEP => Phase::iterating(iteration, step + 1),
            Phase::Iterating { .. } => match next_iteration {
                Some(n) => Phase::iterating(n, FIRST_STEP),
                None => Phase::Finished,
            },
            Phase::Finished => Phase::Finished,
        }
    }

    /// Human-readable name of the activity, used in repair prompts.
    pub fn activity(self) -> String {
        match self {
            Phase::ReviewDrivers => "the review of the architectural drivers".into(),
            Phase::DomainModel => "the domain model".into(),
            Phase::IterationPlanning => "the iteration plan".into(),
            Phase::Skeleton => "the architecture document skeleton".into(),
            Phase::Iterating { iteration, step } => {
                format!("step {step} of iteration {iteration}")
            }
            Phase::Finished => "the design".into(),
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Phase::ReviewDrivers => f.write_str("review-drivers"),
            Phase::DomainModel => f.write_str("domain-model"),
            Phase::IterationPlanning => f.write_str("iteration-planning"),
            Phase::Skeleton => f.write_str("skeleton"),
            Phase::Iterating { iteration, step } => write!(f, "iterating:{iteration}:{step}"),
            Phase::Finished => f.write_str("finished"),
        }
    }
}

impl FromStr for Phase {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "review-drivers" => Phase::ReviewDrivers,
            "domain-model" => Phase::DomainModel,
            "iteration-planning" => Phase::IterationPlanning,
            "skeleton" => Phase::Skeleton,
            "finished" => Phase::Finished,
            other => {
                let parts: Vec<&str> = other.split(':').collect();
                match parts.as_slice() {
                    ["iterating", n, k] => {
                        let iteration: u32 = n.parse().map_err(|_| format!("bad iteration in {s:?}"))?;
                        let step: u8 = k.parse().map_err(|_| format!("bad step in {s:?}"))?;
                        if iteration == 0 || !(FIRST_STEP..=LAST_STEP).contains(&step) {
                            return Err(format!("phase {s:?} out of range"));
                        }
                        Phase::iterating(iteration, step)
                    }
                    _ => return Err(format!("unknown phase {s:?}")),
                }
            }
        })
    }
}

impl TryFrom<String> for Phase {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<Phase> for String {
    fn from(p: Phase) -> Self {
        p.to_string()
    }
}

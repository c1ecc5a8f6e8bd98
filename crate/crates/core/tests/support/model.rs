//! A tiny scripted model for engine tests. It answers every phase with a
//! plausible file set, or with junk when told to.

use std::path::Path;
use std::sync::{Arc, Mutex};

use add_core::engine::{Phase, Session};
use add_core::gateway::{Gateway, ModelRequest, ModelResponse};
use add_core::store::{DesignMode, Workspace};

pub const DRIVERS: &str = "# Drivers

## Quality Attribute Scenarios

| ID | Title | Importance | Difficulty |
|---|---|---|---|
| QA-1 | Performance | High | High |
| QA-2 | Availability | High | Medium |

## Constraints

| ID | Description |
|---|---|
| CON-1 | Runs in the cloud |

From this list, QA-1 and QA-2 are selected as primary drivers.
";

pub const PLAN: &str = "# Iteration Plan

| Iteration | Goal | Drivers to Address |
|---|---|---|
| 1 | Overall structure | CON-1, QA-2 |
| 2 | Fast queries | QA-1 |
";

/// A scratch directory, in memory where the platform offers one: the
/// property suites run thousands of sessions and every commit syncs.
pub fn scratch() -> tempfile::TempDir {
    let shm = Path::new("/dev/shm");
    if shm.is_dir() {
        if let Ok(d) = tempfile::tempdir_in(shm) {
            return d;
        }
    }
    tempfile::tempdir().unwrap()
}

pub fn workspace(dir: &Path) -> Workspace {
    let ws = Workspace::scaffold(dir, DesignMode::Ddd).unwrap();
    std::fs::write(dir.join("ArchitecturalDrivers.md"), DRIVERS).unwrap();
    ws
}

pub fn session(dir: &Path) -> Session {
    Session::start(workspace(dir), DesignMode::Ddd).unwrap()
}

fn block(path: &str, content: &str) -> String {
    format!("````\nfile: {path}\n{content}````\n")
}

fn architecture(done: u32) -> String {
    let mut rows = String::new();
    for i in 1..=done {
        rows.push_str(&format!("| QA-{i} | Decision {i} | because | none |\n"));
    }
    format!(
        "# Architecture\n\n# 1.- Introduction\n\nShop.\n\n# 2.- Context diagram\n\n# 3.- Domain Model\n\n# 4.- Component Diagram\n\n# 5.- Container diagram\n\n# 6.- Sequence diagrams\n\n# 7.- Interfaces\n\n# 8.- Design decisions\n\n| Driver | Decision | Rationale | Discarded alternatives |\n|---|---|---|---|\n{rows}\n# 9.- Deployment\n"
    )
}

/// A well-formed answer for the phase named in the request metadata.
pub fn answer(req: &ModelRequest) -> String {
    let phase: Phase = req.metadata["phase"].parse().unwrap();
    match phase {
        Phase::ReviewDrivers => format!("Reviewed.\n\n{}", block("ArchitecturalDrivers.md", DRIVERS)),
        Phase::DomainModel => block(
            "Design/DomainModel.md",
            "# Domain Model\n\n```mermaid\nclassDiagram\n    class Order\n```\n",
        ),
        Phase::IterationPlanning => block("Design/IterationPlan.md", PLAN),
        Phase::Skeleton => block("Design/Architecture.md", &architecture(0)),
        Phase::Iterating { iteration, step } => {
            let mut record = format!("# Iteration {iteration}\n");
            for s in 2..=step {
                record.push_str(&format!("\n## Step {s}: work\n\n"));
                match s {
                    2 => record.push_str("- QA-1\n"),
                    4 => record.push_str("| Selected design concept | Rationale | Discarded Alternatives |\n|---|---|---|\n| Cache | fast | none |\n"),
                    5 => record.push_str("| Instantiation decision | Rationale |\n|---|---|\n| Redis | simple |\n"),
                    7 => record.push_str("QA-1 is satisfied.\n"),
                    _ => record.push_str("Done.\n"),
                }
            }
            let mut out = block(&format!("Design/Iteration{iteration}.md"), &record);
            if step >= 6 {
                out.push_str(&block("Design/Architecture.md", &architecture(iteration)));
            }
            out
        }
        Phase::Finished => unreachable!("no prompt after finishing"),
    }
}

/// A model that answers well unless the next entry of `junk` says
/// otherwise. Entries are consumed one per call; an empty queue answers
/// well.
pub fn model(junk: Arc<Mutex<Vec<bool>>>) -> Gateway {
    Gateway::scripted(move |req| {
        let bad = {
            let mut q = junk.lock().unwrap();
            if q.is_empty() { false } else { q.remove(0) }
        };
        if bad {
            ModelResponse::stop("I am not sure what to change.")
        } else {
            ModelResponse::stop(answer(req))
        }
    })
}

pub fn good_model() -> Gateway {
    Gateway::scripted(|req| ModelResponse::stop(answer(req)))
}

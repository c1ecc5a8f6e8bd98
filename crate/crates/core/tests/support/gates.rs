//! Random operation sequences against the engine. No journal may show two
//! applied responses without a gate between them, and every illegal call
//! must fail with its documented error code.

use std::sync::{Arc, Mutex};

use add_core::engine::{gate_rule_violation, EventPayload, GateDecision, GateKind, Phase, Session};
use add_core::store::{ArtifactEdit, ArtifactPath, PLAN_FILE};
use proptest::prelude::*;

use super::model;

pub const CASES: u32 = 1000;

pub fn ops() -> impl Strategy<Value = Vec<Op>> {
    prop::collection::vec(op(), 1..60)
}

#[derive(Debug, Clone)]
pub enum Op {
    /// Advance; the flag makes the model answer with junk.
    Advance(bool),
    Approve,
    Reject,
    RejectWithoutComment,
    Finish,
    EditThenApprove,
    EditWithoutEdits,
}

pub fn op() -> impl Strategy<Value = Op> {
    prop_oneof![
        6 => prop::bool::weighted(0.25).prop_map(Op::Advance),
        5 => Just(Op::Approve),
        1 => Just(Op::Reject),
        1 => Just(Op::RejectWithoutComment),
        1 => Just(Op::Finish),
        1 => Just(Op::EditThenApprove),
        1 => Just(Op::EditWithoutEdits),
    ]
}

fn code(r: Result<impl Sized, add_core::engine::EngineError>) -> Option<&'static str> {
    r.err().map(|e| e.code())
}

fn has_staged_plan(s: &Session) -> bool {
    s.staged_edits().unwrap().iter().any(|e| e.path.as_str() == PLAN_FILE)
}

pub fn run(ops: &[Op]) -> Result<(), TestCaseError> {
    let dir = model::scratch();
    let mut s = model::session(dir.path());
    let junk = Arc::new(Mutex::new(Vec::new()));
    let mut gw = model::model(junk.clone());
    let mut approvals = 0;
    let mut last_phase = s.phase();

    for op in ops {
        let phase = s.phase();
        let awaiting = s.is_awaiting_gate();
        let finished = phase == Phase::Finished;
        let plan_staged = awaiting && has_staged_plan(&s);
        let live_before = s.workspace().live_contents().unwrap();
        let gate = |s: &mut Session, d: GateDecision| code(s.record_gate(d));
        let got = match op {
            Op::Advance(bad) => {
                *junk.lock().unwrap() = vec![*bad];
                let got = code(s.advance(&mut gw));
                let expected = if finished {
                    Some("SESSION_FINISHED")
                } else if awaiting {
                    Some("AWAITING_GATE")
                } else {
                    None
                };
                prop_assert_eq!(got, expected, "advance in {}", phase);
                // Staged output never reaches the live files.
                prop_assert_eq!(&s.workspace().live_contents().unwrap(), &live_before);
                continue;
            }
            Op::Approve => (gate(&mut s, GateDecision::approve()), GateKind::Approve),
            Op::Reject => (gate(&mut s, GateDecision::reject("use a cache instead")), GateKind::RejectWithComment),
            Op::RejectWithoutComment => {
                let mut d = GateDecision::new(GateKind::RejectWithComment);
                d.comment = None;
                (gate(&mut s, d), GateKind::RejectWithComment)
            }
            Op::Finish => (gate(&mut s, GateDecision::finish()), GateKind::Finish),
            Op::EditThenApprove => {
                let edit = ArtifactEdit {
                    path: ArtifactPath::parse("Design/DomainModel.md").unwrap(),
                    content: "# Domain Model\n\nEdited by the architect.\n".into(),
                };
                (gate(&mut s, GateDecision::edit_then_approve(vec![edit])), GateKind::EditArtifactsThenApprove)
            }
            Op::EditWithoutEdits => (
                gate(&mut s, GateDecision::new(GateKind::EditArtifactsThenApprove)),
                GateKind::EditArtifactsThenApprove,
            ),
        };
        let (got, kind) = got;
        let without_comment = matches!(op, Op::RejectWithoutComment);
        let without_edits = matches!(op, Op::EditWithoutEdits);
        let expected = if !awaiting {
            Some("NOT_AWAITING_GATE")
        } else if without_comment || without_edits {
            Some("INVALID_GATE")
        } else if kind == GateKind::Finish && phase.step() != Some(7) {
            Some("FINISH_NOT_LEGAL_HERE")
        } else if kind != GateKind::RejectWithComment && phase == Phase::IterationPlanning && !plan_staged {
            // Only reachable when a forced gate holds junk.
            Some("INVALID_PLAN")
        } else {
            None
        };
        prop_assert_eq!(got, expected, "{:?} in {}", op, phase);
        if got.is_some() {
            prop_assert_eq!(&s.workspace().live_contents().unwrap(), &live_before);
            continue;
        }
        if kind == GateKind::RejectWithComment {
            prop_assert_eq!(&s.workspace().live_contents().unwrap(), &live_before);
            prop_assert_eq!(s.phase(), phase);
        } else {
            approvals += 1;
            prop_assert!(s.phase() > last_phase, "approve must advance: {} -> {}", last_phase, s.phase());
            last_phase = s.phase();
        }
    }

    let journal = s.journal();
    prop_assert_eq!(gate_rule_violation(journal), None);
    // The same rule, counted by hand.
    let mut applied_since_gate = 0;
    let mut automatic_run = 0;
    for e in journal {
        match &e.payload {
            EventPayload::ResponseApplied { .. } => {
                applied_since_gate += 1;
                prop_assert!(applied_since_gate <= 1, "two responses applied without a gate at {}", e.seq);
            }
            EventPayload::GateRecorded { automatic, .. } => {
                applied_since_gate = 0;
                automatic_run = if *automatic { automatic_run + 1 } else { 0 };
                prop_assert!(automatic_run <= 2, "more than two repairs in a row at {}", e.seq);
            }
            _ => {}
        }
    }
    let snapshots = s.workspace().snapshots().unwrap();
    prop_assert_eq!(snapshots.len(), approvals + 1);
    for (i, snap) in snapshots.iter().enumerate() {
        prop_assert_eq!(snap.id.0, i as u64);
    }

    // A reopened session sees the same state.
    let again = Session::open(add_core::store::Workspace::open(dir.path()).unwrap()).unwrap();
    prop_assert_eq!(again.state(), s.state());
    prop_assert_eq!(again.journal(), s.journal());
    Ok(())
}

/// Approving every gate walks the phases in plan order.
pub fn full_session_follows_the_plan() {
    let dir = model::scratch();
    let mut s = model::session(dir.path());
    let mut gw = model::good_model();
    let mut phases = vec![s.phase()];
    while s.phase() != Phase::Finished {
        let out = s.advance(&mut gw).unwrap();
        assert!(!out.needs_repair, "{}: {:?}", out.phase, out.problems);
        s.record_gate(GateDecision::approve()).unwrap();
        phases.push(s.phase());
    }
    let mut expected = vec![Phase::ReviewDrivers, Phase::DomainModel, Phase::IterationPlanning, Phase::Skeleton];
    for i in 1..=2 {
        expected.extend((2..=7).map(|step| Phase::iterating(i, step)));
    }
    expected.push(Phase::Finished);
    assert_eq!(phases, expected);
}

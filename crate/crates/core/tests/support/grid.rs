//! Sequence diagrams over every (participants, messages) pair, written in
//! mixed mermaid styles, must parse back to what was generated.

use add_core::doc::{parse_diagram, DiagramKind};
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

const ARROWS: &[&str] = &["->>", "-->>", "->", "-->", "-x", "--x", "-)", "--)", "<<->>", "<<-->>"];
const NOISE: &[&str] = &["autonumber", "%% comment", "Note over {a}: thinking", "activate {a}", "deactivate {a}", "rect rgb(0, 0, 0)", "box Aqua Group"];

struct Oracle {
    text: String,
    participants: Vec<(String, String, bool)>,
    messages: Vec<(String, String, String)>,
}

fn generate(rng: &mut StdRng, participants: usize, messages: usize) -> Oracle {
    let mut text = String::from("sequenceDiagram\n");
    let mut ps = Vec::new();
    for i in 0..participants {
        let id = format!("{}{i}", ["Svc", "Client", "db", "Gateway_", "q.x"][rng.gen_range(0..5)]);
        let actor = rng.gen_bool(0.3);
        let word = if actor { "actor" } else { "participant" };
        let label = if rng.gen_bool(0.5) {
            let label = format!("Element {i} of the system");
            text.push_str(&format!("    {word} {id} as {label}\n"));
            label
        } else {
            text.push_str(&format!("  {word} {id}\n"));
            id.clone()
        };
        ps.push((id, label, actor));
    }
    let mut ms = Vec::new();
    let mut open_blocks = 0;
    for k in 0..messages {
        if rng.gen_bool(0.2) {
            let a = &ps.choose(rng).unwrap().0;
            let noise = NOISE.choose(rng).unwrap().replace("{a}", a);
            text.push_str(&format!("    {noise}\n"));
            if noise.starts_with("rect") || noise.starts_with("box") {
                open_blocks += 1;
            }
        }
        if rng.gen_bool(0.1) {
            text.push_str(&format!("    loop every {k} seconds\n"));
            open_blocks += 1;
        }
        let from = ps.choose(rng).unwrap().0.clone();
        let to = ps.choose(rng).unwrap().0.clone();
        let arrow = ARROWS.choose(rng).unwrap();
        let activation = ["", "+", "-"].choose(rng).unwrap();
        let label = if rng.gen_bool(0.8) { format!("call {k}(x, y)") } else { String::new() };
        let sep = if rng.gen_bool(0.5) { " " } else { "" };
        if label.is_empty() && rng.gen_bool(0.5) {
            text.push_str(&format!("    {from}{sep}{arrow}{sep}{activation}{to}\n"));
        } else {
            text.push_str(&format!("    {from}{sep}{arrow}{activation}{sep}{to}: {label}\n"));
        }
        ms.push((from, to, label));
        if open_blocks > 0 && rng.gen_bool(0.3) {
            text.push_str("    end\n");
            open_blocks -= 1;
        }
    }
    for _ in 0..open_blocks {
        text.push_str("    end\n");
    }
    Oracle {
        text,
        participants: ps,
        messages: ms,
    }
}

/// Checks the whole grid and returns the number of diagrams checked.
pub fn check_grid() -> usize {
    let mut rng = StdRng::seed_from_u64(7);
    let mut checked = 0;
    for participants in 1..=10 {
        for messages in 0..=30 {
            let o = generate(&mut rng, participants, messages);
            let g = parse_diagram(&o.text);
            assert_eq!(g.kind, DiagramKind::Sequence, "{:?}\n{}", g.syntax_error, o.text);
            assert_eq!(g.participants.len(), participants, "{}", o.text);
            assert_eq!(g.messages.len(), messages, "{}", o.text);
            for (p, (id, label, actor)) in g.participants.iter().zip(&o.participants) {
                assert_eq!((&p.id, &p.label, p.actor), (id, label, *actor));
            }
            for (m, (from, to, label)) in g.messages.iter().zip(&o.messages) {
                assert_eq!((&m.from, &m.to, &m.label), (from, to, label), "{}", o.text);
            }
            checked += 1;
        }
    }
    checked
}


use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::Corpus;
use crate::doc::{DiagramKind, DriverId, SectionKind};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DriverTrace {
    pub planned_in: Vec<u32>,
    /// 0-based indices into the design-decisions rows.
    pub decided_in: Vec<usize>,
    /// Sequence diagrams bound to the driver, as `sequence-diagrams#k`
    /// with `k` counting sequence diagrams in that section from 1.
    pub sequenced_in: Vec<String>,
}

impl DriverTrace {
    pub fn is_empty(&self) -> bool {
        self.planned_in.is_empty() && self.decided_in.is_empty() && self.sequenced_in.is_empty()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceMatrix {
    pub drivers: BTreeMap<DriverId, DriverTrace>,
}

impl TraceMatrix {
    pub fn get(&self, id: &DriverId) -> Option<&DriverTrace> {
        self.drivers.get(id)
    }
}

/// Where each declared driver is planned, decided and sequenced.
pub fn trace(corpus: &Corpus) -> TraceMatrix {
    let mut m = TraceMatrix::default();
    let Some(drivers) = &corpus.drivers else {
        return m;
    };
    for id in drivers.ids() {
        m.drivers.insert(id.clone(), DriverTrace::default());
    }
    if let Some(plan) = &corpus.plan {
        for it in &plan.iterations {
            for id in &it.driver_refs {
                if let Some(t) = m.drivers.get_mut(id) {
                    if !t.planned_in.contains(&it.number) {
                        t.planned_in.push(it.number);
                    }
                }
            }
        }
    }
    if let Some(doc) = &corpus.architecture {
        for row in doc.decision_rows() {
            for id in &row.driver_refs {
                if let Some(t) = m.drivers.get_mut(id) {
                    if !t.decided_in.contains(&row.index) {
                        t.decided_in.push(row.index);
                    }
                }
            }
        }
        if let Some(section) = doc.section(SectionKind::SequenceDiagrams) {
            let sequences = section.all_diagrams().filter(|(_, d)| d.kind == DiagramKind::Sequence);
            for (k, (sub, _)) in sequences.enumerate() {
                for id in sub.map(DriverId::extract_all).unwrap_or_default() {
                    if let Some(t) = m.drivers.get_mut(&id) {
                        t.sequenced_in.push(format!("sequence-diagrams#{}", k + 1));
                    }
                }
            }
        }
    }
    m
}

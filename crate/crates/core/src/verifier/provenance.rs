use std::collections::HashMap;

use super::{CheckReport, Locus};
use crate::sets::ChangeKind;
use crate::trace::{AgitatorAction, Item, Record, Trace};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Claim {
    None,
    One(u64, ChangeKind),
    Restore,
}

/// Every change to `D` follows the item that asks for it, and a number a
/// P-node enumerated is only extracted in a stage that initializes that
/// P-node.
pub fn check_provenance(trace: &Trace) -> CheckReport {
    let mut r = CheckReport::new("provenance");
    let mut claim = Claim::None;
    let mut witnesses: HashMap<u64, u64> = HashMap::new();
    let mut injured: Vec<(u64, u64)> = Vec::new();
    let mut stage = 0;
    let settle = |injured: &mut Vec<(u64, u64)>, stage: u64, r: &mut CheckReport| {
        if let Some(&(w, node)) = injured.first() {
            r.fail(
                Locus::at(stage)
                    .node(node)
                    .element(w)
                    .want("witness kept or its P-node initialized", "extracted"),
            );
        }
        injured.clear();
    };
    for rec in &trace.records {
        match rec {
            Record::Stage(s) => {
                settle(&mut injured, stage, &mut r);
                stage = *s;
                claim = Claim::None;
            }
            Record::Event(ev) => {
                if let Item::Init { .. } = ev.item {
                    injured.retain(|&(_, node)| node != ev.node);
                }
                claim = match &ev.item {
                    Item::P5 { witness, .. } => {
                        witnesses.insert(*witness, ev.node);
                        Claim::One(*witness, ChangeKind::Enumerate)
                    }
                    Item::R3 { agitator, .. } => Claim::One(*agitator, ChangeKind::Enumerate),
                    Item::R2Extract { agitator, .. } => Claim::One(*agitator, ChangeKind::Extract),
                    Item::N4Agitator {
                        agitator,
                        action: AgitatorAction::Enumerated,
                        ..
                    } => Claim::One(*agitator, ChangeKind::Enumerate),
                    Item::C2b { .. } | Item::N3 { restored: true, .. } => Claim::Restore,
                    Item::RestoreExtract { .. } if claim == Claim::Restore => Claim::Restore,
                    _ => Claim::None,
                };
            }
            Record::Change(c) => {
                r.bump("changes");
                match claim {
                    Claim::One(x, kind) if x == c.element && kind == c.kind => claim = Claim::None,
                    Claim::Restore => r.bump("restoring"),
                    _ => r.fail(Locus::at(stage).element(c.element).want(
                        "a change requested by the preceding item",
                        format!("{} {}", c.kind, c.element),
                    )),
                }
                if c.kind == ChangeKind::Extract {
                    if let Some(&node) = witnesses.get(&c.element) {
                        r.bump("injuries");
                        injured.push((c.element, node));
                    }
                }
            }
            _ => {}
        }
    }
    settle(&mut injured, stage, &mut r);
    r
}

/// The engine never hit a state its strategies treat as impossible.
pub fn check_anomalies(trace: &Trace) -> CheckReport {
    let mut r = CheckReport::new("anomalies");
    for ev in trace.events() {
        if let Item::Anomaly { what } = &ev.item {
            r.bump("anomalies");
            r.fail(Locus::at(ev.stage).node(ev.node).want("no anomaly", what));
        }
    }
    r
}

use std::collections::{BTreeSet, HashMap};

use super::{CheckReport, DReplay, Graph, Locus, NView};
use crate::functional::JournalId;
use crate::state::Requirement;
use crate::trace::{Item, Record, Trace};

/// `Γ^{W_e} = K` on its domain whenever an R-node finishes (R3), and
/// `Δ^A = W_e` on its domain whenever a cycle finishes extending `Δ`.
pub fn check_agreements(trace: &Trace) -> CheckReport {
    let mut r = CheckReport::new("agreements");
    let mut d = DReplay::default();
    let mut k: BTreeSet<u64> = BTreeSet::new();
    let mut w: HashMap<u64, BTreeSet<u64>> = HashMap::new();
    let mut gamma: HashMap<u64, Graph> = HashMap::new();
    let mut ns: HashMap<u64, NView> = HashMap::new();
    let mut stage = 0;
    for rec in &trace.records {
        match rec {
            Record::Stage(s) => stage = *s,
            Record::Change(c) => {
                if let Some(code) = d.apply(c) {
                    for n in ns.values_mut() {
                        for cyc in &mut n.cycles {
                            cyc.delta.oracle_changed(code);
                        }
                    }
                }
            }
            Record::Journal {
                id: JournalId::K,
                element,
                ..
            } => {
                k.insert(*element);
                for g in gamma.values_mut() {
                    g.target_gained(*element);
                }
            }
            Record::Journal {
                id: JournalId::W(e),
                element,
                ..
            } => {
                w.entry(*e).or_default().insert(*element);
                if let Some(g) = gamma.get_mut(&Requirement::R(*e).depth()) {
                    g.oracle_changed(*element);
                }
                if let Some(n) = ns.get_mut(&Requirement::N(*e).depth()) {
                    for cyc in &mut n.cycles {
                        cyc.delta.target_gained(*element);
                    }
                }
            }
            Record::Event(ev) => {
                let node = ev.node;
                let in_w = |y: u64| match Requirement::of_depth(node) {
                    Requirement::N(e) => w.get(&e).is_some_and(|s| s.contains(&y)),
                    _ => false,
                };
                let gap = |len: u64, y: u64| {
                    Locus::at(stage)
                        .node(node)
                        .element(y)
                        .want(format!("next argument {len}"), y)
                };
                match &ev.item {
                    Item::Init { .. } => {
                        gamma.remove(&node);
                        ns.remove(&node);
                    }
                    Item::R3a { x } | Item::R3c { x, .. } => {
                        let g = gamma.entry(node).or_default();
                        if *x != g.len() {
                            r.fail(gap(g.len(), *x));
                        }
                        let (value, use_) = match ev.item {
                            Item::R3c { use_, .. } => (false, use_),
                            _ => (true, 0),
                        };
                        g.push(value, use_, k.contains(x));
                    }
                    Item::R2Undefine { from } => gamma.entry(node).or_default().truncate(*from),
                    Item::R3End { .. } => {
                        r.bump("gamma_checks");
                        let g = gamma.entry(node).or_default();
                        r.max("gamma_domain", g.len());
                        if let Some(&y) = g.wrong.first() {
                            r.fail(Locus::at(stage).node(node).element(y).want(
                                format!("K({y})={}", k.contains(&y) as u8),
                                format!("Gamma({y})={}", g.get(y).unwrap_or(false) as u8),
                            ));
                        }
                    }
                    Item::N4 { k } => ns.entry(node).or_default().select(*k),
                    Item::N2 { k } => ns.entry(node).or_default().cycles.truncate(*k as usize + 1),
                    Item::N3Cancel { k } => {
                        ns.entry(node).or_default().cycles.truncate(*k as usize)
                    }
                    Item::C2a { x } => {
                        let cyc = ns.entry(node).or_default().cycle();
                        if *x != cyc.delta.len() {
                            r.fail(gap(cyc.delta.len(), *x));
                        }
                    }
                    Item::C2ai { y, value, use_ } | Item::C2aii { y, value, use_, .. } => {
                        let truth = in_w(*y);
                        let cyc = ns.entry(node).or_default().cycle();
                        if *y != cyc.delta.len() {
                            r.fail(gap(cyc.delta.len(), *y));
                        }
                        cyc.delta.push(*value, *use_, truth);
                    }
                    Item::C2aEnd => {
                        r.bump("delta_checks");
                        let cyc = ns.entry(node).or_default().cycle();
                        r.max("delta_domain", cyc.delta.len());
                        if let Some(&y) = cyc.delta.wrong.first() {
                            let value = cyc.delta.get(y).unwrap_or(false) as u8;
                            r.fail(Locus::at(stage).node(node).element(y).want(
                                format!("W({y})={}", 1 - value),
                                format!("Delta({y})={value}"),
                            ));
                        }
                    }
                    _ => {}
                }
            }
            _ => {}
        }
    }
    r
}

use std::collections::{BTreeSet, HashMap, HashSet};

use super::{CheckReport, DReplay, Locus, NView};
use crate::functional::{JournalId, Role};
use crate::sets::BinarySegment;
use crate::state::Requirement;
use crate::trace::{Item, Record, Trace};

/// What a P-node's current epoch claims about its witness.
#[derive(Debug, Clone, Copy, Default)]
struct PView {
    witness: Option<u64>,
    acted: bool,
}

/// Follows N-node cycles through their trace events; shared by the
/// outcome and restoration checks.
fn follow_n(ns: &mut HashMap<u64, NView>, node: u64, item: &Item, stage: u64) {
    match item {
        Item::Init { .. } => {
            ns.remove(&node);
        }
        Item::N4 { k } => ns.entry(node).or_default().select(*k),
        Item::N2 { k } => ns.entry(node).or_default().cycles.truncate(*k as usize + 1),
        Item::N3Cancel { k } => ns.entry(node).or_default().cycles.truncate(*k as usize),
        Item::C2a { .. } => ns.entry(node).or_default().cycle().last_c2a = Some(stage),
        Item::C2b { x, sigma } => {
            ns.entry(node).or_default().cycle().found = Some((*x, sigma.clone()))
        }
        Item::N4Phase2 { k, .. } => {
            let n = ns.entry(node).or_default();
            n.select(*k);
            let c = n.cycle();
            c.phase2 = true;
            c.dc = c.found.take();
        }
        Item::N3 { k, .. } => {
            let n = ns.entry(node).or_default();
            if let Some(c) = n.cycles.get_mut(*k as usize) {
                c.accomplished = true;
            }
        }
        _ => {}
    }
}

/// Any axiom for this input whose oracle segment is an initial segment of
/// `oracle` decides the value (consistent axioms agree).
fn evaluate(
    axioms: &[(BinarySegment, bool)],
    oracle: impl Fn(&BinarySegment) -> bool,
) -> Option<bool> {
    axioms.iter().find(|(seg, _)| oracle(seg)).map(|&(_, v)| v)
}

/// At the horizon: every P-node that diagonalized still has
/// `D(w) ≠ Θ^A(w)`, and every N-node sits in exactly one branch of its
/// trichotomy.
pub fn check_outcomes(trace: &Trace) -> CheckReport {
    let mut r = CheckReport::new("outcomes");
    let mut d = DReplay::default();
    let mut w: HashMap<u64, BTreeSet<u64>> = HashMap::new();
    let mut w_stage: HashMap<(u64, u64), u64> = HashMap::new();
    let mut ps: HashMap<u64, PView> = HashMap::new();
    let mut ns: HashMap<u64, NView> = HashMap::new();
    // Record positions of each node's latest event and each element's
    // latest change.
    let mut last_act: HashMap<u64, usize> = HashMap::new();
    let mut last_change: HashMap<u64, usize> = HashMap::new();
    let mut stage = 0;
    for (pos, rec) in trace.records.iter().enumerate() {
        match rec {
            Record::Stage(s) => stage = *s,
            Record::Change(c) => {
                last_change.insert(c.element, pos);
                if let Some(code) = d.apply(c) {
                    for n in ns.values_mut() {
                        for cyc in &mut n.cycles {
                            cyc.delta.oracle_changed(code);
                        }
                    }
                }
            }
            Record::Journal {
                id: JournalId::W(e),
                element,
                stage,
            } => {
                w.entry(*e).or_default().insert(*element);
                w_stage.insert((*e, *element), *stage);
                if let Some(n) = ns.get_mut(&Requirement::N(*e).depth()) {
                    for cyc in &mut n.cycles {
                        cyc.delta.target_gained(*element);
                    }
                }
            }
            Record::Event(ev) => {
                let node = ev.node;
                last_act.insert(node, pos);
                match (&ev.item, Requirement::of_depth(node)) {
                    (Item::Init { .. }, Requirement::P(_)) => {
                        ps.remove(&node);
                    }
                    (Item::P2 { witness }, _) => {
                        ps.entry(node).or_default().witness = Some(*witness);
                    }
                    (Item::P4 { witness, .. } | Item::P5 { witness, .. }, _) => {
                        let p = ps.entry(node).or_default();
                        p.witness = Some(*witness);
                        p.acted = true;
                    }
                    (
                        Item::C2ai { value, use_, y } | Item::C2aii { value, use_, y, .. },
                        Requirement::N(e),
                    ) => {
                        let truth = w.get(&e).is_some_and(|s| s.contains(y));
                        ns.entry(node)
                            .or_default()
                            .cycle()
                            .delta
                            .push(*value, *use_, truth);
                    }
                    (item, Requirement::N(_)) => follow_n(&mut ns, node, item, stage),
                    _ => {}
                }
            }
            _ => {}
        }
    }

    // Second pass: only the axioms the horizon verdicts need.
    let mut wanted: HashSet<(Role, u64, u64)> = HashSet::new();
    for (&node, p) in &ps {
        if let (true, Some(wit)) = (p.acted, p.witness) {
            wanted.insert((Role::Theta, node / 3, wit));
        }
    }
    for (&node, n) in &ns {
        for c in &n.cycles {
            if let (true, Some((x, _))) = (c.accomplished, &c.dc) {
                wanted.insert((Role::Psi, node / 3, *x));
            }
        }
    }
    let mut axioms: HashMap<(Role, u64, u64), Vec<(BinarySegment, bool)>> = HashMap::new();
    for rec in &trace.records {
        if let Record::Axiom {
            role,
            index,
            segment,
            input,
            output,
            ..
        } = rec
        {
            let key = (*role, *index, *input);
            if wanted.contains(&key) {
                axioms
                    .entry(key)
                    .or_default()
                    .push((segment.clone(), *output));
            }
        }
    }
    let none = Vec::new();

    let mut pnodes: Vec<_> = ps.into_iter().collect();
    pnodes.sort_by_key(|(n, _)| *n);
    for (node, p) in pnodes {
        let (true, Some(wit)) = (p.acted, p.witness) else {
            r.bump("p_waiting");
            continue;
        };
        let ax = axioms.get(&(Role::Theta, node / 3, wit)).unwrap_or(&none);
        let theta = evaluate(ax, |seg| seg.is_prefix_of_set(&d.a));
        let dw = d.members.contains(&wit);
        if theta == Some(dw) {
            r.fail(Locus::at(stage).node(node).element(wit).want(
                format!("Theta(w) != D(w)={}", dw as u8),
                format!("Theta(w)={}", dw as u8),
            ));
        } else {
            r.bump("p_diagonal");
        }
    }

    let mut nnodes: Vec<_> = ns.into_iter().collect();
    nnodes.sort_by_key(|(n, _)| *n);
    for (node, n) in nnodes {
        let e = node / 3;
        let we = w.get(&e);
        let in_w = |y: u64| we.is_some_and(|s| s.contains(&y));
        if let Some(c) = n.cycles.iter().find(|c| c.accomplished) {
            let Some((x, sigma)) = &c.dc else {
                r.fail(Locus::at(stage).node(node).want("dc recorded", "none"));
                continue;
            };
            let ax = axioms.get(&(Role::Psi, e, *x)).unwrap_or(&none);
            let psi = evaluate(ax, |seg| seg.is_prefix_of(sigma));
            if !sigma.is_prefix_of_set(&d.members) {
                // Moves the node has not been visited since are for its next
                // visit to answer (N1 or N3), not falsified at the horizon.
                let acted = last_act.get(&node).copied().unwrap_or(0);
                let unseen = (0..sigma.len())
                    .filter(|&i| sigma.bit(i) != Some(d.members.contains(&i)))
                    .all(|i| last_change.get(&i).is_some_and(|&p| p > acted));
                if unseen {
                    r.bump("n_pending");
                } else {
                    r.fail(
                        Locus::at(stage)
                            .node(node)
                            .element(*x)
                            .want("dc extended by D", "D moved off dc"),
                    );
                }
            } else if psi.is_none() || psi == Some(in_w(*x)) {
                r.fail(Locus::at(stage).node(node).element(*x).want(
                    format!("Psi(x) != W(x)={}", in_w(*x) as u8),
                    format!("Psi(x)={psi:?}"),
                ));
            } else {
                r.bump("n_diagonalized");
            }
            continue;
        }
        let Some(c) = n.cycles.iter().find(|c| !c.phase2) else {
            r.bump("n_agreeing");
            continue;
        };
        match c.delta.wrong.first() {
            None => r.bump("n_agreeing"),
            Some(&y) => {
                let entered = w_stage.get(&(e, y)).copied();
                match (entered, c.last_c2a) {
                    (Some(t), Some(last)) if t <= last => {
                        r.fail(Locus::at(stage).node(node).element(y).want(
                            format!("disagreement caught after stage {t}"),
                            format!("extended at {last}"),
                        ))
                    }
                    (None, _) => r.fail(
                        Locus::at(stage)
                            .node(node)
                            .element(y)
                            .want("W(y)=0", "Delta(y)=1"),
                    ),
                    _ => r.bump("n_waiting"),
                }
            }
        }
    }
    r.set("horizon", stage);
    r
}

/// Whenever a cycle is accomplished (N3), `D` extends its `dc(k)` at the
/// end of that stage.
pub fn check_restoration(trace: &Trace) -> CheckReport {
    let mut r = CheckReport::new("restoration");
    let mut d = DReplay::default();
    let mut ns: HashMap<u64, NView> = HashMap::new();
    let mut pending: Vec<(u64, u64, BinarySegment)> = Vec::new();
    let mut stage = 0;
    let settle =
        |pending: &mut Vec<(u64, u64, BinarySegment)>, d: &DReplay, r: &mut CheckReport| {
            for (s, node, sigma) in pending.drain(..) {
                r.bump("checked");
                if !sigma.is_prefix_of_set(&d.members) {
                    let x = (0..sigma.len())
                        .find(|&i| sigma.bit(i) != Some(d.members.contains(&i)))
                        .unwrap_or(0);
                    r.fail(Locus::at(s).node(node).element(x).want(
                        format!("D({x})={}", sigma.bit(x).unwrap_or(false) as u8),
                        format!("D({x})={}", d.members.contains(&x) as u8),
                    ));
                }
            }
        };
    for rec in &trace.records {
        match rec {
            Record::Stage(s) => {
                settle(&mut pending, &d, &mut r);
                stage = *s;
            }
            Record::Change(c) => {
                d.apply(c);
            }
            Record::Event(ev) if matches!(Requirement::of_depth(ev.node), Requirement::N(_)) => {
                follow_n(&mut ns, ev.node, &ev.item, stage);
                if let Item::N3 { k, .. } = ev.item {
                    match ns
                        .get(&ev.node)
                        .and_then(|n| n.cycles.get(k as usize))
                        .and_then(|c| c.dc.clone())
                    {
                        Some((_, sigma)) => pending.push((stage, ev.node, sigma)),
                        None => r.fail(
                            Locus::at(stage)
                                .node(ev.node)
                                .want(format!("dc({k}) recorded"), "none"),
                        ),
                    }
                }
            }
            _ => {}
        }
    }
    settle(&mut pending, &d, &mut r);
    r
}

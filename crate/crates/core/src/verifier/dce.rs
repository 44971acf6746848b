use std::collections::{BTreeMap, HashMap};

use super::{cantor, CheckReport, Locus};
use crate::sets::{ChangeEvent, ChangeKind};
use crate::trace::{Record, Trace};

/// Every element of `D` changes at most twice, entering first; stages run
/// `1, 2, …` and every change is stamped with the stage it occurs in.
pub fn check_dce(trace: &Trace) -> CheckReport {
    let mut r = CheckReport::new("dce");
    let mut stage = 0;
    let mut counts: HashMap<u64, u32> = HashMap::new();
    for rec in &trace.records {
        match rec {
            Record::Stage(s) => {
                if *s != stage + 1 {
                    r.fail(Locus::at(*s).want(format!("STG {}", stage + 1), format!("STG {s}")));
                }
                stage = *s;
            }
            Record::Change(c) => {
                r.bump("changes");
                if c.stage != stage {
                    r.fail(
                        Locus::at(stage)
                            .element(c.element)
                            .want(format!("stamp {stage}"), format!("stamp {}", c.stage)),
                    );
                }
                let n = counts.entry(c.element).or_default();
                *n += 1;
                let want = if *n % 2 == 1 {
                    ChangeKind::Enumerate
                } else {
                    ChangeKind::Extract
                };
                if *n > 2 {
                    r.fail(
                        Locus::at(stage)
                            .element(c.element)
                            .want("at most 2 changes", format!("change {n}")),
                    );
                } else if c.kind != want {
                    r.fail(Locus::at(stage).element(c.element).want(
                        format!("change {n} {want}"),
                        format!("change {n} {}", c.kind),
                    ));
                }
            }
            _ => {}
        }
    }
    r.set("elements", counts.len() as u64);
    r.set(
        "extracted",
        counts.values().filter(|&&n| n >= 2).count() as u64,
    );
    r
}

/// `A` recomputed from scratch out of every change so far: code to element.
fn recompute(events: &[ChangeEvent]) -> BTreeMap<u64, u64> {
    let mut seen: HashMap<u64, (u32, u64)> = HashMap::new();
    let mut a = BTreeMap::new();
    for c in events {
        let h = seen.entry(c.element).or_insert((0, c.stage));
        h.0 += 1;
        if h.0 == 2 {
            a.insert(cantor(c.element, h.1), c.element);
        }
    }
    a
}

/// At the end of every stage in which `D` or the logged `A` moved, the
/// logged `A` equals a full recomputation from the change journal.
pub fn check_lachlan(trace: &Trace) -> CheckReport {
    let mut r = CheckReport::new("lachlan");
    let mut events: Vec<ChangeEvent> = Vec::new();
    let mut logged: BTreeMap<u64, u64> = BTreeMap::new();
    let mut stage = 0;
    let mut dirty = false;
    let compare =
        |stage: u64, events: &[ChangeEvent], logged: &BTreeMap<u64, u64>, r: &mut CheckReport| {
            r.bump("recomputations");
            let want = recompute(events);
            if want == *logged {
                return;
            }
            if let Some((&code, &x)) = want.iter().find(|(c, _)| !logged.contains_key(c)) {
                r.fail(
                    Locus::at(stage)
                        .element(x)
                        .want(format!("code {code} in A"), "absent"),
                );
            } else if let Some((&code, &x)) = logged.iter().find(|(c, _)| !want.contains_key(c)) {
                r.fail(
                    Locus::at(stage)
                        .element(x)
                        .want("absent", format!("code {code} in A")),
                );
            }
        };
    for rec in &trace.records {
        match rec {
            Record::Stage(s) => {
                if dirty {
                    compare(stage, &events, &logged, &mut r);
                    dirty = false;
                }
                stage = *s;
            }
            Record::Change(c) => {
                events.push(*c);
                dirty = true;
            }
            Record::Lachlan(l) => {
                dirty = true;
                if l.stage != stage {
                    r.fail(
                        Locus::at(stage)
                            .element(l.element)
                            .want(format!("entry at {stage}"), format!("entry at {}", l.stage)),
                    );
                }
                if l.code != cantor(l.element, l.first_stage) {
                    r.fail(
                        Locus::at(stage)
                            .element(l.element)
                            .want(cantor(l.element, l.first_stage), l.code),
                    );
                }
                logged.insert(l.code, l.element);
            }
            _ => {}
        }
    }
    if dirty {
        compare(stage, &events, &logged, &mut r);
    }
    r.set("codes", logged.len() as u64);
    r
}

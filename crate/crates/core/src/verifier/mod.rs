//! Brute-force re-derivation of the construction's invariants from a trace.
//!
//! Every check rebuilds the state it needs from the raw records; nothing
//! here consults the engine's own data structures.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use crate::config::RunConfig;
use crate::sets::{BinarySegment, ChangeEvent, ChangeKind};
use crate::trace::Trace;

mod agreements;
mod bounds;
mod dce;
mod outcomes;
mod provenance;
mod replay;

pub use agreements::check_agreements;
pub use bounds::{
    bound_counts, check_bounds, f_closed, gh_closed, literal_breaches, BoundCounts, Breach,
};
pub use dce::{check_dce, check_lachlan};
pub use outcomes::{check_outcomes, check_restoration};
pub use provenance::{check_anomalies, check_provenance};
pub use replay::check_replay;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    Info,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Info => "INFO",
        })
    }
}

/// Where a check found its first counterexample.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Locus {
    pub stage: Option<u64>,
    pub node: Option<u64>,
    pub element: Option<u64>,
    pub expected: String,
    pub actual: String,
}

impl Locus {
    pub fn at(stage: u64) -> Self {
        Self {
            stage: Some(stage),
            ..Self::default()
        }
    }

    pub fn node(mut self, node: u64) -> Self {
        self.node = Some(node);
        self
    }

    pub fn element(mut self, x: u64) -> Self {
        self.element = Some(x);
        self
    }

    pub fn want(mut self, expected: impl fmt::Display, actual: impl fmt::Display) -> Self {
        self.expected = expected.to_string();
        self.actual = actual.to_string();
        self
    }
}

fn dash(v: Option<u64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| x.to_string())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckReport {
    pub name: &'static str,
    pub status: Status,
    /// Present exactly when the status is `Fail`.
    pub locus: Option<Locus>,
    pub stats: BTreeMap<String, u64>,
    pub notes: Vec<String>,
}

impl CheckReport {
    pub fn new(name: &'static str) -> Self {
        Self {
            name,
            status: Status::Pass,
            locus: None,
            stats: BTreeMap::new(),
            notes: Vec::new(),
        }
    }

    /// Records a violation; only the first one is kept as the locus.
    pub fn fail(&mut self, locus: Locus) {
        if self.status != Status::Fail {
            self.status = Status::Fail;
            self.locus = Some(locus);
        }
    }

    pub fn failed(&self) -> bool {
        self.status == Status::Fail
    }

    pub fn info(&mut self, note: impl Into<String>) {
        if self.status == Status::Pass {
            self.status = Status::Info;
        }
        self.notes.push(note.into());
    }

    pub fn note(&mut self, note: impl Into<String>) {
        self.notes.push(note.into());
    }

    pub fn bump(&mut self, key: &str) {
        *self.stats.entry(key.to_string()).or_default() += 1;
    }

    pub fn set(&mut self, key: &str, v: u64) {
        self.stats.insert(key.to_string(), v);
    }

    pub fn max(&mut self, key: &str, v: u64) {
        let e = self.stats.entry(key.to_string()).or_default();
        *e = (*e).max(v);
    }

    pub fn stat(&self, key: &str) -> u64 {
        self.stats.get(key).copied().unwrap_or(0)
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CHK {} {}", self.name, self.status)?;
        if let Some(l) = &self.locus {
            write!(
                f,
                " stage={} node={} element={} expected={:?} actual={:?}",
                dash(l.stage),
                dash(l.node),
                dash(l.element),
                l.expected,
                l.actual
            )?;
        }
        for (k, v) in &self.stats {
            write!(f, " {k}={v}")?;
        }
        for n in &self.notes {
            write!(f, " note={n:?}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VerifierReport {
    pub checks: Vec<CheckReport>,
}

impl VerifierReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| !c.failed())
    }

    pub fn get(&self, name: &str) -> Option<&CheckReport> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failing(&self) -> Vec<&'static str> {
        self.checks
            .iter()
            .filter(|c| c.failed())
            .map(|c| c.name)
            .collect()
    }
}

impl fmt::Display for VerifierReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{c}")?;
        }
        writeln!(f)?;
        writeln!(
            f,
            "{:<12} {:<6} {:>8} {:>6} {:>10}",
            "check", "status", "stage", "node", "element"
        )?;
        for c in &self.checks {
            let l = c.locus.clone().unwrap_or_default();
            writeln!(
                f,
                "{:<12} {:<6} {:>8} {:>6} {:>10}",
                c.name,
                c.status.to_string(),
                dash(l.stage),
                dash(l.node),
                dash(l.element)
            )?;
        }
        let fails = self.checks.iter().filter(|c| c.failed()).count();
        write!(f, "SUMMARY checks={} fail={fails}", self.checks.len())
    }
}

/// Runs every check on a parsed trace. Without a config the replay check
/// is informational only.
pub fn verify_trace(trace: &Trace, config: Option<&RunConfig>) -> VerifierReport {
    VerifierReport {
        checks: vec![
            check_dce(trace),
            check_lachlan(trace),
            check_bounds(trace),
            check_agreements(trace),
            check_outcomes(trace),
            check_restoration(trace),
            check_provenance(trace),
            check_anomalies(trace),
            check_replay(&trace.to_text(), config),
        ],
    }
}

/// Like [`verify_trace`], starting from trace text. Text that fails to
/// parse yields a `parse` failure next to the replay check.
pub fn verify_text(text: &str, config: Option<&RunConfig>) -> VerifierReport {
    match Trace::parse(text) {
        Ok(trace) => verify_trace(&trace, config),
        Err(err) => {
            let mut parse = CheckReport::new("parse");
            parse.fail(Locus {
                element: Some(err.line as u64),
                expected: "well-formed record".into(),
                actual: err.message,
                ..Locus::default()
            });
            VerifierReport {
                checks: vec![parse, check_replay(text, config)],
            }
        }
    }
}

/// The Cantor code `⟨x, s⟩`, computed here independently of the engine.
pub(crate) fn cantor(x: u64, s: u64) -> u64 {
    (x + s) * (x + s + 1) / 2 + s
}

/// `D` and its Lachlan set, rebuilt from `CHG` records.
#[derive(Debug, Default)]
pub(crate) struct DReplay {
    pub members: BTreeSet<u64>,
    pub a: BTreeSet<u64>,
    history: HashMap<u64, (u32, u64)>,
}

impl DReplay {
    /// Applies a change and returns the code entering `A`, if any.
    pub fn apply(&mut self, c: &ChangeEvent) -> Option<u64> {
        match c.kind {
            ChangeKind::Enumerate => self.members.insert(c.element),
            ChangeKind::Extract => self.members.remove(&c.element),
        };
        let h = self.history.entry(c.element).or_insert((0, c.stage));
        h.0 += 1;
        (h.0 == 2).then(|| {
            let code = cantor(c.element, h.1);
            self.a.insert(code);
            code
        })
    }
}

/// A partial function on `0..len` with uses, kept next to the set of
/// arguments where it disagrees with a target set.
#[derive(Debug, Clone, Default)]
pub(crate) struct Graph {
    values: Vec<bool>,
    prefix_max: Vec<u64>,
    pub wrong: BTreeSet<u64>,
}

impl Graph {
    pub fn len(&self) -> u64 {
        self.values.len() as u64
    }

    pub fn get(&self, y: u64) -> Option<bool> {
        self.values.get(y as usize).copied()
    }

    pub fn push(&mut self, value: bool, use_: u64, truth: bool) {
        let y = self.len();
        let m = self.prefix_max.last().map_or(use_, |&p| p.max(use_));
        self.values.push(value);
        self.prefix_max.push(m);
        if value != truth {
            self.wrong.insert(y);
        }
    }

    pub fn truncate(&mut self, n: u64) {
        self.values.truncate(n as usize);
        self.prefix_max.truncate(n as usize);
        self.wrong.split_off(&n);
    }

    /// The oracle changed at position `p`: drop every computation whose use
    /// exceeds `p`.
    pub fn oracle_changed(&mut self, p: u64) {
        let cut = self.prefix_max.partition_point(|&u| u <= p);
        self.truncate(cut as u64);
    }

    /// `y` entered the target set.
    pub fn target_gained(&mut self, y: u64) {
        if let Some(v) = self.get(y) {
            if v {
                self.wrong.remove(&y);
            } else {
                self.wrong.insert(y);
            }
        }
    }
}

/// One N-node cycle as seen in the trace.
#[derive(Debug, Clone, Default)]
pub(crate) struct CycleView {
    pub delta: Graph,
    pub found: Option<(u64, BinarySegment)>,
    pub dc: Option<(u64, BinarySegment)>,
    pub phase2: bool,
    pub accomplished: bool,
    pub last_c2a: Option<u64>,
}

/// The cycles of an N-node's current epoch.
#[derive(Debug, Clone, Default)]
pub(crate) struct NView {
    pub cycles: Vec<CycleView>,
    pub current: usize,
}

impl NView {
    pub fn select(&mut self, k: u64) {
        let k = k as usize;
        if self.cycles.len() <= k {
            self.cycles.resize_with(k + 1, CycleView::default);
        }
        self.current = k;
    }

    pub fn cycle(&mut self) -> &mut CycleView {
        let k = self.current;
        self.select(k as u64);
        &mut self.cycles[k]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sets::pair_code;

    #[test]
    fn cantor_matches_pairing() {
        for x in 0..40 {
            for s in 0..40 {
                assert_eq!(cantor(x, s), pair_code(x, s));
            }
        }
    }

    #[test]
    fn graph_tracks_disagreement() {
        let mut g = Graph::default();
        g.push(false, 5, false);
        g.push(true, 9, false);
        assert_eq!(g.wrong.iter().copied().collect::<Vec<_>>(), vec![1]);
        g.target_gained(1);
        g.target_gained(0);
        assert_eq!(g.wrong.iter().copied().collect::<Vec<_>>(), vec![0]);
        g.oracle_changed(6);
        assert_eq!(g.len(), 1);
        g.oracle_changed(4);
        assert_eq!(g.len(), 0);
        assert!(g.wrong.is_empty());
    }

    #[test]
    fn fail_keeps_first_locus() {
        let mut r = CheckReport::new("x");
        r.fail(Locus::at(3).want("a", "b"));
        r.fail(Locus::at(9));
        assert_eq!(r.locus.as_ref().unwrap().stage, Some(3));
        assert!(r
            .to_string()
            .starts_with("CHK x FAIL stage=3 node=- element=-"));
    }
}

//! Turing functionals presented as consistent sets of axioms.
//!
//! An axiom `(σ, x, y)` enumerated at stage `t` says that on any oracle
//! extending `σ` the functional outputs `y` on input `x`, with use `|σ|`.
//! Consistency forbids two axioms on the same input with comparable
//! segments and different outputs, which is what makes the presentation
//! behave like a deterministic machine.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::sets::BinarySegment;

/// Which family a functional belongs to: `Ψ_e` (oracle `D`, feeds `N_e`),
/// `Φ_e` (oracle `W_e`, feeds `R_e`) or `Θ_e` (oracle `A`, feeds `P_e`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Role {
    Psi,
    Phi,
    Theta,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::Psi => "Psi",
            Role::Phi => "Phi",
            Role::Theta => "Theta",
        })
    }
}

impl FromStr for Role {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "Psi" => Ok(Role::Psi),
            "Phi" => Ok(Role::Phi),
            "Theta" => Ok(Role::Theta),
            other => Err(format!("unknown role `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Axiom {
    pub segment: BinarySegment,
    pub input: u64,
    pub output: bool,
    pub enumerated_at: u64,
}

/// Anything that can answer "does this oracle extend `σ`?".
pub trait Oracle {
    fn extends(&self, segment: &BinarySegment) -> bool;
}

impl Oracle for BTreeSet<u64> {
    fn extends(&self, segment: &BinarySegment) -> bool {
        segment.is_prefix_of_set(self)
    }
}

/// A finite oracle: only axioms whose segment is a prefix of it apply.
impl Oracle for BinarySegment {
    fn extends(&self, segment: &BinarySegment) -> bool {
        segment.is_prefix_of(self)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FunctionalError {
    #[error("axiom for {role}_{index}({input}) clashes with existing axiom on {existing}")]
    InconsistentAxiom {
        role: Role,
        index: u64,
        input: u64,
        existing: BinarySegment,
    },
}

#[derive(Debug, Clone, Default)]
pub struct AxiomStore {
    tables: HashMap<(Role, u64), HashMap<u64, Vec<Axiom>>>,
    count: usize,
}

impl AxiomStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn axioms(&self, role: Role, index: u64, input: u64) -> &[Axiom] {
        self.tables
            .get(&(role, index))
            .and_then(|t| t.get(&input))
            .map_or(&[], Vec::as_slice)
    }

    pub fn add_axiom(
        &mut self,
        role: Role,
        index: u64,
        segment: BinarySegment,
        input: u64,
        output: bool,
        stage: u64,
    ) -> Result<(), FunctionalError> {
        let list = self
            .tables
            .entry((role, index))
            .or_default()
            .entry(input)
            .or_default();
        if let Some(clash) = list
            .iter()
            .find(|a| a.output != output && a.segment.comparable(&segment))
        {
            return Err(FunctionalError::InconsistentAxiom {
                role,
                index,
                input,
                existing: clash.segment.clone(),
            });
        }
        // Kept sorted by stage, so the first applicable axiom is the earliest.
        let at = list.partition_point(|a| a.enumerated_at <= stage);
        list.insert(
            at,
            Axiom {
                segment,
                input,
                output,
                enumerated_at: stage,
            },
        );
        self.count += 1;
        Ok(())
    }

    /// The output and use of the earliest-enumerated applicable axiom.
    pub fn evaluate(
        &self,
        role: Role,
        index: u64,
        oracle: &impl Oracle,
        input: u64,
        stage: u64,
    ) -> Option<(bool, u64)> {
        self.axioms(role, index, input)
            .iter()
            .find(|a| a.enumerated_at <= stage && oracle.extends(&a.segment))
            .map(|a| (a.output, a.segment.len()))
    }
}

/// Which c.e. set a journal records.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum JournalId {
    W(u64),
    K,
}

impl fmt::Display for JournalId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            JournalId::W(e) => write!(f, "{e}"),
            JournalId::K => f.write_str("K"),
        }
    }
}

impl FromStr for JournalId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "K" {
            Ok(JournalId::K)
        } else {
            s.parse()
                .map(JournalId::W)
                .map_err(|_| format!("bad journal id `{s}`"))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum JournalError {
    #[error("K only holds odd numbers, got {0}")]
    EvenInK(u64),
    #[error("stage {stage} precedes the journal's last entry at {last}")]
    StaleStage { stage: u64, last: u64 },
}

/// A c.e. set as a journal: elements only enter.
#[derive(Debug, Clone, Default)]
pub struct CeJournal {
    entries: Vec<(u64, u64)>,
    members: BTreeSet<u64>,
}

impl CeJournal {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn members(&self) -> &BTreeSet<u64> {
        &self.members
    }

    /// `(element, stage)` pairs in entry order.
    pub fn entries(&self) -> &[(u64, u64)] {
        &self.entries
    }

    pub fn contains(&self, x: u64) -> bool {
        self.members.contains(&x)
    }

    pub fn contains_at(&self, x: u64, s: u64) -> bool {
        self.entries.iter().any(|&(y, t)| y == x && t <= s)
    }

    /// Inserts `x` at stage `s`; returns false when `x` was already present.
    pub fn enumerate(&mut self, id: JournalId, x: u64, s: u64) -> Result<bool, JournalError> {
        if id == JournalId::K && x.is_multiple_of(2) {
            return Err(JournalError::EvenInK(x));
        }
        if let Some(&(_, last)) = self.entries.last() {
            if s < last {
                return Err(JournalError::StaleStage { stage: s, last });
            }
        }
        if !self.members.insert(x) {
            return Ok(false);
        }
        self.entries.push((x, s));
        Ok(true)
    }
}

/// Exhaustive agreement length: the largest `y` such that for every
/// `x ≤ y` the functional converges on `oracle` and equals `target(x)`.
/// `None` when `x = 0` already fails.
pub fn agreement_length(
    store: &AxiomStore,
    role: Role,
    index: u64,
    oracle: &impl Oracle,
    target: impl Fn(u64) -> bool,
    stage: u64,
) -> Option<u64> {
    let mut x = 0;
    while store
        .evaluate(role, index, oracle, x, stage)
        .is_some_and(|(y, _)| y == target(x))
    {
        x += 1;
    }
    x.checked_sub(1)
}

/// Incremental agreement length.
///
/// Keeps a verified prefix `[0, verified)` of agreeing inputs together with
/// the use of each agreeing computation, so that an oracle change at
/// position `p` only re-opens inputs whose computation looked at `p`.
#[derive(Debug, Clone, Default)]
pub struct AgreementTracker {
    uses: Vec<u64>,
    prefix_max: Vec<u64>,
}

impl AgreementTracker {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn verified(&self) -> u64 {
        self.uses.len() as u64
    }

    pub fn length(&self) -> Option<u64> {
        self.verified().checked_sub(1)
    }

    fn truncate(&mut self, n: usize) {
        self.uses.truncate(n);
        self.prefix_max.truncate(n);
    }

    /// The oracle changed at position `p`.
    pub fn oracle_changed(&mut self, p: u64) {
        let cut = self.prefix_max.partition_point(|&u| u <= p);
        self.truncate(cut);
    }

    /// The target value at `x` changed.
    pub fn target_changed(&mut self, x: u64) {
        if x < self.verified() {
            self.truncate(x as usize);
        }
    }

    /// New axioms may have appeared for inputs at or above `x`.
    pub fn reset(&mut self) {
        self.truncate(0);
    }

    /// Extends the verified prefix; `check(x)` returns the use of an
    /// agreeing computation at `x`, or `None`.
    pub fn advance(&mut self, mut check: impl FnMut(u64) -> Option<u64>) -> Option<u64> {
        while let Some(u) = check(self.verified()) {
            let m = self.prefix_max.last().map_or(u, |&p| p.max(u));
            self.uses.push(u);
            self.prefix_max.push(m);
        }
        self.length()
    }
}

/// Agreement-length values at a node's expansionary stages since its last
/// initialization.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ExpansionHistory {
    lengths: Vec<(u64, u64)>,
}

impl ExpansionHistory {
    pub fn new() -> Self {
        Self::default()
    }

    /// `(stage, ℓ)` for each expansionary stage so far.
    pub fn lengths(&self) -> &[(u64, u64)] {
        &self.lengths
    }

    pub fn last(&self) -> Option<u64> {
        self.lengths.last().map(|&(_, l)| l)
    }

    /// Tests stage `s` with agreement length `current` and records it when
    /// expansionary.
    pub fn observe(&mut self, s: u64, current: Option<u64>) -> bool {
        // Recorded values strictly increase, so the last one is the maximum.
        let exp = current.is_some_and(|l| self.last().is_none_or(|m| l > m));
        if exp {
            self.lengths
                .push((s, current.expect("expansionary implies a length")));
        }
        exp
    }
}

/// `current` exists and strictly exceeds every earlier expansionary value.
pub fn is_expansionary(previous: &[u64], current: Option<u64>) -> bool {
    current.is_some_and(|l| previous.iter().all(|&p| l > p))
}

/// All journals of the environment, keyed by id.
pub type Journals = BTreeMap<JournalId, CeJournal>;

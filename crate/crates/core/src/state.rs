//! Per-node strategy state.

use std::collections::BTreeMap;

use crate::functional::ExpansionHistory;
use crate::sets::BinarySegment;

/// The requirement a node of the unary priority tree works for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Requirement {
    N(u64),
    R(u64),
    P(u64),
}

impl Requirement {
    pub fn of_depth(depth: u64) -> Self {
        match depth % 3 {
            0 => Requirement::N(depth / 3),
            1 => Requirement::R(depth / 3),
            _ => Requirement::P(depth / 3),
        }
    }

    pub fn depth(self) -> u64 {
        match self {
            Requirement::N(e) => 3 * e,
            Requirement::R(e) => 3 * e + 1,
            Requirement::P(e) => 3 * e + 2,
        }
    }
}

/// What a node tells the scheduler after acting.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Continue,
    Stop,
}

/// The Θ-computation a satisfied P-node preserves.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Preserved {
    pub witness: u64,
    pub value: bool,
    pub use_: u64,
    pub stage: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PState {
    pub witness: Option<u64>,
    pub satisfied: bool,
    pub preserved: Option<Preserved>,
}

/// An agitator `d_{e,x}`; an absent map entry means undefined.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Agitator {
    Defined(u64),
    Active(u64),
    Enumerated(u64),
    Obsolete,
}

impl Agitator {
    pub fn value(self) -> Option<u64> {
        match self {
            Agitator::Defined(v) | Agitator::Active(v) | Agitator::Enumerated(v) => Some(v),
            Agitator::Obsolete => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GammaEntry {
    pub value: bool,
    pub use_: u64,
    pub defined_at: u64,
}

/// `Γ^{W_e}` on its (downward closed) domain `0..len`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GammaGraph {
    entries: Vec<GammaEntry>,
    prefix_max: Vec<u64>,
}

impl GammaGraph {
    pub fn len(&self) -> u64 {
        self.entries.len() as u64
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[GammaEntry] {
        &self.entries
    }

    pub fn get(&self, x: u64) -> Option<GammaEntry> {
        self.entries.get(x as usize).copied()
    }

    pub fn push(&mut self, entry: GammaEntry) {
        let m = self
            .prefix_max
            .last()
            .map_or(entry.use_, |&p| p.max(entry.use_));
        self.entries.push(entry);
        self.prefix_max.push(m);
    }

    pub fn truncate(&mut self, x: u64) {
        self.entries.truncate(x as usize);
        self.prefix_max.truncate(x as usize);
    }

    /// `w` entered `W_e`: every computation whose use exceeds `w` is gone.
    pub fn oracle_changed(&mut self, w: u64) {
        let cut = self.prefix_max.partition_point(|&u| u <= w);
        self.truncate(cut as u64);
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RState {
    pub ell: ExpansionHistory,
    pub gamma: GammaGraph,
    pub agitators: BTreeMap<u64, Agitator>,
}

impl RState {
    pub fn value(&self, x: u64) -> Option<u64> {
        self.agitators.get(&x).and_then(|a| a.value())
    }
}

/// A diagonalizing pair `(y; σ, τ)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiagPair {
    pub sigma: BinarySegment,
    pub tau: BinarySegment,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DeltaEntry {
    pub value: bool,
    pub use_: u64,
}

/// One cycle's `Δ^A` together with its live diagonalizing pairs.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DeltaGraph {
    entries: Vec<DeltaEntry>,
    prefix_max: Vec<u64>,
    pub pairs: BTreeMap<u64, DiagPair>,
}

impl DeltaGraph {
    pub fn len(&self) -> u64 {
        self.entries.len() as u64
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[DeltaEntry] {
        &self.entries
    }

    /// Defines `Δ(len)` with the pair that certifies it.
    pub fn push(&mut self, value: bool, pair: DiagPair) {
        let use_ = pair.tau.len();
        let m = self.prefix_max.last().map_or(use_, |&p| p.max(use_));
        self.pairs.insert(self.len(), pair);
        self.entries.push(DeltaEntry { value, use_ });
        self.prefix_max.push(m);
    }

    /// Code `c` entered `A`.
    pub fn oracle_changed(&mut self, c: u64) {
        let cut = self.prefix_max.partition_point(|&u| u <= c);
        self.entries.truncate(cut);
        self.prefix_max.truncate(cut);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Initialized,
    Phase1,
    Phase2,
    Accomplished,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cycle {
    pub phase: Phase,
    pub delta: DeltaGraph,
    /// `(x, dc(k))` once a diagonalizing computation was found.
    pub dc: Option<(u64, BinarySegment)>,
    /// `(i, d_i*)` frozen when the cycle entered Phase 2.
    pub dstars: Vec<(u64, u64)>,
}

impl Cycle {
    pub fn new() -> Self {
        Self {
            phase: Phase::Initialized,
            delta: DeltaGraph::default(),
            dc: None,
            dstars: Vec::new(),
        }
    }
}

impl Default for Cycle {
    fn default() -> Self {
        Self::new()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NState {
    pub ell: ExpansionHistory,
    pub cycles: Vec<Cycle>,
    pub cyc_count: u64,
    /// The last stage this node acted at.
    pub last_stage: Option<u64>,
    /// Agitator values `d_{i,x}`, `i < e`, `x < 2(e-i)`, as seen at `last_stage`.
    pub window: BTreeMap<(u64, u64), u64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NodeState {
    N(NState),
    R(RState),
    P(PState),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Node {
    pub depth: u64,
    pub epoch: u64,
    pub state: NodeState,
}

impl Node {
    pub fn new(depth: u64) -> Self {
        Self {
            depth,
            epoch: 0,
            state: Self::blank(depth),
        }
    }

    fn blank(depth: u64) -> NodeState {
        match Requirement::of_depth(depth) {
            Requirement::N(_) => NodeState::N(NState::default()),
            Requirement::R(_) => NodeState::R(RState::default()),
            Requirement::P(_) => NodeState::P(PState::default()),
        }
    }

    pub fn requirement(&self) -> Requirement {
        Requirement::of_depth(self.depth)
    }

    pub fn initialize(&mut self) {
        self.epoch += 1;
        self.state = Self::blank(self.depth);
    }
}

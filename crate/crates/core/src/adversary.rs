//! Opponents: the environment's Turing functionals and the sets `W_e`.
//!
//! Each stage, before any node acts, every binding looks at a read-only
//! [`Visible`] snapshot of the construction and emits axioms and
//! `W_e`-elements through an [`Emitter`]. Inconsistent axioms are dropped
//! and logged as `DRP` records.
//!
//! The faithful Φ adversary keeps `Φ_e^{W_e} = D` with a marker scheme: the
//! axiom for `d` reads `W_e` up to `MARKER_BASE + 2d + 1` (or `+ 2` after the
//! first change of `D(d)`), and each change of `D(d)` is answered by
//! enumerating the next unused marker `MARKER_BASE + 2d` or
//! `MARKER_BASE + 2d + 1`, which breaks the old computation.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{AdversarySpec, BehaviorSpec, Mode};
use crate::functional::{AxiomStore, CeJournal, JournalId, Journals, Role};
use crate::sets::{pair_code, BinarySegment, ChangeHistory};
use crate::trace::{Record, Trace};

/// Input range of chaotic emissions when no span is configured.
pub const CHAOS_SPAN: u64 = 16;

/// First `W_e`-position used for Φ markers.
pub const MARKER_BASE: u64 = 1 << 40;

static EMPTY: BTreeSet<u64> = BTreeSet::new();

/// Axioms of every functional and the c.e. journals (`W_e` and `K`).
#[derive(Debug, Clone, Default)]
pub struct Environment {
    pub store: AxiomStore,
    pub journals: Journals,
}

impl Environment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn journal(&self, id: JournalId) -> Option<&CeJournal> {
        self.journals.get(&id)
    }

    pub fn members(&self, id: JournalId) -> &BTreeSet<u64> {
        self.journal(id).map_or(&EMPTY, CeJournal::members)
    }

    pub fn w(&self, e: u64) -> &BTreeSet<u64> {
        self.members(JournalId::W(e))
    }

    pub fn k(&self) -> &BTreeSet<u64> {
        self.members(JournalId::K)
    }
}

/// An environment mutation the construction has to react to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnvChange {
    Axiom { role: Role, index: u64, input: u64 },
    W { index: u64, element: u64 },
}

/// Read-only view of the construction handed to adversaries.
#[derive(Debug, Clone, Copy)]
pub struct Visible<'a> {
    pub stage: u64,
    pub d: &'a ChangeHistory,
    /// Current Lachlan codes `A_s`.
    pub a: &'a BTreeSet<u64>,
    /// Every number at or above this is still unmentioned by the construction.
    pub fresh_floor: u64,
    /// Uses allowed for `A`-oracle axioms this stage: `⟨0, stage⟩`. Every
    /// code enumerated into `A` from now on is at least this large.
    pub a_use: u64,
    /// `(e, w)` for every current `P_e` witness.
    pub witnesses: &'a [(u64, u64)],
}

/// Applies one binding's emissions for one stage, within its budget.
pub struct Emitter<'a> {
    env: &'a mut Environment,
    trace: &'a mut Trace,
    changes: &'a mut Vec<EnvChange>,
    stage: u64,
    index: u64,
    left: u64,
}

impl<'a> Emitter<'a> {
    pub fn new(
        env: &'a mut Environment,
        trace: &'a mut Trace,
        changes: &'a mut Vec<EnvChange>,
        stage: u64,
        index: u64,
        budget: u64,
    ) -> Self {
        Self {
            env,
            trace,
            changes,
            stage,
            index,
            left: budget,
        }
    }

    pub fn env(&self) -> &Environment {
        self.env
    }

    pub fn exhausted(&self) -> bool {
        self.left == 0
    }

    /// Adds an axiom for this binding's functional `role`. Returns whether
    /// it was accepted.
    pub fn axiom(&mut self, role: Role, segment: BinarySegment, input: u64, output: bool) -> bool {
        if self.exhausted() {
            return false;
        }
        self.left -= 1;
        let (stage, index) = (self.stage, self.index);
        let accepted = if role == Role::Theta && segment.len() > pair_code(0, stage) {
            Err(format!(
                "Theta use {} exceeds {}",
                segment.len(),
                pair_code(0, stage)
            ))
        } else {
            self.env
                .store
                .add_axiom(role, index, segment.clone(), input, output, stage)
                .map_err(|e| e.to_string())
        };
        match accepted {
            Ok(()) => {
                self.trace.push(Record::Axiom {
                    role,
                    index,
                    segment,
                    input,
                    output,
                    stage,
                });
                self.changes.push(EnvChange::Axiom { role, index, input });
                true
            }
            Err(reason) => {
                self.trace.push(Record::Dropped {
                    stage,
                    index,
                    reason,
                });
                false
            }
        }
    }

    /// Enumerates `x` into `W_e`. Returns whether it was new.
    pub fn enumerate(&mut self, x: u64) -> bool {
        if self.exhausted() {
            return false;
        }
        let id = JournalId::W(self.index);
        let journal = self.env.journals.entry(id).or_default();
        if journal.contains(x) {
            return false;
        }
        self.left -= 1;
        journal
            .enumerate(id, x, self.stage)
            .expect("W journals accept any element at the current stage");
        self.trace.push(Record::Journal {
            id,
            element: x,
            stage: self.stage,
        });
        self.changes.push(EnvChange::W {
            index: self.index,
            element: x,
        });
        true
    }
}

/// Convergent computations an agent has seen, keyed by input, with the use
/// of each, plus the inputs that still need attention.
#[derive(Debug, Clone, Default)]
struct UseCache {
    uses: BTreeMap<u64, u64>,
    /// Inputs whose computation was broken by an oracle change.
    broken: BTreeSet<u64>,
    pending: BTreeSet<u64>,
    /// Every input below this has been looked at once.
    frontier: u64,
}

impl UseCache {
    fn oracle_changed(&mut self, p: u64) {
        let hit: Vec<u64> = self
            .uses
            .iter()
            .filter(|&(_, &u)| u > p)
            .map(|(&x, _)| x)
            .collect();
        for x in hit {
            self.uses.remove(&x);
            self.broken.insert(x);
            self.pending.insert(x);
        }
    }

    fn target_changed(&mut self, x: u64) {
        if self.uses.remove(&x).is_some() {
            self.pending.insert(x);
        }
    }

    /// Inputs to look at this stage, in increasing order.
    fn todo(&self, limit: u64, extra: &[u64]) -> impl Iterator<Item = u64> {
        let mut first: BTreeSet<u64> = self.pending.range(..=limit).copied().collect();
        first.extend(extra.iter().filter(|x| !self.uses.contains_key(x)));
        first.into_iter().chain(self.frontier..=limit)
    }

    fn settle(&mut self, x: u64, found: Option<u64>) {
        match found {
            Some(u) => {
                self.pending.remove(&x);
                self.uses.insert(x, u);
            }
            None => {
                self.pending.insert(x);
            }
        }
        if x == self.frontier {
            self.frontier += 1;
        }
    }
}

#[derive(Debug, Clone)]
enum Agent {
    Silent,
    Psi {
        cache: UseCache,
        d_seen: usize,
        w_seen: usize,
    },
    Phi {
        covered: u64,
        d_seen: usize,
        w_seen: usize,
    },
    Theta {
        cache: UseCache,
        a_seen: usize,
        d_seen: usize,
    },
    Chaotic,
}

#[derive(Debug, Clone)]
struct RoleAgent {
    role: Role,
    spec: BehaviorSpec,
    rng: ChaCha8Rng,
    agent: Agent,
}

fn mix(global: u64, seed: u64, index: u64, role: Role) -> u64 {
    let tag = match role {
        Role::Psi => 1u64,
        Role::Phi => 2,
        Role::Theta => 3,
    };
    let mut h = global ^ 0x9e37_79b9_7f4a_7c15;
    for v in [seed, index, tag] {
        h = (h ^ v).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        h ^= h >> 31;
    }
    h
}

impl RoleAgent {
    fn new(role: Role, spec: &BehaviorSpec, seed: u64) -> Self {
        let agent = match (spec.mode, role) {
            (Mode::Silent, _) => Agent::Silent,
            (Mode::Chaotic, _) => Agent::Chaotic,
            (_, Role::Psi) => Agent::Psi {
                cache: UseCache::default(),
                d_seen: 0,
                w_seen: 0,
            },
            (_, Role::Phi) => Agent::Phi {
                covered: 0,
                d_seen: 0,
                w_seen: 0,
            },
            (_, Role::Theta) => Agent::Theta {
                cache: UseCache::default(),
                a_seen: 0,
                d_seen: 0,
            },
        };
        Self {
            role,
            spec: spec.clone(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            agent,
        }
    }

    fn step(&mut self, index: u64, vis: &Visible, em: &mut Emitter) {
        if self.spec.mode == Mode::Laggard && !vis.stage.is_multiple_of(self.spec.period) {
            return;
        }
        let spec = &self.spec;
        let rng = &mut self.rng;
        match &mut self.agent {
            Agent::Silent => {}
            Agent::Chaotic => chaotic(self.role, index, spec, rng, vis, em),
            Agent::Psi {
                cache,
                d_seen,
                w_seen,
            } => {
                for ev in &vis.d.events()[*d_seen..] {
                    cache.oracle_changed(ev.element);
                }
                *d_seen = vis.d.events().len();
                let changed: Vec<u64> = em
                    .env()
                    .journal(JournalId::W(index))
                    .map_or(&[][..], CeJournal::entries)[*w_seen..]
                    .iter()
                    .map(|&(x, _)| x)
                    .collect();
                for x in changed {
                    cache.target_changed(x);
                }
                let limit = vis.stage.min(spec.span.unwrap_or(u64::MAX));
                let todo: Vec<u64> = cache.todo(limit, &[]).collect();
                let mut attacked = false;
                for x in todo {
                    if em.exhausted() {
                        break;
                    }
                    let d = vis.d.members();
                    let value = em.env().w(index).contains(&x);
                    let found = match em.env().store.evaluate(Role::Psi, index, d, x, vis.stage) {
                        Some((y, u)) => {
                            if y == value {
                                cache.broken.remove(&x);
                            }
                            Some(u)
                        }
                        None => {
                            let mut value = value;
                            if cache.broken.remove(&x)
                                && !attacked
                                && !value
                                && spec.attack > 0.0
                                && rng.gen_bool(spec.attack)
                                && em.enumerate(x)
                            {
                                attacked = true;
                                value = true;
                            }
                            let seg = BinarySegment::restrict(d, vis.fresh_floor);
                            em.axiom(Role::Psi, seg, x, value)
                                .then_some(vis.fresh_floor)
                        }
                    };
                    cache.settle(x, found);
                }
                *w_seen = em
                    .env()
                    .journal(JournalId::W(index))
                    .map_or(0, |j| j.entries().len());
            }
            Agent::Phi {
                covered,
                d_seen,
                w_seen,
            } => {
                for ev in &vis.d.events()[*d_seen..] {
                    *covered = (*covered).min(ev.element);
                }
                *d_seen = vis.d.events().len();
                if let Some(j) = em.env().journal(JournalId::W(index)) {
                    for &(w, _) in &j.entries()[*w_seen..] {
                        let floor = w.checked_sub(MARKER_BASE).map_or(0, |m| m / 2);
                        *covered = (*covered).min(floor);
                    }
                }
                let target = vis.fresh_floor + spec.slack;
                while *covered < target && !em.exhausted() {
                    let d = *covered;
                    let want = vis.d.is_member(d);
                    let current =
                        em.env()
                            .store
                            .evaluate(Role::Phi, index, em.env().w(index), d, vis.stage);
                    if current.is_some_and(|(y, _)| y == want) {
                        *covered += 1;
                        continue;
                    }
                    let changes = vis.d.total_changes(d);
                    let marker = MARKER_BASE + 2 * d;
                    if changes >= 1 {
                        em.enumerate(marker);
                    }
                    if changes >= 2 {
                        em.enumerate(marker + 1);
                    }
                    let len = if changes == 0 { marker + 1 } else { marker + 2 };
                    let seg = BinarySegment::restrict(em.env().w(index), len);
                    if !em.axiom(Role::Phi, seg, d, want) {
                        break;
                    }
                    *covered += 1;
                }
                *w_seen = em
                    .env()
                    .journal(JournalId::W(index))
                    .map_or(0, |j| j.entries().len());
            }
            Agent::Theta {
                cache,
                a_seen,
                d_seen,
            } => {
                let lch = vis.d.lachlan().entries();
                for entry in &lch[*a_seen..] {
                    cache.oracle_changed(entry.code);
                }
                *a_seen = lch.len();
                for ev in &vis.d.events()[*d_seen..] {
                    cache.target_changed(ev.element);
                }
                *d_seen = vis.d.events().len();
                let limit = vis.stage.min(spec.span.unwrap_or(u64::MAX));
                let extra: Vec<u64> = vis
                    .witnesses
                    .iter()
                    .filter(|&&(e, _)| e == index)
                    .map(|&(_, w)| w)
                    .collect();
                let todo: Vec<u64> = cache.todo(limit, &extra).collect();
                for x in todo {
                    if em.exhausted() {
                        break;
                    }
                    let want = vis.d.is_member(x);
                    let found =
                        match em
                            .env()
                            .store
                            .evaluate(Role::Theta, index, vis.a, x, vis.stage)
                        {
                            Some((_, u)) => Some(u),
                            None => {
                                let seg = BinarySegment::restrict(vis.a, vis.a_use);
                                em.axiom(Role::Theta, seg, x, want).then_some(vis.a_use)
                            }
                        };
                    cache.settle(x, found);
                }
            }
        }
    }
}

fn toggled(seg: &BinarySegment, p: u64) -> BinarySegment {
    let mut ones: Vec<u64> = seg.ones().to_vec();
    match ones.binary_search(&p) {
        Ok(i) => {
            ones.remove(i);
        }
        Err(i) => ones.insert(i, p),
    }
    BinarySegment::from_ones(seg.len(), ones).expect("position below length")
}

fn chaotic(
    role: Role,
    index: u64,
    spec: &BehaviorSpec,
    rng: &mut ChaCha8Rng,
    vis: &Visible,
    em: &mut Emitter,
) {
    if !rng.gen_bool(spec.rate) {
        return;
    }
    for _ in 0..rng.gen_range(1..=3) {
        let span = spec.span.unwrap_or(CHAOS_SPAN);
        let x = rng.gen_range(0..=span);
        let (oracle, bound) = match role {
            Role::Psi => (vis.d.members(), vis.fresh_floor),
            Role::Phi => (em.env().w(index), vis.fresh_floor),
            Role::Theta => (vis.a, vis.a_use),
        };
        let len = rng.gen_range(0..=bound);
        let mut seg = BinarySegment::restrict(oracle, len);
        if len > 0 && rng.gen_bool(0.5) {
            seg = toggled(&seg, rng.gen_range(0..len));
        }
        let output = rng.gen_bool(0.5);
        em.axiom(role, seg, x, output);
    }
    if role != Role::Theta && rng.gen_bool(spec.rate / 4.0) {
        em.enumerate(rng.gen_range(0..=spec.span.unwrap_or(CHAOS_SPAN)));
    }
}

/// One configured opponent `e`: behaviours for `Ψ_e`, `Φ_e`, `Θ_e`.
#[derive(Debug, Clone)]
pub struct Adversary {
    index: u64,
    agents: [RoleAgent; 3],
}

impl Adversary {
    pub fn new(spec: &AdversarySpec, global_seed: u64) -> Self {
        let agent = |role, b: &BehaviorSpec| {
            RoleAgent::new(role, b, mix(global_seed, spec.seed, spec.index, role))
        };
        Self {
            index: spec.index,
            agents: [
                agent(Role::Psi, &spec.psi),
                agent(Role::Phi, &spec.phi),
                agent(Role::Theta, &spec.theta),
            ],
        }
    }

    pub fn index(&self) -> u64 {
        self.index
    }

    /// Runs the Ψ, Φ and Θ behaviours in that order.
    pub fn step(&mut self, vis: &Visible, em: &mut Emitter) {
        for agent in &mut self.agents {
            agent.step(self.index, vis, em);
        }
    }
}

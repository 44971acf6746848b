//! The stage loop over the unary priority tree.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::adversary::{Adversary, Emitter, EnvChange, Environment, Visible};
use crate::config::{ConfigError, RunConfig};
use crate::functional::{AgreementTracker, JournalId, Role};
use crate::sets::{pair_code, BinarySegment, ChangeHistory, ChangeKind, SetsError};
use crate::state::{Node, NodeState, Outcome, Requirement};
use crate::trace::{Event, Item, Record, Trace};

enum KSource {
    Script(BTreeMap<u64, Vec<u64>>),
    Machine {
        rng: Box<ChaCha8Rng>,
        rate: f64,
        bound: u64,
    },
}

/// A running construction: `D`, the environment, and every node.
pub struct Construction {
    pub(crate) config: RunConfig,
    pub(crate) stage: u64,
    pub(crate) d: ChangeHistory,
    pub(crate) env: Environment,
    adversaries: Vec<Adversary>,
    k_source: KSource,
    pub(crate) nodes: Vec<Node>,
    pub(crate) fresh_max: u64,
    pub(crate) code_bound: u64,
    pub(crate) trace: Trace,
    /// Agreement of `Ψ_e^D` with `W_e`, per `e`.
    pub(crate) psi_track: BTreeMap<u64, AgreementTracker>,
    /// Agreement of `Φ_e^{W_e}` with `D`, per `e`.
    pub(crate) phi_track: BTreeMap<u64, AgreementTracker>,
    /// Every agitator value ever handed out, with its `(e, x)`.
    pub(crate) owners: HashMap<u64, (u64, u64)>,
}

impl Construction {
    pub fn new(config: &RunConfig) -> Result<Self, ConfigError> {
        config.validate()?;
        let mut script: BTreeMap<u64, Vec<u64>> = BTreeMap::new();
        for &(k, s) in &config.k_script {
            script.entry(s).or_default().push(k);
        }
        let k_source = match &config.k_machine {
            Some(m) => KSource::Machine {
                rng: Box::new(ChaCha8Rng::seed_from_u64(
                    m.seed ^ config.seed.rotate_left(17),
                )),
                rate: m.rate,
                bound: m.bound,
            },
            None => KSource::Script(script),
        };
        let mut trace = Trace::new();
        trace.push(Record::Header {
            max_depth: config.max_depth,
            horizon: config.horizon,
            seed: config.seed,
            digest: config.digest(),
        });
        let nodes: Vec<Node> = (0..config.max_depth).map(Node::new).collect();
        let mut psi_track = BTreeMap::new();
        let mut phi_track = BTreeMap::new();
        for node in &nodes {
            match node.requirement() {
                Requirement::N(e) => {
                    psi_track.insert(e, AgreementTracker::new());
                }
                Requirement::R(e) => {
                    phi_track.insert(e, AgreementTracker::new());
                }
                Requirement::P(_) => {}
            }
        }
        Ok(Self {
            config: config.clone(),
            stage: 0,
            d: ChangeHistory::new(),
            env: Environment::new(),
            adversaries: config
                .adversaries
                .iter()
                .map(|a| Adversary::new(a, config.seed))
                .collect(),
            k_source,
            nodes,
            fresh_max: 0,
            code_bound: 0,
            trace,
            psi_track,
            phi_track,
            owners: HashMap::new(),
        })
    }

    pub fn stage(&self) -> u64 {
        self.stage
    }

    pub fn d(&self) -> &ChangeHistory {
        &self.d
    }

    pub fn a(&self) -> &BTreeSet<u64> {
        self.d.lachlan().codes()
    }

    pub fn env(&self) -> &Environment {
        &self.env
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn trace(&self) -> &Trace {
        &self.trace
    }

    pub fn into_trace(self) -> Trace {
        self.trace
    }

    pub fn finished(&self) -> bool {
        self.stage >= self.config.horizon
    }

    /// `1 + max(stage, every number mentioned so far)`.
    pub fn fresh_number(&mut self) -> u64 {
        let n = self.stage.max(self.fresh_max) + 1;
        self.fresh_max = n;
        n
    }

    pub(crate) fn emit(&mut self, depth: u64, item: Item) {
        let epoch = self.nodes[depth as usize].epoch;
        self.trace.push(Record::Event(Event {
            stage: self.stage,
            node: depth,
            epoch,
            item,
        }));
    }

    pub(crate) fn initialize(&mut self, depth: u64, by: u64) {
        self.nodes[depth as usize].initialize();
        self.emit(depth, Item::Init { by });
    }

    pub(crate) fn initialize_below(&mut self, depth: u64) {
        for beta in depth + 1..self.config.max_depth {
            self.initialize(beta, depth);
        }
    }

    /// Applies one change to `D` at the current stage and propagates it to
    /// `A`, the agreement trackers and every `Δ`.
    pub(crate) fn change_d(&mut self, x: u64, kind: ChangeKind) -> Result<(), SetsError> {
        let s = self.stage;
        let lch = self.d.apply_change(x, kind, s)?;
        self.trace.push(Record::Change(
            *self.d.events().last().expect("just applied"),
        ));
        if kind == ChangeKind::Enumerate {
            self.code_bound = self.code_bound.max(pair_code(x, s) + 1);
        }
        for t in self.psi_track.values_mut() {
            t.oracle_changed(x);
        }
        for t in self.phi_track.values_mut() {
            t.target_changed(x);
        }
        if let Some(entry) = lch {
            self.trace.push(Record::Lachlan(entry));
            for node in &mut self.nodes {
                if let NodeState::N(n) = &mut node.state {
                    for c in &mut n.cycles {
                        c.delta.oracle_changed(entry.code);
                    }
                }
            }
        }
        Ok(())
    }

    /// Restores `D` to extend `σ`, tracing an `RXA` event for every
    /// R-agitator the restoration extracts.
    pub(crate) fn restore(&mut self, depth: u64, sigma: &BinarySegment) -> Result<bool, SetsError> {
        let plan = self.d.restoration_plan(sigma)?;
        for &(x, kind) in &plan {
            if kind == ChangeKind::Extract {
                if let Some(&(owner, ax)) = self.owners.get(&x) {
                    self.emit(
                        depth,
                        Item::RestoreExtract {
                            owner,
                            x: ax,
                            agitator: x,
                        },
                    );
                }
            }
            self.change_d(x, kind)?;
        }
        Ok(!plan.is_empty())
    }

    fn step_k(&mut self) {
        let s = self.stage;
        let new: Vec<u64> = match &mut self.k_source {
            KSource::Script(script) => script.remove(&s).unwrap_or_default(),
            KSource::Machine { rng, rate, bound } => {
                if rng.gen_bool(*rate) {
                    let k = self.env.k();
                    (1..*bound)
                        .step_by(2)
                        .find(|x| !k.contains(x))
                        .into_iter()
                        .collect()
                } else {
                    Vec::new()
                }
            }
        };
        for k in new {
            let journal = self.env.journals.entry(JournalId::K).or_default();
            if journal
                .enumerate(JournalId::K, k, s)
                .expect("K holds odd numbers")
            {
                self.trace.push(Record::Journal {
                    id: JournalId::K,
                    element: k,
                    stage: s,
                });
            }
        }
    }

    fn step_adversaries(&mut self) {
        let witnesses: Vec<(u64, u64)> = self
            .nodes
            .iter()
            .filter_map(|n| match (&n.state, n.requirement()) {
                (NodeState::P(p), Requirement::P(e)) => p.witness.map(|w| (e, w)),
                _ => None,
            })
            .collect();
        let a = self.d.lachlan().codes().clone();
        let vis = Visible {
            stage: self.stage,
            d: &self.d,
            a: &a,
            fresh_floor: self.stage.max(self.fresh_max) + 1,
            a_use: pair_code(0, self.stage),
            witnesses: &witnesses,
        };
        let mut changes = Vec::new();
        for adv in &mut self.adversaries {
            let mut em = Emitter::new(
                &mut self.env,
                &mut self.trace,
                &mut changes,
                self.stage,
                adv.index(),
                self.config.budget,
            );
            adv.step(&vis, &mut em);
        }
        for change in changes {
            if let EnvChange::W { index, element } = change {
                if let Some(t) = self.psi_track.get_mut(&index) {
                    t.target_changed(element);
                }
                if let Some(t) = self.phi_track.get_mut(&index) {
                    t.oracle_changed(element);
                }
                let depth = Requirement::R(index).depth() as usize;
                if let Some(NodeState::R(r)) = self.nodes.get_mut(depth).map(|n| &mut n.state) {
                    r.gamma.oracle_changed(element);
                }
            }
        }
    }

    /// `ℓ` for the N-node of `e`: the largest `y` with `Ψ_e^D` agreeing
    /// with `W_e` on `0..=y`.
    pub(crate) fn psi_length(&mut self, e: u64) -> Option<u64> {
        let (store, d, w, s) = (&self.env.store, self.d.members(), self.env.w(e), self.stage);
        self.psi_track
            .get_mut(&e)
            .expect("tracker per N-node")
            .advance(|x| match store.evaluate(Role::Psi, e, d, x, s) {
                Some((y, u)) if y == w.contains(&x) => Some(u),
                _ => None,
            })
    }

    /// `ℓ` for the R-node of `e`: the largest `y` with `Φ_e^{W_e}` agreeing
    /// with `D` on `0..=y`.
    pub(crate) fn phi_length(&mut self, e: u64) -> Option<u64> {
        let (store, d, w, s) = (&self.env.store, self.d.members(), self.env.w(e), self.stage);
        self.phi_track
            .get_mut(&e)
            .expect("tracker per R-node")
            .advance(|x| match store.evaluate(Role::Phi, e, w, x, s) {
                Some((y, u)) if y == d.contains(&x) => Some(u),
                _ => None,
            })
    }

    /// Runs one stage: `K`, then the adversaries, then the nodes from the root.
    pub fn run_stage(&mut self) {
        self.stage += 1;
        let s = self.stage;
        self.trace.push(Record::Stage(s));
        self.step_k();
        self.step_adversaries();
        for depth in 0..self.config.max_depth.min(s) {
            let outcome = match Requirement::of_depth(depth) {
                Requirement::N(e) => self.act_n(depth, e),
                Requirement::R(e) => self.act_r(depth, e),
                Requirement::P(e) => self.act_p(depth, e),
            };
            match outcome {
                Outcome::Continue => self.emit(depth, Item::Continue),
                Outcome::Stop => {
                    self.emit(depth, Item::Stop);
                    break;
                }
            }
        }
    }

    pub fn run_to_horizon(&mut self) {
        while !self.finished() {
            self.run_stage();
        }
    }
}

/// Runs stages `1..=horizon` and returns the final state with its trace.
pub fn run_construction(config: &RunConfig) -> Result<Construction, ConfigError> {
    let mut c = Construction::new(config)?;
    c.run_to_horizon();
    Ok(c)
}

//! The P, R and N strategies and the `cyc(k)` module.

use std::collections::BTreeSet;

use crate::functional::Role;
use crate::scheduler::Construction;
use crate::sets::{BinarySegment, ChangeKind};
use crate::state::{
    Agitator, Cycle, DiagPair, GammaEntry, NState, NodeState, Outcome, PState, Phase, Preserved,
    RState, Requirement,
};
use crate::trace::{AgitatorAction, Item};

/// Result of one `cyc(k)` action.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CycleOutcome {
    Continue,
    DcFound { x: u64, sigma: BinarySegment },
}

impl Construction {
    fn p_state(&mut self, depth: u64) -> &mut PState {
        match &mut self.nodes[depth as usize].state {
            NodeState::P(p) => p,
            _ => unreachable!("depth {depth} is not a P-node"),
        }
    }

    pub(crate) fn r_state(&mut self, depth: u64) -> &mut RState {
        match &mut self.nodes[depth as usize].state {
            NodeState::R(r) => r,
            _ => unreachable!("depth {depth} is not an R-node"),
        }
    }

    fn n_state(&mut self, depth: u64) -> &mut NState {
        match &mut self.nodes[depth as usize].state {
            NodeState::N(n) => n,
            _ => unreachable!("depth {depth} is not an N-node"),
        }
    }

    fn agitator(&self, i: u64, x: u64) -> Option<Agitator> {
        match &self.nodes.get(Requirement::R(i).depth() as usize)?.state {
            NodeState::R(r) => r.agitators.get(&x).copied(),
            _ => None,
        }
    }

    fn anomaly(&mut self, depth: u64, what: String) {
        self.emit(depth, Item::Anomaly { what });
    }

    pub(crate) fn act_p(&mut self, depth: u64, e: u64) -> Outcome {
        if self.p_state(depth).satisfied {
            self.emit(depth, Item::P1);
            return Outcome::Continue;
        }
        let w = match self.p_state(depth).witness {
            Some(w) => w,
            None => {
                let w = self.fresh_number();
                self.p_state(depth).witness = Some(w);
                self.emit(depth, Item::P2 { witness: w });
                w
            }
        };
        let s = self.stage;
        let Some((value, use_)) =
            self.env
                .store
                .evaluate(Role::Theta, e, self.d.lachlan().codes(), w, s)
        else {
            self.emit(depth, Item::P3 { witness: w });
            return Outcome::Continue;
        };
        if value {
            self.emit(depth, Item::P4 { witness: w, use_ });
        } else {
            self.emit(depth, Item::P5 { witness: w, use_ });
            if let Err(err) = self.change_d(w, ChangeKind::Enumerate) {
                self.anomaly(depth, format!("P5 {w}: {err}"));
            }
        }
        let p = self.p_state(depth);
        p.satisfied = true;
        p.preserved = Some(Preserved {
            witness: w,
            value,
            use_,
            stage: s,
        });
        self.initialize_below(depth);
        Outcome::Stop
    }

    pub(crate) fn act_r(&mut self, depth: u64, e: u64) -> Outcome {
        let s = self.stage;
        let ell = self.phi_length(e);
        let expansionary = self.r_state(depth).ell.observe(s, ell);
        self.emit(depth, Item::Ell { ell, expansionary });
        let max_value = self
            .r_state(depth)
            .agitators
            .values()
            .filter_map(|a| a.value())
            .max();
        let ell = match ell {
            Some(l) if expansionary && max_value.is_none_or(|v| v <= l) => l,
            _ => {
                self.emit(depth, Item::R1);
                return Outcome::Continue;
            }
        };

        // (R2)
        let in_d: Vec<(u64, u64)> = self
            .r_state_ref(depth)
            .agitators
            .iter()
            .filter_map(|(&x, a)| a.value().map(|v| (x, v)))
            .filter(|&(_, v)| self.d.is_member(v))
            .collect();
        if let Some(&(least, _)) = in_d.first() {
            for &(x, v) in &in_d {
                if x % 2 == 0 {
                    self.emit(depth, Item::R2Extract { x, agitator: v });
                    if let Err(err) = self.change_d(v, ChangeKind::Extract) {
                        self.anomaly(depth, format!("R2 {x}: {err}"));
                    }
                } else {
                    self.emit(depth, Item::R2Keep { x, agitator: v });
                }
            }
            self.emit(depth, Item::R2Undefine { from: least });
            let r = self.r_state(depth);
            r.agitators.retain(|&y, _| y < least);
            r.gamma.truncate(least);
        }

        // (R3), enumerate clause
        let wrong = {
            let k = self.env.k();
            let r = self.r_state_ref(depth);
            r.gamma
                .entries()
                .iter()
                .enumerate()
                .find(|(x, g)| !g.value && k.contains(&(*x as u64)))
                .map(|(x, _)| x as u64)
        };
        if let Some(x) = wrong {
            match self.r_state(depth).agitators.get(&x).copied() {
                Some(Agitator::Active(v)) if self.d.total_changes(v) == 0 => {
                    self.emit(depth, Item::R3 { x, agitator: v });
                    self.r_state(depth)
                        .agitators
                        .insert(x, Agitator::Enumerated(v));
                    if let Err(err) = self.change_d(v, ChangeKind::Enumerate) {
                        self.anomaly(depth, format!("R3 {x}: {err}"));
                    }
                    return Outcome::Stop;
                }
                other => {
                    self.anomaly(
                        depth,
                        format!("R3 {x}: agitator {other:?} cannot be enumerated"),
                    );
                    self.r_state(depth).gamma.truncate(x);
                }
            }
        }

        // (R3a)-(R3c)
        let mut blocked = false;
        let top = ell.min(self.config.gamma_span);
        for x in self.r_state(depth).gamma.len()..top {
            let in_k = self.env.k().contains(&x);
            let current = self.r_state(depth).agitators.get(&x).copied();
            match current {
                _ if in_k && !blocked => {
                    self.r_state(depth).gamma.push(GammaEntry {
                        value: true,
                        use_: 0,
                        defined_at: s,
                    });
                    self.r_state(depth).agitators.insert(x, Agitator::Obsolete);
                    self.emit(depth, Item::R3a { x });
                }
                None if !in_k => {
                    let v = self.fresh_number();
                    self.owners.insert(v, (e, x));
                    self.r_state(depth)
                        .agitators
                        .insert(x, Agitator::Defined(v));
                    self.emit(depth, Item::R3b { x, agitator: v });
                    blocked = true;
                }
                Some(Agitator::Defined(v) | Agitator::Active(v)) if !blocked && !in_k => {
                    let w = self.env.w(e);
                    match self.env.store.evaluate(Role::Phi, e, w, v, s) {
                        Some((_, use_)) => {
                            let r = self.r_state(depth);
                            r.gamma.push(GammaEntry {
                                value: false,
                                use_,
                                defined_at: s,
                            });
                            r.agitators.insert(x, Agitator::Active(v));
                            self.emit(
                                depth,
                                Item::R3c {
                                    x,
                                    agitator: v,
                                    use_,
                                },
                            );
                        }
                        None => {
                            self.anomaly(depth, format!("R3c {x}: Phi diverges on {v}"));
                            break;
                        }
                    }
                }
                Some(Agitator::Enumerated(v)) if !blocked => {
                    self.anomaly(depth, format!("R3 {x}: agitator {v} still enumerated"));
                    break;
                }
                _ => {}
            }
        }
        self.emit(depth, Item::R3End { ell });
        Outcome::Continue
    }

    fn r_state_ref(&self, depth: u64) -> &RState {
        match &self.nodes[depth as usize].state {
            NodeState::R(r) => r,
            _ => unreachable!("depth {depth} is not an R-node"),
        }
    }

    /// `Υ_k` at stage `at` (`None` for the current state).
    fn upsilon(&self, dstars: &[(u64, u64)], at: Option<u64>) -> BTreeSet<u64> {
        dstars
            .iter()
            .filter(|&&(_, d)| match at {
                Some(t) => self.d.membership(d, t),
                None => self.d.is_member(d),
            })
            .map(|&(i, _)| i)
            .collect()
    }

    fn window_values(&self, e: u64) -> Vec<((u64, u64), u64)> {
        (0..e)
            .flat_map(|i| (0..2 * (e - i)).map(move |x| (i, x)))
            .filter_map(|(i, x)| {
                self.agitator(i, x)
                    .and_then(|a| a.value())
                    .map(|v| ((i, x), v))
            })
            .collect()
    }

    pub(crate) fn act_n(&mut self, depth: u64, e: u64) -> Outcome {
        let outcome = self.act_n_inner(depth, e);
        let window = self.window_values(e).into_iter().collect();
        let s = self.stage;
        let n = self.n_state(depth);
        n.last_stage = Some(s);
        n.window = window;
        outcome
    }

    fn act_n_inner(&mut self, depth: u64, e: u64) -> Outcome {
        let s = self.stage;
        let ell = self.psi_length(e);
        let expansionary = self.n_state(depth).ell.observe(s, ell);
        self.emit(depth, Item::Ell { ell, expansionary });
        let last = self.n_state(depth).last_stage;

        // (N1)
        if let Some(t) = last {
            let old = self.n_state(depth).window.clone();
            let moved = self.window_values(e).into_iter().find(|(key, v)| {
                old.get(key) == Some(v) && self.d.membership(*v, t) != self.d.is_member(*v)
            });
            if let Some(((i, x), v)) = moved {
                self.emit(depth, Item::N1 { i, x, agitator: v });
                self.initialize(depth, depth);
                self.initialize_below(depth);
                return Outcome::Stop;
            }
        }

        // (N2)
        if let Some(t) = last {
            let changed = self
                .n_state_ref(depth)
                .cycles
                .iter()
                .enumerate()
                .filter(|(_, c)| matches!(c.phase, Phase::Phase2 | Phase::Accomplished))
                .find(|(_, c)| self.upsilon(&c.dstars, Some(t)) != self.upsilon(&c.dstars, None))
                .map(|(k, _)| k);
            if let Some(k) = changed {
                self.emit(depth, Item::N2 { k: k as u64 });
                self.n_state(depth).cycles.truncate(k + 1);
                self.initialize_below(depth);
            }
        }

        // (N3)
        let done = self
            .n_state_ref(depth)
            .cycles
            .iter()
            .enumerate()
            .filter(|(_, c)| matches!(c.phase, Phase::Phase2 | Phase::Accomplished))
            .find(|(_, c)| self.upsilon(&c.dstars, None).is_empty())
            .map(|(k, c)| (k, c.dc.clone()));
        if let Some((k, dc)) = done {
            let sigma = dc.map(|(_, sigma)| sigma).unwrap_or_default();
            let drifted = !sigma.is_prefix_of_set(self.d.members());
            if drifted && !self.d.restorable_to(&sigma, s) {
                // An agitator inside σ changed twice, so the pair is lost
                // for good: cancel it and let (N4) start cycle k anew.
                self.emit(depth, Item::N3Cancel { k: k as u64 });
                self.n_state(depth).cycles.truncate(k);
                self.initialize_below(depth);
            } else {
                self.n_state(depth).cycles[k].phase = Phase::Accomplished;
                self.emit(
                    depth,
                    Item::N3 {
                        k: k as u64,
                        restored: drifted,
                    },
                );
                if drifted {
                    if let Err(err) = self.restore(depth, &sigma) {
                        self.anomaly(depth, format!("N3 {k}: {err}"));
                    }
                }
                return Outcome::Continue;
            }
        }

        // (N4)
        let n = self.n_state(depth);
        let k = match n
            .cycles
            .iter()
            .position(|c| matches!(c.phase, Phase::Initialized | Phase::Phase1))
        {
            Some(k) => k,
            None => {
                n.cycles.push(Cycle::new());
                n.cycles.len() - 1
            }
        };
        n.cycles[k].phase = Phase::Phase1;
        self.emit(depth, Item::N4 { k: k as u64 });
        let CycleOutcome::DcFound { x, sigma } =
            self.run_cycle(depth, e, k, ell.filter(|_| expansionary))
        else {
            return Outcome::Continue;
        };
        let mut dstars = Vec::new();
        for i in 0..e {
            let slot = 2 * (e - i);
            let r_depth = Requirement::R(i).depth();
            let (v, action) = match self.agitator(i, slot) {
                Some(Agitator::Active(v)) => (v, AgitatorAction::Enumerated),
                Some(Agitator::Defined(v)) => (v, AgitatorAction::Undefined),
                Some(Agitator::Enumerated(v)) => (v, AgitatorAction::Kept),
                Some(Agitator::Obsolete) | None => continue,
            };
            self.emit(
                depth,
                Item::N4Agitator {
                    i,
                    agitator: v,
                    action,
                },
            );
            match action {
                AgitatorAction::Enumerated => {
                    if let Err(err) = self.change_d(v, ChangeKind::Enumerate) {
                        self.anomaly(depth, format!("N4 {i}: {err}"));
                        continue;
                    }
                    self.r_state(r_depth)
                        .agitators
                        .insert(slot, Agitator::Enumerated(v));
                }
                AgitatorAction::Undefined => {
                    // As in (R2): agitators above the slot go too, so their
                    // replacements are fresh and lie beyond σ.
                    self.r_state(r_depth).agitators.retain(|&y, _| y < slot);
                    continue;
                }
                AgitatorAction::Kept => {}
            }
            dstars.push((i, v));
        }
        let n = self.n_state(depth);
        let cycle = &mut n.cycles[k];
        cycle.phase = Phase::Phase2;
        cycle.dc = Some((x, sigma));
        cycle.dstars = dstars.clone();
        n.cyc_count += 1;
        let count = n.cyc_count;
        self.emit(
            depth,
            Item::N4Phase2 {
                k: k as u64,
                count,
                dstars,
            },
        );
        self.initialize_below(depth);
        Outcome::Stop
    }

    fn n_state_ref(&self, depth: u64) -> &NState {
        match &self.nodes[depth as usize].state {
            NodeState::N(n) => n,
            _ => unreachable!("depth {depth} is not an N-node"),
        }
    }

    fn delta(&mut self, depth: u64, k: usize) -> &mut crate::state::DeltaGraph {
        &mut self.n_state(depth).cycles[k].delta
    }

    /// `ell` is `Some` exactly at expansionary stages.
    pub(crate) fn run_cycle(
        &mut self,
        depth: u64,
        e: u64,
        k: usize,
        ell: Option<u64>,
    ) -> CycleOutcome {
        let Some(ell) = ell else {
            self.emit(depth, Item::C1);
            return CycleOutcome::Continue;
        };
        let s = self.stage;
        let mismatch = {
            let delta = &self.n_state_ref(depth).cycles[k].delta;
            self.env
                .w(e)
                .range(..delta.len())
                .copied()
                .find(|&y| !delta.entries()[y as usize].value)
        };
        if let Some(x) = mismatch {
            let Some(pair) = self.n_state_ref(depth).cycles[k]
                .delta
                .pairs
                .get(&x)
                .cloned()
            else {
                self.anomaly(depth, format!("C2b {x}: no diagonalizing pair"));
                return CycleOutcome::Continue;
            };
            self.emit(
                depth,
                Item::C2b {
                    x,
                    sigma: pair.sigma.clone(),
                },
            );
            if !self.d.restorable_to(&pair.sigma, s) {
                self.anomaly(depth, format!("C2b {x}: D unrestorable"));
                return CycleOutcome::Continue;
            }
            if let Err(err) = self.restore(depth, &pair.sigma) {
                self.anomaly(depth, format!("C2b {x}: {err}"));
                return CycleOutcome::Continue;
            }
            return CycleOutcome::DcFound {
                x,
                sigma: pair.sigma,
            };
        }

        let x = self.n_state_ref(depth).cycles[k].delta.len();
        self.emit(depth, Item::C2a { x });
        // Only below ℓ is Ψ^σ(y) = W(y) known for the pair being defined.
        for y in x..s.min(ell + 1) {
            let value = self.env.w(e).contains(&y);
            let old = self.n_state_ref(depth).cycles[k]
                .delta
                .pairs
                .get(&y)
                .cloned();
            match old {
                Some(pair) if self.d.restorable_to(&pair.sigma, s) => {
                    let use_ = pair.tau.len();
                    let tau = BinarySegment::restrict(self.d.lachlan().codes(), use_);
                    self.delta(depth, k).push(
                        value,
                        DiagPair {
                            sigma: pair.sigma,
                            tau,
                        },
                    );
                    self.emit(depth, Item::C2ai { y, value, use_ });
                }
                _ => {
                    let psi = self
                        .env
                        .store
                        .evaluate(Role::Psi, e, self.d.members(), y, s);
                    let Some((_, psi_use)) = psi else {
                        self.emit(depth, Item::C2aSkip { y });
                        break;
                    };
                    let z = self.code_bound;
                    let sigma = BinarySegment::restrict(self.d.members(), psi_use);
                    let tau = BinarySegment::restrict(self.d.lachlan().codes(), z);
                    self.delta(depth, k).push(value, DiagPair { sigma, tau });
                    self.emit(
                        depth,
                        Item::C2aii {
                            y,
                            value,
                            use_: z,
                            psi_use,
                        },
                    );
                }
            }
        }
        self.emit(depth, Item::C2aEnd);
        CycleOutcome::Continue
    }
}

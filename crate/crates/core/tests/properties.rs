mod common;

use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;

use dce_core::functional::{agreement_length, AgreementTracker, AxiomStore, Role};
use dce_core::scheduler::run_construction;
use dce_core::sets::{BinarySegment, ChangeHistory, ChangeKind, LachlanView};
use dce_core::trace::{Item, Record, Trace};
use dce_core::verifier::{verify_trace, Status};

fn kind(enumerate: bool) -> ChangeKind {
    if enumerate {
        ChangeKind::Enumerate
    } else {
        ChangeKind::Extract
    }
}

/// Applies `(x, enumerate?, stage step)` requests, keeping the accepted ones.
fn history(ops: &[(u64, bool, u64)]) -> (ChangeHistory, u64) {
    let mut h = ChangeHistory::new();
    let mut s = 1;
    for &(x, e, step) in ops {
        s += step;
        let _ = h.apply_change(x, kind(e), s);
    }
    (h, s)
}

fn ops() -> impl Strategy<Value = Vec<(u64, bool, u64)>> {
    prop::collection::vec((0u64..24, any::<bool>(), 0u64..3), 0..80)
}

fn segment() -> impl Strategy<Value = BinarySegment> {
    prop::collection::vec(any::<bool>(), 0..10).prop_map(|b| BinarySegment::from_bits(&b))
}

proptest! {
    #[test]
    fn changes_alternate_and_stop_at_two(ops in ops()) {
        let (h, _) = history(&ops);
        let mut per: BTreeMap<u64, Vec<ChangeKind>> = BTreeMap::new();
        for c in h.events() {
            per.entry(c.element).or_default().push(c.kind);
        }
        for (x, kinds) in per {
            prop_assert!(kinds.len() <= 2);
            prop_assert_eq!(kinds[0], ChangeKind::Enumerate);
            if kinds.len() == 2 {
                prop_assert_eq!(kinds[1], ChangeKind::Extract);
            }
            prop_assert_eq!(h.total_changes(x) as usize, kinds.len());
        }
    }

    #[test]
    fn lachlan_view_equals_recomputation(ops in ops()) {
        let (h, last) = history(&ops);
        for s in 0..=last {
            prop_assert_eq!(h.lachlan().codes_at(s), LachlanView::recompute(h.events(), s));
        }
    }

    #[test]
    fn membership_only_moves_at_events(ops in ops()) {
        let (h, last) = history(&ops);
        for x in 0..24 {
            let mut member = false;
            for s in 0..=last {
                for c in h.events().iter().filter(|c| c.element == x && c.stage == s) {
                    member = c.kind == ChangeKind::Enumerate;
                }
                prop_assert_eq!(h.membership(x, s), member);
            }
        }
    }

    #[test]
    fn restoration_reproduces_sigma(ops in ops(), sigma in segment()) {
        let (mut h, last) = history(&ops);
        if h.restore_to(&sigma, last + 1).is_ok() {
            prop_assert!(sigma.is_prefix_of_set(h.members()));
            prop_assert_eq!(h.segment_at(sigma.len(), last + 1), sigma);
        }
    }

    #[test]
    fn accepted_axioms_never_clash(
        adds in prop::collection::vec((segment(), 0u64..4, any::<bool>(), 1u64..20), 0..40),
    ) {
        let mut store = AxiomStore::new();
        for (seg, input, out, stage) in adds {
            let _ = store.add_axiom(Role::Psi, 0, seg, input, out, stage);
        }
        for input in 0..4 {
            let list = store.axioms(Role::Psi, 0, input);
            for (i, a) in list.iter().enumerate() {
                for b in &list[i + 1..] {
                    prop_assert!(a.output == b.output || !a.segment.comparable(&b.segment));
                }
            }
        }
    }

    #[test]
    fn evaluation_is_monotone_in_stage(
        adds in prop::collection::vec((segment(), 0u64..4, any::<bool>(), 1u64..20), 0..40),
        oracle in prop::collection::btree_set(0u64..10, 0..10),
    ) {
        let mut store = AxiomStore::new();
        for (seg, input, out, stage) in adds {
            let _ = store.add_axiom(Role::Theta, 1, seg, input, out, stage);
        }
        for input in 0..4 {
            let mut seen = None;
            for s in 0..25 {
                let v = store.evaluate(Role::Theta, 1, &oracle, input, s);
                if seen.is_some() {
                    prop_assert_eq!(v, seen);
                }
                if v.is_some() {
                    seen = v;
                }
            }
        }
    }

    #[test]
    fn incremental_agreement_matches_scan(
        adds in prop::collection::vec((segment(), 0u64..8, any::<bool>()), 0..60),
        target in prop::collection::btree_set(0u64..8, 0..8),
        flips in prop::collection::vec(0u64..10, 0..8),
    ) {
        let mut store = AxiomStore::new();
        for (seg, input, out) in adds {
            let _ = store.add_axiom(Role::Psi, 0, seg, input, out, 1);
        }
        let mut oracle: BTreeSet<u64> = BTreeSet::new();
        let mut tracker = AgreementTracker::new();
        let check = |oracle: &BTreeSet<u64>, x: u64| {
            store
                .evaluate(Role::Psi, 0, oracle, x, 1)
                .filter(|&(y, _)| y == target.contains(&x))
                .map(|(_, u)| u)
        };
        for p in flips {
            let scan = agreement_length(&store, Role::Psi, 0, &oracle, |x| target.contains(&x), 1);
            prop_assert_eq!(tracker.advance(|x| check(&oracle, x)), scan);
            if !oracle.remove(&p) {
                oracle.insert(p);
            }
            tracker.oracle_changed(p);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn short_runs_pass_every_check(seed in 0u64..10_000, horizon in 50u64..400) {
        let cfg = common::mixed(seed, horizon);
        let trace = run_construction(&cfg).unwrap().into_trace();
        let report = verify_trace(&trace, Some(&cfg));
        prop_assert!(report.passed(), "{}", report);
        prop_assert_eq!(report.get("replay").unwrap().status, Status::Pass);
    }

    #[test]
    fn trace_text_round_trips(seed in 0u64..10_000, horizon in 20u64..200) {
        let trace = run_construction(&common::mixed(seed, horizon)).unwrap().into_trace();
        prop_assert_eq!(Trace::parse(&trace.to_text()).unwrap(), trace);
    }

    #[test]
    fn stages_follow_a_path_from_the_root(seed in 0u64..10_000, horizon in 20u64..300) {
        let cfg = common::mixed(seed, horizon);
        let trace = run_construction(&cfg).unwrap().into_trace();
        let mut stage = 0;
        let mut next = 0;
        let mut stopped = false;
        for rec in &trace.records {
            let Record::Event(ev) = rec else {
                if let Record::Stage(s) = rec {
                    stage = *s;
                    next = 0;
                    stopped = false;
                }
                continue;
            };
            prop_assert_eq!(ev.stage, stage);
            match ev.item {
                // Initializations hit the acting node (N1) or nodes below it.
                Item::Init { by } => prop_assert!(ev.node >= by),
                Item::Continue => {
                    prop_assert_eq!(ev.node, next);
                    next += 1;
                }
                Item::Stop => {
                    prop_assert_eq!(ev.node, next);
                    stopped = true;
                }
                _ => {
                    prop_assert!(!stopped, "node {} acted after a stop at stage {}", ev.node, stage);
                    prop_assert_eq!(ev.node, next);
                }
            }
        }
    }

    #[test]
    fn initialization_reaches_every_deeper_node(seed in 0u64..10_000, horizon in 20u64..300) {
        let cfg = common::mixed(seed, horizon);
        let trace = run_construction(&cfg).unwrap().into_trace();
        let mut inits: BTreeMap<(u64, u64), BTreeSet<u64>> = BTreeMap::new();
        for ev in trace.events() {
            if let Item::Init { by } = ev.item {
                inits.entry((ev.stage, by)).or_default().insert(ev.node);
            }
        }
        for ((stage, by), nodes) in inits {
            let below: BTreeSet<u64> = (by + 1..cfg.max_depth).collect();
            let with_self: BTreeSet<u64> = (by..cfg.max_depth).collect();
            prop_assert!(nodes == below || nodes == with_self, "stage {} by {}: {:?}", stage, by, nodes);
        }
    }
}

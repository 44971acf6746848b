#![allow(dead_code)]

use dce_core::config::{AdversarySpec, BehaviorSpec, KMachine, Mode, RunConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn behavior(rng: &mut ChaCha8Rng) -> BehaviorSpec {
    let mode = match rng.gen_range(0..10) {
        0..=4 => Mode::Faithful,
        5..=6 => Mode::Laggard,
        7..=8 => Mode::Chaotic,
        _ => Mode::Silent,
    };
    let mut b = BehaviorSpec::of(mode);
    b.period = rng.gen_range(2..12);
    b.rate = rng.gen_range(0.05..0.5);
    b.attack = [0.0, 0.25, 0.5, 1.0][rng.gen_range(0..4)];
    b
}

/// A depth-9 run whose adversaries mix faithful, laggard, chaotic and
/// silent behaviour, drawn from `seed`.
pub fn mixed(seed: u64, horizon: u64) -> RunConfig {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cfg = RunConfig::new(9, horizon);
    cfg.seed = seed;
    if rng.gen_bool(0.5) {
        cfg.k_machine = Some(KMachine {
            seed: rng.gen(),
            rate: rng.gen_range(0.001..0.02),
            bound: cfg.gamma_span,
        });
    } else {
        let mut t = 0;
        for k in (1..cfg.gamma_span).step_by(2) {
            t += rng.gen_range(20..400);
            if rng.gen_bool(0.7) {
                cfg.k_script.push((k, t));
            }
        }
    }
    for e in 0..3 {
        let mut a = AdversarySpec::silent(e);
        a.seed = rng.gen();
        a.psi = behavior(&mut rng);
        a.phi = behavior(&mut rng);
        a.theta = behavior(&mut rng);
        cfg.adversaries.push(a);
    }
    cfg
}

/// Faithful adversaries everywhere with Ψ attacks.
pub fn faithful(seed: u64, horizon: u64) -> RunConfig {
    let mut cfg = RunConfig::new(9, horizon);
    cfg.seed = seed;
    cfg.k_script = vec![(1, 50), (3, 200), (5, 400), (7, 900)];
    for e in 0..3 {
        let mut a = AdversarySpec::silent(e);
        a.seed = seed.wrapping_add(e);
        a.psi = BehaviorSpec::of(Mode::Faithful);
        a.psi.attack = 0.5;
        a.phi = BehaviorSpec::of(Mode::Faithful);
        a.theta = BehaviorSpec::of(Mode::Faithful);
        cfg.adversaries.push(a);
    }
    cfg
}

//! Forged traces, each breaking exactly one verifier check.

use std::path::PathBuf;

use dce_core::config::{AdversarySpec, BehaviorSpec, Mode, RunConfig};
use dce_core::scheduler::run_construction;
use dce_core::verifier::{verify_text, VerifierReport};

fn dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

fn base_config() -> RunConfig {
    let mut cfg = RunConfig::new(9, 100);
    cfg.seed = 5;
    cfg.k_script = vec![(1, 30), (3, 60)];
    for e in 0..3 {
        let mut a = AdversarySpec::silent(e);
        a.seed = 5 + e;
        a.psi = BehaviorSpec::of(Mode::Faithful);
        a.psi.attack = 0.5;
        a.phi = BehaviorSpec::of(Mode::Faithful);
        a.theta = BehaviorSpec::of(Mode::Faithful);
        cfg.adversaries.push(a);
    }
    cfg
}

fn fields(line: &str) -> Vec<&str> {
    line.split(' ').collect()
}

fn stage_line(lines: &[String], s: u64) -> usize {
    lines
        .iter()
        .position(|l| *l == format!("STG {s}"))
        .expect("stage present")
}

/// An extracted element changes twice more inside a restoration.
fn forge_dce(lines: &mut Vec<String>) {
    let i = lines
        .iter()
        .position(|l| l.starts_with("EVT") && fields(l)[4] == "C2b")
        .expect("a restoration");
    let j = (i..lines.len())
        .find(|&j| lines[j].starts_with("CHG") && lines[j].ends_with("Extract"))
        .expect("an extraction");
    let f = fields(&lines[j]);
    let (s, x) = (f[1].to_string(), f[2].to_string());
    let k = j + 2;
    lines.insert(k, format!("CHG {s} {x} Extract"));
    lines.insert(k, format!("CHG {s} {x} Enumerate"));
}

/// The first Lachlan entry is logged one stage late.
fn forge_lachlan(lines: &mut Vec<String>) {
    let i = lines
        .iter()
        .position(|l| l.starts_with("LCH"))
        .expect("an LCH record");
    let line = lines.remove(i);
    let f = fields(&line);
    let s: u64 = f[1].parse().unwrap();
    let moved = format!("LCH {} {} {} {}", s + 1, f[2], f[3], f[4]);
    let at = stage_line(lines, s + 1) + 1;
    lines.insert(at, moved);
}

/// P_0 is initialized once more than R_0.
fn forge_bounds(lines: &mut Vec<String>) {
    let last = lines
        .iter()
        .rev()
        .find(|l| l.starts_with("EVT"))
        .unwrap()
        .clone();
    let s = fields(&last)[1].to_string();
    let epoch = lines
        .iter()
        .filter(|l| l.starts_with("EVT") && fields(l)[2] == "2" && fields(l)[4] == "INIT")
        .count();
    lines.push(format!("EVT {s} 2 {} INIT 0", epoch + 1));
}

/// An argument with `Γ(x) = 0` enters K without Γ being corrected.
fn forge_agreements(lines: &mut Vec<String>) {
    let i = lines
        .iter()
        .position(|l| {
            l.starts_with("EVT")
                && fields(l)[2] == "1"
                && fields(l)[4] == "R3c"
                && fields(l)[5].parse::<u64>().unwrap() % 2 == 1
        })
        .expect("an odd R3c argument");
    let x = fields(&lines[i])[5].to_string();
    let end = (i..lines.len())
        .find(|&j| fields(&lines[j])[0] == "STG")
        .unwrap();
    let next: u64 = fields(&lines[end])[1].parse().unwrap();
    lines.insert(end + 1, format!("CEJ K {x} {next}"));
}

/// The last P5 enumeration never reaches D.
fn forge_outcomes(lines: &mut Vec<String>) {
    let i = lines
        .iter()
        .rposition(|l| l.starts_with("EVT") && fields(l)[4] == "P5")
        .expect("a P5 event");
    assert!(lines[i + 1].starts_with("CHG"));
    lines.remove(i + 1);
}

/// The trace stops halfway through the run.
fn forge_replay(lines: &mut Vec<String>) {
    let cut = stage_line(lines, 50);
    lines.truncate(cut);
}

type Forge = fn(&mut Vec<String>);

const FIXTURES: [(&str, Forge); 6] = [
    ("dce", forge_dce),
    ("lachlan", forge_lachlan),
    ("bounds", forge_bounds),
    ("agreements", forge_agreements),
    ("outcomes", forge_outcomes),
    ("replay", forge_replay),
];

fn load(name: &str) -> VerifierReport {
    let text =
        std::fs::read_to_string(dir().join(format!("{name}.trace"))).expect("fixture present");
    let cfg_path = dir().join(format!("{name}.toml"));
    let cfg = cfg_path
        .exists()
        .then(|| RunConfig::load(&cfg_path).unwrap());
    verify_text(&text, cfg.as_ref())
}

#[test]
#[ignore = "rewrites the bundled fixtures"]
fn regenerate_fixtures() {
    let cfg = base_config();
    let text = run_construction(&cfg).unwrap().into_trace().to_text();
    let base = verify_text(&text, Some(&cfg));
    assert!(base.passed(), "{base}");
    for (name, forge) in FIXTURES {
        let mut lines: Vec<String> = text.lines().map(str::to_string).collect();
        forge(&mut lines);
        let mut out = lines.join("\n");
        out.push('\n');
        std::fs::write(dir().join(format!("{name}.trace")), out).unwrap();
        if name == "replay" {
            std::fs::write(dir().join("replay.toml"), cfg.to_toml()).unwrap();
        }
    }
}

#[test]
fn base_run_is_clean() {
    let cfg = base_config();
    let text = run_construction(&cfg).unwrap().into_trace().to_text();
    let report = verify_text(&text, Some(&cfg));
    assert!(report.passed(), "{report}");
}

fn only(name: &str) {
    let report = load(name);
    assert_eq!(report.failing(), vec![name], "{report}");
    let locus = report
        .get(name)
        .unwrap()
        .locus
        .as_ref()
        .expect("a failing check has a locus");
    assert!(!locus.expected.is_empty());
}

#[test]
fn dce_fixture_fails_only_dce() {
    only("dce");
}

#[test]
fn lachlan_fixture_fails_only_lachlan() {
    only("lachlan");
}

#[test]
fn bounds_fixture_fails_only_bounds() {
    only("bounds");
}

#[test]
fn agreements_fixture_fails_only_agreements() {
    only("agreements");
}

#[test]
fn outcomes_fixture_fails_only_outcomes() {
    only("outcomes");
}

#[test]
fn replay_fixture_fails_only_replay() {
    only("replay");
}

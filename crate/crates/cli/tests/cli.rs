use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use dce_cli::{summary_table, CellResult, Grid, RunManifest};
use dce_core::config::RunConfig;

fn workspace() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn example() -> PathBuf {
    workspace().join("configs/example.toml")
}

fn sim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dce-sim"))
        .args(args)
        .output()
        .unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn example_config_runs() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("ex.trace");
    let o = sim(&["run", "--config", s(&example()), "--trace-out", s(&trace)]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert!(!fs::read_to_string(&trace).unwrap().is_empty());
    let m = RunManifest::from_toml(&stdout(&o)).unwrap();
    assert_eq!(
        m.config_digest,
        RunConfig::load(&example()).unwrap().digest()
    );
}

#[test]
fn missing_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = sim(&[
        "run",
        "--config",
        s(&dir.path().join("none.toml")),
        "--trace-out",
        s(&dir.path().join("t")),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("cannot read"));
}

#[test]
fn invalid_config_exits_nonzero_with_message() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "maxDepth = 0\nhorizon = 10\n").unwrap();
    let o = sim(&[
        "run",
        "--config",
        s(&cfg),
        "--trace-out",
        s(&dir.path().join("t")),
    ]);
    assert_ne!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stderr).contains("maxDepth"));
}

#[test]
fn manifest_counts_match_the_trace_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("big.toml");
    let text = fs::read_to_string(example())
        .unwrap()
        .replace("horizon = 2000", "horizon = 10000");
    fs::write(&cfg, text).unwrap();
    let trace = dir.path().join("big.trace");
    let o = sim(&["run", "--config", s(&cfg), "--trace-out", s(&trace)]);
    assert_eq!(o.status.code(), Some(0));
    let m = RunManifest::from_toml(&stdout(&o)).unwrap();
    let body = fs::read_to_string(&trace).unwrap();
    let tag = |t: &str| body.lines().filter(|l| l.starts_with(t)).count() as u64;
    assert_eq!(
        m.counts.lines,
        body.bytes().filter(|&b| b == b'\n').count() as u64
    );
    assert_eq!(m.counts.stages, tag("STG "));
    assert_eq!(m.counts.stages, 10_000);
    assert_eq!(m.counts.events, tag("EVT "));
    let inits = body
        .lines()
        .filter(|l| l.starts_with("EVT ") && l.split(' ').nth(4) == Some("INIT"))
        .count();
    assert_eq!(m.counts.initializations, inits as u64);
    assert_eq!((m.horizon, m.max_depth), (10_000, 9));
}

#[test]
fn seed_override_keeps_the_digest_honest() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("t.trace");
    let o = sim(&[
        "run",
        "--config",
        s(&example()),
        "--trace-out",
        s(&trace),
        "--seed",
        "77",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let m = RunManifest::from_toml(&stdout(&o)).unwrap();
    let used = RunConfig::load(Path::new(&m.config)).unwrap();
    assert_eq!(used.seed, 77);
    assert_eq!(used.digest(), m.config_digest);
    let v = sim(&["verify", "--trace", s(&trace), "--config", &m.config]);
    assert_eq!(v.status.code(), Some(0), "{}", stdout(&v));
}

#[test]
fn fresh_run_verifies() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("t.trace");
    let report = dir.path().join("t.report");
    let o = sim(&[
        "run",
        "--config",
        s(&example()),
        "--trace-out",
        s(&trace),
        "--report-out",
        s(&report),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(fs::read_to_string(&report)
        .unwrap()
        .contains("SUMMARY checks=9 fail=0"));
    let v = sim(&["verify", "--trace", s(&trace), "--config", s(&example())]);
    assert_eq!(v.status.code(), Some(0), "{}", stdout(&v));
    assert!(stdout(&v).contains("CHK replay PASS"));
}

#[test]
fn forged_fixture_fails() {
    let fixture = workspace().join("crates/core/tests/fixtures/dce.trace");
    let v = sim(&["verify", "--trace", s(&fixture)]);
    assert_eq!(v.status.code(), Some(1));
    assert!(stdout(&v).contains("CHK dce FAIL"));
}

#[test]
fn truncated_trace_fails_replay() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("t.trace");
    sim(&["run", "--config", s(&example()), "--trace-out", s(&trace)]);
    let body = fs::read_to_string(&trace).unwrap();
    let keep: Vec<&str> = body.lines().take(body.lines().count() / 2).collect();
    fs::write(&trace, keep.join("\n") + "\n").unwrap();
    let v = sim(&["verify", "--trace", s(&trace), "--config", s(&example())]);
    assert_eq!(v.status.code(), Some(1));
    assert!(stdout(&v).contains("CHK replay FAIL"));
}

#[test]
fn unreadable_trace_exits_2() {
    let v = sim(&["verify", "--trace", "/nonexistent/trace"]);
    assert_eq!(v.status.code(), Some(2));
}

#[test]
fn exit_code_depends_only_on_the_report() {
    let fixture = workspace().join("crates/core/tests/fixtures/agreements.trace");
    let a = sim(&["verify", "--trace", s(&fixture)]);
    let b = sim(&["verify", "--trace", s(&fixture)]);
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.status.code(), b.status.code());
    let failed = stdout(&a)
        .lines()
        .any(|l| l.starts_with("CHK ") && l.split(' ').nth(2) == Some("FAIL"));
    assert_eq!(a.status.code(), Some(failed as i32));
}

fn sweep(grid: &str) -> (tempfile::TempDir, Output) {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("grid.toml");
    fs::write(&path, grid).unwrap();
    let out = dir.path().join("out");
    let o = sim(&["sweep", "--grid", s(&path), "--out", s(&out)]);
    (dir, o)
}

fn manifests(out: &Path) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = fs::read_dir(out.join("cells"))
        .unwrap()
        .map(|e| e.unwrap().path().join("manifest.toml"))
        .filter(|p| p.exists())
        .collect();
    v.sort();
    v
}

#[test]
fn two_by_two_grid_gives_four_manifests() {
    let (dir, o) = sweep("maxDepth = [3, 6]\nhorizon = [100, 200]\nseeds = [1]\n");
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let out = dir.path().join("out");
    assert_eq!(manifests(&out).len(), 4);
    for m in manifests(&out) {
        let m = RunManifest::from_toml(&fs::read_to_string(m).unwrap()).unwrap();
        assert_eq!(m.status.as_deref(), Some("PASS"));
        assert_eq!(
            RunConfig::load(Path::new(&m.config)).unwrap().digest(),
            m.config_digest
        );
    }
    assert_eq!(
        fs::read_to_string(out.join("cells.tsv"))
            .unwrap()
            .lines()
            .count(),
        5
    );
}

#[test]
fn empty_grid_exits_2() {
    let (_dir, o) = sweep("maxDepth = [9]\nhorizon = []\nseeds = [1]\n");
    assert_eq!(o.status.code(), Some(2));
}

/// Recounts Phase-2 entries of the `N_2`-node (depth 6) per epoch from the
/// raw trace lines.
fn cyc2(trace: &str) -> u64 {
    let mut per: HashMap<&str, u64> = HashMap::new();
    for l in trace.lines() {
        let f: Vec<&str> = l.split(' ').collect();
        if f.len() > 4 && f[0] == "EVT" && f[2] == "6" && f[4] == "N4phase2" {
            *per.entry(f[3]).or_default() += 1;
        }
    }
    per.values().copied().max().unwrap_or(0)
}

#[test]
fn twenty_seed_sweep_respects_the_cycle_bound() {
    let (dir, o) =
        sweep("maxDepth = [9]\nhorizon = [1500]\nmix = [\"mixed\"]\nseedRange = [1, 20]\n");
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let out = dir.path().join("out");
    let observed = fs::read_dir(out.join("cells"))
        .unwrap()
        .map(|e| cyc2(&fs::read_to_string(e.unwrap().path().join("trace.txt")).unwrap()))
        .max()
        .unwrap();
    assert!(observed <= 4);
    let summary = fs::read_to_string(out.join("summary.tsv")).unwrap();
    let row: Vec<&str> = summary
        .lines()
        .find(|l| l.split('\t').nth(3) == Some("2"))
        .unwrap()
        .split('\t')
        .collect();
    assert_eq!(row[6], observed.to_string());
    assert_eq!(row[7], "4");
}

#[test]
fn summary_recombines_the_cell_reports() {
    let grid_text = "maxDepth = [6, 9]\nhorizon = [300]\nmix = [\"faithful\", \"chaotic\"]\nseedRange = [1, 3]\n";
    let (dir, o) = sweep(grid_text);
    assert_eq!(o.status.code(), Some(0));
    let out = dir.path().join("out");
    let grid = Grid::from_toml(grid_text).unwrap();
    let results: Vec<CellResult> = grid
        .cells()
        .into_iter()
        .map(|c| {
            let text =
                fs::read_to_string(out.join("cells").join(c.id()).join("report.txt")).unwrap();
            CellResult::from_report(c, &text)
        })
        .collect();
    assert_eq!(
        summary_table(&results),
        fs::read_to_string(out.join("summary.tsv")).unwrap()
    );
}

//! The `dce-sim` commands: `run`, `verify` and `sweep`.
//!
//! Each command returns its exit status; an `Err` means the inputs could
//! not be read or the outputs written, which the binary maps to status 2.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Context;
use rayon::prelude::*;

use dce_core::config::RunConfig;
use dce_core::scheduler::run_construction;
use dce_core::verifier::{f_closed, gh_closed, verify_text, verify_trace, VerifierReport};

pub mod grid;
pub mod manifest;

pub use grid::{cell_config, Cell, Grid, Mix};
pub use manifest::{Counts, RunManifest};

pub const EXIT_OK: u8 = 0;
pub const EXIT_FAIL: u8 = 1;
pub const EXIT_IO: u8 = 2;

/// Exit status for a verifier report.
pub fn exit_status(report: &VerifierReport) -> u8 {
    if report.passed() {
        EXIT_OK
    } else {
        EXIT_FAIL
    }
}

fn write(path: &Path, text: &str) -> anyhow::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    }
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

/// Runs `cfg`, writes its trace and, if asked, its verifier report.
fn run_one(
    cfg: &RunConfig,
    config_path: &Path,
    trace_out: &Path,
    report_out: Option<&Path>,
) -> anyhow::Result<(RunManifest, Option<VerifierReport>)> {
    let start = Instant::now();
    let trace = run_construction(cfg)?.into_trace();
    let ms = start.elapsed().as_millis() as u64;
    write(trace_out, &trace.to_text())?;
    let manifest = RunManifest::new(cfg, config_path, trace_out, &trace, ms);
    let Some(path) = report_out else {
        return Ok((manifest, None));
    };
    let report = verify_trace(&trace, Some(cfg));
    write(path, &format!("{report}\n"))?;
    Ok((manifest.verified(path, &report), Some(report)))
}

/// `run`: prints the manifest. `seed` overrides the config's seed; the
/// config actually used is then written next to the trace.
pub fn cmd_run(
    config: &Path,
    trace_out: &Path,
    seed: Option<u64>,
    report_out: Option<&Path>,
) -> anyhow::Result<u8> {
    let mut cfg = RunConfig::load(config)?;
    let mut config_path = config.to_path_buf();
    if let Some(seed) = seed.filter(|&s| s != cfg.seed) {
        cfg.seed = seed;
        config_path = sibling(trace_out, "config.toml");
        write(&config_path, &cfg.to_toml())?;
    }
    let (manifest, report) = run_one(&cfg, &config_path, trace_out, report_out)?;
    print!("{}", manifest.to_toml());
    Ok(report.as_ref().map_or(EXIT_OK, exit_status))
}

fn sibling(path: &Path, ext: &str) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".");
    name.push(ext);
    path.with_file_name(name)
}

/// `verify`: prints the report. Without a config, replay is informational.
pub fn cmd_verify(trace: &Path, config: Option<&Path>) -> anyhow::Result<u8> {
    let text =
        fs::read_to_string(trace).with_context(|| format!("cannot read {}", trace.display()))?;
    let cfg = config.map(RunConfig::load).transpose()?;
    let report = verify_text(&text, cfg.as_ref());
    println!("{report}");
    Ok(exit_status(&report))
}

/// The outcome of one sweep cell, recovered from its report text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellResult {
    pub cell: Cell,
    /// `PASS`, `FAIL`, or `ERROR` when the cell could not run.
    pub status: String,
    pub failing: Vec<String>,
    /// Statistics of the `bounds` check (`cyc0`, `f0`, `g0`, `h0`, ...).
    pub bounds: BTreeMap<String, u64>,
}

impl CellResult {
    /// Reads a report as printed by the verifier.
    pub fn from_report(cell: Cell, text: &str) -> Self {
        let mut failing = Vec::new();
        let mut bounds = BTreeMap::new();
        for line in text.lines() {
            let mut tok = line.split_whitespace();
            if tok.next() != Some("CHK") {
                continue;
            }
            let (Some(name), Some(status)) = (tok.next(), tok.next()) else {
                continue;
            };
            if status == "FAIL" {
                failing.push(name.to_string());
            }
            if name != "bounds" {
                continue;
            }
            for (k, v) in tok.filter_map(|t| t.split_once('=')) {
                let counter = ["cyc", "f", "g", "h"].iter().any(|p| {
                    k.strip_prefix(p)
                        .is_some_and(|n| !n.is_empty() && n.bytes().all(|b| b.is_ascii_digit()))
                });
                if let (true, Ok(v)) = (counter, v.parse()) {
                    bounds.insert(k.to_string(), v);
                }
            }
        }
        let status = if failing.is_empty() { "PASS" } else { "FAIL" }.to_string();
        Self {
            cell,
            status,
            failing,
            bounds,
        }
    }

    fn error(cell: Cell, err: &anyhow::Error) -> Self {
        Self {
            cell,
            status: "ERROR".into(),
            failing: vec![format!("{err:#}").replace(['\t', '\n'], " ")],
            bounds: BTreeMap::new(),
        }
    }
}

fn run_cell(grid: &Grid, cell: &Cell, out: &Path) -> anyhow::Result<CellResult> {
    let dir = out.join("cells").join(cell.id());
    let cfg = grid.config(cell);
    let config_path = dir.join("config.toml");
    write(&config_path, &cfg.to_toml())?;
    let report_path = dir.join("report.txt");
    let (manifest, _) = run_one(
        &cfg,
        &config_path,
        &dir.join("trace.txt"),
        Some(&report_path),
    )?;
    write(&dir.join("manifest.toml"), &manifest.to_toml())?;
    let text = fs::read_to_string(&report_path)?;
    Ok(CellResult::from_report(cell.clone(), &text))
}

/// Per-cell statuses, one row per cell.
pub fn cells_table(results: &[CellResult]) -> String {
    let mut s = String::from("cell\tmaxDepth\thorizon\tmix\tseed\tstatus\tfailing\n");
    for r in results {
        let c = &r.cell;
        let failing = if r.failing.is_empty() {
            "-".to_string()
        } else {
            r.failing.join(",")
        };
        s += &format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{failing}\n",
            c.id(),
            c.max_depth,
            c.horizon,
            c.mix,
            c.seed,
            r.status
        );
    }
    s
}

/// Observed maxima of `cycCount(e)` and of the initialization counts per
/// `(maxDepth, horizon, mix)` group, next to the bounds `2^e`, `2^{e^2}`
/// and `e(2^e+1)2^{e^2}`.
pub fn summary_table(results: &[CellResult]) -> String {
    let mut groups: BTreeMap<(u64, u64, Mix), Vec<&CellResult>> = BTreeMap::new();
    for r in results {
        groups
            .entry((r.cell.max_depth, r.cell.horizon, r.cell.mix))
            .or_default()
            .push(r);
    }
    let mut s = String::from("maxDepth\thorizon\tmix\te\truns\tfailed\tcycMax\tcycBound\tfMax\tfBound\tgMax\thMax\tghBound\n");
    for ((depth, horizon, mix), rs) in groups {
        let failed = rs.iter().filter(|r| r.status != "PASS").count();
        let max = |key: String| {
            rs.iter()
                .filter_map(|r| r.bounds.get(&key))
                .max()
                .map_or_else(|| "-".to_string(), |v| v.to_string())
        };
        for e in 0..depth.div_ceil(3) {
            s += &format!(
                "{depth}\t{horizon}\t{mix}\t{e}\t{}\t{failed}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
                rs.len(),
                max(format!("cyc{e}")),
                1u128 << e.min(127),
                max(format!("f{e}")),
                f_closed(e),
                max(format!("g{e}")),
                max(format!("h{e}")),
                gh_closed(e),
            );
        }
    }
    s
}

/// `sweep`: runs every cell (in parallel), writes `cells/<id>/` with
/// config, trace, report and manifest, then `cells.tsv` and `summary.tsv`.
pub fn cmd_sweep(grid_path: &Path, out: &Path) -> anyhow::Result<u8> {
    let text = fs::read_to_string(grid_path)
        .with_context(|| format!("cannot read {}", grid_path.display()))?;
    let grid = Grid::from_toml(&text)?;
    let cells = grid.cells();
    if cells.is_empty() {
        anyhow::bail!("grid {} has no cells", grid_path.display());
    }
    let results: Vec<CellResult> = cells
        .par_iter()
        .map(|c| run_cell(&grid, c, out).unwrap_or_else(|e| CellResult::error(c.clone(), &e)))
        .collect();
    let cells_tsv = cells_table(&results);
    let summary = summary_table(&results);
    write(&out.join("cells.tsv"), &cells_tsv)?;
    write(&out.join("summary.tsv"), &summary)?;
    for r in results.iter().filter(|r| r.status != "PASS") {
        eprintln!("{} {} {}", r.cell.id(), r.status, r.failing.join(","));
    }
    print!("{summary}");
    Ok(if results.iter().all(|r| r.status == "PASS") {
        EXIT_OK
    } else {
        EXIT_FAIL
    })
}

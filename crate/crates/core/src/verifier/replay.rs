use super::{CheckReport, Locus};
use crate::config::RunConfig;
use crate::scheduler::run_construction;

/// The stage of the last `STG` line strictly before line `n`.
fn stage_before(text: &str, n: usize) -> Option<u64> {
    text.lines()
        .take(n)
        .filter_map(|l| l.strip_prefix("STG "))
        .last()
        .and_then(|s| s.trim().parse().ok())
}

fn header_digest(text: &str) -> Option<&str> {
    let line = text.lines().next()?;
    let mut f = line.split_whitespace();
    (f.next()? == "HDR").then_some(())?;
    f.nth(3)
}

/// Re-runs the configuration and compares the traces byte for byte.
pub fn check_replay(text: &str, config: Option<&RunConfig>) -> CheckReport {
    let mut r = CheckReport::new("replay");
    let Some(config) = config else {
        r.info("no config supplied, replay skipped");
        return r;
    };
    let fresh = match run_construction(config) {
        Ok(c) => c.into_trace().to_text(),
        Err(err) => {
            r.fail(Locus::default().want("a runnable config", err));
            return r;
        }
    };
    r.set("bytes", fresh.len() as u64);
    if fresh == text {
        return r;
    }
    let n = fresh
        .lines()
        .zip(text.lines())
        .position(|(a, b)| a != b)
        .unwrap_or_else(|| fresh.lines().count().min(text.lines().count()));
    let want = fresh.lines().nth(n).unwrap_or("end of trace");
    let got = text.lines().nth(n).unwrap_or("end of trace");
    let locus = Locus {
        stage: stage_before(text, n),
        element: Some(n as u64 + 1),
        ..Locus::default()
    }
    .want(want, got);
    if header_digest(text) != Some(config.digest().as_str()) {
        r.info(format!(
            "config differs from the trace header; first difference at line {}",
            n + 1
        ));
    } else {
        r.fail(locus);
    }
    r
}

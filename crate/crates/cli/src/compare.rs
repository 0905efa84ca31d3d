//! `compare`: tabulate reports and check them against the per-algorithm acceptance thresholds.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use ccstream::{Error, Result};

use crate::run::{Algorithm, RunReport, Status, SCHEMA_VERSION};

/// Acceptance criterion number and the fraction of runs that must meet their guarantee.
pub fn criterion(a: Algorithm) -> Option<(u32, f64)> {
    Some(match a {
        Algorithm::BilinearQuery => (1, 0.95),
        Algorithm::ClusterRepair => (2, 1.0),
        Algorithm::GgMaxagreeK | Algorithm::GgMindisagree2 => (4, 0.9),
        Algorithm::Multicut => (6, 1.0),
        Algorithm::MindisagreeLp => (7, 1.0),
        Algorithm::MaxagreeSdp => (8, 0.9),
        Algorithm::PivotLoglog => (9, 1.0),
        Algorithm::GgMindisagreeK => (10, 0.8),
        Algorithm::BruteForce => return None,
    })
}

/// Report files from the given paths; directories contribute their `*.json` files.
pub fn collect(paths: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut files: Vec<PathBuf> = fs::read_dir(p)?
                .map(|e| e.map(|e| e.path()))
                .collect::<std::io::Result<_>>()?;
            files.retain(|f| f.extension().is_some_and(|x| x == "json"));
            files.sort();
            out.extend(files);
        } else {
            out.push(p.clone());
        }
    }
    Ok(out)
}

pub fn load(path: &Path) -> Result<RunReport> {
    let text = fs::read_to_string(path)?;
    let v: serde_json::Value = serde_json::from_str(&text)?;
    let version = v.get("schema_version").and_then(|x| x.as_u64());
    if version != Some(SCHEMA_VERSION as u64) {
        return Err(Error::InvalidInput(format!(
            "{}: schema version {version:?}, expected {SCHEMA_VERSION}",
            path.display()
        )));
    }
    serde_json::from_value(v).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))
}

fn cell(x: Option<f64>) -> String {
    x.map_or("-".into(), |v| format!("{v:.4}"))
}

pub fn row(name: &str, r: &RunReport) -> String {
    format!(
        "{name:<28} {:<18} {:>6} {:>10} {:>10} {:>8} {:>4}/{:<4} {:>10} {:?}",
        r.algorithm.name(),
        r.n,
        cell(r.value),
        cell(r.oracle),
        cell(r.ratio),
        r.passes,
        r.pass_bound.map_or("-".into(), |b| b.to_string()),
        r.state_words,
        r.status,
    )
}

/// The table followed by one verdict line per criterion present.
pub fn summarize(reports: &[(String, RunReport)]) -> String {
    let mut s = String::new();
    if reports.is_empty() {
        return s;
    }
    let _ = writeln!(
        s,
        "{:<28} {:<18} {:>6} {:>10} {:>10} {:>8} {:>9} {:>10} status",
        "report", "algorithm", "n", "value", "oracle", "ratio", "passes", "state"
    );
    for (name, r) in reports {
        let _ = writeln!(s, "{}", row(name, r));
    }
    let mut groups: BTreeMap<(u32, String), Vec<&RunReport>> = BTreeMap::new();
    for (_, r) in reports {
        if let Some((c, _)) = criterion(r.algorithm) {
            groups.entry((c, r.algorithm.name())).or_default().push(r);
        }
    }
    for ((c, name), rs) in groups {
        let need = criterion(rs[0].algorithm).expect("grouped by criterion").1;
        let total = rs.len();
        let ok_runs = rs.iter().filter(|r| r.status == Status::Ok).count();
        let met = rs.iter().filter(|r| r.within_guarantee() == Some(true)).count();
        let checked = rs.iter().filter(|r| r.within_guarantee().is_some()).count();
        let passes_ok = rs.iter().all(|r| r.within_pass_bound() != Some(false));
        let worst = rs
            .iter()
            .filter_map(|r| Some(r.guarantee?.margin(r.ratio?)))
            .fold(f64::INFINITY, f64::min);
        let frac = if checked == 0 { 1.0 } else { met as f64 / checked as f64 };
        let pass = ok_runs == total && passes_ok && frac >= need;
        let margin = if worst.is_finite() { format!("{worst:+.4}") } else { "-".into() };
        let _ = writeln!(
            s,
            "criterion {c:>2} {name}: {met}/{checked} within guarantee (need {:.0}%), {ok_runs}/{total} ok, pass bounds {}, worst margin {margin}: {}",
            need * 100.0,
            if passes_ok { "held" } else { "broken" },
            if pass { "PASS" } else { "FAIL" }
        );
    }
    s
}

//! Report rendering, standalone scoring and file discovery behind the
//! `molpilot` binary.

use std::fmt::Write;
use std::path::{Path, PathBuf};

use molpilot_chem::scoring::{diversity, is_high_quality, Property, TargetThresholds};
use molpilot_chem::smiles::parse_smiles_line;
use molpilot_chem::Fingerprint;
use molpilot_core::docking::Docker;
use molpilot_core::evaluate::Evaluator;
use molpilot_core::prompt::history_line;
use molpilot_core::runlog::{replay, MoleculeRecord, RunLog};
use molpilot_core::screener::{MoleculeTable, Row};
use molpilot_core::target::{TargetError, TargetSpec};

pub fn log_file_name(target: &str, seed: u64) -> String {
    format!("{target}-seed{seed}.ndjson")
}

pub fn report_file_name(target: &str, seed: u64) -> String {
    format!("{target}-seed{seed}.txt")
}

/// All five values of one molecule with the threshold each is held to.
pub fn property_card(m: &MoleculeRecord, t: &TargetThresholds) -> String {
    let mut out = format!("{}  {}\n", m.id, m.smiles);
    for prop in Property::ALL {
        let op = if prop.lower_is_better() { "<=" } else { ">=" };
        let verdict = if prop.passes(&m.profile, t) { "pass" } else { "FAIL" };
        let _ = writeln!(
            out,
            "  {:<4} {:>8.3}  {op} {:>8.3}  {verdict}",
            prop.name().to_ascii_uppercase(),
            prop.value(&m.profile),
            prop.threshold(t)
        );
    }
    let hq = if is_high_quality(&m.profile, t) { "yes" } else { "no" };
    let _ = writeln!(out, "  high quality: {hq}");
    out
}

/// Human-readable summary of one run, built from its log.
pub fn render_report(log: &RunLog) -> String {
    let h = &log.header;
    let mut out = String::new();
    let _ = writeln!(out, "target {}  seed {}  policy {}  run {}", h.target, h.seed, h.policy, h.run_id);
    match log.outcome() {
        Some(o) => {
            let _ = writeln!(out, "outcome: {o}");
        }
        None => out.push_str("outcome: missing (log is incomplete)\n"),
    }
    if let Some(err) = log.events.iter().rev().find_map(|e| match &e.payload {
        molpilot_core::runlog::EventPayload::Outcome { error: Some(err), .. } => Some(err.clone()),
        _ => None,
    }) {
        let _ = writeln!(out, "error: {err}");
    }
    let Some(req) = log.requirements() else { return out };
    let _ = writeln!(out, "requirements: {req}");

    out.push_str("\ntrajectory:\n");
    for a in log.actions() {
        let source = match a.source {
            molpilot_core::memory::ActionSource::Llm => "llm",
            molpilot_core::memory::ActionSource::Fallback => "fallback",
        };
        let _ = writeln!(out, "  [{source}] {}", history_line(a));
    }
    if let Some(e) = log.evaluations().last() {
        if !e.verdict.satisfied {
            let _ = writeln!(out, "last gate: {}", e.verdict.failing_reasons.join("; "));
        }
    }

    let rp = replay(log);
    let pool = rp.pool_records();
    let _ = writeln!(out, "\nfinal pool ({} molecules, {} in inventory):", pool.len(), rp.molecules.len());
    let fps: Vec<Fingerprint> =
        pool.iter().filter_map(|m| molpilot_chem::parse_smiles(&m.smiles).ok()).map(|g| molpilot_chem::default_fingerprint(&g)).collect();
    match diversity(&fps.iter().collect::<Vec<_>>()) {
        Ok(d) => {
            let _ = writeln!(out, "diversity {d:.3} (need >= {:.2})", req.dvs_min);
        }
        Err(_) => out.push_str("diversity undefined\n"),
    }
    for m in pool {
        out.push('\n');
        out.push_str(&property_card(m, &req.thresholds));
    }
    out
}

/// Scores every SMILES line against a target. Returns the CSV (screening
/// columns plus an HQ flag and the set diversity on every row) and one
/// message per line that could not be scored.
pub fn eval_csv(text: &str, target: &TargetSpec, docker: Docker) -> Result<(String, Vec<String>), TargetError> {
    let evaluator = Evaluator::new(target.pocket.clone(), target.drug_fingerprints(), docker);
    let (_, thresholds) = target.thresholds(&evaluator)?;
    let mut rows: Vec<Row> = Vec::new();
    let mut errors = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let Some((smiles, _)) = parse_smiles_line(line) else { continue };
        let graph = match molpilot_chem::parse_smiles(smiles) {
            Ok(g) => g,
            Err(e) => {
                errors.push(format!("line {}: {e}", i + 1));
                continue;
            }
        };
        match evaluator.evaluate(&graph, true) {
            Ok(ev) => rows.push(Row {
                id: molpilot_chem::scoring::MoleculeId::from_index(rows.len() + 1),
                smiles: molpilot_chem::write_smiles(&graph),
                profile: ev.profile,
                fingerprint: ev.fingerprint,
            }),
            Err(e) => errors.push(format!("line {}: {e}", i + 1)),
        }
    }
    let fps: Vec<&Fingerprint> = rows.iter().map(|r| &r.fingerprint).collect();
    let dvs = diversity(&fps).map(|d| format!("{d:.4}")).unwrap_or_default();
    let mut csv = format!("{},HQ,DVS\n", MoleculeTable::csv_header());
    for r in &rows {
        let hq = if is_high_quality(&r.profile, &thresholds) { 1 } else { 0 };
        let _ = writeln!(csv, "{},{hq},{dvs}", MoleculeTable::csv_line(r));
    }
    Ok((csv, errors))
}

/// Target configs under `dir`: `*/target.json` and top-level `*.json`, sorted.
pub fn find_target_configs(dir: &Path) -> std::io::Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        if path.is_dir() {
            let cfg = path.join("target.json");
            if cfg.is_file() {
                out.push(cfg);
            }
        } else if path.extension().is_some_and(|e| e == "json") {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

/// Log files named directly, or found one level inside named directories.
pub fn find_logs(paths: &[PathBuf]) -> std::io::Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut found: Vec<PathBuf> = std::fs::read_dir(p)?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.extension().is_some_and(|e| e == "ndjson"))
                .collect();
            found.sort();
            out.extend(found);
        } else {
            out.push(p.clone());
        }
    }
    Ok(out)
}

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use molpilot_core::runlog::RunLog;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_molpilot"))
}

fn target(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data/targets").join(name).join("target.json")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn light() -> [&'static str; 4] {
    ["--population", "24", "--generations", "6"]
}

#[test]
fn fallback_seed_one_succeeds_with_one_log() {
    let out = tempfile::tempdir().unwrap();
    let o =
        run(&["run", target("egfr").to_str().unwrap(), "--policy", "fallback", "--seed", "1", "--out-dir", out.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let logs: Vec<_> = std::fs::read_dir(out.path())
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.path().extension().is_some_and(|x| x == "ndjson"))
        .collect();
    assert_eq!(logs.len(), 1);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("outcome: success"));
    assert!(stdout.contains("high quality: yes"));
}

#[test]
fn missing_config_is_a_usage_error() {
    let o = run(&["run", "/nonexistent/target.json"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
    assert_eq!(run(&[]).status.code(), Some(1));
    assert_eq!(run(&["run"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn small_budget_exhausts() {
    let out = tempfile::tempdir().unwrap();
    let mut args = vec!["run", target("drd2").to_str().unwrap(), "--seed", "1", "--budget", "3", "--out-dir", out.path().to_str().unwrap()]
        .into_iter()
        .map(String::from)
        .collect::<Vec<_>>();
    args.extend(light().map(String::from));
    let o = bin().args(&args).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    let log = RunLog::read(&out.path().join("drd2-seed1.ndjson")).unwrap();
    assert_eq!(log.actions().count(), 3);
}

#[test]
fn bad_flags() {
    let t = target("ace");
    let t = t.to_str().unwrap();
    assert_eq!(run(&["run", t, "--budget", "11"]).status.code(), Some(1));
    assert_eq!(run(&["run", t, "--budget", "0"]).status.code(), Some(1));
    assert_eq!(run(&["run", t, "--policy", "llm"]).status.code(), Some(1));
    assert_eq!(run(&["run", t, "--docker", "external"]).status.code(), Some(1));
    assert_eq!(run(&["run", t, "--policy", "sometimes"]).status.code(), Some(1));
}

#[test]
fn unreachable_endpoint_falls_back() {
    let out = tempfile::tempdir().unwrap();
    let o = bin()
        .args(["run", target("ace").to_str().unwrap(), "--seed", "1", "--budget", "2", "--policy", "llm"])
        .args(["--llm-endpoint", "http://127.0.0.1:9/v1/chat/completions", "--no-llm-token"])
        .args(light())
        .args(["--out-dir", out.path().to_str().unwrap()])
        .output()
        .unwrap();
    assert!(matches!(o.status.code(), Some(0) | Some(2)), "{}", String::from_utf8_lossy(&o.stderr));
    let log = RunLog::read(&out.path().join("ace-seed1.ndjson")).unwrap();
    assert_eq!(log.header.policy, "llm");
    assert!(log.actions().all(|a| a.source == molpilot_core::memory::ActionSource::Fallback));
}

#[test]
fn eval_known_drugs_have_zero_novelty() {
    let dir = tempfile::tempdir().unwrap();
    let smi = dir.path().join("drugs.smi");
    std::fs::write(
        &smi,
        "COc1cc2ncnc(Nc3ccc(F)c(Cl)c3)c2cc1OCCCN1CCOCC1 gefitinib\nnot_a_smiles\nCOCCOc1cc2ncnc(Nc3cccc(c3)C#C)c2cc1OCCOC\n",
    )
    .unwrap();
    let o = run(&["eval", smi.to_str().unwrap(), target("egfr").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let csv = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "SMILES,QED,SAScore,Lipinski,Novelty,Vina Score,HQ,DVS");
    assert_eq!(lines.len(), 3);
    for l in &lines[1..] {
        assert_eq!(l.split(',').nth(4), Some("0.0000"), "{l}");
    }
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
}

#[test]
fn eval_edge_cases() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.smi");
    std::fs::write(&empty, "").unwrap();
    let o = run(&["eval", empty.to_str().unwrap(), target("ace").to_str().unwrap()]);
    assert_eq!(String::from_utf8(o.stdout).unwrap(), "SMILES,QED,SAScore,Lipinski,Novelty,Vina Score,HQ,DVS\n");

    let twins = dir.path().join("twins.smi");
    std::fs::write(&twins, "c1ccccc1O\nOc1ccccc1\n").unwrap();
    let o = run(&["eval", twins.to_str().unwrap(), target("ace").to_str().unwrap()]);
    let csv = String::from_utf8(o.stdout).unwrap();
    for l in csv.lines().skip(1) {
        assert!(l.ends_with(",0.0000"), "{l}");
    }
}

#[test]
fn bench_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let targets = dir.path().join("targets");
    std::fs::create_dir_all(targets.join("ace")).unwrap();
    for f in ["target.json", "pocket.pdb"] {
        std::fs::copy(target("ace").parent().unwrap().join(f), targets.join("ace").join(f)).unwrap();
    }
    std::fs::write(targets.join("broken.json"), "{\"name\": \"broken\"}").unwrap();
    let out = dir.path().join("out");
    let o = bin()
        .args(["bench", targets.to_str().unwrap(), "--seed", "1", "--jobs", "2", "--out-dir", out.to_str().unwrap()])
        .args(light())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("broken,1,error"), "{stdout}");
    let agg: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("aggregate.json")).unwrap()).unwrap();
    assert_eq!(agg["targets"], 2);

    let r = run(&["report", out.to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(0));
    let text = String::from_utf8_lossy(&r.stdout);
    assert!(text.contains("transition probabilities over 1 run(s)"));
    assert!(text.contains("trajectory:"));

    let empty = dir.path().join("none");
    std::fs::create_dir_all(&empty).unwrap();
    assert_eq!(run(&["bench", empty.to_str().unwrap()]).status.code(), Some(1));
    assert_eq!(run(&["report", empty.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn single_successful_target_gives_full_tsr() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = run(&["run", target("ace").to_str().unwrap(), "--seed", "1", "--out-dir", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let r = run(&["report", "--summary", out.join("ace-seed1.ndjson").to_str().unwrap()]);
    assert!(String::from_utf8_lossy(&r.stdout).contains("TSR       100.0% (1 of 1)"));
}

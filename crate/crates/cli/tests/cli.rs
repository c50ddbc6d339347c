use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use probe_cli::run::{run_probe, Condition, RunReport};
use probe_cli::RunConfig;
use serde_json::Value;

fn mini() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/mini").canonicalize().unwrap()
}

fn probe(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_probe"));
    cmd.args(args).env_remove("PROBE_GEN_ENDPOINT").env_remove("PROBE_MT_ENDPOINT");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// The bundled config with every path made absolute, so it can be written anywhere.
fn absolute_mini_config() -> Value {
    let dir = mini();
    let mut raw: Value = serde_json::from_str(&std::fs::read_to_string(dir.join("config.json")).unwrap()).unwrap();
    let abs = |v: &Value| Value::String(dir.join(v.as_str().unwrap()).display().to_string());
    raw["facts_path"] = abs(&raw["facts_path"]);
    raw["templates_path"] = abs(&raw["templates_path"]);
    raw["generation"]["mock_table"] = abs(&raw["generation"]["mock_table"]);
    raw["translation"]["mock_table"] = abs(&raw["translation"]["mock_table"]);
    raw["resources"]["lexicon"] = abs(&raw["resources"]["lexicon"]);
    raw["resources"]["embeddings"] = abs(&raw["resources"]["embeddings"]);
    raw
}

fn write_config(dir: &Path, config: &Value) -> PathBuf {
    let path = dir.join("config.json");
    std::fs::write(&path, serde_json::to_string_pretty(config).unwrap()).unwrap();
    path
}

#[test]
fn run_writes_every_artifact_and_report_round_trips() {
    let tmp = tempfile::tempdir().unwrap();
    let config_path = mini().join("config.json");
    let out = probe(&["run", "--config", path_str(&config_path), "--out", path_str(tmp.path())], &[]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stderr(&out).contains("wrote 4 files"));

    let mut names: Vec<String> =
        std::fs::read_dir(tmp.path()).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    names.sort();
    assert_eq!(names, ["calibration.csv", "kcurve.csv", "records.csv", "report.json"]);

    let written: RunReport =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("report.json")).unwrap()).unwrap();
    let in_memory = run_probe(&RunConfig::load(&config_path).unwrap()).unwrap();
    assert_eq!(written, in_memory);
}

#[test]
fn csv_artifacts_are_consistent_with_the_records() {
    let tmp = tempfile::tempdir().unwrap();
    let out = probe(&["run", "--config", path_str(&mini().join("config.json")), "--out", path_str(tmp.path())], &[]);
    assert!(out.status.success(), "{}", stderr(&out));
    let read = |name: &str| std::fs::read_to_string(tmp.path().join(name)).unwrap();

    let records = read("records.csv");
    let mut lines = records.lines();
    assert_eq!(lines.next().unwrap(), "condition,subject,relation_id,final_text,confidence,correct,k,strategy");
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 200);

    let calibration = read("calibration.csv");
    let mut per_condition = std::collections::BTreeMap::<String, usize>::new();
    for row in calibration.lines().skip(1) {
        let fields: Vec<&str> = row.split(',').collect();
        *per_condition.entry(fields[0].to_string()).or_default() += fields[4].parse::<usize>().unwrap();
        if fields[4] == "0" {
            assert_eq!(fields[5], "NA");
        }
    }
    for condition in [Condition::Baseline, Condition::Tta] {
        let n = rows.iter().filter(|r| r.starts_with(&format!("{},", condition.as_str()))).count();
        assert_eq!(per_condition[condition.as_str()], n);
    }

    let kcurve = read("kcurve.csv");
    assert_eq!(kcurve.lines().nth(1).unwrap(), "1,1.00000000,0.00000000");
}

#[test]
fn flags_override_the_config() {
    let tmp = tempfile::tempdir().unwrap();
    let config = mini().join("config.json");
    let out = probe(
        &[
            "run",
            "--config",
            path_str(&config),
            "--strategy",
            "count",
            "--seed",
            "7",
            "--k",
            "1,3",
            "--out",
            path_str(tmp.path()),
        ],
        &[],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let report: Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["kcurve"]["strategy"], "count");
    assert_eq!(report["kcurve"]["seed"], 7);
    let ks: Vec<u64> =
        report["kcurve"]["points"].as_array().unwrap().iter().map(|p| p["k"].as_u64().unwrap()).collect();
    assert_eq!(ks, [1, 3]);
}

#[test]
fn validate_reports_the_dataset() {
    let out = probe(&["validate", "--config", path_str(&mini().join("config.json"))], &[]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stderr(&out).contains("ok: 100 facts, 25 relations"), "{}", stderr(&out));
}

#[test]
fn validation_failures_exit_2_and_list_every_problem() {
    let tmp = tempfile::tempdir().unwrap();
    let mut config = absolute_mini_config();
    config["facts_path"] = Value::String("missing.jsonl".into());
    config["resources"]["lexicon"] = Value::String("missing-lexicon.json".into());
    config["k_values"] = serde_json::json!([5, 2]);
    let path = write_config(tmp.path(), &config);
    for sub in ["validate", "run"] {
        let out = probe(
            &[sub, "--config", path_str(&path), "--out", path_str(&tmp.path().join("out"))]
                [..if sub == "run" { 5 } else { 3 }],
            &[],
        );
        assert_eq!(out.status.code(), Some(2), "{sub}: {}", stderr(&out));
        let err = stderr(&out);
        assert!(
            err.contains("missing.jsonl") && err.contains("missing-lexicon.json") && err.contains("increasing"),
            "{err}"
        );
    }
    assert!(!tmp.path().join("out").exists());
}

#[test]
fn malformed_config_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("config.json");
    std::fs::write(&path, r#"{"facts_path": "f.jsonl", "unknown_key": 1}"#).unwrap();
    let out = probe(&["run", "--config", path_str(&path)], &[]);
    assert_eq!(out.status.code(), Some(2));
    let out = probe(&["validate", "--config", path_str(&tmp.path().join("absent.json"))], &[]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_k_flag_exits_2() {
    let out = probe(&["run", "--config", path_str(&mini().join("config.json")), "--k", "0,31"], &[]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
}

#[test]
fn environment_overrides_the_endpoints() {
    let config = mini().join("config.json");
    let out = probe(&["validate", "--config", path_str(&config)], &[("PROBE_GEN_ENDPOINT", "not a url")]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("generation"), "{}", stderr(&out));
    let out = probe(&["validate", "--config", path_str(&config)], &[("PROBE_MT_ENDPOINT", "ftp:/nowhere")]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("translation"), "{}", stderr(&out));
    let out = probe(&["validate", "--config", path_str(&config)], &[("PROBE_GEN_ENDPOINT", "")]);
    assert!(out.status.success(), "{}", stderr(&out));
}

#[test]
fn unreachable_backend_drops_prompts_with_warnings() {
    let tmp = tempfile::tempdir().unwrap();
    let fact = std::fs::read_to_string(mini().join("facts.jsonl")).unwrap().lines().next().unwrap().to_string();
    std::fs::write(tmp.path().join("facts.jsonl"), fact + "\n").unwrap();
    let mut config = absolute_mini_config();
    config["facts_path"] = Value::String("facts.jsonl".into());
    config.as_object_mut().unwrap().remove("translation");
    config.as_object_mut().unwrap().remove("resources");
    let path = write_config(tmp.path(), &config);
    let port = std::net::TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let endpoint = format!("http://127.0.0.1:{port}/");
    let out_dir = tmp.path().join("out");
    let out =
        probe(&["run", "--config", path_str(&path), "--out", path_str(&out_dir)], &[("PROBE_GEN_ENDPOINT", &endpoint)]);
    assert!(out.status.success(), "{}", stderr(&out));

    let report: RunReport =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(report.config.generation.endpoint, endpoint);
    let dropped = report.warnings.iter().filter(|w| w.stage == "generate").count();
    assert!(dropped >= 1);
    assert!(report.baseline_records.is_empty() && report.tta_records.is_empty());
    assert_eq!(report.kcurve.points.len(), 1);
    assert_eq!(report.kcurve.points[0].mean, 1.0);
}

#[test]
fn failed_emit_leaves_no_partial_files() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("out");
    std::fs::create_dir_all(out_dir.join("report.json").join("occupied")).unwrap();
    let out = probe(&["run", "--config", path_str(&mini().join("config.json")), "--out", path_str(&out_dir)], &[]);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
    let mut left: Vec<String> =
        std::fs::read_dir(&out_dir).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    left.sort();
    assert_eq!(left, ["report.json"]);
}

#[test]
fn output_dir_resolves_against_the_config_directory() {
    let tmp = tempfile::tempdir().unwrap();
    let mut config = absolute_mini_config();
    config["output_dir"] = Value::String("report".into());
    config["k_values"] = serde_json::json!([1, 2]);
    let path = write_config(tmp.path(), &config);
    let out = Command::new(env!("CARGO_BIN_EXE_probe"))
        .args(["run", "--config", path_str(&path)])
        .current_dir(std::env::temp_dir())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(tmp.path().join("report").join("records.csv").is_file());
}

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn input_args(dir: &Path) -> Vec<String> {
    ["registry.csv", "plan.json", "taxonomy.txt", "config.json"]
        .iter()
        .zip(["--registry", "--plan", "--taxonomy", "--config"])
        .flat_map(|(file, flag)| [flag.to_string(), dir.join(file).display().to_string()])
        .collect()
}

fn qoscomp(args: &[&str], extra: &[String]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qoscomp"))
        .args(args)
        .args(extra)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn compose_prints_both_composites() {
    let out = qoscomp(&["compose"], &input_args(&fixture("worked")));
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("locate -> geo_c"), "{text}");
    assert!(text.contains("forecast -> wx_a"));
    assert!(text.contains("notify -> msg_a"));
    assert!(text.contains("alternative"));

    let out = qoscomp(&["compose", "--json"], &input_args(&fixture("worked")));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(report["primary"]["score"].as_f64().unwrap() > 0.0);
}

#[test]
fn compose_then_replace() {
    let tmp = tempfile::tempdir().unwrap();
    let saved = tmp.path().join("report.json");
    let args = input_args(&fixture("worked"));
    let out = qoscomp(&["compose", "--out", saved.to_str().unwrap()], &args);
    assert!(out.status.success(), "{}", stderr(&out));

    let composite = ["replace", "--composite", saved.to_str().unwrap()];
    let out = qoscomp(&[&composite[..], &["--fail", "forecast:wx_a", "--json"]].concat(), &args);
    assert!(out.status.success(), "{}", stderr(&out));
    let replaced: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let services: Vec<&str> = replaced["selections"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| s["service_id"].as_str().unwrap())
        .collect();
    assert_eq!(services.len(), 3);
    assert_eq!(services[0], "geo_c");
    assert_ne!(services[1], "wx_a");
    assert_eq!(services[2], "msg_a");

    let out = qoscomp(&[&composite[..], &["--fail", "forecast:wx_b"]].concat(), &args);
    assert_eq!(out.status.code(), Some(13), "{}", stderr(&out));
    let out = qoscomp(&[&composite[..], &["--fail", "forecast"]].concat(), &args);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn errors_carry_stage_and_exit_code() {
    let out = qoscomp(&["compose"], &input_args(&fixture("disjoint")));
    assert_eq!(out.status.code(), Some(11));
    assert!(stderr(&out).starts_with("error: [compose]"), "{}", stderr(&out));

    let out = qoscomp(&["compose"], &input_args(Path::new("/nonexistent")));
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("[load]"));

    let out = qoscomp(&["compose", "--levels", "1,0.5,0.9"], &input_args(&fixture("worked")));
    assert_eq!(out.status.code(), Some(8), "{}", stderr(&out));

    let out = qoscomp(&["compose"], &[]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn generate_then_compose() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("inst");
    let out = qoscomp(
        &["generate", "--tasks", "4", "--candidates", "12", "--seed", "3", "--out", dir.to_str().unwrap()],
        &[],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("wrote 48 services"));
    let out = qoscomp(&["compose", "--json"], &input_args(&dir));
    assert!(out.status.success(), "{}", stderr(&out));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["primary"]["selections"].as_array().unwrap().len(), 4);
}

#[test]
fn bench_emits_csv() {
    let out = qoscomp(&["bench", "--grid", "2,3x10,12", "--reps", "2", "--include-classification"], &[]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("tasks,candidates,repetitions,mean_ranking_ms"));
    assert!(lines[0].ends_with("mean_classification_ms"));
    assert_eq!(lines.len(), 5);
    assert!(lines[1].starts_with("2,10,2,"));
    assert!(stderr(&out).contains("spearman"));
}

#[test]
fn classify_prints_rules() {
    let out = qoscomp(&["classify", "--task", "forecast"], &input_args(&fixture("worked")));
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.starts_with("# task forecast\n"));
    assert!(text.contains("# wx_a L1"));
    assert!(!text.contains("# task locate"));

    let out = qoscomp(&["classify", "--task", "nope"], &input_args(&fixture("worked")));
    assert_eq!(out.status.code(), Some(7));

    let tmp = tempfile::tempdir().unwrap();
    let csv = tmp.path().join("train.csv");
    std::fs::write(&csv, "speed,cost,class\nhigh,low,L1\nhigh,high,L2\nlow,low,L2\nhigh,low,L1\n").unwrap();
    let out = qoscomp(&["classify", "--training", csv.to_str().unwrap()], &[]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("L1"));
}

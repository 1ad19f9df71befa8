use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn models() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../models")
}

fn model(name: &str) -> String {
    models().join(name).display().to_string()
}

fn rtforge(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rtforge")).args(args).env_remove("RTFORGE_STATE_LIMIT").output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn translate_matches_golden() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cs.imi");
    let o = rtforge(&["translate", &model("casestudy.json"), "-o", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{o:?}");
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/golden/casestudy.imi");
    assert_eq!(std::fs::read(out).unwrap(), std::fs::read(golden).unwrap());
}

#[test]
fn time4sys_input_translates_identically() {
    let a = rtforge(&["translate", &model("casestudy.time4sys.xml")]);
    let b = rtforge(&["translate", &model("casestudy.json")]);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn empty_model_translates() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("empty.json");
    std::fs::write(&input, r#"{"processors": [], "tasks": [], "dependencies": []}"#).unwrap();
    let o = rtforge(&["translate", input.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{o:?}");
    assert!(stdout(&o).contains("init := True;"));
}

#[test]
fn bad_xml_is_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("broken.xml");
    std::fs::write(&input, "<time4sys:Design><unclosed></time4sys:Design>").unwrap();
    let o = rtforge(&["translate", input.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(!o.stderr.is_empty());
}

#[test]
fn invalid_model_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("bad.json");
    std::fs::write(
        &input,
        r#"{"processors": [{"name": "P", "policy": "fps_preemptive"}],
            "tasks": [{"name": "T", "processor": "P", "activation": "triggered", "bcet": 1, "wcet": 1, "priority": 1}],
            "dependencies": []}"#,
    )
    .unwrap();
    let o = rtforge(&["check", input.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("TRIGGERED_WITHOUT_PREDECESSOR"));
}

#[test]
fn nominal_check_schedulable() {
    let o = rtforge(&["check", &model("casestudy.json")]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).starts_with("SCHEDULABLE"));
}

#[test]
fn short_deadline_misses_with_witness() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("w.json");
    let gantt = dir.path().join("w.svg");
    let o = rtforge(&[
        "check",
        &model("casestudy.json"),
        "--set",
        "T5Deadline=11",
        "--trace",
        trace.to_str().unwrap(),
        "--gantt",
        gantt.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 3);
    assert!(stdout(&o).starts_with("DEADLINE-MISS"));
    let t: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(trace).unwrap()).unwrap();
    assert_eq!(t["miss"]["task"], "T5");
    assert!(std::fs::read_to_string(gantt).unwrap().contains("class=\"violation\""));
}

#[test]
fn check_json_output() {
    let o = rtforge(&["check", &model("casestudy.json"), "--set", "T5Deadline=11", "--json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["verdict"], "DEADLINE_MISS");
}

#[test]
fn missing_valuation_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("param.json");
    std::fs::write(
        &input,
        r#"{"processors": [{"name": "P", "policy": "fps_preemptive"}],
            "tasks": [{"name": "T", "processor": "P", "activation": {"periodic": {"period": 10, "offset": 0}},
                       "bcet": 1, "wcet": {"param": "W"}, "priority": 1}],
            "dependencies": []}"#,
    )
    .unwrap();
    let o = rtforge(&["check", input.to_str().unwrap()]);
    assert_eq!(code(&o), 1, "{o:?}");
    let o = rtforge(&["check", input.to_str().unwrap(), "--set", "W=2"]);
    assert_eq!(code(&o), 0, "{o:?}");
}

#[test]
fn unknown_parameter_exits_one() {
    let o = rtforge(&["check", &model("casestudy.json"), "--set", "Nope=1"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn state_limit_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.toml");
    std::fs::write(&cfg, "state_limit = 10\n").unwrap();
    let cfg = cfg.to_str().unwrap();
    let cs = model("casestudy.json");
    assert_eq!(code(&rtforge(&["--config", cfg, "check", &cs])), 4);
    let env = Command::new(env!("CARGO_BIN_EXE_rtforge"))
        .args(["--config", cfg, "check", &cs])
        .env("RTFORGE_STATE_LIMIT", "100000000")
        .output()
        .unwrap();
    assert_eq!(code(&env), 0);
    let flag = Command::new(env!("CARGO_BIN_EXE_rtforge"))
        .args(["--config", cfg, "check", &cs, "--state-limit", "5"])
        .env("RTFORGE_STATE_LIMIT", "100000000")
        .output()
        .unwrap();
    assert_eq!(code(&flag), 4);
}

#[test]
fn sweep_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let (svg, json, csv) = (dir.path().join("r.svg"), dir.path().join("r.json"), dir.path().join("r.csv"));
    let o = rtforge(&[
        "sweep",
        &model("casestudy.json"),
        "--free",
        "T1Deadline=4:6",
        "--free",
        "T5Deadline=10:12",
        "--svg",
        svg.to_str().unwrap(),
        "--json",
        json.to_str().unwrap(),
        "--csv",
        csv.to_str().unwrap(),
        "--jobs",
        "2",
    ]);
    assert_eq!(code(&o), 0, "{o:?}");
    assert!(stdout(&o).starts_with("9 points"));
    assert_eq!(std::fs::read_to_string(svg).unwrap().matches("<title>").count(), 9);
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(json).unwrap()).unwrap();
    assert_eq!(v["points"].as_array().unwrap().len(), 9);
    assert_eq!(std::fs::read_to_string(csv).unwrap().lines().count(), 10);
}

#[test]
fn sweep_mismatch_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let expect = dir.path().join("e.json");
    std::fs::write(&expect, r#"{"dnf": [["T1Offset >= 100"]]}"#).unwrap();
    let o =
        rtforge(&["sweep", &model("casestudy.json"), "--free", "OffsetT1=4:5", "--expect", expect.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("2 mismatches"));
}

#[test]
fn sweep_without_free_parameters_checks_once() {
    let o = rtforge(&["sweep", &model("casestudy.json"), "--json"]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["points"].as_array().unwrap().len(), 1);
}

#[test]
fn chronogram_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let gantt = dir.path().join("g.svg");
    let o = rtforge(&[
        "trace",
        &model("casestudy.json"),
        "--script",
        &model("chronogram.json"),
        "--gantt",
        gantt.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{o:?}");
    assert!(stdout(&o).starts_with("ACCEPTED"));
    let svg = std::fs::read_to_string(gantt).unwrap();
    assert!(svg.contains("CPU1") && svg.contains("CPU3"));
}

#[test]
fn infeasible_script_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let script = dir.path().join("s.json");
    std::fs::write(&script, r#"[[0, "actT5"], [0, "finT5"]]"#).unwrap();
    let o = rtforge(&["trace", &model("casestudy.json"), "--script", script.to_str().unwrap(), "--json"]);
    assert_eq!(code(&o), 3);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["accepted"], false);
    assert_eq!(v["rejection"]["index"], 1);
}

#[test]
fn missing_script_is_io_error() {
    let o = rtforge(&["trace", &model("casestudy.json"), "--script", "/nonexistent/script.json"]);
    assert_eq!(code(&o), 2);
}

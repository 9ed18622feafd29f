use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bratteli"))
}

#[test]
fn missing_seed_exits_2_without_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let status = bin()
        .args(["run", "wf-sim", "--M", "const:2", "--depth", "5", "--trials", "10"])
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn cap_refusal_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let status = bin()
        .args(["run", "lemma-oracle", "--n", "10", "--seed", "1", "--extremal"])
        .arg("--out")
        .arg(dir.path().join("run"))
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(3));
}

#[test]
fn unknown_recipe_exits_2_and_lists() {
    let out = bin().args(["recipe", "nope"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("dichotomy-divergent"));
}

#[test]
fn run_writes_expected_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let status = bin()
        .args(["run", "sample-order", "--M", "levels:1,2,3", "--depth", "2", "--seed", "9"])
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let results = std::fs::read_to_string(out.join("results.csv")).unwrap();
    assert!(results.starts_with("level,vertex,ranks\n"));
    let summary = std::fs::read_to_string(out.join("summary.toml")).unwrap();
    assert!(summary.contains("config_hash"));
    assert!(summary.contains("seed = 9"));
    assert!(out.join("events.jsonl").exists());
}

#[test]
fn identical_config_gives_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        assert!(bin()
            .args(["run", "census", "--M", "const:3", "--depths", "4,6", "--trials", "50"])
            .args(["--seed", "12"])
            .arg("--out")
            .arg(&out)
            .status()
            .unwrap()
            .success());
        std::fs::read(out.join("results.csv")).unwrap()
    };
    assert_eq!(run("a"), run("b"));
}

use std::path::Path;
use std::process::{Command, Output};

fn neo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_neo"))
        .args(args)
        .output()
        .expect("run neo")
}

fn tree(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((
                    p.strip_prefix(dir).unwrap().display().to_string(),
                    std::fs::read(&p).unwrap(),
                ));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn matrix_runs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let out = neo(&[
            "matrix",
            "--seed",
            "7",
            "--dropout",
            "0.15",
            "--out",
            dir.path().to_str().unwrap(),
        ]);
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    let (ta, tb) = (tree(a.path()), tree(b.path()));
    assert!(ta.iter().any(|(n, _)| n == "matrix.csv"));
    assert!(ta.iter().any(|(n, _)| n == "effective-config.toml"));
    assert_eq!(ta, tb);
    let csv = String::from_utf8(std::fs::read(a.path().join("matrix.csv")).unwrap()).unwrap();
    assert_eq!(csv.lines().count(), 781);
    assert!(csv.starts_with("disruption,occupation,group,accuracy,n_decisions\n"));
}

#[test]
fn matrix_stdout_matches_across_runs() {
    let x = neo(&["matrix", "--groups", "S10,PU-VE"]);
    let y = neo(&["matrix", "--groups", "S10,PU-VE"]);
    assert!(x.status.success());
    assert_eq!(x.stdout, y.stdout);
    let text = String::from_utf8(x.stdout).unwrap();
    assert!(text.contains("group S10"));
    assert!(text.contains("group PU-VE"));
}

#[test]
fn learn_writes_trajectories() {
    let dir = tempfile::tempdir().unwrap();
    let out = neo(&["learn", "--out", dir.path().to_str().unwrap()]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    for u in ["A", "B", "C"] {
        let csv = std::fs::read_to_string(dir.path().join(format!("trajectory-{u}.csv"))).unwrap();
        assert_eq!(csv.lines().count(), 11);
        assert!(dir.path().join(format!("preferences-{u}.toml")).exists());
    }
    let a = std::fs::read_to_string(dir.path().join("trajectory-A.csv")).unwrap();
    assert!(a
        .lines()
        .nth(1)
        .unwrap()
        .starts_with("1,0.731059,1.0,negative,true"));
}

#[test]
fn learn_accepts_a_schedule_file() {
    let dir = tempfile::tempdir().unwrap();
    let sched = dir.path().join("user.toml");
    std::fs::write(
        &sched,
        "label = \"custom\"\nschedule = [\"positive\", \"negative\", \"neutral\"]\n",
    )
    .unwrap();
    let out = neo(&[
        "learn",
        "--schedule",
        sched.to_str().unwrap(),
        "--rounds",
        "3",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(String::from_utf8(out.stdout)
        .unwrap()
        .contains("user custom"));
    // more rounds than the schedule covers
    let out = neo(&[
        "learn",
        "--schedule",
        sched.to_str().unwrap(),
        "--rounds",
        "4",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn simulate_prints_decisions() {
    let out = neo(&[
        "simulate",
        "--occupation",
        "O6",
        "--disruption",
        "D4",
        "--group",
        "S10",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let line = text.lines().next().unwrap();
    let v: serde_json::Value = serde_json::from_str(line).unwrap();
    assert_eq!(v["decision"]["action"], "bring-phone");
}

#[test]
fn simulate_reads_scenario_file_and_dry_runs() {
    let dir = tempfile::tempdir().unwrap();
    let sc = dir.path().join("sc.toml");
    std::fs::write(&sc, "occupation = \"O13\"\ndisruption = \"D1\"\n").unwrap();
    let out = neo(&["simulate", "--scenario", sc.to_str().unwrap()]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(String::from_utf8(out.stdout)
        .unwrap()
        .contains("\"action\":null"));

    let out = neo(&["simulate", "--dry-run", "--period", "25"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("period-ms = 25"));
}

#[test]
fn exit_codes() {
    assert_eq!(neo(&["learn", "--user", "Z"]).status.code(), Some(2));
    assert_eq!(neo(&["matrix", "--groups", "S42"]).status.code(), Some(2));
    assert_eq!(
        neo(&["matrix", "--config", "/definitely/not/here.toml"])
            .status
            .code(),
        Some(3)
    );
    assert_eq!(neo(&["matrix", "--dropout", "1.5"]).status.code(), Some(2));
    assert_eq!(neo(&["frobnicate"]).status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[engine]\nperod-ms = 20\n").unwrap();
    let out = neo(&["matrix", "--config", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr)
        .unwrap()
        .contains("config error"));
}

#[test]
fn config_file_overrides_parameters() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.toml");
    std::fs::write(&cfg, "[engine]\naction-threshold = 0.8\n").unwrap();
    // sigmoid(1) = 0.731 is below 0.8, so the agent declines everywhere
    let out = neo(&["simulate", "--config", cfg.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(String::from_utf8(out.stdout)
        .unwrap()
        .contains("\"action\":null"));
}

use std::path::Path;
use std::process::{Command, Output};

use disclination::io::parse_lattice_dump;

fn discl(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_discl"))
        .args(args)
        .arg("--out")
        .arg(dir)
        .env_remove("DISCL_THREADS")
        .output()
        .expect("binary runs")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn mesh_writes_the_smallest_lattice() {
    let dir = tempfile::tempdir().unwrap();
    let out = discl(&["mesh", "--phi", "5", "--eps-exp", "2"], dir.path());
    assert!(out.status.success(), "{}", stderr(&out));
    let text = std::fs::read_to_string(dir.path().join("mesh_eps2.txt")).unwrap();
    let dump = parse_lattice_dump(&text).unwrap();
    assert_eq!(dump.graph.num_vertices(), 15);
    assert_eq!(dump.graph.edges.len(), 30);
    assert_eq!(dump.graph.triangles.len(), 16);
    assert_eq!(dump.pairs.len(), 4);
}

#[test]
fn minimize_then_render_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let out = discl(&["minimize", "--phi", "7", "--eps-exp", "2"], dir.path());
    assert!(out.status.success(), "{}", stderr(&out));
    let config = dir.path().join("config_eps2.txt");
    assert!(dir.path().join("solve_eps2.csv").exists());
    let render = |copies: &str| {
        let out = discl(
            &[
                "render",
                "--config",
                config.to_str().unwrap(),
                "--copies",
                copies,
            ],
            dir.path(),
        );
        assert!(out.status.success(), "{}", stderr(&out));
        std::fs::read_to_string(dir.path().join("render_eps2.svg")).unwrap()
    };
    let first = render("7");
    assert!(first.starts_with("<svg") || first.starts_with("<?xml"));
    assert_eq!(first, render("7"));
}

#[test]
fn minimize_restarts_from_a_saved_configuration() {
    let dir = tempfile::tempdir().unwrap();
    let out = discl(&["minimize", "--phi", "5", "--eps-exp", "3"], dir.path());
    assert!(out.status.success(), "{}", stderr(&out));
    let saved = dir.path().join("saved.txt");
    std::fs::rename(dir.path().join("config_eps3.txt"), &saved).unwrap();
    let init = format!("file:{}", saved.display());
    let out = discl(
        &["minimize", "--phi", "5", "--eps-exp", "3", "--init", &init],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let log = std::fs::read_to_string(dir.path().join("solve_eps3.csv")).unwrap();
    // header plus the already converged starting point
    assert!(log.lines().count() <= 3, "{log}");
}

#[test]
fn invalid_arguments_fail_with_one_line() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["mesh", "--phi", "9.5", "--eps-exp", "2"][..],
        &[
            "minimize",
            "--phi",
            "5",
            "--eps-exp",
            "2",
            "--init",
            "fold:4",
        ],
        &[
            "minimize",
            "--phi",
            "5",
            "--eps-exp",
            "2",
            "--init",
            "spiral",
        ],
        &["minimize", "--phi", "5", "--eps-exp", "2", "--p", "1.5"],
        &["sweep", "--phi", "5", "--eps-max-exp", "9"],
        &["verify", "--check", "nonsense"],
    ] {
        let out = discl(args, dir.path());
        assert!(!out.status.success(), "{args:?} should fail");
        let err = stderr(&out);
        assert_eq!(err.trim_end().lines().count(), 1, "{args:?}: {err}");
        assert!(err.starts_with("error: "), "{args:?}: {err}");
    }
}

#[test]
fn bad_thread_count_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_discl"))
        .args(["mesh", "--eps-exp", "1", "--out"])
        .arg(dir.path())
        .env("DISCL_THREADS", "zero")
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(stderr(&out).starts_with("error: "));
}

#[test]
fn verify_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let out = discl(
        &["verify", "--check", "svd2", "--check", "lemma_a1"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let jsonl = std::fs::read_to_string(dir.path().join("verify.jsonl")).unwrap();
    let lines: Vec<serde_json::Value> = jsonl
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), 2);
    assert!(lines.iter().all(|v| v["pass"] == true));
}

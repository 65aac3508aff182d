//! End-to-end runs of the `sfcplace` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn sfcplace(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sfcplace")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn solve_then_validate() {
    let dir = tempfile::tempdir().unwrap();
    let emb = dir.path().join("emb.toml");
    let (topo, scen) = (data("tiny_topology.toml"), data("tiny_scenario.toml"));
    let out = sfcplace(&["solve", "--topology", p(&topo), "--scenario", p(&scen), "--out", p(&emb)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("active_nodes: 1"));
    // The resolved configuration goes to stderr.
    assert!(String::from_utf8_lossy(&out.stderr).contains("tiny_scenario.toml"));

    let out = sfcplace(&["validate", "--topology", p(&topo), "--scenario", p(&scen), "--embedding", p(&emb)]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));

    // Remap the second request to another node without touching anything else.
    let text = std::fs::read_to_string(&emb).unwrap();
    let bad = text.replacen("position = 1\nnode = 0", "position = 1\nnode = 2", 1);
    assert_ne!(bad, text);
    let corrupt = dir.path().join("bad.toml");
    std::fs::write(&corrupt, bad).unwrap();
    let out = sfcplace(&["validate", "--topology", p(&topo), "--scenario", p(&scen), "--embedding", p(&corrupt)]);
    assert_eq!(code(&out), 2);
    assert!(stdout(&out).contains("instance-presence"), "{}", stdout(&out));

    let empty = dir.path().join("empty.toml");
    std::fs::write(&empty, "").unwrap();
    let out = sfcplace(&["validate", "--topology", p(&topo), "--scenario", p(&scen), "--embedding", p(&empty)]);
    assert_eq!(code(&out), 2);
    assert!(stdout(&out).contains("unique-mapping"));
}

#[test]
fn sota_mode_solves_too() {
    let out = sfcplace(&[
        "solve",
        "--topology",
        p(&data("tiny_topology.toml")),
        "--scenario",
        p(&data("tiny_scenario.toml")),
        "--mode",
        "sota",
    ]);
    assert_eq!(code(&out), 0);
}

#[test]
fn infeasible_and_operational_errors() {
    let topo = data("tiny_topology.toml");
    let out = sfcplace(&["solve", "--topology", p(&topo), "--scenario", p(&data("tiny_unreachable.toml"))]);
    assert_eq!(code(&out), 2);
    assert!(stdout(&out).contains("infeasible"));

    let out = sfcplace(&["solve", "--scenario", "/nonexistent/scenario.toml"]);
    assert_eq!(code(&out), 1);
    let out = sfcplace(&["solve", "--scenario", p(&data("tiny_scenario.toml")), "--unknown-flag"]);
    assert_eq!(code(&out), 1);
    let out = sfcplace(&["solve", "--scenario", p(&data("tiny_scenario.toml")), "--mode", "fast"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn exact_matches_heuristic_on_tiny_fixture() {
    let (topology, scenario) = (data("tiny_topology.toml"), data("tiny_scenario.toml"));
    let args = ["--topology", p(&topology), "--scenario", p(&scenario)];
    let exact = sfcplace(&[&["exact"][..], &args].concat());
    let solve = sfcplace(&[&["solve"][..], &args].concat());
    assert_eq!(code(&exact), 0);
    let objective = |s: String| s.lines().find(|l| l.starts_with("active_nodes:")).map(str::to_owned);
    assert_eq!(objective(stdout(&exact)), objective(stdout(&solve)));

    // The shipped backbone has ten NFV nodes.
    let out = sfcplace(&["exact", "--scenario", p(&data("tiny_scenario.toml"))]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("too large"));
}

#[test]
fn export_ilp_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.lp"), dir.path().join("b.lp"));
    for out in [&a, &b] {
        let run = sfcplace(&[
            "export-ilp",
            "--topology",
            p(&data("tiny_topology.toml")),
            "--scenario",
            p(&data("tiny_scenario.toml")),
            "--out",
            p(out),
        ]);
        assert_eq!(code(&run), 0);
    }
    let text = std::fs::read(&a).unwrap();
    assert_eq!(text, std::fs::read(&b).unwrap());
    assert!(text.starts_with(b"\\"));
    assert!(text.ends_with(b"End\n"));
}

fn small_spec(dir: &Path) -> PathBuf {
    let spec = dir.join("spec.toml");
    std::fs::write(
        &spec,
        "seed = 5\niterations = 4\nscenario = \"mixed\"\nh = 0.0\n\
         [[loads]]\nnum_sfcs = 4\nusers_per_sfc = 50\n\
         [[loads]]\nnum_sfcs = 8\nusers_per_sfc = 25\n\
         [[costs]]\nomega = 0.4\nkappa = 1.75\n",
    )
    .unwrap();
    spec
}

#[test]
fn experiment_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let spec = small_spec(dir.path());
    let (a, b, audit) = (dir.path().join("a.csv"), dir.path().join("b.csv"), dir.path().join("rows.csv"));
    let run = sfcplace(&["experiment", "--spec", p(&spec), "--out", p(&a), "--audit", p(&audit), "--jobs", "1"]);
    assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
    let run = sfcplace(&["experiment", "--spec", p(&spec), "--out", p(&b), "--jobs", "2"]);
    assert_eq!(code(&run), 0);
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    assert_eq!(text.lines().count(), 3);
    assert_eq!(std::fs::read_to_string(&audit).unwrap().lines().count(), 9);

    let reseeded = dir.path().join("c.csv");
    let run = sfcplace(&["experiment", "--spec", p(&spec), "--out", p(&reseeded), "--seed", "6"]);
    assert_eq!(code(&run), 0);
}

#[test]
fn small_grid_spec_has_three_by_three_grid() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t5.csv");
    let spec = dir.path().join("t5.toml");
    // Same grid as the shipped spec with fewer iterations.
    let text = std::fs::read_to_string(data("small_grid.toml")).unwrap().replace("iterations = 100", "iterations = 3");
    std::fs::write(&spec, text).unwrap();
    let run = sfcplace(&["experiment", "--spec", p(&spec), "--out", p(&out)]);
    assert_eq!(code(&run), 0);
    let csv = std::fs::read_to_string(&out).unwrap();
    assert_eq!(csv.lines().count(), 1 + 9);
}

#[test]
fn compare_emits_paired_rows() {
    let dir = tempfile::tempdir().unwrap();
    let spec = small_spec(dir.path());
    let out = dir.path().join("cmp.csv");
    let run = sfcplace(&["compare", "--spec", p(&spec), "--out", p(&out)]);
    assert_eq!(code(&run), 0);
    let csv = std::fs::read_to_string(&out).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().contains("delta_active_nodes"));
    assert_eq!(lines.count(), 2);
}

#[test]
fn bad_spec_is_an_operational_error() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("bad.toml");
    std::fs::write(&spec, "seed = 1\niterations = 0\nscenario = \"mixed\"\nloads = []\ncosts = []\n").unwrap();
    let run = sfcplace(&["experiment", "--spec", p(&spec), "--out", p(&dir.path().join("x.csv"))]);
    assert_eq!(code(&run), 1);
}

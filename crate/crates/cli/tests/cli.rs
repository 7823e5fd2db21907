use std::fs;
use std::process::{Command, Output};

use certipomdp_core::{load_model, EnvKind};

fn certipomdp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_certipomdp")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn plan_prints_the_root_interval() {
    let out = certipomdp(&["plan", "--env", "tiger", "--horizon", "3", "--solver", "rb-pomcp", "--iterations", "5000"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert!(text.contains("chosen_action   2"), "{text}");
    assert!(text.contains("certified       true"), "{text}");
}

#[test]
fn dumped_model_loads_back() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("baby.pomdp");
    let p = path.to_str().unwrap();
    let out = certipomdp(&["plan", "--env", "baby", "--horizon", "2", "--solver", "pomcp", "--iterations", "10", "--dump-model", p]);
    assert!(out.status.success());
    assert_eq!(load_model(&path).unwrap(), EnvKind::Baby.build(Some(2)).unwrap());
}

#[test]
fn trace_has_a_root_row_per_iteration() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("trace.csv");
    let args =
        ["plan", "--env", "tiger", "--horizon", "2", "--solver", "db-pomcp", "--iterations", "40", "--trace-bounds"];
    let out = certipomdp(&[&args[..], &[path.to_str().unwrap()]].concat());
    assert!(out.status.success());
    let text = fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("iter,node_depth,P_h,U,L"));
    let roots = lines.filter(|l| l.split(',').nth(1) == Some("0")).count();
    assert_eq!(roots, 40);
}

#[test]
fn episodes_go_to_csv() {
    let out = certipomdp(&[
        "plan", "--env", "tiger", "--horizon", "2", "--solver", "pomcp", "--iterations", "50", "--episodes", "3", "--seed", "4",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 4);
    assert!(lines[0].starts_with("env,solver,horizon,seed,episode,total_reward"));
    assert!(lines[3].starts_with("tiger,pomcp,2,6,2,"));
}

#[test]
fn certify_reports_margins() {
    let out = certipomdp(&["certify", "--env", "lightdark", "--horizon", "2", "--solver", "udb-full", "--iterations", "100000"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert!(text.contains("oracle_value") && text.contains("certified      true"), "{text}");
}

#[test]
fn certify_refuses_large_instances() {
    let out = certipomdp(&["certify", "--env", "rocksample", "--horizon", "12", "--solver", "rb-pomcp", "--iterations", "10"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("too large"));
}

#[test]
fn bench_writes_outputs_and_flags_broken_cells() {
    let dir = tempfile::tempdir().unwrap();
    let suite = dir.path().join("s.suite");
    fs::write(&suite, "episodes = 2\nbudget = 20\nhorizon = 2\n[cell]\nsolver = pomcp\n[cell]\nsolver = rb-pomcp\n").unwrap();
    let outdir = dir.path().join("out");
    let run = |s: &std::path::Path| certipomdp(&["bench", "--suite", s.to_str().unwrap(), "--output", outdir.to_str().unwrap()]);
    let out = run(&suite);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["episodes.csv", "summary.csv", "report.json"] {
        assert!(outdir.join(f).exists(), "{f}");
    }
    let episodes = fs::read_to_string(outdir.join("episodes.csv")).unwrap();
    assert_eq!(episodes.lines().count(), 5);
    assert!(episodes.lines().skip(1).all(|l| l.contains(",NA,ok")), "{episodes}");

    fs::write(&suite, "[cell]\nhorizon = 0\nepisodes = 1\n").unwrap();
    assert_eq!(run(&suite).status.code(), Some(2));
}

#[test]
fn unknown_environment_is_an_error() {
    let out = certipomdp(&["plan", "--env", "lasertag", "--solver", "pomcp"]);
    assert!(!out.status.success());
}

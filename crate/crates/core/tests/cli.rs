use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

use pomdp_core::pomdp_format::TIGER_POMDP;

fn pomdp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pomdp")).args(args).output().unwrap()
}

fn records(out: &Output) -> Vec<Value> {
    String::from_utf8(out.stdout.clone())
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

const TIGER_RUN: &[&str] = &["run", "--domain", "tiger", "--solver", "pouct", "--sims", "64", "--max-steps", "10"];

#[test]
fn run_writes_episodes_then_a_summary() {
    let out = pomdp(&[TIGER_RUN, &["--seed", "4", "--episodes", "3"]].concat());
    assert_eq!(out.status.code(), Some(0));
    let recs = records(&out);
    assert_eq!(recs.len(), 4);
    for (i, r) in recs[..3].iter().enumerate() {
        assert_eq!(r["type"], "episode");
        assert_eq!(r["episode"], i);
        assert!(r.get("plan_ms").is_none());
    }
    let summary = &recs[3];
    assert_eq!(summary["type"], "summary");
    assert_eq!(summary["count"], 3);
    let mean = recs[..3].iter().map(|r| r["discounted_return"].as_f64().unwrap()).sum::<f64>() / 3.0;
    assert!((summary["mean_discounted_return"].as_f64().unwrap() - mean).abs() <= 1e-9);
}

#[test]
fn same_seed_same_bytes() {
    let args = [TIGER_RUN, &["--seed", "9", "--episodes", "2", "--belief", "particles-reject"]].concat();
    let a = pomdp(&args);
    let b = pomdp(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let c = pomdp(&[TIGER_RUN, &["--seed", "10", "--episodes", "2", "--belief", "particles-reject"]].concat());
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn timing_is_opt_in() {
    let out = pomdp(&[TIGER_RUN, &["--seed", "1", "--record-timing"]].concat());
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(records(&out)[0]["plan_ms"].as_array().unwrap().len(), 10);
}

#[test]
fn usage_errors_exit_with_two() {
    // no seed
    assert_eq!(pomdp(&["run", "--domain", "tiger"]).status.code(), Some(2));
    assert_eq!(pomdp(&["run", "--domain", "nowhere", "--seed", "1"]).status.code(), Some(2));
    assert_eq!(pomdp(&["run", "--domain", "tiger", "--seed", "1", "--solver", "magic"]).status.code(), Some(2));
    assert_eq!(pomdp(&["run", "--domain", "tiger", "--seed", "1", "--param", "accuracy"]).status.code(), Some(2));
    assert_eq!(pomdp(&["bogus"]).status.code(), Some(2));
}

#[test]
fn failing_episode_emits_an_error_record() {
    let out = pomdp(&[
        "run",
        "--domain",
        "tiger",
        "--solver",
        "random",
        "--seed",
        "1",
        "--param",
        "accuracy=1.0",
        "--belief",
        "particles-reject",
        "--particles",
        "1",
        "--max-steps",
        "30",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let recs = records(&out);
    let last = recs.last().unwrap();
    assert_eq!(last["type"], "error");
    assert_eq!(last["episode"], 0);
    assert!(last["message"].as_str().unwrap().contains("depletion"));
    assert!(recs.iter().all(|r| r["type"] != "summary"));
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(
        dir.path(),
        "run.toml",
        "domain = \"tiger\"\nsolver = \"random\"\nseed = 3\nepisodes = 2\nmax_steps = 5\n[params]\nlisten_reward = -2\n",
    );
    let from_file = pomdp(&["run", "--config", &config]);
    assert_eq!(from_file.status.code(), Some(0));
    let recs = records(&from_file);
    assert_eq!(recs.len(), 3);
    assert_eq!(recs[2]["seed"], 3);
    assert_eq!(recs[2]["solver"], "random");

    let overridden = pomdp(&["run", "--config", &config, "--episodes", "4", "--seed", "8"]);
    let recs = records(&overridden);
    assert_eq!(recs.len(), 5);
    assert_eq!(recs[4]["seed"], 8);

    let out_path = dir.path().join("out.ndjson");
    let to_file = pomdp(&["run", "--config", &config, "--out", out_path.to_str().unwrap()]);
    assert_eq!(to_file.status.code(), Some(0));
    assert!(to_file.stdout.is_empty());
    assert_eq!(std::fs::read(&out_path).unwrap(), from_file.stdout);
}

#[test]
fn file_domain_runs() {
    let dir = tempfile::tempdir().unwrap();
    let tiger = write(dir.path(), "tiger.pomdp", TIGER_POMDP);
    for solver in ["pouct", "pomcp", "vi", "random"] {
        let out = pomdp(&["run", "--file", &tiger, "--solver", solver, "--seed", "2", "--sims", "32", "--max-steps", "5"]);
        assert_eq!(out.status.code(), Some(0), "{solver}");
        assert_eq!(records(&out).last().unwrap()["type"], "summary");
    }
}

#[test]
fn validate_reports_pass_and_fail() {
    let dir = tempfile::tempdir().unwrap();
    let good = write(dir.path(), "good.pomdp", TIGER_POMDP);
    let out = pomdp(&["validate", "--file", &good]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().all(|l| l.ends_with(": pass")), "{text}");

    let bad = write(dir.path(), "bad.pomdp", &TIGER_POMDP.replace("0.85 0.15", "0.85 0.25"));
    let out = pomdp(&["validate", "--file", &bad]);
    assert_eq!(out.status.code(), Some(1));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("observation rows: FAIL (line"), "{text}");
    assert!(text.contains("transition rows: pass"));

    assert_eq!(pomdp(&["validate", "--file", "/nonexistent.pomdp"]).status.code(), Some(2));
}

#[test]
fn solve_prints_alpha_vectors() {
    let dir = tempfile::tempdir().unwrap();
    let tiger = write(dir.path(), "tiger.pomdp", TIGER_POMDP);
    let out = pomdp(&["solve", "--file", &tiger, "--horizon", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines, ["listen -1 -1", "open-left -100 10", "open-right 10 -100"]);
    // 3 * 2187^2 vectors at horizon 4
    assert_eq!(pomdp(&["solve", "--file", &tiger, "--horizon", "4"]).status.code(), Some(1));
}

#[test]
fn list_domains_names_every_domain() {
    let out = pomdp(&["list-domains"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    for id in ["tiger:", "mos2d:", "lightdark:"] {
        assert!(text.contains(id));
    }
}

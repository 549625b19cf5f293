// SPDX-License-Identifier: MIT OR Apache-2.0

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn ceofop(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ceofop")).args(args).env_remove("CEOFOP_THREADS").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

#[test]
fn simulate_then_detect_finds_the_change() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(
        dir.path(),
        "nl.toml",
        "kind = \"nl\"\nr = [3.8, 4.0]\nsigma = [0.2, 0.2]\nchange_points = [6000]\nlength = 12000\n",
    );
    let series = dir.path().join("x.txt");
    let o = ceofop(&["simulate", &spec, "--seed", "7", "--out", series.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(&series).unwrap();
    assert!(text.starts_with("# schema: ceofop.series/1\n# seed: 7\n"));
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 12001);

    let o = ceofop(&["detect", series.to_str().unwrap(), "--seed", "1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["schema"], "ceofop.detect/1");
    assert_eq!(v["values"], 12001);
    let cps: Vec<u64> = v["change_points"].as_array().unwrap().iter().map(|c| c.as_u64().unwrap()).collect();
    assert_eq!(cps.len(), 1, "{cps:?}");
    assert!(cps[0].abs_diff(6000) <= 256, "{cps:?}");

    let m = ceofop(&["detect", series.to_str().unwrap(), "--seed", "1", "--multi"]);
    assert!(m.status.success(), "{}", stderr(&m));
    let v: serde_json::Value = serde_json::from_str(&stdout(&m)).unwrap();
    assert!(!v["change_points"].as_array().unwrap().is_empty());
}

#[test]
fn missing_seed_is_generated_and_reported() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(dir.path(), "ar.toml", "kind = \"ar\"\nphi = [0.3]\nlength = 50\n");
    let o = ceofop(&["simulate", &spec]);
    assert!(o.status.success());
    assert!(stderr(&o).starts_with("seed: "));
}

#[test]
fn malformed_series_exits_3_with_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "bad.txt", "1\n2\nthree\n");
    let o = ceofop(&["detect", &f, "--seed", "1"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("bad.txt:3:"), "{}", stderr(&o));

    let o = ceofop(&["detect", dir.path().join("absent.txt").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn short_series_exits_4_and_names_the_bound() {
    let dir = tempfile::tempdir().unwrap();
    let body: String = (0..150).map(|i| format!("{}\n", (i * 37 % 101) as f64)).collect();
    let f = write(dir.path(), "short.txt", &body);
    let o = ceofop(&["detect", &f, "--order", "3", "--seed", "1"]);
    assert_eq!(o.status.code(), Some(4));
    let e = stderr(&o);
    assert!(e.contains("2·(d+1)!·(d+1) + 1 = 193") && e.contains("196 values"), "{e}");
}

#[test]
fn invalid_config_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(dir.path(), "bad.toml", "kind = \"ar\"\nphi = [1.5]\nlength = 50\n");
    assert_eq!(ceofop(&["simulate", &spec, "--seed", "1"]).status.code(), Some(4));
    let spec = write(dir.path(), "typo.toml", "kind = \"arr\"\nphi = [0.5]\nlength = 50\n");
    assert_eq!(ceofop(&["simulate", &spec, "--seed", "1"]).status.code(), Some(4));
    let f = write(dir.path(), "x.txt", "1\n2\n");
    assert_eq!(ceofop(&["detect", &f, "--alpha", "1.5"]).status.code(), Some(4));
    assert_eq!(ceofop(&["bench", "--builtin", "nope"]).status.code(), Some(4));
    assert_eq!(ceofop(&["detect"]).status.code(), Some(2));
}

#[test]
fn delta_with_identical_parts_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "p.toml", "kind = \"ar\"\nphi = [0.2]\nlength = 1\n");
    let o = ceofop(&["delta", "--p", &p, "--l-mc", "20000", "--seed", "3", "--theta-grid", "0.1:0.9:0.2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("schema,gamma,theta,delta"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 5);
    for r in rows {
        let v: f64 = r.rsplit(',').next().unwrap().parse().unwrap();
        assert!(v.abs() < 1e-12, "{r}");
    }
}

#[test]
fn constant_series_has_a_zero_profile() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "c.txt", &"2.5\n".repeat(400));
    let o = ceofop(&["profile", &f, "--order", "2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.lines().count() > 300);
    for r in out.lines().skip(1) {
        assert!(r.starts_with("ceofop.profile/1,ceofop,"));
        assert_eq!(r.rsplit(',').next().unwrap().parse::<f64>().unwrap(), 0.0, "{r}");
    }
    let o = ceofop(&["profile", &f, "--stat", "bdexp"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).lines().skip(1).all(|r| r.ends_with(",0")));
}

#[test]
fn outputs_do_not_depend_on_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let plan = write(
        dir.path(),
        "plan.toml",
        "name = \"tiny\"\nmode = \"multi\"\nlength_windows = 30\ncenters = [0.33, 0.67]\n\
         statistics = [\"ceofop\", \"bdcorr\"]\n\n[process]\nkind = \"ar\"\nphi = [0.1, 0.6, 0.1]\n",
    );
    let mut outputs = Vec::new();
    for threads in ["1", "3"] {
        let out_dir = dir.path().join(format!("t{threads}"));
        let o = ceofop(&[
            "--threads",
            threads,
            "bench",
            "--plan",
            &plan,
            "--trials",
            "6",
            "--seed",
            "9",
            "--out-dir",
            out_dir.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        let csv = fs::read_to_string(out_dir.join("tiny.trials.csv")).unwrap();
        let json = fs::read_to_string(out_dir.join("tiny.summary.json")).unwrap();
        outputs.push((csv, json, stdout(&o)));
    }
    assert_eq!(outputs[0], outputs[1]);
    assert!(outputs[0].0.starts_with("schema,trial,statistic,"));
}

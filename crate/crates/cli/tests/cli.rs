use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn fixture(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "tests", "fixtures", name].iter().collect();
    p.to_string_lossy().into_owned()
}

fn copack(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_copack"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn field(text: &str, key: &str) -> String {
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key}=")))
        .unwrap_or_else(|| panic!("no {key} in {text}"))
        .to_string()
}

#[test]
fn stab_c5() {
    let o = copack(&["stab", "--graph", &fixture("c5.dimacs")]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert_eq!(field(&s, "alpha"), "2");
    let t: f64 = field(&s, "threshold").parse().unwrap();
    assert!((t - 2.0).abs() <= 1e-3);
    let dual: f64 = field(&s, "dual").parse().unwrap();
    assert_eq!(dual, 2.0);
    let gap: f64 = field(&s, "gap").parse().unwrap();
    assert!(gap <= 2e-3);
}

#[test]
fn stab_k6_and_petersen() {
    let o = copack(&["stab", "--graph", &fixture("k6.dimacs")]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(field(&stdout(&o), "alpha"), "1");
    let o = copack(&["stab", "--graph", &fixture("petersen.dimacs")]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(field(&stdout(&o), "alpha"), "4");
}

#[test]
fn stab_weighted() {
    let o = copack(&["stab", "--graph", &fixture("c5.dimacs"), "--weights", &fixture("c5.weights")]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    let a: f64 = field(&s, "alpha_w").parse().unwrap();
    assert_eq!(a, 3.0);
    let t: f64 = field(&s, "threshold").parse().unwrap();
    assert!((t - 3.0).abs() <= 1e-3);
}

#[test]
fn copositive_examples() {
    let o = copack(&["copositive", "--matrix", &fixture("identity.txt"), "--mode", "exact"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(field(&stdout(&o), "verdict"), "Copositive");

    let o = copack(&["copositive", "--matrix", &fixture("horn.txt"), "--mode", "exact"]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert_eq!(field(&s, "verdict"), "Copositive");
    assert!(s.contains("not positive semidefinite"), "{s}");

    for mode in ["exact", "grid"] {
        let o = copack(&["copositive", "--matrix", &fixture("offdiag.txt"), "--mode", mode]);
        assert_eq!(o.status.code(), Some(0));
        let s = stdout(&o);
        assert_eq!(field(&s, "verdict"), "NotCopositive");
        assert!(s.contains("witness=["), "{s}");
        let v: f64 = field(&s, "witness_value").parse().unwrap();
        assert!(v < 0.0);
    }
}

#[test]
fn kissing_delsarte_summary() {
    let o = copack(&["kissing", "--dim", "8", "--degree", "6", "--mode", "delsarte"]);
    assert_eq!(o.status.code(), Some(0));
    let line = stdout(&o).lines().next().unwrap().to_string();
    assert!(line.starts_with("mode=delsarte dim=8 d=6 bound="), "{line}");
    assert!(line.ends_with("certified=true"), "{line}");
    let b: f64 = line.split("bound=").nth(1).unwrap().split(' ').next().unwrap().parse().unwrap();
    assert!((240.0..=240.5).contains(&b));

    let o = copack(&["kissing", "--dim", "3", "--degree", "10", "--mode", "delsarte"]);
    let line = stdout(&o).lines().next().unwrap().to_string();
    let b: f64 = line.split("bound=").nth(1).unwrap().split(' ').next().unwrap().parse().unwrap();
    assert!((12.8..=13.5).contains(&b), "{line}");
}

#[test]
fn kissing_reports_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for out in [&a, &b] {
        let o = copack(&[
            "kissing", "--dim", "2", "--degree", "8", "--mode", "copositive", "--seed", "42", "--max-iters", "6",
            "--out", out.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        assert!(stdout(&o).starts_with("mode=copositive dim=2 d=8 bound="));
    }
    let ja = fs::read(&a).unwrap();
    assert_eq!(ja, fs::read(&b).unwrap());
    let v: serde_json::Value = serde_json::from_slice(&ja).unwrap();
    for key in [
        "tool_version", "subcommand", "inputs", "mode", "bound", "certified", "iterations", "cuts", "trace", "seed",
    ] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["seed"], 42);
    assert_eq!(v["certified"], false);
    let cuts = v["cuts"].as_array().unwrap();
    assert!(!cuts.is_empty());
    assert!(cuts[0]["points"].as_array().unwrap().len() >= 2);
    assert!(cuts[0]["energy"].as_f64().unwrap() < 0.0);
}

#[test]
fn kissing_csv_one_row_per_iteration() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.csv");
    let o = copack(&[
        "kissing", "--dim", "2", "--degree", "6", "--mode", "copositive", "--max-iters", "3", "--format", "csv",
        "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let csv = fs::read_to_string(&out).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("iteration,objective"));
    let rows: Vec<&str> = lines.collect();
    assert!((1..=3).contains(&rows.len()));
    assert!(rows[0].starts_with("1,"));
}

#[test]
fn exit_code_usage() {
    assert_eq!(copack(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(copack(&["stab", "--graph", &fixture("c5.dimacs"), "--bogus"]).status.code(), Some(2));
    assert_eq!(copack(&["kissing", "--dim", "x", "--degree", "4", "--mode", "delsarte"]).status.code(), Some(2));
    assert_eq!(copack(&["kissing", "--dim", "1", "--degree", "4", "--mode", "delsarte"]).status.code(), Some(2));
    assert_eq!(
        copack(&["kissing", "--dim", "3", "--degree", "4", "--mode", "delsarte", "--grid", "8"]).status.code(),
        Some(2)
    );
    assert_eq!(copack(&["copositive", "--matrix", &fixture("identity.txt"), "--mode", "fuzzy"]).status.code(), Some(2));
    let o = Command::new(env!("CARGO_BIN_EXE_copack"))
        .args(["kissing", "--dim", "3", "--degree", "4", "--mode", "delsarte"])
        .env("COPACK_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn exit_code_parse() {
    let o = copack(&["stab", "--graph", &fixture("bad.dimacs")]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
    let o = copack(&["copositive", "--matrix", &fixture("asymmetric.txt"), "--mode", "exact"]);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(copack(&["stab", "--graph", "/nonexistent/graph.dimacs"]).status.code(), Some(3));
}

#[test]
fn exit_code_size_cap() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("big.dimacs");
    fs::write(&g, "p edge 41 1\ne 1 2\n").unwrap();
    assert_eq!(copack(&["stab", "--graph", g.to_str().unwrap()]).status.code(), Some(4));
    let m = dir.path().join("big.txt");
    let rows: Vec<String> = (0..19)
        .map(|i| (0..19).map(|j| if i == j { "1" } else { "0" }).collect::<Vec<_>>().join(" "))
        .collect();
    fs::write(&m, rows.join("\n")).unwrap();
    assert_eq!(copack(&["copositive", "--matrix", m.to_str().unwrap(), "--mode", "exact"]).status.code(), Some(4));
    assert_eq!(
        copack(&["kissing", "--dim", "3", "--degree", "25", "--mode", "delsarte"]).status.code(),
        Some(4)
    );
}

#[test]
fn exit_code_infeasible() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let o = copack(&[
        "kissing", "--dim", "3", "--degree", "0", "--mode", "copositive", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(5));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert!(v["status"].as_str().unwrap().starts_with("infeasible"));
    assert!(v["bound"].is_null());
    assert_eq!(
        copack(&["kissing", "--dim", "3", "--degree", "0", "--mode", "delsarte"]).status.code(),
        Some(5)
    );
}

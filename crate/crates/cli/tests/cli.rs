use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn hyptree(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hyptree"))
        .args(args)
        .env_remove("HYPTREE_PRIME")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

fn scratch(name: &str, contents: &str) -> PathBuf {
    let path = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name);
    std::fs::write(&path, contents).unwrap();
    path
}

#[test]
fn ball_dot_has_one_node_per_vertex() {
    let out = hyptree(&["tree", "ball", "--prime", "2", "--radius", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.starts_with("graph ball {"));
    let nodes = text.lines().filter(|l| l.contains("[label=")).count();
    let edges = text.lines().filter(|l| l.contains(" -- ")).count();
    assert_eq!(nodes, 1 + 3 + 3 * 2);
    assert_eq!(edges, nodes - 1);
}

#[test]
fn ball_marks_the_closeness_line() {
    let out = hyptree(&["tree", "ball", "--prime", "3", "--radius", "2", "--line", "0", "inf"]);
    let text = stdout(&out);
    let marked: Vec<&str> = text.lines().filter(|l| l.contains("closeness=true")).collect();
    assert_eq!(marked.len(), 5);
    assert!(marked.iter().any(|l| l.contains("\"2:0\"")));
}

#[test]
fn output_is_deterministic() {
    let args = ["horo", "profile", "--pair", "1/2", "3", "--radius", "3", "--prime", "3"];
    assert_eq!(hyptree(&args).stdout, hyptree(&args).stdout);
    let args = ["tree", "ball", "--prime", "5", "--radius", "2", "--format", "json"];
    assert_eq!(hyptree(&args).stdout, hyptree(&args).stdout);
}

#[test]
fn profile_rows_on_the_line_are_h_squared() {
    let out = hyptree(&["horo", "profile", "--pair", "0", "inf", "--radius", "4", "--prime", "3", "--H", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("vertex,k,argument_num,argument_den"));
    for row in lines {
        let cols: Vec<&str> = row.split(',').collect();
        let k: u32 = cols[1].parse().unwrap();
        let num: u64 = cols[2].parse().unwrap();
        assert_eq!(num, 4 * 9u64.pow(k), "{row}");
        assert_eq!(cols[3], "1");
    }
}

#[test]
fn profile_check_passes_for_the_growth_law() {
    let out = hyptree(&["horo", "profile", "--pair", "0", "1", "--radius", "2", "--check"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn horo_table_json() {
    let out = hyptree(&["horo", "table", "--base", "inf", "--window", "-1", "1", "--format", "json"]);
    let rows = json(&out);
    let sizes: Vec<&str> = rows
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["horoball"]["size"].as_str().unwrap())
        .collect();
    assert_eq!(sizes, ["4", "2", "1"]);
}

#[test]
fn bs_subcommands() {
    let out = hyptree(&["bs", "comm", "--m", "2", "--n", "3"]);
    assert_eq!(json(&out), serde_json::json!({ "commensurable": false }));
    let out = hyptree(&["bs", "comm", "--m", "9", "--n", "27"]);
    assert_eq!(json(&out), serde_json::json!({ "commensurable": true, "root": 3 }));
    let out = hyptree(&["bs", "phi", "--word", "aba^-1", "--prime", "3"]);
    assert_eq!(json(&out)["matrix"], serde_json::json!([["1", "9"], ["0", "1"]]));
}

#[test]
fn env_sets_the_default_prime() {
    let out = Command::new(env!("CARGO_BIN_EXE_hyptree"))
        .args(["bs", "phi", "--word", "aba^-1"])
        .env("HYPTREE_PRIME", "5")
        .output()
        .unwrap();
    assert_eq!(json(&out)["matrix"], serde_json::json!([["1", "25"], ["0", "1"]]));
    let out = Command::new(env!("CARGO_BIN_EXE_hyptree"))
        .args(["bs", "phi", "--word", "aba^-1", "--prime", "2"])
        .env("HYPTREE_PRIME", "5")
        .output()
        .unwrap();
    assert_eq!(json(&out)["matrix"], serde_json::json!([["1", "4"], ["0", "1"]]));
}

#[test]
fn rig_s0_threshold() {
    let out = hyptree(&["rig", "s0", "--prime", "2", "--k", "1", "--D", "1", "--K0", "1"]);
    let t = json(&out);
    assert_eq!(t["s0"], 4);
    assert_eq!(t["b3"], 1);
}

fn swapped_table() -> String {
    let mut out = String::new();
    for n in -81 * 9..=81 * 9 {
        let x = format!("{n}/9");
        let fx = match n {
            1 => "2/9".to_string(),
            2 => "1/9".to_string(),
            _ => x.clone(),
        };
        out.push_str(&format!("{{\"x\": \"{x}\", \"fx\": \"{fx}\"}}\n"));
    }
    out
}

#[test]
fn rig_verify_finds_violations() {
    let path = scratch("swapped.jsonl", &swapped_table());
    let p = path.to_str().unwrap();
    let common = [
        "rig", "verify", "--map", p, "--prime", "3", "--L", "1", "--window", "4", "--depth", "2",
        "--k", "1", "--D", "2",
    ];
    let out = hyptree(&[&common[..], &["--per-bound", "2"]].concat());
    assert_eq!(out.status.code(), Some(2));
    let report = json(&out);
    assert!(!report["violations"].as_array().unwrap().is_empty());
    // with the literal perimeter bound L = 1 nothing is admissible
    let out = hyptree(&common);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["checked"], 0);
}

#[test]
fn rig_extract_recovers_the_multiplier() {
    let mut table = String::new();
    for n in -8..=8 {
        table.push_str(&format!("{{\"x\": \"{n}/2\", \"fx\": \"{}/2\"}}\n", 3 * n));
    }
    let path = scratch("triple.jsonl", &table);
    let p = path.to_str().unwrap();
    // the generator 1/2^s0 is off the table, so the window is reported
    let out = hyptree(&["rig", "extract", "--map", p, "--prime", "2", "--window", "2", "--depth", "1", "--K0", "3"]);
    assert_eq!(out.status.code(), Some(1));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "missing_point");
}

#[test]
fn comm_subcommands() {
    let out = hyptree(&["comm", "bound", "--g", "1,0;0,2", "--maxlen", "6", "--prime", "3"]);
    let prof = json(&out);
    assert_eq!(prof["d"], "2");
    assert_eq!(prof["status"], "STABLE");
    let out = hyptree(&["comm", "transport", "--from", "1", "0"]);
    assert_eq!(json(&out), serde_json::json!([["1", "-1"], ["1", "0"]]));
}

#[test]
fn exit_codes() {
    assert_eq!(hyptree(&["frobnicate"]).status.code(), Some(64));
    assert_eq!(hyptree(&["tree", "ball"]).status.code(), Some(64));
    assert_eq!(hyptree(&["--help"]).status.code(), Some(0));
    assert_eq!(hyptree(&["--version"]).status.code(), Some(0));
    let out = hyptree(&["tree", "ball", "--prime", "4", "--radius", "1"]);
    assert_eq!(out.status.code(), Some(64));
    let out = hyptree(&["comm", "transport", "--from", "2", "2"]);
    assert_eq!(out.status.code(), Some(1));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "equal_points");
    let out = hyptree(&["horo", "profile", "--pair", "0", "inf", "--H", "1"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn every_leaf_has_a_selftest() {
    let leaves = [
        ["tree", "ball"],
        ["tree", "geodesic"],
        ["horo", "table"],
        ["horo", "profile"],
        ["bs", "comm"],
        ["bs", "phi"],
        ["rig", "s0"],
        ["rig", "verify"],
        ["rig", "extract"],
        ["comm", "bound"],
        ["comm", "transport"],
    ];
    for leaf in leaves {
        let out = hyptree(&[leaf[0], leaf[1], "--selftest", "--prime", "3"]);
        assert_eq!(out.status.code(), Some(0), "{leaf:?}: {}", stdout(&out));
        assert_eq!(json(&out)["passed"], true);
    }
}

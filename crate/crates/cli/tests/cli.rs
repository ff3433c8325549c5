use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

use teams_core::dsl;
use teams_core::realise::{interaction_lts, validate_bisimulation, NEquivalence};
use teams_core::report::parse_jsonl;
use teams_core::teams::team;

fn model(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../models").join(name)
}

fn teams(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_teams")).args(args).output().expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn records(o: &Output) -> Vec<Value> {
    parse_jsonl(&stdout(o)).expect("valid report")
}

#[test]
fn team_writes_dot() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out.dot");
    let o = teams(&["team", path(&model("race.ta")), "--dot", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("9 reachable states, 13 transitions"));
    let dot = std::fs::read_to_string(&out).unwrap();
    assert!(dot.starts_with("digraph"));
    assert_eq!(dot.matches("shape=doublecircle").count(), 1);
    assert_eq!(dot.matches("shape=").count(), 1 + 9);
}

#[test]
fn dot_is_deterministic() {
    let a = teams(&["dot", path(&model("race.ta"))]);
    let b = teams(&["--sequential", "dot", path(&model("race.ta"))]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn responsiveness_exit_codes() {
    let strict = teams(&["check-rsp", path(&model("race.ta"))]);
    assert_eq!(strict.status.code(), Some(1));
    assert!(stdout(&strict).contains("starved: Ctrl at (1,1,1)"));
    let weak = teams(&["check-rsp", path(&model("race.ta")), "--weak"]);
    assert_eq!(weak.status.code(), Some(0));
    let rcp = teams(&["check-rcp", path(&model("race.ta"))]);
    assert_eq!(rcp.status.code(), Some(0));
}

#[test]
fn responsiveness_report() {
    let o = teams(&["--json", "check-rsp", path(&model("race.ta"))]);
    let recs = records(&o);
    let states: Vec<&str> =
        recs.iter().filter(|r| r["record"] == "violation").map(|r| r["state"].as_str().unwrap()).collect();
    assert_eq!(states, ["(1,1,1)", "(2,0,1)", "(2,1,0)"]);
    assert_eq!(recs.last().unwrap()["holds"], false);
}

#[test]
fn parse_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.ta");
    std::fs::write(&bad, "system S {\n  component A {\n    output a;\n    init 0;\n    0 -> 1: b!;\n  }\n}\n").unwrap();
    let o = teams(&["team", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains(":5:13:"), "{}", stderr(&o));
    assert!(stderr(&o).contains("`b`"));
    let empty = dir.path().join("empty.ta");
    std::fs::write(&empty, "").unwrap();
    let o = teams(&["team", empty.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("no system declared"));
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(teams(&["team"]).status.code(), Some(2));
    assert_eq!(teams(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(teams(&["team", "/nonexistent/file.ta"]).status.code(), Some(2));
}

#[test]
fn missing_type_needs_default() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("s.ta");
    let text = std::fs::read_to_string(model("race.ta")).unwrap().replace("sync finish = [1,1] -> [1,1];", "");
    std::fs::write(&f, text).unwrap();
    assert_eq!(teams(&["team", f.to_str().unwrap()]).status.code(), Some(2));
    let o = teams(&["team", f.to_str().unwrap(), "--default-type", "[1,1] -> [1,1]"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("9 reachable states"));
}

#[test]
fn realise_report_revalidates() {
    let o = teams(&["--json", "realise", path(&model("m_race.ta"))]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let recs = records(&o);
    let m = dsl::parse(&std::fs::read_to_string(model("m_race.ta")).unwrap()).unwrap().globals[0].to_model().unwrap();

    let blocks: BTreeMap<String, Vec<Vec<String>>> = recs
        .iter()
        .filter(|r| r["record"] == "partition")
        .map(|r| (r["component"].as_str().unwrap().to_string(), serde_json::from_value(r["blocks"].clone()).unwrap()))
        .collect();
    let eq = NEquivalence::from_blocks(&m, &blocks).unwrap();
    assert!(teams_core::realise::check_rc(&m, &eq).holds);

    let text = recs.iter().find(|r| r["record"] == "system").unwrap()["text"].as_str().unwrap().to_string();
    let sys = dsl::parse(&text).unwrap().systems[0].to_system().unwrap();
    let ta = team(&sys, m.spec()).unwrap();
    let lts = interaction_lts(&ta);
    let pairs: Vec<(Vec<String>, String)> =
        serde_json::from_value(recs.iter().find(|r| r["record"] == "bisimulation").unwrap()["pairs"].clone()).unwrap();
    assert_eq!(pairs.len(), 4);
    let relation: Vec<(usize, usize)> = pairs
        .iter()
        .map(|(local, g)| {
            let local: Vec<&str> = local.iter().map(String::as_str).collect();
            let q = sys.state(&local).unwrap();
            (lts.state_id(&q).unwrap(), m.lts().state_id(g).unwrap())
        })
        .collect();
    assert!(validate_bisimulation(&lts, m.lts(), &relation));
}

#[test]
fn realise_verdicts() {
    let t1 = teams(&["realise", path(&model("table1.ta"))]);
    assert_eq!(t1.status.code(), Some(0));
    assert!(stdout(&t1).contains("REALISED: team has 4 states, model has 5"));
    let three = teams(&["realise", path(&model("three_senders.ta"))]);
    assert_eq!(three.status.code(), Some(1));
    assert!(stdout(&three).contains("INCONCLUSIVE"));
}

#[test]
fn compose_race_with_arbiter() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("composed.ta");
    let o = teams(&[
        "--json",
        "compose",
        path(&model("arb.ta")),
        path(&model("racev.ta")),
        "--interface-sts",
        path(&model("interface.ta")),
        "--weak",
        "-o",
        out.to_str().unwrap(),
    ]);
    let recs = records(&o);
    let verdict = recs.last().unwrap();
    assert_eq!(verdict["states"], 11);
    assert_eq!(verdict["transitions"], 16);
    assert_eq!(verdict["receptive"], true);
    let rsp = recs
        .iter()
        .find(|r| r["record"] == "interface-check" && r["requirement"] == "rsp({Arbiter},ask)@(0,2,0,0)")
        .expect("interface requirement reported");
    assert_eq!(rsp["strict"]["satisfied"], false);
    assert_eq!(rsp["weak"]["satisfied"], true);
    let composed = dsl::parse(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let decl = &composed.systems[0];
    let ta = team(&decl.to_system().unwrap(), &decl.spec()).unwrap();
    assert_eq!(ta.lts().reachable().len(), 11);
}

#[test]
fn project_and_products() {
    let o = teams(&["project", path(&model("featured_race.ta")), "--product", "lock"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let doc = dsl::parse(&stdout(&o)).unwrap();
    let sys = doc.systems[0].to_system().unwrap();
    assert!(sys.component("Ctrl").unwrap().same_as(&teams_core::fixtures::ctrl_v()));
    let bad = teams(&["project", path(&model("featured_race.ta")), "--product", "lock,unlock"]);
    assert_eq!(bad.status.code(), Some(2));
    let all = teams(&["products-check", path(&model("featured_race.ta"))]);
    assert_eq!(all.status.code(), Some(0));
    assert!(stdout(&all).contains("{lock}: strict receptive: true"));
    let rsp = teams(&["products-check", path(&model("featured_race.ta")), "--property", "responsive"]);
    assert_eq!(rsp.status.code(), Some(1));
}

#[test]
fn pdl_formulas() {
    let o = teams(&["pdl", path(&model("m_race.ta")), "--formula", path(&model("race_formulas.ta"))]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("both_can_finish: true"));
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("f.txt");
    std::fs::write(&f, "[some] false\n").unwrap();
    let o = teams(&["pdl", path(&model("m_race.ta")), "--formula", f.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("counterexample: {Ctrl}->{R1,R2}:start"));
}

use serde_json::Value;
use std::process::{Command, Output};

fn sphavg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sphavg")).args(args).output().expect("binary runs")
}

fn json_of(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("valid json")
}

fn schema() -> jsonschema::JSONSchema {
    let text = include_str!("../schema/output.schema.json");
    let v: Value = serde_json::from_str(text).unwrap();
    jsonschema::JSONSchema::compile(&v).expect("schema compiles")
}

fn assert_valid(v: &Value) {
    let s = schema();
    let msgs: Vec<String> = match s.validate(v) {
        Ok(()) => Vec::new(),
        Err(errors) => errors.map(|e| format!("{} at {}", e, e.instance_path)).collect(),
    };
    assert!(msgs.is_empty(), "schema violations: {msgs:?}");
}

#[test]
fn sphere_csv_has_config_and_fifty_rows() {
    let out = sphavg(&["sphere", "--dim", "5", "--lambda2", "1", "--lambda2-max", "50", "--format", "csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("# config: "));
    assert_eq!(lines[1], "lambda2,count,ratio,admissible");
    assert_eq!(lines.len(), 52);
    assert!(lines[2].starts_with("1,10,"));
}

#[test]
fn d4_flags_multiples_of_four() {
    let v = json_of(&sphavg(&["sphere", "--dim", "4", "--lambda2", "1", "--lambda2-max", "12"]));
    let rows = v["results"]["rows"].as_array().unwrap();
    for r in rows {
        let l2 = r["lambda2"].as_u64().unwrap();
        assert_eq!(r["admissible"].as_bool().unwrap(), l2 % 4 != 0);
    }
    assert_valid(&v);
}

#[test]
fn every_command_validates_against_schema() {
    let runs: Vec<Vec<&str>> = vec![
        vec!["sphere", "--dim", "5", "--lambda2", "3", "--lambda2-max", "2"],
        vec!["kloosterman", "--dim", "5", "--lambda2", "25", "--oracle"],
        vec!["residual", "--dim", "5", "--lambda2", "9", "--lambda2-max", "16", "--grid", "300"],
        vec!["improve", "--dim", "5", "--lambda2", "4", "--lambda2-max", "9"],
        vec!["counterexample", "--dim", "5", "--lambda2", "9"],
        vec!["proofsplit", "--dim", "4", "--lambda2", "49", "--cutoff-N", "3", "--grid", "300"],
        vec!["proofsplit", "--dim", "4", "--lambda2", "9", "--cutoff-N", "5"],
    ];
    for args in runs {
        let v = json_of(&sphavg(&args));
        assert_valid(&v);
        assert_eq!(v["config"]["command"], args[0]);
    }
}

#[test]
fn kloosterman_single_modulus_has_ratio_one() {
    let v = json_of(&sphavg(&["kloosterman", "--dim", "5", "--lambda2", "49", "--q-min", "1", "--q-max", "1"]));
    let rows = v["results"]["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0]["certificate"]["ratio"].as_f64().unwrap(), 1.0);
}

#[test]
fn reruns_are_byte_identical_and_replay() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    let p = path.to_str().unwrap();
    let args = ["residual", "--dim", "5", "--lambda2", "9", "--lambda2-max", "25", "--grid", "500", "--seed", "7"];
    let a = sphavg(&args);
    let b = sphavg(&args);
    assert_eq!(a.stdout, b.stdout);
    let mut with_out = args.to_vec();
    with_out.extend(["--out", p]);
    assert!(sphavg(&with_out).status.success());
    assert_eq!(std::fs::read(&path).unwrap(), a.stdout);
    let replayed = sphavg(&["replay", p]);
    assert!(replayed.status.success(), "{}", String::from_utf8_lossy(&replayed.stderr));
    assert_eq!(replayed.stdout, a.stdout);

    let csv_path = dir.path().join("r.csv");
    let mut csv_args = args.to_vec();
    csv_args.extend(["--format", "csv", "--out", csv_path.to_str().unwrap()]);
    assert!(sphavg(&csv_args).status.success());
    let again = sphavg(&["replay", csv_path.to_str().unwrap()]);
    assert!(again.status.success());
    assert_eq!(again.stdout, std::fs::read(&csv_path).unwrap());
}

#[test]
fn exit_codes() {
    assert_eq!(sphavg(&["sphere", "--bogus"]).status.code(), Some(1));
    assert_eq!(sphavg(&["nonsense"]).status.code(), Some(1));
    assert_eq!(sphavg(&["--help"]).status.code(), Some(0));
    assert_eq!(sphavg(&["kloosterman", "--dim", "5"]).status.code(), Some(1));
    // (4·9 + 1)-friendly torus in d = 5 exceeds the memory budget
    assert_eq!(sphavg(&["counterexample", "--dim", "5", "--lambda2", "81"]).status.code(), Some(3));
    assert_eq!(sphavg(&["improve", "--dim", "4", "--lambda2", "4"]).status.code(), Some(1));
}

#[test]
fn corrupted_selftest_exits_two() {
    let out = sphavg(&["selftest", "--corrupt-roots", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(2));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("kloosterman_factored_vs_direct,false"));
}

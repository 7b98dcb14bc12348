use std::path::Path;
use std::process::{Command, Output};

fn tribell(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tribell"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn export(dir: &Path, model: &str, params: &[&str]) -> String {
    let path = dir.join(format!("{model}.txt"));
    let mut args = vec!["export", model, "--param"];
    args.extend_from_slice(params);
    args.extend(["--out", path.to_str().unwrap()]);
    let out = tribell(&args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    path.to_str().unwrap().to_string()
}

#[test]
fn exported_models_evaluate_to_their_formulas() {
    let dir = tempfile::tempdir().unwrap();
    for (model, params, inequality, s) in [
        ("I", vec!["1/4", "1/2"], "mermin", "7/2"),
        ("II", vec!["1/2"], "svetlichny", "6"),
        ("III", vec!["3/4"], "ns2", "9/2"),
        ("IV", vec!["1/8"], "mermin", "9/4"),
        ("V", vec!["1"], "svetlichny", "8"),
    ] {
        let path = export(dir.path(), model, &params);
        let out = tribell(&["eval", &path, "--inequality", inequality, "--format", "json"]);
        let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
        assert_eq!(report["schema_version"], 1);
        assert_eq!(report["S"][inequality], s, "model {model}");
    }
}

#[test]
fn eval_exit_status_follows_checks() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("independent.txt");
    std::fs::write(
        &good,
        "lambda u(A0) u(A1) v(B0) v(B1) w(C0) w(C1) rho(xyz) rho(xyz') rho(xy'z) rho(xy'z') rho(x'yz) rho(x'yz') rho(x'y'z) rho(x'y'z')\n\
         1 +1 +1 +1 +1 +1 -1 1/3 1/3 1/3 1/3 1/3 1/3 1/3 1/3\n\
         2 -1 +1 +1 -1 +1 +1 2/3 2/3 2/3 2/3 2/3 2/3 2/3 2/3\n",
    )
    .unwrap();
    let out = tribell(&["eval", good.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("no-signaling: pass"));

    let out = tribell(&[
        "eval",
        good.to_str().unwrap(),
        "--inequality",
        "mermin",
        "--scenario",
        "one-sided:A",
        "--budget",
        "M1=0",
    ]);
    assert!(out.status.success(), "{}", stdout(&out));

    let signaling = export(dir.path(), "II", &["1/2"]);
    assert_eq!(tribell(&["eval", &signaling]).status.code(), Some(1));
}

#[test]
fn malformed_files_are_diagnosed() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.txt");
    std::fs::write(
        &path,
        "lambda u(A0) u(A1) v(B0) v(B1) w(C0) w(C1) rho(x'yz)\n1 +1 +1 +1 +1 +1 +1 1\n2 +1 +1 +1 +1 +1 +1 1/2\n",
    )
    .unwrap();
    let out = tribell(&["eval", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("x'yz") && err.contains("3/2"), "{err}");

    std::fs::write(
        &path,
        "lambda u(A0) u(A1) v(B0) v(B1) w(C0) w(C1)\n1 +1 +1 +1 +1 2 +1\n",
    )
    .unwrap();
    let out = tribell(&["eval", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("line 2, column 15"), "{err}");
}

#[test]
fn quantum_reports_known_values() {
    let out = tribell(&["quantum"]);
    assert!(out.status.success());
    let text = stdout(&out);
    for value in ["4.000000000", "5.656854249", "3.828427124"] {
        assert!(text.contains(value), "{text}");
    }
}

#[test]
fn tables_exit_status_matches_rows() {
    let out = tribell(&["tables", "--grid", "0:1:1/8", "--format", "json"]);
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let rows = report["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 45 + 4 * 9);
    let all_pass = rows.iter().all(|r| r["pass"] == true);
    assert_eq!(out.status.success(), all_pass);
    for row in rows.iter().filter(|r| r["model"] != "I") {
        assert_eq!(row["pass"], true, "{row}");
    }
}

#[test]
fn output_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for path in [&a, &b] {
        tribell(&["tables", "--grid", "0:1:1/4", "--format", "json", "--out", path.to_str().unwrap()]);
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn bounds_emits_csv() {
    let out = tribell(&[
        "bounds",
        "--inequality",
        "mermin",
        "--scenario",
        "bipartite:AB",
        "--L",
        "2",
        "--grid",
        "0:2:1",
        "--format",
        "csv",
    ]);
    assert!(out.status.success());
    assert_eq!(
        stdout(&out),
        "budget,max_S,bound,tight,violations\n0,2,2,true,0\n1,3,3,true,0\n2,4,4,true,0\n"
    );
}

#[test]
fn search_certifies_a_strategy_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = export(dir.path(), "IV", &["1/2"]);
    let out = tribell(&[
        "search",
        &path,
        "--inequality",
        "mermin",
        "--scenario",
        "bipartite:AB",
        "--grid",
        "0:2:1",
        "--format",
        "json",
    ]);
    assert!(out.status.success());
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let values: Vec<&str> = report["certificates"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["lp_max_S"].as_str().unwrap())
        .collect();
    assert_eq!(values, ["2", "3", "4"]);
}

#[test]
fn complete_writes_a_witness() {
    let dir = tempfile::tempdir().unwrap();
    let path = export(dir.path(), "I", &["0", "1"]);
    let witness = dir.path().join("witness.txt");
    let out = tribell(&[
        "complete",
        &path,
        "--budget",
        "M1=0",
        "--budget",
        "M2=2",
        "--witness",
        witness.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stdout(&out));
    let out = tribell(&["eval", witness.to_str().unwrap(), "--format", "json"]);
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["dependence"]["M1"], "0");
    assert_eq!(report["dependence"]["partial"], false);

    let path = export(dir.path(), "I", &["1", "0"]);
    let out = tribell(&["complete", &path, "--budget", "M1=1", "--budget", "M2=0"]);
    assert_eq!(out.status.code(), Some(1));
}

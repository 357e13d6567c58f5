//! End-to-end tests of the `isospace` binary: the documented invocations,
//! their printed results, exit codes, and byte determinism.

use std::path::PathBuf;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_isospace"))
        .args(args)
        .env_remove("ISOSPACE_THREADS")
        .output()
        .expect("binary runs")
}

fn run_with_threads(args: &[&str], threads: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_isospace"))
        .args(args)
        .env("ISOSPACE_THREADS", threads)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf8 stdout")
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("utf8 stderr")
}

fn assert_ok(out: &Output) {
    assert!(
        out.status.success(),
        "expected success, got {:?}\nstderr: {}",
        out.status.code(),
        stderr(out)
    );
}

fn assert_exit(out: &Output, code: i32) {
    assert_eq!(
        out.status.code(),
        Some(code),
        "stderr: {}\nstdout: {}",
        stderr(out),
        stdout(out)
    );
}

fn temp_path(name: &str) -> PathBuf {
    std::env::temp_dir().join(format!("isospace-cli-{}-{name}", std::process::id()))
}

#[test]
fn list_names_every_game() {
    let out = run(&["list"]);
    assert_ok(&out);
    let text = stdout(&out);
    for game in [
        "twostage",
        "dtree",
        "chainstore",
        "trust",
        "ultimatum",
        "publicgoods",
        "aumann27",
        "aumann-device",
        "centipede",
        "ipd",
        "dice",
        "twocoin",
    ] {
        assert!(text.contains(game), "list is missing {game}");
    }
}

#[test]
fn analyze_contract_examples() {
    let out = run(&["analyze", "chainstore", "--spec", "q=1"]);
    assert_ok(&out);
    assert!(stdout(&out).contains("(0, 1)"), "got: {}", stdout(&out));

    let out = run(&["analyze", "ipd", "-N", "2", "--spec", "X=MKV,Y=MKV"]);
    assert_ok(&out);
    assert!(stdout(&out).contains("(4, 4)"), "got: {}", stdout(&out));

    let out = run(&["analyze", "twostage", "--spec", "identity"]);
    assert_ok(&out);
    assert!(stdout(&out).contains("(2, 2)"), "got: {}", stdout(&out));
}

#[test]
fn analyze_reports_dimension_and_payoffs() {
    let out = run(&["analyze", "twostage", "--spec", "identity"]);
    assert_ok(&out);
    let text = stdout(&out);
    assert!(text.contains("free parameters (3): p, q, r"), "got: {text}");
    assert!(text.contains("X: 3 - 2*p + p*q + 3*p*r - q"), "got: {text}");
}

#[test]
fn usage_failures_exit_two() {
    assert_exit(&run(&["analyze", "nosuch"]), 2);
    assert_exit(&run(&["analyze", "twostage", "--spec", "bogus"]), 2);
    assert_exit(&run(&["analyze", "twostage", "--spec", "p=2"]), 2);
    assert_exit(&run(&["analyze", "ipd", "-N", "9"]), 2);
    assert_exit(&run(&["table", "ipd", "--family", "nosuch"]), 2);
    assert_exit(&run(&["table", "twostage", "--rows", "nine", "--cols", "nope"]), 2);
    assert_exit(&run(&["analyze", "chainstore", "--spec", "rho=1"]), 2);
    assert_exit(&run(&["measure", "twostage", "--at", "zz=1"]), 2);
}

#[test]
fn table_ipd_named_grid() {
    let out = run(&["table", "ipd", "-N", "2", "--family", "named"]);
    assert_ok(&out);
    let text = stdout(&out);
    assert!(text.contains("| MKV | (4, 4) | (3, 3) | (4, 4) | (2, 2) |"), "got: {text}");
    assert!(text.contains("| B | (3, 3) | (2, 2) | (5, 2) | (2, 2) |"), "got: {text}");
    assert!(text.contains("| TFT | (4, 4) | (2, 5) | (4, 4) | (1, 4) |"), "got: {text}");
    assert!(text.contains("| ALLD | (2, 2) | (2, 2) | (4, 1) | (2, 2) |"), "got: {text}");
    assert!(text.contains("MKV x MKV: (4, 4)"), "got: {text}");
}

#[test]
fn table_centipede_markov_grid() {
    let out = run(&["table", "centipede", "--family", "markov"]);
    assert_ok(&out);
    let text = stdout(&out);
    let data_rows = text
        .lines()
        .filter(|l| l.starts_with("| ") && !l.starts_with("| |"))
        .count();
    assert_eq!(data_rows, 8, "got: {text}");
    assert!(
        text.contains("| y1=x1,y2=x2,y3=x3 | (6, 5) | (6, 5) | (6, 5) | (6, 5) |"),
        "got: {text}"
    );
    assert!(text.contains("| B | (4, 6) | (4, 6) | (2, 4) | (1, 0) |"), "got: {text}");
}

#[test]
fn table_publicgoods_anticorr() {
    let out = run(&["table", "publicgoods", "--family", "anticorr"]);
    assert_ok(&out);
    let text = stdout(&out);
    assert!(text.contains("(6, 6)"), "got: {text}");
    assert!(text.contains("x2=1-y1 x y2=1-x1: (6, 6)"), "got: {text}");
}

fn parse_curve(text: &str) -> Vec<Vec<f64>> {
    text.lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().expect("curve field")).collect())
        .collect()
}

#[test]
fn rho_sweep_reproduces_reference() {
    let out = run(&[
        "curve", "rho-sweep", "--game", "dtree", "--from", "-1", "--to", "1", "--steps", "9",
    ]);
    assert_ok(&out);
    let rows = parse_curve(&stdout(&out));
    assert_eq!(rows.len(), 9);
    let expected = [3.0, 3.0, 3.0, 3.0, 3.0, 2.02693, 1.40068, 1.03032, 1.0];
    for (row, want) in rows.iter().zip(expected) {
        assert!(
            (row[4] - want).abs() < 2e-4,
            "rho {}: value {} vs {want}",
            row[0],
            row[4]
        );
    }
    // The anticorrelated end parks the first move at 0, the correlated end
    // at 1.
    assert!(rows[0][1].abs() < 2e-3 && (rows[0][2] - 1.0).abs() < 2e-3);
    assert!((rows[8][1] - 1.0).abs() < 2e-3);

    let out = run(&["curve", "rho-sweep", "--from", "0", "--steps", "1"]);
    assert_ok(&out);
    let rows = parse_curve(&stdout(&out));
    assert_eq!(rows.len(), 1);
    assert!((rows[0][4] - 3.0).abs() < 2e-4, "got {}", rows[0][4]);
}

#[test]
fn entropy_max_endpoints() {
    let out = run(&[
        "curve", "entropy-max", "--from", "-1", "--to", "1", "--steps", "3",
    ]);
    assert_ok(&out);
    let rows = parse_curve(&stdout(&out));
    let ln2 = std::f64::consts::LN_2;
    assert!((rows[0][4] - ln2).abs() < 1e-5, "got {}", rows[0][4]);
    assert!((rows[1][4] - 2.0 * ln2).abs() < 1e-5, "got {}", rows[1][4]);
    assert!((rows[2][4] - ln2).abs() < 1e-5, "got {}", rows[2][4]);
}

#[test]
fn csv_table_round_trips() {
    let out = run(&["table", "ipd", "-N", "2", "--family", "named", "--format", "csv"]);
    assert_ok(&out);
    let text = stdout(&out);

    let parse = |data: &str| -> (csv::StringRecord, Vec<csv::StringRecord>) {
        let mut reader = csv::Reader::from_reader(data.as_bytes());
        let headers = reader.headers().expect("csv headers").clone();
        let records: Vec<csv::StringRecord> =
            reader.records().map(|r| r.expect("csv record")).collect();
        (headers, records)
    };
    let (headers, records) = parse(&text);
    assert_eq!(
        headers,
        csv::StringRecord::from(vec!["rowSpec", "colSpec", "payoffX", "payoffY", "kind"])
    );
    assert_eq!(records.len(), 16);
    assert!(records
        .iter()
        .any(|r| &r[0] == "MKV" && &r[1] == "MKV" && &r[2] == "4" && &r[3] == "4"));

    // Writing the parsed records back out and re-reading them changes
    // nothing.
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(&headers).expect("header");
    for r in &records {
        writer.write_record(r).expect("record");
    }
    let rewritten = String::from_utf8(writer.into_inner().expect("flush")).expect("utf8");
    let (headers2, records2) = parse(&rewritten);
    assert_eq!(headers, headers2);
    assert_eq!(records, records2);
}

#[test]
fn identical_invocations_are_byte_identical() {
    let args = ["table", "ipd", "-N", "2", "--family", "extended", "--format", "csv"];
    let a = run(&args);
    let b = run_with_threads(&args, "2");
    let c = run_with_threads(&args, "1");
    assert_ok(&a);
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stdout, c.stdout);

    let args = ["verify", "twostage", "--spec", "rho=0", "--samples", "5000"];
    let a = run(&args);
    let b = run(&args);
    assert_ok(&a);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn verify_is_exact_on_deterministic_specs() {
    let out = run(&["verify", "chainstore", "--spec", "q=1", "--samples", "2000"]);
    assert_ok(&out);
    let text = stdout(&out);
    assert!(text.contains("X: analytic 0, sampled 0.000000 +/- 0.000000, z = 0.00"), "got: {text}");
    assert!(text.contains("Y: analytic 1, sampled 1.000000 +/- 0.000000, z = 0.00"), "got: {text}");
}

#[test]
fn verify_matches_sampled_payoffs() {
    let out = run(&["verify", "ipd", "-N", "2", "--spec", "X=IND,Y=IND", "--samples", "20000"]);
    assert_ok(&out);
    assert!(stdout(&out).contains("analytic 2"), "got: {}", stdout(&out));

    let out = run(&["verify", "twostage", "--spec", "rho=0", "--samples", "20000"]);
    assert_ok(&out);
    assert!(stdout(&out).contains("analytic 5/2"), "got: {}", stdout(&out));
}

#[test]
fn export_then_reload() {
    let path = temp_path("twostage.json");
    let out = run(&["export", "twostage", "-o", path.to_str().unwrap()]);
    assert_ok(&out);
    let out = run(&["analyze", "--game-file", path.to_str().unwrap(), "--spec", "identity"]);
    assert_ok(&out);
    assert!(stdout(&out).contains("(2, 2)"), "got: {}", stdout(&out));

    let path = temp_path("ipd3.json");
    let out = run(&["export", "ipd", "-N", "3", "-o", path.to_str().unwrap()]);
    assert_ok(&out);
    let out = run(&[
        "analyze", "--game-file", path.to_str().unwrap(), "--spec", "X=MKV,Y=MKV",
    ]);
    assert_ok(&out);
    assert!(stdout(&out).contains("(6, 6)"), "got: {}", stdout(&out));
}

#[test]
fn json_outputs_parse() {
    let out = run(&["list", "--format", "json"]);
    assert_ok(&out);
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).expect("list json");
    assert_eq!(v.as_array().map(Vec::len), Some(12));

    let out = run(&["analyze", "twostage", "--spec", "rho=1", "--format", "json"]);
    assert_ok(&out);
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).expect("analyze json");
    assert_eq!(v["dimension"], 1);
    assert_eq!(v["equilibria"][0]["payoffs"][0], "4");
    assert_eq!(v["equilibria"][0]["payoffs"][1], "3");

    let out = run(&["table", "publicgoods", "--family", "anticorr", "--format", "json"]);
    assert_ok(&out);
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).expect("table json");
    assert_eq!(v["meta_stable"][0], serde_json::json!([1, 1]));
}

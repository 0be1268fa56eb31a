use std::path::PathBuf;
use std::process::{Command, Output};

use latbabai::{csv_header_lines, LevelRow, ScanRow, Table1Row};
use serde::de::DeserializeOwned;
use serde::Serialize;

fn latbabai(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_latbabai"))
        .args(args)
        .env("LATBABAI_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn lattice_file(name: &str, body: &str) -> PathBuf {
    let path = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

/// Parses the CSV body, re-emits it under the same header and returns both texts.
fn round_trip<T: Serialize + DeserializeOwned>(text: &str) -> (String, Vec<T>) {
    let header: String = text.lines().take_while(|l| l.starts_with('#')).map(|l| format!("{l}\n")).collect();
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let rows: Vec<T> = rdr.deserialize().collect::<Result<_, _>>().unwrap();
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in &rows {
        w.serialize(r).unwrap();
    }
    (header + &String::from_utf8(w.into_inner().unwrap()).unwrap(), rows)
}

#[test]
fn random_scan_is_byte_identical_across_runs() {
    let args = ["random-scan", "--trials", "200", "--seed", "1"];
    let first = stdout(&latbabai(&args));
    assert_eq!(first, stdout(&latbabai(&args)));
    assert!(first.starts_with("# latbabai "));
    assert!(first.contains("# seed: 1\n"));
    let other = stdout(&latbabai(&["random-scan", "--trials", "200", "--seed", "2"]));
    assert_ne!(first, other);
}

#[test]
fn thread_count_does_not_change_results() {
    let run = |threads: &str| {
        let out = Command::new(env!("CARGO_BIN_EXE_latbabai"))
            .args(["random-scan", "--trials", "100", "--seed", "7"])
            .env("LATBABAI_THREADS", threads)
            .output()
            .unwrap();
        stdout(&out)
    };
    assert_eq!(run("1"), run("4"));
}

#[test]
fn csv_outputs_round_trip() {
    let t1 = stdout(&latbabai(&["table1"]));
    let (again, rows) = round_trip::<Table1Row>(&t1);
    assert_eq!(again, t1);
    assert_eq!(rows.len(), 5);

    let scan = stdout(&latbabai(&["random-scan", "--trials", "300", "--seed", "3"]));
    let (again, rows) = round_trip::<ScanRow>(&scan);
    assert_eq!(again, scan);
    assert!(rows.iter().all(|r| r.density >= 0.4));

    let levels = stdout(&latbabai(&["levels", "--resolution", "9"]));
    let (again, rows) = round_trip::<LevelRow>(&levels);
    assert_eq!(again, levels);
    assert!(!rows.is_empty());
}

#[test]
fn csv_header_echoes_config() {
    let text = stdout(&latbabai(&["levels", "--resolution", "5", "--levels", "0.02,0.04"]));
    let config_line = text.lines().find(|l| l.starts_with("# config: ")).unwrap();
    let config: serde_json::Value = serde_json::from_str(&config_line["# config: ".len()..]).unwrap();
    assert_eq!(config["command"]["subcommand"], "levels");
    assert_eq!(config["command"]["levels"], serde_json::json!([0.02, 0.04]));
    let header = serde_json::json!({ "version": latbabai::VERSION, "seed": null, "config": config });
    assert!(text.starts_with(&csv_header_lines(&header)));
}

#[test]
fn json_reports_carry_header() {
    let hex = lattice_file("hex.json", r#"{"n":2,"columns":[[1,0],[0.5,0.8660254037844386]]}"#);
    let out = stdout(&latbabai(&["reduce", "--lattice", hex.to_str().unwrap()]));
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["header"]["version"], latbabai::VERSION);
    assert!(v["header"]["config"]["command"]["lattice"].is_string());
    assert_eq!(v["result"]["minkowski"], true);
    assert_eq!(v["result"]["selling"].as_array().unwrap().len(), 3);

    let out = stdout(&latbabai(&["pe2d", "--a", "-0.5", "--b", "0.8660254037844386"]));
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    let pe = v["result"]["reduced"]["pe_closed_form"].as_f64().unwrap();
    assert!((pe - 1.0 / 12.0).abs() < 1e-12);
}

#[test]
fn babai_reports_error_event() {
    let l = lattice_file("skew.json", r#"{"n":2,"columns":[[5,0],[3,1]]}"#);
    let out = stdout(&latbabai(&["babai", "--lattice", l.to_str().unwrap(), "--x", "2.2,0.4"]));
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["result"]["coeffs"], serde_json::json!([0, 0]));
    assert_eq!(v["result"]["is_error"], true);
}

#[test]
fn protocol_sim_decodes_without_mismatch() {
    let hex = lattice_file("hex-proto.json", r#"{"n":2,"columns":[[1,0],[0.5,0.8660254037844386]]}"#);
    for model in ["centralized", "interactive"] {
        let out = stdout(&latbabai(&[
            "protocol-sim", "--model", model, "--lattice", hex.to_str().unwrap(), "--samples", "2000", "--seed", "5",
        ]));
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["result"]["decode_mismatches"], 0, "{model}");
        assert!(v["result"]["rate_bound"].as_f64().unwrap() > 0.0);
    }
}

#[test]
fn output_flag_writes_file() {
    let path = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("table1.csv");
    let out = latbabai(&["table1", "--output", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    assert!(std::fs::read_to_string(&path).unwrap().contains("hexagonal-prism"));
}

#[test]
fn exit_codes() {
    assert_eq!(latbabai(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(latbabai(&["reduce", "--lattice", "/definitely/missing.json"]).status.code(), Some(2));
    let bad = lattice_file("bad.json", r#"{"n":2,"columns":[[1,0]"#);
    assert_eq!(latbabai(&["reduce", "--lattice", bad.to_str().unwrap()]).status.code(), Some(2));
    let singular = lattice_file("singular.json", r#"{"n":2,"columns":[[1,0],[2,0]]}"#);
    assert_eq!(latbabai(&["reduce", "--lattice", singular.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(latbabai(&["pe2d", "--a", "0.7", "--b", "1"]).status.code(), Some(2));
    // sqrt(2) has no small-denominator approximation: a numeric failure
    let irrational = lattice_file("irr.json", r#"{"n":2,"columns":[[1,0],[1.4142135623730951,1]]}"#);
    let out = latbabai(&["protocol-sim", "--model", "centralized", "--lattice", irrational.to_str().unwrap(), "--max-den", "100"]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(latbabai(&["table1"]).status.code(), Some(0));
}

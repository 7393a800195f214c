use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

const ADDITIVE: &[&str] = &["--scenario", "additive", "--m", "100", "--nu-t", "0.01", "--nu-b", "0.03"];

fn envloc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_envloc"))
        .args(args)
        .env_remove("ENVLOC_OUTPUT_DIR")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = envloc(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn with(base: &[&'static str], extra: &[&'static str]) -> Vec<&'static str> {
    base.iter().chain(extra).copied().collect()
}

/// Header comments and parsed rows of a CSV report.
fn parse_csv(text: &str) -> (Vec<String>, Vec<String>, Vec<Vec<String>>) {
    let header: Vec<String> = text.lines().take_while(|l| l.starts_with('#')).map(str::to_string).collect();
    let body: String = text.lines().skip(header.len()).map(|l| format!("{l}\n")).collect();
    let mut r = csv::Reader::from_reader(body.as_bytes());
    let columns = r.headers().unwrap().iter().map(str::to_string).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(str::to_string).collect()).collect();
    (header, columns, rows)
}

fn column(columns: &[String], name: &str) -> usize {
    columns.iter().position(|c| c == name).unwrap_or_else(|| panic!("no column {name}"))
}

fn value_of(rows: &[Vec<String>], key: &str) -> String {
    rows.iter().find(|r| r[0] == key).unwrap_or_else(|| panic!("no row {key}"))[1].clone()
}

fn temp_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("envloc-cli-{name}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn additive_figure_crosses_at_twenty() {
    let out = envloc(&with(&["figure", "--M", "1..60"], ADDITIVE));
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning"));
    let (_, cols, rows) = parse_csv(&String::from_utf8(out.stdout).unwrap());
    assert_eq!(rows.len(), 60);
    let (qu, cl, qm) = (column(&cols, "quantum_upper_p"), column(&cols, "classical_lower_p"), column(&cols, "quantum_mle_p"));
    let crossing = rows
        .iter()
        .find(|r| r[qu].parse::<f64>().unwrap() <= r[cl].parse::<f64>().unwrap())
        .map(|r| r[0].parse::<u64>().unwrap());
    assert_eq!(crossing, Some(20));
    assert!(rows.iter().all(|r| r[qm].is_empty()));
}

#[test]
fn additive_fidelities() {
    let (_, _, rows) = parse_csv(&ok(&with(&["fidelity"], ADDITIVE)));
    let choi: f64 = value_of(&rows, "fidelity_choi").parse().unwrap();
    let classical: f64 = value_of(&rows, "fidelity_classical").parse().unwrap();
    assert!((choi - 0.86603).abs() < 5e-6);
    assert!((classical - 0.99738).abs() < 5e-6);
}

#[test]
fn equal_channels_have_unit_fidelity() {
    let text = ok(&["fidelity", "--tau", "0.7", "--m", "3", "--eps-t", "2.5", "--eps-b", "2.5"]);
    let (_, _, rows) = parse_csv(&text);
    for key in ["fidelity_finite_a", "fidelity_choi", "fidelity_classical"] {
        let v: f64 = value_of(&rows, key).parse().unwrap();
        assert!((v - 1.0).abs() < 1e-12, "{key} = {v}");
    }
}

#[test]
fn loss_channel_with_gain_is_rejected() {
    let out = envloc(&["fidelity", "--channel", "loss", "--tau", "1.2", "--m", "2", "--nu-t", "0.3", "--nu-b", "0.4"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("tau < 1"));
}

#[test]
fn usage_errors_exit_two() {
    let empty = envloc(&with(&["figure", "--M", "10..1"], ADDITIVE));
    assert_eq!(empty.status.code(), Some(2));
    let no_trials = envloc(&with(&["simulate", "--M", "5", "--trials", "0"], ADDITIVE));
    assert_eq!(no_trials.status.code(), Some(2));
    let missing = envloc(&["bounds", "--scenario", "eavesdropper", "--tau", "0.5", "--M", "1"]);
    assert_eq!(missing.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("--excess-t"));
    let unknown = envloc(&["teleport"]);
    assert_eq!(unknown.status.code(), Some(2));
}

#[test]
fn simulate_is_reproducible_and_agrees() {
    let args = ["simulate", "--scenario", "imaging", "--M", "100", "--trials", "100000", "--seed", "7"];
    let first = ok(&args);
    assert_eq!(first, ok(&args));
    let (_, _, rows) = parse_csv(&first);
    let z: f64 = value_of(&rows, "z_score").parse().unwrap();
    assert!(z.abs() <= 3.0, "z = {z}");
    let other = ok(&["simulate", "--scenario", "imaging", "--M", "100", "--trials", "100000", "--seed", "8"]);
    assert_ne!(value_of(&rows, "successes"), value_of(&parse_csv(&other).2, "successes"));
}

#[test]
fn csv_and_json_agree_bitwise() {
    let base = with(&["figure", "--scenario", "imaging", "--M", "1..400:57"], &[]);
    let (_, cols, rows) = parse_csv(&ok(&base));
    let json: Value = serde_json::from_str(&ok(&with(&base, &["--format", "json"]))).unwrap();
    assert_eq!(json["schema_version"], 1);
    let jrows = json["rows"].as_array().unwrap();
    assert_eq!(rows.len(), jrows.len());
    for (row, jrow) in rows.iter().zip(jrows) {
        for (c, cell) in cols.iter().zip(row) {
            let j = &jrow[c.as_str()];
            if cell.is_empty() {
                assert!(j.is_null());
            } else if c == "M" {
                assert_eq!(cell.parse::<u64>().unwrap(), j.as_u64().unwrap());
            } else {
                let a: f64 = cell.parse().unwrap();
                assert_eq!(a.to_bits(), j.as_f64().unwrap().to_bits(), "{c}: {cell} vs {j}");
            }
        }
    }
}

#[test]
fn echoed_config_reproduces_the_run() {
    let text = ok(&with(&["bounds", "--M", "1,5,9"], ADDITIVE));
    let (header, _, _) = parse_csv(&text);
    let config = header.iter().find_map(|l| l.strip_prefix("# config: ")).unwrap();
    let echoed: Value = serde_json::from_str(config).unwrap();
    for key in ["seed", "quadrature_tol", "mle_mass_tol", "mle_term_tol", "mle_patience"] {
        assert!(echoed.get(key).is_some(), "{key} missing from echo");
    }
    let dir = temp_dir("echo");
    let path = dir.join("config.json");
    std::fs::write(&path, config).unwrap();
    let rerun = ok(&["bounds", "--config", path.to_str().unwrap()]);
    assert_eq!(parse_csv(&rerun).2, parse_csv(&text).2);
}

#[test]
fn flags_override_config() {
    let dir = temp_dir("override");
    let path = dir.join("config.json");
    std::fs::write(&path, r#"{"scenario": "additive", "m": 100, "nu_t": 0.01, "nu_b": 0.03, "probes": "3"}"#).unwrap();
    let p = path.to_str().unwrap();
    let (header, _, rows) = parse_csv(&ok(&["bounds", "--config", p, "--M", "4"]));
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][0], "4");
    assert!(header.iter().any(|l| l.contains(r#""probes":"4""#)));
    std::fs::write(&path, r#"{"m": 3, "colour": "red"}"#).unwrap();
    assert_eq!(envloc(&["bounds", "--config", p]).status.code(), Some(2));
}

#[test]
fn output_directory_from_environment() {
    let dir = temp_dir("outdir");
    let out = Command::new(env!("CARGO_BIN_EXE_envloc"))
        .args(with(&["advantage", "--format", "json"], ADDITIVE))
        .env("ENVLOC_OUTPUT_DIR", &dir)
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let json: Value = serde_json::from_str(&std::fs::read_to_string(dir.join("advantage.json")).unwrap()).unwrap();
    assert_eq!(json["command"], "advantage");
}

#[test]
fn additive_advantage_threshold_probes() {
    let (_, _, rows) = parse_csv(&ok(&with(&["advantage"], ADDITIVE)));
    assert_eq!(value_of(&rows, "condition_holds"), "true");
    assert_eq!(value_of(&rows, "fidelity_probes"), "20");
}

#[test]
fn half_transmission_region_has_no_advantage() {
    let (_, cols, rows) = parse_csv(&ok(&["region", "--tau", "0.5", "--resolution", "40"]));
    assert_eq!(cols, ["eps_dif", "eps_av", "flag"]);
    assert_eq!(rows.len(), 1600);
    assert!(rows.iter().all(|r| r[2] != "1"));
    assert!(rows.iter().any(|r| r[2] == "0"));
    let (_, _, wider) = parse_csv(&ok(&["region", "--tau", "0.9", "--resolution", "40"]));
    assert!(wider.iter().any(|r| r[2] == "1"));
}

#[test]
fn mle_matches_simulation_spec() {
    let (_, cols, rows) = parse_csv(&ok(&["mle", "--scenario", "imaging", "--M", "100,396"]));
    let p = column(&cols, "error_p");
    let e100: f64 = rows[0][p].parse().unwrap();
    assert!(e100 > 0.0 && e100 < 8.0 / 9.0);
    let e396: f64 = rows[1][p].parse().unwrap();
    assert!(e396 < e100);
}

use std::process::{Command, Output};

use hidden_failure::presets::ScenarioId;
use hidden_failure::{posterior_curve, CurveMode};
use serde_json::Value;

fn hfs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hfs"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(args: &[&str]) -> String {
    let out = hfs(args);
    assert!(
        out.status.success(),
        "hfs {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn json(args: &[&str]) -> Value {
    let mut full = args.to_vec();
    full.extend(["--output", "json"]);
    serde_json::from_str(&stdout(&full)).unwrap()
}

/// Rows of a CSV document, skipping `#` comment lines.
fn csv_rows(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let headers = reader.headers().unwrap().iter().map(String::from).collect();
    let rows = reader
        .records()
        .map(|r| r.unwrap().iter().map(String::from).collect())
        .collect();
    (headers, rows)
}

fn curve_column(args: &[&str]) -> Vec<f64> {
    let (headers, rows) = csv_rows(&stdout(args));
    assert_eq!(headers, ["n", "posterior"]);
    rows.iter()
        .enumerate()
        .map(|(i, r)| {
            assert_eq!(r[0], i.to_string());
            r[1].parse().unwrap()
        })
        .collect()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

#[test]
fn pot_curve_peaks_at_five() {
    let values = curve_column(&["curve", "--scenario", "pot", "--n-max", "30"]);
    assert_eq!(values.len(), 31);
    let peak = (0..values.len())
        .max_by(|&a, &b| values[a].total_cmp(&values[b]))
        .unwrap();
    assert_eq!(peak, 5);
}

#[test]
fn csv_round_trips_library_values() {
    let values = curve_column(&["curve", "--scenario", "lineup", "--n-max", "40"]);
    let model = ScenarioId::Lineup.default_model();
    let exact = posterior_curve(&model, 0, 40, CurveMode::Unanimous).unwrap();
    assert_eq!(values, exact.values());
}

#[test]
fn json_matches_csv() {
    let args = ["curve", "--scenario", "sanhedrin", "--n-max", "25"];
    let from_csv = curve_column(&args);
    let doc = json(&args);
    let from_json: Vec<f64> = doc["points"]
        .as_array()
        .unwrap()
        .iter()
        .map(|p| p["posterior"].as_f64().unwrap())
        .collect();
    assert_eq!(from_csv, from_json);
    assert_eq!(doc["target"], "guilty");
}

#[test]
fn clean_process_is_monotone() {
    let values = curve_column(&["curve", "--scenario", "pot", "--p-c", "0", "--n-max", "50"]);
    assert!(values.windows(2).all(|w| w[1] >= w[0]));
    assert!(values[50] > 0.999_999);
}

#[test]
fn rare_failure_lineup_turns_over() {
    let values = curve_column(&["curve", "--scenario", "lineup", "--p-c", "1e-4", "--n-max", "12"]);
    assert!(values[10] < values[3]);
}

#[test]
fn fixed_fraction_curve() {
    let values = curve_column(&["curve", "--scenario", "pot", "--fraction", "0.5", "--n-max", "10"]);
    assert_eq!(values.len(), 11);
    assert!(values.iter().all(|v| (0.0..=1.0).contains(v)));
}

#[test]
fn analyze_reports_limits() {
    let pot = json(&["analyze", "--scenario", "pot"]);
    assert_eq!(pot["peak_n"], 5);
    assert_eq!(pot["limit"].as_f64().unwrap(), 0.5);

    let skewed = json(&["analyze", "--scenario", "pot-asymmetric-prior"]);
    assert!((skewed["limit"].as_f64().unwrap() - 0.8).abs() < 1e-15);

    let lineup = json(&["analyze", "--scenario", "lineup", "--tau", "0.95"]);
    assert_eq!(lineup["ceiling_reached"], false);
    assert!(lineup["max_value"].as_f64().unwrap() < 0.95);
}

#[test]
fn analyze_by_target_label() {
    let italy = json(&["analyze", "--scenario", "pot-asymmetric-prior", "--target", "Italy"]);
    assert!((italy["limit"].as_f64().unwrap() - 0.2).abs() < 1e-15);
    assert_eq!(italy["target"], "Italy");
}

#[test]
fn sanhedrin_band_flags() {
    let (headers, rows) = csv_rows(&stdout(&["sanhedrin"]));
    assert_eq!(headers, ["k", "posterior", "in_conviction_band"]);
    assert_eq!(rows.len(), 24);
    for (k, row) in rows.iter().enumerate() {
        let inside = (13..=22).contains(&k);
        assert_eq!(row[2], inside.to_string(), "k = {k}");
    }
    let post = |k: usize| rows[k][1].parse::<f64>().unwrap();
    assert!(post(23) < post(22));
    assert!(post(15) > post(13));

    let doc = json(&["sanhedrin"]);
    assert_eq!(doc["band_min"]["k"], 22);
}

#[test]
fn sanhedrin_custom_window() {
    let (_, rows) = csv_rows(&stdout(&["sanhedrin", "--n", "9", "--k-min", "5", "--k-max", "8"]));
    assert_eq!(rows.len(), 10);
    assert_eq!(rows[4][2], "false");
    assert_eq!(rows[8][2], "true");
    assert_eq!(code(&hfs(&["sanhedrin", "--n", "9", "--k-max", "10"])), 2);
}

#[test]
fn crypto_fault_floor() {
    let doc = json(&["crypto", "--k-max", "100"]);
    let p_f = doc["p_f"].as_f64().unwrap();
    assert!((p_f - 2.6e-13).abs() < 0.05 * 2.6e-13);
    let rows = doc["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 101);
    let floor = doc["log2_p_f"].as_f64().unwrap();
    assert!(rows.iter().all(|r| r["log2_p_fa"].as_f64().unwrap() >= floor));
    assert!(doc["floor_over_target"]["log2_ratio"].as_f64().unwrap() > 80.0);
}

#[test]
fn crypto_without_faults_is_four_to_the_minus_k() {
    let (headers, rows) = csv_rows(&stdout(&["crypto", "--lambda", "0", "--k-max", "600"]));
    assert_eq!(headers, ["k", "p_fa", "log2_p_fa"]);
    for (k, row) in rows.iter().enumerate() {
        assert_eq!(row[2].parse::<f64>().unwrap(), -2.0 * k as f64);
    }
    // below f64 range the rate is printed as a power of two
    assert_eq!(rows[600][1], "2^-1200");
}

#[test]
fn crypto_ecc_needs_scrub_interval() {
    assert_eq!(code(&hfs(&["crypto", "--ecc", "parity"])), 2);
    let doc = json(&["crypto", "--ecc", "parity", "--scrub-interval", "0.1", "--k-max", "1"]);
    let log2 = doc["log2_p_f"].as_f64().unwrap();
    assert!((log2 + 108.0).abs() < 1.0);
}

#[test]
fn coin_posterior_output() {
    let doc = json(&["coin", "--n", "10", "--x", "10"]);
    let mean = doc["summary"]["mean"].as_f64().unwrap();
    assert!((mean - 11.0 / 12.0).abs() < 1e-6);
    assert_eq!(doc["density"].as_array().unwrap().len(), 10_001);

    let (headers, rows) = csv_rows(&stdout(&["coin", "--n", "10", "--x", "10", "--every", "100"]));
    assert_eq!(headers, ["q", "density"]);
    assert_eq!(rows.len(), 101);

    let fair = json(&["coin", "--prior", "near-fair", "--n", "10", "--x", "8"]);
    assert!(fair["summary"]["mean"].as_f64().unwrap() < 0.7);
}

#[test]
fn coin_rejects_bad_grid() {
    assert_eq!(code(&hfs(&["coin", "--n", "3", "--x", "1", "--grid-size", "100"])), 3);
    assert_eq!(code(&hfs(&["coin", "--n", "3", "--x", "4"])), 3);
}

#[test]
fn verify_agrees() {
    let doc = json(&["verify", "--scenario", "pot", "--n", "5", "--seed", "42"]);
    assert_eq!(doc["pass"], true);
    assert!(doc["accepted"].as_u64().unwrap() >= 10_000);
    assert!(doc["z_score"].as_f64().unwrap().abs() <= 3.0);
}

#[test]
fn verify_without_data_recovers_prior() {
    let doc = json(&["verify", "--scenario", "lineup", "--n", "0"]);
    assert_eq!(doc["pass"], true);
    assert_eq!(doc["analytic"].as_f64().unwrap(), 0.5);
}

#[test]
fn injected_error_is_caught() {
    let out = hfs(&[
        "verify", "--scenario", "pot", "--n", "5", "--inject-theta-error", "0.2", "--seed", "3",
    ]);
    assert_eq!(code(&out), 1);
    let (_, rows) = csv_rows(std::str::from_utf8(&out.stdout).unwrap());
    assert_eq!(rows[0].last().unwrap(), "false");
}

#[test]
fn verify_is_deterministic() {
    let args = ["verify", "--scenario", "sanhedrin", "--n", "23", "--k", "13", "--seed", "9"];
    let a = hfs(&args);
    let b = hfs(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn inline_model() {
    let model = r#"{
        "hypothesis_labels": ["h0", "h1"],
        "state_labels": ["ok"],
        "joint_prior": [[0.5], [0.5]],
        "positive_prob": [[0.8], [0.2]]
    }"#;
    let values = curve_column(&["curve", "--model-json", model, "--n-max", "2"]);
    assert_eq!(values[0], 0.5);
    assert!((values[1] - 0.8).abs() < 1e-15);
    let doc = json(&["analyze", "--model-json", model, "--target", "h1"]);
    assert_eq!(doc["limit"].as_f64().unwrap(), 0.0);
}

#[test]
fn exit_codes() {
    // usage: unknown scenario, foreign parameter, conflicting flags, bad target
    assert_eq!(code(&hfs(&["curve", "--scenario", "nope"])), 2);
    assert_eq!(code(&hfs(&["curve", "--scenario", "pot", "--p-fn", "0.3"])), 2);
    assert_eq!(code(&hfs(&["curve", "--scenario", "pot", "--model-json", "{}"])), 2);
    assert_eq!(code(&hfs(&["curve", "--model-json", "{}", "--p-c", "0.1"])), 2);
    assert_eq!(code(&hfs(&["curve", "--scenario", "pot", "--target", "Spain"])), 2);
    assert_eq!(code(&hfs(&["curve"])), 2);
    assert_eq!(code(&hfs(&["frobnicate"])), 2);

    // model: out-of-range parameter, malformed prior
    assert_eq!(code(&hfs(&["curve", "--scenario", "pot", "--p-c", "1.5"])), 3);
    let bad_prior = r#"{"hypothesis_labels":["a","b"],"state_labels":["s"],
        "joint_prior":[[0.5],[0.6]],"positive_prob":[[0.5],[0.5]]}"#;
    assert_eq!(code(&hfs(&["curve", "--model-json", bad_prior])), 3);
    assert_eq!(code(&hfs(&["curve", "--model-json", "{not json"])), 2);

    // convergence: two failure states with almost equal rates
    let slow = r#"{"hypothesis_labels":["a","b"],"state_labels":["s"],
        "joint_prior":[[0.5],[0.5]],"positive_prob":[[0.9],[0.899999999]]}"#;
    let out = hfs(&["analyze", "--model-json", slow]);
    assert_eq!(code(&out), 4, "{}", String::from_utf8_lossy(&out.stderr));

    // oracle budget
    let out = hfs(&[
        "verify", "--scenario", "rabin-miller", "--n", "60", "--k", "30", "--max-total", "100000",
    ]);
    assert_eq!(code(&out), 5);
    assert!(out.stdout.is_empty());
}

#[test]
fn diagnostics_go_to_stderr() {
    let out = hfs(&["curve", "--scenario", "pot", "--p-c", "-1"]);
    assert!(out.stdout.is_empty());
    assert!(!out.stderr.is_empty());
}

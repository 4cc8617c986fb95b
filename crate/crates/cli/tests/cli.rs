use std::process::{Command, Output};

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_repshare");

const DEMO: [&str; 14] = [
    "--n0", "15000", "--n1", "5000", "--n0p", "5000", "--n1p", "5000", "--alpha", "5e-6", "--beta", "5e-4", "--gamma",
    "5e-8",
];

fn repshare(args: &[&str]) -> Output {
    Command::new(BIN).args(args).env_remove("SHARED_CTRL_THREADS").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> Value {
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_str(&stdout(o)).unwrap()
}

fn num(v: &Value) -> f64 {
    v.as_f64().unwrap()
}

#[test]
fn thresholds_are_ordered() {
    let v = json(&repshare(&[&["thresholds"], &DEMO[..]].concat()));
    let (bs, bp) = (num(&v["beta_star"]), num(&v["beta_perp"]));
    assert!(bp < bs && bs < 5e-4, "{bp} {bs}");
    assert!(num(&v["p0"]) > 0.0);
}

#[test]
fn unit_odds_ratio_gives_p0_for_every_method() {
    let p0 = num(&json(&repshare(&[&["thresholds"], &DEMO[..]].concat()))["p0"]);
    let o = repshare(&[&["power", "--maf", "0.1", "--or", "1", "--quiet"], &DEMO[..]].concat());
    assert!(o.status.success());
    let mut rdr = csv::Reader::from_reader(o.stdout.as_slice());
    assert_eq!(rdr.headers().unwrap(), vec!["log_or", "power_A", "power_B", "power_C"]);
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][0].parse::<f64>().unwrap(), 0.0);
    for k in 1..4 {
        let p: f64 = rows[0][k].parse().unwrap();
        assert!((p / p0 - 1.0).abs() < 1e-9, "{p} vs {p0}");
    }
}

#[test]
fn csv_values_round_trip() {
    let o = repshare(&[&["power", "--maf", "0.2", "--grid-points", "9", "--log-or-min", "-0.3", "--quiet"], &DEMO[..]].concat());
    assert!(o.status.success());
    let text = stdout(&o);
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let mut n = 0;
    for rec in rdr.records() {
        for field in rec.unwrap().iter() {
            let x: f64 = field.parse().unwrap();
            assert_eq!(format!("{x:.15e}"), field);
        }
        n += 1;
    }
    assert_eq!(n, 9);
}

#[test]
fn json_grid_matches_csv_grid() {
    let base = [&["power", "--maf", "0.1", "--grid-points", "5", "--quiet"], &DEMO[..]].concat();
    let v = json(&repshare(&[&base[..], &["--format", "json"]].concat()));
    let csv_out = stdout(&repshare(&base));
    let mut rdr = csv::Reader::from_reader(csv_out.as_bytes());
    for (rec, p) in rdr.records().zip(v["curve"]["grid"].as_array().unwrap()) {
        let rec = rec.unwrap();
        assert_eq!(rec[0].parse::<f64>().unwrap(), num(&p["log_or"]));
        assert_eq!(rec[2].parse::<f64>().unwrap(), num(&p["power_b"]));
    }
}

#[test]
fn shared_split_beats_every_unshared_split() {
    let v = json(&repshare(&[
        "compare", "--n0", "10000", "--n1", "5000", "--new-samples", "10000", "--n0p-min", "1000", "--n0p-max", "9000",
        "--n0p-step", "500", "--maf", "0.1", "--or", "1.1,1.15,1.2,1.25", "--alpha", "5e-6", "--beta", "5e-4",
        "--gamma", "5e-8", "--format", "json",
    ]));
    let rows = v["rows"].as_array().unwrap();
    let b = rows.iter().find(|r| r["n0p"] == 4000).unwrap();
    for k in 0..4 {
        let best_a = rows.iter().map(|r| num(&r["power_a"][k])).fold(0.0, f64::max);
        assert!(num(&b["power_b"][k]) > best_a, "OR index {k}");
    }
}

#[test]
fn input_file_matches_flags() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("req.json");
    std::fs::write(
        &path,
        r#"{"design":{"n0":15000,"n1":5000,"n0p":5000,"n1p":5000},
            "thresholds":{"alpha":5e-6,"beta":5e-4,"gamma":5e-8}}"#,
    )
    .unwrap();
    let from_file = repshare(&["thresholds", "--input", path.to_str().unwrap()]);
    let from_flags = repshare(&[&["thresholds"], &DEMO[..]].concat());
    assert!(from_file.status.success());
    assert_eq!(from_file.stdout, from_flags.stdout);

    let both = repshare(&["thresholds", "--input", path.to_str().unwrap(), "--n0", "1"]);
    assert_eq!(both.status.code(), Some(2));
}

#[test]
fn out_file_and_quiet_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("grid.csv");
    let o = repshare(&[&["power", "--maf", "0.1", "--out", path.to_str().unwrap(), "--quiet"], &DEMO[..]].concat());
    assert!(o.status.success());
    assert!(o.stdout.is_empty() && o.stderr.is_empty());
    assert!(std::fs::read_to_string(&path).unwrap().starts_with("log_or,power_A,power_B,power_C\n"));
}

#[test]
fn invalid_input_exits_2() {
    for args in [
        &["thresholds", "--n0", "10"][..],
        &["thresholds", "--n0", "0", "--n1", "5", "--n0p", "5", "--n1p", "5", "--alpha", "0.1", "--beta", "0.1", "--gamma", "1"],
        &["thresholds", "--n0", "5", "--n1", "5", "--n0p", "5", "--n1p", "5", "--alpha", "0", "--beta", "0.1", "--gamma", "1"],
        &["power", "--maf", "1.5", "--n0", "5", "--n1", "5", "--n0p", "5", "--n1p", "5", "--alpha", "0.1", "--beta", "0.1", "--gamma", "1"],
        &["thresholds", "--bogus"],
    ] {
        let o = repshare(args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn thread_cap_is_validated_and_harmless() {
    let args = [&["thresholds"], &DEMO[..]].concat();
    let bad = Command::new(BIN).args(&args).env("SHARED_CTRL_THREADS", "0").output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
    let one = Command::new(BIN).args(&args).env("SHARED_CTRL_THREADS", "1").output().unwrap();
    assert_eq!(one.stdout, repshare(&args).stdout);
}

#[test]
fn mc_validate_passes_at_scale_and_fails_for_tiny_cohorts() {
    let ok = repshare(&[
        "mc-validate", "--n0", "2000", "--n1", "2000", "--n0p", "2000", "--n1p", "2000", "--alpha", "0.05", "--beta",
        "0.05", "--gamma", "0.1", "--maf", "0.3", "--reps", "200000", "--seed", "5",
    ]);
    assert_eq!(json(&ok)["pass"], true);

    let tiny = repshare(&[
        "mc-validate", "--n0", "10", "--n1", "10", "--n0p", "10", "--n1p", "10", "--alpha", "0.05", "--beta", "0.05",
        "--gamma", "0.1", "--maf", "0.05", "--reps", "200000", "--seed", "1", "--quiet",
    ]);
    assert_eq!(tiny.status.code(), Some(1));
    assert_eq!(serde_json::from_slice::<Value>(&tiny.stdout).unwrap()["pass"], false);
}

#[test]
fn alternative_variance_model_under_an_effect() {
    let o = repshare(&[
        "mc-validate", "--n0", "2000", "--n1", "2000", "--n0p", "2000", "--n1p", "2000", "--alpha", "0.01", "--beta",
        "0.01", "--gamma", "0.001", "--maf", "0.3", "--or", "1.2", "--reps", "200000", "--seed", "9",
        "--variance-model", "alternative",
    ]);
    let v = json(&o);
    assert_eq!(v["pass"], true, "{v}");
    assert!(v["checks"][0]["analytic"].as_f64().unwrap() > 0.5);
}

#[test]
fn few_replicates_warn_on_stderr() {
    let o = repshare(&[
        "mc-validate", "--n0", "500", "--n1", "500", "--n0p", "500", "--n1p", "500", "--alpha", "0.05", "--beta",
        "0.05", "--gamma", "0.1", "--maf", "0.3", "--reps", "1000", "--seed", "2",
    ]);
    assert!(String::from_utf8_lossy(&o.stderr).contains("low replicate count"));
}

#[test]
fn error_profile_grid() {
    let o = repshare(&[&["error-profile", "--maf", "0.2", "--cohort", "C1p", "--grid-points", "7", "--quiet"], &DEMO[..]].concat());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("zeta_driver,R_A,R_B,R_C"));
    assert_eq!(lines.count(), 7);
}

//! The HTTP service and the command-line tool share one computation core;
//! their result payloads must agree byte for byte.

use std::process::Command;

use axum::body::Body;
use axum::http::{header, Request, StatusCode};
use http_body_util::BodyExt;
use serde_json::Value;
use tower::ServiceExt;

use repshare_api::{router, AppState};

const BIN: &str = env!("CARGO_BIN_EXE_repshare");

async fn post(uri: &str, body: &str) -> String {
    let req = Request::builder()
        .method("POST")
        .uri(uri)
        .header(header::CONTENT_TYPE, "application/json")
        .body(Body::from(body.to_string()))
        .unwrap();
    let resp = router(AppState::default(), None).oneshot(req).await.unwrap();
    assert_eq!(resp.status(), StatusCode::OK);
    String::from_utf8(resp.into_body().collect().await.unwrap().to_bytes().to_vec()).unwrap()
}

/// The `result` member of a response envelope, exactly as sent.
fn result_bytes(envelope: &str) -> &str {
    let start = envelope.find(r#""result":"#).unwrap() + r#""result":"#.len();
    &envelope[start..envelope.len() - 1]
}

fn cli_json(cmd: &str, body: &str) -> String {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("req.json");
    std::fs::write(&path, body).unwrap();
    let o = Command::new(BIN)
        .args([cmd, "--input", path.to_str().unwrap(), "--format", "json", "--quiet"])
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout).unwrap().trim_end().to_string()
}

#[tokio::test]
async fn thresholds_match_bit_for_bit() {
    let body = r#"{"design":{"n0":20169,"n1":5539,"n0p":8806,"n1p":6768},
        "thresholds":{"alpha":5e-6,"beta":5e-4,"gamma":5e-8}}"#;
    let api = post("/v1/thresholds", body).await;
    assert_eq!(result_bytes(&api), cli_json("thresholds", body));
}

#[tokio::test]
async fn power_grid_matches_bit_for_bit() {
    let body = r#"{"design":{"n0":15000,"n1":5000,"n0p":5000,"n1p":5000},
        "thresholds":{"alpha":5e-6,"beta":5e-4,"gamma":5e-8},"maf":0.1,"kappa1":0.05,
        "log_or_min":-0.4,"log_or_max":0.4,"grid_points":17}"#;
    let api = post("/v1/power-curve", body).await;
    assert_eq!(result_bytes(&api), cli_json("power", body));
}

#[tokio::test]
async fn error_profile_matches_bit_for_bit() {
    let body = r#"{"design":{"n0":15000,"n1":5000,"n0p":5000,"n1p":5000},
        "thresholds":{"alpha":5e-6,"beta":5e-4,"gamma":5e-8},"base_maf":0.3,"cohorts":["C0p"],"grid_points":11}"#;
    let api = post("/v1/error-profile", body).await;
    assert_eq!(result_bytes(&api), cli_json("error-profile", body));
}

#[tokio::test]
async fn compare_argmax_matches() {
    let body = r#"{"thresholds":{"alpha":5e-6,"beta":5e-4,"gamma":5e-8},
        "sweep":{"n0":10000,"n1":5000,"new_samples":10000,"n0p_min":1000,"n0p_max":9000,"n0p_step":500,
                 "maf":0.1,"odds_ratios":[1.1,1.15,1.2]}}"#;
    let api = post("/v1/compare", body).await;
    let cli = cli_json("compare", body);
    assert_eq!(result_bytes(&api), cli);
    let v: Value = serde_json::from_str(&cli).unwrap();
    for best in v["best"].as_array().unwrap() {
        assert!(best["best_b_power"].as_f64() > best["best_a_power"].as_f64());
    }
}

use serde_json::Value;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_circlegeom"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn construct_writes_geometry_file() {
    let dir = std::env::temp_dir().join(format!("circlegeom-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("m4.json");
    let out = run(&["construct", "--type", "mobius", "--q", "4", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let doc = json(&out);
    assert_eq!(doc["parameters"]["points"], 17);
    assert_eq!(doc["parameters"]["circles"], 68);

    let verify = run(&["verify", "--in", path.to_str().unwrap()]);
    assert_eq!(verify.status.code(), Some(0));
    assert_eq!(json(&verify)["report"]["passed"], true);

    let scheme = run(&["scheme", "--in", path.to_str().unwrap(), "--expect", "paper"]);
    assert_eq!(scheme.status.code(), Some(0));
    assert_eq!(json(&scheme)["result"]["p_matrix"][0], serde_json::json!([1, 15, 40, 12]));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn construct_to_stdout_round_trips() {
    let out = run(&["construct", "--type", "laguerre", "--q", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let g = circlegeom::circle_geometry::CircleGeometry::from_json(&text).unwrap();
    assert_eq!(g.to_json(), text.trim_end());
}

#[test]
fn phi_on_prime_field_is_an_error() {
    let out = run(&["construct", "--type", "minkowski-phi", "--q", "7", "--phi", "1"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(out.stdout.is_empty());
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(run(&["verify"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn unspliced_odd_minkowski_reports_witness() {
    let out = run(&["scheme", "--type", "minkowski", "--q", "5"]);
    assert_eq!(out.status.code(), Some(2));
    let doc = json(&out);
    assert_eq!(doc["result"]["scheme"], false);
    assert!(doc["result"]["witness"]["first"].is_array());
}

#[test]
fn spliced_scheme_matches_closed_form() {
    for by in [&[][..], &["--by-group"][..]] {
        let mut args = vec!["scheme", "--type", "minkowski", "--q", "5", "--splice", "--expect", "paper"];
        args.extend_from_slice(by);
        let out = run(&args);
        assert_eq!(out.status.code(), Some(0));
        assert_eq!(json(&out)["comparison"]["multiplicities_match"], true);
    }
}

#[test]
fn expect_without_closed_form_is_a_mismatch() {
    let out = run(&["scheme", "--type", "mobius", "--q", "5", "--splice", "--expect", "paper"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn exact_search_on_mobius_three() {
    let out = run(&["search", "--type", "mobius", "--q", "3", "--method", "exact"]);
    assert_eq!(out.status.code(), Some(0));
    let doc = json(&out);
    assert_eq!(doc["maximum"], 15);
    assert_eq!(doc["count"], 2);
    for f in doc["families"].as_array().unwrap() {
        assert_eq!(f["classification"], "TwoPointMobius3");
        assert_eq!(f["bounds"]["hm_threshold"], 10);
        // Exact rationals are [numerator, denominator] pairs.
        assert!(f["bounds"]["counting_bound"].as_array().unwrap().len() == 2);
    }
}

#[test]
fn budget_exhaustion_exits_three() {
    let out = run(&["search", "--type", "mobius", "--q", "4", "--budget", "2"]);
    assert_eq!(out.status.code(), Some(3));
    let doc = json(&out);
    assert_eq!(doc["status"], "budget_exceeded");
    assert!(doc["upper_bound"].as_u64().unwrap() >= 20);
}

#[test]
fn ratio_search_on_twisted_plane() {
    let out = run(&["search", "--type", "minkowski-phi", "--q", "9", "--phi", "1", "--method", "ratio"]);
    assert_eq!(out.status.code(), Some(0));
    let doc = json(&out);
    assert_eq!(doc["ratio_bound"]["bound"], serde_json::json!([72, 1]));
    assert_eq!(doc["source"], "spliced scheme");
}

#[test]
fn gp_and_report() {
    let out = run(&["gp", "--type", "mobius", "--q", "5", "--point", "0", "--point", "7"]);
    assert_eq!(out.status.code(), Some(0));
    let doc = json(&out);
    assert!(doc["profiles"].as_array().unwrap().iter().all(|p| p["lambda2_squared"] == 30));

    let out = run(&["--jobs", "2", "report", "--type", "mobius", "--q", "3"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["passed"], true);
}

#[test]
fn greedy_search() {
    let out = run(&["search", "--type", "laguerre", "--q", "3", "--method", "greedy"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(json(&out)["maximum_lower_bound"].as_u64().unwrap() >= 9);
}

use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_circle-tci"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("json report")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("circle-tci-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn null_scenario_passes_with_zero_slack() {
    let out = run(&["tci", "--scenario", "null", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    assert_eq!(r["passed"], true);
    assert_eq!(r["checks"][0]["slack"], 0.0);
    assert_eq!(r["tolerance"], 1e-7);
    assert!(r["build"]
        .as_str()
        .unwrap()
        .starts_with(env!("CARGO_PKG_VERSION")));
}

#[test]
fn cos_family_slacks_are_positive() {
    let out = run(&["tci", "--scenario", "cos-family", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    let checks = r["checks"].as_array().unwrap();
    assert_eq!(checks.len(), 50);
    assert!(checks.iter().all(|c| c["slack"].as_f64().unwrap() > 0.0));
    assert!(checks.iter().all(|c| c["rho"] == -0.3));
    assert_eq!(r["seeds"][0], 2024);
}

#[test]
fn usage_errors_exit_2() {
    let bad = scratch("malformed.json");
    std::fs::write(&bad, "{\"name\": \"x\", \"measures\": [").unwrap();
    let out = run(&["tci", "--scenario", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("malformed scenario file"));

    assert_eq!(run(&["suite", "nonexistent"]).status.code(), Some(2));
    assert_eq!(run(&["tci"]).status.code(), Some(2));
    assert_eq!(
        run(&["tci", "--scenario", "no-such-name"]).status.code(),
        Some(2)
    );
    assert_eq!(
        run(&["equilibrium", "--term", "0,1,1"]).status.code(),
        Some(2)
    );

    // ρ = −0.6 is outside the hypothesis; the offending scenario is named.
    let strong = scratch("strong.json");
    std::fs::write(
        &strong,
        r#"{"name": "too-concave", "potential": {"terms": [[1, 0.6, 0.0]]}, "measures": [{"family": "uniform"}]}"#,
    )
    .unwrap();
    let out = run(&["tci", "--scenario", strong.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("too-concave"));
}

#[test]
fn reruns_are_byte_identical() {
    for args in [
        &["suite", "gas", "--seed", "9", "--format", "json"][..],
        &["tci", "--scenario", "strata", "--format", "json"][..],
        &["suite", "sk", "--format", "csv"][..],
    ] {
        let a = run(args);
        let b = run(args);
        assert_eq!(a.status.code(), Some(0), "{args:?}");
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
    let other = run(&["suite", "gas", "--seed", "10", "--format", "json"]);
    assert_ne!(
        other.stdout,
        run(&["suite", "gas", "--seed", "9", "--format", "json"]).stdout
    );
}

#[test]
fn sk_suite_reports_c1() {
    let r = json(&run(&["suite", "sk", "--format", "json"]));
    let c1 = &r["checks"][0];
    assert_eq!(c1["check"], "c_1 = 1/6");
    assert_eq!(c1["passed"], true);
    assert!((c1["c_1"].as_f64().unwrap() - 1.0 / 6.0).abs() < 1e-15);
    assert_eq!(r["command"], "suite sk");
}

#[test]
fn sun_check_includes_contraction() {
    let out = run(&[
        "sun-check",
        "--n",
        "2,3",
        "--pairs",
        "50",
        "--format",
        "json",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    let names: Vec<&str> = r["checks"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["check"].as_str().unwrap())
        .collect();
    assert!(names.contains(&"N=3 δ ≤ d"));
}

#[test]
fn equilibrium_measure_feeds_w2() {
    let cos = scratch("nu_cos.json");
    let out = run(&[
        "equilibrium",
        "--term",
        "1,1,0",
        "--grid",
        "128",
        "--measure-out",
        cos.to_str().unwrap(),
        "--format",
        "json",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    assert!((r["checks"][0]["b_constant"].as_f64().unwrap() - 0.25).abs() < 1e-12);

    let uniform = scratch("nu_zero.csv");
    let out = run(&[
        "equilibrium",
        "--grid",
        "128",
        "--measure-out",
        uniform.to_str().unwrap(),
        "--format",
        "csv",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(std::fs::read_to_string(&uniform)
        .unwrap()
        .starts_with("angle,value"));

    let out = run(&[
        "w2",
        "--mu",
        cos.to_str().unwrap(),
        "--nu",
        uniform.to_str().unwrap(),
        "--format",
        "json",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let w = json(&out)["checks"][0]["W_density"].as_f64().unwrap();
    assert!(w > 0.0 && w < 1.0 / 2f64.sqrt());
}

#[test]
fn files_and_formats() {
    let report = scratch("report.csv");
    let sweep = scratch("sweep.csv");
    let out = run(&[
        "sk",
        "--n-max",
        "3",
        "--d-steps",
        "4",
        "--sweep-out",
        sweep.to_str().unwrap(),
        "--out",
        report.to_str().unwrap(),
        "--format",
        "csv",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&report).unwrap();
    assert!(text.starts_with("check,passed,"));
    assert!(std::fs::read_to_string(&sweep)
        .unwrap()
        .starts_with("n,alpha,theta,d,value,bound,margin"));

    let trace = scratch("trace.csv");
    let out = run(&[
        "gas",
        "--n",
        "3",
        "--samples",
        "50",
        "--trace",
        trace.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let t = std::fs::read_to_string(&trace).unwrap();
    assert_eq!(t.lines().count(), 51);
    assert!(String::from_utf8_lossy(&out.stdout).contains("PASS"));
}

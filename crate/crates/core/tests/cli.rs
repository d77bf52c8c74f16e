//! End-to-end runs of the `hlab` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn spec_path(name: &str) -> PathBuf {
    [env!("CARGO_MANIFEST_DIR"), "specs", name].iter().collect()
}

fn hlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hlab"))
        .args(args)
        .env("HLAB_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn run_ok(args: &[&str]) -> (i32, String) {
    let out = hlab(args);
    let code = out.status.code().expect("exit code");
    (code, String::from_utf8(out.stdout).expect("utf-8 stdout"))
}

fn json(text: &str) -> Value {
    serde_json::from_str(text).unwrap_or_else(|e| panic!("bad json ({e}): {text}"))
}

fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

#[test]
fn render_is_byte_identical_across_runs_and_thread_counts() {
    let cantor = spec_path("cantor.json");
    let args = ["render", cantor.to_str().unwrap(), "--steps", "8"];
    let first = hlab(&args);
    let second = Command::new(env!("CARGO_BIN_EXE_hlab"))
        .args(args)
        .env("HLAB_THREADS", "1")
        .output()
        .unwrap();
    assert!(first.status.success());
    assert_eq!(first.stdout, second.stdout);
    assert_eq!(first.stderr, second.stderr);
    let csv = String::from_utf8(first.stdout).unwrap();
    let rows = csv.lines().filter(|l| !l.starts_with('#')).count();
    assert_eq!(rows, 256);
}

#[test]
fn render_writes_csv_sidecar_and_png() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("gasket.csv");
    let gasket = spec_path("gasket.json");
    let (code, stdout) = run_ok(&[
        "render",
        gasket.to_str().unwrap(),
        "--steps",
        "6",
        "--out",
        out.to_str().unwrap(),
        "--png",
        "64",
    ]);
    assert_eq!(code, 0);
    let sidecar = json(&stdout);
    assert_eq!(sidecar["n"], 6);
    assert_eq!(sidecar["points"], 729);
    let on_disk = json(&std::fs::read_to_string(out.with_extension("json")).unwrap());
    assert_eq!(on_disk, sidecar);
    let csv = std::fs::read_to_string(&out).unwrap();
    assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 729);
    let png = image::open(out.with_extension("png")).unwrap();
    assert_eq!(png.width(), 64);
}

#[test]
fn exact_render_reports_rational_bounds() {
    let cantor = spec_path("cantor.json");
    let out = hlab(&[
        "render",
        cantor.to_str().unwrap(),
        "--steps",
        "2",
        "--exact",
    ]);
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    let xs: Vec<f64> = stdout
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.parse().unwrap())
        .collect();
    let expected = [1.0 / 18.0, 5.0 / 18.0, 13.0 / 18.0, 17.0 / 18.0];
    assert_eq!(xs, expected);
    let sidecar = json(&String::from_utf8(out.stderr).unwrap());
    assert_eq!(sidecar["c"], "1/3");
    assert_eq!(sidecar["h01"], "1/3");
    // c^2 / (1 - c) * h01
    assert_eq!(sidecar["error_bound"], "1/18");
}

#[test]
fn verify_exit_codes_follow_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let twin = write(
        dir.path(),
        "twin.json",
        r#"{"box": [[0, 1]], "maps": [
            {"index": "a", "matrix": [["1/3"]], "offset": [0]},
            {"index": "b", "matrix": [["1/3"]], "offset": ["1/6"]}]}"#,
    );
    let cantor = spec_path("cantor.json");

    let (code, stdout) = run_ok(&["verify", "non-overlapping", cantor.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert_eq!(json(&stdout)["verdict"], "holds");

    let (code, stdout) = run_ok(&["verify", "non-overlapping", twin.to_str().unwrap()]);
    assert_eq!(code, 2);
    let report = json(&stdout);
    assert_eq!(report["verdict"], "fails");
    assert_eq!(report["witness"]["kind"], "index-pair");

    let (code, stdout) = run_ok(&[
        "verify",
        "strongly-non-overlapping",
        cantor.to_str().unwrap(),
        "--depth",
        "4",
    ]);
    assert_eq!(code, 0);
    assert_eq!(json(&stdout)["details"]["checked_depth"], 4);
}

#[test]
fn dyadic_family_is_not_locally_finite() {
    let dyadic = spec_path("dyadic.json");
    let (code, stdout) = run_ok(&["verify", "locally-finite", dyadic.to_str().unwrap()]);
    assert_eq!(code, 2);
    let report = json(&stdout);
    assert_eq!(report["witness"]["coords"][0], 0.0);
    assert_eq!(report["details"]["truncation"], 20);
}

#[test]
fn ssc_reports_pairwise_constants() {
    let gasket = spec_path("gasket.json");
    let (code, stdout) = run_ok(&["verify", "ssc", gasket.to_str().unwrap()]);
    assert_eq!(code, 0);
    let report = json(&stdout);
    let sep = report["details"]["sep_c"].as_f64().unwrap();
    assert!((sep - 0.5).abs() < 1e-3, "{sep}");
}

#[test]
fn code_repeats_the_word() {
    let cantor = spec_path("cantor.json");
    let (code, stdout) = run_ok(&["code", cantor.to_str().unwrap(), "2", "--depth", "20"]);
    assert_eq!(code, 0);
    let v = json(&stdout);
    let x = v["point"][0].as_f64().unwrap();
    let eb = v["error_bound"].as_f64().unwrap();
    // 222... codes the right endpoint
    assert!((x - 1.0).abs() <= eb, "{x} {eb}");
    assert_eq!(v["depth"], 20);

    let (_, stdout) = run_ok(&["code", cantor.to_str().unwrap(), "1.2", "--depth", "16"]);
    let x = json(&stdout)["point"][0].as_f64().unwrap();
    // 1212... is the fixed point of x -> x/9 + 2/9
    assert!((x - 0.25).abs() < 1e-7, "{x}");
}

#[test]
fn bounds_hold_on_the_cantor_pair() {
    let cantor = spec_path("cantor.json");
    let (code, stdout) = run_ok(&["bounds", cantor.to_str().unwrap(), "--depth", "5"]);
    assert_eq!(code, 0, "{stdout}");
    let v = json(&stdout);
    assert_eq!(v["verdict"], "holds");
    assert!(v["reports"].as_array().unwrap().len() >= 3);
}

#[test]
fn lattice_file_and_demos() {
    let table = spec_path("lattice.json");
    let (code, stdout) = run_ok(&["lattice", table.to_str().unwrap()]);
    assert_eq!(code, 0);
    let v = json(&stdout);
    assert_eq!(v["gfp"], serde_json::json!(["a", "b", "c", "d"]));
    assert_eq!(v["verified_fixed"], true);

    let (code, stdout) = run_ok(&["lattice", "--demo", "remark42", "8"]);
    assert_eq!(code, 0);
    assert_eq!(json(&stdout)["details"]["inf"], "1/32768");

    let (code, _) = run_ok(&["lattice", "--demo", "remark31", "10", "10"]);
    assert_eq!(code, 0);
}

#[test]
fn bad_input_exits_one_with_a_message() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(
        dir.path(),
        "bad.json",
        r#"{"box": [[0, 1]], "maps": [{"index": "a", "matrix": [[2]], "offset": [0]}]}"#,
    );
    let out = hlab(&["verify", "non-overlapping", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));

    let out = hlab(&["render", "/nonexistent/spec.json"]);
    assert_eq!(out.status.code(), Some(1));

    let out = hlab(&["verify", "no-such-class", "x.json"]);
    assert_eq!(out.status.code(), Some(1));
}

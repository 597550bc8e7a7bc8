mod common;

use std::path::Path;
use std::process::Command;

use enlight::cli::run_with;
use enlight::imageio::save_sequence;
use serde_json::Value;

use common::{assets, docs, panning};

fn run(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let mut argv = vec!["enlight"];
    argv.extend_from_slice(args);
    let code = run_with(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn validate(schema_file: &str, instance: &Value) {
    let schema: Value = serde_json::from_str(&std::fs::read_to_string(docs().join(schema_file)).unwrap()).unwrap();
    let compiled = jsonschema::JSONSchema::compile(&schema).expect("schema compiles");
    let msgs: Vec<String> = match compiled.validate(instance) {
        Ok(()) => return,
        Err(errors) => errors.map(|e| format!("{} at {}", e, e.instance_path)).collect(),
    };
    panic!("{schema_file}: {msgs:?}");
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn shipped_assets_match_schemas() {
    validate("weights.schema.json", &read_json(&assets().join("demo_weights.json")));
    validate("platform.schema.json", &read_json(&assets().join("cpu.json")));
    validate("platform.schema.json", &read_json(&assets().join("gpu.json")));
    let demo = enlight::net::load_weights(assets().join("demo_weights.json")).unwrap();
    assert_eq!(demo, enlight::net::demo_network());
}

#[test]
fn enhance_writes_frames_and_plan() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in");
    let output = dir.path().join("out");
    std::fs::create_dir(&input).unwrap();
    save_sequence(&panning(5, 20, 28, 2.0), &input).unwrap();
    let weights = assets().join("demo_weights.json");
    let (code, out, err) = run(&[
        "enhance", "--input", path(&input), "--output", path(&output), "--weights", path(&weights),
        "--theta-f", "1", "--theta-l", "2", "--theta-d", "1/2",
    ]);
    assert_eq!(code, 0, "{err}");
    let summary: Value = serde_json::from_str(&out).unwrap();
    validate("enhance.schema.json", &summary);
    assert_eq!(summary["network_runs"], 3);
    let plan = read_json(&output.join("plan.json"));
    validate("plan.schema.json", &plan);
    let actions: Vec<&str> = plan["frames"].as_array().unwrap().iter().map(|f| f["action"].as_str().unwrap()).collect();
    assert_eq!(actions, ["full_compute", "reuse_map", "partial_compute", "reuse_map", "partial_compute"]);
    assert_eq!(enlight::imageio::list_frames(&output).unwrap().len(), 5);
}

#[test]
fn metrics_for_sequences_and_pairs() {
    let dir = tempfile::tempdir().unwrap();
    let seq = panning(3, 24, 32, 1.0);
    save_sequence(&seq, dir.path()).unwrap();
    let (code, out, err) = run(&["metrics", "--input", path(dir.path())]);
    assert_eq!(code, 0, "{err}");
    let report: Value = serde_json::from_str(&out).unwrap();
    validate("metrics.schema.json", &report);
    assert!(report["tssim"].is_number());
    assert!(report["psnr"].is_null());

    let frame = dir.path().join("frame_00000.png");
    let out_file = dir.path().join("pair.json");
    let (code, _, err) = run(&["metrics", "--input", path(&frame), "--reference", path(&frame), "--out", path(&out_file)]);
    assert_eq!(code, 0, "{err}");
    let pair = read_json(&out_file);
    validate("metrics.schema.json", &pair);
    assert_eq!(pair["psnr"], 100.0);
    assert_eq!(run(&["metrics", "--input", path(&frame)]).0, 2);
}

#[test]
fn profile_table() {
    let weights = assets().join("demo_weights.json");
    let platform = assets().join("cpu.json");
    let (code, out, err) = run(&[
        "profile", "--weights", path(&weights), "--resolution", "270x480", "--epsilon", "0.7", "--platform",
        path(&platform),
    ]);
    assert_eq!(code, 0, "{err}");
    let report: Value = serde_json::from_str(&out).unwrap();
    validate("profile.schema.json", &report);
    let layers = report["layers"].as_array().unwrap();
    assert_eq!(layers.len(), 9);
    // first layer: 1x1 conv 3 -> 1 over 270x480
    let hw = 270.0 * 480.0;
    assert_eq!(layers[0]["C"].as_f64().unwrap(), 3.0 * hw);
    assert_eq!(layers[0]["M"].as_f64().unwrap(), 2.0 * 3.0 * hw + hw);
    let m = 7.0 * hw;
    let expected = 3.0 * hw + 0.7 * 6.0 * m + 0.3 * 200.0 * m;
    assert!((layers[0]["E"].as_f64().unwrap() - expected).abs() < 1e-6 * expected);
    let sum: f64 = layers.iter().map(|l| l["E"].as_f64().unwrap()).sum();
    assert!((report["total"].as_f64().unwrap() - sum).abs() < 1e-9 * sum);
}

#[test]
fn pareto_and_simulate_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let sample = dir.path().join("sample");
    std::fs::create_dir(&sample).unwrap();
    save_sequence(&panning(12, 16, 20, 2.0), &sample).unwrap();
    let weights = assets().join("demo_weights.json");
    let platform = assets().join("cpu.json");

    let (code, out, err) = run(&[
        "pareto", "--weights", path(&weights), "--sample", path(&sample), "--platform", path(&platform),
        "--threads", "2",
    ]);
    assert_eq!(code, 0, "{err}");
    let report: Value = serde_json::from_str(&out).unwrap();
    validate("pareto.schema.json", &report);
    assert_eq!(report["points"].as_array().unwrap().len(), 132);
    let (_, again, _) = run(&[
        "pareto", "--weights", path(&weights), "--sample", path(&sample), "--platform", path(&platform),
        "--threads", "1",
    ]);
    assert_eq!(out, again);

    let trace = dir.path().join("trace.csv");
    std::fs::write(&trace, "time_s,supply_fraction,epsilon\n0,0.9,0.6\n1,0.3,0.6\n").unwrap();
    let report_path = dir.path().join("report.json");
    let (code, _, err) = run(&[
        "simulate", "--input", path(&sample), "--trace", path(&trace), "--weights", path(&weights), "--platform",
        path(&platform), "--fps", "6", "--out", path(&report_path),
    ]);
    assert_eq!(code, 0, "{err}");
    let report = read_json(&report_path);
    validate("report.schema.json", &report);
    assert_eq!(report["intervals"].as_array().unwrap().len(), 2);
    let csv = std::fs::read_to_string(report_path.with_extension("csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn regressor_schema_matches_writer() {
    use enlight::controller::{FcLayer, RegressorSpec, FEATURE_LEN};
    let reg = RegressorSpec::new(
        FcLayer::new(FEATURE_LEN, 2, vec![0.0; 2 * FEATURE_LEN], vec![0.0; 2]),
        FcLayer::new(2, 264, vec![0.0; 2 * 264], vec![0.5; 264]),
    )
    .unwrap();
    validate("regressor.schema.json", &serde_json::from_str(&reg.to_json()).unwrap());
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_enlight");
    let missing = Command::new(bin).args(["enhance", "--input", "a", "--output", "b"]).output().unwrap();
    assert_eq!(missing.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("--weights"));
    let unknown = Command::new(bin).args(["frobnicate"]).output().unwrap();
    assert_eq!(unknown.status.code(), Some(1));
    let broken = Command::new(bin)
        .args(["profile", "--weights", "/nonexistent.json", "--resolution", "4x4", "--epsilon", "0.5", "--platform", "x"])
        .output()
        .unwrap();
    assert_eq!(broken.status.code(), Some(2));
    let help = Command::new(bin).arg("--help").output().unwrap();
    assert_eq!(help.status.code(), Some(0));
}

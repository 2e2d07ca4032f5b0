use serde_json::Value;
use std::path::Path;
use std::process::{Command, Output};

fn caplb(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_caplb")).args(args).env_remove("RUST_LOG").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// The error object is the last line written to stderr.
fn error_of(o: &Output) -> Value {
    let text = String::from_utf8(o.stderr.clone()).unwrap();
    serde_json::from_str(text.lines().last().expect("stderr is empty")).unwrap()
}

fn pipe_skeleton(dir: &Path, inlet_radius: f64, outlet_radius: f64) -> String {
    let json = format!(
        r#"{{
  "nodes": [
    {{ "id": 0, "pos_um": [0.0, 0.0, 16.0], "radius_um": {inlet_radius} }},
    {{ "id": 1, "pos_um": [0.0, 0.0, 0.0], "radius_um": {outlet_radius} }}
  ],
  "edges": [[0, 1]],
  "iolets": [
    {{ "node": 0, "kind": "inlet", "pressure_mmhg": 20.0 }},
    {{ "node": 1, "kind": "outlet", "pressure_mmhg": 10.0 }}
  ]
}}"#
    );
    let path = dir.join("pipe.json");
    std::fs::write(&path, json).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn voxelize_reports_the_domain() {
    let dir = tempfile::tempdir().unwrap();
    let skel = pipe_skeleton(dir.path(), 3.0, 3.0);
    let out = dir.path().join("pipe.clbd");
    let o = caplb(&["voxelize", "--skeleton", &skel, "--dx", "1", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{o:?}");
    let text = stdout(&o);
    assert!(text.contains("fluid sites: "));
    assert!(text.contains("D/dx = 6.000"));
    assert!(text.contains("95% rule not met"));
    assert!(out.is_file());
}

#[test]
fn malformed_skeleton_exits_2_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, "{\n  \"nodes\": [,\n}").unwrap();
    let o = caplb(&["voxelize", "--skeleton", path.to_str().unwrap(), "--dx", "1", "--out", "x.clbd"]);
    assert_eq!(o.status.code(), Some(2));
    let e = error_of(&o);
    assert_eq!(e["error"], "json");
    assert_eq!(e["line"], 2);
    assert!(e["column"].as_u64().unwrap() > 0);
}

#[test]
fn thin_vessel_exits_3_naming_the_segment() {
    let dir = tempfile::tempdir().unwrap();
    let skel = pipe_skeleton(dir.path(), 0.5, 1.0);
    let out = dir.path().join("thin.clbd");
    let o = caplb(&["voxelize", "--skeleton", &skel, "--dx", "1", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    let e = error_of(&o);
    assert_eq!(e["error"], "min_diameter");
    assert_eq!(e["segment"], 0);
    assert_eq!(e["diameter_um"], 1.5);
    assert!(!out.exists());
    let o = caplb(&["voxelize", "--skeleton", &skel, "--dx", "1", "--out", out.to_str().unwrap(), "--min-d-override"]);
    assert!(o.status.success(), "{o:?}");
}

#[test]
fn unwritable_output_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let skel = pipe_skeleton(dir.path(), 3.0, 3.0);
    let out = dir.path().join("missing").join("pipe.clbd");
    let o = caplb(&["voxelize", "--skeleton", &skel, "--dx", "1", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));
    assert_eq!(error_of(&o)["error"], "io");
}

#[test]
fn fit_rheology_recovers_published_parameters() {
    let o = caplb(&["fit-rheology"]);
    assert!(o.status.success(), "{o:?}");
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let p = &v["params"];
    for (key, want) in [("eta0", 14.49e-3), ("eta_inf", 3.265e-3), ("lambda", 0.1839), ("a", 2.707), ("n", 0.4136)] {
        let got = p[key].as_f64().unwrap();
        assert!((got / want - 1.0).abs() < 0.05, "{key}: {got} vs {want}");
    }
}

#[test]
fn fit_rheology_rejects_a_bad_table() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    std::fs::write(&path, "shear_rate_per_s,viscosity_mpas,source\n1,abc,x\n").unwrap();
    let o = caplb(&["fit-rheology", "--data", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn histogram_weights_by_length() {
    let dir = tempfile::tempdir().unwrap();
    let skel = pipe_skeleton(dir.path(), 3.0, 3.0);
    let out = dir.path().join("hist.json");
    let o = caplb(&["histogram", "--skeleton", &skel, "--bin", "1", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{o:?}");
    let v: Value = serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap();
    assert_eq!(v["bin_edges"], serde_json::json!([6.0, 7.0]));
    assert_eq!(v["length_per_bin"], serde_json::json!([16.0]));
    assert_eq!(v["total_length"], 16.0);
    // a single diameter has no spread to fit
    assert_eq!(v["degenerate"], true);
}

#[test]
fn print_schema_is_json() {
    let o = caplb(&["run", "--print-schema"]);
    assert!(o.status.success());
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["type"], "object");
    assert!(v["properties"]["timing"].is_object());
}

#[test]
fn run_writes_report_and_fields() {
    let dir = tempfile::tempdir().unwrap();
    pipe_skeleton(dir.path(), 3.0, 3.0);
    let cfg = dir.path().join("run.json");
    std::fs::write(
        &cfg,
        r#"{"skeleton": "pipe.json", "output": "out", "dx_um": 1, "timing": {"tau": 0.8},
            "rheology": {"newtonian": {"eta_pa_s": 3.265e-3}}, "export_vtk": false}"#,
    )
    .unwrap();
    let o = caplb(&["run", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{o:?}");
    let report: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(report["steps"].as_u64().unwrap() > 0);
    assert_eq!(report["iolets"].as_array().unwrap().len(), 2);
    assert!(dir.path().join("out/fields.clbs").is_file());
    assert!(dir.path().join("out/report.json").is_file());
    assert!(!dir.path().join("out/fields_fields.vtk").exists());
}

#[test]
fn run_rejects_unknown_config_keys() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"output": "o", "timing": {"tau": 0.8}, "rheology": {"newtonian": {"eta_pa_s": 1}}, "speed": 3}"#)
        .unwrap();
    let o = caplb(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_of(&o)["error"], "json");
    let o = caplb(&["run", "--config", dir.path().join("none.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn poiseuille_bench_prints_one_row_per_case() {
    let o = caplb(&["bench", "poiseuille", "--D", "3", "--tau", "0.8"]);
    assert!(o.status.success(), "{o:?}");
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("D,tau,eps_q,eps_T_wall"));
    let cols: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(cols.len(), lines[0].split(',').count());
    assert_eq!(cols[0].parse::<f64>().unwrap(), 3.0);
    assert_eq!(cols[1].parse::<f64>().unwrap(), 0.8);
    let eps_q: f64 = cols[2].parse().unwrap();
    assert!(eps_q.is_finite() && eps_q > 0.0);
}

//! End-to-end runs of the mtsurf binary: exit codes, report files and the
//! documented error paths.

use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_mtsurf")
}

fn write(path: &Path, contents: &str) {
    std::fs::write(path, contents).unwrap();
}

fn torus_manifest(dir: &Path, h: f64, n: usize) -> PathBuf {
    let path = dir.join(format!("torus_{h}_{n}.json"));
    write(
        &path,
        &format!(
            r#"{{
  "surface": {{"catalog": {{"id": "flat_torus", "params": {{"h": {h}}}}}}},
  "grid": {{"origin": [0.0, 0.0], "extent": [6.283185307179586, 6.283185307179586],
            "resolution": [{n}, {n}], "periodic": [true, true]}},
  "backend": "analytic"
}}"#
        ),
    );
    path
}

#[test]
fn analyze_flat_torus_passes_and_classifies() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = torus_manifest(dir.path(), 1.0, 16);
    let out = dir.path().join("out");
    let status = Command::new(bin())
        .args(["analyze", "--manifest"])
        .arg(&manifest)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let cls: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("classification.json")).unwrap())
            .unwrap();
    assert_eq!(cls["constrained_willmore"], serde_json::json!(true));
    assert_eq!(cls["willmore"], serde_json::json!(false));
    assert_eq!(cls["isothermic"], serde_json::json!(true));
    assert!(out.join("invariants.csv").exists());
    assert!(out.join("residuals.json").exists());
    let res: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("residuals.json")).unwrap())
            .unwrap();
    assert_eq!(res["passed"], serde_json::json!(true));
}

#[test]
fn analyze_reruns_reproduce_outputs_bit_identically() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = torus_manifest(dir.path(), 1.0, 12);
    let (o1, o2) = (dir.path().join("o1"), dir.path().join("o2"));
    for out in [&o1, &o2] {
        let status = Command::new(bin())
            .args(["analyze", "--manifest"])
            .arg(&manifest)
            .arg("--out")
            .arg(out)
            .status()
            .unwrap();
        assert_eq!(status.code(), Some(0));
    }
    for name in ["invariants.csv", "classification.json", "residuals.json"] {
        let a = std::fs::read(o1.join(name)).unwrap();
        let b = std::fs::read(o2.join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between reruns");
    }
}

#[test]
fn analyze_degenerate_reports_constant_gauss_map() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = dir.path().join("degenerate.json");
    write(
        &manifest,
        r#"{
  "surface": {"catalog": {"id": "degenerate", "params": {"amplitude": 0.1}}},
  "grid": {"origin": [-0.6, -0.6], "extent": [1.2, 1.2],
           "resolution": [16, 16], "periodic": [false, false]},
  "backend": "analytic"
}"#,
    );
    let out = dir.path().join("out");
    let status = Command::new(bin())
        .args(["analyze", "--manifest"])
        .arg(&manifest)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let cls: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("classification.json")).unwrap())
            .unwrap();
    assert_eq!(cls["gauss_map_constant"], serde_json::json!(true));
    assert_eq!(cls["marginally_trapped"], serde_json::json!(true));
}

#[test]
fn corrupted_csv_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("bad.csv");
    write(&csv, "x,y,f0,f1,f2,f3,f4\n0,0,1,0,0,oops,0\n");
    let manifest = dir.path().join("m.json");
    write(
        &manifest,
        r#"{
  "surface": {"csv": "bad.csv"},
  "grid": {"origin": [0,0], "extent": [1,1], "resolution": [8,8], "periodic": [false,false]},
  "backend": "fd"
}"#,
    );
    let output = Command::new(bin())
        .args(["analyze", "--manifest"])
        .arg(&manifest)
        .arg("--out")
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("oops"), "diagnostic missing: {stderr}");
}

#[test]
fn deform_lambda_family_passes_laws() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = dir.path().join("deform.json");
    write(
        &manifest,
        r#"{
  "surface": {"catalog": {"id": "flat_torus", "params": {"h": 1.0}}},
  "grid": {"origin": [0,0], "extent": [2.0, 2.0],
           "resolution": [16, 16], "periodic": [false, false]},
  "backend": "analytic",
  "deformations": [
    {"family": "lambda", "values": [[0.0, 1.0]]},
    {"family": "calapso", "values": [1.0]},
    {"family": "extended", "values": [[2.0, 0.0]]}
  ]
}"#,
    );
    let out = dir.path().join("out");
    let status = Command::new(bin())
        .args(["deform", "--manifest"])
        .arg(&manifest)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    assert!(out.join("surface_lambda_0_0.csv").exists());
    assert!(out.join("invariants_lambda_0_0.csv").exists());
    let law: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("laws_lambda_0_0.json")).unwrap())
            .unwrap();
    assert_eq!(law["passed"], serde_json::json!(true));
    assert!(law["law"]["kappa_law"].as_f64().unwrap() < 1e-6);
    let ext: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(out.join("laws_extended_2_0.json")).unwrap(),
    )
    .unwrap();
    assert!(ext["fundamental_residual"].as_f64().unwrap() < 1e-8);
}

#[test]
fn deform_degenerate_exits_3_naming_the_flag() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = dir.path().join("m.json");
    write(
        &manifest,
        r#"{
  "surface": {"catalog": {"id": "degenerate", "params": {"amplitude": 0.1}}},
  "grid": {"origin": [-0.6, -0.6], "extent": [1.2, 1.2],
           "resolution": [12, 12], "periodic": [false, false]},
  "backend": "analytic",
  "deformations": [{"family": "lambda", "values": [[0.0, 1.0]]}]
}"#,
    );
    let output = Command::new(bin())
        .args(["deform", "--manifest"])
        .arg(&manifest)
        .arg("--out")
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(3));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("non_isotropic"), "flag missing: {stderr}");
}

#[test]
fn generate_then_verify_congruence_paths() {
    let dir = tempfile::tempdir().unwrap();
    // two generated tori with distinct h on the same open chart
    let mk = |h: f64, name: &str| -> PathBuf {
        let manifest = dir.path().join(format!("{name}.json"));
        write(
            &manifest,
            &format!(
                r#"{{
  "surface": {{"catalog": {{"id": "flat_torus", "params": {{"h": {h}}}}}}},
  "grid": {{"origin": [0,0], "extent": [1.6, 1.6], "resolution": [16, 16],
            "periodic": [false, false]}},
  "backend": "analytic"
}}"#
            ),
        );
        let out = dir.path().join(name);
        let status = Command::new(bin())
            .args(["generate", "--manifest"])
            .arg(&manifest)
            .arg("--out")
            .arg(&out)
            .status()
            .unwrap();
        assert_eq!(status.code(), Some(0));
        out.join("surface.csv")
    };
    let a = mk(1.0, "h1");
    let b = mk(2.0, "h2");
    let manifest = dir.path().join("h1.json");

    // identical files: congruent with the identity
    let out = dir.path().join("verify_same");
    let status = Command::new(bin())
        .args(["verify", "--manifest"])
        .arg(&manifest)
        .arg(&a)
        .arg(&a)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let rep: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("congruence.json")).unwrap())
            .unwrap();
    assert_eq!(rep["congruence"]["congruent"], serde_json::json!(true));
    let phi = rep["congruence"]["phi"].as_array().unwrap();
    assert!((phi[0][0].as_f64().unwrap() - 1.0).abs() < 1e-9);
    assert!(phi[0][1].as_f64().unwrap().abs() < 1e-9);

    // distinct mean curvature: not congruent, exit 1
    let status = Command::new(bin())
        .args(["verify", "--manifest"])
        .arg(&manifest)
        .arg(&a)
        .arg(&b)
        .arg("--out")
        .arg(dir.path().join("verify_diff"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));
}

#[test]
fn verify_grid_mismatch_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let mk = |n: usize, name: &str| -> PathBuf {
        let manifest = dir.path().join(format!("{name}.json"));
        write(
            &manifest,
            &format!(
                r#"{{
  "surface": {{"catalog": {{"id": "flat_torus", "params": {{"h": 1.0}}}}}},
  "grid": {{"origin": [0,0], "extent": [1.6, 1.6], "resolution": [{n}, {n}],
            "periodic": [false, false]}},
  "backend": "analytic"
}}"#
            ),
        );
        let out = dir.path().join(name);
        Command::new(bin())
            .args(["generate", "--manifest"])
            .arg(&manifest)
            .arg("--out")
            .arg(&out)
            .status()
            .unwrap();
        out.join("surface.csv")
    };
    let a = mk(16, "g16");
    let b = mk(12, "g12");
    let status = Command::new(bin())
        .args(["verify", "--manifest"])
        .arg(dir.path().join("g16.json"))
        .arg(&a)
        .arg(&b)
        .arg("--out")
        .arg(dir.path().join("out"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(4));
}

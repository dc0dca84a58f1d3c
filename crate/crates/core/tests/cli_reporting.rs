use std::path::PathBuf;
use std::process::Command;

use bihlab::fieldio::{read_field, write_field, FieldFile};
use bihlab::LabError;

fn descriptor(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../descriptors").join(name).to_string_lossy().into_owned()
}

fn lab(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_lab")).args(args).output().unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn sample() -> FieldFile {
    FieldFile { rank: 2, dims: [3, 3, 3], h: 0.5, values: vec![1.0, -0.0, f64::MIN_POSITIVE, 1e300, std::f64::consts::PI] }
}

#[test]
fn identities_command_exits_zero() {
    let (code, out, _) = lab(&["identities", "--grid", "8", "--seed", "1"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert!(v.as_array().unwrap().iter().all(|r| r["status"] == "PASS"));
}

#[test]
fn cohomology_of_the_cube_is_trivial() {
    let (code, out, _) = lab(&["cohomology", "--descriptor", &descriptor("cube_gt_empty.cfg")]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    for r in v.as_array().unwrap() {
        assert_eq!(r["details"]["harmonic"], serde_json::json!([0, 0]));
    }
}

#[test]
fn bad_widths_exit_two() {
    let (code, _, err) = lab(&["build", "--descriptor", &descriptor("bad_widths.cfg")]);
    assert_eq!(code, 2);
    assert!(err.contains("incompatible widths"), "{err}");
}

#[test]
fn missing_descriptor_and_bad_tolerance_exit_two() {
    assert_eq!(lab(&["build"]).0, 2);
    assert_eq!(lab(&["identities", "--tol-harm", "-1"]).0, 2);
    assert_eq!(lab(&["build", "--descriptor", "/nonexistent/x.cfg"]).0, 2);
}

#[test]
fn helmholtz_parts_round_trip_through_field_files() {
    let dir = std::env::temp_dir().join(format!("bihlab-parts-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let d = dir.to_string_lossy().into_owned();
    let (code, _, err) =
        lab(&["helmholtz", "--descriptor", &descriptor("cavity.cfg"), "--level", "2", "--save-parts", &d]);
    assert_eq!(code, 0, "{err}");
    let harmonic = bihlab::fieldio::load_field(&dir.join("first_level2_harmonic.bihf"), Some(2)).unwrap();
    assert!(harmonic.values.iter().any(|&v| v != 0.0));
    // a saved part is a valid input field for a single-complex descriptor
    let single = dir.join("first.cfg");
    let text = std::fs::read_to_string(descriptor("cavity.cfg")).unwrap() + "\n[complex]\nwhich = \"first\"\n";
    std::fs::write(&single, text).unwrap();
    let (code, out, err) = lab(&[
        "helmholtz",
        "--descriptor",
        &single.to_string_lossy(),
        "--level",
        "2",
        "--field",
        &dir.join("first_level2_range.bihf").to_string_lossy(),
    ]);
    assert_eq!(code, 0, "{err}");
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    let norms = v[0]["details"]["norms"].as_array().unwrap();
    assert!(norms[1].as_f64().unwrap() <= 1e-8 * norms[0].as_f64().unwrap());
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn field_round_trip_is_bitwise() {
    let mut buf = Vec::new();
    write_field(&mut buf, &sample()).unwrap();
    let back = read_field(buf.as_slice(), Some(2)).unwrap();
    let bits = |f: &FieldFile| f.values.iter().map(|v| v.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&back), bits(&sample()));
    assert_eq!((back.rank, back.dims, back.h), (2, [3, 3, 3], 0.5));
}

#[test]
fn wrong_rank_is_a_header_mismatch() {
    let mut buf = Vec::new();
    write_field(&mut buf, &sample()).unwrap();
    assert!(matches!(read_field(buf.as_slice(), Some(1)), Err(LabError::HeaderMismatch(_))));
}

#[test]
fn truncated_payload_is_an_io_error() {
    let mut buf = Vec::new();
    write_field(&mut buf, &sample()).unwrap();
    buf.truncate(buf.len() - 3);
    assert!(matches!(read_field(buf.as_slice(), None), Err(LabError::Io(_))));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let args = ["poincare", "--descriptor", &descriptor("half_split.cfg"), "--samples", "10", "--seed", "3"];
    let (c1, a, _) = lab(&args);
    let (c2, b, _) = lab(&args);
    assert_eq!((c1, c2), (0, 0));
    assert_eq!(a, b);
}

use std::path::PathBuf;

use msvq_core::corpus::{import_svc, parse_signature_file, write_signature_file};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

#[test]
fn canonical_signature_file_loads_and_rewrites_identically() {
    let path = fixture("five_samples.sig");
    let sig = parse_signature_file(&path).unwrap();
    assert_eq!(sig.len(), 5);
    let xs: Vec<f64> = sig.samples.iter().map(|s| s.x).collect();
    assert_eq!(xs, [1200.0, 1210.0, 1225.0, 1243.0, 1260.0]);
    assert_eq!(sig.samples[2].p, 310.5);

    let dir = tempfile::tempdir().unwrap();
    let copy = dir.path().join("copy.sig");
    write_signature_file(&sig, &copy).unwrap();
    assert_eq!(std::fs::read(&copy).unwrap(), std::fs::read(&path).unwrap());
}

#[test]
fn svc_file_imports_with_rebased_time() {
    let sig = import_svc(fixture("two_points.svc")).unwrap();
    assert_eq!(sig.len(), 2);
    assert_eq!(sig.samples[0].t, 0.0);
    assert_eq!(sig.samples[1].t, 10.0);
    assert_eq!(sig.pen_status, Some(vec![1, 0]));
}

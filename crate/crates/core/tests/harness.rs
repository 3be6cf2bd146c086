use std::path::PathBuf;

use stdiff::harness::{run_experiment, run_file, sweep, write_rows, ExperimentConfig, Scale, CSV_HEADER};
use stdiff::Error;

fn configs_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

const IDENTITY: &str = r#"
id = "identity"
system.kind = "identity"
observable.kind = "fourier"
observable.coeffs = [[1, 0.5, 0.0], [-1, 0.5, 0.0]]
metric.kind = "torus"
grid.r = [0.1, 0.01, 0.001]
grid.k = [1, 10]
points.count = 20
points.seed = 1
predicted.kind = "invariant_projection"
tolerances = [0.01]
acceptance.r0 = 0.01
acceptance.k0 = 1
acceptance.max_envelope = 0.01
"#;

#[test]
fn identity_cosine_passes_taylor_tail() {
    let config = ExperimentConfig::from_toml_str(IDENTITY).unwrap();
    let report = run_experiment(&config).unwrap();
    assert_eq!(report.rows.len(), 20 * 3 * 2);
    assert_eq!(report.pass_fractions, vec![(0.01, 1.0)]);
    for row in &report.rows {
        let Some(Scale::Radius(r)) = row.scale else { panic!("torus row without radius") };
        let t = 2.0 * std::f64::consts::PI * r;
        assert!(row.abs_error <= t * t / 6.0 + 1e-15);
    }
    assert!(report.passed());
}

#[test]
fn rotation_cosine_envelope_matches_geometric_bound() {
    let text = r#"
system.kind = "circle_rotation"
system.angle = "sqrt2_minus_1"
system.irrational = true
observable.kind = "fourier"
observable.coeffs = [[1, 0.5, 0.0], [-1, 0.5, 0.0]]
metric.kind = "torus"
grid.r = [0.1, 0.01]
grid.k = [10000, 20000]
points.count = 10
points.seed = 4
predicted.kind = "explicit"
predicted.value = 0.0
"#;
    let report = run_experiment(&ExperimentConfig::from_toml_str(text).unwrap()).unwrap();
    let env = report.envelope(Some(Scale::Radius(0.1)), 10_000);
    let alpha = std::f64::consts::SQRT_2 - 1.0;
    let bound = 1.0 / (1e4 * (std::f64::consts::PI * alpha).sin());
    assert!(env.sup <= bound, "{} > {bound}", env.sup);
    assert!(env.sup <= 0.00034 + 0.00017);
}

#[test]
fn envelopes_shrink_with_the_tail() {
    let report = run_experiment(&ExperimentConfig::from_path(&configs_dir().join("doubling_martingale.toml")).unwrap()).unwrap();
    let ns = [8, 10, 12, 16, 20];
    let ks = [1024, 2048, 4096, 8192, 16384];
    for (i, n) in ns.iter().enumerate() {
        for (j, k) in ks.iter().enumerate() {
            let e = report.envelope(Some(Scale::Level(*n)), *k).sup;
            if i + 1 < ns.len() {
                assert!(report.envelope(Some(Scale::Level(ns[i + 1])), *k).sup <= e);
            }
            if j + 1 < ks.len() {
                assert!(report.envelope(Some(Scale::Level(*n)), ks[j + 1]).sup <= e);
            }
        }
    }
    assert_eq!(report.envelopes.len(), ns.len() * ks.len());
}

#[test]
fn csv_line_counts() {
    let mut empty = Vec::new();
    write_rows("none", &[], &mut empty).unwrap();
    assert_eq!(String::from_utf8(empty).unwrap(), format!("{}\n", CSV_HEADER.join(",")));

    let mut config = ExperimentConfig::from_toml_str(IDENTITY).unwrap();
    config.points_count = 1;
    config.grid_r = vec![0.1];
    config.grid_k = vec![1, 2, 3];
    let report = run_experiment(&config).unwrap();
    let mut buf = Vec::new();
    report.write_csv(&mut buf).unwrap();
    assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 4);
}

#[test]
fn repeated_runs_write_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("identity.toml");
    std::fs::write(&path, IDENTITY).unwrap();
    let (_, a) = run_file(&path, &dir.path().join("a")).unwrap();
    let (_, b) = run_file(&path, &dir.path().join("b")).unwrap();
    assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
}

#[test]
fn temporal_rows_leave_scale_empty() {
    let text = r#"
id = "temporal"
system.kind = "circle_rotation"
system.angle = "1/4"
observable.kind = "fourier"
observable.coeffs = [[1, 1.0, 0.0]]
grid.k = [4, 8]
points.count = 2
points.seed = 9
"#;
    let report = run_experiment(&ExperimentConfig::from_toml_str(text).unwrap()).unwrap();
    let mut buf = Vec::new();
    report.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    for line in text.lines().skip(1) {
        assert_eq!(line.split(',').nth(3), Some(""));
    }
    for row in &report.rows {
        assert!(row.abs_error < 1e-12);
    }
}

#[test]
fn singular_orbit_names_the_cell() {
    // float doubling orbits reach 0 after at most ~1075 steps
    let text = r#"
system.kind = "doubling_map"
observable.kind = "power_singularity"
observable.exponent = 0.5
observable.center = 0.0
grid.k = [10, 2000]
points.count = 1
points.seed = 0
predicted.kind = "explicit"
predicted.value = 0.0
"#;
    let err = run_experiment(&ExperimentConfig::from_toml_str(text).unwrap()).unwrap_err();
    match err {
        Error::Cell { x_index, r_or_n, k, source } => {
            assert_eq!((x_index, r_or_n.as_str(), k), (0, "", 2000));
            assert!(matches!(*source, Error::SingularPoint { step: Some(_) }));
        }
        other => panic!("unexpected error {other:?}"),
    }
}

#[test]
fn unresolvable_prediction_is_rejected() {
    let text = r#"
system.kind = "product_rotation_identity"
system.angle = "golden"
observable.kind = "tensor"
observable.first.kind = "fourier"
observable.first.coeffs = [[1, 1.0, 0.0]]
observable.second.kind = "sawtooth"
flavor = "squares"
grid.k = [10]
points.count = 1
points.seed = 0
predicted.kind = "spectral"
"#;
    assert!(matches!(ExperimentConfig::from_toml_str(text), Err(Error::UnsupportedDecomposition(_))));
}

#[test]
fn sweep_runs_configs_in_name_order() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("b.toml"), IDENTITY.replace("id = \"identity\"", "id = \"b\"")).unwrap();
    std::fs::write(dir.path().join("a.toml"), IDENTITY.replace("id = \"identity\"", "id = \"a\"")).unwrap();
    std::fs::write(dir.path().join("notes.txt"), "ignored").unwrap();
    let out = dir.path().join("out");
    let results = sweep(dir.path(), &out).unwrap();
    let ids: Vec<String> = results.into_iter().map(|(_, r)| r.unwrap().0.experiment_id).collect();
    assert_eq!(ids, vec!["a", "b"]);
    assert!(out.join("a.csv").exists());
}

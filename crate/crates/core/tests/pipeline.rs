use std::fs;
use std::path::Path;
use std::sync::OnceLock;

use hemorom::fom::{run_fom, SnapshotDatabase};
use hemorom::pod::numerical_rank;
use hemorom::pipeline::offline::{read_manifest, INVALID_MARKER, MANIFEST};
use hemorom::pipeline::online::GpSource;
use hemorom::pipeline::{
    build_offline, evaluate_errors, parse_times, read_bundle, run_offline, run_online, write_bundle, PipelineConfig,
};
use hemorom::rom::Stabilization;
use hemorom::Error;

const SMALL: &str = r#"
[mesh]
nx = 12
ny = 4
[time]
T = 0.2
stride = 20
[fom]
n_piso = 6
[nn]
epochs = 300
"#;

fn config(extra: &str) -> PipelineConfig {
    PipelineConfig::from_toml_str(&format!("{SMALL}\n{extra}"), Path::new(".")).unwrap()
}

fn database() -> &'static SnapshotDatabase<f64> {
    static DB: OnceLock<SnapshotDatabase<f64>> = OnceLock::new();
    DB.get_or_init(|| run_fom(&config("").fom).unwrap())
}

fn bundle_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    v.sort();
    v
}

#[test]
fn snapshot_database_round_trips() {
    let tmp = tempfile::tempdir().unwrap();
    let db = database();
    db.write(&tmp.path().join("db")).unwrap();
    let back = SnapshotDatabase::<f64>::read(&tmp.path().join("db")).unwrap();
    assert_eq!(&back, db);
}

#[test]
fn bundle_round_trip_and_byte_identical_rerun() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config("");
    let a = tmp.path().join("a.bundle");
    let b = tmp.path().join("b.bundle");
    let m1 = run_offline(&PipelineConfig { bundle: a.clone(), ..cfg.clone() }, database()).unwrap();
    run_offline(&PipelineConfig { bundle: b.clone(), ..cfg.clone() }, database()).unwrap();
    assert_eq!(bundle_bytes(&a), bundle_bytes(&b));
    assert!(!a.join(INVALID_MARKER).exists());
    assert!(!tmp.path().join("a.bundle.lock").exists());

    let back = read_bundle(&a).unwrap();
    assert_eq!(back.phi, m1.phi);
    assert_eq!(back.sup, m1.sup);
    assert_eq!(back.psi, m1.psi);
    assert_eq!(back.ops, m1.ops);
    assert_eq!(back.nn, m1.nn);
    assert_eq!(back.a0, m1.a0);
    assert_eq!(back.b0, m1.b0);
    assert_eq!(back.lambda_u, m1.lambda_u);
    assert_eq!(back.config.fom, m1.config.fom);
    assert_eq!(back.config.pod_delta, m1.config.pod_delta);

    let man = read_manifest(&a).unwrap();
    assert_eq!(man.status, "complete");
    for name in ["chi_u.fld", "chi_p_0.fld", "spectrum_u.txt", "phi_000.fld", "psi_000.fld", "c.ten", "g.ten", "outflow.nn"] {
        assert!(man.artifacts.contains_key(name), "missing {name}");
        assert!(a.join(name).is_file());
    }
    assert_eq!(man.config.get("mesh.nx").map(String::as_str), Some("12"));
}

#[test]
fn tampered_or_marked_bundles_are_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("rom.bundle");
    run_offline(&PipelineConfig { bundle: dir.clone(), ..config("") }, database()).unwrap();

    let k = dir.join("k.mat");
    let orig = fs::read(&k).unwrap();
    let mut bad = orig.clone();
    bad.extend_from_slice(b"\n");
    fs::write(&k, &bad).unwrap();
    let e = read_bundle(&dir).unwrap_err();
    assert!(matches!(e, Error::InvalidBundle { .. }), "{e}");
    assert_eq!(e.exit_code(), 4);
    fs::write(&k, &orig).unwrap();
    read_bundle(&dir).unwrap();

    fs::write(dir.join(INVALID_MARKER), "interrupted").unwrap();
    assert!(matches!(read_bundle(&dir), Err(Error::InvalidBundle { .. })));
    fs::remove_file(dir.join(INVALID_MARKER)).unwrap();

    fs::remove_file(dir.join(MANIFEST)).unwrap();
    assert_eq!(read_bundle(&dir).unwrap_err().exit_code(), 4);
}

#[test]
fn concurrent_writer_is_refused() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("rom.bundle");
    let model = build_offline(&config(""), database()).unwrap();
    fs::write(tmp.path().join("rom.bundle.lock"), "").unwrap();
    assert!(write_bundle(&dir, &model).is_err());
    assert!(!dir.join(MANIFEST).exists());
    fs::remove_file(tmp.path().join("rom.bundle.lock")).unwrap();
    write_bundle(&dir, &model).unwrap();
    read_bundle(&dir).unwrap();
}

#[test]
fn full_energy_keeps_every_snapshot_direction() {
    let db = database();
    let model = build_offline(&config("[pod]\ndelta = 1.0"), db).unwrap();
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("full.bundle");
    write_bundle(&dir, &model).unwrap();
    let man = read_manifest(&dir).unwrap();
    let n_phi: usize = man.rom["n_phi"].parse().unwrap();
    assert_eq!(n_phi, model.phi.len());
    assert_eq!(n_phi, numerical_rank(&model.lambda_u));
    assert!(n_phi >= 2 && n_phi <= db.len());
    assert_eq!(man.rom["n_snapshots"], db.len().to_string());
}

#[test]
fn online_provenance_and_extrapolation_flags() {
    let model = build_offline(&config(""), database()).unwrap();
    let training = parse_times("training", &model).unwrap();
    assert_eq!(training.len(), database().len());
    let run = run_online(&model, &training, Stabilization::Supremizer).unwrap();
    assert!(run.provenance.iter().all(|s| *s == GpSource::Snapshot));
    assert!(run.extrapolated.iter().all(|e| !e));
    for (k, t) in training.iter().enumerate() {
        let rec = database().records.iter().find(|r| (r.t - t).abs() < 1e-12).unwrap();
        assert_eq!(run.g_p[k], rec.g_p);
    }

    let mids = parse_times("midpoints", &model).unwrap();
    let run = run_online(&model, &mids[1..], Stabilization::PressurePoisson).unwrap();
    assert!(run.provenance.iter().all(|s| *s == GpSource::Network));

    let run = run_online(&model, &[0.1, 0.35], Stabilization::Supremizer).unwrap();
    assert_eq!(run.extrapolated, vec![false, true]);
    assert_eq!(run.provenance[1], GpSource::NetworkExtrapolated);
    assert!(!run.warnings.is_empty());
}

#[test]
fn bad_time_lists_are_configuration_errors() {
    let model = build_offline(&config(""), database()).unwrap();
    for times in [vec![], vec![0.1, 0.05], vec![0.1, 0.1], vec![-0.5]] {
        let e = run_online(&model, &times, Stabilization::Supremizer).unwrap_err();
        assert_eq!(e.exit_code(), 2, "{times:?}: {e}");
    }
    assert!(parse_times("0.1, abc", &model).is_err());
    assert_eq!(parse_times("0.05,0.1 0.15", &model).unwrap(), vec![0.05, 0.1, 0.15]);
}

#[test]
fn reconstruction_never_beats_projection() {
    let db = database();
    for stab in [Stabilization::Supremizer, Stabilization::PressurePoisson] {
        let model = build_offline(&config(""), db).unwrap();
        let times = parse_times("training", &model).unwrap();
        let run = run_online(&model, &times, stab).unwrap();
        let errors = evaluate_errors(&model, &run, db).unwrap().unwrap();
        assert_eq!(errors.len(), times.len());
        assert!(errors.projection_violations(0.0).is_empty(), "{stab:?}");
        assert!(errors.eps_u.iter().chain(&errors.eps_p).all(|e| e.is_finite()));
    }
}

#[test]
fn errors_are_absent_off_the_snapshot_grid() {
    let model = build_offline(&config(""), database()).unwrap();
    let run = run_online(&model, &[0.03, 0.05], Stabilization::Supremizer).unwrap();
    assert!(evaluate_errors(&model, &run, database()).unwrap().is_none());
}

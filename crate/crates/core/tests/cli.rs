use std::path::Path;
use std::process::{Command, Output};

use num_complex::Complex64;
use qsr::hilbert::{make_state, parity_expectation, StateKind};
use serde_json::Value;

fn qsr(root: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qsr"))
        .args(args)
        .env("QSR_OUTPUT_ROOT", root)
        .output()
        .expect("run qsr")
}

fn ok(root: &Path, args: &[&str]) -> Output {
    let out = qsr(root, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn f(v: &Value) -> f64 {
    v.as_f64().unwrap()
}

#[test]
fn state_summary_reports_parity() {
    let root = tempfile::tempdir().unwrap();
    ok(root.path(), &["state", "--kind", "cat", "--beta", "0+1.7i", "--dim", "32"]);
    let summary = json(&root.path().join("state/summary.json"));
    let rho = make_state(StateKind::Cat { beta: Complex64::new(0.0, 1.7) }, 32).unwrap();
    assert!((f(&summary["parity"]) - parity_expectation(&rho)).abs() < 1e-12);
    assert!(root.path().join("state/state.json").is_file());
}

#[test]
fn vacuum_state_has_zero_occupation() {
    let root = tempfile::tempdir().unwrap();
    ok(root.path(), &["state", "--kind", "fock", "--n", "0", "--dim", "4"]);
    let summary = json(&root.path().join("state/summary.json"));
    assert_eq!(f(&summary["mean_occupation"]), 0.0);
}

#[test]
fn usage_errors_exit_with_2() {
    let root = tempfile::tempdir().unwrap();
    let out = qsr(root.path(), &["state", "--kind", "fock", "--n", "0"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--dim"));
    assert!(!root.path().join("state").exists());
    assert_eq!(qsr(root.path(), &["state", "--bogus"]).status.code(), Some(2));
    assert_eq!(qsr(root.path(), &["cool", "--chi", "1"]).status.code(), Some(2));
}

#[test]
fn output_directory_is_not_silently_reused() {
    let root = tempfile::tempdir().unwrap();
    let args = ["state", "--kind", "fock", "--n", "1", "--dim", "4"];
    ok(root.path(), &args);
    assert_eq!(qsr(root.path(), &args).status.code(), Some(4));
    let mut again = args.to_vec();
    again.push("--overwrite");
    ok(root.path(), &again);
}

#[test]
fn truncation_failure_exits_with_3() {
    let root = tempfile::tempdir().unwrap();
    let out = qsr(root.path(), &["state", "--kind", "coherent", "--alpha", "3", "--dim", "5"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn config_file_with_flag_override() {
    let root = tempfile::tempdir().unwrap();
    let cfg = root.path().join("run.json");
    std::fs::write(
        &cfg,
        r#"{"state": {"kind": "cat", "beta": [0.0, 1.7], "dim": 40}, "s": 0.0, "grid": {"n": 128}}"#,
    )
    .unwrap();
    let cfg = cfg.to_str().unwrap();
    ok(root.path(), &["quasiprob", "--config", cfg, "--out", root.path().join("w").to_str().unwrap()]);
    ok(root.path(), &["quasiprob", "--config", cfg, "--s", "-1", "--out", root.path().join("q").to_str().unwrap()]);
    let w = json(&root.path().join("w/quasiprob.json"));
    let q = json(&root.path().join("q/quasiprob.json"));
    assert_eq!(f(&w["s"]), 0.0);
    assert!(f(&w["min"]) < -0.1);
    assert_eq!(f(&q["s"]), -1.0);
    assert!(f(&q["min"]) >= -1e-6);
    assert_eq!(q["n"], 128);
    assert!(f(&q["normalization_residual"]).abs() < 1e-6);
    let recorded = json(&root.path().join("q/config.json"));
    assert_eq!(f(&recorded["config"]["s"]), -1.0);
    assert_eq!(recorded["config_hash"], q["config_hash"]);
    assert_ne!(w["config_hash"], q["config_hash"]);

    let bad = root.path().join("bad.json");
    std::fs::write(&bad, r#"{"sigma": 1}"#).unwrap();
    assert_eq!(qsr(root.path(), &["quasiprob", "--config", bad.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn smoothed_fock_one_is_unimodal() {
    let root = tempfile::tempdir().unwrap();
    ok(root.path(), &["quasiprob", "--kind", "fock", "--n", "1", "--dim", "10", "--s", "-5.7"]);
    let sidecar = json(&root.path().join("quasiprob/quasiprob.json"));
    assert_eq!(sidecar["radially_unimodal"], true);
    let pgm = std::fs::read(root.path().join("quasiprob/quasiprob.pgm")).unwrap();
    assert!(pgm.starts_with(b"P5\n"));
    assert_eq!(pgm.len() - header_len(&pgm), 2 * 256 * 256);
}

/// Bytes before the raster: magic, comments, size and maxval lines.
fn header_len(pgm: &[u8]) -> usize {
    let mut fields = 0;
    let mut i = 0;
    while fields < 4 {
        if pgm[i] == b'#' {
            while pgm[i] != b'\n' {
                i += 1;
            }
            i += 1;
            continue;
        }
        while pgm[i].is_ascii_whitespace() {
            i += 1;
        }
        if pgm[i] == b'#' {
            continue;
        }
        while !pgm[i].is_ascii_whitespace() {
            i += 1;
        }
        fields += 1;
    }
    i + 1
}

#[test]
fn marginal_with_probe() {
    let root = tempfile::tempdir().unwrap();
    ok(
        root.path(),
        &["marginal", "--kind", "fock", "--n", "0", "--dim", "6", "--theta", "0.5", "--chi", "2"],
    );
    let s = json(&root.path().join("marginal/summary.json"));
    assert!((f(&s["variance"]) - 0.5).abs() < 1e-6);
    // scaled outcome variance: 1/2 + (1/2)/χ²
    assert!((f(&s["outcome_variance"]) - 0.625).abs() < 1e-4);
    assert!(root.path().join("marginal/outcome.csv").is_file());
}

#[test]
fn tomography_vacuum_and_determinism() {
    let root = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let dir = root.path().join(name);
        ok(
            root.path(),
            &[
                "tomography", "--kind", "fock", "--n", "0", "--dim", "8", "--chi", "3", "--angles", "24",
                "--per-angle", "100000", "--seed", "20240601", "--out", dir.to_str().unwrap(),
            ],
        );
        dir
    };
    let a = run("a");
    let b = run("b");
    let report = json(&a.join("report.json"));
    assert!(f(&report["comparison"]["l2"]) < 0.01, "{report}");
    for file in ["dataset.csv", "reconstruction.csv", "reconstruction.pgm", "reconstruction.json", "report.json"] {
        assert_eq!(std::fs::read(a.join(file)).unwrap(), std::fs::read(b.join(file)).unwrap(), "{file}");
    }

    // reconstruct again from the written dataset
    let c = root.path().join("c");
    ok(
        root.path(),
        &[
            "tomography", "--dataset", a.join("dataset.csv").to_str().unwrap(), "--kind", "fock", "--n", "0",
            "--dim", "8", "--out", c.to_str().unwrap(),
        ],
    );
    let again = json(&c.join("report.json"));
    assert_eq!(again["comparison"], report["comparison"]);
    assert_eq!(
        std::fs::read(a.join("reconstruction.pgm")).unwrap().len(),
        std::fs::read(c.join("reconstruction.pgm")).unwrap().len()
    );

    let compared = root.path().join("cmp");
    ok(
        root.path(),
        &[
            "compare", "--a", a.join("reconstruction.csv").to_str().unwrap(), "--b",
            a.join("direct.csv").to_str().unwrap(), "--out", compared.to_str().unwrap(),
        ],
    );
    assert_eq!(json(&compared.join("report.json"))["comparison"], report["comparison"]);
}

#[test]
fn tomography_rejects_raising_s() {
    let root = tempfile::tempdir().unwrap();
    let out = qsr(
        root.path(),
        &["tomography", "--kind", "fock", "--n", "0", "--dim", "6", "--chi", "3", "--seed", "1", "--s-target", "0"],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("ordering"));
}

#[test]
fn tomography_requires_a_seed() {
    let root = tempfile::tempdir().unwrap();
    let out = qsr(root.path(), &["tomography", "--kind", "fock", "--n", "0", "--dim", "6", "--chi", "3"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--seed"));
}

fn cool_rows(dir: &Path) -> Vec<Vec<f64>> {
    std::fs::read_to_string(dir.join("cool.csv"))
        .unwrap()
        .lines()
        .skip(2)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect()
}

#[test]
fn cooling_single_run_and_sweep() {
    let root = tempfile::tempdir().unwrap();
    ok(root.path(), &["cool", "--nbar", "1e4", "--chi", "1", "--out", root.path().join("one").to_str().unwrap()]);
    let rows = cool_rows(&root.path().join("one"));
    assert_eq!(rows.len(), 1);
    assert!(rows[0][5] < 1e-2);

    let sweep = root.path().join("sweep.json");
    std::fs::write(&sweep, r#"{"nbar": 10000, "chi": [0.5, 1, 2, 4, 8]}"#).unwrap();
    let dir = root.path().join("sweep");
    ok(root.path(), &["cool", "--config", sweep.to_str().unwrap(), "--out", dir.to_str().unwrap()]);
    let n_eff: Vec<f64> = cool_rows(&dir).iter().map(|r| r[3]).collect();
    assert_eq!(n_eff.len(), 5);
    assert!(n_eff.windows(2).all(|w| w[1] < w[0]), "{n_eff:?}");

    let dir = root.path().join("noisy");
    ok(root.path(), &["cool", "--nbar", "1e4", "--chi", "1", "--sigma-x", "1", "--out", dir.to_str().unwrap()]);
    let rows = cool_rows(&dir);
    // closed form at χ = 1, σ_X = 1, σ_P = 0: A = 1, 1 + 2n = √(1 · (1 + 3)) = 2
    assert_eq!(rows[0][4], 0.5);
    assert!((rows[0][3] - 0.5).abs() < 5e-3);

    // occupation does not depend on the outcomes
    let dir = root.path().join("outcomes");
    ok(
        root.path(),
        &["cool", "--nbar", "1e4", "--chi", "1", "--outcomes", "0.3,-0.4", "--out", dir.to_str().unwrap()],
    );
    assert_eq!(cool_rows(&dir)[0][3], cool_rows(&root.path().join("one"))[0][3]);
    let out = qsr(root.path(), &["cool", "--nbar", "1e4", "--chi", "1", "--outcomes", "0.3"]);
    assert_eq!(out.status.code(), Some(2));
}

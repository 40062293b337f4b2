//! The runner and binary end to end on small files.

use std::path::{Path, PathBuf};
use std::process::Command;

use proptest::prelude::*;
use tenfill::{generate_synthetic, sample_mask, CooObservations, SolveReport};
use tenfill_cli::io::{format_aggregation, format_coo, format_matrix, format_tensor, parse_coo_file};
use tenfill_cli::{run, ExperimentConfig};

const BIN: &str = env!("CARGO_BIN_EXE_tenfill");

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

/// Writes a small synthetic problem as files and returns a `complete`
/// config referring to them.
fn complete_setup(dir: &Path) -> PathBuf {
    let inst = generate_synthetic(3, 16, 4, 5).unwrap();
    let obs = sample_mask(&inst.truth, 0.2, 6).unwrap();
    write(dir, "obs.txt", &format_coo(&obs));
    write(dir, "truth.txt", &format_tensor(&inst.truth));
    write(dir, "c1.txt", &format_tensor(&inst.c1));
    write(dir, "c2.txt", &format_tensor(&inst.c2));
    write(dir, "p2.txt", &format_aggregation(&inst.p2));
    write(
        dir,
        "run.cfg",
        "# small completion\nmode = complete\noutput = out\nobservations = obs.txt\ntruth = truth.txt\n\
         coarse1.tensor = c1.txt\ncoarse1.size = 4\ncoarse2.tensor = c2.txt\ncoarse2.aggregation = p2.txt\n\
         rank = 3\nfine_level_iters = 40\ncoarse_level_iters = 5\nmin_mode_size = 8\nbaseline.cpc_als = true\n\
         baseline.oracle_cpd = true\n",
    )
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn coo_files_round_trip(
        shape in prop::array::uniform3(1usize..6),
        raw in prop::collection::vec((0usize..6, 0usize..6, 0usize..6, -1e6f64..1e6), 0..40),
    ) {
        let mut entries: Vec<([usize; 3], f64)> = raw
            .into_iter()
            .map(|(i, j, k, v)| ([i % shape[0], j % shape[1], k % shape[2]], v))
            .collect();
        entries.sort_by_key(|e| e.0);
        entries.dedup_by_key(|e| e.0);
        let obs = CooObservations::new(shape, entries).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "o.txt", &format_coo(&obs));
        prop_assert_eq!(parse_coo_file(&p).unwrap(), obs);
    }
}

#[test]
fn complete_mode_writes_parsable_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = complete_setup(dir.path());
    let inputs: Vec<(PathBuf, String)> = ["obs.txt", "truth.txt", "c1.txt", "c2.txt", "p2.txt", "run.cfg"]
        .iter()
        .map(|n| (dir.path().join(n), read(&dir.path().join(n))))
        .collect();
    let cfg = ExperimentConfig::from_file(&cfg_path).unwrap();
    let summary = run(&cfg).unwrap();
    let out = dir.path().join("out");
    let report = SolveReport::from_csv(&read(&out.join("mtc.csv"))).unwrap();
    assert_eq!(report.to_csv(), read(&out.join("mtc.csv")));
    assert!(read(&out.join("mtc.csv")).starts_with(SolveReport::HEADER));
    assert_eq!(read(&out.join("summary.csv")), summary.to_csv());
    let mtc = summary.get("mtc").unwrap();
    assert_eq!(report.last().unwrap().pof, Some(mtc));
    assert!(mtc > 0.9, "{mtc}");
    assert!(summary.get("oracle_cpd").unwrap() > 0.95, "{summary:?}");
    assert!(summary.get("cpc_als").is_some());
    for name in ["U", "V", "W", "Q1", "Q2"] {
        assert!(out.join("factors").join(format!("{name}.txt")).exists(), "{name}");
    }
    for (p, text) in inputs {
        assert_eq!(read(&p), text, "{} changed", p.display());
    }

    // The stored factors score the same under eval.
    write(
        dir.path(),
        "eval.cfg",
        "mode = eval\noutput = ev\ntruth = truth.txt\nfactors.u = out/factors/U.txt\n\
         factors.v = out/factors/V.txt\nfactors.w = out/factors/W.txt\n",
    );
    let ev = run(&ExperimentConfig::from_file(&dir.path().join("eval.cfg")).unwrap()).unwrap();
    assert!((ev.get("eval").unwrap() - mtc).abs() < 1e-12);
}

#[test]
fn binary_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = complete_setup(dir.path());
    let out = dir.path().join("out");
    let mut files = Vec::new();
    for _ in 0..2 {
        let status = Command::new(BIN)
            .arg("--config")
            .arg(&cfg_path)
            .arg("--quiet")
            .output()
            .unwrap();
        assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
        assert!(status.stdout.is_empty());
        files.push((
            read(&out.join("mtc.csv")),
            read(&out.join("summary.csv")),
            read(&out.join("factors/U.txt")),
        ));
    }
    assert_eq!(files[0], files[1]);

    let other = Command::new(BIN)
        .arg("--config")
        .arg(&cfg_path)
        .args(["--seed", "3"])
        .output()
        .unwrap();
    assert!(other.status.success());
    assert!(String::from_utf8_lossy(&other.stdout).starts_with("method,pof\nmtc,"));
    assert_ne!(read(&out.join("mtc.csv")), files[0].0);
}

#[test]
fn missing_input_fails_with_its_path() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = write(
        dir.path(),
        "run.cfg",
        "mode = complete\nobservations = nowhere/obs.txt\n",
    );
    let o = Command::new(BIN).arg("--config").arg(&cfg_path).output().unwrap();
    assert!(!o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("nowhere/obs.txt"), "{err}");

    let o = Command::new(BIN)
        .arg("--config")
        .arg(dir.path().join("absent.cfg"))
        .output()
        .unwrap();
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("absent.cfg"));

    let o = Command::new(BIN).output().unwrap();
    assert!(!o.status.success(), "--config is required");
}

#[test]
fn malformed_observations_report_file_and_line() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "obs.txt", "3 3 3\n1 1 1 1.0\n# note\n1 4 1 2.0\n");
    let cfg_path = write(dir.path(), "run.cfg", "mode = complete\nobservations = obs.txt\n");
    let o = Command::new(BIN).arg("--config").arg(&cfg_path).output().unwrap();
    assert!(!o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("obs.txt:4: mode-2 index 4 out of range"), "{err}");
}

#[test]
fn forecast_mode_extrapolates_and_scores() {
    let dir = tempfile::tempdir().unwrap();
    let t_len = 30;
    let horizon = 5;
    let u = tenfill::Matrix::from_fn(4, 2, |i, r| 1.0 + (i + r) as f64 * 0.3);
    let v = tenfill::Matrix::from_fn(3, 2, |j, r| 0.5 + (j * r) as f64 * 0.2);
    let w_all = tenfill::Matrix::from_fn(t_len + horizon, 2, |t, r| 2.0 + (t as f64 * 0.2 + r as f64).sin());
    let w = tenfill::Matrix::from_fn(t_len, 2, |t, r| w_all[(t, r)]);
    let w_future = tenfill::Matrix::from_fn(horizon, 2, |t, r| w_all[(t_len + t, r)]);
    let future = tenfill::reconstruct(&u, &v, &w_future).unwrap();
    write(dir.path(), "U.txt", &format_matrix(&u));
    write(dir.path(), "V.txt", &format_matrix(&v));
    write(dir.path(), "W.txt", &format_matrix(&w));
    write(dir.path(), "future.txt", &format_tensor(&future));
    let cfg = write(
        dir.path(),
        "f.cfg",
        &format!(
            "mode = forecast\noutput = fc\nfactors.u = U.txt\nfactors.v = V.txt\nfactors.w = W.txt\n\
             horizon = {horizon}\nfuture = future.txt\ngp.length_scale = 3\n"
        ),
    );
    let summary = run(&ExperimentConfig::from_file(&cfg).unwrap()).unwrap();
    let predicted = tenfill_cli::io::parse_matrix_file(&dir.path().join("fc/w_future.txt")).unwrap();
    assert_eq!(predicted.shape(), (horizon, 2));
    assert!(summary.get("daily").unwrap() > 0.8, "{summary:?}");
    assert!(summary.get("cumulative").unwrap() > 0.8, "{summary:?}");
}

#[test]
fn synth_mode_scores_against_the_generated_truth() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "s.cfg",
        "mode = synth\nsynth.size = 20\nsynth.coarse_size = 4\nsynth.fraction = 0.2\nrank = 3\n\
         fine_level_iters = 40\nmin_mode_size = 10\n",
    );
    let summary = run(&ExperimentConfig::from_file(&cfg).unwrap()).unwrap();
    assert!(summary.get("mtc").unwrap() > 0.95, "{summary:?}");
}

//! Acceptance gate for the command-line pipeline: the
//! simulate -> fit -> effect round trip completes cleanly and re-running
//! with the same seed reproduces the artifacts byte for byte (the
//! diagnostics record is compared with its wall-clock field excluded, since
//! elapsed time is the one quantity a rerun cannot reproduce).
//!
//! Run with `--nocapture` alongside the library gate:
//!
//! ```text
//! cargo test -p ordqr-cli --test acceptance_cli -- --nocapture
//! ```

use std::path::Path;
use std::process::{Command, Output};

fn ordqr(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ordqr"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary should spawn")
}

fn assert_ok(output: &Output) {
    assert_eq!(
        output.status.code(),
        Some(0),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
}

fn diagnostics_without_walltime(path: &Path) -> serde_json::Value {
    let mut v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    v.as_object_mut().unwrap().remove("wall_time_seconds");
    v
}

#[test]
fn criterion_8_cli_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    assert_ok(&ordqr(
        &["simulate", "--study", "2", "--n", "300", "--seed", "31", "--out", "study2.csv"],
        dir.path(),
    ));

    let fit_args = |out: &str| {
        vec![
            "fit".to_string(),
            "--data".into(),
            "study2.csv".into(),
            "--model".into(),
            "or2".into(),
            "--no-intercept".into(),
            "--cutpoints".into(),
            "0,4".into(),
            "--quantiles".into(),
            "0.25,0.5,0.75".into(),
            "--iterations".into(),
            "4000".into(),
            "--burnin".into(),
            "1000".into(),
            "--seed".into(),
            "17".into(),
            "--out".into(),
            out.into(),
            "--keep-draws".into(),
        ]
    };
    let args: Vec<String> = fit_args("run1");
    let arg_refs: Vec<&str> = args.iter().map(String::as_str).collect();
    assert_ok(&ordqr(&arg_refs, dir.path()));

    assert_ok(&ordqr(
        &["effect", "--fit", "run1", "--covariate", "x2", "--delta", "1.0", "--out", "run1/effects.csv"],
        dir.path(),
    ));

    // second identical invocation
    let args: Vec<String> = fit_args("run2");
    let arg_refs: Vec<&str> = args.iter().map(String::as_str).collect();
    assert_ok(&ordqr(&arg_refs, dir.path()));
    assert_ok(&ordqr(
        &["effect", "--fit", "run2", "--covariate", "x2", "--delta", "1.0", "--out", "run2/effects.csv"],
        dir.path(),
    ));

    // every artifact byte-identical across the reruns
    for p in ["p0.25", "p0.5", "p0.75"] {
        for file in ["summary.csv", "draws.csv"] {
            let a = std::fs::read(dir.path().join("run1").join(p).join(file)).unwrap();
            let b = std::fs::read(dir.path().join("run2").join(p).join(file)).unwrap();
            assert_eq!(a, b, "{p}/{file} differs between reruns");
        }
        let a = diagnostics_without_walltime(&dir.path().join("run1").join(p).join("diagnostics.json"));
        let b = diagnostics_without_walltime(&dir.path().join("run2").join(p).join("diagnostics.json"));
        assert_eq!(a, b, "{p}/diagnostics.json differs between reruns");
    }
    for file in ["dic_comparison.csv", "effects.csv"] {
        let a = std::fs::read(dir.path().join("run1").join(file)).unwrap();
        let b = std::fs::read(dir.path().join("run2").join(file)).unwrap();
        assert_eq!(a, b, "{file} differs between reruns");
    }

    // and the full pipeline also runs for the four-category design
    assert_ok(&ordqr(
        &["simulate", "--study", "1", "--n", "300", "--seed", "32", "--out", "study1.csv"],
        dir.path(),
    ));
    assert_ok(&ordqr(
        &[
            "fit", "--data", "study1.csv", "--model", "or1", "--no-intercept", "--quantiles", "0.5",
            "--iterations", "4000", "--burnin", "1000", "--seed", "18", "--out", "run3", "--keep-draws",
        ],
        dir.path(),
    ));
    assert_ok(&ordqr(
        &["effect", "--fit", "run3", "--covariate", "x2", "--delta", "0.5"],
        dir.path(),
    ));

    println!("acceptance criterion 8 (command-line round trip): PASS");
}

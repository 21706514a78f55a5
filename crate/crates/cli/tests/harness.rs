//! End-to-end harness checks: weight-file layout, report determinism, and
//! command dispatch on small configurations.

use shadownet_cli::config::{parse_config, CliOverrides, CommandName, CommandParams};
use shadownet_cli::weights::{file_size, load_weights, save_weights};
use shadownet_cli::{run_command, CliError};
use shadownet_core::linalg::Matrix;
use shadownet_core::rng::{gaussian_matrix, RngSeed};
use shadownet_core::Error;

fn small_config(command: CommandName, params_json: &str, out: &std::path::Path) -> shadownet_cli::RunConfig {
    let json = format!(r#"{{"seed": 11, "params": {params_json}}}"#);
    let overrides = CliOverrides {
        out: Some(out.to_path_buf()),
        ..CliOverrides::default()
    };
    parse_config(command, &json, &overrides).unwrap()
}

#[test]
fn weights_round_trip_bit_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("weights.bin");
    let matrices = vec![
        gaussian_matrix(5, 7, RngSeed::new(1)),
        gaussian_matrix(1, 9, RngSeed::new(2)), // a bias row
    ];
    save_weights(&matrices, &path).unwrap();
    let loaded = load_weights(&path).unwrap();
    assert_eq!(matrices.len(), loaded.len());
    for (a, b) in matrices.iter().zip(&loaded) {
        assert_eq!(a.rows(), b.rows());
        assert_eq!(a.cols(), b.cols());
        assert_eq!(a.data(), b.data());
    }
}

#[test]
fn weights_file_size_matches_layout() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("weights.bin");
    let matrices = vec![gaussian_matrix(3, 4, RngSeed::new(3)), Matrix::identity(6)];
    save_weights(&matrices, &path).unwrap();
    let expected = file_size(&[(3, 4), (6, 6)]);
    assert_eq!(std::fs::metadata(&path).unwrap().len(), expected);
    assert_eq!(expected, 12 + (16 + 8 * 12) + (16 + 8 * 36));
}

#[test]
fn corrupted_magic_is_rejected_with_offset() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("weights.bin");
    save_weights(&[Matrix::identity(2)], &path).unwrap();
    let mut bytes = std::fs::read(&path).unwrap();
    bytes[3] = b'X'; // "SHDW" -> "SHDX"
    std::fs::write(&path, bytes).unwrap();
    match load_weights(&path).unwrap_err() {
        CliError::Core(Error::Format { offset, reason }) => {
            assert_eq!(offset, 0);
            assert!(reason.contains("magic"));
        }
        other => panic!("unexpected error {other:?}"),
    }
}

#[test]
fn truncated_weights_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("weights.bin");
    save_weights(&[Matrix::identity(4)], &path).unwrap();
    let bytes = std::fs::read(&path).unwrap();
    std::fs::write(&path, &bytes[..bytes.len() - 5]).unwrap();
    assert!(matches!(
        load_weights(&path).unwrap_err(),
        CliError::Core(Error::Format { .. })
    ));
}

#[test]
fn reports_are_deterministic_modulo_duration() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(
        CommandName::Invert,
        r#"{"k": 4, "m": 32, "n": 256, "t": 64, "trials": 40}"#,
        &dir.path().join("a"),
    );
    let mut first = run_command(&cfg).unwrap();
    let mut second = run_command(&cfg).unwrap();
    first.duration_secs = 0.0;
    second.duration_secs = 0.0;
    let a = serde_json::to_string(&first).unwrap();
    let b = serde_json::to_string(&second).unwrap();
    assert_eq!(a, b);
}

#[test]
fn gen_writes_weights_and_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("gen");
    let cfg = small_config(
        CommandName::Gen,
        r#"{"widths": [64, 16], "top_sparsity": 2, "count": 3}"#,
        &out,
    );
    let report = run_command(&cfg).unwrap();
    assert!(out.join("report.json").exists());
    assert!(out.join("samples.csv").exists());
    assert!(out.join("weights.bin").exists());
    let loaded = load_weights(&out.join("weights.bin")).unwrap();
    assert_eq!(loaded.len(), 1);
    assert_eq!((loaded[0].rows(), loaded[0].cols()), (64, 16));
    assert!(report.summary.contains_key("widths"));
}

#[test]
fn report_json_is_parseable_by_the_config_reader() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("scaling");
    let cfg = small_config(
        CommandName::Scaling,
        r#"{"k": 4, "m": 32, "n": 256, "t_values": [16, 32, 64], "trials_per_t": 20}"#,
        &out,
    );
    run_command(&cfg).unwrap();
    let text = std::fs::read_to_string(out.join("report.json")).unwrap();
    // The persisted config block round-trips through the same parser.
    let value: serde_json::Value = serde_json::from_str(&text).unwrap();
    let config_block = serde_json::to_string(&value["config"]).unwrap();
    let again = parse_config(CommandName::Scaling, &config_block, &CliOverrides::default()).unwrap();
    assert_eq!(again.seed, cfg.seed);
    match again.params {
        CommandParams::Scaling(p) => assert_eq!(p.t_values, vec![16, 32, 64]),
        other => panic!("wrong params {other:?}"),
    }

    // points.csv has the documented columns.
    let points = std::fs::read_to_string(out.join("points.csv")).unwrap();
    assert!(points.starts_with("t,mean_error,std_error"));
    assert_eq!(points.lines().count(), 4);
}

#[test]
fn scaling_check_passes_on_small_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(
        CommandName::Scaling,
        r#"{"k": 8, "m": 64, "n": 512, "t_values": [32, 64, 128, 256], "trials_per_t": 60}"#,
        &dir.path().join("s"),
    );
    let report = run_command(&cfg).unwrap();
    assert!(report.first_failed_criterion().is_none(), "{:?}", report.checks);
}

#[test]
fn twolayer_emits_warning_outside_window() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(
        CommandName::Twolayer,
        r#"{"q": 4, "k_values": [24, 48, 96], "t_factor": 4, "p": 16, "m": 128, "n": 512, "trials_per_k": 30}"#,
        &dir.path().join("t"),
    );
    let report = run_command(&cfg).unwrap();
    assert!(!report.warnings.is_empty());
}

#[test]
fn train_on_blobs_fills_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("train");
    let cfg = small_config(
        CommandName::Train,
        r#"{"dataset": {"blobs": {"n_per_class": 30, "n_classes": 3, "dim": 8, "spread": 0.15}},
            "hidden1": 32, "hidden2": 32, "epochs": 3}"#,
        &out,
    );
    let report = run_command(&cfg).unwrap();
    let metrics = std::fs::read_to_string(out.join("metrics.csv")).unwrap();
    assert!(metrics.starts_with("epoch,train_loss,val_error,synth_error,agreement"));
    assert_eq!(metrics.lines().count(), 1 + 4); // header + epoch 0..=3
    assert!(report.summary.contains_key("final_val_error"));
}

#[test]
fn diag_reads_back_saved_weights() {
    let dir = tempfile::tempdir().unwrap();
    let weights_path = dir.path().join("w.bin");
    let bias = Matrix::from_vec(1, 8, vec![1.0, 1.05, 0.95, 1.0, 1.02, 0.98, 1.0, 1.01]).unwrap();
    save_weights(&[gaussian_matrix(64, 64, RngSeed::new(5)), bias], &weights_path).unwrap();
    let out = dir.path().join("diag");
    let params = format!(
        r#"{{"input": {:?}, "bins": 10}}"#,
        weights_path.to_str().unwrap()
    );
    let cfg = small_config(CommandName::Diag, &params, &out);
    let report = run_command(&cfg).unwrap();
    assert!(report.summary.contains_key("matrix_0_ks"));
    assert!(out.join("spectrum.csv").exists());
    assert!(out.join("histogram.csv").exists());
}

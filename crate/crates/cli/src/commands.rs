//! Command dispatch: every command is a deterministic function of
//! (config, seed) that fills a [`Report`]. With `--check` set, failed
//! acceptance rows map to nonzero exit codes (the criterion number).

use std::fs;
use std::path::Path;
use std::time::Instant;

use serde_json::json;
use shadownet_core::checks::{
    paired_dropout_experiment, run_gain_checks, run_regression_suite, scaling_experiment,
    suite_seed, support_recovery_experiment, two_layer_experiment, TwoLayerConfig,
};
use shadownet_core::diagnostics::{
    bias_uniformity, histogram, singular_spectrum, weight_moments, UNIFORM_LIKE_RATIO,
};
use shadownet_core::inference::{calibrate_bias, evaluation_seed, recover_top_support};
use shadownet_core::linalg::Matrix;
use shadownet_core::model::{
    generate_deep, sample_hidden, HiddenSpec, ShadowNet, ValueMode,
};
use shadownet_core::rng::{derive_seed, gaussian_matrix, Rng, RngSeed};
use shadownet_core::stats::fit_line;
use shadownet_core::train::{
    cross_entropy, evaluate, gen_blobs, load_csv, load_idx, mlp_backward, mlp_forward,
    train_epoch, Dataset, MlpParams, TrainConfig,
};
use shadownet_core::Error;

use crate::config::{
    CommandParams, DatasetSpec, DiagParams, GenParams, InvertParams, RunConfig, ScalingParams,
    SupportParams, TrainParams, TwolayerParams,
};
use crate::error::{CliError, Result};
use crate::report::{write_report, Report, Table};
use crate::weights::{load_weights, save_weights};

/// Runs the configured command and persists its report; the report is a
/// pure function of (config, seed) apart from the duration field.
pub fn run_command(cfg: &RunConfig) -> Result<Report> {
    let started = Instant::now();
    let mut report = Report::new(cfg.clone());
    let seed = RngSeed::new(cfg.seed);
    match &cfg.params {
        CommandParams::Gen(p) => cmd_gen(p, seed, &cfg.out, &mut report)?,
        CommandParams::Invert(p) => cmd_invert(p, seed, &mut report)?,
        CommandParams::Scaling(p) => cmd_scaling(p, seed, &mut report)?,
        CommandParams::Lemmas(_) => cmd_lemmas(&mut report)?,
        CommandParams::Diag(p) => cmd_diag(p, seed, &mut report)?,
        CommandParams::Support(p) => cmd_support(p, seed, &mut report)?,
        CommandParams::Twolayer(p) => cmd_twolayer(p, seed, &mut report)?,
        CommandParams::Train(p) => cmd_train(p, seed, &mut report)?,
    }
    report.duration_secs = started.elapsed().as_secs_f64();
    write_report(&report, &cfg.out)?;
    Ok(report)
}

fn cmd_gen(p: &GenParams, seed: RngSeed, out: &Path, report: &mut Report) -> Result<()> {
    let wrap = CliError::in_command("gen");
    let sparsities = p
        .sparsities
        .clone()
        .unwrap_or_else(|| ShadowNet::default_sparsities(&p.widths, p.top_sparsity));
    let net = ShadowNet::random(&p.widths, &sparsities, derive_seed(seed, 0)).map_err(wrap)?;
    let top_dim = *p.widths.last().unwrap();
    let hidden = HiddenSpec {
        dim: top_dim,
        sparsity: p.top_sparsity,
        value_mode: p.value_mode,
        inf_cap_const: 2.0,
    };

    let mut samples = Table::new("samples", &["sample", "coordinate", "value"]);
    let mut supports = Table::new("top_supports", &["sample", "coordinate"]);
    for i in 0..p.count {
        let trial = derive_seed(derive_seed(seed, 1), i as u64);
        let h_top = sample_hidden(&hidden, derive_seed(trial, 0)).map_err(
            CliError::in_command("gen"),
        )?;
        let layers = generate_deep(&net, &h_top, p.dropout_mode, derive_seed(trial, 1))
            .map_err(CliError::in_command("gen"))?;
        let x = layers.last().unwrap();
        for (j, &v) in x.iter().enumerate() {
            if v != 0.0 {
                samples.push(vec![i as f64, j as f64, v]);
            }
        }
        for &s in h_top.support() {
            supports.push(vec![i as f64, s as f64]);
        }
    }
    let weights_path = out.join("weights.bin");
    fs::create_dir_all(out)?;
    save_weights(net.weights(), &weights_path)?;

    report.put("widths", json!(p.widths));
    report.put("sparsities", json!(sparsities));
    report.put("count", p.count);
    report.put("weights_file", weights_path.display().to_string());
    report.tables.push(samples);
    report.tables.push(supports);
    Ok(())
}

fn cmd_invert(p: &InvertParams, seed: RngSeed, report: &mut Report) -> Result<()> {
    let cmp = paired_dropout_experiment(p.k, p.m, p.n, p.t, p.trials, seed)
        .map_err(CliError::in_command("invert"))?;
    let ratio = cmp.median_dropped / cmp.median_plain;
    report.put("median_plain", cmp.median_plain);
    report.put("median_dropped", cmp.median_dropped);
    report.put("ratio", ratio);
    report.check(
        4,
        "half-dropped median within 2x of plain",
        ratio <= 2.0,
        format!("ratio {ratio:.3}"),
    );
    Ok(())
}

fn cmd_scaling(p: &ScalingParams, seed: RngSeed, report: &mut Report) -> Result<()> {
    let res = scaling_experiment(p.k, &p.t_values, p.m, p.n, p.trials_per_t, seed)
        .map_err(CliError::in_command("scaling"))?;
    let mut points = Table::new("points", &["t", "mean_error", "std_error"]);
    for pt in &res.points {
        points.push(vec![pt.t as f64, pt.mean_error, pt.std_error]);
    }
    report.tables.push(points);
    report.put("slope", res.fit.slope);
    report.put("intercept", res.fit.intercept);
    report.put("r_squared", res.fit.r_squared);
    report.check(
        3,
        "log-log slope in [-1.25, -0.75] with r^2 >= 0.95",
        (-1.25..=-0.75).contains(&res.fit.slope) && res.fit.r_squared >= 0.95,
        format!("slope {:.3}, r^2 {:.4}", res.fit.slope, res.fit.r_squared),
    );
    Ok(())
}

fn cmd_lemmas(report: &mut Report) -> Result<()> {
    // The statistical suite runs at its committed fixture seed so the
    // frozen bounds stay meaningful.
    let mut rows = run_gain_checks(suite_seed());
    rows.extend(run_regression_suite(suite_seed()).map_err(CliError::in_command("lemmas"))?);
    let mut table = Table::new("checks", &["criterion", "value", "bound", "passed"]);
    for row in &rows {
        table.push(vec![
            row.criterion as f64,
            row.value,
            row.bound,
            row.passed as u8 as f64,
        ]);
        report.check(row.criterion, &row.name, row.passed, row.detail.clone());
    }
    report.put("n_checks", rows.len());
    report.put(
        "n_failed",
        rows.iter().filter(|r| !r.passed).count(),
    );
    report.tables.push(table);
    Ok(())
}

fn load_matrix_csv(path: &Path) -> Result<Matrix> {
    let text = fs::read_to_string(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut offset = 0u64;
    for line in text.lines() {
        let line_start = offset;
        offset += line.len() as u64 + 1;
        if line.trim().is_empty() {
            continue;
        }
        let row: std::result::Result<Vec<f64>, _> =
            line.split(',').map(|f| f.trim().parse::<f64>()).collect();
        let row = row.map_err(|_| Error::Format {
            offset: line_start,
            reason: "bad numeric field".into(),
        })?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(Error::Format {
                    offset: line_start,
                    reason: format!("row has {} fields, expected {}", row.len(), first.len()),
                }
                .into());
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Format {
            offset: 0,
            reason: "empty matrix".into(),
        }
        .into());
    }
    let (r, c) = (rows.len(), rows[0].len());
    Ok(Matrix::from_vec(r, c, rows.concat())?)
}

fn diag_one_matrix(
    idx: usize,
    m: &Matrix,
    bins: usize,
    moments_table: &mut Table,
    spectrum_table: &mut Table,
    report: &mut Report,
) -> Result<()> {
    if m.rows() == 1 || m.cols() == 1 {
        let ratio = bias_uniformity(m.data()).map_err(CliError::in_command("diag"))?;
        report.put(
            &format!("bias_{idx}_uniformity"),
            if ratio.is_finite() { json!(ratio) } else { json!("inf") },
        );
        report.put(
            &format!("bias_{idx}_uniform_like"),
            ratio >= UNIFORM_LIKE_RATIO,
        );
        return Ok(());
    }
    let mom = weight_moments(m).map_err(CliError::in_command("diag"))?;
    moments_table.push(vec![
        idx as f64,
        mom.mean,
        mom.variance,
        mom.skewness,
        mom.excess_kurtosis,
    ]);
    let spec = singular_spectrum(m, 1e-10).map_err(CliError::in_command("diag"))?;
    for &sv in &spec.singular_values_scaled {
        spectrum_table.push(vec![idx as f64, sv]);
    }
    if let Some(ks) = spec.ks_distance {
        report.put(&format!("matrix_{idx}_ks"), ks);
    }
    if idx == 0 {
        let hist = histogram(m.data(), bins).map_err(CliError::in_command("diag"))?;
        let mut table = Table::new("histogram", &["bin_left", "bin_right", "count"]);
        for (i, &count) in hist.counts.iter().enumerate() {
            table.push(vec![hist.bin_edges[i], hist.bin_edges[i + 1], count as f64]);
        }
        report.tables.push(table);
    }
    Ok(())
}

fn cmd_diag(p: &DiagParams, seed: RngSeed, report: &mut Report) -> Result<()> {
    let matrices: Vec<Matrix> = if let Some(path) = &p.input {
        load_weights(path)?
    } else if let Some(path) = &p.csv_input {
        vec![load_matrix_csv(path)?]
    } else {
        vec![gaussian_matrix(p.rows, p.cols, derive_seed(seed, 0))]
    };
    let mut moments_table = Table::new(
        "moments",
        &["matrix", "mean", "variance", "skewness", "excess_kurtosis"],
    );
    let mut spectrum_table = Table::new("spectrum", &["matrix", "scaled_singular_value"]);
    for (idx, m) in matrices.iter().enumerate() {
        diag_one_matrix(idx, m, p.bins, &mut moments_table, &mut spectrum_table, report)?;
    }
    report.tables.push(moments_table);
    report.tables.push(spectrum_table);

    // Calibration triple: a fresh Gaussian matrix must look random-like,
    // the identity must not, and a near-constant offset vector must flag
    // as uniform.
    let w = gaussian_matrix(512, 512, derive_seed(seed, 100));
    let gauss = singular_spectrum(&w, 1e-10).map_err(CliError::in_command("diag"))?;
    let gauss_ks = gauss.ks_distance.unwrap_or(1.0);
    let kurt = weight_moments(&w)
        .map_err(CliError::in_command("diag"))?
        .excess_kurtosis;
    let id_ks = singular_spectrum(&Matrix::identity(512), 1e-10)
        .map_err(CliError::in_command("diag"))?
        .ks_distance
        .unwrap_or(0.0);
    let mut rng = Rng::new(derive_seed(seed, 101));
    let bias: Vec<f64> = (0..512).map(|_| 1.0 + 0.2 * (rng.uniform() - 0.5)).collect();
    let ratio = bias_uniformity(&bias).map_err(CliError::in_command("diag"))?;
    report.check(
        7,
        "gaussian KS <= 0.05 and |kurtosis| <= 0.05; identity KS >= 0.5; noisy-ones ratio >= 5",
        gauss_ks <= 0.05 && kurt.abs() <= 0.05 && id_ks >= 0.5 && ratio >= UNIFORM_LIKE_RATIO,
        format!(
            "gaussian KS {gauss_ks:.4}, kurtosis {kurt:.4}, identity KS {id_ks:.3}, ratio {ratio:.1}"
        ),
    );
    Ok(())
}

fn cmd_support(p: &SupportParams, seed: RngSeed, report: &mut Report) -> Result<()> {
    let res = support_recovery_experiment(
        &p.widths,
        p.top_sparsity,
        p.trials,
        seed,
        p.resample_net_every,
    )
    .map_err(CliError::in_command("support"))?;
    report.put("successes", res.successes);
    report.put("trials", res.n_trials);
    report.put("rate", res.rate());
    report.put("calibrated_c", res.calibrated_c);

    // Sparsity sweep on the same net: recovery does not get easier as the
    // top grows denser.
    let net = ShadowNet::random(
        &p.widths,
        &ShadowNet::default_sparsities(&p.widths, p.top_sparsity),
        derive_seed(derive_seed(seed, 3), 0),
    )
    .map_err(CliError::in_command("support"))?;
    let mut sweep = Table::new("sparsity_sweep", &["top_sparsity", "rate"]);
    let top_dim = *p.widths.last().unwrap();
    for factor in [1usize, 4, 16] {
        let k = (p.top_sparsity * factor).min(top_dim / 2);
        let hidden = HiddenSpec {
            dim: top_dim,
            sparsity: k,
            value_mode: ValueMode::Binary,
            inf_cap_const: 2.0,
        };
        let trials = 100usize;
        let mut hits = 0usize;
        for i in 0..trials {
            hits += recover_top_support(
                &net,
                &hidden,
                res.calibrated_c,
                shadownet_core::model::DropoutMode::FixedSubset,
                derive_seed(derive_seed(evaluation_seed(seed), 7777), i as u64),
            )
            .map_err(CliError::in_command("support"))? as usize;
        }
        sweep.push(vec![k as f64, hits as f64 / trials as f64]);
    }
    report.tables.push(sweep);

    report.check(
        1,
        "exact top-support recovery rate >= 99%",
        res.rate() >= 0.99,
        format!("{}/{}", res.successes, res.n_trials),
    );
    let _ = calibrate_bias; // referenced for docs; calibration runs inside the experiment
    Ok(())
}

fn cmd_twolayer(p: &TwolayerParams, seed: RngSeed, report: &mut Report) -> Result<()> {
    let mut points = Table::new("points", &["k", "mse", "std_error"]);
    let mut log_points = Vec::new();
    let mut estimates = Vec::new();
    for (i, &k) in p.k_values.iter().enumerate() {
        let cfg = TwoLayerConfig {
            q: p.q,
            k,
            t: p.t_factor * k,
            p: p.p,
            m: p.m,
            n: p.n,
        };
        report.warnings.extend(cfg.warnings());
        let est = two_layer_experiment(&cfg, p.trials_per_k, derive_seed(seed, i as u64))
            .map_err(CliError::in_command("twolayer"))?;
        points.push(vec![k as f64, est.mean, est.std_error]);
        log_points.push(((k as f64).ln(), est.mean.ln()));
        estimates.push(est);
    }
    report.tables.push(points);

    let mut decreasing = true;
    for pair in estimates.windows(2) {
        decreasing &= pair[1].mean < pair[0].mean + 3.0 * pair[0].combined_std_error(&pair[1]);
    }
    let fit = fit_line(&log_points).map_err(CliError::in_command("twolayer"))?;
    report.put("slope", fit.slope);
    report.put("r_squared", fit.r_squared);
    report.check(
        5,
        "error strictly decreasing in k, slope in [-1.4, -0.6]",
        decreasing && (-1.4..=-0.6).contains(&fit.slope),
        format!("slope {:.3}", fit.slope),
    );
    Ok(())
}

fn load_dataset(spec: &DatasetSpec, seed: RngSeed) -> Result<Dataset> {
    Ok(match spec {
        DatasetSpec::Blobs {
            n_per_class,
            n_classes,
            dim,
            spread,
        } => gen_blobs(*n_per_class, *n_classes, *dim, *spread, seed),
        DatasetSpec::Csv { path } => load_csv(path).map_err(CliError::in_command("train"))?,
        DatasetSpec::Idx { images, labels } => {
            load_idx(images, labels).map_err(CliError::in_command("train"))?
        }
    })
}

/// Quick gradient check on a small net: analytic vs central differences at
/// a kink-free point. Returns the worst relative deviation.
fn gradient_check(seed: RngSeed) -> Result<f64> {
    let params = MlpParams::random(6, 10, 8, 3, seed);
    let x: Vec<f64> = (0..6).map(|i| 0.4 + 0.09 * i as f64).collect();
    let (grad, _) = mlp_backward(&params, &x, 2, None).map_err(CliError::in_command("train"))?;
    let eps = 1e-5;
    let mut worst: f64 = 0.0;
    for (which, g) in [(0usize, &grad.w1), (1, &grad.w2), (2, &grad.w3)] {
        let len = g.data().len();
        for idx in (0..len).step_by((len / 6).max(1)) {
            let mut plus = params.clone();
            let mut minus = params.clone();
            let (mp, mm) = match which {
                0 => (&mut plus.w1, &mut minus.w1),
                1 => (&mut plus.w2, &mut minus.w2),
                _ => (&mut plus.w3, &mut minus.w3),
            };
            mp.data_mut()[idx] += eps;
            mm.data_mut()[idx] -= eps;
            let lp = cross_entropy(
                &mlp_forward(&plus, &x, None)
                    .map_err(CliError::in_command("train"))?
                    .logits,
                2,
            );
            let lm = cross_entropy(
                &mlp_forward(&minus, &x, None)
                    .map_err(CliError::in_command("train"))?
                    .logits,
                2,
            );
            let fd = (lp - lm) / (2.0 * eps);
            let an = g.data()[idx];
            worst = worst.max((fd - an).abs() / an.abs().max(fd.abs()).max(1e-8));
        }
    }
    Ok(worst)
}

fn cmd_train(p: &TrainParams, seed: RngSeed, report: &mut Report) -> Result<()> {
    let data = load_dataset(&p.dataset, derive_seed(seed, 0))?;
    let (train, val) = data.split(1.0 - p.val_fraction);
    if train.is_empty() || val.is_empty() {
        return Err(CliError::Config(
            "dataset too small for the requested validation split".into(),
        ));
    }
    let n_in = train.inputs[0].len();
    let mut params = MlpParams::random(
        n_in,
        p.hidden1,
        p.hidden2,
        data.n_classes,
        derive_seed(seed, 1),
    );
    let cfg = TrainConfig {
        learning_rate: p.learning_rate,
        shadow_weight: p.shadow_weight,
        reg_lambdas: p.reg_lambdas,
        dropout_ratio: p.dropout_ratio,
        batch_size: p.batch_size,
        epochs: p.epochs,
        seed: derive_seed(seed, 2).stream,
        synth: p.synth_options(),
    };

    let mut metrics = Table::new(
        "metrics",
        &["epoch", "train_loss", "val_error", "synth_error", "agreement"],
    );
    let epoch0 = evaluate(&params, &val, &cfg.synth, derive_seed(seed, 3))
        .map_err(CliError::in_command("train"))?;
    metrics.push(vec![
        0.0,
        f64::NAN,
        epoch0.val_error,
        epoch0.synth_error,
        epoch0.agreement,
    ]);
    let mut tracks = (epoch0.synth_error - epoch0.val_error).abs() <= 0.15;
    let mut last = epoch0;
    for epoch in 0..cfg.epochs {
        last = train_epoch(&mut params, &train, &val, &cfg, epoch)
            .map_err(CliError::in_command("train"))?;
        tracks &= (last.synth_error - last.val_error).abs() <= 0.15;
        metrics.push(vec![
            (epoch + 1) as f64,
            last.train_loss,
            last.val_error,
            last.synth_error,
            last.agreement,
        ]);
    }
    report.tables.push(metrics);
    report.put("epoch0_val_error", epoch0.val_error);
    report.put("final_val_error", last.val_error);
    report.put("final_synth_error", last.synth_error);
    report.put("final_agreement", last.agreement);

    let grad_dev = gradient_check(derive_seed(seed, 4))?;
    report.put("gradient_check_rel", grad_dev);

    let chance = 1.0 / data.n_classes as f64;
    report.check(
        8,
        "gradients exact; training improves; synthetic tracks real; agreement beats chance",
        grad_dev <= 1e-4
            && last.val_error <= epoch0.val_error
            && tracks
            && last.agreement >= chance + 0.2,
        format!(
            "grad {grad_dev:.2e}, val {:.3} -> {:.3}, tracks {tracks}, agreement {:.3}",
            epoch0.val_error, last.val_error, last.agreement
        ),
    );
    Ok(())
}

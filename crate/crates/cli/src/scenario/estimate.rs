//! `estimate`: Monte Carlo MSE curves for the two estimators, or — when the
//! config names a `record` file — reconstruction of a single track into an
//! estimate-plus-diagnostics JSON.

use std::path::PathBuf;

use rayon::prelude::*;
use serde::Serialize;
use tracksim_core::estimators::{
    free_momentum_estimate, free_position_estimate, least_squares_estimate,
};
use tracksim_core::rng::stream_rng;
use tracksim_core::stats;
use tracksim_core::{classical::simulate_track, phasespace::DynamicsSpec};

use super::{RunContext, RunError, RunResult};
use crate::config::EstimatorKind;
use crate::records::{read_record_csv, write_table_csv, JsonlWriter};

#[derive(Serialize)]
struct DiagnosticsJson {
    sigma_n_min_eig: f64,
    condition: f64,
    n_used: usize,
    warnings: Vec<String>,
}

#[derive(Serialize)]
struct EstimateJson {
    estimator: &'static str,
    x: Vec<f64>,
    p: Vec<f64>,
    n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    diagnostics: Option<DiagnosticsJson>,
}

#[derive(Serialize)]
struct TrialRow {
    n: usize,
    trial: usize,
    err_sq: f64,
}

pub fn run(ctx: &RunContext) -> RunResult<Vec<PathBuf>> {
    match &ctx.config.record {
        Some(path) => run_single_record(ctx, path.clone()),
        None => run_monte_carlo(ctx),
    }
}

fn run_single_record(ctx: &RunContext, path: PathBuf) -> RunResult<Vec<PathBuf>> {
    let cfg = &ctx.config;
    let mut record = read_record_csv(&path)?;
    // the config's dynamics wins over record metadata when both are present
    if let Some(dynamics) = &cfg.dynamics {
        record.dynamics = Some(dynamics.clone());
    }
    let dynamics = record
        .dynamics
        .clone()
        .ok_or_else(|| RunError::Config("no dynamics in config or record metadata".into()))?;

    let out = match cfg.estimator {
        EstimatorKind::TwoStage => {
            let n = record.len() - 1;
            if n == 0 {
                return Err(RunError::Config("record too short for the two-stage estimator".into()));
            }
            let p = free_momentum_estimate(&record, n)?;
            let x = free_position_estimate(&record, n, cfg.window)?;
            EstimateJson {
                estimator: "two_stage",
                x: x.iter().cloned().collect(),
                p: p.iter().cloned().collect(),
                n,
                diagnostics: None,
            }
        }
        EstimatorKind::LeastSquares => {
            let pairs = record.len() / 2;
            if pairs == 0 {
                return Err(RunError::Config("record too short for the least-squares estimator".into()));
            }
            let j = dynamics.map()?;
            let (xi, diag) = least_squares_estimate(&j, &record, pairs - 1)?;
            EstimateJson {
                estimator: "least_squares",
                x: xi.x.iter().cloned().collect(),
                p: xi.p.iter().cloned().collect(),
                n: pairs - 1,
                diagnostics: Some(DiagnosticsJson {
                    sigma_n_min_eig: diag.sigma_n_min_eig,
                    condition: diag.condition,
                    n_used: diag.n_used,
                    warnings: diag.warnings,
                }),
            }
        }
    };
    let json = serde_json::to_string_pretty(&out)
        .map_err(|e| RunError::Numeric(format!("serialize estimate: {e}")))?;
    let out_path = ctx.path("estimate.json");
    std::fs::write(&out_path, &json)?;
    println!("{json}");
    Ok(vec![out_path])
}

fn run_monte_carlo(ctx: &RunContext) -> RunResult<Vec<PathBuf>> {
    let cfg = &ctx.config;
    let dynamics = cfg.dynamics.as_ref().expect("validated");
    let kernel = cfg.kernel.as_ref().expect("validated");
    let mu0 = cfg.mu0.as_ref().expect("validated");
    let d = dynamics.dim();
    let two_stage = cfg.estimator == EstimatorKind::TwoStage;
    if two_stage && !matches!(dynamics, DynamicsSpec::Free { .. }) {
        return Err(RunError::Config(
            "the two-stage estimator is defined for free dynamics".into(),
        ));
    }
    let j = dynamics.map()?;

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut trial_rows: Vec<TrialRow> = Vec::new();
    for (idx, &n) in cfg.n_list.iter().enumerate() {
        // per-trial squared errors, componentwise (x then p) plus total
        let errs: Vec<(Vec<f64>, f64)> = (0..cfg.n_trials)
            .into_par_iter()
            .map(|t| -> RunResult<(Vec<f64>, f64)> {
                let mut rng = stream_rng(cfg.master_seed.wrapping_add(idx as u64), t as u64);
                let steps = if two_stage { n } else { 2 * n + 1 };
                let (xi0, rec) = simulate_track(dynamics, mu0, kernel, steps, &mut rng)?;
                let (x_est, p_est) = if two_stage {
                    (
                        free_position_estimate(&rec, n, cfg.window)?,
                        free_momentum_estimate(&rec, n)?,
                    )
                } else {
                    let (xi, _) = least_squares_estimate(&j, &rec, n)?;
                    (xi.x, xi.p)
                };
                let mut comp = Vec::with_capacity(2 * d);
                let mut total = 0.0;
                for i in 0..d {
                    let e = (x_est[i] - xi0.x[i]).powi(2);
                    comp.push(e);
                    total += e;
                }
                for i in 0..d {
                    let e = (p_est[i] - xi0.p[i]).powi(2);
                    comp.push(e);
                    total += e;
                }
                Ok((comp, total))
            })
            .collect::<RunResult<Vec<_>>>()?;

        let mut mse = vec![0.0; 2 * d];
        let mut mse_total = 0.0;
        for (t, (comp, total)) in errs.iter().enumerate() {
            for (m, c) in mse.iter_mut().zip(comp) {
                *m += c;
            }
            mse_total += total;
            trial_rows.push(TrialRow {
                n,
                trial: t,
                err_sq: *total,
            });
        }
        for m in mse.iter_mut() {
            *m /= cfg.n_trials as f64;
        }
        mse_total /= cfg.n_trials as f64;

        let mut row = vec![n as f64, mse_total];
        row.extend(mse);
        rows.push(row);
    }

    // log-log slope of the momentum MSE (two-stage) or the total MSE;
    // rows are laid out (n, total, x_1..x_d, p_1..p_d)
    let log_n: Vec<f64> = cfg.n_list.iter().map(|&n| (n as f64).ln()).collect();
    let slope_col = if two_stage { 2 + d } else { 1 };
    let log_mse: Vec<f64> = rows.iter().map(|r| r[slope_col].ln()).collect();
    let (slope, _) = stats::linear_fit(&log_n, &log_mse);

    let mut header: Vec<String> = vec![
        if two_stage { "n" } else { "n_pairs" }.to_string(),
        "mse_total".to_string(),
    ];
    for i in 1..=d {
        header.push(format!("mse_x_{i}"));
    }
    for i in 1..=d {
        header.push(format!("mse_p_{i}"));
    }
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();

    let meta = vec![
        ("scenario".to_string(), "estimate".to_string()),
        (
            "estimator".to_string(),
            if two_stage { "two_stage" } else { "least_squares" }.to_string(),
        ),
        ("n_trials".to_string(), cfg.n_trials.to_string()),
        ("master_seed".to_string(), cfg.master_seed.to_string()),
        ("loglog_slope".to_string(), format!("{slope}")),
    ];
    let csv = ctx.path("mse.csv");
    write_table_csv(&csv, &meta, &header_refs, &rows)?;

    let mut jsonl = JsonlWriter::create(&ctx.path("trials.jsonl"))?;
    for row in &trial_rows {
        jsonl.push(row)?;
    }
    jsonl.finish()?;

    println!(
        "estimate: {} over n {:?}: log-log slope {slope:.3}",
        if two_stage { "two-stage" } else { "least-squares" },
        cfg.n_list
    );
    Ok(vec![csv])
}

//! `symmetry`: the isotropic-shell direction experiment. Across trials the
//! estimated momentum direction is uniform on the circle; within each trial
//! the track pins the direction to high accuracy — the measurement record
//! breaks the rotational symmetry of the initial state.

use std::path::PathBuf;

use nalgebra::DVector;
use rayon::prelude::*;
use tracksim_core::classical::{simulate_track, InitialMeasure};
use tracksim_core::estimators::free_momentum_estimate;
use tracksim_core::rng::stream_rng;
use tracksim_core::stats;

use super::{RunContext, RunResult};
use crate::records::write_table_csv;

pub fn run(ctx: &RunContext) -> RunResult<Vec<PathBuf>> {
    let cfg = &ctx.config;
    let dynamics = cfg.dynamics.as_ref().expect("validated");
    let kernel = cfg.kernel.as_ref().expect("validated");
    let mu0 = InitialMeasure::IsotropicShell {
        x0: DVector::zeros(2),
        speed: cfg.speed,
    };
    let n = cfg.n_steps;

    let results: Vec<(f64, f64)> = (0..cfg.n_trials)
        .into_par_iter()
        .map(|t| -> RunResult<(f64, f64)> {
            let mut rng = stream_rng(cfg.master_seed, t as u64);
            let (xi0, rec) = simulate_track(dynamics, &mu0, kernel, n, &mut rng)?;
            let p = free_momentum_estimate(&rec, n)?;
            let angle = p[1].atan2(p[0]);
            let true_angle = xi0.p[1].atan2(xi0.p[0]);
            let mut err = (angle - true_angle).abs();
            if err > std::f64::consts::PI {
                err = 2.0 * std::f64::consts::PI - err;
            }
            Ok((angle, err))
        })
        .collect::<RunResult<Vec<_>>>()?;

    let angles: Vec<f64> = results.iter().map(|r| r.0).collect();
    let kuiper = stats::kuiper_uniform(&angles);
    let within = results.iter().filter(|r| r.1 < cfg.angle_tol).count() as f64
        / cfg.n_trials.max(1) as f64;

    let rows: Vec<Vec<f64>> = results
        .iter()
        .enumerate()
        .map(|(t, (angle, err))| vec![t as f64, *angle, *err])
        .collect();
    let meta = vec![
        ("scenario".to_string(), "symmetry".to_string()),
        ("n_trials".to_string(), cfg.n_trials.to_string()),
        ("n_steps".to_string(), n.to_string()),
        ("speed".to_string(), cfg.speed.to_string()),
        ("master_seed".to_string(), cfg.master_seed.to_string()),
        ("kuiper_statistic".to_string(), format!("{}", kuiper.statistic)),
        ("kuiper_p_value".to_string(), format!("{}", kuiper.p_value)),
        ("angle_tol".to_string(), cfg.angle_tol.to_string()),
        ("fraction_within_tol".to_string(), format!("{within}")),
    ];
    let csv = ctx.path("angles.csv");
    write_table_csv(&csv, &meta, &["trial", "angle", "angular_error"], &rows)?;
    println!(
        "symmetry: Kuiper p = {:.4}; {:.1}% of trials within {} rad",
        kuiper.p_value,
        within * 100.0,
        cfg.angle_tol
    );
    Ok(vec![csv])
}

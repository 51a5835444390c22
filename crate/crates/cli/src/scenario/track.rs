//! `track`: simulate measurement records with the classical limit process or
//! one of the quantum backends.

use std::path::PathBuf;

use rayon::prelude::*;
use serde::Serialize;
use tracksim_core::classical::{simulate_track, MeasurementRecord};
use tracksim_core::quantum::{
    make_coherent, run_chain, GaussianState, Grid1d, QuantumState, WavePacketProfile,
};
use tracksim_core::rng::stream_rng;

use super::{RunContext, RunResult};
use crate::config::{dynamics_to_keys, kernel_to_keys, Backend};
use crate::records::{write_record_csv, JsonlWriter, MultiTrackWriter};

#[derive(Serialize)]
struct ClassicalTrialMeta {
    trial: usize,
    stream: u64,
    xi0_x: Vec<f64>,
    xi0_p: Vec<f64>,
}

#[derive(Serialize)]
struct QuantumTrialMeta {
    trial: usize,
    stream: u64,
    epsilon: f64,
    backend: &'static str,
    log_likelihood: f64,
}

enum TrialMeta {
    Classical(ClassicalTrialMeta),
    Quantum(QuantumTrialMeta),
}

pub fn run(ctx: &RunContext) -> RunResult<Vec<PathBuf>> {
    let cfg = &ctx.config;
    let dynamics = cfg.dynamics.as_ref().expect("validated");
    let kernel = cfg.kernel.as_ref().expect("validated");
    let n_steps = cfg.n_steps;

    let trials: Vec<(MeasurementRecord, TrialMeta)> = (0..cfg.n_trials)
        .into_par_iter()
        .map(|t| -> RunResult<(MeasurementRecord, TrialMeta)> {
            let mut rng = stream_rng(cfg.master_seed, t as u64);
            match cfg.backend {
                Backend::Classical => {
                    let mu0 = cfg.mu0.as_ref().expect("validated");
                    let (xi0, rec) = simulate_track(dynamics, mu0, kernel, n_steps, &mut rng)?;
                    Ok((
                        rec,
                        TrialMeta::Classical(ClassicalTrialMeta {
                            trial: t,
                            stream: t as u64,
                            xi0_x: xi0.x.iter().cloned().collect(),
                            xi0_p: xi0.p.iter().cloned().collect(),
                        }),
                    ))
                }
                Backend::Grid | Backend::Gaussian => {
                    let coherent = cfg.coherent.as_ref().expect("validated");
                    let epsilon = cfg.epsilon[0];
                    let (initial, backend_name) = if cfg.backend == Backend::Grid {
                        let grid = Grid1d::new(cfg.grid.x_lo, cfg.grid.x_hi, cfg.grid.n)?;
                        let state = make_coherent(
                            grid,
                            coherent.x0[0],
                            coherent.p0[0],
                            coherent.beta_exponent,
                            WavePacketProfile::Gaussian {
                                lambda: coherent.lambda,
                            },
                            epsilon,
                        )?;
                        (QuantumState::Grid(state), "grid")
                    } else {
                        let state = GaussianState::coherent(
                            &coherent.x0,
                            &coherent.p0,
                            coherent.beta_exponent,
                            coherent.lambda,
                            epsilon,
                        )?;
                        (QuantumState::Gaussian(state), "gaussian")
                    };
                    let res = run_chain(initial, dynamics, kernel, n_steps, &mut rng)?;
                    Ok((
                        res.record,
                        TrialMeta::Quantum(QuantumTrialMeta {
                            trial: t,
                            stream: t as u64,
                            epsilon,
                            backend: backend_name,
                            log_likelihood: res.log_likelihood,
                        }),
                    ))
                }
            }
        })
        .collect::<RunResult<Vec<_>>>()?;

    let dim = dynamics.dim();
    let mut meta = vec![
        ("scenario".to_string(), "track".to_string()),
        ("n_trials".to_string(), cfg.n_trials.to_string()),
        ("n_steps".to_string(), n_steps.to_string()),
        ("master_seed".to_string(), cfg.master_seed.to_string()),
    ];
    meta.extend(dynamics_to_keys(dynamics));
    let kernel_meta = kernel_to_keys(kernel);
    meta.extend(kernel_meta.iter().cloned());

    let combined = ctx.path("records.csv");
    let mut writer = MultiTrackWriter::create(&combined, dim, &meta)?;
    for (t, (rec, _)) in trials.iter().enumerate() {
        writer.push(t, rec)?;
    }
    writer.finish()?;

    let mut jsonl = JsonlWriter::create(&ctx.path("trials.jsonl"))?;
    for (rec, meta) in &trials {
        match meta {
            TrialMeta::Classical(m) => jsonl.push(m)?,
            TrialMeta::Quantum(m) => jsonl.push(m)?,
        }
        let _ = rec;
    }
    jsonl.finish()?;

    // canonical per-trial record files
    for (t, (rec, _)) in trials.iter().enumerate() {
        write_record_csv(&ctx.path(&format!("track_{t:05}.csv")), rec, &kernel_meta)?;
    }

    if trials.is_empty() {
        println!("track: wrote empty records.csv (0 trials)");
    } else {
        println!(
            "track: wrote {} trials × {} steps to {}",
            trials.len(),
            n_steps + 1,
            combined.display()
        );
    }
    Ok(vec![combined])
}

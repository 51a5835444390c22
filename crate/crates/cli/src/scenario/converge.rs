//! `converge`: ε-sweep of the energy distance between the quantum record law
//! (grid backend) and its classical limit.

use std::path::PathBuf;

use rayon::prelude::*;
use tracksim_core::classical::{simulate_track, InitialMeasure};
use tracksim_core::phasespace::PhasePoint;
use tracksim_core::quantum::{
    make_coherent, run_chain, Grid1d, QuantumState, WavePacketProfile,
};
use tracksim_core::rng::stream_rng;
use tracksim_core::stats;

use super::{RunContext, RunResult};
use crate::records::write_table_csv;

pub fn run(ctx: &RunContext) -> RunResult<Vec<PathBuf>> {
    let cfg = &ctx.config;
    let dynamics = cfg.dynamics.as_ref().expect("validated");
    let kernel = cfg.kernel.as_ref().expect("validated");
    let coherent = cfg.coherent.as_ref().expect("validated");
    let steps = cfg.n_steps;
    let dim = steps + 1;

    // classical reference: the point-mass limit of the coherent family
    let mu0 = InitialMeasure::PointMass(PhasePoint::new(
        coherent.x0.clone(),
        coherent.p0.clone(),
    )?);
    let classical: Vec<f64> = (0..cfg.classical_trials)
        .into_par_iter()
        .map(|t| -> RunResult<Vec<f64>> {
            let mut rng = stream_rng(cfg.master_seed, t as u64);
            let (_, rec) = simulate_track(dynamics, &mu0, kernel, steps, &mut rng)?;
            Ok(rec.outcomes.iter().map(|q| q[0]).collect())
        })
        .collect::<RunResult<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();

    let grid = Grid1d::new(cfg.grid.x_lo, cfg.grid.x_hi, cfg.grid.n)?;
    let mut rows = Vec::new();
    for (i, &eps) in cfg.epsilon.iter().enumerate() {
        let quantum: Vec<f64> = (0..cfg.n_trials)
            .into_par_iter()
            .map(|t| -> RunResult<Vec<f64>> {
                let mut rng = stream_rng(cfg.master_seed.wrapping_add(1 + i as u64), t as u64);
                let state = make_coherent(
                    grid,
                    coherent.x0[0],
                    coherent.p0[0],
                    coherent.beta_exponent,
                    WavePacketProfile::Gaussian {
                        lambda: coherent.lambda,
                    },
                    eps,
                )?;
                let res = run_chain(QuantumState::Grid(state), dynamics, kernel, steps, &mut rng)?;
                Ok(res.record.outcomes.iter().map(|q| q[0]).collect())
            })
            .collect::<RunResult<Vec<_>>>()?
            .into_iter()
            .flatten()
            .collect();
        let distance = stats::energy_distance(&quantum, &classical, dim);
        println!("converge: eps = {eps}: energy distance {distance:.6e}");
        rows.push(vec![eps, distance]);
    }

    let meta = vec![
        ("scenario".to_string(), "converge".to_string()),
        ("n_trials".to_string(), cfg.n_trials.to_string()),
        ("classical_trials".to_string(), cfg.classical_trials.to_string()),
        ("n_steps".to_string(), steps.to_string()),
        ("master_seed".to_string(), cfg.master_seed.to_string()),
    ];
    let csv = ctx.path("converge.csv");
    write_table_csv(&csv, &meta, &["epsilon", "energy_distance"], &rows)?;
    Ok(vec![csv])
}

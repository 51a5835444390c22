//! `weyl` (alias `weyl-check`): residual sweeps of the quantization calculus
//! over ε — Weyl relation phase, star-product/operator-composition agreement,
//! classical-limit lower/upper bounds, and the Egorov residuals for free and
//! harmonic dynamics.

use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use tracksim_core::phasespace::{symplectic_pairing, DynamicsSpec};
use tracksim_core::quantum::Grid1d;
use tracksim_core::rng::stream_rng;
use tracksim_core::weylcalc::{
    classical_limit_residual, egorov_check, op_apply, random_probes, star_product, weyl_apply,
    Atom, AtomicSymbol,
};

use super::{RunContext, RunError, RunResult};
use crate::records::write_table_csv;

fn load_symbol(path: &Path) -> RunResult<AtomicSymbol> {
    let text = std::fs::read_to_string(path)?;
    let rows: Vec<(f64, f64, Vec<f64>)> = serde_json::from_str(&text)
        .map_err(|e| RunError::Config(format!("{}: {e}", path.display())))?;
    AtomicSymbol::from_rows(&rows, 1).map_err(|e| RunError::Config(e.to_string()))
}

fn default_symbol_a() -> AtomicSymbol {
    AtomicSymbol::from_rows(
        &[(1.0, 0.0, vec![1.0, 0.4]), (0.0, 0.6, vec![-0.7, 1.0])],
        1,
    )
    .expect("static symbol")
}

fn default_symbol_b() -> AtomicSymbol {
    AtomicSymbol::from_rows(
        &[(0.8, 0.0, vec![0.3, -1.2]), (0.1, 0.2, vec![0.9, 0.5])],
        1,
    )
    .expect("static symbol")
}

pub fn run(ctx: &RunContext) -> RunResult<Vec<PathBuf>> {
    let cfg = &ctx.config;
    let grid = Grid1d::new(cfg.grid.x_lo, cfg.grid.x_hi, cfg.grid.n)?;
    let sym_a = match &cfg.symbol_a {
        Some(p) => load_symbol(p)?,
        None => default_symbol_a(),
    };
    let sym_b = match &cfg.symbol_b {
        Some(p) => load_symbol(p)?,
        None => default_symbol_b(),
    };

    let free = DynamicsSpec::Free { dim: 1, tau_over_m: 1.0 };
    let harmonic = DynamicsSpec::Harmonic {
        stiffness: DMatrix::from_element(1, 1, 1.0),
        tau: 0.7,
    };

    let mut rows = Vec::new();
    for (i, &eps) in cfg.epsilon.iter().enumerate() {
        let probes = random_probes(grid, eps, cfg.probes, cfg.master_seed.wrapping_add(i as u64))?;

        // Weyl relation residual over seeded random frequency pairs
        let mut rng = stream_rng(cfg.master_seed, 10_000 + i as u64);
        let mut wr_residual = 0.0f64;
        let psi = &probes[0];
        for _ in 0..32 {
            use rand::Rng;
            let z1 = DVector::from_fn(2, |_, _| rng.gen_range(-1.5..1.5));
            let z2 = DVector::from_fn(2, |_, _| rng.gen_range(-1.5..1.5));
            let lhs = weyl_apply(&z1, &weyl_apply(&z2, psi)?)?;
            let phase =
                Complex64::from_polar(1.0, 0.5 * eps * symplectic_pairing(&z1, &z2));
            let mut rhs = weyl_apply(&(&z1 + &z2), psi)?;
            for c in rhs.psi.iter_mut() {
                *c *= phase;
            }
            wr_residual = wr_residual.max(lhs.l2_distance(&rhs));
        }

        // star product vs operator composition on seeded random symbols
        let mut star_residual = 0.0f64;
        for _ in 0..32 {
            use rand::Rng;
            let random_symbol = |rng: &mut tracksim_core::rng::StreamRng| {
                AtomicSymbol::new(
                    (0..3)
                        .map(|_| Atom {
                            coeff: Complex64::new(
                                rng.gen_range(-1.0..1.0),
                                rng.gen_range(-1.0..1.0),
                            ),
                            freq: DVector::from_fn(2, |_, _| rng.gen_range(-2.0..2.0)),
                        })
                        .collect(),
                    1,
                )
                .expect("random symbol")
            };
            let a = random_symbol(&mut rng);
            let b = random_symbol(&mut rng);
            let ab = star_product(&a, &b, eps)?;
            let lhs = op_apply(&ab, psi)?;
            let rhs = op_apply(&a, &op_apply(&b, psi)?)?;
            star_residual = star_residual.max(lhs.l2_distance(&rhs));
        }

        let (cl_probe, cl_bound) = classical_limit_residual(&sym_a, &sym_b, eps, &probes)?;
        let egorov_free = egorov_check(&sym_a, &free, &probes)?;
        let egorov_harm = egorov_check(&sym_a, &harmonic, &probes)?;

        println!(
            "weyl: eps = {eps}: WR {wr_residual:.3e}, star {star_residual:.3e}, \
             classical limit {cl_probe:.3e} ≤ {cl_bound:.3e}, Egorov {egorov_free:.3e}/{egorov_harm:.3e}"
        );
        rows.push(vec![
            eps,
            wr_residual,
            star_residual,
            cl_probe,
            cl_bound,
            egorov_free,
            egorov_harm,
        ]);
    }

    let meta = vec![
        ("scenario".to_string(), "weyl".to_string()),
        ("probes".to_string(), cfg.probes.to_string()),
        ("master_seed".to_string(), cfg.master_seed.to_string()),
    ];
    let csv = ctx.path("weyl.csv");
    write_table_csv(
        &csv,
        &meta,
        &[
            "epsilon",
            "weyl_relation_residual",
            "star_op_residual",
            "classical_limit_probe",
            "classical_limit_bound",
            "egorov_free",
            "egorov_harmonic",
        ],
        &rows,
    )?;
    Ok(vec![csv])
}

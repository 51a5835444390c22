//! Reconstruction of the initial condition ξ₀ from a measurement record:
//! the two-stage estimator for free motion (difference quotient for the
//! momentum, windowed average for the position) and the least-squares
//! estimator for general quadratic dynamics.
//!
//! The windowed position average uses the prefactor 1/N_n over the N_n + 1
//! window terms; this carries an O(1/N_n) bias at finite n that vanishes as
//! the record grows. `free_position_estimate` documents this where it
//! matters.

use nalgebra::{DMatrix, DVector};

use crate::classical::MeasurementRecord;
use crate::error::{Error, Result};
use crate::phasespace::{DynamicsSpec, PhasePoint, SymplecticMap, JXP_TOL, SPECTRUM_TOL};

/// Conditioning report for a least-squares solve.
#[derive(Debug, Clone)]
pub struct EstimatorDiagnostics {
    /// Smallest eigenvalue of the normal-equations matrix Σ_n.
    pub sigma_n_min_eig: f64,
    /// Condition number (max/min eigenvalue) of Σ_n.
    pub condition: f64,
    /// Number of outcome pairs that entered the solve.
    pub n_used: usize,
    /// Hypothesis violations; the solve is still attempted so negative
    /// controls can observe the failure mode.
    pub warnings: Vec<String>,
}

fn tau_over_m_of(record: &MeasurementRecord) -> Result<f64> {
    match &record.dynamics {
        Some(DynamicsSpec::Free { tau_over_m, .. }) => Ok(*tau_over_m),
        None => Ok(1.0),
        Some(other) => Err(Error::invalid(format!(
            "two-stage estimator requires free dynamics, got {other:?}"
        ))),
    }
}

/// p̃_n = (Q_n − Q_0) / (n · τ/m).
pub fn free_momentum_estimate(record: &MeasurementRecord, n: usize) -> Result<DVector<f64>> {
    if n == 0 {
        return Err(Error::invalid("momentum estimate needs n >= 1"));
    }
    if record.len() < n + 1 {
        return Err(Error::invalid(format!(
            "record has {} outcomes, need {}",
            record.len(),
            n + 1
        )));
    }
    let tau_over_m = tau_over_m_of(record)?;
    Ok((&record.outcomes[n] - &record.outcomes[0]) / (n as f64 * tau_over_m))
}

/// x̃_n = (1/N_n) Σ_{k=0}^{N_n} { Q_k − k (τ/m) p̃_n } with the default
/// window N_n = ⌈√n⌉. The degenerate window N_n = 0 returns Q₀.
pub fn free_position_estimate(
    record: &MeasurementRecord,
    n: usize,
    window: Option<usize>,
) -> Result<DVector<f64>> {
    let window = window.unwrap_or_else(|| (n as f64).sqrt().ceil() as usize);
    if window > n {
        return Err(Error::invalid(format!("window {window} exceeds n = {n}")));
    }
    if window == 0 {
        return Ok(record.outcomes[0].clone());
    }
    let tau_over_m = tau_over_m_of(record)?;
    let p_tilde = free_momentum_estimate(record, n)?;
    let mut acc = DVector::zeros(record.dim());
    for k in 0..=window {
        acc += &record.outcomes[k] - (k as f64 * tau_over_m) * &p_tilde;
    }
    Ok(acc / window as f64)
}

/// Design matrices of the least-squares estimator: M = (𝟙 0; J_xx J_xp),
/// the stacked blocks M J^{2k}, and the normal-equations matrix
/// Σ_n = Σ_k (M J^{2k})ᵗ M J^{2k}.
#[derive(Debug, Clone)]
pub struct Design {
    pub m: DMatrix<f64>,
    pub blocks: Vec<DMatrix<f64>>,
    pub normal_matrix: DMatrix<f64>,
    /// Set when J_xp (hence M) is numerically singular.
    pub m_singular: bool,
}

pub fn build_design(j: &SymplecticMap, n: usize) -> Design {
    let d = j.dim();
    let mut m = DMatrix::zeros(2 * d, 2 * d);
    m.view_mut((0, 0), (d, d)).copy_from(&DMatrix::identity(d, d));
    m.view_mut((d, 0), (d, d)).copy_from(&j.block_xx());
    m.view_mut((d, d), (d, d)).copy_from(&j.block_xp());
    let j2 = j.matrix() * j.matrix();
    let mut blocks = Vec::with_capacity(n + 1);
    let mut pow = DMatrix::identity(2 * d, 2 * d);
    let mut normal = DMatrix::zeros(2 * d, 2 * d);
    for _ in 0..=n {
        let block = &m * &pow;
        normal += block.transpose() * &block;
        blocks.push(block);
        pow = &pow * &j2;
    }
    let (jxp_ok, _) = j.jxp_invertible(JXP_TOL);
    Design {
        m,
        blocks,
        normal_matrix: normal,
        m_singular: !jxp_ok,
    }
}

/// Least-squares estimate of ξ₀ from the outcome pairs (Q_{2k}, Q_{2k+1}),
/// k = 0..n, solved by a rank-revealing factorization of the stacked design.
///
/// Hypothesis violations (spectrum off U(1), singular J_xp) produce warnings
/// but the solve is still attempted; a numerically singular normal matrix is
/// an error carrying its diagnostics.
pub fn least_squares_estimate(
    j: &SymplecticMap,
    record: &MeasurementRecord,
    n: usize,
) -> Result<(PhasePoint, EstimatorDiagnostics)> {
    let d = j.dim();
    if record.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: record.dim(),
        });
    }
    let mut usable = record.len();
    let mut warnings = Vec::new();
    if usable % 2 == 1 {
        usable -= 1;
        warnings.push("odd record length: last outcome dropped".into());
    }
    if usable < 2 * (n + 1) {
        return Err(Error::invalid(format!(
            "record supplies {usable} pairable outcomes, need {}",
            2 * (n + 1)
        )));
    }
    if !j.spectrum_on_unit_circle(SPECTRUM_TOL)? {
        warnings.push("spectrum of J leaves the unit circle".into());
    }
    let (jxp_ok, _) = j.jxp_invertible(JXP_TOL);
    if !jxp_ok {
        warnings.push("J_xp block is numerically singular".into());
    }

    let design = build_design(j, n);
    let eig = nalgebra::SymmetricEigen::new(design.normal_matrix.clone());
    let min_eig = eig.eigenvalues.min();
    let max_eig = eig.eigenvalues.max();
    if min_eig <= 1e-10 * max_eig {
        return Err(Error::SingularDesign {
            min_eig,
            max_eig,
            n_used: n + 1,
        });
    }

    let rows = (n + 1) * 2 * d;
    let mut stacked = DMatrix::zeros(rows, 2 * d);
    let mut obs = DVector::zeros(rows);
    for k in 0..=n {
        stacked
            .view_mut((k * 2 * d, 0), (2 * d, 2 * d))
            .copy_from(&design.blocks[k]);
        obs.rows_mut(k * 2 * d, d).copy_from(&record.outcomes[2 * k]);
        obs.rows_mut(k * 2 * d + d, d)
            .copy_from(&record.outcomes[2 * k + 1]);
    }
    let svd = stacked.svd(true, true);
    let solution = svd
        .solve(&obs, 1e-13)
        .map_err(|e| Error::numeric(format!("least-squares solve failed: {e}")))?;

    Ok((
        PhasePoint::from_vector(&solution)?,
        EstimatorDiagnostics {
            sigma_n_min_eig: min_eig,
            condition: max_eig / min_eig,
            n_used: n + 1,
            warnings,
        },
    ))
}

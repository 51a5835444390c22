//! Gaussian pure-state backend: mean and Wigner covariance evolve exactly
//! under quadratic dynamics, and a Gaussian position measurement keeps the
//! state Gaussian.
//!
//! Measurement update, derived from the amplitude multiplication
//! ψ'(x) ∝ g(q − x) ψ(x) on Gaussian wavefunctions and cross-checked against
//! the grid backend:
//!
//! * outcome law:  q ~ N(x̄, Σ_xx + Σ_g);
//! * mean update:  the conditional-Gaussian (Kalman) step with innovation
//!   covariance Y = Σ_xx + Σ_g and gain (Σ_xx; Σ_px) Y⁻¹;
//! * covariance:   the Kalman downdate on every block **plus** the
//!   backaction term (ε²/4) Σ_g⁻¹ on the pp block, which is what keeps the
//!   posterior a pure state instead of violating the uncertainty relation.

use nalgebra::{Cholesky, DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::instrument::NoiseKernel;
use crate::phasespace::{standard_form, PhasePoint, SymplecticMap};

/// Pure Gaussian state: mean ξ̄ ∈ Γ and Wigner covariance Σ (2d×2d).
#[derive(Debug, Clone)]
pub struct GaussianState {
    pub mean: PhasePoint,
    pub cov: DMatrix<f64>,
    pub epsilon: f64,
}

impl GaussianState {
    pub fn new(mean: PhasePoint, cov: DMatrix<f64>, epsilon: f64) -> Result<Self> {
        let d = mean.dim();
        if cov.nrows() != 2 * d || cov.ncols() != 2 * d {
            return Err(Error::DimensionMismatch {
                expected: 2 * d,
                got: cov.nrows(),
            });
        }
        if epsilon <= 0.0 || !epsilon.is_finite() {
            return Err(Error::invalid("epsilon must be positive"));
        }
        let asym = (&cov - cov.transpose())
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()));
        if asym > 1e-10 {
            return Err(Error::invalid("covariance must be symmetric"));
        }
        if Cholesky::new(cov.clone()).is_none() {
            return Err(Error::invalid("covariance must be positive-definite"));
        }
        let state = GaussianState { mean, cov, epsilon };
        let min_eig = state.uncertainty_min_eig();
        if min_eig < -1e-10 * epsilon.max(1.0) {
            return Err(Error::invalid(format!(
                "state violates the uncertainty relation: min eig {min_eig:.3e}"
            )));
        }
        Ok(state)
    }

    /// Smallest eigenvalue of the Hermitian matrix Σ + i(ε/2)Ω; non-negative
    /// for physical states (Robertson–Schrödinger).
    pub fn uncertainty_min_eig(&self) -> f64 {
        let n = self.cov.nrows();
        let omega = standard_form(n / 2);
        let herm = DMatrix::from_fn(n, n, |r, c| {
            Complex64::new(self.cov[(r, c)], 0.5 * self.epsilon * omega[(r, c)])
        });
        herm.symmetric_eigen().eigenvalues.min()
    }

    pub fn dim(&self) -> usize {
        self.mean.dim()
    }

    /// Coherent state matching the grid construction: position variance
    /// Λ²ε^{2β} per axis and the minimal-uncertainty momentum variance.
    pub fn coherent(
        x0: &DVector<f64>,
        p0: &DVector<f64>,
        beta: f64,
        lambda: f64,
        epsilon: f64,
    ) -> Result<Self> {
        let d = x0.len();
        let var_x = lambda * lambda * epsilon.powf(2.0 * beta);
        let var_p = epsilon * epsilon / (4.0 * var_x);
        let mut cov = DMatrix::zeros(2 * d, 2 * d);
        for i in 0..d {
            cov[(i, i)] = var_x;
            cov[(d + i, d + i)] = var_p;
        }
        GaussianState::new(PhasePoint::new(x0.clone(), p0.clone())?, cov, epsilon)
    }

    pub fn position_cov(&self) -> DMatrix<f64> {
        let d = self.dim();
        self.cov.view((0, 0), (d, d)).into_owned()
    }

    pub fn momentum_cov(&self) -> DMatrix<f64> {
        let d = self.dim();
        self.cov.view((d, d), (d, d)).into_owned()
    }
}

/// Conjugation by the quadratic propagator: mean ↦ Jξ̄, Σ ↦ JΣJᵗ. Exact,
/// no truncation.
pub fn evolve_gaussian(state: &GaussianState, j: &SymplecticMap) -> Result<GaussianState> {
    if j.dim() != state.dim() {
        return Err(Error::DimensionMismatch {
            expected: state.dim(),
            got: j.dim(),
        });
    }
    let mean = j.apply(&state.mean)?;
    let cov = j.matrix() * &state.cov * j.matrix().transpose();
    Ok(GaussianState {
        mean,
        cov: symmetrize(cov),
        epsilon: state.epsilon,
    })
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    let t = m.transpose();
    (m + t) * 0.5
}

/// Mean and covariance of the outcome law q ~ N(x̄, Σ_xx + Σ_g).
pub fn outcome_law(
    state: &GaussianState,
    kernel: &NoiseKernel,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let sigma_g = gaussian_sigma(kernel, state.dim())?;
    Ok((state.mean.x.clone(), state.position_cov() + sigma_g))
}

fn gaussian_sigma(kernel: &NoiseKernel, d: usize) -> Result<DMatrix<f64>> {
    match kernel {
        NoiseKernel::Gaussian(g) if g.sigma().nrows() == d => Ok(g.sigma().clone()),
        NoiseKernel::Gaussian(_) => Err(Error::DimensionMismatch {
            expected: d,
            got: kernel.dim(),
        }),
        _ => Err(Error::UnsupportedBackend(
            "the Gaussian backend needs a Gaussian kernel".into(),
        )),
    }
}

/// Sample an outcome from the Born law and apply the measurement update.
pub fn measure_gaussian<R: Rng + ?Sized>(
    state: &GaussianState,
    kernel: &NoiseKernel,
    rng: &mut R,
) -> Result<(DVector<f64>, GaussianState, f64)> {
    let d = state.dim();
    let sigma_g = gaussian_sigma(kernel, d)?;
    let innovation_cov = state.position_cov() + &sigma_g;
    let chol = Cholesky::new(innovation_cov.clone())
        .ok_or_else(|| Error::numeric("outcome covariance is not positive-definite"))?;
    let z = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
    let q = &state.mean.x + chol.l() * z;
    let (posterior, log_density) = kraus_update_gaussian(state, kernel, &q)?;
    Ok((q, posterior, log_density))
}

/// Posterior Gaussian state for a fixed outcome q, with the log outcome
/// density.
pub fn kraus_update_gaussian(
    state: &GaussianState,
    kernel: &NoiseKernel,
    q: &DVector<f64>,
) -> Result<(GaussianState, f64)> {
    let d = state.dim();
    if q.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: q.len(),
        });
    }
    let sigma_g = gaussian_sigma(kernel, d)?;
    let s_xx = state.cov.view((0, 0), (d, d)).into_owned();
    let s_xp = state.cov.view((0, d), (d, d)).into_owned();
    let s_px = state.cov.view((d, 0), (d, d)).into_owned();
    let s_pp = state.cov.view((d, d), (d, d)).into_owned();

    let y = &s_xx + &sigma_g;
    let chol = Cholesky::new(y.clone())
        .ok_or_else(|| Error::numeric("innovation covariance is not positive-definite"))?;
    let y_inv = chol.inverse();
    let delta = q - &state.mean.x;

    let gain_x = &s_xx * &y_inv;
    let gain_p = &s_px * &y_inv;
    let mean = PhasePoint::new(
        &state.mean.x + &gain_x * &delta,
        &state.mean.p + &gain_p * &delta,
    )?;

    let sigma_g_inv = Cholesky::new(sigma_g)
        .ok_or_else(|| Error::numeric("kernel covariance is not positive-definite"))?
        .inverse();
    let new_xx = &s_xx - &gain_x * &s_xx;
    let new_xp = &s_xp - &gain_x * &s_xp;
    let new_pp =
        &s_pp - &gain_p * &s_xp + sigma_g_inv * (state.epsilon * state.epsilon / 4.0);
    let mut cov = DMatrix::zeros(2 * d, 2 * d);
    cov.view_mut((0, 0), (d, d)).copy_from(&symmetrize(new_xx));
    cov.view_mut((0, d), (d, d)).copy_from(&new_xp);
    cov.view_mut((d, 0), (d, d)).copy_from(&new_xp.transpose());
    cov.view_mut((d, d), (d, d)).copy_from(&symmetrize(new_pp));

    let log_density = -0.5
        * (d as f64 * (2.0 * std::f64::consts::PI).ln()
            + chol.determinant().ln()
            + (delta.transpose() * &y_inv * &delta)[(0, 0)]);

    Ok((
        GaussianState {
            mean,
            cov,
            epsilon: state.epsilon,
        },
        log_density,
    ))
}

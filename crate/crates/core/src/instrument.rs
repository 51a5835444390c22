//! Translation-invariant approximate-position instruments.
//!
//! A kernel fixes the outcome density |g(q − x)|² of a single measurement.
//! Only |g|² is observable (the classical limit and the Kraus update both see
//! g as a multiplication operator and a global phase cancels), so kernels are
//! parameterized by the outcome density directly and the amplitude is the
//! real positive square root.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Gaussian outcome density N(0, Σ) with cached factorizations.
#[derive(Debug, Clone)]
pub struct GaussianKernel {
    sigma: DMatrix<f64>,
    lower: DMatrix<f64>,
    precision: DMatrix<f64>,
    log_norm: f64,
}

impl GaussianKernel {
    fn new(sigma: DMatrix<f64>) -> Result<Self> {
        let d = sigma.nrows();
        if !sigma.is_square() || d == 0 {
            return Err(Error::invalid("covariance must be square, d >= 1"));
        }
        let asym = (&sigma - sigma.transpose())
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()));
        if asym > 1e-12 {
            return Err(Error::invalid("covariance must be symmetric"));
        }
        let chol: Cholesky<f64, Dyn> = Cholesky::new(sigma.clone())
            .ok_or_else(|| Error::invalid("covariance must be positive-definite"))?;
        let det = chol.determinant();
        let log_norm = -0.5 * (d as f64 * (2.0 * std::f64::consts::PI).ln() + det.ln());
        let precision = chol.inverse();
        Ok(GaussianKernel {
            sigma,
            lower: chol.l(),
            precision,
            log_norm,
        })
    }

    pub fn sigma(&self) -> &DMatrix<f64> {
        &self.sigma
    }

    fn log_density(&self, y: &DVector<f64>) -> f64 {
        self.log_norm - 0.5 * (y.transpose() * &self.precision * y)[(0, 0)]
    }
}

/// Amplitude profile of a translation-invariant instrument.
#[derive(Debug, Clone)]
pub enum NoiseKernel {
    /// |g|² = N(0, Σ).
    Gaussian(GaussianKernel),
    /// |g(q)|² = ∏ᵢ cos²(π qᵢ / 2w) / w on [−w, w] per axis; compactly
    /// supported and strictly non-Gaussian.
    BumpCosine { halfwidth: f64, dim: usize },
    /// Zero-width kernel for noiseless test oracles; excluded from
    /// validation and has no density.
    Delta { dim: usize },
}

/// Residuals of the kernel normalization and centering invariants.
#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub normalization_residual: f64,
    pub mean_residual: f64,
    pub second_moment: DVector<f64>,
}

impl NoiseKernel {
    pub fn gaussian(sigma: DMatrix<f64>) -> Result<Self> {
        Ok(NoiseKernel::Gaussian(GaussianKernel::new(sigma)?))
    }

    /// Isotropic Gaussian kernel with per-axis variance `var`.
    pub fn gaussian_isotropic(var: f64, dim: usize) -> Result<Self> {
        if var <= 0.0 || !var.is_finite() {
            return Err(Error::invalid("variance must be positive"));
        }
        Self::gaussian(DMatrix::identity(dim, dim) * var)
    }

    pub fn bump_cosine(halfwidth: f64, dim: usize) -> Result<Self> {
        if halfwidth <= 0.0 || !halfwidth.is_finite() || dim == 0 {
            return Err(Error::invalid("halfwidth must be positive, d >= 1"));
        }
        Ok(NoiseKernel::BumpCosine { halfwidth, dim })
    }

    pub fn delta(dim: usize) -> Self {
        NoiseKernel::Delta { dim }
    }

    pub fn dim(&self) -> usize {
        match self {
            NoiseKernel::Gaussian(g) => g.sigma.nrows(),
            NoiseKernel::BumpCosine { dim, .. } => *dim,
            NoiseKernel::Delta { dim } => *dim,
        }
    }

    /// Outcome density |g(q − x)|².
    pub fn density(&self, q: &DVector<f64>, x: &DVector<f64>) -> Result<f64> {
        Ok(self.log_density(q, x)?.exp())
    }

    /// log |g(q − x)|²; −∞ outside compact support.
    pub fn log_density(&self, q: &DVector<f64>, x: &DVector<f64>) -> Result<f64> {
        if q.len() != self.dim() || x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: q.len().max(x.len()),
            });
        }
        let y = q - x;
        match self {
            NoiseKernel::Gaussian(g) => Ok(g.log_density(&y)),
            NoiseKernel::BumpCosine { halfwidth: w, .. } => {
                let mut acc = 0.0;
                for &yi in y.iter() {
                    if yi.abs() >= *w {
                        return Ok(f64::NEG_INFINITY);
                    }
                    acc += ((std::f64::consts::PI * yi / (2.0 * w)).cos().powi(2) / w).ln();
                }
                Ok(acc)
            }
            NoiseKernel::Delta { .. } => {
                Err(Error::UnsupportedBackend("delta kernel has no density".into()))
            }
        }
    }

    /// Amplitude g(y) = sqrt of the density at displacement y.
    pub fn amplitude(&self, y: f64) -> Result<f64> {
        let zero = DVector::zeros(self.dim());
        let mut q = DVector::zeros(self.dim());
        q[0] = y;
        if self.dim() != 1 {
            return Err(Error::UnsupportedBackend(
                "scalar amplitude only defined for d = 1".into(),
            ));
        }
        let ld = self.log_density(&q, &zero)?;
        Ok((0.5 * ld).exp())
    }

    /// Draw κ with law |g(κ)|² d^dκ.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        match self {
            NoiseKernel::Gaussian(g) => {
                let d = g.sigma.nrows();
                let z = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
                &g.lower * z
            }
            NoiseKernel::BumpCosine { halfwidth: w, dim } => DVector::from_fn(*dim, |_, _| {
                // rejection from the uniform proposal on [−w, w]
                loop {
                    let q = rng.gen_range(-*w..*w);
                    let u: f64 = rng.gen();
                    if u <= (std::f64::consts::PI * q / (2.0 * w)).cos().powi(2) {
                        return q;
                    }
                }
            }),
            NoiseKernel::Delta { dim } => DVector::zeros(*dim),
        }
    }

    /// Per-axis second moments (diagonal of the covariance of |g|²).
    pub fn second_moment(&self) -> Result<DVector<f64>> {
        match self {
            NoiseKernel::Gaussian(g) => Ok(g.sigma.diagonal()),
            NoiseKernel::BumpCosine { halfwidth: w, dim } => {
                // ∫ q² cos²(πq/2w)/w dq over [−w, w] = w²(1/3 − 2/π²)
                let m = w * w * (1.0 / 3.0 - 2.0 / std::f64::consts::PI.powi(2));
                Ok(DVector::from_element(*dim, m))
            }
            NoiseKernel::Delta { dim } => Ok(DVector::zeros(*dim)),
        }
    }

    /// Length scale of the kernel, used to size sampling grids.
    pub fn width_scale(&self) -> f64 {
        match self {
            NoiseKernel::Gaussian(g) => {
                nalgebra::SymmetricEigen::new(g.sigma.clone())
                    .eigenvalues
                    .max()
                    .sqrt()
            }
            NoiseKernel::BumpCosine { halfwidth, .. } => *halfwidth,
            NoiseKernel::Delta { .. } => 0.0,
        }
    }

    /// CDF of the 1-D outcome density; only defined for d = 1 kernels.
    pub fn cdf_1d(&self, q: f64) -> Result<f64> {
        if self.dim() != 1 {
            return Err(Error::UnsupportedBackend("cdf_1d needs d = 1".into()));
        }
        match self {
            NoiseKernel::Gaussian(g) => Ok(crate::stats::normal_cdf(q / g.sigma[(0, 0)].sqrt())),
            NoiseKernel::BumpCosine { halfwidth: w, .. } => {
                if q <= -w {
                    Ok(0.0)
                } else if q >= *w {
                    Ok(1.0)
                } else {
                    Ok(0.5
                        + q / (2.0 * w)
                        + (std::f64::consts::PI * q / w).sin() / (2.0 * std::f64::consts::PI))
                }
            }
            NoiseKernel::Delta { .. } => {
                Err(Error::UnsupportedBackend("delta kernel has no cdf".into()))
            }
        }
    }

    /// Check the kernel invariants by adaptive quadrature (d ≤ 3).
    ///
    /// The densities are separable per axis (for a full Gaussian covariance,
    /// in the eigenbasis of Σ), so d-dimensional moments reduce to 1-D
    /// integrals.
    pub fn validate(&self) -> Result<ValidationReport> {
        match self {
            NoiseKernel::Delta { .. } => Err(Error::UnsupportedBackend(
                "delta kernel is excluded from validation".into(),
            )),
            NoiseKernel::BumpCosine { halfwidth: w, dim } => {
                let rho = |q: f64| (std::f64::consts::PI * q / (2.0 * w)).cos().powi(2) / w;
                let norm = adaptive_simpson(&rho, -w, *w, 1e-13)?;
                let mean = adaptive_simpson(&|q| q * rho(q), -w, *w, 1e-13)?;
                let m2 = adaptive_simpson(&|q| q * q * rho(q), -w, *w, 1e-13)?;
                Ok(ValidationReport {
                    normalization_residual: (norm.powi(*dim as i32) - 1.0).abs(),
                    mean_residual: mean.abs(),
                    second_moment: DVector::from_element(*dim, m2),
                })
            }
            NoiseKernel::Gaussian(g) => {
                let d = g.sigma.nrows();
                if d > 3 {
                    return Err(Error::UnsupportedBackend(
                        "validation quadrature covers d <= 3".into(),
                    ));
                }
                let eig = nalgebra::SymmetricEigen::new(g.sigma.clone());
                let mut norm_prod = 1.0;
                let mut mean_axis = DVector::zeros(d);
                let mut m2_axis = DVector::zeros(d);
                for i in 0..d {
                    let s = eig.eigenvalues[i].sqrt();
                    let rho = move |q: f64| {
                        (-(q * q) / (2.0 * s * s)).exp() / (s * (2.0 * std::f64::consts::PI).sqrt())
                    };
                    let lim = 10.0 * s;
                    norm_prod *= adaptive_simpson(&rho, -lim, lim, 1e-13)?;
                    mean_axis[i] = adaptive_simpson(&|q| q * rho(q), -lim, lim, 1e-13)?;
                    m2_axis[i] = adaptive_simpson(&|q| q * q * rho(q), -lim, lim, 1e-13)?;
                }
                // rotate the per-axis moments back to the original axes
                let v = &eig.eigenvectors;
                let mean = v * mean_axis;
                let m2 = (v * DMatrix::from_diagonal(&m2_axis) * v.transpose()).diagonal();
                Ok(ValidationReport {
                    normalization_residual: (norm_prod - 1.0).abs(),
                    mean_residual: mean.amax(),
                    second_moment: m2,
                })
            }
        }
    }
}

/// Adaptive Simpson quadrature with an absolute tolerance.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
    }
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        m: f64,
        fm: f64,
        whole: f64,
        tol: f64,
        depth: usize,
    ) -> Result<f64> {
        let (lm, flm, left) = simpson(f, a, fa, m, fm);
        let (rm, frm, right) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if delta.abs() <= 15.0 * tol {
            return Ok(left + right + delta / 15.0);
        }
        if depth == 0 {
            return Err(Error::numeric(format!(
                "quadrature did not converge on [{a:.3e}, {b:.3e}]: residual {:.3e}",
                delta.abs()
            )));
        }
        Ok(recurse(f, a, fa, m, fm, lm, flm, left, tol / 2.0, depth - 1)?
            + recurse(f, m, fm, b, fb, rm, frm, right, tol / 2.0, depth - 1)?)
    }
    let (fa, fb) = (f(a), f(b));
    let (m, fm, whole) = simpson(f, a, fa, b, fb);
    recurse(f, a, fa, b, fb, m, fm, whole, tol, 48)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use crate::stats;
    use approx::assert_abs_diff_eq;

    fn v1(x: f64) -> DVector<f64> {
        DVector::from_element(1, x)
    }

    #[test]
    fn gaussian_density_at_mode() {
        let k = NoiseKernel::gaussian_isotropic(1.0, 1).unwrap();
        let val = k.density(&v1(0.3), &v1(0.3)).unwrap();
        assert_abs_diff_eq!(val, 1.0 / (2.0 * std::f64::consts::PI).sqrt(), epsilon = 1e-14);
    }

    #[test]
    fn translation_invariance_is_exact() {
        let kernels = [
            NoiseKernel::gaussian_isotropic(0.7, 1).unwrap(),
            NoiseKernel::bump_cosine(1.0, 1).unwrap(),
        ];
        for k in &kernels {
            let a = k.density(&v1(0.25), &v1(0.5)).unwrap();
            let b = k.density(&v1(0.25 + 5.0), &v1(0.5 + 5.0)).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn bump_has_compact_support() {
        let k = NoiseKernel::bump_cosine(1.0, 1).unwrap();
        assert_eq!(k.density(&v1(1.0), &v1(0.0)).unwrap(), 0.0);
        assert_eq!(k.density(&v1(-3.2), &v1(0.0)).unwrap(), 0.0);
        assert!(k.density(&v1(0.99), &v1(0.0)).unwrap() > 0.0);
    }

    #[test]
    fn gaussian_sampling_moments() {
        let k = NoiseKernel::gaussian_isotropic(1.0, 1).unwrap();
        let mut rng = stream_rng(42, 0);
        let n = 100_000;
        let samples: Vec<f64> = (0..n).map(|_| k.sample(&mut rng)[0]).collect();
        // CLT bound 4σ/√N
        assert!(stats::mean(&samples).abs() < 4.0 / (n as f64).sqrt());
        let var = stats::variance(&samples);
        assert!((var - 1.0).abs() < 0.05, "variance {var}");
    }

    #[test]
    fn bump_samples_stay_in_support() {
        let k = NoiseKernel::bump_cosine(1.0, 1).unwrap();
        let mut rng = stream_rng(43, 0);
        for _ in 0..20_000 {
            let s = k.sample(&mut rng)[0];
            assert!((-1.0..1.0).contains(&s));
        }
    }

    #[test]
    fn validation_reports() {
        let g = NoiseKernel::gaussian_isotropic(2.0, 1).unwrap();
        let r = g.validate().unwrap();
        assert!(r.normalization_residual <= 1e-12);
        assert!(r.mean_residual <= 1e-10);

        let b = NoiseKernel::bump_cosine(1.0, 1).unwrap();
        let r = b.validate().unwrap();
        assert!(r.normalization_residual <= 1e-10);
        assert!(r.mean_residual <= 1e-10);
        let expect = 1.0 / 3.0 - 2.0 / std::f64::consts::PI.powi(2);
        assert_abs_diff_eq!(r.second_moment[0], expect, epsilon = 1e-10);
        assert_abs_diff_eq!(
            b.second_moment().unwrap()[0],
            expect,
            epsilon = 1e-12
        );

        let g2 = NoiseKernel::gaussian(DMatrix::from_diagonal(&DVector::from_row_slice(&[
            1.0, 4.0,
        ])))
        .unwrap();
        let r = g2.validate().unwrap();
        assert_abs_diff_eq!(r.second_moment[0], 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(r.second_moment[1], 4.0, epsilon = 1e-10);
        assert!(r.normalization_residual <= 1e-8);
    }

    #[test]
    fn correlated_gaussian_validation() {
        let sigma = DMatrix::from_row_slice(2, 2, &[1.0, 0.6, 0.6, 2.0]);
        let k = NoiseKernel::gaussian(sigma.clone()).unwrap();
        let r = k.validate().unwrap();
        assert!(r.normalization_residual <= 1e-10);
        assert_abs_diff_eq!(r.second_moment[0], sigma[(0, 0)], epsilon = 1e-9);
        assert_abs_diff_eq!(r.second_moment[1], sigma[(1, 1)], epsilon = 1e-9);
    }

    #[test]
    fn delta_kernel_is_noiseless_and_unvalidatable() {
        let k = NoiseKernel::delta(2);
        let mut rng = stream_rng(1, 0);
        assert_eq!(k.sample(&mut rng), DVector::zeros(2));
        assert!(k.validate().is_err());
        assert!(k.density(&DVector::zeros(2), &DVector::zeros(2)).is_err());
    }

    #[test]
    fn chi2_fit_of_samples_to_density() {
        // 50 bins, 1e5 samples; p must clear 0.001 for both kernel families
        let cases = [
            NoiseKernel::gaussian_isotropic(1.0, 1).unwrap(),
            NoiseKernel::bump_cosine(1.0, 1).unwrap(),
        ];
        for (ci, k) in cases.iter().enumerate() {
            let (lo, hi) = match k {
                NoiseKernel::Gaussian(_) => (-5.0, 5.0),
                _ => (-1.0, 1.0),
            };
            let bins = 50usize;
            let mut rng = stream_rng(77, ci as u64);
            let mut counts = vec![0u64; bins];
            let n = 100_000;
            for _ in 0..n {
                let s = k.sample(&mut rng)[0].clamp(lo, hi - 1e-12);
                let idx = ((s - lo) / (hi - lo) * bins as f64) as usize;
                counts[idx.min(bins - 1)] += 1;
            }
            let mut probs = vec![0.0; bins];
            for (i, p) in probs.iter_mut().enumerate() {
                let a = lo + (hi - lo) * i as f64 / bins as f64;
                let b = lo + (hi - lo) * (i + 1) as f64 / bins as f64;
                *p = k.cdf_1d(b).unwrap() - k.cdf_1d(a).unwrap();
            }
            // fold the negligible outside mass into the edge bins
            probs[0] += k.cdf_1d(lo).unwrap();
            probs[bins - 1] += 1.0 - k.cdf_1d(hi).unwrap();
            let r = stats::chi2_gof(&counts, &probs).unwrap();
            assert!(r.p_value > 0.001, "kernel {ci}: p = {}", r.p_value);
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(NoiseKernel::gaussian_isotropic(0.0, 1).is_err());
        assert!(NoiseKernel::bump_cosine(-1.0, 1).is_err());
        assert!(NoiseKernel::gaussian(DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]))
            .is_err()); // not PD
        let k = NoiseKernel::gaussian_isotropic(1.0, 2).unwrap();
        assert!(k.density(&DVector::zeros(1), &DVector::zeros(2)).is_err());
    }
}

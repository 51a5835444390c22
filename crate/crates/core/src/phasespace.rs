//! Phase-space geometry: points ξ = (x, p) of Γ = ℝ^d × ℝ^d, the standard
//! symplectic form Ω, and the time-τ symplectic maps of the three quadratic
//! dynamics (free motion, harmonic coupling, uniform magnetic field).
//!
//! Momenta are velocity-scaled (p/m), so the constructors only see the
//! combinations τ/m and β = B/m.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default eigenvalue tolerance for the unit-circle spectrum check.
pub const SPECTRUM_TOL: f64 = 1e-9;
/// Default relative singular-value tolerance for the J_xp invertibility check.
pub const JXP_TOL: f64 = 1e-9;
/// Maximum allowed ‖JᵗΩJ − Ω‖_max for a valid symplectic map.
pub const SYMPLECTIC_TOL: f64 = 1e-12;

/// A point ξ = (x, p) of phase space.
#[derive(Debug, Clone, PartialEq)]
pub struct PhasePoint {
    pub x: DVector<f64>,
    pub p: DVector<f64>,
}

impl PhasePoint {
    pub fn new(x: DVector<f64>, p: DVector<f64>) -> Result<Self> {
        if x.len() != p.len() {
            return Err(Error::DimensionMismatch {
                expected: x.len(),
                got: p.len(),
            });
        }
        if x.is_empty() {
            return Err(Error::invalid("phase point needs dimension d >= 1"));
        }
        if !(x.iter().all(|v| v.is_finite()) && p.iter().all(|v| v.is_finite())) {
            return Err(Error::invalid("phase point has non-finite components"));
        }
        Ok(PhasePoint { x, p })
    }

    pub fn from_slices(x: &[f64], p: &[f64]) -> Result<Self> {
        Self::new(DVector::from_row_slice(x), DVector::from_row_slice(p))
    }

    /// 1-D convenience constructor.
    pub fn new_1d(x: f64, p: f64) -> Self {
        PhasePoint {
            x: DVector::from_element(1, x),
            p: DVector::from_element(1, p),
        }
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    /// Stack into the 2d-vector (x₁..x_d, p₁..p_d).
    pub fn to_vector(&self) -> DVector<f64> {
        let d = self.dim();
        let mut v = DVector::zeros(2 * d);
        v.rows_mut(0, d).copy_from(&self.x);
        v.rows_mut(d, d).copy_from(&self.p);
        v
    }

    pub fn from_vector(v: &DVector<f64>) -> Result<Self> {
        if v.len() % 2 != 0 || v.is_empty() {
            return Err(Error::invalid("stacked phase vector must have even length"));
        }
        let d = v.len() / 2;
        Self::new(v.rows(0, d).into_owned(), v.rows(d, d).into_owned())
    }
}

/// The standard symplectic form Ω = (0 −𝟙_d; 𝟙_d 0).
pub fn standard_form(d: usize) -> DMatrix<f64> {
    let mut omega = DMatrix::zeros(2 * d, 2 * d);
    for i in 0..d {
        omega[(i, d + i)] = -1.0;
        omega[(d + i, i)] = 1.0;
    }
    omega
}

/// ζ₁ᵗ Ω ζ₂ for stacked 2d-vectors.
pub fn symplectic_pairing(z1: &DVector<f64>, z2: &DVector<f64>) -> f64 {
    let d = z1.len() / 2;
    let mut s = 0.0;
    for i in 0..d {
        // ζᵗΩζ' = p·x' − x·p'
        s += z1[d + i] * z2[i] - z1[i] * z2[d + i];
    }
    s
}

/// Symplecticity residual ‖JᵗΩJ − Ω‖_max and whether it is within tolerance.
pub fn check_symplectic(j: &DMatrix<f64>) -> (bool, f64) {
    assert!(j.is_square() && j.nrows() % 2 == 0, "need a square even-dimensioned matrix");
    let d = j.nrows() / 2;
    let omega = standard_form(d);
    let residual = (j.transpose() * &omega * j - omega)
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    (residual <= SYMPLECTIC_TOL, residual)
}

/// A linear symplectic map J on Γ with its d×d block decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticMap {
    j: DMatrix<f64>,
    d: usize,
}

impl SymplecticMap {
    /// Wrap a matrix, enforcing JᵗΩJ = Ω to within [`SYMPLECTIC_TOL`].
    pub fn new(j: DMatrix<f64>) -> Result<Self> {
        if !j.is_square() || j.nrows() % 2 != 0 || j.nrows() == 0 {
            return Err(Error::invalid("symplectic map must be square of even size"));
        }
        let (ok, residual) = check_symplectic(&j);
        if !ok {
            return Err(Error::invalid(format!(
                "matrix is not symplectic: residual {residual:.3e}"
            )));
        }
        let d = j.nrows() / 2;
        Ok(SymplecticMap { j, d })
    }

    pub fn identity(d: usize) -> Self {
        SymplecticMap {
            j: DMatrix::identity(2 * d, 2 * d),
            d,
        }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.j
    }

    pub fn block_xx(&self) -> DMatrix<f64> {
        self.j.view((0, 0), (self.d, self.d)).into_owned()
    }

    pub fn block_xp(&self) -> DMatrix<f64> {
        self.j.view((0, self.d), (self.d, self.d)).into_owned()
    }

    pub fn block_px(&self) -> DMatrix<f64> {
        self.j.view((self.d, 0), (self.d, self.d)).into_owned()
    }

    pub fn block_pp(&self) -> DMatrix<f64> {
        self.j.view((self.d, self.d), (self.d, self.d)).into_owned()
    }

    /// Apply the map to a phase point: ξ ↦ Jξ.
    pub fn apply(&self, xi: &PhasePoint) -> Result<PhasePoint> {
        if xi.dim() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                got: xi.dim(),
            });
        }
        PhasePoint::from_vector(&(&self.j * xi.to_vector()))
    }

    /// Compose two maps: (self ∘ other)(ξ) = J_self J_other ξ.
    pub fn compose(&self, other: &SymplecticMap) -> Result<SymplecticMap> {
        if self.d != other.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                got: other.d,
            });
        }
        SymplecticMap::new(&self.j * &other.j)
    }

    /// Matrix power Jᵏ by repeated multiplication.
    pub fn power(&self, k: usize) -> DMatrix<f64> {
        let mut out = DMatrix::identity(2 * self.d, 2 * self.d);
        for _ in 0..k {
            out = &out * &self.j;
        }
        out
    }

    /// Inverse map; symplectic matrices are always invertible.
    pub fn inverse(&self) -> SymplecticMap {
        // J⁻¹ = Ω⁻¹ Jᵗ Ω = −Ω Jᵗ Ω
        let omega = standard_form(self.d);
        let inv = -(&omega * self.j.transpose() * &omega);
        SymplecticMap { j: inv, d: self.d }
    }

    /// True iff every eigenvalue λ of J satisfies ||λ| − 1| ≤ tol.
    pub fn spectrum_on_unit_circle(&self, tol: f64) -> Result<bool> {
        let eigs = self
            .j
            .clone()
            .complex_eigenvalues();
        for lambda in eigs.iter() {
            if !lambda.norm().is_finite() {
                return Err(Error::numeric("eigenvalue solver returned non-finite value"));
            }
        }
        Ok(eigs.iter().all(|l| (l.norm() - 1.0).abs() <= tol))
    }

    /// Invertibility of the upper-right block J_xp: true iff
    /// σ_min(J_xp) > tol·scale. Also returns σ_max(J_xp)/σ_min(J_xp).
    ///
    /// The scale is max(σ_max(J_xp), 1); a symplectic J always has σ_max ≥ 1,
    /// so this catches blocks that are uniformly tiny (the 1×1 resonance
    /// J_xp = sin(ωτ)/ω at ωτ = π) which a purely relative test cannot see.
    pub fn jxp_invertible(&self, tol: f64) -> (bool, f64) {
        let svd = self.block_xp().svd(false, false);
        let smax = svd.singular_values.max();
        let smin = svd.singular_values.min();
        let cond = if smin > 0.0 { smax / smin } else { f64::INFINITY };
        (smin > tol * smax.max(1.0), cond)
    }
}

/// Parameters of the three quadratic dynamics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum DynamicsSpec {
    /// Free motion; the single parameter is τ/m.
    Free { dim: usize, tau_over_m: f64 },
    /// Harmonic coupling with mass-scaled stiffness matrix O (symmetric PSD).
    Harmonic { stiffness: DMatrix<f64>, tau: f64 },
    /// Uniform magnetic field along the third axis, β = B/m; d is fixed to 3.
    Magnetic { beta: f64, tau: f64 },
}

impl DynamicsSpec {
    pub fn dim(&self) -> usize {
        match self {
            DynamicsSpec::Free { dim, .. } => *dim,
            DynamicsSpec::Harmonic { stiffness, .. } => stiffness.nrows(),
            DynamicsSpec::Magnetic { .. } => 3,
        }
    }

    /// The time-τ map of this dynamics.
    pub fn map(&self) -> Result<SymplecticMap> {
        match self {
            DynamicsSpec::Free { dim, tau_over_m } => build_free_map(*dim, *tau_over_m),
            DynamicsSpec::Harmonic { stiffness, tau } => build_harmonic_map(stiffness, *tau),
            DynamicsSpec::Magnetic { beta, tau } => build_magnetic_map(*beta, *tau),
        }
    }

    /// The conserved Hamilton function of this dynamics (velocity-scaled).
    pub fn hamiltonian(&self, xi: &PhasePoint) -> Result<f64> {
        if xi.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: xi.dim(),
            });
        }
        Ok(match self {
            DynamicsSpec::Free { .. } => 0.5 * xi.p.norm_squared(),
            DynamicsSpec::Harmonic { stiffness, .. } => {
                0.5 * (xi.p.norm_squared() + (xi.x.transpose() * stiffness * &xi.x)[(0, 0)])
            }
            DynamicsSpec::Magnetic { beta, .. } => {
                let (x, p) = (&xi.x, &xi.p);
                0.5 * ((p[0] - beta * x[1]).powi(2)
                    + (p[1] + beta * x[0]).powi(2)
                    + p[2].powi(2))
            }
        })
    }
}

/// J = (𝟙, (τ/m)𝟙; 0, 𝟙) for free motion.
pub fn build_free_map(d: usize, tau_over_m: f64) -> Result<SymplecticMap> {
    if tau_over_m <= 0.0 || !tau_over_m.is_finite() {
        return Err(Error::invalid("free map needs tau/m > 0"));
    }
    if d == 0 {
        return Err(Error::invalid("free map needs d >= 1"));
    }
    let mut j = DMatrix::identity(2 * d, 2 * d);
    for i in 0..d {
        j[(i, d + i)] = tau_over_m;
    }
    SymplecticMap::new(j)
}

/// sin(x)/x with the removable singularity handled by its series.
fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    }
}

/// J = (cos(√O τ), τ sinc(√O τ); −√O sin(√O τ), cos(√O τ)) via the
/// eigendecomposition of the symmetric PSD stiffness matrix O.
pub fn build_harmonic_map(stiffness: &DMatrix<f64>, tau: f64) -> Result<SymplecticMap> {
    if tau <= 0.0 || !tau.is_finite() {
        return Err(Error::invalid("harmonic map needs tau > 0"));
    }
    let d = stiffness.nrows();
    if d == 0 || !stiffness.is_square() {
        return Err(Error::invalid("stiffness matrix must be square, d >= 1"));
    }
    let asym = (stiffness - stiffness.transpose())
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    if asym > 1e-12 {
        return Err(Error::invalid(format!(
            "stiffness matrix is not symmetric: asymmetry {asym:.3e}"
        )));
    }
    let eig = nalgebra::SymmetricEigen::new(stiffness.clone());
    let mut cos_d = DVector::zeros(d);
    let mut sinc_d = DVector::zeros(d);
    let mut wsin_d = DVector::zeros(d);
    for (i, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda < -1e-12 {
            return Err(Error::invalid(format!(
                "stiffness matrix has negative eigenvalue {lambda:.3e}"
            )));
        }
        let omega = lambda.max(0.0).sqrt();
        cos_d[i] = (omega * tau).cos();
        sinc_d[i] = tau * sinc(omega * tau);
        wsin_d[i] = -omega * (omega * tau).sin();
    }
    let v = &eig.eigenvectors;
    let func = |diag: &DVector<f64>| v * DMatrix::from_diagonal(diag) * v.transpose();
    let (c, s, w) = (func(&cos_d), func(&sinc_d), func(&wsin_d));
    let mut j = DMatrix::zeros(2 * d, 2 * d);
    j.view_mut((0, 0), (d, d)).copy_from(&c);
    j.view_mut((0, d), (d, d)).copy_from(&s);
    j.view_mut((d, 0), (d, d)).copy_from(&w);
    j.view_mut((d, d), (d, d)).copy_from(&c);
    SymplecticMap::new(j)
}

/// Time-τ map of a particle in a uniform magnetic field (0, 0, 2B) with
/// β = B/m, built literally as J = P⁻¹ G P in the rotating-frame variables.
pub fn build_magnetic_map(beta: f64, tau: f64) -> Result<SymplecticMap> {
    if beta <= 0.0 || !beta.is_finite() {
        return Err(Error::invalid("magnetic map needs beta > 0"));
    }
    if tau <= 0.0 || !tau.is_finite() {
        return Err(Error::invalid("magnetic map needs tau > 0"));
    }
    let (c, s) = ((2.0 * beta * tau).cos(), (2.0 * beta * tau).sin());
    let g = DMatrix::from_row_slice(
        6,
        6,
        &[
            c, 0.0, 0.0, s, 0.0, 0.0, //
            0.0, 1.0, 0.0, 0.0, 0.0, 0.0, //
            0.0, 0.0, 1.0, 0.0, 0.0, tau, //
            -s, 0.0, 0.0, c, 0.0, 0.0, //
            0.0, 0.0, 0.0, 0.0, 1.0, 0.0, //
            0.0, 0.0, 0.0, 0.0, 0.0, 1.0,
        ],
    );
    let rb = beta.sqrt();
    let irb = 1.0 / rb;
    let r2 = 2.0f64.sqrt();
    let p = DMatrix::from_row_slice(
        6,
        6,
        &[
            rb, 0.0, 0.0, 0.0, irb, 0.0, //
            0.0, rb, 0.0, irb, 0.0, 0.0, //
            0.0, 0.0, r2, 0.0, 0.0, 0.0, //
            0.0, -rb, 0.0, irb, 0.0, 0.0, //
            -rb, 0.0, 0.0, 0.0, irb, 0.0, //
            0.0, 0.0, 0.0, 0.0, 0.0, r2,
        ],
    ) / r2;
    let p_inv = p
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::numeric("magnetic frame change is singular"))?;
    SymplecticMap::new(p_inv * g * p)
}

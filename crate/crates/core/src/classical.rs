//! The ε→0 limit of the measurement chain: a deterministic symplectic orbit
//! ξ_n = Jⁿξ₀ observed through i.i.d. kernel noise, Q_n = x_n + κ_n.

use nalgebra::DVector;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::instrument::NoiseKernel;
use crate::phasespace::{DynamicsSpec, PhasePoint, SymplecticMap};

/// Initial-condition measures arising as classical limits of coherent-state
/// families, plus the isotropic momentum shell.
#[derive(Debug, Clone)]
pub enum InitialMeasure {
    /// δ(ξ − ξ₀): deterministic initial data.
    PointMass(PhasePoint),
    /// δ(p − p₀) |h(x − x₀)|²: position smeared by a kernel-shaped profile.
    PositionSmeared {
        x0: DVector<f64>,
        x_profile: NoiseKernel,
        p0: DVector<f64>,
    },
    /// δ(x − x₀) |h̃(p − p₀)|²: momentum smeared.
    MomentumSmeared {
        x0: DVector<f64>,
        p_profile: NoiseKernel,
        p0: DVector<f64>,
    },
    /// δ(x − x₀) with |p| = speed and direction uniform on the sphere.
    IsotropicShell { x0: DVector<f64>, speed: f64 },
}

impl InitialMeasure {
    pub fn dim(&self) -> usize {
        match self {
            InitialMeasure::PointMass(xi) => xi.dim(),
            InitialMeasure::PositionSmeared { x0, .. } => x0.len(),
            InitialMeasure::MomentumSmeared { x0, .. } => x0.len(),
            InitialMeasure::IsotropicShell { x0, .. } => x0.len(),
        }
    }

    /// Draw ξ₀ ~ μ₀.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<PhasePoint> {
        match self {
            InitialMeasure::PointMass(xi) => Ok(xi.clone()),
            InitialMeasure::PositionSmeared { x0, x_profile, p0 } => {
                PhasePoint::new(x0 + x_profile.sample(rng), p0.clone())
            }
            InitialMeasure::MomentumSmeared { x0, p_profile, p0 } => {
                PhasePoint::new(x0.clone(), p0 + p_profile.sample(rng))
            }
            InitialMeasure::IsotropicShell { x0, speed } => {
                let d = x0.len();
                let p = if d == 1 {
                    // the 0-sphere: ±speed with equal probability
                    DVector::from_element(1, if rng.gen::<bool>() { *speed } else { -*speed })
                } else {
                    // normalized Gaussian gives the uniform direction
                    loop {
                        let z = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
                        let n = z.norm();
                        if n > 1e-12 {
                            break z * (*speed / n);
                        }
                    }
                };
                PhasePoint::new(x0.clone(), p)
            }
        }
    }
}

/// A finite measurement record (q₀, …, q_n) with the dynamics that produced it.
#[derive(Debug, Clone)]
pub struct MeasurementRecord {
    pub outcomes: Vec<DVector<f64>>,
    pub dynamics: Option<DynamicsSpec>,
}

impl MeasurementRecord {
    pub fn new(outcomes: Vec<DVector<f64>>, dynamics: Option<DynamicsSpec>) -> Result<Self> {
        if outcomes.is_empty() {
            return Err(Error::invalid("measurement record must be non-empty"));
        }
        let d = outcomes[0].len();
        if d == 0 || outcomes.iter().any(|q| q.len() != d) {
            return Err(Error::invalid("record outcomes must share one dimension d >= 1"));
        }
        Ok(MeasurementRecord { outcomes, dynamics })
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.outcomes[0].len()
    }
}

/// The orbit (ξ₀, Jξ₀, …, Jⁿξ₀); n + 1 points.
pub fn classical_orbit(j: &SymplecticMap, xi0: &PhasePoint, n: usize) -> Result<Vec<PhasePoint>> {
    let mut orbit = Vec::with_capacity(n + 1);
    orbit.push(xi0.clone());
    for _ in 0..n {
        let next = j.apply(orbit.last().unwrap())?;
        orbit.push(next);
    }
    Ok(orbit)
}

/// Draw ξ₀ ~ μ₀ and a record Q_k = x_k + κ_k, k = 0..n. The hidden ξ₀ is
/// returned alongside so tests can use it as an oracle.
pub fn simulate_track<R: Rng + ?Sized>(
    dynamics: &DynamicsSpec,
    mu0: &InitialMeasure,
    kernel: &NoiseKernel,
    n: usize,
    rng: &mut R,
) -> Result<(PhasePoint, MeasurementRecord)> {
    let d = dynamics.dim();
    if mu0.dim() != d || kernel.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: mu0.dim().min(kernel.dim()),
        });
    }
    let j = dynamics.map()?;
    let xi0 = mu0.sample(rng)?;
    let mut outcomes = Vec::with_capacity(n + 1);
    let mut xi = xi0.clone();
    for k in 0..=n {
        outcomes.push(&xi.x + kernel.sample(rng));
        if k < n {
            xi = j.apply(&xi)?;
        }
    }
    Ok((
        xi0,
        MeasurementRecord::new(outcomes, Some(dynamics.clone()))?,
    ))
}

/// Log density of a record under the product law ⊗ₖ Λ(ξ_k, dq_k) for the
/// deterministic orbit started at ξ₀. Returns −∞ when an outcome falls
/// outside a compact kernel support.
pub fn record_log_density(
    j: &SymplecticMap,
    xi0: &PhasePoint,
    kernel: &NoiseKernel,
    record: &MeasurementRecord,
) -> Result<f64> {
    if record.dim() != j.dim() {
        return Err(Error::DimensionMismatch {
            expected: j.dim(),
            got: record.dim(),
        });
    }
    let mut xi = xi0.clone();
    let mut acc = 0.0;
    for (k, q) in record.outcomes.iter().enumerate() {
        acc += kernel.log_density(q, &xi.x)?;
        if k + 1 < record.len() {
            xi = j.apply(&xi)?;
        }
    }
    Ok(acc)
}

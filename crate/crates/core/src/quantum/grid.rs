//! 1-D grid wavefunction backend: coherent-state preparation, exact spectral
//! free evolution, split-step harmonic evolution, and the Kraus position
//! measurement (outcome sampling from the Born density and the amplitude
//! multiplication update).

use num_complex::Complex64;
use rand::Rng;

use super::fft;
use crate::error::{Error, Result};
use crate::instrument::NoiseKernel;
use crate::phasespace::DynamicsSpec;

/// Mass within this many cells of either grid edge is treated as boundary
/// contamination.
pub const BOUNDARY_CELLS: usize = 4;
/// Boundary-mass budget for evolution steps.
pub const BOUNDARY_MASS_TOL: f64 = 1e-8;

/// Uniform periodic grid over [x_lo, x_hi) with a power-of-two point count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1d {
    pub x_lo: f64,
    pub dx: f64,
    pub n: usize,
}

impl Grid1d {
    pub fn new(x_lo: f64, x_hi: f64, n: usize) -> Result<Self> {
        if !(x_hi > x_lo) || !x_lo.is_finite() || !x_hi.is_finite() {
            return Err(Error::Configuration("grid needs x_hi > x_lo".into()));
        }
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::Configuration(
                "grid size must be a power of two, n >= 8".into(),
            ));
        }
        Ok(Grid1d {
            x_lo,
            dx: (x_hi - x_lo) / n as f64,
            n,
        })
    }

    pub fn x(&self, j: usize) -> f64 {
        self.x_lo + j as f64 * self.dx
    }

    pub fn x_hi(&self) -> f64 {
        self.x_lo + self.n as f64 * self.dx
    }

    /// Angular spatial frequency of DFT mode m.
    pub fn k(&self, m: usize) -> f64 {
        2.0 * std::f64::consts::PI * fft::freq_index(m, self.n) as f64
            / (self.n as f64 * self.dx)
    }
}

/// Normalized wavefunction samples on a grid, with the semiclassical ε.
#[derive(Debug, Clone)]
pub struct GridState {
    pub grid: Grid1d,
    pub psi: Vec<Complex64>,
    pub epsilon: f64,
}

impl GridState {
    /// Wrap samples, requiring Σ|ψ|²dx = 1 to 1e−10.
    pub fn new(grid: Grid1d, psi: Vec<Complex64>, epsilon: f64) -> Result<Self> {
        if psi.len() != grid.n {
            return Err(Error::DimensionMismatch {
                expected: grid.n,
                got: psi.len(),
            });
        }
        if epsilon <= 0.0 || !epsilon.is_finite() {
            return Err(Error::invalid("epsilon must be positive"));
        }
        let state = GridState { grid, psi, epsilon };
        let norm = state.norm_sq();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::invalid(format!(
                "state is not normalized: Σ|ψ|²dx = {norm:.12}"
            )));
        }
        Ok(state)
    }

    /// Wrap arbitrary samples and normalize them.
    pub fn from_unnormalized(grid: Grid1d, mut psi: Vec<Complex64>, epsilon: f64) -> Result<Self> {
        let norm_sq: f64 = psi.iter().map(|c| c.norm_sqr()).sum::<f64>() * grid.dx;
        if norm_sq <= 0.0 || !norm_sq.is_finite() {
            return Err(Error::numeric("cannot normalize a null wavefunction"));
        }
        let s = 1.0 / norm_sq.sqrt();
        for c in psi.iter_mut() {
            *c *= s;
        }
        GridState::new(grid, psi, epsilon)
    }

    pub fn norm_sq(&self) -> f64 {
        self.psi.iter().map(|c| c.norm_sqr()).sum::<f64>() * self.grid.dx
    }

    /// ⟨self, other⟩ with the physicist's convention (conjugate-linear left).
    pub fn inner(&self, other: &GridState) -> Complex64 {
        self.psi
            .iter()
            .zip(&other.psi)
            .map(|(a, b)| a.conj() * b)
            .sum::<Complex64>()
            * Complex64::from(self.grid.dx)
    }

    pub fn l2_distance(&self, other: &GridState) -> f64 {
        self.psi
            .iter()
            .zip(&other.psi)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
            * self.grid.dx.sqrt()
    }

    pub fn position_mean(&self) -> f64 {
        self.psi
            .iter()
            .enumerate()
            .map(|(j, c)| self.grid.x(j) * c.norm_sqr())
            .sum::<f64>()
            * self.grid.dx
    }

    pub fn position_var(&self) -> f64 {
        let mean = self.position_mean();
        self.psi
            .iter()
            .enumerate()
            .map(|(j, c)| (self.grid.x(j) - mean).powi(2) * c.norm_sqr())
            .sum::<f64>()
            * self.grid.dx
    }

    /// Spectral momentum moments of p̂ = −iε∂ₓ: returns (mean, variance).
    pub fn momentum_moments(&self) -> (f64, f64) {
        let mut hat = self.psi.clone();
        fft::forward(&mut hat);
        let mut w_sum = 0.0;
        let mut m1 = 0.0;
        let mut m2 = 0.0;
        for (m, c) in hat.iter().enumerate() {
            let p = self.epsilon * self.grid.k(m);
            let w = c.norm_sqr();
            w_sum += w;
            m1 += p * w;
            m2 += p * p * w;
        }
        let mean = m1 / w_sum;
        (mean, m2 / w_sum - mean * mean)
    }

    /// Probability mass within `cells` grid cells of either edge.
    pub fn boundary_mass(&self, cells: usize) -> f64 {
        let n = self.grid.n;
        let take = cells.min(n / 2);
        let head: f64 = self.psi[..take].iter().map(|c| c.norm_sqr()).sum();
        let tail: f64 = self.psi[n - take..].iter().map(|c| c.norm_sqr()).sum();
        (head + tail) * self.grid.dx
    }

    pub fn check_boundary(&self) -> Result<()> {
        let mass = self.boundary_mass(BOUNDARY_CELLS);
        if mass > BOUNDARY_MASS_TOL {
            return Err(Error::BoundaryContamination {
                mass,
                cells: BOUNDARY_CELLS,
            });
        }
        Ok(())
    }
}

/// Spectral translation ψ(x) ↦ ψ(x − a) via the Fourier phase e^{−ika};
/// exactly unitary on the periodic grid.
pub fn spectral_translate(psi: &mut [Complex64], grid: &Grid1d, a: f64) {
    fft::forward(psi);
    for (m, c) in psi.iter_mut().enumerate() {
        *c *= Complex64::from_polar(1.0, -grid.k(m) * a);
    }
    fft::inverse(psi);
}

/// Envelope h of a coherent wavepacket; |h|² integrates to 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WavePacketProfile {
    /// |h|² = N(0, Λ²).
    Gaussian { lambda: f64 },
    /// h(y) = cos(πy/2w)/√w on [−w, w].
    BumpCosine { halfwidth: f64 },
}

impl WavePacketProfile {
    fn width(&self) -> f64 {
        match self {
            WavePacketProfile::Gaussian { lambda } => *lambda,
            WavePacketProfile::BumpCosine { halfwidth } => *halfwidth,
        }
    }

    fn eval(&self, y: f64) -> f64 {
        match self {
            WavePacketProfile::Gaussian { lambda } => {
                (-(y * y) / (4.0 * lambda * lambda)).exp()
            }
            WavePacketProfile::BumpCosine { halfwidth: w } => {
                if y.abs() >= *w {
                    0.0
                } else {
                    (std::f64::consts::PI * y / (2.0 * w)).cos()
                }
            }
        }
    }
}

/// ψ(x) ∝ h((x − x₀)/ε^β) e^{i x p₀ / ε}: a wavepacket concentrating at
/// (x₀, p₀) as ε → 0 for β ∈ (0, 1).
pub fn make_coherent(
    grid: Grid1d,
    x0: f64,
    p0: f64,
    beta: f64,
    profile: WavePacketProfile,
    epsilon: f64,
) -> Result<GridState> {
    if epsilon <= 0.0 || !(0.0..=1.0).contains(&beta) {
        return Err(Error::invalid("need epsilon > 0 and beta in [0, 1]"));
    }
    let width = profile.width() * epsilon.powf(beta);
    let margin = 8.0 * width;
    if x0 - margin < grid.x_lo || x0 + margin > grid.x_hi() {
        return Err(Error::Configuration(format!(
            "packet at x0 = {x0} needs {margin:.3} of margin inside [{}, {})",
            grid.x_lo,
            grid.x_hi()
        )));
    }
    let psi: Vec<Complex64> = (0..grid.n)
        .map(|j| {
            let x = grid.x(j);
            let env = profile.eval((x - x0) / epsilon.powf(beta));
            Complex64::from_polar(env, x * p0 / epsilon)
        })
        .collect();
    GridState::from_unnormalized(grid, psi, epsilon)
}

/// One period of unitary evolution e^{−iτH/ε}.
///
/// Free motion is an exact spectral multiplier. The harmonic oscillator uses
/// symmetric (Strang) split-stepping with the substep count doubled until two
/// consecutive resolutions agree to 1e−8 in L².
pub fn evolve_grid(state: &GridState, dynamics: &DynamicsSpec) -> Result<GridState> {
    evolve_grid_signed(state, dynamics, 1.0)
}

/// The inverse step e^{+iτH/ε}.
pub fn evolve_grid_inverse(state: &GridState, dynamics: &DynamicsSpec) -> Result<GridState> {
    evolve_grid_signed(state, dynamics, -1.0)
}

fn evolve_grid_signed(state: &GridState, dynamics: &DynamicsSpec, sign: f64) -> Result<GridState> {
    if dynamics.dim() != 1 {
        return Err(Error::UnsupportedBackend(
            "grid backend is one-dimensional".into(),
        ));
    }
    state.check_boundary()?;
    let eps = state.epsilon;
    let out = match dynamics {
        DynamicsSpec::Free { tau_over_m, .. } => {
            let mut hat = state.psi.clone();
            fft::forward(&mut hat);
            for (m, c) in hat.iter_mut().enumerate() {
                let k = state.grid.k(m);
                // e^{−iτ' p²/(2ε)} with p = εk
                *c *= Complex64::from_polar(1.0, -sign * tau_over_m * eps * k * k / 2.0);
            }
            fft::inverse(&mut hat);
            GridState {
                grid: state.grid,
                psi: hat,
                epsilon: eps,
            }
        }
        DynamicsSpec::Harmonic { stiffness, tau } => {
            let omega_sq = stiffness[(0, 0)];
            let mut n_sub = 32usize;
            let mut prev = harmonic_split_step(state, omega_sq, sign * tau, n_sub);
            loop {
                n_sub *= 2;
                let next = harmonic_split_step(state, omega_sq, sign * tau, n_sub);
                let diff = prev.l2_distance(&next);
                if diff <= 1e-8 {
                    break next;
                }
                if n_sub > 1 << 22 {
                    return Err(Error::numeric(format!(
                        "split-step did not converge: L² diff {diff:.3e} at {n_sub} substeps"
                    )));
                }
                prev = next;
            }
        }
        DynamicsSpec::Magnetic { .. } => {
            return Err(Error::UnsupportedBackend(
                "magnetic dynamics needs the Gaussian backend".into(),
            ))
        }
    };
    out.check_boundary()?;
    Ok(out)
}

fn harmonic_split_step(state: &GridState, omega_sq: f64, tau: f64, n_sub: usize) -> GridState {
    let eps = state.epsilon;
    let grid = state.grid;
    let dt = tau / n_sub as f64;
    // phase tables for the half potential kick and the full kinetic step
    let half_v: Vec<Complex64> = (0..grid.n)
        .map(|j| {
            let x = grid.x(j);
            Complex64::from_polar(1.0, -dt * omega_sq * x * x / (4.0 * eps))
        })
        .collect();
    let kin: Vec<Complex64> = (0..grid.n)
        .map(|m| {
            let k = grid.k(m);
            Complex64::from_polar(1.0, -dt * eps * k * k / 2.0)
        })
        .collect();
    let mut psi = state.psi.clone();
    for step in 0..n_sub {
        if step == 0 {
            for (c, v) in psi.iter_mut().zip(&half_v) {
                *c *= v;
            }
        }
        fft::forward(&mut psi);
        for (c, v) in psi.iter_mut().zip(&kin) {
            *c *= v;
        }
        fft::inverse(&mut psi);
        // merge consecutive half kicks except at the very end
        if step + 1 < n_sub {
            for (c, v) in psi.iter_mut().zip(&half_v) {
                *c *= v * v;
            }
        } else {
            for (c, v) in psi.iter_mut().zip(&half_v) {
                *c *= v;
            }
        }
    }
    GridState {
        grid,
        psi,
        epsilon: eps,
    }
}

/// Born density of the outcome, sampled on a q-grid: Π(q) = Σ_j |g(q−x_j)|²
/// |ψ_j|² dx. The q-grid covers the state grid plus eight kernel widths and
/// is refined until the sampled mass is within 1e−6 of one.
struct OutcomeDensity {
    q_lo: f64,
    dq: f64,
    values: Vec<f64>,
    total: f64,
}

/// Linear convolution via zero-padded FFT; output length a.len() + c.len() − 1.
fn linear_convolution(a: &[f64], c: &[f64]) -> Vec<f64> {
    let out_len = a.len() + c.len() - 1;
    let p = out_len.next_power_of_two();
    let mut fa: Vec<Complex64> = a.iter().map(|&v| Complex64::from(v)).collect();
    fa.resize(p, Complex64::default());
    let mut fc: Vec<Complex64> = c.iter().map(|&v| Complex64::from(v)).collect();
    fc.resize(p, Complex64::default());
    fft::forward(&mut fa);
    fft::forward(&mut fc);
    for (x, y) in fa.iter_mut().zip(&fc) {
        *x *= y;
    }
    fft::inverse(&mut fa);
    fa[..out_len].iter().map(|v| v.re.max(0.0)).collect()
}

fn outcome_density(state: &GridState, kernel: &NoiseKernel) -> Result<OutcomeDensity> {
    let grid = state.grid;
    let width = kernel.width_scale();
    if width <= 0.0 {
        return Err(Error::UnsupportedBackend(
            "outcome sampling needs a kernel with positive width".into(),
        ));
    }
    let weights: Vec<f64> = state.psi.iter().map(|c| c.norm_sqr() * grid.dx).collect();

    // first pass at the grid resolution: Π_i = Σ_j w_j gsq((i − j − M) dx)
    // is a linear convolution of the weights with the sampled kernel
    let m = (8.0 * width / grid.dx).ceil() as usize;
    let samples: Vec<f64> = (0..=2 * m)
        .map(|s| gsq(kernel, (s as f64 - m as f64) * grid.dx))
        .collect();
    let values = linear_convolution(&weights, &samples);
    let total: f64 = values.iter().sum::<f64>() * grid.dx;
    if (total - 1.0).abs() < 1e-6 {
        return Ok(OutcomeDensity {
            q_lo: grid.x_lo - m as f64 * grid.dx,
            dq: grid.dx,
            values,
            total,
        });
    }

    // refinement path: halve dq until the sampled mass defect clears 1e−6
    for refine in 1..=6u32 {
        let dq = grid.dx / (1u64 << refine) as f64;
        let m_q = (8.0 * width / dq).ceil() as usize;
        let q_lo = grid.x_lo - m_q as f64 * dq;
        let n_q = grid.n * (1usize << refine) + 2 * m_q;
        let win = (8.0 * width / grid.dx).ceil() as i64 + 1;
        let values: Vec<f64> = (0..n_q)
            .map(|i| {
                let q = q_lo + i as f64 * dq;
                let jc = ((q - grid.x_lo) / grid.dx).round() as i64;
                let lo = (jc - win).max(0) as usize;
                let hi = ((jc + win) as usize).min(grid.n - 1);
                (lo..=hi)
                    .map(|j| weights[j] * gsq(kernel, q - grid.x(j)))
                    .sum()
            })
            .collect();
        let total: f64 = values.iter().sum::<f64>() * dq;
        if (total - 1.0).abs() < 1e-6 {
            return Ok(OutcomeDensity {
                q_lo,
                dq,
                values,
                total,
            });
        }
    }
    Err(Error::numeric(
        "outcome density mass defect stayed above 1e-6 after refinement",
    ))
}

fn gsq(kernel: &NoiseKernel, y: f64) -> f64 {
    let q = nalgebra::DVector::from_element(1, y);
    let x = nalgebra::DVector::zeros(1);
    kernel.density(&q, &x).unwrap_or(0.0)
}

/// Sample an outcome, apply the amplitude multiplication update, and return
/// (q, posterior state, log outcome density).
pub fn measure_grid<R: Rng + ?Sized>(
    state: &GridState,
    kernel: &NoiseKernel,
    rng: &mut R,
) -> Result<(f64, GridState, f64)> {
    if kernel.dim() != 1 {
        return Err(Error::UnsupportedBackend("grid backend is one-dimensional".into()));
    }
    let density = outcome_density(state, kernel)?;
    // inverse CDF with linear interpolation inside a cell
    let target = rng.gen::<f64>() * density.total;
    let mut acc = 0.0;
    let mut q = density.q_lo;
    for (i, &v) in density.values.iter().enumerate() {
        let cell = v * density.dq;
        if acc + cell >= target || i == density.values.len() - 1 {
            let frac = if cell > 0.0 { (target - acc) / cell } else { 0.5 };
            q = density.q_lo + (i as f64 + frac.clamp(0.0, 1.0) - 0.5) * density.dq;
            break;
        }
        acc += cell;
    }
    let (posterior, log_density) = kraus_update_grid(state, kernel, q)?;
    Ok((q, posterior, log_density))
}

/// Posterior state ψ' ∝ g(q − x)ψ for a fixed outcome q, with the log of the
/// Born density at q.
pub fn kraus_update_grid(
    state: &GridState,
    kernel: &NoiseKernel,
    q: f64,
) -> Result<(GridState, f64)> {
    let grid = state.grid;
    let mut mass = 0.0;
    let psi: Vec<Complex64> = state
        .psi
        .iter()
        .enumerate()
        .map(|(j, c)| {
            let w = gsq(kernel, q - grid.x(j));
            mass += w * c.norm_sqr() * grid.dx;
            c * Complex64::from(w.sqrt())
        })
        .collect();
    if mass <= 0.0 {
        return Err(Error::numeric(format!(
            "outcome q = {q} has zero density on the grid"
        )));
    }
    Ok((
        GridState::from_unnormalized(grid, psi, state.epsilon)?,
        mass.ln(),
    ))
}

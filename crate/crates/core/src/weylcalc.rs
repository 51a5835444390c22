//! Numerical Weyl-quantization calculus over atomic symbols.
//!
//! A symbol is a finite atomic measure: a(ξ) = Σᵢ cᵢ e^{i ζᵢᵗΩξ}. Its
//! quantization is Op_ε(a) = Σᵢ cᵢ W(ζᵢ) with the Weyl translation
//! W(ζ) = exp[i ζᵗΩξ̂], realized on the 1-D grid as a spectral translation by
//! ε𝔵, a phase e^{i𝔭x}, and the cross phase e^{−iε𝔵𝔭/2} for ζ = (𝔵, 𝔭).
//!
//! With [x̂, p̂] = +iε these operators satisfy the Weyl relation
//! W(ζ₁) W(ζ₂) = e^{+i(ε/2) ζ₁ᵗΩζ₂} W(ζ₁ + ζ₂), and the star product below
//! carries the same phase, so that Op(a)·Op(b) = Op(a ⋆ b) holds exactly and
//! conjugation by the quadratic propagator is exactly the composition with
//! the classical flow.

use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::phasespace::{symplectic_pairing, PhasePoint, SymplecticMap};
use crate::quantum::{evolve_grid, evolve_grid_inverse, Grid1d, GridState};
use crate::rng::stream_rng;

/// Frequencies closer than this are merged into one atom.
pub const MERGE_TOL: f64 = 1e-12;

/// One atom: coefficient c and frequency ζ ∈ Γ (stacked 2d-vector).
#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub coeff: Complex64,
    pub freq: DVector<f64>,
}

/// A finite atomic symbol a(ξ) = Σᵢ cᵢ e^{i ζᵢᵗΩξ}.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomicSymbol {
    atoms: Vec<Atom>,
    dim: usize,
}

impl AtomicSymbol {
    pub fn new(atoms: Vec<Atom>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("symbol dimension must be >= 1"));
        }
        for a in &atoms {
            if a.freq.len() != 2 * dim {
                return Err(Error::DimensionMismatch {
                    expected: 2 * dim,
                    got: a.freq.len(),
                });
            }
        }
        let mut sym = AtomicSymbol { atoms, dim };
        sym.merge();
        Ok(sym)
    }

    /// The zero symbol (empty atom list).
    pub fn zero(dim: usize) -> Self {
        AtomicSymbol { atoms: Vec::new(), dim }
    }

    /// The constant symbol c (single atom at ζ = 0).
    pub fn constant(c: Complex64, dim: usize) -> Self {
        AtomicSymbol {
            atoms: vec![Atom {
                coeff: c,
                freq: DVector::zeros(2 * dim),
            }],
            dim,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    /// Merge atoms with coincident frequencies and drop exact zeros.
    fn merge(&mut self) {
        let mut merged: Vec<Atom> = Vec::with_capacity(self.atoms.len());
        for atom in self.atoms.drain(..) {
            if let Some(found) = merged
                .iter_mut()
                .find(|m| (&m.freq - &atom.freq).norm() <= MERGE_TOL)
            {
                found.coeff += atom.coeff;
            } else {
                merged.push(atom);
            }
        }
        merged.retain(|a| a.coeff.norm() > 0.0);
        self.atoms = merged;
    }

    /// Pointwise value a(ξ).
    pub fn eval(&self, xi: &PhasePoint) -> Result<Complex64> {
        if xi.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: xi.dim(),
            });
        }
        let stacked = xi.to_vector();
        Ok(self
            .atoms
            .iter()
            .map(|a| a.coeff * Complex64::from_polar(1.0, symplectic_pairing(&a.freq, &stacked)))
            .sum())
    }

    /// ‖a‖_{TV(k)} = Σᵢ |cᵢ| (1 + ‖ζᵢ‖)^k.
    pub fn tv_norm(&self, k: u32) -> f64 {
        self.atoms
            .iter()
            .map(|a| a.coeff.norm() * (1.0 + a.freq.norm()).powi(k as i32))
            .sum()
    }

    /// Complex conjugate symbol ā: atoms (c̄, −ζ).
    pub fn conj(&self) -> AtomicSymbol {
        AtomicSymbol {
            atoms: self
                .atoms
                .iter()
                .map(|a| Atom {
                    coeff: a.coeff.conj(),
                    freq: -&a.freq,
                })
                .collect(),
            dim: self.dim,
        }
    }

    pub fn scale(&self, c: Complex64) -> AtomicSymbol {
        AtomicSymbol {
            atoms: self
                .atoms
                .iter()
                .map(|a| Atom {
                    coeff: c * a.coeff,
                    freq: a.freq.clone(),
                })
                .collect(),
            dim: self.dim,
        }
    }

    pub fn add(&self, other: &AtomicSymbol) -> Result<AtomicSymbol> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: other.dim,
            });
        }
        let mut atoms = self.atoms.clone();
        atoms.extend(other.atoms.iter().cloned());
        AtomicSymbol::new(atoms, self.dim)
    }

    /// Wire format: rows (Re c, Im c, ζ components).
    pub fn to_rows(&self) -> Vec<(f64, f64, Vec<f64>)> {
        self.atoms
            .iter()
            .map(|a| (a.coeff.re, a.coeff.im, a.freq.iter().cloned().collect()))
            .collect()
    }

    pub fn from_rows(rows: &[(f64, f64, Vec<f64>)], dim: usize) -> Result<Self> {
        let atoms = rows
            .iter()
            .map(|(re, im, z)| Atom {
                coeff: Complex64::new(*re, *im),
                freq: DVector::from_row_slice(z),
            })
            .collect();
        AtomicSymbol::new(atoms, dim)
    }
}

/// Apply the Weyl operator W(ζ) to a grid state: exact unitary.
pub fn weyl_apply(zeta: &DVector<f64>, state: &GridState) -> Result<GridState> {
    if zeta.len() != 2 {
        return Err(Error::UnsupportedBackend(
            "grid Weyl operators are one-dimensional".into(),
        ));
    }
    let (shift_x, phase_p) = (zeta[0], zeta[1]);
    let eps = state.epsilon;
    let grid = state.grid;
    let translation = eps * shift_x;
    if translation.abs() > 0.25 * (grid.x_hi() - grid.x_lo) {
        return Err(Error::Configuration(format!(
            "translation by {translation:.3} exceeds a quarter of the grid"
        )));
    }

    // spectral translation ψ(x − ε𝔵)
    let mut psi = state.psi.clone();
    if translation != 0.0 {
        crate::quantum::grid::spectral_translate(&mut psi, &grid, translation);
    }
    // phase e^{i𝔭x} and the cross phase e^{−iε𝔵𝔭/2}
    let cross = Complex64::from_polar(1.0, -0.5 * eps * shift_x * phase_p);
    for (j, c) in psi.iter_mut().enumerate() {
        *c *= cross * Complex64::from_polar(1.0, phase_p * grid.x(j));
    }
    let out = GridState {
        grid,
        psi,
        epsilon: eps,
    };
    out.check_boundary()?;
    Ok(out)
}

/// Op_ε(a) ψ = Σᵢ cᵢ W(ζᵢ) ψ. Not unitary in general; the output norm is
/// bounded by ‖a‖_TV.
pub fn op_apply(symbol: &AtomicSymbol, state: &GridState) -> Result<GridState> {
    if symbol.dim() != 1 {
        return Err(Error::UnsupportedBackend(
            "grid quantization is one-dimensional".into(),
        ));
    }
    let mut acc = vec![Complex64::default(); state.grid.n];
    for atom in symbol.atoms() {
        let moved = weyl_apply(&atom.freq, state)?;
        for (a, m) in acc.iter_mut().zip(&moved.psi) {
            *a += atom.coeff * m;
        }
    }
    Ok(GridState {
        grid: state.grid,
        psi: acc,
        epsilon: state.epsilon,
    })
}

/// Star product: atoms (cᵢ dⱼ e^{+i(ε/2) ζᵢᵗΩζⱼ}, ζᵢ + ζⱼ), the symbol of
/// Op(a)·Op(b).
pub fn star_product(a: &AtomicSymbol, b: &AtomicSymbol, epsilon: f64) -> Result<AtomicSymbol> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    let mut atoms = Vec::with_capacity(a.atoms().len() * b.atoms().len());
    for ai in a.atoms() {
        for bj in b.atoms() {
            let phase = 0.5 * epsilon * symplectic_pairing(&ai.freq, &bj.freq);
            atoms.push(Atom {
                coeff: ai.coeff * bj.coeff * Complex64::from_polar(1.0, phase),
                freq: &ai.freq + &bj.freq,
            });
        }
    }
    AtomicSymbol::new(atoms, a.dim())
}

/// Pointwise product: the ε-independent convolution of the atomic measures.
pub fn pointwise_product(a: &AtomicSymbol, b: &AtomicSymbol) -> Result<AtomicSymbol> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    let mut atoms = Vec::with_capacity(a.atoms().len() * b.atoms().len());
    for ai in a.atoms() {
        for bj in b.atoms() {
            atoms.push(Atom {
                coeff: ai.coeff * bj.coeff,
                freq: &ai.freq + &bj.freq,
            });
        }
    }
    AtomicSymbol::new(atoms, a.dim())
}

/// a ∘ φ_J: each frequency maps as ζ ↦ J⁻¹ζ, from ζᵗΩJ = (J⁻¹ζ)ᵗΩ.
pub fn compose_linear(a: &AtomicSymbol, j: &SymplecticMap) -> Result<AtomicSymbol> {
    if j.dim() != a.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            got: j.dim(),
        });
    }
    let j_inv = j.inverse();
    let atoms = a
        .atoms()
        .iter()
        .map(|atom| Atom {
            coeff: atom.coeff,
            freq: j_inv.matrix() * &atom.freq,
        })
        .collect();
    AtomicSymbol::new(atoms, a.dim())
}

/// Residual of the classical limit Op(a)Op(b) → Op(a·b): the max over probes
/// of ‖(Op(a)Op(b) − Op(a·b))ψ‖ (a lower bound on the operator norm), and the
/// analytic upper bound Σᵢⱼ |cᵢ||dⱼ| |e^{i(ε/2)ζᵢᵗΩζⱼ} − 1|.
pub fn classical_limit_residual(
    a: &AtomicSymbol,
    b: &AtomicSymbol,
    epsilon: f64,
    probes: &[GridState],
) -> Result<(f64, f64)> {
    if probes.is_empty() {
        return Err(Error::invalid("need at least one probe state"));
    }
    let product = pointwise_product(a, b)?;
    let mut max_residual = 0.0f64;
    for psi in probes {
        let op_b = op_apply(b, psi)?;
        let lhs = op_apply(a, &op_b)?;
        let rhs = op_apply(&product, psi)?;
        max_residual = max_residual.max(lhs.l2_distance(&rhs));
    }
    let mut bound = 0.0;
    for ai in a.atoms() {
        for bj in b.atoms() {
            let half_phase = 0.25 * epsilon * symplectic_pairing(&ai.freq, &bj.freq);
            // |e^{iθ} − 1| = 2|sin(θ/2)|
            bound += ai.coeff.norm() * bj.coeff.norm() * 2.0 * half_phase.sin().abs();
        }
    }
    Ok((max_residual, bound))
}

/// Residual of the exact conjugation identity for quadratic dynamics:
/// max over probes of ‖U⁻¹ Op(a) U ψ − Op(a ∘ φ_J) ψ‖.
pub fn egorov_check(
    a: &AtomicSymbol,
    dynamics: &crate::phasespace::DynamicsSpec,
    probes: &[GridState],
) -> Result<f64> {
    if probes.is_empty() {
        return Err(Error::invalid("need at least one probe state"));
    }
    let j = dynamics.map()?;
    let composed = compose_linear(a, &j)?;
    let mut max_residual = 0.0f64;
    for psi in probes {
        let evolved = evolve_grid(psi, dynamics)?;
        let observed = op_apply(a, &evolved)?;
        let lhs = evolve_grid_inverse(&observed, dynamics)?;
        let rhs = op_apply(&composed, psi)?;
        max_residual = max_residual.max(lhs.l2_distance(&rhs));
    }
    Ok(max_residual)
}

/// Seeded Gaussian wavepackets with varied centers and widths, kept well
/// inside the grid so translations and evolutions stay clear of the edges.
pub fn random_probes(grid: Grid1d, epsilon: f64, count: usize, seed: u64) -> Result<Vec<GridState>> {
    let mut rng = stream_rng(seed, 0);
    let span = grid.x_hi() - grid.x_lo;
    let mut probes = Vec::with_capacity(count);
    for _ in 0..count {
        let x0 = grid.x_lo + span * rng.gen_range(0.35..0.65);
        let p0 = rng.gen_range(-1.5..1.5);
        let lambda = rng.gen_range(0.5..1.5);
        probes.push(crate::quantum::make_coherent(
            grid,
            x0,
            p0,
            0.5,
            crate::quantum::WavePacketProfile::Gaussian { lambda },
            epsilon,
        )?);
    }
    Ok(probes)
}

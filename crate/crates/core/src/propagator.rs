//! Exact unitary evolution in the energy eigenbasis.
//!
//! A [`StateVector`] holds the amplitudes `a_m` of a state over the eigenvectors
//! of one particular [`EigenSystem`]; evolution is a diagonal phase rotation
//! `a_m(t) = a_m(0) exp(-i E_m t)`, so the occupations `|a_m|^2` never change.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::spin_model::{HermitianOperator, C64, HERMITIAN_TOLERANCE};

pub const NORM_TOLERANCE: f64 = 1e-10;

/// Eigenvalues in ascending order with the matching unitary eigenvector matrix.
#[derive(Clone, Debug)]
pub struct EigenSystem {
    energies: Vec<f64>,
    basis: DMatrix<C64>,
}

pub fn eigendecompose(h: &HermitianOperator) -> Result<EigenSystem> {
    let (row, col, deviation) = h.hermiticity_defect();
    if deviation > HERMITIAN_TOLERANCE {
        return Err(Error::NotHermitian { row, col, deviation });
    }
    let eig = h.matrix().clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..h.dim()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let energies = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let basis = DMatrix::from_fn(h.dim(), h.dim(), |r, c| eig.eigenvectors[(r, order[c])]);
    Ok(EigenSystem { energies, basis })
}

impl EigenSystem {
    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    /// Columns are the eigenvectors, in the order of `energies`.
    pub fn basis(&self) -> &DMatrix<C64> {
        &self.basis
    }

    pub fn spectral_range(&self) -> f64 {
        match (self.energies.first(), self.energies.last()) {
            (Some(lo), Some(hi)) => hi - lo,
            _ => 0.0,
        }
    }

    /// Eigensystem of `-H`, obtained without a second decomposition.
    pub fn negated(&self) -> EigenSystem {
        let n = self.dim();
        EigenSystem {
            energies: self.energies.iter().rev().map(|e| -e).collect(),
            basis: DMatrix::from_fn(n, n, |r, c| self.basis[(r, n - 1 - c)]),
        }
    }

    /// `V diag(E) V†`.
    pub fn reconstruct(&self) -> DMatrix<C64> {
        let scaled = DMatrix::from_fn(self.dim(), self.dim(), |r, c| self.basis[(r, c)] * self.energies[c]);
        scaled * self.basis.adjoint()
    }

    /// Max-entry deviation of `V† V` from the identity.
    pub fn unitarity_defect(&self) -> f64 {
        let g = self.basis.adjoint() * &self.basis;
        let id = DMatrix::<C64>::identity(self.dim(), self.dim());
        (g - id).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Indices `m` with `|E_m - center| <= half_width`; contiguous because energies are sorted.
    pub fn shell(&self, center: f64, half_width: f64) -> std::ops::Range<usize> {
        let lo = self.energies.partition_point(|&e| e < center - half_width);
        let hi = self.energies.partition_point(|&e| e <= center + half_width);
        lo..hi.max(lo)
    }

    /// Expands a computational-basis vector in this eigenbasis, normalizing it.
    pub fn state_from_vector(&self, psi: &DVector<C64>) -> Result<StateVector> {
        self.check_dim(psi.len())?;
        let a = self.basis.adjoint() * psi;
        StateVector::from_unnormalized(a.iter().copied().collect())
    }

    /// Computational-basis vector `ψ = Σ a_m ψ_m`.
    pub fn to_vector(&self, state: &StateVector) -> Result<DVector<C64>> {
        self.check_dim(state.dim())?;
        Ok(&self.basis * DVector::from_column_slice(&state.amplitudes))
    }

    /// Re-expresses `state` (given in this eigenbasis) in the eigenbasis of `target`.
    pub fn transfer(&self, state: &StateVector, target: &EigenSystem) -> Result<StateVector> {
        let psi = self.to_vector(state)?;
        target.check_dim(psi.len())?;
        let a = target.basis.adjoint() * psi;
        Ok(StateVector {
            amplitudes: a.iter().copied().collect(),
        })
    }

    /// `V† A V`, for repeated expectation values without re-expanding the state.
    pub fn to_eigenbasis(&self, a: &HermitianOperator) -> Result<EigenbasisOperator> {
        self.check_dim(a.dim())?;
        Ok(EigenbasisOperator {
            matrix: self.basis.adjoint() * a.matrix() * &self.basis,
        })
    }

    fn check_dim(&self, got: usize) -> Result<()> {
        if got != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got,
            });
        }
        Ok(())
    }
}

/// Amplitudes over the eigenstates of an [`EigenSystem`].
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    amplitudes: Vec<C64>,
}

impl StateVector {
    /// Accepts amplitudes whose squared norm is 1 within `NORM_TOLERANCE`.
    pub fn new(amplitudes: Vec<C64>) -> Result<Self> {
        let s = StateVector { amplitudes };
        let n = s.norm_sqr();
        if (n - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::NotNormalized(n.sqrt()));
        }
        Ok(s)
    }

    pub fn from_unnormalized(amplitudes: Vec<C64>) -> Result<Self> {
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::ZeroState);
        }
        Ok(StateVector {
            amplitudes: amplitudes.into_iter().map(|a| a / norm).collect(),
        })
    }

    pub fn eigenstate(dim: usize, m: usize) -> Self {
        let mut amplitudes = vec![C64::new(0.0, 0.0); dim];
        amplitudes[m] = C64::new(1.0, 0.0);
        StateVector { amplitudes }
    }

    pub(crate) fn from_raw(amplitudes: Vec<C64>) -> Self {
        StateVector { amplitudes }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `⟨self|other⟩`; both states must be in the same eigenbasis.
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// `|⟨self|other⟩|²`.
    pub fn fidelity(&self, other: &StateVector) -> Result<f64> {
        self.inner(other).map(|z| z.norm_sqr())
    }

    /// Total occupation of the eigenstates in `range`.
    pub fn weight_in(&self, range: std::ops::Range<usize>) -> f64 {
        self.amplitudes[range].iter().map(|a| a.norm_sqr()).sum()
    }
}

pub fn evolve(state: &StateVector, eig: &EigenSystem, t: f64) -> Result<StateVector> {
    eig.check_dim(state.dim())?;
    let amplitudes = state
        .amplitudes
        .iter()
        .zip(&eig.energies)
        .map(|(a, &e)| if t == 0.0 { *a } else { a * C64::from_polar(1.0, -e * t) })
        .collect();
    Ok(StateVector { amplitudes })
}

/// `|a_m|^2` for every eigenstate.
pub fn occupations(state: &StateVector) -> Vec<f64> {
    state.amplitudes.iter().map(|a| a.norm_sqr()).collect()
}

/// `Σ |a_m|^2 E_m`.
pub fn energy_expectation(state: &StateVector, eig: &EigenSystem) -> f64 {
    state
        .amplitudes
        .iter()
        .zip(&eig.energies)
        .map(|(a, e)| a.norm_sqr() * e)
        .sum()
}

/// `⟨ψ|A|ψ⟩` for an operator given in the computational basis.
pub fn observable_expectation(state: &StateVector, eig: &EigenSystem, a: &HermitianOperator) -> Result<f64> {
    if a.dim() != eig.dim() {
        return Err(Error::DimensionMismatch {
            expected: eig.dim(),
            got: a.dim(),
        });
    }
    let psi = eig.to_vector(state)?;
    let a_psi = a.matrix() * &psi;
    Ok(psi.dotc(&a_psi).re)
}

/// An operator already rotated into an eigenbasis.
#[derive(Clone, Debug)]
pub struct EigenbasisOperator {
    matrix: DMatrix<C64>,
}

impl EigenbasisOperator {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// `⟨m|A|m⟩`.
    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|m| self.matrix[(m, m)].re).collect()
    }

    /// `⟨ψ|A|ψ⟩`, skipping eigenstates with exactly zero amplitude.
    pub fn expectation(&self, state: &StateVector) -> Result<f64> {
        if state.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: state.dim(),
            });
        }
        let support: Vec<usize> = state
            .amplitudes
            .iter()
            .enumerate()
            .filter(|(_, a)| a.re != 0.0 || a.im != 0.0)
            .map(|(m, _)| m)
            .collect();
        let mut acc = C64::new(0.0, 0.0);
        for &c in &support {
            let mut col = C64::new(0.0, 0.0);
            for &r in &support {
                col += state.amplitudes[r].conj() * self.matrix[(r, c)];
            }
            acc += col * state.amplitudes[c];
        }
        Ok(acc.re)
    }
}

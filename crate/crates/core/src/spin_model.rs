//! Finite spin-1/2 systems and their dense energy operators.
//!
//! Basis convention: index `b` of a `2^n` vector encodes spin `i` in bit
//! `n - 1 - i` (spin 0 is the most significant factor of the tensor product),
//! and a zero bit means spin up (`σz = +1`). With `ħ = 1` the Zeeman term of
//! spin `i` is `ω_i σz_i / 2`, and pair terms use spin operators `S = σ/2`.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::Add;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::seed;

pub type C64 = Complex64;

/// Largest system `build_hamiltonian` accepts unless told otherwise.
pub const DEFAULT_MAX_SPINS: usize = 14;

const ZERO: C64 = C64::new(0.0, 0.0);

/// Dense complex matrix known to be Hermitian to within `HERMITIAN_TOLERANCE`.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianOperator {
    matrix: DMatrix<C64>,
}

pub const HERMITIAN_TOLERANCE: f64 = 1e-12;

impl HermitianOperator {
    pub fn new(matrix: DMatrix<C64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::DimensionMismatch {
                expected: matrix.nrows(),
                got: matrix.ncols(),
            });
        }
        let op = HermitianOperator { matrix };
        let (row, col, deviation) = op.hermiticity_defect();
        if deviation > HERMITIAN_TOLERANCE {
            return Err(Error::NotHermitian { row, col, deviation });
        }
        Ok(op)
    }

    pub(crate) fn from_matrix_unchecked(matrix: DMatrix<C64>) -> Self {
        HermitianOperator { matrix }
    }

    pub fn zeros(dim: usize) -> Self {
        HermitianOperator {
            matrix: DMatrix::zeros(dim, dim),
        }
    }

    pub fn identity(dim: usize) -> Self {
        HermitianOperator {
            matrix: DMatrix::identity(dim, dim),
        }
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let n = values.len();
        let mut matrix = DMatrix::zeros(n, n);
        for (k, &v) in values.iter().enumerate() {
            matrix[(k, k)] = C64::new(v, 0.0);
        }
        HermitianOperator { matrix }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn entry(&self, row: usize, col: usize) -> C64 {
        self.matrix[(row, col)]
    }

    /// Worst violation of `H[r,c] = conj(H[c,r])` and where it occurs.
    pub fn hermiticity_defect(&self) -> (usize, usize, f64) {
        let n = self.dim();
        let mut worst = (0, 0, 0.0);
        for c in 0..n {
            for r in 0..=c {
                let d = (self.matrix[(r, c)] - self.matrix[(c, r)].conj()).norm();
                if d > worst.2 {
                    worst = (r, c, d);
                }
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_defect().2 <= tol
    }

    pub fn max_abs_diff(&self, other: &HermitianOperator) -> f64 {
        assert_eq!(self.dim(), other.dim(), "operator dimensions differ");
        self.matrix
            .iter()
            .zip(other.matrix.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.matrix.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        HermitianOperator {
            matrix: &self.matrix * C64::new(factor, 0.0),
        }
    }

    /// Largest |eigenvalue|, from a full eigenvalue computation.
    pub fn spectral_radius(&self) -> f64 {
        if self.dim() == 0 {
            return 0.0;
        }
        self.matrix
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .fold(0.0, |m, e| m.max(e.abs()))
    }
}

impl Add for &HermitianOperator {
    type Output = HermitianOperator;

    fn add(self, rhs: &HermitianOperator) -> HermitianOperator {
        HermitianOperator {
            matrix: &self.matrix + &rhs.matrix,
        }
    }
}

/// Entrywise negation; evolving under `-H` for time `t` equals evolving under `H` for `-t`.
pub fn negate(h: &HermitianOperator) -> HermitianOperator {
    HermitianOperator {
        matrix: -h.matrix.clone(),
    }
}

/// Imperfect sign reversal `-H + ε V`.
///
/// `V` is a seeded GUE-style Hermitian matrix rescaled so that its spectral
/// radius equals that of `H`. With `epsilon == 0` the result is exactly `negate(h)`.
pub fn perturb_reversal(h: &HermitianOperator, epsilon: f64, seed: u64) -> Result<HermitianOperator> {
    if !epsilon.is_finite() || epsilon < 0.0 {
        return Err(crate::error::invalid("epsilon", format!("{epsilon} must be finite and >= 0")));
    }
    let reversed = negate(h);
    if epsilon == 0.0 {
        return Ok(reversed);
    }
    let n = h.dim();
    let mut rng = seed::rng(seed);
    let mut v = DMatrix::<C64>::zeros(n, n);
    for c in 0..n {
        let d: f64 = StandardNormal.sample(&mut rng);
        v[(c, c)] = C64::new(d, 0.0);
        for r in 0..c {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            let z = C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2;
            v[(r, c)] = z;
            v[(c, r)] = z.conj();
        }
    }
    let v = HermitianOperator::from_matrix_unchecked(v);
    let target = h.spectral_radius();
    let scale = if target == 0.0 {
        0.0
    } else {
        epsilon * target / v.spectral_radius()
    };
    Ok(&reversed + &v.scaled(scale))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CouplingForm {
    IsingZz,
    HeisenbergXxx,
    SecularDipolar,
}

impl CouplingForm {
    pub fn name(self) -> &'static str {
        match self {
            CouplingForm::IsingZz => "ising-zz",
            CouplingForm::HeisenbergXxx => "heisenberg-xxx",
            CouplingForm::SecularDipolar => "secular-dipolar",
        }
    }

    /// (diagonal coefficient of `s_i s_j`, amplitude of the flip-flop term) for coupling `J`.
    fn pair_terms(self, strength: f64) -> (f64, f64) {
        match self {
            CouplingForm::IsingZz => (strength / 4.0, 0.0),
            CouplingForm::HeisenbergXxx => (strength / 4.0, strength / 2.0),
            // J (2 SzSz - SxSx - SySy)
            CouplingForm::SecularDipolar => (strength / 2.0, -strength / 2.0),
        }
    }
}

impl fmt::Display for CouplingForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CouplingForm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ising-zz" => Ok(CouplingForm::IsingZz),
            "heisenberg-xxx" => Ok(CouplingForm::HeisenbergXxx),
            "secular-dipolar" => Ok(CouplingForm::SecularDipolar),
            other => Err(Error::UnknownCouplingForm(other.to_string())),
        }
    }
}

/// A validated set of spins, their Zeeman frequencies and pair couplings.
#[derive(Clone, Debug, PartialEq)]
pub struct SpinSystem {
    zeeman_frequencies: Vec<f64>,
    // keys always (i, j) with i < j
    couplings: BTreeMap<(usize, usize), f64>,
    coupling_form: CouplingForm,
}

impl SpinSystem {
    pub fn new<I>(zeeman_frequencies: Vec<f64>, couplings: I, coupling_form: CouplingForm) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let n = zeeman_frequencies.len();
        if n == 0 {
            return Err(Error::NoSpins);
        }
        if let Some(w) = zeeman_frequencies.iter().find(|w| !w.is_finite()) {
            return Err(crate::error::invalid("zeeman_frequencies", format!("{w} is not finite")));
        }
        let mut map = BTreeMap::new();
        for (i, j, strength) in couplings {
            if i >= n || j >= n {
                return Err(Error::CouplingIndex { i, j, n_spins: n });
            }
            if i == j {
                return Err(Error::SelfCoupling(i));
            }
            if !strength.is_finite() {
                return Err(crate::error::invalid("couplings", format!("strength {strength} is not finite")));
            }
            let key = (i.min(j), i.max(j));
            match map.get(&key) {
                Some(&prev) if prev != strength => {
                    return Err(Error::AsymmetricCoupling {
                        i,
                        j,
                        a: prev,
                        b: strength,
                    })
                }
                _ => {
                    map.insert(key, strength);
                }
            }
        }
        Ok(SpinSystem {
            zeeman_frequencies,
            couplings: map,
            coupling_form,
        })
    }

    /// `n` spins sharing one Zeeman frequency, no couplings.
    pub fn uniform(n: usize, frequency: f64) -> Result<Self> {
        Self::new(vec![frequency; n], std::iter::empty(), CouplingForm::IsingZz)
    }

    pub fn n_spins(&self) -> usize {
        self.zeeman_frequencies.len()
    }

    pub fn dim(&self) -> usize {
        1usize << self.n_spins()
    }

    pub fn zeeman_frequencies(&self) -> &[f64] {
        &self.zeeman_frequencies
    }

    pub fn coupling_form(&self) -> CouplingForm {
        self.coupling_form
    }

    /// Coupling strength for the pair, in either order.
    pub fn coupling(&self, i: usize, j: usize) -> f64 {
        self.couplings
            .get(&(i.min(j), i.max(j)))
            .copied()
            .unwrap_or(0.0)
    }

    /// Couplings as `(i, j, J)` with `i < j`.
    pub fn couplings(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.couplings.iter().map(|(&(i, j), &s)| (i, j, s))
    }

    pub fn is_spin_up(&self, basis_index: usize, spin: usize) -> bool {
        basis_index >> (self.n_spins() - 1 - spin) & 1 == 0
    }

    fn spin_mask(&self, spin: usize) -> usize {
        1usize << (self.n_spins() - 1 - spin)
    }

    fn sign(&self, basis_index: usize, spin: usize) -> f64 {
        if self.is_spin_up(basis_index, spin) {
            1.0
        } else {
            -1.0
        }
    }
}

/// `H = H0 + Hint` for a spin system.
#[derive(Clone, Debug, PartialEq)]
pub struct Hamiltonian {
    pub total: HermitianOperator,
    pub zeeman: HermitianOperator,
    pub interaction: HermitianOperator,
}

pub fn build_hamiltonian(system: &SpinSystem) -> Result<Hamiltonian> {
    build_hamiltonian_with_limit(system, DEFAULT_MAX_SPINS)
}

pub fn build_hamiltonian_with_limit(system: &SpinSystem, max_spins: usize) -> Result<Hamiltonian> {
    let n = system.n_spins();
    if n > max_spins || n >= usize::BITS as usize / 2 {
        return Err(Error::TooManySpins { n_spins: n, max: max_spins });
    }
    let dim = system.dim();

    let zeeman_diag: Vec<f64> = (0..dim)
        .map(|b| {
            system
                .zeeman_frequencies
                .iter()
                .enumerate()
                .map(|(i, w)| 0.5 * w * system.sign(b, i))
                .sum()
        })
        .collect();
    let zeeman = HermitianOperator::diagonal(&zeeman_diag);

    let mut hint = DMatrix::<C64>::zeros(dim, dim);
    for (i, j, strength) in system.couplings() {
        let (zz, flip) = system.coupling_form.pair_terms(strength);
        let mask = system.spin_mask(i) | system.spin_mask(j);
        for b in 0..dim {
            let si = system.sign(b, i);
            let sj = system.sign(b, j);
            hint[(b, b)] += C64::new(zz * si * sj, 0.0);
            if flip != 0.0 && si != sj {
                hint[(b ^ mask, b)] += C64::new(flip, 0.0);
            }
        }
    }
    let interaction = HermitianOperator::from_matrix_unchecked(hint);
    let total = &zeeman + &interaction;
    Ok(Hamiltonian {
        total,
        zeeman,
        interaction,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Pauli {
    X,
    Y,
    Z,
}

/// Named observables on a spin system.
#[derive(Clone, Debug, PartialEq)]
pub enum Observable {
    Identity,
    /// Pauli matrix on one spin (eigenvalues ±1).
    Site(Pauli, usize),
    /// Sum of one Pauli matrix over all spins.
    Collective(Pauli),
    Hamiltonian,
    Zeeman,
    Interaction,
}

impl FromStr for Observable {
    type Err = Error;

    /// Accepts `identity`, `hamiltonian`, `zeeman`, `interaction`, `sx:3`, `sz:total`, ...
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::UnknownObservable(s.to_string());
        match s {
            "identity" => return Ok(Observable::Identity),
            "hamiltonian" => return Ok(Observable::Hamiltonian),
            "zeeman" => return Ok(Observable::Zeeman),
            "interaction" => return Ok(Observable::Interaction),
            _ => {}
        }
        let (axis, site) = s.split_once(':').ok_or_else(bad)?;
        let pauli = match axis {
            "sx" => Pauli::X,
            "sy" => Pauli::Y,
            "sz" => Pauli::Z,
            _ => return Err(bad()),
        };
        if site == "total" {
            Ok(Observable::Collective(pauli))
        } else {
            site.parse().map(|i| Observable::Site(pauli, i)).map_err(|_| bad())
        }
    }
}

impl fmt::Display for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let axis = |p: &Pauli| match p {
            Pauli::X => "sx",
            Pauli::Y => "sy",
            Pauli::Z => "sz",
        };
        match self {
            Observable::Identity => f.write_str("identity"),
            Observable::Hamiltonian => f.write_str("hamiltonian"),
            Observable::Zeeman => f.write_str("zeeman"),
            Observable::Interaction => f.write_str("interaction"),
            Observable::Site(p, i) => write!(f, "{}:{i}", axis(p)),
            Observable::Collective(p) => write!(f, "{}:total", axis(p)),
        }
    }
}

/// Pauli matrix acting on `spin`, identity elsewhere.
pub fn site_operator(system: &SpinSystem, pauli: Pauli, spin: usize) -> Result<HermitianOperator> {
    let n = system.n_spins();
    if spin >= n {
        return Err(Error::UnknownObservable(format!("spin {spin} of {n}")));
    }
    let dim = system.dim();
    let mask = system.spin_mask(spin);
    let mut m = DMatrix::<C64>::zeros(dim, dim);
    for b in 0..dim {
        let up = system.is_spin_up(b, spin);
        match pauli {
            Pauli::Z => m[(b, b)] = C64::new(if up { 1.0 } else { -1.0 }, 0.0),
            Pauli::X => m[(b ^ mask, b)] = C64::new(1.0, 0.0),
            // σy|↑> = i|↓>, σy|↓> = -i|↑>
            Pauli::Y => m[(b ^ mask, b)] = C64::new(0.0, if up { 1.0 } else { -1.0 }),
        }
    }
    Ok(HermitianOperator::from_matrix_unchecked(m))
}

pub fn observable_operator(
    system: &SpinSystem,
    hamiltonian: &Hamiltonian,
    observable: &Observable,
) -> Result<HermitianOperator> {
    Ok(match observable {
        Observable::Identity => HermitianOperator::identity(system.dim()),
        Observable::Hamiltonian => hamiltonian.total.clone(),
        Observable::Zeeman => hamiltonian.zeeman.clone(),
        Observable::Interaction => hamiltonian.interaction.clone(),
        Observable::Site(p, i) => site_operator(system, *p, *i)?,
        Observable::Collective(p) => {
            let mut acc = HermitianOperator::zeros(system.dim());
            for i in 0..system.n_spins() {
                acc = &acc + &site_operator(system, *p, i)?;
            }
            acc
        }
    })
}

/// Computational basis vector; `bits[i]` true means spin `i` is down.
pub fn basis_vector(system: &SpinSystem, down: &[bool]) -> Result<DVector<C64>> {
    if down.len() != system.n_spins() {
        return Err(Error::DimensionMismatch {
            expected: system.n_spins(),
            got: down.len(),
        });
    }
    let index = down
        .iter()
        .enumerate()
        .filter(|(_, &d)| d)
        .fold(0usize, |acc, (i, _)| acc | system.spin_mask(i));
    let mut v = DVector::from_element(system.dim(), ZERO);
    v[index] = C64::new(1.0, 0.0);
    Ok(v)
}

/// Tensor product of single-spin states `(up amplitude, down amplitude)`.
pub fn product_vector(system: &SpinSystem, factors: &[(C64, C64)]) -> Result<DVector<C64>> {
    if factors.len() != system.n_spins() {
        return Err(Error::DimensionMismatch {
            expected: system.n_spins(),
            got: factors.len(),
        });
    }
    Ok(DVector::from_fn(system.dim(), |b, _| {
        factors
            .iter()
            .enumerate()
            .fold(C64::new(1.0, 0.0), |acc, (i, &(up, down))| {
                acc * if system.is_spin_up(b, i) { up } else { down }
            })
    }))
}

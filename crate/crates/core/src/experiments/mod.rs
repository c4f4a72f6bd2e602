//! Reproducible protocols built on the propagator and the jump channel.
//!
//! Every protocol is a pure function of its inputs and a trajectory seed.
//! The Hamiltonian and its eigensystem are computed once per system in a
//! [`PreparedSystem`] and shared read-only between trajectories.

mod boltzmann;
mod correlation;
mod echo;
mod equilibration;
mod ergodicity;

pub use boltzmann::{boltzmann_check, boltzmann_distance, BoltzmannCheck, BoltzmannParams, BoltzmannSetup};
pub use correlation::{correlation_experiment, CorrelationParams, MIN_CORRELATION_PAIRS};
pub use echo::{echo_experiment, EchoResult};
pub use equilibration::{equilibration_experiment, EquilibrationResult};
pub use ergodicity::{ergodicity_check, ErgodicityResult};

use std::fmt;
use std::str::FromStr;

use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Error, Result};
use crate::propagator::{eigendecompose, EigenSystem, EigenbasisOperator, StateVector};
use crate::seed;
use crate::spin_model::{
    basis_vector, build_hamiltonian_with_limit, observable_operator, product_vector, Hamiltonian, HermitianOperator,
    Observable, SpinSystem, C64, DEFAULT_MAX_SPINS,
};
use crate::xjump::{aggregate_rate, JumpTrajectory, XJumpConfig};

/// Burn-in before time averaging, in mean inter-jump intervals.
pub const BURN_IN_INTERVALS: f64 = 10.0;

// Seed streams; jump events use the small indices.
pub(crate) const STREAM_INITIAL: u64 = u64::MAX - 1;
pub(crate) const STREAM_FORWARD: u64 = u64::MAX - 2;
pub(crate) const STREAM_BACKWARD: u64 = u64::MAX - 3;
pub(crate) const STREAM_PERTURBATION: u64 = u64::MAX - 4;
pub(crate) const STREAM_TRAJECTORY: u64 = u64::MAX - 5;

/// A spin system with its Hamiltonian and eigensystem.
#[derive(Clone, Debug)]
pub struct PreparedSystem {
    pub system: SpinSystem,
    pub hamiltonian: Hamiltonian,
    pub eigen: EigenSystem,
}

impl PreparedSystem {
    pub fn new(system: SpinSystem) -> Result<Self> {
        Self::with_max_spins(system, DEFAULT_MAX_SPINS)
    }

    pub fn with_max_spins(system: SpinSystem, max_spins: usize) -> Result<Self> {
        let hamiltonian = build_hamiltonian_with_limit(&system, max_spins)?;
        let eigen = eigendecompose(&hamiltonian.total)?;
        Ok(PreparedSystem {
            system,
            hamiltonian,
            eigen,
        })
    }

    pub fn n_spins(&self) -> usize {
        self.system.n_spins()
    }

    pub fn operator(&self, observable: &Observable) -> Result<HermitianOperator> {
        observable_operator(&self.system, &self.hamiltonian, observable)
    }

    pub fn eigen_operator(&self, observable: &Observable) -> Result<EigenbasisOperator> {
        self.eigen.to_eigenbasis(&self.operator(observable)?)
    }

    /// Mean time between jumps for this system size, infinite with the channel off.
    pub fn mean_jump_interval(&self, jumps: &XJumpConfig) -> f64 {
        1.0 / aggregate_rate(self.n_spins() as f64, jumps.per_particle_rate)
    }

    /// Default burn-in: `BURN_IN_INTERVALS` mean jump intervals, zero with the channel off.
    pub fn default_burn_in(&self, jumps: &XJumpConfig) -> f64 {
        let interval = self.mean_jump_interval(jumps);
        if interval.is_finite() {
            BURN_IN_INTERVALS * interval
        } else {
            0.0
        }
    }
}

/// Named initial states, prepared in the computational basis.
#[derive(Clone, Debug, PartialEq)]
pub enum InitialState {
    /// Computational basis state; `true` marks a spin down.
    Basis(Vec<bool>),
    /// Alternating up/down, starting with spin 0 up.
    Neel,
    /// Every spin along +x.
    XPolarized,
    /// Product of independently random single-spin states (seeded).
    RandomProduct,
    /// Gaussian random vector over the full space (seeded).
    Random,
}

impl FromStr for InitialState {
    type Err = Error;

    /// `neel`, `x-polarized`, `random-product`, `random`, or `basis:0110...` with `1` = down.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "neel" => Ok(InitialState::Neel),
            "x-polarized" => Ok(InitialState::XPolarized),
            "random-product" => Ok(InitialState::RandomProduct),
            "random" => Ok(InitialState::Random),
            _ => {
                let bits = s
                    .strip_prefix("basis:")
                    .ok_or_else(|| Error::InvalidInitialState(s.to_string()))?;
                bits.chars()
                    .map(|c| match c {
                        '0' => Ok(false),
                        '1' => Ok(true),
                        _ => Err(Error::InvalidInitialState(s.to_string())),
                    })
                    .collect::<Result<Vec<_>>>()
                    .map(InitialState::Basis)
            }
        }
    }
}

impl fmt::Display for InitialState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitialState::Neel => f.write_str("neel"),
            InitialState::XPolarized => f.write_str("x-polarized"),
            InitialState::RandomProduct => f.write_str("random-product"),
            InitialState::Random => f.write_str("random"),
            InitialState::Basis(bits) => {
                f.write_str("basis:")?;
                bits.iter().try_for_each(|&b| f.write_str(if b { "1" } else { "0" }))
            }
        }
    }
}

impl InitialState {
    /// Whether preparation depends on the seed.
    pub fn is_random(&self) -> bool {
        matches!(self, InitialState::RandomProduct | InitialState::Random)
    }

    /// The state in the eigenbasis of `prepared`.
    pub fn prepare(&self, prepared: &PreparedSystem, seed: u64) -> Result<StateVector> {
        let system = &prepared.system;
        let n = system.n_spins();
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        let mut rng = seed::rng(seed::derive(seed, STREAM_INITIAL));
        let mut gauss = || -> C64 {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            C64::new(re, im)
        };
        let psi = match self {
            InitialState::Basis(bits) => {
                if bits.len() != n {
                    return Err(Error::InvalidInitialState(format!("{} bits for {n} spins", bits.len())));
                }
                basis_vector(system, bits)?
            }
            InitialState::Neel => basis_vector(system, &(0..n).map(|i| i % 2 == 1).collect::<Vec<_>>())?,
            InitialState::XPolarized => {
                let s = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
                product_vector(system, &vec![(s, s); n])?
            }
            InitialState::RandomProduct => {
                let factors: Vec<(C64, C64)> = (0..n)
                    .map(|_| {
                        let (u, d) = (gauss(), gauss());
                        let norm = (u.norm_sqr() + d.norm_sqr()).sqrt();
                        if norm == 0.0 {
                            (one, zero)
                        } else {
                            (u / norm, d / norm)
                        }
                    })
                    .collect();
                product_vector(system, &factors)?
            }
            InitialState::Random => nalgebra::DVector::from_fn(system.dim(), |_, _| gauss()),
        };
        prepared.eigen.state_from_vector(&psi)
    }
}

/// Values of one observable at ascending times.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeries {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub label: String,
}

impl TimeSeries {
    pub fn new(times: Vec<f64>, values: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::DimensionMismatch {
                expected: times.len(),
                got: values.len(),
            });
        }
        if times.windows(2).any(|w| w[0] > w[1]) {
            return Err(invalid("times", "time stamps must be ascending"));
        }
        Ok(TimeSeries {
            times,
            values,
            label: label.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<f64> {
        self.values.last().copied()
    }
}

/// `n` evenly spaced times covering `[0, total]`.
pub(crate) fn even_times(total: f64, n: usize) -> Vec<f64> {
    (0..n).map(|j| total * j as f64 / (n - 1) as f64).collect()
}

/// Runs one jump trajectory and hands the state at each (ascending) sample time to `visit`.
/// Returns the number of jumps applied.
pub(crate) fn sample_trajectory(
    prepared: &PreparedSystem,
    initial: &StateVector,
    jumps: &XJumpConfig,
    times: &[f64],
    seed: u64,
    mut visit: impl FnMut(usize, f64, &StateVector) -> Result<()>,
) -> Result<usize> {
    let end = times.last().copied().unwrap_or(0.0);
    let mut traj = JumpTrajectory::new(
        initial.clone(),
        &prepared.eigen,
        jumps,
        prepared.n_spins(),
        end,
        seed::derive(seed, STREAM_TRAJECTORY),
    )?;
    for (k, &t) in times.iter().enumerate() {
        traj.advance_to(t)?;
        visit(k, t, traj.state())?;
    }
    Ok(traj.jumps_applied())
}

pub(crate) fn check_positive(name: &'static str, value: f64) -> Result<()> {
    if !(value > 0.0 && value.is_finite()) {
        return Err(invalid(name, format!("{value} must be finite and > 0")));
    }
    Ok(())
}

pub(crate) fn resolve_burn_in(prepared: &PreparedSystem, jumps: &XJumpConfig, burn_in: Option<f64>) -> Result<f64> {
    let b = burn_in.unwrap_or_else(|| prepared.default_burn_in(jumps));
    if !(b >= 0.0 && b.is_finite()) {
        return Err(invalid("burn_in", format!("{b} must be finite and >= 0")));
    }
    Ok(b)
}

/// Total-variation distance `½ Σ |p_i - q_i|`.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

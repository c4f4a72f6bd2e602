use crate::ensembles::{particle_level_probability, solve_beta, LevelSpec};
use crate::error::{invalid, Result};
use crate::propagator::StateVector;
use crate::spin_model::{product_vector, C64};
use crate::xjump::XJumpConfig;

use super::{check_positive, even_times, resolve_burn_in, sample_trajectory, PreparedSystem};

/// Interaction strength, relative to the Zeeman splitting, above which a
/// system no longer counts as non-interacting.
pub const NEGLIGIBLE_INTERACTION: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq)]
pub struct BoltzmannParams {
    /// Total energy of the initial state.
    pub target_energy: f64,
    pub total_time: f64,
    pub n_samples: usize,
    pub burn_in: Option<f64>,
}

/// Target distribution and starting state shared by every seed.
#[derive(Clone, Debug)]
pub struct BoltzmannSetup {
    /// Single-spin levels `(-|ω|/2, +|ω|/2)`.
    pub levels: LevelSpec,
    pub beta: f64,
    /// Canonical probabilities of the lower and upper single-spin level.
    pub target: Vec<f64>,
    /// Product state with energy expectation equal to the target energy.
    pub initial: StateVector,
    /// Mean per-spin distance of the initial state from the target.
    pub initial_distance: f64,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct BoltzmannCheck {
    /// Seed-averaged mean per-spin total-variation distance.
    pub distance: f64,
    pub per_seed: Vec<f64>,
    pub setup: BoltzmannSetup,
}

impl BoltzmannSetup {
    pub fn new(prepared: &PreparedSystem, target_energy: f64) -> Result<Self> {
        let freqs = prepared.system.zeeman_frequencies();
        let splitting = freqs[0].abs();
        if splitting == 0.0 || freqs.iter().any(|w| (w.abs() - splitting).abs() > 1e-12 * splitting) {
            return Err(invalid(
                "zeeman_frequencies",
                "the single-particle check needs identical, non-zero Zeeman splittings",
            ));
        }
        let n = prepared.n_spins();
        let levels = LevelSpec::new(vec![-splitting / 2.0, splitting / 2.0], None)?;
        let beta = solve_beta(&levels, n as u64, target_energy)?;
        let target = particle_level_probability(&levels, beta)?;

        let mut warnings = Vec::new();
        let interaction = prepared.hamiltonian.interaction.spectral_radius();
        if interaction > NEGLIGIBLE_INTERACTION * splitting {
            let msg = format!(
                "interaction norm {interaction:.3e} is not negligible against the Zeeman splitting {splitting:.3e}"
            );
            log::warn!("{msg}");
            warnings.push(msg);
        }

        // Fill excitations spin by spin: whole spins first, the remainder on one spin.
        let mut excitations = (target_energy + n as f64 * splitting / 2.0) / splitting;
        let factors: Vec<(C64, C64)> = freqs
            .iter()
            .map(|&w| {
                let p = excitations.clamp(0.0, 1.0);
                excitations -= p;
                let (ground, excited) = (C64::new((1.0 - p).sqrt(), 0.0), C64::new(p.sqrt(), 0.0));
                // spin up is the upper level when ω > 0
                if w > 0.0 {
                    (excited, ground)
                } else {
                    (ground, excited)
                }
            })
            .collect();
        let initial = prepared
            .eigen
            .state_from_vector(&product_vector(&prepared.system, &factors)?)?;
        let initial_distance = mean_spin_distance(&upper_probabilities(prepared, &initial)?, target[1]);
        Ok(BoltzmannSetup {
            levels,
            beta,
            target,
            initial,
            initial_distance,
            warnings,
        })
    }
}

/// Probability of each spin being in its upper Zeeman level.
fn upper_probabilities(prepared: &PreparedSystem, state: &StateVector) -> Result<Vec<f64>> {
    let system = &prepared.system;
    let psi = prepared.eigen.to_vector(state)?;
    let mut upper = vec![0.0; system.n_spins()];
    for (b, amp) in psi.iter().enumerate() {
        let p = amp.norm_sqr();
        for (i, (u, w)) in upper.iter_mut().zip(system.zeeman_frequencies()).enumerate() {
            if system.is_spin_up(b, i) == (*w > 0.0) {
                *u += p;
            }
        }
    }
    Ok(upper)
}

fn mean_spin_distance(upper: &[f64], target_upper: f64) -> f64 {
    // two-level total variation is |Δp|
    upper.iter().map(|u| (u - target_upper).abs()).sum::<f64>() / upper.len() as f64
}

/// Mean per-spin distance between time-averaged level populations and the canonical target, one seed.
pub fn boltzmann_distance(
    prepared: &PreparedSystem,
    setup: &BoltzmannSetup,
    jumps: &XJumpConfig,
    params: &BoltzmannParams,
    seed: u64,
) -> Result<f64> {
    check_positive("total_time", params.total_time)?;
    if params.n_samples < 2 {
        return Err(invalid("n_samples", format!("{} < 2", params.n_samples)));
    }
    let burn_in = resolve_burn_in(prepared, jumps, params.burn_in)?;
    let times = even_times(params.total_time, params.n_samples);
    let mut averaged = vec![0.0; prepared.n_spins()];
    let mut used = 0usize;
    sample_trajectory(prepared, &setup.initial, jumps, &times, seed, |_, t, state| {
        if t >= burn_in {
            let upper = upper_probabilities(prepared, state)?;
            averaged.iter_mut().zip(upper).for_each(|(a, u)| *a += u);
            used += 1;
        }
        Ok(())
    })?;
    if used == 0 {
        return Err(invalid("burn_in", format!("burn-in {burn_in} exceeds the run length")));
    }
    averaged.iter_mut().for_each(|a| *a /= used as f64);
    Ok(mean_spin_distance(&averaged, setup.target[1]))
}

/// Drives a non-interacting system from a product state at the target energy
/// and compares time-averaged single-spin populations with the canonical law.
pub fn boltzmann_check(
    prepared: &PreparedSystem,
    jumps: &XJumpConfig,
    params: &BoltzmannParams,
    seeds: &[u64],
) -> Result<BoltzmannCheck> {
    if seeds.is_empty() {
        return Err(invalid("seeds", "at least one seed is required"));
    }
    let setup = BoltzmannSetup::new(prepared, params.target_energy)?;
    let per_seed = seeds
        .iter()
        .map(|&s| boltzmann_distance(prepared, &setup, jumps, params, s))
        .collect::<Result<Vec<_>>>()?;
    Ok(BoltzmannCheck {
        distance: per_seed.iter().sum::<f64>() / per_seed.len() as f64,
        per_seed,
        setup,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::propagator::energy_expectation;
    use crate::spin_model::{CouplingForm, SpinSystem};
    use crate::xjump::JumpMechanism;

    #[test]
    fn setup_hits_the_target_energy() {
        let p = PreparedSystem::new(SpinSystem::uniform(4, 1.0).unwrap()).unwrap();
        let s = BoltzmannSetup::new(&p, -2.0 + 4.0 / 3.0).unwrap();
        assert!((energy_expectation(&s.initial, &p.eigen) - (-2.0 + 4.0 / 3.0)).abs() < 1e-12);
        assert!((s.beta - std::f64::consts::LN_2).abs() < 1e-9);
        assert!((s.target[1] - 1.0 / 3.0).abs() < 1e-12);
        assert!(s.warnings.is_empty());
        // spins 0 fully excited, spin 1 at 1/3, rest ground
        let want = [2.0 / 3.0, 0.0, 1.0 / 3.0, 1.0 / 3.0];
        assert!((s.initial_distance - want.iter().sum::<f64>() / 4.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_and_warns() {
        let mixed = PreparedSystem::new(SpinSystem::new(vec![1.0, 2.0], [], CouplingForm::IsingZz).unwrap()).unwrap();
        assert!(BoltzmannSetup::new(&mixed, 0.0).is_err());
        let p = PreparedSystem::new(SpinSystem::uniform(3, 1.0).unwrap()).unwrap();
        assert!(BoltzmannSetup::new(&p, -1.5).is_err());
        let coupled =
            PreparedSystem::new(SpinSystem::new(vec![1.0; 3], [(0, 1, 0.5)], CouplingForm::IsingZz).unwrap()).unwrap();
        assert_eq!(BoltzmannSetup::new(&coupled, 0.0).unwrap().warnings.len(), 1);
    }

    #[test]
    fn frozen_without_jumps() {
        let p = PreparedSystem::new(SpinSystem::uniform(4, 1.0).unwrap()).unwrap();
        let off = XJumpConfig::disabled(&p.eigen);
        let params = BoltzmannParams {
            target_energy: -2.0 + 4.0 / 3.0,
            total_time: 30.0,
            n_samples: 20,
            burn_in: None,
        };
        let c = boltzmann_check(&p, &off, &params, &[1, 2]).unwrap();
        for d in &c.per_seed {
            assert!((d - c.setup.initial_distance).abs() < 1e-12);
        }
    }

    #[test]
    fn infinite_temperature_regime() {
        let p = PreparedSystem::new(SpinSystem::uniform(4, 1.0).unwrap()).unwrap();
        let cfg = XJumpConfig::new(0.5, 0.9, JumpMechanism::ShellHaar).unwrap();
        let params = BoltzmannParams {
            target_energy: 0.0,
            total_time: 300.0,
            n_samples: 600,
            burn_in: None,
        };
        let c = boltzmann_check(&p, &cfg, &params, &[1, 2, 3]).unwrap();
        assert!(c.setup.beta.abs() < 1e-12);
        assert!(c.distance < 0.05, "{}", c.distance);
    }
}

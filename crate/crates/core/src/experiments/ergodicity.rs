use crate::error::{invalid, Result};
use crate::propagator::{energy_expectation, EigenbasisOperator, StateVector};
use crate::xjump::XJumpConfig;

use super::{check_positive, resolve_burn_in, sample_trajectory, PreparedSystem};

#[derive(Clone, Debug, PartialEq)]
pub struct ErgodicityResult {
    /// Time average of `⟨A⟩` along the trajectory after burn-in.
    pub time_average: f64,
    /// Mean of the diagonal of `A` over the eigenstates in the initial energy shell.
    pub ensemble_average: f64,
    pub gap: f64,
    pub shell: std::ops::Range<usize>,
    pub n_samples: usize,
    pub n_jumps: usize,
}

/// Compares the long-time average of an observable with its microcanonical
/// average over the shell around the initial energy.
#[allow(clippy::too_many_arguments)]
pub fn ergodicity_check(
    prepared: &PreparedSystem,
    initial: &StateVector,
    a: &EigenbasisOperator,
    jumps: &XJumpConfig,
    trajectory_time: f64,
    sample_step: f64,
    burn_in: Option<f64>,
    seed: u64,
) -> Result<ErgodicityResult> {
    check_positive("trajectory_time", trajectory_time)?;
    check_positive("sample_step", sample_step)?;
    let burn_in = resolve_burn_in(prepared, jumps, burn_in)?;
    if burn_in >= trajectory_time {
        return Err(invalid("burn_in", format!("burn-in {burn_in} exceeds the run length {trajectory_time}")));
    }
    let eig = &prepared.eigen;
    let shell = eig.shell(energy_expectation(initial, eig), jumps.shell_half_width);
    if shell.is_empty() {
        return Err(invalid("shell_half_width", "the initial energy shell holds no eigenstates"));
    }
    let diagonal = a.diagonal();
    let ensemble_average = diagonal[shell.clone()].iter().sum::<f64>() / shell.len() as f64;

    let n_samples = ((trajectory_time - burn_in) / sample_step * (1.0 + 1e-12)).floor() as usize + 1;
    let times: Vec<f64> = (0..n_samples).map(|j| burn_in + j as f64 * sample_step).collect();
    let mut sum = 0.0;
    let n_jumps = sample_trajectory(prepared, initial, jumps, &times, seed, |_, _, state| {
        sum += a.expectation(state)?;
        Ok(())
    })?;
    let time_average = sum / n_samples as f64;
    Ok(ErgodicityResult {
        time_average,
        ensemble_average,
        gap: (time_average - ensemble_average).abs(),
        shell,
        n_samples,
        n_jumps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::InitialState;
    use crate::spin_model::{CouplingForm, Observable, Pauli, SpinSystem};
    use crate::xjump::JumpMechanism;

    fn system() -> PreparedSystem {
        let couplings: Vec<_> = (0..5).map(|i| (i, (i + 1) % 5, 0.03 + 0.007 * i as f64)).collect();
        PreparedSystem::new(SpinSystem::new(vec![1.0; 5], couplings, CouplingForm::SecularDipolar).unwrap()).unwrap()
    }

    #[test]
    fn jumps_close_the_gap() {
        let p = system();
        let init = InitialState::Basis(vec![true, true, false, false, false]).prepare(&p, 0).unwrap();
        let sz = p.eigen_operator(&Observable::Site(Pauli::Z, 0)).unwrap();
        let off = XJumpConfig::new(0.0, 0.3, JumpMechanism::ShellHaar).unwrap();
        let frozen = ergodicity_check(&p, &init, &sz, &off, 200.0, 0.5, None, 1).unwrap();
        // sector with two down spins, ten states; site average of σz is 1 - 2·2/5
        assert_eq!(frozen.shell.len(), 10);
        assert!((frozen.ensemble_average - 0.2).abs() < 1e-10);
        assert_eq!(frozen.n_jumps, 0);
        let on = XJumpConfig::new(0.2, 0.3, JumpMechanism::ShellHaar).unwrap();
        let mixed = ergodicity_check(&p, &init, &sz, &on, 2000.0, 0.5, None, 1).unwrap();
        assert!(mixed.n_jumps > 500);
        assert!(mixed.gap < 0.1, "{mixed:?}");
    }

    #[test]
    fn rejects_bad_parameters() {
        let p = system();
        let init = InitialState::Neel.prepare(&p, 0).unwrap();
        let sz = p.eigen_operator(&Observable::Site(Pauli::Z, 0)).unwrap();
        let on = XJumpConfig::new(0.2, 0.3, JumpMechanism::ShellHaar).unwrap();
        assert!(ergodicity_check(&p, &init, &sz, &on, 0.0, 0.5, None, 1).is_err());
        assert!(ergodicity_check(&p, &init, &sz, &on, 10.0, 0.5, Some(20.0), 1).is_err());
        assert!(ergodicity_check(&p, &init, &sz, &on, 10.0, -1.0, None, 1).is_err());
    }
}

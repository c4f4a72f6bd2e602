use crate::error::Result;
use crate::propagator::{eigendecompose, EigenSystem, EigenbasisOperator, StateVector};
use crate::seed;
use crate::spin_model::perturb_reversal;
use crate::xjump::{JumpTrajectory, XJumpConfig};

use super::{check_positive, PreparedSystem, STREAM_BACKWARD, STREAM_FORWARD, STREAM_PERTURBATION};

#[derive(Clone, Debug, PartialEq)]
pub struct EchoResult {
    pub forward_time: f64,
    /// `|⟨ψ₀|ψ(2T)⟩|²`.
    pub fidelity: f64,
    /// Observable at `2T` over its initial value; `None` when the initial value vanishes.
    pub observable_recovery: Option<f64>,
    pub n_jumps: usize,
    pub seed: u64,
}

/// Forward evolution for `forward_time` under `H`, then the same time under
/// `perturb_reversal(H, reversal_epsilon)`, with the jump channel active on both legs.
pub fn echo_experiment(
    prepared: &PreparedSystem,
    initial: &StateVector,
    forward_time: f64,
    reversal_epsilon: f64,
    jumps: &XJumpConfig,
    observable: Option<&EigenbasisOperator>,
    seed: u64,
) -> Result<EchoResult> {
    check_positive("forward_time", forward_time)?;
    let n = prepared.n_spins();
    let eig = &prepared.eigen;

    let mut forward = JumpTrajectory::new(
        initial.clone(),
        eig,
        jumps,
        n,
        forward_time,
        seed::derive(seed, STREAM_FORWARD),
    )?;
    forward.advance_to(forward_time)?;
    let forward_jumps = forward.jumps_applied();
    let (midpoint, _) = forward.into_parts();

    // With an exact flip the reversed eigenbasis is the forward one in reverse
    // order, so amplitudes move over without a basis change.
    let perturbed: Option<EigenSystem> = if reversal_epsilon == 0.0 {
        None
    } else {
        let reversed = perturb_reversal(
            &prepared.hamiltonian.total,
            reversal_epsilon,
            seed::derive(seed, STREAM_PERTURBATION),
        )?;
        Some(eigendecompose(&reversed)?)
    };
    let negated;
    let (reversed_eig, start) = match &perturbed {
        Some(r) => (r, eig.transfer(&midpoint, r)?),
        None => {
            negated = eig.negated();
            (&negated, reverse_order(&midpoint))
        }
    };

    let mut backward = JumpTrajectory::new(
        start,
        reversed_eig,
        jumps,
        n,
        forward_time,
        seed::derive(seed, STREAM_BACKWARD),
    )?;
    backward.advance_to(forward_time)?;
    let n_jumps = forward_jumps + backward.jumps_applied();
    let (end, _) = backward.into_parts();
    let final_state = match &perturbed {
        Some(r) => r.transfer(&end, eig)?,
        None => reverse_order(&end),
    };

    let fidelity = initial.fidelity(&final_state)?;
    let observable_recovery = match observable {
        Some(a) => {
            let before = a.expectation(initial)?;
            let after = a.expectation(&final_state)?;
            (before.abs() > 1e-12).then(|| after / before)
        }
        None => None,
    };
    Ok(EchoResult {
        forward_time,
        fidelity,
        observable_recovery,
        n_jumps,
        seed,
    })
}

fn reverse_order(state: &StateVector) -> StateVector {
    StateVector::from_raw(state.amplitudes().iter().rev().copied().collect())
}

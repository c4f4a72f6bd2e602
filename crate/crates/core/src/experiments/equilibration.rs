use std::ops::Range;

use crate::error::{invalid, Result};
use crate::propagator::{energy_expectation, occupations, StateVector};
use crate::xjump::XJumpConfig;

use super::{check_positive, even_times, resolve_burn_in, sample_trajectory, total_variation, PreparedSystem, TimeSeries};

#[derive(Clone, Debug, PartialEq)]
pub struct EquilibrationResult {
    /// Total-variation distance between the running time average of the
    /// shell occupations (from the end of burn-in) and the uniform distribution on the shell.
    pub divergence: TimeSeries,
    /// Probability carried by the initial shell at every sample time.
    pub shell_weight: TimeSeries,
    /// Time-averaged occupations on the initial shell, normalized to one.
    pub histogram: Vec<f64>,
    /// Eigenstate indices of the initial energy shell.
    pub shell: Range<usize>,
    /// Largest `| |a_m(t)|² - |a_m(0)|² |` over samples and eigenstates.
    pub max_occupation_drift: f64,
    pub burn_in: f64,
    pub n_jumps: usize,
}

/// Samples occupations at `n_samples` evenly spaced times in `[0, total_time]`
/// and measures how far their time average on the initial energy shell is from uniform.
pub fn equilibration_experiment(
    prepared: &PreparedSystem,
    initial: &StateVector,
    total_time: f64,
    n_samples: usize,
    jumps: &XJumpConfig,
    burn_in: Option<f64>,
    seed: u64,
) -> Result<EquilibrationResult> {
    check_positive("total_time", total_time)?;
    if n_samples < 2 {
        return Err(invalid("n_samples", format!("{n_samples} < 2")));
    }
    let burn_in = resolve_burn_in(prepared, jumps, burn_in)?;
    let times = even_times(total_time, n_samples);
    if times.iter().filter(|&&t| t >= burn_in).count() < 2 {
        return Err(invalid(
            "burn_in",
            format!("burn-in {burn_in} leaves fewer than 2 samples before {total_time}"),
        ));
    }

    let e0 = energy_expectation(initial, &prepared.eigen);
    let shell = prepared.eigen.shell(e0, jumps.shell_half_width);
    if shell.is_empty() {
        return Err(invalid(
            "shell_half_width",
            format!("no eigenstate within {} of the initial energy {e0}", jumps.shell_half_width),
        ));
    }
    let uniform = vec![1.0 / shell.len() as f64; shell.len()];
    let occ0 = occupations(initial);

    let mut accumulated = vec![0.0; shell.len()];
    let mut divergence_t = Vec::new();
    let mut divergence = Vec::new();
    let mut weights = Vec::with_capacity(n_samples);
    let mut max_drift: f64 = 0.0;
    let n_jumps = sample_trajectory(prepared, initial, jumps, &times, seed, |_, t, state| {
        let occ = occupations(state);
        max_drift = occ
            .iter()
            .zip(&occ0)
            .fold(max_drift, |m, (a, b)| m.max((a - b).abs()));
        weights.push(occ[shell.clone()].iter().sum::<f64>());
        if t >= burn_in {
            accumulated
                .iter_mut()
                .zip(&occ[shell.clone()])
                .for_each(|(acc, o)| *acc += o);
            divergence_t.push(t);
            divergence.push(shell_divergence(&accumulated, &uniform));
        }
        Ok(())
    })?;

    let total: f64 = accumulated.iter().sum();
    let histogram = if total > 0.0 {
        accumulated.iter().map(|a| a / total).collect()
    } else {
        accumulated
    };
    Ok(EquilibrationResult {
        divergence: TimeSeries::new(divergence_t, divergence, "tv_to_uniform_shell")?,
        shell_weight: TimeSeries::new(times, weights, "initial_shell_weight")?,
        histogram,
        shell,
        max_occupation_drift: max_drift,
        burn_in,
        n_jumps,
    })
}

/// Distance of the normalized accumulation from uniform; 1 if the shell is empty of weight.
fn shell_divergence(accumulated: &[f64], uniform: &[f64]) -> f64 {
    let total: f64 = accumulated.iter().sum();
    if total <= 0.0 {
        return 1.0;
    }
    let p: Vec<f64> = accumulated.iter().map(|a| a / total).collect();
    total_variation(&p, uniform)
}

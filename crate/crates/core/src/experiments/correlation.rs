use crate::error::{invalid, Error, Result};
use crate::propagator::{EigenbasisOperator, StateVector};
use crate::xjump::XJumpConfig;

use super::{check_positive, resolve_burn_in, sample_trajectory, PreparedSystem, TimeSeries};

/// Fewest `(t, t + T)` pairs accepted for one lag.
pub const MIN_CORRELATION_PAIRS: usize = 30;

#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationParams {
    /// Lags `T`, ascending, each an integer multiple of `sample_step`.
    pub lags: Vec<f64>,
    pub trajectory_time: f64,
    pub sample_step: f64,
    pub burn_in: Option<f64>,
}

/// `R(f, g | T) = ⟨f(t + T) g(t)⟩ - ⟨f⟩⟨g⟩` estimated by time averages along one trajectory.
///
/// Expectation values are sampled every `sample_step` after burn-in. For each
/// lag the covariance uses only the overlapping pairs, so a constant `f`
/// gives exactly zero.
pub fn correlation_experiment(
    prepared: &PreparedSystem,
    initial: &StateVector,
    f: &EigenbasisOperator,
    g: &EigenbasisOperator,
    params: &CorrelationParams,
    jumps: &XJumpConfig,
    seed: u64,
) -> Result<TimeSeries> {
    check_positive("sample_step", params.sample_step)?;
    check_positive("trajectory_time", params.trajectory_time)?;
    if params.lags.is_empty() {
        return Err(invalid("lags", "at least one lag is required"));
    }
    if params.lags.windows(2).any(|w| w[0] >= w[1]) || params.lags[0] < 0.0 {
        return Err(invalid("lags", "lags must be non-negative and strictly ascending"));
    }
    let steps = params
        .lags
        .iter()
        .map(|&lag| {
            let k = (lag / params.sample_step).round();
            if (k * params.sample_step - lag).abs() > 1e-9 * lag.max(params.sample_step) {
                Err(invalid("lags", format!("{lag} is not a multiple of sample_step {}", params.sample_step)))
            } else {
                Ok(k as usize)
            }
        })
        .collect::<Result<Vec<_>>>()?;

    let burn_in = resolve_burn_in(prepared, jumps, params.burn_in)?;
    let usable = params.trajectory_time - burn_in;
    let n_samples = if usable >= 0.0 {
        (usable / params.sample_step * (1.0 + 1e-12)).floor() as usize + 1
    } else {
        0
    };
    let (&max_lag, &max_step) = (params.lags.last().unwrap(), steps.last().unwrap());
    let available = n_samples.saturating_sub(max_step);
    if available < MIN_CORRELATION_PAIRS {
        return Err(Error::TrajectoryTooShort {
            lag: max_lag,
            available,
            required: MIN_CORRELATION_PAIRS,
        });
    }

    let times: Vec<f64> = (0..n_samples).map(|j| burn_in + j as f64 * params.sample_step).collect();
    let same = std::ptr::eq(f, g);
    let mut fs = Vec::with_capacity(n_samples);
    let mut gs = Vec::with_capacity(n_samples);
    sample_trajectory(prepared, initial, jumps, &times, seed, |_, _, state| {
        let fv = f.expectation(state)?;
        fs.push(fv);
        gs.push(if same { fv } else { g.expectation(state)? });
        Ok(())
    })?;

    let values = steps.iter().map(|&k| lagged_covariance(&fs, &gs, k)).collect();
    TimeSeries::new(params.lags.clone(), values, "R(f,g|T)")
}

/// Covariance of `f[j + k]` and `g[j]` over the overlapping pairs.
fn lagged_covariance(f: &[f64], g: &[f64], k: usize) -> f64 {
    let n = f.len() - k;
    let (late, early) = (&f[k..], &g[..n]);
    let mf = late.iter().sum::<f64>() / n as f64;
    let mg = early.iter().sum::<f64>() / n as f64;
    late.iter()
        .zip(early)
        .map(|(a, b)| (a - mf) * (b - mg))
        .sum::<f64>()
        / n as f64
}

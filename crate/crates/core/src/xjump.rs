//! The stochastic jump channel.
//!
//! Jump times form a homogeneous Poisson process with rate `N λ₁`. At each
//! event the state is randomized inside the energy shell
//! `S = { m : |E_m - ⟨E⟩| <= w }` around its current energy expectation, keeping
//! the probability carried by the shell fixed and leaving every amplitude
//! outside the shell untouched.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Exp1, StandardNormal};

use crate::error::{invalid, Error, Result};
use crate::propagator::{energy_expectation, evolve, EigenSystem, StateVector};
use crate::seed;
use crate::spin_model::{HermitianOperator, C64};

/// Default shell half-width as a fraction of the spectral range.
pub const DEFAULT_SPECTRAL_FRACTION: f64 = 0.05;

pub const SECONDS_PER_YEAR: f64 = 365.25 * 86_400.0;

/// Refuse schedules whose expected length would exhaust memory.
const MAX_EXPECTED_EVENTS: f64 = 1e8;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum JumpMechanism {
    /// Haar-random unitary on the shell subspace.
    #[default]
    ShellHaar,
    /// Uniform phases and moduli drawn uniformly from the shell's probability simplex.
    ShellPhaseScramble,
}

impl JumpMechanism {
    pub fn name(self) -> &'static str {
        match self {
            JumpMechanism::ShellHaar => "shell-haar",
            JumpMechanism::ShellPhaseScramble => "shell-phase-scramble",
        }
    }
}

impl fmt::Display for JumpMechanism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for JumpMechanism {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "shell-haar" => Ok(JumpMechanism::ShellHaar),
            "shell-phase-scramble" => Ok(JumpMechanism::ShellPhaseScramble),
            other => Err(invalid(
                "mechanism",
                format!("{other:?} (expected shell-haar or shell-phase-scramble)"),
            )),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct XJumpConfig {
    /// Events per unit time per particle.
    pub per_particle_rate: f64,
    /// Half-width of the energy shell, in energy units.
    pub shell_half_width: f64,
    pub mechanism: JumpMechanism,
    /// Factor `g` in `rate = g ‖Hint‖`.
    pub rate_coupling: Option<f64>,
}

impl XJumpConfig {
    pub fn new(per_particle_rate: f64, shell_half_width: f64, mechanism: JumpMechanism) -> Result<Self> {
        let config = XJumpConfig {
            per_particle_rate,
            shell_half_width,
            mechanism,
            rate_coupling: None,
        };
        config.validate()?;
        Ok(config)
    }

    /// Channel switched off, with the default shell width for `eig`.
    pub fn disabled(eig: &EigenSystem) -> Self {
        XJumpConfig {
            per_particle_rate: 0.0,
            shell_half_width: default_shell_half_width(eig),
            mechanism: JumpMechanism::ShellHaar,
            rate_coupling: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.per_particle_rate >= 0.0 && self.per_particle_rate.is_finite()) {
            return Err(invalid("per_particle_rate", format!("{} must be finite and >= 0", self.per_particle_rate)));
        }
        if !(self.shell_half_width > 0.0 && self.shell_half_width.is_finite()) {
            return Err(invalid("shell_half_width", format!("{} must be finite and > 0", self.shell_half_width)));
        }
        if let Some(g) = self.rate_coupling {
            if !(g >= 0.0 && g.is_finite()) {
                return Err(invalid("rate_coupling", format!("{g} must be finite and >= 0")));
            }
        }
        Ok(())
    }
}

/// `fraction` of the spectral range; falls back to `fraction` itself for a flat spectrum.
pub fn spectral_fraction_width(eig: &EigenSystem, fraction: f64) -> f64 {
    let range = eig.spectral_range();
    if range > 0.0 {
        fraction * range
    } else {
        fraction
    }
}

pub fn default_shell_half_width(eig: &EigenSystem) -> f64 {
    spectral_fraction_width(eig, DEFAULT_SPECTRAL_FRACTION)
}

/// `N λ₁`: independent per-particle events superpose to one Poisson process.
pub fn aggregate_rate(n_particles: f64, per_particle_rate: f64) -> f64 {
    n_particles * per_particle_rate
}

/// Expected number of events (and so of distinct visited states) in `duration`.
pub fn expected_states_visited(rate: f64, duration: f64) -> f64 {
    rate * duration
}

/// Mean time between events; infinite for a zero rate.
pub fn mean_waiting_time(rate: f64) -> f64 {
    1.0 / rate
}

#[derive(Clone, Debug, PartialEq)]
pub struct JumpSchedule {
    times: Vec<f64>,
    duration: f64,
    seed: u64,
}

impl JumpSchedule {
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

/// Poisson event times on `[0, duration]` with exponential gaps of mean `1/rate`.
pub fn sample_schedule(rate: f64, duration: f64, seed: u64) -> Result<JumpSchedule> {
    if !(rate >= 0.0 && rate.is_finite()) {
        return Err(invalid("rate", format!("{rate} must be finite and >= 0")));
    }
    if !(duration >= 0.0 && duration.is_finite()) {
        return Err(invalid("duration", format!("{duration} must be finite and >= 0")));
    }
    if rate * duration > MAX_EXPECTED_EVENTS {
        return Err(invalid(
            "rate",
            format!("{} expected events exceed the limit of {MAX_EXPECTED_EVENTS}", rate * duration),
        ));
    }
    let mut times = Vec::new();
    if rate > 0.0 {
        let gaps = Exp::new(rate).map_err(|e| invalid("rate", e.to_string()))?;
        let mut rng = seed::rng(seed);
        let mut t = 0.0;
        loop {
            let next = t + gaps.sample(&mut rng);
            if next > duration {
                break;
            }
            if next > t {
                times.push(next);
                t = next;
            }
        }
    }
    Ok(JumpSchedule { times, duration, seed })
}

#[derive(Clone, Debug, PartialEq)]
pub struct JumpOutcome {
    pub state: StateVector,
    /// Eigenstate indices the jump acted on.
    pub shell: Range<usize>,
    /// The shell held at most one level, so only a phase could change.
    pub degenerate: bool,
}

/// One energy-conserving random jump.
pub fn apply_jump(state: &StateVector, eig: &EigenSystem, config: &XJumpConfig, seed: u64) -> Result<JumpOutcome> {
    config.validate()?;
    if state.dim() != eig.dim() {
        return Err(Error::DimensionMismatch {
            expected: eig.dim(),
            got: state.dim(),
        });
    }
    let center = energy_expectation(state, eig);
    let shell = eig.shell(center, config.shell_half_width);
    let mut rng = seed::rng(seed);
    let mut out = state.clone();
    let amps = &mut out.amplitudes_mut()[shell.clone()];
    match config.mechanism {
        JumpMechanism::ShellHaar => haar_rotate(amps, &mut rng),
        JumpMechanism::ShellPhaseScramble => phase_scramble(amps, &mut rng),
    }
    let degenerate = shell.len() <= 1;
    if degenerate {
        log::debug!("jump on a {}-level shell around E = {center}", shell.len());
    }
    Ok(JumpOutcome {
        state: out,
        shell,
        degenerate,
    })
}

/// Replaces `v` by `U v` for a Haar-random unitary `U`.
///
/// The image of a fixed vector under a Haar unitary is uniform on the sphere
/// of radius `|v|`, so it is drawn directly from a normalized complex Gaussian
/// instead of building `U`.
fn haar_rotate(v: &mut [C64], rng: &mut ChaCha8Rng) {
    let radius = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    if v.is_empty() || radius == 0.0 {
        return;
    }
    loop {
        for a in v.iter_mut() {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            *a = C64::new(re, im);
        }
        let norm = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm > 0.0 {
            let s = radius / norm;
            v.iter_mut().for_each(|a| *a *= s);
            return;
        }
    }
}

fn phase_scramble(v: &mut [C64], rng: &mut ChaCha8Rng) {
    let weight: f64 = v.iter().map(|a| a.norm_sqr()).sum();
    if v.is_empty() {
        return;
    }
    // exponential spacings normalized to one are uniform on the simplex
    let mut draws: Vec<f64> = (0..v.len()).map(|_| Exp1.sample(rng)).collect();
    let total: f64 = draws.iter().sum();
    if total == 0.0 {
        draws.iter_mut().for_each(|d| *d = 1.0);
    }
    let total: f64 = draws.iter().sum();
    for (a, d) in v.iter_mut().zip(draws) {
        let phase = rng.random::<f64>() * std::f64::consts::TAU;
        *a = C64::from_polar((weight * d / total).sqrt(), phase);
    }
}

/// Haar-distributed unitary from the QR decomposition of a complex Ginibre matrix.
pub fn haar_unitary(dim: usize, seed: u64) -> DMatrix<C64> {
    let mut rng = seed::rng(seed);
    let g = DMatrix::from_fn(dim, dim, |_, _| {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        C64::new(re, im)
    });
    let qr = g.qr();
    let (mut q, r) = qr.unpack();
    for k in 0..dim {
        let d = r[(k, k)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
        for row in 0..dim {
            q[(row, k)] *= phase;
        }
    }
    q
}

/// Unitary evolution interleaved with jumps, advanced in time order.
pub struct JumpTrajectory<'a> {
    eig: &'a EigenSystem,
    config: &'a XJumpConfig,
    schedule: JumpSchedule,
    state: StateVector,
    time: f64,
    next_event: usize,
    seed: u64,
    degenerate_jumps: usize,
}

impl<'a> JumpTrajectory<'a> {
    pub fn new(
        state: StateVector,
        eig: &'a EigenSystem,
        config: &'a XJumpConfig,
        n_particles: usize,
        duration: f64,
        seed: u64,
    ) -> Result<Self> {
        config.validate()?;
        if state.dim() != eig.dim() {
            return Err(Error::DimensionMismatch {
                expected: eig.dim(),
                got: state.dim(),
            });
        }
        let rate = aggregate_rate(n_particles as f64, config.per_particle_rate);
        let schedule = sample_schedule(rate, duration, seed::derive(seed, seed::SCHEDULE_STREAM))?;
        Ok(JumpTrajectory {
            eig,
            config,
            schedule,
            state,
            time: 0.0,
            next_event: 0,
            seed,
            degenerate_jumps: 0,
        })
    }

    /// Moves the trajectory to time `t`, applying every scheduled jump at or before `t`.
    pub fn advance_to(&mut self, t: f64) -> Result<()> {
        if t < self.time {
            return Err(invalid("t", format!("cannot move back from {} to {t}", self.time)));
        }
        while let Some(&event) = self.schedule.times.get(self.next_event) {
            if event > t {
                break;
            }
            let before = evolve(&self.state, self.eig, event - self.time)?;
            let outcome = apply_jump(
                &before,
                self.eig,
                self.config,
                seed::event_seed(self.seed, self.next_event),
            )?;
            if outcome.degenerate {
                self.degenerate_jumps += 1;
            }
            self.state = outcome.state;
            self.time = event;
            self.next_event += 1;
        }
        self.state = evolve(&self.state, self.eig, t - self.time)?;
        self.time = t;
        Ok(())
    }

    pub fn state(&self) -> &StateVector {
        &self.state
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn jumps_applied(&self) -> usize {
        self.next_event
    }

    pub fn degenerate_jumps(&self) -> usize {
        self.degenerate_jumps
    }

    pub fn schedule(&self) -> &JumpSchedule {
        &self.schedule
    }

    pub fn into_parts(self) -> (StateVector, JumpSchedule) {
        (self.state, self.schedule)
    }
}

/// Evolution for time `t` with jumps at rate `aggregate_rate(n_particles, λ₁)`.
pub fn evolve_with_jumps(
    state: &StateVector,
    eig: &EigenSystem,
    t: f64,
    config: &XJumpConfig,
    n_particles: usize,
    seed: u64,
) -> Result<(StateVector, JumpSchedule)> {
    let mut traj = JumpTrajectory::new(state.clone(), eig, config, n_particles, t, seed)?;
    traj.advance_to(t)?;
    Ok(traj.into_parts())
}

/// `g ‖Hint‖` with `‖·‖` the largest |eigenvalue|.
pub fn rate_from_interaction(hint: &HermitianOperator, config: &XJumpConfig) -> Result<f64> {
    let g = config.rate_coupling.ok_or(Error::MissingRateCoupling)?;
    Ok(g * hint.spectral_radius())
}

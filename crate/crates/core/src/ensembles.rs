//! Canonical distribution of `N` weakly interacting particles without a bath.
//!
//! Maximizing the multiplicity `P = N! / Π n_i!` under fixed particle number and
//! energy gives `n_i = N g_i e^{-β ε_i} / Z₁`. The functions here evaluate that
//! solution, the matching partition values and thermodynamic identities, and an
//! exhaustive search over integer profiles that serves as an independent check.
//! Units: `k_B = 1`, so `β` is an inverse energy.

use statrs::function::gamma::ln_gamma;

use crate::error::{invalid, Error, Result};

/// Single-particle levels in strictly ascending order, each with a degeneracy.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelSpec {
    energies: Vec<f64>,
    degeneracies: Vec<u32>,
}

impl LevelSpec {
    pub fn new(energies: Vec<f64>, degeneracies: Option<Vec<u32>>) -> Result<Self> {
        if energies.len() < 2 {
            return Err(invalid("energies", "at least two levels are required"));
        }
        if energies.iter().any(|e| !e.is_finite()) {
            return Err(invalid("energies", "all level energies must be finite"));
        }
        if energies.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("energies", "level energies must be strictly ascending"));
        }
        let degeneracies = degeneracies.unwrap_or_else(|| vec![1; energies.len()]);
        if degeneracies.len() != energies.len() {
            return Err(Error::DimensionMismatch {
                expected: energies.len(),
                got: degeneracies.len(),
            });
        }
        if degeneracies.contains(&0) {
            return Err(invalid("degeneracies", "every degeneracy must be >= 1"));
        }
        Ok(LevelSpec { energies, degeneracies })
    }

    /// Groups a sorted spectrum (e.g. Hamiltonian eigenvalues) into levels,
    /// merging neighbours closer than `tolerance`.
    pub fn from_spectrum(spectrum: &[f64], tolerance: f64) -> Result<Self> {
        let mut energies: Vec<f64> = Vec::new();
        let mut degeneracies: Vec<u32> = Vec::new();
        let mut sum = 0.0;
        let mut last = f64::NEG_INFINITY;
        for &e in spectrum {
            if e < last {
                return Err(invalid("spectrum", "eigenvalues must be sorted"));
            }
            if energies.is_empty() || e - last > tolerance {
                if let (Some(level), Some(&g)) = (energies.last_mut(), degeneracies.last()) {
                    *level = sum / g as f64;
                }
                energies.push(e);
                degeneracies.push(1);
                sum = e;
            } else {
                *degeneracies.last_mut().unwrap() += 1;
                sum += e;
            }
            last = e;
        }
        if let (Some(level), Some(&g)) = (energies.last_mut(), degeneracies.last()) {
            *level = sum / g as f64;
        }
        Self::new(energies, Some(degeneracies))
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn degeneracies(&self) -> &[u32] {
        &self.degeneracies
    }

    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    pub fn min_energy(&self) -> f64 {
        self.energies[0]
    }

    pub fn max_energy(&self) -> f64 {
        self.energies[self.energies.len() - 1]
    }

    /// `(ln Z₁, W_i)` computed with the largest exponent shifted to zero.
    fn log_z1_and_weights(&self, beta: f64) -> (f64, Vec<f64>) {
        let exponents: Vec<f64> = self
            .energies
            .iter()
            .zip(&self.degeneracies)
            .map(|(e, &g)| (g as f64).ln() - beta * e)
            .collect();
        let shift = exponents.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let raw: Vec<f64> = exponents.iter().map(|x| (x - shift).exp()).collect();
        let total: f64 = raw.iter().sum();
        (shift + total.ln(), raw.into_iter().map(|w| w / total).collect())
    }

    fn mean_energy(&self, beta: f64) -> f64 {
        let (_, w) = self.log_z1_and_weights(beta);
        w.iter().zip(&self.energies).map(|(w, e)| w * e).sum()
    }
}

/// Occupation numbers `n_i` aligned with a [`LevelSpec`].
#[derive(Clone, Debug, PartialEq)]
pub struct OccupancyProfile {
    pub occupations: Vec<f64>,
}

impl OccupancyProfile {
    pub fn total(&self) -> f64 {
        self.occupations.iter().sum()
    }

    pub fn energy(&self, levels: &LevelSpec) -> f64 {
        self.occupations.iter().zip(levels.energies()).map(|(n, e)| n * e).sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ThermoState {
    pub beta: f64,
    /// `Z₁ = Σ g_i e^{-β ε_i}`.
    pub z1: f64,
    /// `ln Z = N ln Z₁ - ln N!`.
    pub log_z: f64,
    /// `A = -ln Z / β`; undefined at `β = 0`.
    pub free_energy: Option<f64>,
    pub internal_energy: f64,
}

/// `ln k!`, exact products up to 20 and `ln Γ(k + 1)` beyond.
pub fn ln_factorial(k: u64) -> f64 {
    if k <= 20 {
        ((1..=k).product::<u64>() as f64).ln()
    } else {
        ln_gamma(k as f64 + 1.0)
    }
}

fn as_count(x: f64) -> Result<u64> {
    let r = x.round();
    if x < 0.0 || !x.is_finite() || (x - r).abs() > 1e-9 {
        return Err(Error::NonIntegerOccupation(x));
    }
    Ok(r as u64)
}

/// `ln P = ln N! - Σ ln n_i!` for an integer profile summing to `n`.
pub fn log_multiplicity(occupations: &[f64], n: u64) -> Result<f64> {
    let counts = occupations.iter().map(|&x| as_count(x)).collect::<Result<Vec<_>>>()?;
    if counts.iter().sum::<u64>() != n {
        return Err(invalid("occupations", format!("profile sums to {}, not N = {n}", counts.iter().sum::<u64>())));
    }
    Ok(ln_factorial(n) - counts.iter().map(|&c| ln_factorial(c)).sum::<f64>())
}

fn check_beta(beta: f64) -> Result<()> {
    if !beta.is_finite() {
        return Err(invalid("beta", format!("{beta} is not finite")));
    }
    Ok(())
}

/// `n_i = N g_i e^{-β ε_i} / Z₁`.
pub fn boltzmann_profile(levels: &LevelSpec, n: u64, beta: f64) -> Result<OccupancyProfile> {
    if n == 0 {
        return Err(invalid("N", "at least one particle is required"));
    }
    check_beta(beta)?;
    let (_, w) = levels.log_z1_and_weights(beta);
    Ok(OccupancyProfile {
        occupations: w.into_iter().map(|w| n as f64 * w).collect(),
    })
}

/// `W_i = g_i e^{-β ε_i} / Z₁`, the probability of one particle being on level `i`.
pub fn particle_level_probability(levels: &LevelSpec, beta: f64) -> Result<Vec<f64>> {
    check_beta(beta)?;
    Ok(levels.log_z1_and_weights(beta).1)
}

/// `β` at which `Σ ε_i n_i(β) = E_target`, by bisection on the decreasing mean energy.
///
/// Negative `β` (population inversion) is returned when the target lies above
/// the infinite-temperature energy.
pub fn solve_beta(levels: &LevelSpec, n: u64, e_target: f64) -> Result<f64> {
    if n == 0 {
        return Err(invalid("N", "at least one particle is required"));
    }
    let nf = n as f64;
    let (low, high) = (nf * levels.min_energy(), nf * levels.max_energy());
    if !(e_target > low && e_target < high) {
        return Err(Error::EnergyOutOfRange {
            target: e_target,
            low,
            high,
        });
    }
    let target = e_target / nf;
    let gap = levels.max_energy() - levels.min_energy();
    let (mut lo, mut hi) = (-1.0 / gap, 1.0 / gap);
    while levels.mean_energy(lo) < target {
        lo *= 2.0;
        if !lo.is_finite() || lo < -1e300 {
            return Err(Error::EnergyOutOfRange { target: e_target, low, high });
        }
    }
    while levels.mean_energy(hi) > target {
        hi *= 2.0;
        if !hi.is_finite() || hi > 1e300 {
            return Err(Error::EnergyOutOfRange { target: e_target, low, high });
        }
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if levels.mean_energy(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (ulo, uhi) = (levels.mean_energy(lo) - target, levels.mean_energy(hi) - target);
    Ok(if ulo.abs() <= uhi.abs() { lo } else { hi })
}

/// `exp(-β E_m - ln Z)`.
pub fn system_state_probability(energy: f64, beta: f64, log_z: f64) -> f64 {
    (-beta * energy - log_z).exp()
}

/// `N ln Z₁`: the log of the sum of `e^{-β E}` over all labeled assignments
/// of `N` distinguishable particles to levels.
pub fn labeled_log_state_sum(levels: &LevelSpec, n: u64, beta: f64) -> Result<f64> {
    check_beta(beta)?;
    Ok(n as f64 * levels.log_z1_and_weights(beta).0)
}

pub fn partition_values(levels: &LevelSpec, n: u64, beta: f64) -> Result<ThermoState> {
    check_beta(beta)?;
    let (log_z1, _) = levels.log_z1_and_weights(beta);
    let log_z = n as f64 * log_z1 - ln_factorial(n);
    Ok(ThermoState {
        beta,
        z1: log_z1.exp(),
        log_z,
        free_energy: (beta != 0.0).then(|| -log_z / beta),
        internal_energy: internal_energy(levels, n, beta)?,
    })
}

/// `E = N Σ ε_i W_i = -∂ ln Z / ∂β`.
pub fn internal_energy(levels: &LevelSpec, n: u64, beta: f64) -> Result<f64> {
    check_beta(beta)?;
    Ok(n as f64 * levels.mean_energy(beta))
}

#[derive(Clone, Debug, PartialEq)]
pub struct MaxMultiplicity {
    pub profile: Vec<u64>,
    pub log_multiplicity: f64,
    /// Profiles sharing the maximal multiplicity (1 when unique).
    pub ties: usize,
    /// Integer profiles meeting both constraints.
    pub feasible: usize,
}

pub const BRUTE_FORCE_MAX_PARTICLES: u64 = 12;
pub const BRUTE_FORCE_MAX_LEVELS: usize = 5;

/// Exhaustive argmax of `ln P + Σ n_i ln g_i` over integer profiles with
/// `Σ n_i = N` and `Σ n_i ε_i = E_target`; ties go to the lexicographically
/// smallest profile.
pub fn brute_force_max_multiplicity(levels: &LevelSpec, n: u64, e_target: f64) -> Result<MaxMultiplicity> {
    if n == 0 || n > BRUTE_FORCE_MAX_PARTICLES {
        return Err(invalid("N", format!("{n} outside 1..={BRUTE_FORCE_MAX_PARTICLES}")));
    }
    if levels.len() > BRUTE_FORCE_MAX_LEVELS {
        return Err(invalid(
            "levels",
            format!("{} levels exceed the enumeration limit of {BRUTE_FORCE_MAX_LEVELS}", levels.len()),
        ));
    }
    let tol = 1e-9 * e_target.abs().max(1.0);
    let mut best: Option<MaxMultiplicity> = None;
    let mut feasible = 0;
    let mut profile = vec![0u64; levels.len()];
    let mut visit = |p: &[u64]| {
        let energy: f64 = p.iter().zip(levels.energies()).map(|(&c, e)| c as f64 * e).sum();
        if (energy - e_target).abs() > tol {
            return;
        }
        feasible += 1;
        let score = ln_factorial(n)
            - p.iter().map(|&c| ln_factorial(c)).sum::<f64>()
            + p.iter()
                .zip(levels.degeneracies())
                .map(|(&c, &g)| c as f64 * (g as f64).ln())
                .sum::<f64>();
        match &mut best {
            Some(b) if (score - b.log_multiplicity).abs() <= 1e-12 => b.ties += 1,
            Some(b) if score < b.log_multiplicity => {}
            _ => {
                best = Some(MaxMultiplicity {
                    profile: p.to_vec(),
                    log_multiplicity: score,
                    ties: 1,
                    feasible: 0,
                })
            }
        }
    };
    compositions(n, 0, &mut profile, &mut visit);
    let mut best = best.ok_or(Error::NoFeasibleProfile(e_target))?;
    best.feasible = feasible;
    Ok(best)
}

/// Visits every composition of `remaining` into the slots `slot..` in lexicographic order.
fn compositions(remaining: u64, slot: usize, profile: &mut [u64], visit: &mut impl FnMut(&[u64])) {
    if slot + 1 == profile.len() {
        profile[slot] = remaining;
        visit(profile);
        return;
    }
    for c in 0..=remaining {
        profile[slot] = c;
        compositions(remaining - c, slot + 1, profile, visit);
    }
}

/// Largest-remainder rounding of a real profile to integers with the same total `n`.
pub fn round_profile(profile: &OccupancyProfile, n: u64) -> Vec<u64> {
    let mut counts: Vec<u64> = profile.occupations.iter().map(|x| x.max(0.0).floor() as u64).collect();
    let assigned: u64 = counts.iter().sum();
    let mut order: Vec<usize> = (0..counts.len()).collect();
    let rem = |i: usize| profile.occupations[i] - profile.occupations[i].floor();
    order.sort_by(|&a, &b| rem(b).total_cmp(&rem(a)).then(a.cmp(&b)));
    for &i in order.iter().cycle().take(n.saturating_sub(assigned) as usize) {
        counts[i] += 1;
    }
    counts
}

/// `Σ |a_i - b_i| / N`.
pub fn normalized_l1(a: &[f64], b: &[f64], n: u64) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() / n as f64
}

fn softmax(exponents: impl Iterator<Item = f64>) -> Vec<f64> {
    let xs: Vec<f64> = exponents.collect();
    let shift = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let raw: Vec<f64> = xs.iter().map(|x| (x - shift).exp()).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / total).collect()
}

/// `W_k = e^{-β E_k} / Σ_l e^{-β E_l}` over independent interaction pseudo-particle states.
pub fn pseudo_particle_distribution(interaction_energies: &[f64], beta: f64) -> Result<Vec<f64>> {
    check_beta(beta)?;
    if interaction_energies.is_empty() {
        return Err(invalid("interaction_energies", "at least one energy is required"));
    }
    Ok(softmax(interaction_energies.iter().map(|e| -beta * e)))
}

/// `W_ik ∝ e^{-β (E0_i + Eint_k)}`, rows indexed by `E0`.
pub fn joint_distribution(e0: &[f64], eint: &[f64], beta: f64) -> Result<Vec<Vec<f64>>> {
    check_beta(beta)?;
    if e0.is_empty() || eint.is_empty() {
        return Err(invalid("energies", "both energy lists must be non-empty"));
    }
    let flat = softmax(e0.iter().flat_map(|a| eint.iter().map(move |b| -beta * (a + b))));
    Ok(flat.chunks(eint.len()).map(<[f64]>::to_vec).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::LN_2;

    fn two_level() -> LevelSpec {
        LevelSpec::new(vec![0.0, 1.0], None).unwrap()
    }

    #[test]
    fn level_spec_validation() {
        assert!(LevelSpec::new(vec![1.0], None).is_err());
        assert!(LevelSpec::new(vec![1.0, 1.0], None).is_err());
        assert!(LevelSpec::new(vec![0.0, 1.0], Some(vec![1, 0])).is_err());
        assert!(LevelSpec::new(vec![0.0, 1.0], Some(vec![1])).is_err());
        let grouped = LevelSpec::from_spectrum(&[-1.0, -1.0 + 1e-13, 0.0, 0.0, 0.0, 2.0], 1e-9).unwrap();
        assert_eq!(grouped.degeneracies(), &[2, 3, 1]);
        assert!((grouped.energies()[0] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn multiplicity_examples() {
        assert!((log_multiplicity(&[2.0, 1.0, 1.0], 4).unwrap() - 12f64.ln()).abs() < 1e-14);
        assert_eq!(log_multiplicity(&[0.0, 5.0, 0.0], 5).unwrap(), 0.0);
        assert!((log_multiplicity(&[1.0, 1.0], 2).unwrap() - LN_2).abs() < 1e-15);
        assert_eq!(log_multiplicity(&[1.5, 0.5], 2), Err(Error::NonIntegerOccupation(1.5)));
        assert!(log_multiplicity(&[1.0, 1.0], 3).is_err());
    }

    #[test]
    fn ln_factorial_switches_smoothly() {
        let exact21 = (1..=21u64).map(|k| (k as f64).ln()).sum::<f64>();
        assert!((ln_factorial(21) - exact21).abs() < 1e-10);
        assert!((ln_factorial(20) - (1..=20u64).map(|k| (k as f64).ln()).sum::<f64>()).abs() < 1e-12);
        assert_eq!(ln_factorial(0), 0.0);
    }

    #[test]
    fn boltzmann_examples() {
        let levels = LevelSpec::new(vec![-1.0, 0.5, 2.0, 3.0], None).unwrap();
        let p = boltzmann_profile(&levels, 8, 0.0).unwrap();
        assert!(p.occupations.iter().all(|&n| (n - 2.0).abs() < 1e-14));
        let p = boltzmann_profile(&LevelSpec::new(vec![0.0, 0.7], None).unwrap(), 9, LN_2 / 0.7).unwrap();
        assert!((p.occupations[0] - 6.0).abs() < 1e-12 && (p.occupations[1] - 3.0).abs() < 1e-12);
        let p = boltzmann_profile(&two_level(), 10, 10.5).unwrap();
        assert!(p.occupations[0] / 10.0 > 0.999);
        // extreme β stays finite thanks to the shift
        let p = boltzmann_profile(&two_level(), 10, 5000.0).unwrap();
        assert!((p.total() - 10.0).abs() < 1e-12);
        let p = boltzmann_profile(&two_level(), 10, -5000.0).unwrap();
        assert!((p.occupations[1] - 10.0).abs() < 1e-12);
    }

    #[test]
    fn level_probability_examples() {
        let w = particle_level_probability(&LevelSpec::new(vec![0.0, 1.0, 2.0], None).unwrap(), 1.0).unwrap();
        let z1 = 1.0 + (-1.0f64).exp() + (-2.0f64).exp();
        for (k, wk) in w.iter().enumerate() {
            assert!((wk - (-(k as f64)).exp() / z1).abs() < 1e-15);
        }
        let levels = LevelSpec::new(vec![0.0, 0.3, 1.2], Some(vec![1, 2, 3])).unwrap();
        let w = particle_level_probability(&levels, 0.8).unwrap();
        let p = boltzmann_profile(&levels, 7, 0.8).unwrap();
        for (wi, ni) in w.iter().zip(&p.occupations) {
            assert!((wi - ni / 7.0).abs() < 1e-12);
        }
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn solve_beta_two_level() {
        let l = two_level();
        for n in [1u64, 3, 30] {
            let nf = n as f64;
            assert!(solve_beta(&l, n, nf / 2.0).unwrap().abs() < 1e-12);
            assert!((solve_beta(&l, n, nf / 3.0).unwrap() - LN_2).abs() < 1e-9);
            assert!((solve_beta(&l, n, 2.0 * nf / 3.0).unwrap() + LN_2).abs() < 1e-9);
        }
        assert!(matches!(solve_beta(&l, 3, 0.0), Err(Error::EnergyOutOfRange { .. })));
        assert!(matches!(solve_beta(&l, 3, 3.0), Err(Error::EnergyOutOfRange { .. })));
    }

    #[test]
    fn solve_beta_reaches_target_energy() {
        let levels = LevelSpec::new(vec![-2.0, -0.3, 0.4, 5.0], Some(vec![2, 1, 1, 3])).unwrap();
        for target in [-15.0, -8.0, 0.0, 7.5, 30.0, 49.0] {
            let beta = solve_beta(&levels, 10, target).unwrap();
            let e = internal_energy(&levels, 10, beta).unwrap();
            assert!((e - target).abs() <= 1e-9 * target.abs().max(1.0), "{target}: {e}");
        }
    }

    #[test]
    fn state_probability_examples() {
        // two labeled particles on levels (0, 1) at β = ln 2
        let l = two_level();
        let log_z = labeled_log_state_sum(&l, 2, LN_2).unwrap();
        let probs: Vec<f64> = [0.0, 1.0, 1.0, 2.0]
            .iter()
            .map(|&e| system_state_probability(e, LN_2, log_z))
            .collect();
        let want = [4.0 / 9.0, 2.0 / 9.0, 2.0 / 9.0, 1.0 / 9.0];
        for (p, w) in probs.iter().zip(want) {
            assert!((p - w).abs() < 1e-15);
        }
        let uniform = system_state_probability(3.7, 0.0, (5.0f64).ln());
        assert!((uniform - 0.2).abs() < 1e-15);
        let ratio = system_state_probability(1.3, 0.7, 2.0) / system_state_probability(0.4, 0.7, 2.0);
        assert!((ratio - (-0.7f64 * 0.9).exp()).abs() < 1e-12);
    }

    #[test]
    fn partition_value_examples() {
        let t = partition_values(&two_level(), 1, LN_2).unwrap();
        assert!((t.z1 - 1.5).abs() < 1e-15);
        assert!((t.log_z - 1.5f64.ln()).abs() < 1e-15);
        assert!((t.free_energy.unwrap() + 1.5f64.ln() / LN_2).abs() < 1e-15);
        let t0 = partition_values(&two_level(), 4, 0.0).unwrap();
        assert_eq!(t0.free_energy, None);
        assert!((t0.log_z - (4.0 * LN_2 - 24f64.ln())).abs() < 1e-14);
        assert_eq!(internal_energy(&two_level(), 10, 0.0).unwrap(), 5.0);
        assert!((internal_energy(&two_level(), 3, LN_2).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn brute_force_examples() {
        let levels = LevelSpec::new(vec![0.0, 1.0, 2.0], None).unwrap();
        let best = brute_force_max_multiplicity(&levels, 6, 6.0).unwrap();
        assert_eq!(best.profile, vec![2, 2, 2]);
        assert!((best.log_multiplicity - 90f64.ln()).abs() < 1e-12);
        assert_eq!(best.ties, 1);
        // feasible (n0, n1, n2) with n1 + 2 n2 = 6, Σ = 6: n2 = 0..=3
        assert_eq!(best.feasible, 4);
        let unique = brute_force_max_multiplicity(&two_level(), 2, 1.0).unwrap();
        assert_eq!(unique.profile, vec![1, 1]);
        assert_eq!(unique.feasible, 1);
        assert_eq!(
            brute_force_max_multiplicity(&levels, 2, 0.5),
            Err(Error::NoFeasibleProfile(0.5))
        );
        assert!(brute_force_max_multiplicity(&levels, 13, 6.0).is_err());
    }

    #[test]
    fn ties_are_reported() {
        // E = 2 on (0, 1, 2) with N = 2: (0,2,0) has P = 1, (1,0,1) has P = 2
        let levels = LevelSpec::new(vec![0.0, 1.0, 2.0], None).unwrap();
        let best = brute_force_max_multiplicity(&levels, 2, 2.0).unwrap();
        assert_eq!((best.profile, best.ties), (vec![1, 0, 1], 1));
        // E = 3 on (0, 1, 2, 3) with N = 2: (0,1,1,0) and (1,0,0,1) both have P = 2
        let four = LevelSpec::new(vec![0.0, 1.0, 2.0, 3.0], None).unwrap();
        let best = brute_force_max_multiplicity(&four, 2, 3.0).unwrap();
        assert_eq!(best.profile, vec![0, 1, 1, 0]);
        assert_eq!(best.ties, 2);
    }

    #[test]
    fn largest_remainder_rounding() {
        let p = OccupancyProfile {
            occupations: vec![4.0 / 3.0; 3],
        };
        assert_eq!(round_profile(&p, 4), vec![2, 1, 1]);
        let p = OccupancyProfile {
            occupations: vec![0.2, 2.7, 1.1],
        };
        assert_eq!(round_profile(&p, 4), vec![0, 3, 1]);
    }

    #[test]
    fn pseudo_particles() {
        assert_eq!(pseudo_particle_distribution(&[3.0], 2.0).unwrap(), vec![1.0]);
        let u = pseudo_particle_distribution(&[1.0, 5.0, -2.0], 0.0).unwrap();
        assert!(u.iter().all(|p| (p - 1.0 / 3.0).abs() < 1e-15));
        let w = pseudo_particle_distribution(&[0.0, 1.0], LN_2).unwrap();
        assert!((w[0] - 2.0 / 3.0).abs() < 1e-15 && (w[1] - 1.0 / 3.0).abs() < 1e-15);
        assert!(pseudo_particle_distribution(&[], 1.0).is_err());
    }

    #[test]
    fn joint_examples() {
        let j = joint_distribution(&[0.0, 1.0], &[0.0, 2.0], 1.0).unwrap();
        let raw = [1.0, (-2.0f64).exp(), (-1.0f64).exp(), (-3.0f64).exp()];
        let z: f64 = raw.iter().sum();
        let flat: Vec<f64> = j.iter().flatten().copied().collect();
        for (a, b) in flat.iter().zip(raw) {
            assert!((a - b / z).abs() < 1e-15);
        }
        let u = joint_distribution(&[1.0, 2.0, 3.0], &[0.5, 9.0], 0.0).unwrap();
        assert!(u.iter().flatten().all(|p| (p - 1.0 / 6.0).abs() < 1e-15));
        assert!(joint_distribution(&[], &[1.0], 1.0).is_err());
    }
}

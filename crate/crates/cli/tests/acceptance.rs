//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::process::Command;
use std::time::Instant;

use xprob_cli::config::{parse_config, RunConfig};
use xprob_cli::{run, ResultRecord};
use xprob_core::ensembles::*;
use xprob_core::propagator::occupations;
use xprob_core::xjump::{aggregate_rate, expected_states_visited};
use xprob_core::{evolve, CouplingForm, InitialState, PreparedSystem, SpinSystem};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

/// Deterministic uniform numbers in [0, 1) for test fixtures.
struct Lcg(u64);

impl Lcg {
    fn next(&mut self) -> f64 {
        self.0 = self.0.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (self.0 >> 11) as f64 / (1u64 << 53) as f64
    }
}

fn config(text: &str) -> RunConfig {
    parse_config(text).unwrap_or_else(|e| panic!("fixture config: {e}"))
}

fn execute(text: &str) -> Result<ResultRecord, String> {
    run(&config(text), 4).map_err(|e| e.to_string())
}

fn column(record: &ResultRecord, name: &str) -> usize {
    record.columns.iter().position(|c| c == name).unwrap_or_else(|| panic!("no column {name}"))
}

fn values(record: &ResultRecord, cell: usize, name: &str) -> Vec<f64> {
    let k = column(record, name);
    record
        .trajectories
        .iter()
        .filter(|t| t.cell == cell)
        .map(|t| t.values.get(k).copied().flatten().unwrap_or(f64::NAN))
        .collect()
}

fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Weakly coupled dipolar cluster: Zeeman bands with narrow interaction splittings.
fn dipolar_cluster(n: usize, scale: f64) -> String {
    let mut couplings = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let d = (j - i) as f64;
            let strength = scale / d.powi(3) * (1.0 + 0.1 * ((i * 7 + j * 3) % 5) as f64);
            couplings.push(format!("[{i}, {j}, {strength}]"));
        }
    }
    format!(
        "[system]\nn_spins = {n}\nzeeman_frequencies = 1.0\ncoupling_form = \"secular-dipolar\"\ncouplings = [{}]\n",
        couplings.join(", ")
    )
}

fn rate_arithmetic() -> Outcome {
    let rate = aggregate_rate(1e23, 1e-10);
    let visited = expected_states_visited(rate, 1e-3);
    if rate == 1e13 && visited == 1e10 {
        Ok(format!("aggregate {rate:e}/s, visited {visited:e}"))
    } else {
        Err(format!("aggregate {rate:e}/s, visited {visited:e}"))
    }
}

fn frozen_occupations() -> Outcome {
    let mut rng = Lcg(2024);
    let n = 8;
    let freqs: Vec<f64> = (0..n).map(|_| 0.5 + rng.next()).collect();
    let mut couplings = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            couplings.push((i, j, 2.0 * rng.next() - 1.0));
        }
    }
    let p = PreparedSystem::new(SpinSystem::new(freqs, couplings, CouplingForm::HeisenbergXxx).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for s in 0..100 {
        let state = InitialState::Random.prepare(&p, s).map_err(|e| e.to_string())?;
        let before = occupations(&state);
        for _ in 0..20 {
            let t = 1000.0 * (rng.next() - 0.5);
            let after = occupations(&evolve(&state, &p.eigen, t).map_err(|e| e.to_string())?);
            worst = after.iter().zip(&before).fold(worst, |m, (a, b)| m.max((a - b).abs()));
        }
    }
    let detail = format!("max drift {worst:.3e} over 100 states x 20 times");
    if worst < 1e-12 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn perfect_reversal() -> Outcome {
    // strongly coupled chain and a weakly coupled cluster, both with 10 spins
    let systems = [
        "[system]\nn_spins = 10\nzeeman_frequencies = [1.0, 1.1, 0.9, 1.05, 0.95, 1.2, 0.8, 1.15, 0.85, 1.0]\ncoupling_form = \"secular-dipolar\"\ncouplings = [[0,1,1.0],[1,2,0.8],[2,3,1.2],[3,4,0.9],[4,5,1.1],[5,6,0.7],[6,7,1.3],[7,8,1.0],[8,9,0.6],[0,2,0.125],[3,5,0.1],[6,9,0.05]]\n".to_string(),
        dipolar_cluster(10, 0.05),
    ];
    let mut worst: f64 = 1.0;
    for system in &systems {
        let text = format!(
            "n_trajectories = 3\n{system}[jumps]\nper_particle_rate = 0\n[echo]\nforward_time = 7.5\nreversal_epsilon = 0\ninitial_state = \"random\"\n"
        );
        let record = execute(&text)?;
        worst = values(&record, 0, "fidelity").into_iter().fold(worst, f64::min);
    }
    let detail = format!("min fidelity 1 - {:.3e}", 1.0 - worst);
    if worst > 1.0 - 1e-9 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn irreversibility_ladder() -> Outcome {
    let lambda = 0.005;
    let text = format!(
        "n_trajectories = 200\nseed_base = 1000\n{}[echo]\nforward_time = 5.0\ninitial_state = \"neel\"\nrate_ladder = [0.0, {lambda}, {}]\n",
        dipolar_cluster(8, 0.05),
        10.0 * lambda
    );
    let record = execute(&text)?;
    let rungs: Vec<(f64, f64)> = (0..3).map(|c| mean_se(&values(&record, c, "fidelity"))).collect();
    let detail = rungs
        .iter()
        .map(|(m, se)| format!("{m:.4}±{se:.4}"))
        .collect::<Vec<_>>()
        .join(" > ");
    let separated = rungs
        .windows(2)
        .all(|w| w[0].0 - w[1].0 > 3.0 * (w[0].1.powi(2) + w[1].1.powi(2)).sqrt());
    if separated && rungs[1].0 < 0.99 {
        Ok(format!("mean fidelity {detail}"))
    } else {
        Err(format!("mean fidelity {detail}"))
    }
}

fn ensemble_identities() -> Outcome {
    let mut rng = Lcg(77);
    let err = |e: xprob_core::Error| e.to_string();
    // labeled state sum against Z1^N
    let mut worst_sum: f64 = 0.0;
    for k in 2..=3usize {
        for n in 1..=3u32 {
            let mut energies: Vec<f64> = (0..k).map(|_| 3.0 * rng.next()).collect();
            energies.sort_by(f64::total_cmp);
            let levels = LevelSpec::new(energies.clone(), None).map_err(err)?;
            let beta = 2.0 * rng.next() - 0.5;
            let brute: f64 = (0..k.pow(n))
                .map(|code| {
                    let mut c = code;
                    let e: f64 = (0..n)
                        .map(|_| {
                            let level = energies[c % k];
                            c /= k;
                            level
                        })
                        .sum();
                    (-beta * e).exp()
                })
                .sum();
            let z1n = labeled_log_state_sum(&levels, n as u64, beta).map_err(err)?.exp();
            worst_sum = worst_sum.max((brute - z1n).abs());
        }
    }
    // E(β) three ways
    let mut worst_rel: f64 = 0.0;
    for _ in 0..20 {
        let k = 2 + (rng.next() * 4.0) as usize;
        let mut energies: Vec<f64> = (0..k).map(|_| 4.0 * rng.next() - 2.0).collect();
        energies.sort_by(f64::total_cmp);
        let levels = LevelSpec::new(energies, None).map_err(err)?;
        let n = 1 + (rng.next() * 20.0) as u64;
        let beta = 3.0 * rng.next() - 1.5;
        let analytic = internal_energy(&levels, n, beta).map_err(err)?;
        let from_profile = boltzmann_profile(&levels, n, beta).map_err(err)?.energy(&levels);
        let h = 1e-5;
        let lz = |b| partition_values(&levels, n, b).map(|t| t.log_z);
        let numeric = -(lz(beta + h).map_err(err)? - lz(beta - h).map_err(err)?) / (2.0 * h);
        let scale = analytic.abs().max(1e-3);
        worst_rel = worst_rel
            .max((analytic - from_profile).abs() / scale)
            .max((analytic - numeric).abs() / scale)
            .max((from_profile - numeric).abs() / scale);
    }
    let two = LevelSpec::new(vec![0.0, 1.0], None).map_err(err)?;
    let beta_gap = (solve_beta(&two, 9, 3.0).map_err(err)? - std::f64::consts::LN_2).abs();
    let detail = format!("state sum {worst_sum:.2e}, energy chain {worst_rel:.2e} rel, beta error {beta_gap:.2e}");
    if worst_sum <= 1e-10 && worst_rel <= 1e-6 && beta_gap <= 1e-9 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn lagrange_vs_enumeration() -> Outcome {
    let err = |e: xprob_core::Error| e.to_string();
    let levels = LevelSpec::new(vec![0.0, 1.0, 2.0], None).map_err(err)?;
    let best = brute_force_max_multiplicity(&levels, 6, 6.0).map_err(err)?;
    let p = best.log_multiplicity.exp();
    let mut gaps = Vec::new();
    for n in [4u64, 8, 12] {
        let e = n as f64;
        let opt = brute_force_max_multiplicity(&levels, n, e).map_err(err)?;
        let beta = solve_beta(&levels, n, e).map_err(err)?;
        let rounded: Vec<f64> = round_profile(&boltzmann_profile(&levels, n, beta).map_err(err)?, n)
            .into_iter()
            .map(|c| c as f64)
            .collect();
        let counts: Vec<f64> = opt.profile.iter().map(|&c| c as f64).collect();
        gaps.push(normalized_l1(&counts, &rounded, n));
    }
    let detail = format!("N=6 maximizer {:?} with P = {p:.6}; L1 gaps {gaps:.4?}", best.profile);
    if best.profile == vec![2, 2, 2] && (p - 90.0).abs() < 1e-9 && gaps[0] > gaps[1] && gaps[1] > gaps[2] {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn equilibration() -> Outcome {
    let text = format!(
        "n_trajectories = 100\nseed_base = 7\n{}[jumps]\nper_particle_rate = 0.125\nmechanism = \"shell-haar\"\n[equilibrate]\ninitial_state = \"neel\"\ntotal_time = 510.0\nn_samples = 2041\n",
        dipolar_cluster(8, 0.05)
    );
    let record = execute(&text)?;
    let divergence = values(&record, 0, "final_divergence");
    let (mean, se) = mean_se(&divergence);
    let worst_weight = values(&record, 0, "shell_weight_deviation").into_iter().fold(0.0, f64::max);
    let shell = values(&record, 0, "shell_size")[0];
    let detail = format!("mean TV {mean:.4}±{se:.4} on a {shell}-state shell, max shell weight change {worst_weight:.2e}");
    if mean < 0.05 && worst_weight < 1e-9 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn correlation_separation() -> Outcome {
    let system = dipolar_cluster(8, 0.05);
    let text = format!(
        "n_trajectories = 20\nseed_base = 300\n{system}[jumps]\nper_particle_rate = 0.125\n[correlate]\nf = \"sz:0\"\nsample_step = 0.5\nmax_lag_intervals = 10\ntrajectory_time = 2010.0\ninitial_state = \"neel\"\n"
    );
    let record = execute(&text)?;
    let last = record.columns.len() - 1;
    let aggregates = &record.cells[0].aggregates;
    let r0 = aggregates[0].mean.unwrap_or(f64::NAN);
    let rmax = aggregates[last].mean.unwrap_or(f64::NAN);
    // channel-off control on the same system
    let echo = execute(&format!("n_trajectories = 5\n{system}[echo]\nforward_time = 50.0\ninitial_state = \"random\"\n"))?;
    let min_fidelity = values(&echo, 0, "fidelity").into_iter().fold(1.0, f64::min);
    let frozen = execute(&format!(
        "n_trajectories = 5\n{system}[equilibrate]\ninitial_state = \"random\"\ntotal_time = 500.0\nn_samples = 100\n"
    ))?;
    let drift = values(&frozen, 0, "max_occupation_drift").into_iter().fold(0.0, f64::max);
    let detail = format!(
        "R(0) = {r0:.4e}, R({}) = {rmax:.3e}, ratio {:.4}; rate 0: fidelity 1 - {:.1e}, drift {drift:.1e}",
        record.columns[last].trim_start_matches("r_lag_"),
        (rmax / r0).abs(),
        1.0 - min_fidelity
    );
    if rmax.abs() < 0.1 * r0.abs() && min_fidelity > 1.0 - 1e-9 && drift < 1e-12 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let runs = [
        (
            "echo",
            format!(
                "n_trajectories = 12\n{}[jumps]\nper_particle_rate = 0.01\n[echo]\nforward_time = 5.0\nrate_ladder = [0.0, 0.01, 0.1]\n",
                dipolar_cluster(6, 0.05)
            ),
        ),
        (
            "correlate",
            format!(
                "n_trajectories = 6\n{}[jumps]\nper_particle_rate = 0.2\n[correlate]\nlags = [0.0, 1.0, 2.0]\ntrajectory_time = 100.0\ninitial_state = \"random-product\"\n",
                dipolar_cluster(6, 0.05)
            ),
        ),
    ];
    let mut checked = 0;
    for (kind, text) in &runs {
        let cfg = dir.path().join(format!("{kind}.toml"));
        std::fs::write(&cfg, text).map_err(|e| e.to_string())?;
        let mut outputs = Vec::new();
        for (tag, workers, format) in [("a", 1, "csv"), ("b", 4, "csv"), ("c", 4, "csv"), ("d", 1, "json"), ("e", 3, "json")] {
            let out = dir.path().join(format!("{kind}-{tag}.{format}"));
            let status = Command::new(env!("CARGO_BIN_EXE_xprob"))
                .args([kind, "--config"])
                .arg(&cfg)
                .args(["--seed", "42", "--workers", &workers.to_string(), "--format", format, "--out"])
                .arg(&out)
                .status()
                .map_err(|e| e.to_string())?;
            if !status.success() {
                return Err(format!("{kind} run exited with {status}"));
            }
            outputs.push(std::fs::read(&out).map_err(|e| e.to_string())?);
        }
        if outputs[0] != outputs[1] || outputs[1] != outputs[2] {
            return Err(format!("{kind}: csv differs between repeats or worker counts"));
        }
        let payload = |bytes: &[u8]| -> Result<serde_json::Value, String> {
            let record = ResultRecord::from_json(std::str::from_utf8(bytes).map_err(|e| e.to_string())?)
                .map_err(|e| e.to_string())?;
            Ok(record.payload())
        };
        if payload(&outputs[3])? != payload(&outputs[4])? {
            return Err(format!("{kind}: json payload differs between worker counts"));
        }
        checked += 1;
    }
    Ok(format!("{checked} experiments identical across repeats and 1/3/4 workers"))
}

fn boltzmann_marginals() -> Outcome {
    let n = 8.0;
    let target = -n / 2.0 + n / 3.0;
    let text = format!(
        "n_trajectories = 20\nseed_base = 11\n[system]\nn_spins = 8\nzeeman_frequencies = 1.0\n[jumps]\nper_particle_rate = 0.125\nshell_half_width = 0.9\n[boltzmann-check]\ntarget_energy = {target}\ntotal_time = 400.0\nn_samples = 1601\n"
    );
    let record = execute(&text)?;
    let (mean, se) = mean_se(&values(&record, 0, "distance"));
    let beta = record.summary["beta"];
    let upper = record.summary["target_upper_probability"];
    let detail = format!(
        "beta {beta:.6}, target upper level {upper:.6}, mean per-spin TV {mean:.4}±{se:.4} (initial {:.4})",
        record.summary["initial_distance"]
    );
    if mean < 0.05 && (upper - 1.0 / 3.0).abs() < 1e-12 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("rate arithmetic", rate_arithmetic),
        ("frozen occupations without jumps", frozen_occupations),
        ("perfect reversal", perfect_reversal),
        ("irreversibility from jumps", irreversibility_ladder),
        ("ensemble identities", ensemble_identities),
        ("Lagrange profile vs enumeration", lagrange_vs_enumeration),
        ("equilibration on the energy shell", equilibration),
        ("separation of time correlations", correlation_separation),
        ("determinism and parallel safety", determinism),
        ("Boltzmann single-spin marginals", boltzmann_marginals),
    ];
    let mut failures = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS criterion {}: {name}: {detail} [{secs:.1}s]", k + 1),
            Err(detail) => {
                failures += 1;
                println!("FAIL criterion {}: {name}: {detail} [{secs:.1}s]", k + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failures} failed", criteria.len() - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}

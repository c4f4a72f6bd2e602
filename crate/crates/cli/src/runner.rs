//! Executes a validated run: one shared system, many seeded trajectories.

use std::collections::BTreeMap;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use xprob_core::ensembles::{
    boltzmann_profile, brute_force_max_multiplicity, normalized_l1, particle_level_probability, partition_values,
    pseudo_particle_distribution, round_profile, solve_beta, LevelSpec, BRUTE_FORCE_MAX_LEVELS,
    BRUTE_FORCE_MAX_PARTICLES,
};
use xprob_core::experiments::{
    boltzmann_distance, correlation_experiment, echo_experiment, equilibration_experiment, ergodicity_check,
    BoltzmannParams, BoltzmannSetup, CorrelationParams,
};
use xprob_core::xjump::{rate_from_interaction, spectral_fraction_width};
use xprob_core::{PreparedSystem, XJumpConfig};

use crate::config::{Experiment, LagSpec, LevelSource, RunConfig, ShellWidth, Temperature};
use crate::record::{Cell, Metadata, ResultRecord, TrajectoryOutput, SCHEMA_VERSION};

/// Environment variable holding the default worker count.
pub const WORKERS_ENV: &str = "XPROB_WORKERS";

#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct RunError(pub String);

impl From<xprob_core::Error> for RunError {
    fn from(e: xprob_core::Error) -> Self {
        RunError(e.to_string())
    }
}

/// Worker count: explicit flag, then the environment, then the machine's parallelism.
pub fn resolve_workers(flag: Option<usize>) -> Result<usize, String> {
    if let Some(n) = flag {
        return if n == 0 { Err("--workers must be >= 1".into()) } else { Ok(n) };
    }
    match std::env::var(WORKERS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n),
            _ => Err(format!("{WORKERS_ENV}={v:?} is not a positive integer")),
        },
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

/// Channel configuration with the shell width and rate resolved against the system.
pub fn resolve_jumps(config: &RunConfig, prepared: &PreparedSystem) -> Result<XJumpConfig, RunError> {
    let j = &config.jumps;
    let shell_half_width = match j.shell_half_width {
        ShellWidth::Absolute(w) => w,
        ShellWidth::SpectralFraction(f) => spectral_fraction_width(&prepared.eigen, f),
    };
    let mut cfg = XJumpConfig::new(0.0, shell_half_width, j.mechanism)?;
    cfg.rate_coupling = j.rate_coupling;
    cfg.per_particle_rate = match j.per_particle_rate {
        Some(r) => r,
        None => rate_from_interaction(&prepared.hamiltonian.interaction, &cfg)?,
    };
    cfg.validate()?;
    Ok(cfg)
}

type Job<'a> = Box<dyn Fn(usize, u64) -> xprob_core::Result<Vec<Option<f64>>> + Sync + 'a>;

struct Plan<'a> {
    columns: Vec<String>,
    cells: Vec<(String, BTreeMap<String, f64>)>,
    summary: BTreeMap<String, f64>,
    notes: Vec<String>,
    /// `None` for runs without trajectories.
    job: Option<Job<'a>>,
    fixed_rows: Vec<Vec<Option<f64>>>,
}

fn plan<'a>(config: &'a RunConfig, prepared: Option<&'a PreparedSystem>, jumps: Option<&'a XJumpConfig>) -> Result<Plan<'a>, RunError> {
    let missing = || RunError("this experiment needs a [system] section".into());
    let rate_cell = |rate: f64| (format!("rate={rate}"), BTreeMap::from([("per_particle_rate".to_string(), rate)]));
    let mut summary = BTreeMap::new();
    let mut notes = Vec::new();
    let columns = |names: &[&str]| names.iter().map(|s| s.to_string()).collect::<Vec<_>>();

    Ok(match &config.experiment {
        Experiment::Echo(e) => {
            let (p, base) = (prepared.ok_or_else(missing)?, jumps.ok_or_else(missing)?);
            let rates = if e.rate_ladder.is_empty() {
                vec![base.per_particle_rate]
            } else {
                e.rate_ladder.clone()
            };
            let configs: Vec<XJumpConfig> = rates
                .iter()
                .map(|&r| XJumpConfig {
                    per_particle_rate: r,
                    ..base.clone()
                })
                .collect();
            let obs = p.eigen_operator(&e.observable)?;
            summary.insert("shell_half_width".into(), base.shell_half_width);
            Plan {
                columns: columns(&["fidelity", "observable_recovery", "n_jumps"]),
                cells: rates.iter().map(|&r| rate_cell(r)).collect(),
                summary,
                notes,
                job: Some(Box::new(move |cell, seed| {
                    let initial = e.initial_state.prepare(p, seed)?;
                    let r = echo_experiment(p, &initial, e.forward_time, e.reversal_epsilon, &configs[cell], Some(&obs), seed)?;
                    Ok(vec![Some(r.fidelity), r.observable_recovery, Some(r.n_jumps as f64)])
                })),
                fixed_rows: vec![],
            }
        }
        Experiment::Equilibrate(e) => {
            let (p, cfg) = (prepared.ok_or_else(missing)?, jumps.ok_or_else(missing)?);
            summary.insert("shell_half_width".into(), cfg.shell_half_width);
            summary.insert("burn_in".into(), e.burn_in.unwrap_or_else(|| p.default_burn_in(cfg)));
            Plan {
                columns: columns(&["final_divergence", "shell_weight_deviation", "max_occupation_drift", "n_jumps", "shell_size"]),
                cells: vec![rate_cell(cfg.per_particle_rate)],
                summary,
                notes,
                job: Some(Box::new(move |_, seed| {
                    let initial = e.initial_state.prepare(p, seed)?;
                    let r = equilibration_experiment(p, &initial, e.total_time, e.n_samples, cfg, e.burn_in, seed)?;
                    let w0 = r.shell_weight.values[0];
                    let deviation = r.shell_weight.values.iter().map(|w| (w - w0).abs()).fold(0.0, f64::max);
                    Ok(vec![
                        r.divergence.last(),
                        Some(deviation),
                        Some(r.max_occupation_drift),
                        Some(r.n_jumps as f64),
                        Some(r.shell.len() as f64),
                    ])
                })),
                fixed_rows: vec![],
            }
        }
        Experiment::BoltzmannCheck(b) => {
            let (p, cfg) = (prepared.ok_or_else(missing)?, jumps.ok_or_else(missing)?);
            let setup = BoltzmannSetup::new(p, b.target_energy)?;
            summary.insert("beta".into(), setup.beta);
            summary.insert("target_upper_probability".into(), setup.target[1]);
            summary.insert("initial_distance".into(), setup.initial_distance);
            summary.insert("shell_half_width".into(), cfg.shell_half_width);
            notes.extend(setup.warnings.iter().cloned());
            let params = BoltzmannParams {
                target_energy: b.target_energy,
                total_time: b.total_time,
                n_samples: b.n_samples,
                burn_in: b.burn_in,
            };
            Plan {
                columns: columns(&["distance"]),
                cells: vec![rate_cell(cfg.per_particle_rate)],
                summary,
                notes,
                job: Some(Box::new(move |_, seed| Ok(vec![Some(boltzmann_distance(p, &setup, cfg, &params, seed)?)]))),
                fixed_rows: vec![],
            }
        }
        Experiment::Correlate(c) => {
            let (p, cfg) = (prepared.ok_or_else(missing)?, jumps.ok_or_else(missing)?);
            let interval = p.mean_jump_interval(cfg);
            let steps_up_to = |max_lag: f64| {
                let k = (max_lag / c.sample_step * (1.0 - 1e-12)).ceil() as usize;
                (0..=k).map(|j| j as f64 * c.sample_step).collect::<Vec<_>>()
            };
            let lags = match &c.lags {
                LagSpec::List(l) => l.clone(),
                LagSpec::UpTo(m) => steps_up_to(*m),
                LagSpec::Intervals(k) => {
                    if !interval.is_finite() {
                        return Err(RunError(
                            "correlate: lags in jump intervals need a positive jump rate; give lags or max_lag".into(),
                        ));
                    }
                    steps_up_to(k * interval)
                }
            };
            if interval.is_finite() {
                summary.insert("mean_jump_interval".into(), interval);
            }
            let f = p.eigen_operator(&c.f)?;
            let g = p.eigen_operator(&c.g)?;
            let params = CorrelationParams {
                lags: lags.clone(),
                trajectory_time: c.trajectory_time,
                sample_step: c.sample_step,
                burn_in: c.burn_in,
            };
            Plan {
                columns: lags.iter().map(|l| format!("r_lag_{l}")).collect(),
                cells: vec![rate_cell(cfg.per_particle_rate)],
                summary,
                notes,
                job: Some(Box::new(move |_, seed| {
                    let initial = c.initial_state.prepare(p, seed)?;
                    let g_op = if c.f == c.g { &f } else { &g };
                    let r = correlation_experiment(p, &initial, &f, g_op, &params, cfg, seed)?;
                    Ok(r.values.into_iter().map(Some).collect())
                })),
                fixed_rows: vec![],
            }
        }
        Experiment::Ergodicity(e) => {
            let (p, cfg) = (prepared.ok_or_else(missing)?, jumps.ok_or_else(missing)?);
            let a = p.eigen_operator(&e.observable)?;
            Plan {
                columns: columns(&["time_average", "ensemble_average", "gap", "n_jumps"]),
                cells: vec![rate_cell(cfg.per_particle_rate)],
                summary,
                notes,
                job: Some(Box::new(move |_, seed| {
                    let initial = e.initial_state.prepare(p, seed)?;
                    let r = ergodicity_check(p, &initial, &a, cfg, e.trajectory_time, e.sample_step, e.burn_in, seed)?;
                    Ok(vec![
                        Some(r.time_average),
                        Some(r.ensemble_average),
                        Some(r.gap),
                        Some(r.n_jumps as f64),
                    ])
                })),
                fixed_rows: vec![],
            }
        }
        Experiment::Ensemble(e) => {
            let levels = match &e.levels {
                LevelSource::Explicit { energies, degeneracies } => LevelSpec::new(energies.clone(), degeneracies.clone())?,
                LevelSource::FromSystem => LevelSpec::from_spectrum(prepared.ok_or_else(missing)?.eigen.energies(), 1e-9)?,
            };
            let n = e.n_particles;
            let beta = match e.temperature {
                Temperature::Beta(b) => b,
                Temperature::TargetEnergy(t) => solve_beta(&levels, n, t)?,
            };
            let thermo = partition_values(&levels, n, beta)?;
            let mut cols = vec!["beta", "z1", "log_z", "free_energy", "internal_energy"]
                .into_iter()
                .map(String::from)
                .collect::<Vec<_>>();
            let mut row = vec![
                Some(beta),
                Some(thermo.z1),
                Some(thermo.log_z),
                thermo.free_energy,
                Some(thermo.internal_energy),
            ];
            for (i, w) in particle_level_probability(&levels, beta)?.into_iter().enumerate() {
                cols.push(format!("w_{i}"));
                row.push(Some(w));
            }
            for (i, n_i) in boltzmann_profile(&levels, n, beta)?.occupations.into_iter().enumerate() {
                cols.push(format!("n_{i}"));
                row.push(Some(n_i));
            }
            if !e.interaction_energies.is_empty() {
                for (k, w) in pseudo_particle_distribution(&e.interaction_energies, beta)?.into_iter().enumerate() {
                    cols.push(format!("w_int_{k}"));
                    row.push(Some(w));
                }
            }
            if let Temperature::TargetEnergy(t) = e.temperature {
                if n <= BRUTE_FORCE_MAX_PARTICLES && levels.len() <= BRUTE_FORCE_MAX_LEVELS {
                    match brute_force_max_multiplicity(&levels, n, t) {
                        Ok(best) => {
                            let rounded: Vec<f64> = round_profile(&boltzmann_profile(&levels, n, beta)?, n)
                                .into_iter()
                                .map(|c| c as f64)
                                .collect();
                            let counts: Vec<f64> = best.profile.iter().map(|&c| c as f64).collect();
                            for (i, c) in counts.iter().enumerate() {
                                cols.push(format!("max_multiplicity_n_{i}"));
                                row.push(Some(*c));
                            }
                            cols.push("max_log_multiplicity".into());
                            row.push(Some(best.log_multiplicity));
                            cols.push("lagrange_l1_gap".into());
                            row.push(Some(normalized_l1(&counts, &rounded, n)));
                            if best.ties > 1 {
                                notes.push(format!("{} profiles tie for the maximum multiplicity", best.ties));
                            }
                        }
                        Err(err) => notes.push(format!("enumeration skipped: {err}")),
                    }
                }
            }
            if config.n_trajectories > 1 {
                notes.push("ensemble runs are deterministic; one row is emitted".into());
            }
            Plan {
                columns: cols,
                cells: vec![("ensemble".into(), BTreeMap::new())],
                summary,
                notes,
                job: None,
                fixed_rows: vec![row],
            }
        }
    })
}

/// Runs every (cell, trajectory) pair on `workers` threads and merges in key order.
pub fn run(config: &RunConfig, workers: usize) -> Result<ResultRecord, RunError> {
    let started = Instant::now();
    let started_unix_ms = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis());
    let prepared = match &config.system {
        Some(s) => Some(PreparedSystem::with_max_spins(s.build()?, s.max_spins)?),
        None => None,
    };
    let jumps = prepared.as_ref().map(|p| resolve_jumps(config, p)).transpose()?;
    let plan = plan(config, prepared.as_ref(), jumps.as_ref())?;

    let trajectories: Vec<TrajectoryOutput> = match &plan.job {
        Some(job) => {
            let keys: Vec<(usize, usize)> = (0..plan.cells.len())
                .flat_map(|c| (0..config.n_trajectories).map(move |t| (c, t)))
                .collect();
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(workers)
                .build()
                .map_err(|e| RunError(format!("cannot start worker pool: {e}")))?;
            pool.install(|| {
                keys.par_iter()
                    .map(|&(cell, trajectory)| {
                        let seed = config.trajectory_seed(trajectory);
                        let (values, error) = match job(cell, seed) {
                            Ok(v) => (v, None),
                            Err(e) => {
                                log::warn!("cell {cell} trajectory {trajectory}: {e}");
                                (Vec::new(), Some(e.to_string()))
                            }
                        };
                        TrajectoryOutput {
                            cell,
                            trajectory,
                            seed,
                            values,
                            error,
                        }
                    })
                    .collect()
            })
        }
        None => plan
            .fixed_rows
            .iter()
            .enumerate()
            .map(|(k, row)| TrajectoryOutput {
                cell: 0,
                trajectory: k,
                seed: config.seed_base,
                values: row.clone(),
                error: None,
            })
            .collect(),
    };
    if !trajectories.is_empty() && trajectories.iter().all(|t| t.error.is_some()) {
        return Err(RunError(format!(
            "all {} trajectories failed; first error: {}",
            trajectories.len(),
            trajectories[0].error.as_deref().unwrap_or_default()
        )));
    }

    let aggregates = ResultRecord::compute_aggregates(&plan.columns, plan.cells.len(), &trajectories);
    let cells = plan
        .cells
        .into_iter()
        .zip(aggregates)
        .map(|((label, parameters), aggregates)| Cell {
            label,
            parameters,
            aggregates,
        })
        .collect();
    let mut notes = plan.notes;
    let failed = trajectories.iter().filter(|t| t.error.is_some()).count();
    if failed > 0 {
        notes.push(format!("{failed} trajectories failed"));
    }
    let record = ResultRecord {
        schema_version: SCHEMA_VERSION.into(),
        experiment: config.experiment.kind().name().into(),
        fingerprint: crate::record::fingerprint(config),
        tool_version: env!("CARGO_PKG_VERSION").into(),
        columns: plan.columns,
        cells,
        trajectories,
        summary: plan.summary,
        notes,
        metadata: Metadata {
            started_unix_ms,
            elapsed_seconds: started.elapsed().as_secs_f64(),
            workers,
        },
    };
    record.check_consistency().map_err(RunError)?;
    Ok(record)
}

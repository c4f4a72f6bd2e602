//! Run configuration: a TOML document with a `[system]` section, an optional
//! `[jumps]` section and exactly one experiment section.

use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize, Serializer};
use xprob_core::ensembles::LevelSpec;
use xprob_core::spin_model::DEFAULT_MAX_SPINS;
use xprob_core::xjump::{DEFAULT_SPECTRAL_FRACTION, JumpMechanism};
use xprob_core::{CouplingForm, InitialState, Observable, SpinSystem};

/// Where a configuration problem sits and what is wrong with it.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfigError {
    /// Dotted key path, empty for document-level problems.
    pub path: String,
    pub message: String,
    /// 1-based line and column for syntax errors.
    pub position: Option<(usize, usize)>,
}

impl ConfigError {
    fn at(path: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError {
            path: path.into(),
            message: message.into(),
            position: None,
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some((line, col)) = self.position {
            write!(f, "line {line}, column {col}: ")?;
        }
        if !self.path.is_empty() {
            write!(f, "`{}`: ", self.path)?;
        }
        f.write_str(&self.message)
    }
}

impl std::error::Error for ConfigError {}

type CResult<T> = std::result::Result<T, ConfigError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

impl std::str::FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            _ => Err(format!("unknown output format `{s}` (expected csv or json)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExperimentKind {
    Echo,
    Equilibrate,
    BoltzmannCheck,
    Correlate,
    Ergodicity,
    Ensemble,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 6] = [
        ExperimentKind::Echo,
        ExperimentKind::Equilibrate,
        ExperimentKind::BoltzmannCheck,
        ExperimentKind::Correlate,
        ExperimentKind::Ergodicity,
        ExperimentKind::Ensemble,
    ];

    /// Section name in the config file, also the CLI subcommand.
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Echo => "echo",
            ExperimentKind::Equilibrate => "equilibrate",
            ExperimentKind::BoltzmannCheck => "boltzmann-check",
            ExperimentKind::Correlate => "correlate",
            ExperimentKind::Ergodicity => "ergodicity",
            ExperimentKind::Ensemble => "ensemble",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn display<T: fmt::Display, S: Serializer>(value: &T, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(value)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SystemConfig {
    pub n_spins: usize,
    pub zeeman_frequencies: Vec<f64>,
    pub couplings: Vec<(usize, usize, f64)>,
    #[serde(serialize_with = "display")]
    pub coupling_form: CouplingForm,
    pub max_spins: usize,
}

impl SystemConfig {
    pub fn build(&self) -> xprob_core::Result<SpinSystem> {
        SpinSystem::new(self.zeeman_frequencies.clone(), self.couplings.iter().copied(), self.coupling_form)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ShellWidth {
    Absolute(f64),
    SpectralFraction(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct JumpsConfig {
    /// `None` when the rate follows from `rate_coupling`.
    pub per_particle_rate: Option<f64>,
    pub shell_half_width: ShellWidth,
    #[serde(serialize_with = "display")]
    pub mechanism: JumpMechanism,
    pub rate_coupling: Option<f64>,
    /// Salt mixed into every trajectory seed.
    pub seed: Option<u64>,
}

impl Default for JumpsConfig {
    fn default() -> Self {
        JumpsConfig {
            per_particle_rate: Some(0.0),
            shell_half_width: ShellWidth::SpectralFraction(DEFAULT_SPECTRAL_FRACTION),
            mechanism: JumpMechanism::ShellHaar,
            rate_coupling: None,
            seed: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EchoConfig {
    pub forward_time: f64,
    pub reversal_epsilon: f64,
    #[serde(serialize_with = "display")]
    pub initial_state: InitialState,
    #[serde(serialize_with = "display")]
    pub observable: Observable,
    /// Per-particle rates, one cell each; empty means the `[jumps]` rate.
    pub rate_ladder: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EquilibrateConfig {
    pub total_time: f64,
    pub n_samples: usize,
    #[serde(serialize_with = "display")]
    pub initial_state: InitialState,
    pub burn_in: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoltzmannConfig {
    pub target_energy: f64,
    pub total_time: f64,
    pub n_samples: usize,
    pub burn_in: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum LagSpec {
    /// Explicit lags.
    List(Vec<f64>),
    /// `0, step, ..., max_lag`.
    UpTo(f64),
    /// `0, step, ...` up to this many mean jump intervals.
    Intervals(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CorrelateConfig {
    #[serde(serialize_with = "display")]
    pub f: Observable,
    #[serde(serialize_with = "display")]
    pub g: Observable,
    pub lags: LagSpec,
    pub sample_step: f64,
    pub trajectory_time: f64,
    pub burn_in: Option<f64>,
    #[serde(serialize_with = "display")]
    pub initial_state: InitialState,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ErgodicityConfig {
    #[serde(serialize_with = "display")]
    pub observable: Observable,
    pub trajectory_time: f64,
    pub sample_step: f64,
    pub burn_in: Option<f64>,
    #[serde(serialize_with = "display")]
    pub initial_state: InitialState,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum LevelSource {
    Explicit { energies: Vec<f64>, degeneracies: Option<Vec<u32>> },
    /// Distinct eigenvalues of the `[system]` Hamiltonian with their multiplicities.
    FromSystem,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Temperature {
    Beta(f64),
    TargetEnergy(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnsembleConfig {
    pub levels: LevelSource,
    pub n_particles: u64,
    pub temperature: Temperature,
    pub interaction_energies: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Echo(EchoConfig),
    Equilibrate(EquilibrateConfig),
    BoltzmannCheck(BoltzmannConfig),
    Correlate(CorrelateConfig),
    Ergodicity(ErgodicityConfig),
    Ensemble(EnsembleConfig),
}

impl Experiment {
    pub fn kind(&self) -> ExperimentKind {
        match self {
            Experiment::Echo(_) => ExperimentKind::Echo,
            Experiment::Equilibrate(_) => ExperimentKind::Equilibrate,
            Experiment::BoltzmannCheck(_) => ExperimentKind::BoltzmannCheck,
            Experiment::Correlate(_) => ExperimentKind::Correlate,
            Experiment::Ergodicity(_) => ExperimentKind::Ergodicity,
            Experiment::Ensemble(_) => ExperimentKind::Ensemble,
        }
    }
}

/// A fully validated run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub seed_base: u64,
    pub n_trajectories: usize,
    pub output_path: Option<PathBuf>,
    pub output_format: OutputFormat,
    pub system: Option<SystemConfig>,
    pub jumps: JumpsConfig,
    pub experiment: Experiment,
}

impl RunConfig {
    /// Canonical JSON used for fingerprinting; output location is excluded.
    pub fn canonical_json(&self) -> String {
        let mut value = serde_json::to_value(self).expect("config serializes");
        if let Some(map) = value.as_object_mut() {
            map.remove("output_path");
            map.remove("output_format");
        }
        value.to_string()
    }

    /// Seed handed to the experiment for trajectory `index`.
    pub fn trajectory_seed(&self, index: usize) -> u64 {
        let base = self.seed_base.wrapping_add(index as u64);
        match self.jumps.seed {
            Some(salt) => xprob_core::seed::derive(base, salt),
            None => base,
        }
    }
}

// Raw document shapes. Unknown keys are caught before deserialization so the
// error can name the nearest valid key.

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    seed_base: Option<u64>,
    n_trajectories: Option<usize>,
    output_path: Option<PathBuf>,
    output_format: Option<String>,
    system: Option<RawSystem>,
    jumps: Option<RawJumps>,
    echo: Option<RawEcho>,
    equilibrate: Option<RawEquilibrate>,
    #[serde(rename = "boltzmann-check")]
    boltzmann_check: Option<RawBoltzmann>,
    correlate: Option<RawCorrelate>,
    ergodicity: Option<RawErgodicity>,
    ensemble: Option<RawEnsemble>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSystem {
    n_spins: Option<i64>,
    zeeman_frequencies: Option<OneOrMany>,
    couplings: Option<Vec<(i64, i64, f64)>>,
    coupling_form: Option<String>,
    max_spins: Option<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFraction {
    spectral_fraction: f64,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawWidth {
    Absolute(f64),
    Fraction(RawFraction),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawJumps {
    per_particle_rate: Option<f64>,
    shell_half_width: Option<RawWidth>,
    mechanism: Option<String>,
    rate_coupling: Option<f64>,
    seed: Option<u64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEcho {
    forward_time: Option<f64>,
    reversal_epsilon: Option<f64>,
    initial_state: Option<String>,
    observable: Option<String>,
    rate_ladder: Option<Vec<f64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEquilibrate {
    total_time: Option<f64>,
    n_samples: Option<usize>,
    initial_state: Option<String>,
    burn_in: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBoltzmann {
    target_energy: Option<f64>,
    total_time: Option<f64>,
    n_samples: Option<usize>,
    burn_in: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCorrelate {
    f: Option<String>,
    g: Option<String>,
    lags: Option<Vec<f64>>,
    max_lag: Option<f64>,
    max_lag_intervals: Option<f64>,
    sample_step: Option<f64>,
    trajectory_time: Option<f64>,
    burn_in: Option<f64>,
    initial_state: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawErgodicity {
    observable: Option<String>,
    trajectory_time: Option<f64>,
    sample_step: Option<f64>,
    burn_in: Option<f64>,
    initial_state: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEnsemble {
    energies: Option<Vec<f64>>,
    degeneracies: Option<Vec<u32>>,
    levels_from_system: Option<bool>,
    n_particles: Option<u64>,
    beta: Option<f64>,
    target_energy: Option<f64>,
    interaction_energies: Option<Vec<f64>>,
}

const TOP_KEYS: &[&str] = &[
    "seed_base",
    "n_trajectories",
    "output_path",
    "output_format",
    "system",
    "jumps",
    "echo",
    "equilibrate",
    "boltzmann-check",
    "correlate",
    "ergodicity",
    "ensemble",
];

fn section_keys(section: &str) -> Option<&'static [&'static str]> {
    Some(match section {
        "system" => &["n_spins", "zeeman_frequencies", "couplings", "coupling_form", "max_spins"],
        "jumps" => &["per_particle_rate", "shell_half_width", "mechanism", "rate_coupling", "seed"],
        "jumps.shell_half_width" => &["spectral_fraction"],
        "echo" => &["forward_time", "reversal_epsilon", "initial_state", "observable", "rate_ladder"],
        "equilibrate" => &["total_time", "n_samples", "initial_state", "burn_in"],
        "boltzmann-check" => &["target_energy", "total_time", "n_samples", "burn_in"],
        "correlate" => &[
            "f",
            "g",
            "lags",
            "max_lag",
            "max_lag_intervals",
            "sample_step",
            "trajectory_time",
            "burn_in",
            "initial_state",
        ],
        "ergodicity" => &["observable", "trajectory_time", "sample_step", "burn_in", "initial_state"],
        "ensemble" => &[
            "energies",
            "degeneracies",
            "levels_from_system",
            "n_particles",
            "beta",
            "target_energy",
            "interaction_energies",
        ],
        _ => return None,
    })
}

fn nearest<'a>(key: &str, known: &[&'a str]) -> Option<&'a str> {
    known
        .iter()
        .map(|k| (strsim::levenshtein(key, k), *k))
        .filter(|&(d, k)| d <= 2.max(k.len() / 3))
        .min()
        .map(|(_, k)| k)
}

fn check_keys(table: &toml::Table, prefix: &str, known: &[&str]) -> CResult<()> {
    for (key, value) in table {
        let path = if prefix.is_empty() {
            key.clone()
        } else {
            format!("{prefix}.{key}")
        };
        if !known.contains(&key.as_str()) {
            let hint = match nearest(key, known) {
                Some(k) => format!("did you mean `{k}`?"),
                None => format!("expected one of: {}", known.join(", ")),
            };
            return Err(ConfigError::at(path, format!("unknown key `{key}`; {hint}")));
        }
        if let (toml::Value::Table(inner), Some(keys)) = (value, section_keys(&path)) {
            check_keys(inner, &path, keys)?;
        }
    }
    Ok(())
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.chars().rev().take_while(|&c| c != '\n').count() + 1;
    (line, col)
}

fn syntax_error(text: &str, err: &toml::de::Error) -> ConfigError {
    ConfigError {
        path: String::new(),
        message: err.message().trim().to_string(),
        position: err.span().map(|s| line_col(text, s.start)),
    }
}

/// Parses and validates a TOML run document.
pub fn parse_config(text: &str) -> CResult<RunConfig> {
    let table: toml::Table = text.parse().map_err(|e| syntax_error(text, &e))?;
    check_keys(&table, "", TOP_KEYS)?;
    let raw: RawConfig = toml::from_str(text).map_err(|e| syntax_error(text, &e))?;
    validate(raw)
}

fn require<T>(value: Option<T>, path: &str) -> CResult<T> {
    value.ok_or_else(|| ConfigError::at(path, "required key is missing"))
}

fn positive(value: f64, path: &str) -> CResult<f64> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(ConfigError::at(path, format!("must be finite and > 0, got {value}")))
    }
}

fn non_negative(value: f64, path: &str) -> CResult<f64> {
    if value >= 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(ConfigError::at(path, format!("must be finite and >= 0, got {value}")))
    }
}

fn optional_non_negative(value: Option<f64>, path: &str) -> CResult<Option<f64>> {
    value.map(|v| non_negative(v, path)).transpose()
}

fn parse_with<T: std::str::FromStr>(value: &str, path: &str) -> CResult<T>
where
    T::Err: fmt::Display,
{
    value.parse().map_err(|e: T::Err| ConfigError::at(path, e.to_string()))
}

fn initial_state(value: Option<String>, path: &str, n_spins: usize) -> CResult<InitialState> {
    let state: InitialState = parse_with(value.as_deref().unwrap_or("neel"), path)?;
    if let InitialState::Basis(bits) = &state {
        if bits.len() != n_spins {
            return Err(ConfigError::at(path, format!("{} bits given for {n_spins} spins", bits.len())));
        }
    }
    Ok(state)
}

fn observable(value: Option<String>, default: &str, path: &str, n_spins: usize) -> CResult<Observable> {
    let obs: Observable = parse_with(value.as_deref().unwrap_or(default), path)?;
    if let Observable::Site(_, i) = obs {
        if i >= n_spins {
            return Err(ConfigError::at(path, format!("spin {i} out of range for {n_spins} spins")));
        }
    }
    Ok(obs)
}

fn validate_system(raw: RawSystem) -> CResult<SystemConfig> {
    let max_spins = raw.max_spins.unwrap_or(DEFAULT_MAX_SPINS);
    if max_spins == 0 || max_spins > 20 {
        return Err(ConfigError::at("system.max_spins", format!("{max_spins} outside 1..=20")));
    }
    let n = require(raw.n_spins, "system.n_spins")?;
    if n < 1 || n as usize > max_spins {
        return Err(ConfigError::at("system.n_spins", format!("{n} outside 1..={max_spins}")));
    }
    let n = n as usize;
    let zeeman_frequencies = match raw.zeeman_frequencies.unwrap_or(OneOrMany::One(1.0)) {
        OneOrMany::One(w) => vec![w; n],
        OneOrMany::Many(ws) if ws.len() == n => ws,
        OneOrMany::Many(ws) => {
            return Err(ConfigError::at(
                "system.zeeman_frequencies",
                format!("{} frequencies given for {n} spins", ws.len()),
            ))
        }
    };
    if let Some(k) = zeeman_frequencies.iter().position(|w| !w.is_finite()) {
        return Err(ConfigError::at(format!("system.zeeman_frequencies[{k}]"), "must be finite"));
    }
    let mut couplings = Vec::new();
    for (k, (i, j, c)) in raw.couplings.unwrap_or_default().into_iter().enumerate() {
        let path = format!("system.couplings[{k}]");
        let in_range = |x: i64| x >= 0 && (x as usize) < n;
        if !in_range(i) || !in_range(j) {
            return Err(ConfigError::at(path, format!("spin index out of range for {n} spins")));
        }
        if i == j {
            return Err(ConfigError::at(path, format!("self-coupling ({i}, {i}) is not allowed")));
        }
        if !c.is_finite() {
            return Err(ConfigError::at(path, "coupling strength must be finite"));
        }
        couplings.push((i as usize, j as usize, c));
    }
    let coupling_form = parse_with(raw.coupling_form.as_deref().unwrap_or("secular-dipolar"), "system.coupling_form")?;
    let system = SystemConfig {
        n_spins: n,
        zeeman_frequencies,
        couplings,
        coupling_form,
        max_spins,
    };
    // asymmetric duplicates and anything else the model rejects
    system.build().map_err(|e| ConfigError::at("system.couplings", e.to_string()))?;
    Ok(system)
}

fn validate_jumps(raw: Option<RawJumps>) -> CResult<JumpsConfig> {
    let Some(raw) = raw else {
        return Ok(JumpsConfig::default());
    };
    let shell_half_width = match raw.shell_half_width {
        None => ShellWidth::SpectralFraction(DEFAULT_SPECTRAL_FRACTION),
        Some(RawWidth::Absolute(w)) => ShellWidth::Absolute(positive(w, "jumps.shell_half_width")?),
        Some(RawWidth::Fraction(f)) => {
            ShellWidth::SpectralFraction(positive(f.spectral_fraction, "jumps.shell_half_width.spectral_fraction")?)
        }
    };
    let rate_coupling = optional_non_negative(raw.rate_coupling, "jumps.rate_coupling")?;
    let per_particle_rate = match (raw.per_particle_rate, rate_coupling) {
        (Some(_), Some(_)) => {
            return Err(ConfigError::at(
                "jumps.rate_coupling",
                "give either per_particle_rate or rate_coupling, not both",
            ))
        }
        (Some(r), None) => Some(non_negative(r, "jumps.per_particle_rate")?),
        (None, Some(_)) => None,
        (None, None) => Some(0.0),
    };
    Ok(JumpsConfig {
        per_particle_rate,
        shell_half_width,
        mechanism: parse_with(raw.mechanism.as_deref().unwrap_or("shell-haar"), "jumps.mechanism")?,
        rate_coupling,
        seed: raw.seed,
    })
}

fn sample_count(value: Option<usize>, default: usize, path: &str) -> CResult<usize> {
    let n = value.unwrap_or(default);
    if n < 2 {
        return Err(ConfigError::at(path, format!("needs at least 2 samples, got {n}")));
    }
    Ok(n)
}

fn validate(raw: RawConfig) -> CResult<RunConfig> {
    let mut sections = Vec::new();
    let kinds = [
        (ExperimentKind::Echo, raw.echo.is_some()),
        (ExperimentKind::Equilibrate, raw.equilibrate.is_some()),
        (ExperimentKind::BoltzmannCheck, raw.boltzmann_check.is_some()),
        (ExperimentKind::Correlate, raw.correlate.is_some()),
        (ExperimentKind::Ergodicity, raw.ergodicity.is_some()),
        (ExperimentKind::Ensemble, raw.ensemble.is_some()),
    ];
    sections.extend(kinds.iter().filter(|(_, present)| *present).map(|(k, _)| k.name()));
    match sections.len() {
        0 => {
            let names: Vec<_> = ExperimentKind::ALL.iter().map(|k| k.name()).collect();
            return Err(ConfigError::at("", format!("no experiment section; add one of [{}]", names.join("], ["))));
        }
        1 => {}
        _ => {
            return Err(ConfigError::at(
                "",
                format!("exactly one experiment section is allowed, found [{}]", sections.join("], [")),
            ))
        }
    }

    let n_trajectories = raw.n_trajectories.unwrap_or(1);
    if n_trajectories < 1 {
        return Err(ConfigError::at("n_trajectories", "must be >= 1"));
    }
    let output_format = parse_with(raw.output_format.as_deref().unwrap_or("csv"), "output_format")?;
    let jumps = validate_jumps(raw.jumps)?;
    let system = raw.system.map(validate_system).transpose()?;
    let needs_system = raw.ensemble.as_ref().is_none_or(|e| e.levels_from_system == Some(true));
    let n_spins = match (&system, needs_system) {
        (Some(s), _) => s.n_spins,
        (None, true) => return Err(ConfigError::at("system", "required section is missing")),
        (None, false) => 0,
    };
    if jumps.rate_coupling.is_some() && system.is_none() {
        return Err(ConfigError::at("jumps.rate_coupling", "needs a [system] section"));
    }

    let experiment = if let Some(e) = raw.echo {
        let mut rate_ladder = e.rate_ladder.unwrap_or_default();
        for (k, r) in rate_ladder.iter_mut().enumerate() {
            *r = non_negative(*r, &format!("echo.rate_ladder[{k}]"))?;
        }
        Experiment::Echo(EchoConfig {
            forward_time: positive(e.forward_time.unwrap_or(1.0), "echo.forward_time")?,
            reversal_epsilon: non_negative(e.reversal_epsilon.unwrap_or(0.0), "echo.reversal_epsilon")?,
            initial_state: initial_state(e.initial_state, "echo.initial_state", n_spins)?,
            observable: observable(e.observable, "sx:total", "echo.observable", n_spins)?,
            rate_ladder,
        })
    } else if let Some(e) = raw.equilibrate {
        Experiment::Equilibrate(EquilibrateConfig {
            total_time: positive(e.total_time.unwrap_or(100.0), "equilibrate.total_time")?,
            n_samples: sample_count(e.n_samples, 200, "equilibrate.n_samples")?,
            initial_state: initial_state(e.initial_state, "equilibrate.initial_state", n_spins)?,
            burn_in: optional_non_negative(e.burn_in, "equilibrate.burn_in")?,
        })
    } else if let Some(b) = raw.boltzmann_check {
        let target = require(b.target_energy, "boltzmann-check.target_energy")?;
        if !target.is_finite() {
            return Err(ConfigError::at("boltzmann-check.target_energy", "must be finite"));
        }
        Experiment::BoltzmannCheck(BoltzmannConfig {
            target_energy: target,
            total_time: positive(b.total_time.unwrap_or(100.0), "boltzmann-check.total_time")?,
            n_samples: sample_count(b.n_samples, 200, "boltzmann-check.n_samples")?,
            burn_in: optional_non_negative(b.burn_in, "boltzmann-check.burn_in")?,
        })
    } else if let Some(c) = raw.correlate {
        let sample_step = positive(c.sample_step.unwrap_or(0.5), "correlate.sample_step")?;
        let lags = match (c.lags, c.max_lag, c.max_lag_intervals) {
            (Some(lags), None, None) => {
                if lags.is_empty() {
                    return Err(ConfigError::at("correlate.lags", "needs at least one lag"));
                }
                for (k, w) in lags.windows(2).enumerate() {
                    if w[1] <= w[0] {
                        return Err(ConfigError::at(format!("correlate.lags[{}]", k + 1), "lags must ascend strictly"));
                    }
                }
                for (k, &lag) in lags.iter().enumerate() {
                    let steps = (non_negative(lag, &format!("correlate.lags[{k}]"))? / sample_step).round();
                    if (steps * sample_step - lag).abs() > 1e-9 * lag.max(sample_step) {
                        return Err(ConfigError::at(
                            format!("correlate.lags[{k}]"),
                            format!("{lag} is not a multiple of sample_step {sample_step}"),
                        ));
                    }
                }
                LagSpec::List(lags)
            }
            (None, Some(m), None) => LagSpec::UpTo(non_negative(m, "correlate.max_lag")?),
            (None, None, Some(k)) => LagSpec::Intervals(positive(k, "correlate.max_lag_intervals")?),
            (None, None, None) => LagSpec::Intervals(10.0),
            _ => {
                return Err(ConfigError::at(
                    "correlate",
                    "give only one of lags, max_lag, max_lag_intervals",
                ))
            }
        };
        let f = observable(c.f, "sz:0", "correlate.f", n_spins)?;
        let g = match c.g {
            Some(g) => observable(Some(g), "", "correlate.g", n_spins)?,
            None => f.clone(),
        };
        Experiment::Correlate(CorrelateConfig {
            f,
            g,
            lags,
            sample_step,
            trajectory_time: positive(c.trajectory_time.unwrap_or(1000.0), "correlate.trajectory_time")?,
            burn_in: optional_non_negative(c.burn_in, "correlate.burn_in")?,
            initial_state: initial_state(c.initial_state, "correlate.initial_state", n_spins)?,
        })
    } else if let Some(e) = raw.ergodicity {
        Experiment::Ergodicity(ErgodicityConfig {
            observable: observable(e.observable, "sz:total", "ergodicity.observable", n_spins)?,
            trajectory_time: positive(e.trajectory_time.unwrap_or(1000.0), "ergodicity.trajectory_time")?,
            sample_step: positive(e.sample_step.unwrap_or(0.5), "ergodicity.sample_step")?,
            burn_in: optional_non_negative(e.burn_in, "ergodicity.burn_in")?,
            initial_state: initial_state(e.initial_state, "ergodicity.initial_state", n_spins)?,
        })
    } else {
        let e = raw.ensemble.expect("one section is present");
        let levels = match (e.energies, e.levels_from_system.unwrap_or(false)) {
            (Some(_), true) => {
                return Err(ConfigError::at(
                    "ensemble.levels_from_system",
                    "give either energies or levels_from_system",
                ))
            }
            (Some(energies), false) => {
                LevelSpec::new(energies.clone(), e.degeneracies.clone())
                    .map_err(|err| ConfigError::at("ensemble.energies", err.to_string()))?;
                LevelSource::Explicit {
                    energies,
                    degeneracies: e.degeneracies,
                }
            }
            (None, true) => {
                if e.degeneracies.is_some() {
                    return Err(ConfigError::at(
                        "ensemble.degeneracies",
                        "degeneracies come from the spectrum when levels_from_system is set",
                    ));
                }
                LevelSource::FromSystem
            }
            (None, false) => return Err(ConfigError::at("ensemble.energies", "required key is missing")),
        };
        let n_particles = require(e.n_particles, "ensemble.n_particles")?;
        if n_particles == 0 {
            return Err(ConfigError::at("ensemble.n_particles", "must be >= 1"));
        }
        let temperature = match (e.beta, e.target_energy) {
            (Some(b), None) if b.is_finite() => Temperature::Beta(b),
            (None, Some(t)) if t.is_finite() => Temperature::TargetEnergy(t),
            (Some(_), None) => return Err(ConfigError::at("ensemble.beta", "must be finite")),
            (None, Some(_)) => return Err(ConfigError::at("ensemble.target_energy", "must be finite")),
            _ => return Err(ConfigError::at("ensemble", "give exactly one of beta, target_energy")),
        };
        Experiment::Ensemble(EnsembleConfig {
            levels,
            n_particles,
            temperature,
            interaction_energies: e.interaction_energies.unwrap_or_default(),
        })
    };

    Ok(RunConfig {
        seed_base: raw.seed_base.unwrap_or(0),
        n_trajectories,
        output_path: raw.output_path,
        output_format,
        system,
        jumps,
        experiment,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "[system]\nn_spins = 2\n\n[echo]\n";

    #[test]
    fn minimal_document_gets_defaults() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.seed_base, 0);
        assert_eq!(c.n_trajectories, 1);
        assert_eq!(c.output_format, OutputFormat::Csv);
        let s = c.system.unwrap();
        assert_eq!(s.zeeman_frequencies, vec![1.0, 1.0]);
        assert_eq!(s.coupling_form, CouplingForm::SecularDipolar);
        assert_eq!(c.jumps, JumpsConfig::default());
        let Experiment::Echo(e) = c.experiment else { panic!() };
        assert_eq!(e.forward_time, 1.0);
        assert_eq!(e.initial_state, InitialState::Neel);
    }

    #[test]
    fn field_paths_in_errors() {
        let e = parse_config("[system]\nn_spins = 0\n[echo]\n").unwrap_err();
        assert_eq!(e.path, "system.n_spins");
        let e = parse_config("[system]\nn_spins = 2\ncouplings = [[0, 0, 1.0]]\n[echo]\n").unwrap_err();
        assert_eq!(e.path, "system.couplings[0]");
        let e = parse_config("[system]\nn_spins = 2\n[jumps]\nshell_half_width = -1\n[echo]\n").unwrap_err();
        assert_eq!(e.path, "jumps.shell_half_width");
        let e = parse_config("[system]\nn_spins = 2\n[echo]\nobservable = \"sz:5\"\n").unwrap_err();
        assert_eq!(e.path, "echo.observable");
    }

    #[test]
    fn unknown_keys_get_suggestions() {
        let e = parse_config("[system]\nn_spins = 2\n[jumps]\nmechansim = \"shell-haar\"\n[echo]\n").unwrap_err();
        assert_eq!(e.path, "jumps.mechansim");
        assert!(e.message.contains("did you mean `mechanism`"), "{e}");
        let e = parse_config("sed_base = 3\n[system]\nn_spins = 2\n[echo]\n").unwrap_err();
        assert!(e.message.contains("`seed_base`"), "{e}");
        let e = parse_config("[system]\nn_spins = 2\n[jumps]\nshell_half_width = { spectral_fractoin = 0.1 }\n[echo]\n")
            .unwrap_err();
        assert_eq!(e.path, "jumps.shell_half_width.spectral_fractoin");
    }

    #[test]
    fn syntax_errors_report_position() {
        let e = parse_config("[system]\nn_spins = = 2\n").unwrap_err();
        assert_eq!(e.position.map(|p| p.0), Some(2));
    }

    #[test]
    fn experiment_section_count() {
        assert!(parse_config("[system]\nn_spins = 2\n").is_err());
        assert!(parse_config("[system]\nn_spins = 2\n[echo]\n[equilibrate]\n").is_err());
        // the ensemble needs no system
        assert!(parse_config("[ensemble]\nenergies = [0, 1]\nn_particles = 3\nbeta = 0.5\n").is_ok());
    }

    #[test]
    fn shell_width_forms_and_rate_source() {
        let c = parse_config("[system]\nn_spins = 2\n[jumps]\nshell_half_width = { spectral_fraction = 0.1 }\nrate_coupling = 0.5\n[echo]\n")
            .unwrap();
        assert_eq!(c.jumps.shell_half_width, ShellWidth::SpectralFraction(0.1));
        assert_eq!(c.jumps.per_particle_rate, None);
        let e = parse_config("[system]\nn_spins = 2\n[jumps]\nper_particle_rate = 1\nrate_coupling = 0.5\n[echo]\n");
        assert!(e.is_err());
    }

    #[test]
    fn fingerprint_input_ignores_output_location() {
        let a = parse_config(&format!("output_path = \"a.csv\"\n{MINIMAL}")).unwrap();
        let b = parse_config(&format!("output_path = \"b.json\"\noutput_format = \"json\"\n{MINIMAL}")).unwrap();
        assert_eq!(a.canonical_json(), b.canonical_json());
    }

    #[test]
    fn trajectory_seeds() {
        let c = parse_config(&format!("seed_base = 10\n{MINIMAL}")).unwrap();
        assert_eq!(c.trajectory_seed(3), 13);
        let salted = parse_config("seed_base = 10\n[system]\nn_spins = 2\n[jumps]\nseed = 7\n[echo]\n").unwrap();
        assert_ne!(salted.trajectory_seed(3), 13);
    }
}

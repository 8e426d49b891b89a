//! Flat key=value experiment configuration with `#` comments.
//!
//! Keys follow the model's symbol names (lambda_b, lambda_u, alpha, W,
//! tau, L, B_C, B_B, gamma, M_max) plus harness controls. Unknown keys
//! and malformed values are reported with their line number.

use std::path::{Path, PathBuf};

use freqcache_core::model::SystemConfig;
use freqcache_core::optimizer::BaselineKind;

/// Errors mapped to process exit codes: configuration problems exit 1,
/// numerical failures exit 2.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Numerical(_) => 2,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Numerical(m) => m,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

pub fn from_core(err: freqcache_core::Error) -> CliError {
    use freqcache_core::Error as E;
    match err {
        E::Numerical(_) | E::TruncationTail { .. } => CliError::Numerical(err.to_string()),
        _ => CliError::Config(err.to_string()),
    }
}

/// Which system parameter a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    CacheFiles,
    BackhaulFiles,
    ZipfExp,
    None,
}

impl SweepAxis {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "B_C" => Some(SweepAxis::CacheFiles),
            "B_B" => Some(SweepAxis::BackhaulFiles),
            "gamma" => Some(SweepAxis::ZipfExp),
            "none" => Some(SweepAxis::None),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SweepAxis::CacheFiles => "B_C",
            SweepAxis::BackhaulFiles => "B_B",
            SweepAxis::ZipfExp => "gamma",
            SweepAxis::None => "none",
        }
    }
}

/// Inclusive start:stop:step range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRange {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl SweepRange {
    pub fn parse(s: &str) -> Result<Self, CliError> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(CliError::Config(format!(
                "range must be start:stop:step, got `{s}`"
            )));
        }
        let nums: Vec<f64> = parts
            .iter()
            .map(|p| {
                p.parse::<f64>()
                    .map_err(|_| CliError::Config(format!("invalid range component `{p}`")))
            })
            .collect::<Result<_, _>>()?;
        let range = SweepRange {
            start: nums[0],
            stop: nums[1],
            step: nums[2],
        };
        range.values()?;
        Ok(range)
    }

    /// Expands to the inclusive value grid.
    pub fn values(&self) -> Result<Vec<f64>, CliError> {
        if self.step.is_nan() || self.step <= 0.0 {
            return Err(CliError::Config(format!(
                "range step must be positive, got {}",
                self.step
            )));
        }
        if self.stop < self.start {
            return Err(CliError::Config(format!(
                "range stop {} below start {}",
                self.stop, self.start
            )));
        }
        let count = ((self.stop - self.start) / self.step + 1.0 + 1e-9).floor() as usize;
        if count == 0 || count > 10_000 {
            return Err(CliError::Config(format!("range expands to {count} points")));
        }
        Ok((0..count)
            .map(|i| self.start + i as f64 * self.step)
            .collect())
    }
}

/// Everything one experiment run needs.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub sys: SystemConfig,
    pub m_max: u32,
    pub n_trials: u32,
    pub base_seed: u64,
    pub bs_per_group: f64,
    pub axis: SweepAxis,
    pub range: Option<SweepRange>,
    pub schemes: Vec<BaselineKind>,
    pub out: Option<PathBuf>,
    pub fixed_ppp: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            sys: SystemConfig::default(),
            m_max: 5,
            n_trials: 200,
            base_seed: 1,
            bs_per_group: 50.0,
            axis: SweepAxis::None,
            range: None,
            schemes: vec![BaselineKind::Proposed],
            out: None,
            fixed_ppp: false,
        }
    }
}

fn parse_schemes(s: &str) -> Result<Vec<BaselineKind>, CliError> {
    let mut schemes = Vec::new();
    for name in s.split(',').map(str::trim).filter(|n| !n.is_empty()) {
        let kind = BaselineKind::parse(name)
            .ok_or_else(|| CliError::Config(format!("unknown scheme `{name}`")))?;
        if !schemes.contains(&kind) {
            schemes.push(kind);
        }
    }
    if schemes.is_empty() {
        return Err(CliError::Config("scheme list must be nonempty".into()));
    }
    Ok(schemes)
}

fn parse_bool(v: &str) -> Option<bool> {
    match v {
        "true" | "1" | "yes" => Some(true),
        "false" | "0" | "no" => Some(false),
        _ => None,
    }
}

/// Parses the key=value text into a full experiment configuration.
pub fn parse_config_text(text: &str) -> Result<ExperimentConfig, CliError> {
    let mut cfg = ExperimentConfig::default();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CliError::Config(format!("line {line_no}: expected key=value, got `{line}`"))
        })?;
        let key = key.trim();
        let value = value.trim();
        set_key(&mut cfg, key, value)
            .map_err(|msg| CliError::Config(format!("line {line_no}: {msg}")))?;
    }
    validate(&cfg)?;
    Ok(cfg)
}

fn set_key(cfg: &mut ExperimentConfig, key: &str, value: &str) -> Result<(), String> {
    fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, String> {
        value
            .parse::<T>()
            .map_err(|_| format!("invalid value for `{key}`: `{value}`"))
    }
    match key {
        "lambda_b" => cfg.sys.bs_density = num(key, value)?,
        "lambda_u" => cfg.sys.user_density = num(key, value)?,
        "alpha" => cfg.sys.pathloss_exp = num(key, value)?,
        "W" => cfg.sys.bandwidth_hz = num(key, value)?,
        "tau" => cfg.sys.target_rate_bps = num(key, value)?,
        "P" => cfg.sys.tx_power_w = num(key, value)?,
        "N0" => cfg.sys.noise_psd = num(key, value)?,
        "nu" => cfg.sys.slot_s = num(key, value)?,
        "L" => cfg.sys.library_size = num(key, value)?,
        "F" => cfg.sys.file_bits = num(key, value)?,
        "B_C" => cfg.sys.cache_files = num(key, value)?,
        "B_B" => cfg.sys.backhaul_files = num(key, value)?,
        "gamma" => cfg.sys.zipf_exp = num(key, value)?,
        "M_max" => cfg.m_max = num(key, value)?,
        "n_trials" => cfg.n_trials = num(key, value)?,
        "base_seed" => cfg.base_seed = num(key, value)?,
        "bs_per_group" => cfg.bs_per_group = num(key, value)?,
        "axis" => {
            cfg.axis = SweepAxis::parse(value)
                .ok_or_else(|| format!("invalid value for `axis`: `{value}`"))?
        }
        "range" => cfg.range = Some(SweepRange::parse(value).map_err(|e| e.message().to_string())?),
        "schemes" => cfg.schemes = parse_schemes(value).map_err(|e| e.message().to_string())?,
        "out" => cfg.out = Some(PathBuf::from(value)),
        "fixed_ppp" => {
            cfg.fixed_ppp = parse_bool(value)
                .ok_or_else(|| format!("invalid value for `fixed_ppp`: `{value}`"))?
        }
        _ => return Err(format!("unknown key `{key}`")),
    }
    Ok(())
}

fn validate(cfg: &ExperimentConfig) -> Result<(), CliError> {
    cfg.sys.validate().map_err(from_core)?;
    if cfg.m_max == 0 {
        return Err(CliError::Config("M_max must be at least 1".into()));
    }
    if cfg.n_trials == 0 {
        return Err(CliError::Config("n_trials must be at least 1".into()));
    }
    if cfg.bs_per_group.is_nan() || cfg.bs_per_group < 4.0 {
        return Err(CliError::Config(format!(
            "bs_per_group must be at least 4, got {}",
            cfg.bs_per_group
        )));
    }
    if cfg.axis != SweepAxis::None && cfg.range.is_none() {
        return Err(CliError::Config(format!(
            "axis {} requires a range",
            cfg.axis.name()
        )));
    }
    if let (axis, Some(range)) = (cfg.axis, cfg.range) {
        for v in range.values()? {
            check_axis_value(axis, v)?;
        }
    }
    Ok(())
}

fn check_axis_value(axis: SweepAxis, v: f64) -> Result<(), CliError> {
    match axis {
        SweepAxis::CacheFiles | SweepAxis::BackhaulFiles => {
            if v < 0.0 || (v - v.round()).abs() > 1e-9 {
                return Err(CliError::Config(format!(
                    "{} sweep values must be nonnegative integers, got {v}",
                    axis.name()
                )));
            }
        }
        SweepAxis::ZipfExp => {
            if v < 0.0 {
                return Err(CliError::Config(format!("gamma sweep value negative: {v}")));
            }
        }
        SweepAxis::None => {}
    }
    Ok(())
}

/// Loads the configuration file when given, otherwise the defaults.
pub fn load_config(path: Option<&Path>) -> Result<ExperimentConfig, CliError> {
    match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| {
                CliError::Config(format!("cannot read config {}: {e}", p.display()))
            })?;
            parse_config_text(&text)
        }
        None => Ok(ExperimentConfig::default()),
    }
}

/// Command-line flag overrides, applied after the file.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub trials: Option<u32>,
    pub out: Option<PathBuf>,
    pub axis: Option<String>,
    pub range: Option<String>,
    pub schemes: Option<String>,
    pub fixed_ppp: bool,
}

pub fn apply_overrides(cfg: &mut ExperimentConfig, ov: &Overrides) -> Result<(), CliError> {
    if let Some(seed) = ov.seed {
        cfg.base_seed = seed;
    }
    if let Some(trials) = ov.trials {
        cfg.n_trials = trials;
    }
    if let Some(out) = &ov.out {
        cfg.out = Some(out.clone());
    }
    if let Some(axis) = &ov.axis {
        cfg.axis = SweepAxis::parse(axis)
            .ok_or_else(|| CliError::Config(format!("invalid value for `axis`: `{axis}`")))?;
    }
    if let Some(range) = &ov.range {
        cfg.range = Some(SweepRange::parse(range)?);
    }
    if let Some(schemes) = &ov.schemes {
        cfg.schemes = parse_schemes(schemes)?;
    }
    if ov.fixed_ppp {
        cfg.fixed_ppp = true;
    }
    if cfg.n_trials == 0 {
        return Err(CliError::Config("n_trials must be at least 1".into()));
    }
    if cfg.axis != SweepAxis::None && cfg.range.is_none() {
        return Err(CliError::Config(format!(
            "axis {} requires a range",
            cfg.axis.name()
        )));
    }
    if let (axis, Some(range)) = (cfg.axis, cfg.range) {
        for v in range.values()? {
            check_axis_value(axis, v)?;
        }
    }
    Ok(())
}

/// The system configuration with one axis value applied.
pub fn config_at(sys: &SystemConfig, axis: SweepAxis, value: f64) -> SystemConfig {
    let mut cfg = sys.clone();
    match axis {
        SweepAxis::CacheFiles => cfg.cache_files = value.round() as usize,
        SweepAxis::BackhaulFiles => cfg.backhaul_files = value.round() as u32,
        SweepAxis::ZipfExp => cfg.zipf_exp = value,
        SweepAxis::None => {}
    }
    cfg
}

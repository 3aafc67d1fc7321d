//! Run configuration files.
//!
//! A configuration is a TOML document with the sections `[grid]`, `[fluid]`,
//! `[fluid.exponent]`, `[time]`, `[monitor]`, `[initial]`, `[forcing]`,
//! `[twin]` and `[sweep]`, plus the top-level keys `mode` and `seed`. Only
//! `[grid]` is mandatory. Unknown keys are rejected.
//!
//! Environment variables `CHEMFLOW_<SECTION>__<KEY>=<value>` override
//! individual keys before validation; `__` separates nesting levels and the
//! value is read as a TOML literal when possible, as a string otherwise.

use std::fmt;

use chemflow_core::solver::initial::{cosine_profile, random_smooth_scalar, random_smooth_velocity, shear_mode, taylor_green};
use chemflow_core::{ExponentFn, ForcingSpec, GridSpec, ScalarField, Scheme, SolverConfig, StressModel, VectorField};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const ENV_PREFIX: &str = "CHEMFLOW_";

/// Smallest `p_minus` of the well-posedness regime in three dimensions.
pub const P_MINUS_3D: f64 = 1.4;

/// A configuration problem, located by key and line when possible.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub struct ConfigError {
    pub key: Option<String>,
    pub line: Option<usize>,
    pub message: String,
}

impl ConfigError {
    pub fn new(key: Option<&str>, message: impl Into<String>) -> Self {
        Self {
            key: key.map(str::to_owned),
            line: None,
            message: message.into(),
        }
    }

    fn at(mut self, source: &str) -> Self {
        if self.line.is_none() {
            if let Some(key) = &self.key {
                self.line = locate(source, key);
            }
        }
        self
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error")?;
        match (&self.key, self.line) {
            (Some(k), Some(l)) => write!(f, " at line {l} (key `{k}`)")?,
            (Some(k), None) => write!(f, " (key `{k}`)")?,
            (None, Some(l)) => write!(f, " at line {l}")?,
            (None, None) => {}
        }
        write!(f, ": {}", self.message)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Shear-thinning regime only.
    #[default]
    Solver,
    /// Also admits `p_plus > 2`.
    Analysis,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    #[serde(default)]
    pub mode: Mode,
    #[serde(default)]
    pub seed: u64,
    pub grid: GridSection,
    #[serde(default)]
    pub fluid: FluidSection,
    #[serde(default)]
    pub time: TimeSection,
    #[serde(default)]
    pub monitor: MonitorSection,
    #[serde(default)]
    pub initial: InitialSection,
    #[serde(default)]
    pub forcing: ForcingSection,
    #[serde(default)]
    pub twin: TwinSection,
    #[serde(default)]
    pub sweep: SweepSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub dim: usize,
    pub n: usize,
    /// Defaults to `n / 3`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cutoff: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FluidSection {
    pub nu0: f64,
    pub exponent: ExponentSection,
}

impl Default for FluidSection {
    fn default() -> Self {
        Self {
            nu0: 0.05,
            exponent: ExponentSection::Constant { p: 2.0 },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ExponentSection {
    Constant {
        p: f64,
    },
    Logistic {
        p_lo: f64,
        p_hi: f64,
        #[serde(default)]
        c_mid: f64,
        #[serde(default = "default_slope")]
        slope: f64,
    },
    Affine {
        a: f64,
        b: f64,
        p_minus: f64,
        p_plus: f64,
    },
}

fn default_slope() -> f64 {
    4.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeName {
    #[default]
    ImexEuler,
    ImexRk2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimeSection {
    pub dt: f64,
    pub t_end: f64,
    pub scheme: SchemeName,
}

impl Default for TimeSection {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            t_end: 0.1,
            scheme: SchemeName::ImexEuler,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MonitorSection {
    /// Defaults to 4 in 3D and 3 in 2D.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    pub report_every: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub snapshot_every: Option<usize>,
    pub blowup_threshold: f64,
}

impl Default for MonitorSection {
    fn default() -> Self {
        Self {
            q: None,
            report_every: 10,
            snapshot_every: None,
            blowup_threshold: SolverConfig::DEFAULT_BLOWUP_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitialSection {
    pub delta: f64,
    pub velocity: VelocityInit,
    pub concentration: ConcentrationInit,
}

impl Default for InitialSection {
    fn default() -> Self {
        Self {
            delta: SolverConfig::DEFAULT_DELTA,
            velocity: VelocityInit::Zero,
            concentration: ConcentrationInit::Constant { value: 0.0 },
        }
    }
}

fn one() -> f64 {
    1.0
}

fn two() -> f64 {
    2.0
}

fn one_u32() -> u32 {
    1
}

fn axis_y() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum VelocityInit {
    Zero,
    /// `v_component = amplitude sin(2 pi mode x_axis)`
    Shear {
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default)]
        component: usize,
        #[serde(default = "axis_y")]
        axis: usize,
        #[serde(default = "one_u32")]
        mode: u32,
    },
    TaylorGreen {
        #[serde(default = "one")]
        amplitude: f64,
    },
    /// Divergence-free with `||v||_2 = amplitude`.
    Random {
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default = "two")]
        scale: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ConcentrationInit {
    Constant {
        #[serde(default)]
        value: f64,
    },
    /// `mean + amplitude cos(2 pi x_axis)`
    Cosine {
        #[serde(default)]
        mean: f64,
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default)]
        axis: usize,
    },
    Random {
        #[serde(default)]
        mean: f64,
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default = "two")]
        scale: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ForcingSection {
    #[default]
    Zero,
    /// `amplitude sin(2 pi k . x)` in one component.
    SingleMode {
        k: Vec<i64>,
        amplitude: f64,
        #[serde(default)]
        component: usize,
    },
    /// Single mode scaled by `1 + rate t`.
    Ramp {
        k: Vec<i64>,
        amplitude: f64,
        #[serde(default)]
        component: usize,
        rate: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TwinSection {
    pub eps: Vec<f64>,
    /// Spectral width of the random perturbation direction.
    pub direction_scale: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub direction_seed: Option<u64>,
}

impl Default for TwinSection {
    fn default() -> Self {
        Self {
            eps: vec![1e-4, 1e-5, 1e-6],
            direction_scale: 2.0,
            direction_seed: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepAxis {
    Cutoff,
    Eps,
    Dt,
}

impl std::str::FromStr for SweepAxis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "cutoff" => Ok(SweepAxis::Cutoff),
            "eps" => Ok(SweepAxis::Eps),
            "dt" => Ok(SweepAxis::Dt),
            _ => Err(format!("unknown sweep axis `{s}` (expected cutoff, eps or dt)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub axis: Option<SweepAxis>,
    pub cutoffs: Vec<usize>,
    pub dt: Vec<f64>,
}

/// Values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    /// `(name, value)` pairs; names without [`ENV_PREFIX`] are ignored.
    pub env: Vec<(String, String)>,
}

impl Overrides {
    /// Seed override plus the process environment.
    pub fn from_env(seed: Option<u64>) -> Self {
        Self {
            seed,
            env: std::env::vars().filter(|(k, _)| k.starts_with(ENV_PREFIX)).collect(),
        }
    }
}

/// A validated configuration together with the experiment around it.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub raw: RawConfig,
    pub solver: SolverConfig,
    pub warnings: Vec<String>,
    resolved: String,
}

impl Experiment {
    /// Parses, overrides, fills defaults and validates.
    pub fn parse(source: &str, overrides: &Overrides) -> Result<Self, ConfigError> {
        let raw = parse_raw(source, overrides)?;
        Self::from_raw(raw).map_err(|e| e.at(source))
    }

    pub fn from_raw(mut raw: RawConfig) -> Result<Self, ConfigError> {
        resolve_defaults(&mut raw);
        let mut warnings = Vec::new();
        let solver = build_solver(&raw, &mut warnings)?;
        validate_experiment(&raw)?;
        let resolved = toml::to_string(&raw).map_err(|e| ConfigError::new(None, e.to_string()))?;
        Ok(Self {
            raw,
            solver,
            warnings,
            resolved,
        })
    }

    pub fn seed(&self) -> u64 {
        self.raw.seed
    }

    /// The configuration with every default filled in, as TOML.
    pub fn resolved_toml(&self) -> &str {
        &self.resolved
    }

    /// Hex SHA-256 of [`Experiment::resolved_toml`].
    pub fn config_hash(&self) -> String {
        let digest = Sha256::digest(self.resolved.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn options(&self) -> chemflow_core::RunOptions {
        chemflow_core::RunOptions {
            report_every: self.raw.monitor.report_every,
            snapshot_every: self.raw.monitor.snapshot_every,
            keep_final_state: false,
        }
    }

    /// Initial velocity sampled on `grid` (normally the configured grid).
    pub fn initial_velocity(&self, grid: GridSpec) -> chemflow_core::Result<VectorField> {
        match &self.raw.initial.velocity {
            VelocityInit::Zero => Ok(VectorField::zeros(grid)),
            VelocityInit::Shear {
                amplitude,
                component,
                axis,
                mode,
            } => shear_mode(grid, *amplitude, *component, *axis, *mode),
            VelocityInit::TaylorGreen { amplitude } => Ok(taylor_green(grid, *amplitude)),
            VelocityInit::Random { amplitude, scale, seed } => {
                random_smooth_velocity(grid, *amplitude, *scale, seed.unwrap_or(self.raw.seed))
            }
        }
    }

    pub fn initial_concentration(&self, grid: GridSpec) -> chemflow_core::Result<ScalarField> {
        match &self.raw.initial.concentration {
            ConcentrationInit::Constant { value } => Ok(ScalarField::constant(grid, *value)),
            ConcentrationInit::Cosine { mean, amplitude, axis } => Ok(cosine_profile(grid, *mean, *amplitude, *axis)),
            ConcentrationInit::Random {
                mean,
                amplitude,
                scale,
                seed,
            } => random_smooth_scalar(grid, *mean, *amplitude, *scale, seed.unwrap_or(self.raw.seed)),
        }
    }

    /// Unit-norm divergence-free perturbation direction for twin runs.
    pub fn twin_direction(&self) -> chemflow_core::Result<VectorField> {
        let t = &self.raw.twin;
        random_smooth_velocity(
            self.solver.grid,
            1.0,
            t.direction_scale,
            t.direction_seed.unwrap_or(self.raw.seed),
        )
    }
}

fn resolve_defaults(raw: &mut RawConfig) {
    let seed = raw.seed;
    raw.grid.cutoff.get_or_insert(raw.grid.n / 3);
    raw.monitor.q.get_or_insert(SolverConfig::default_q(raw.grid.dim));
    if let VelocityInit::Random { seed: s, .. } = &mut raw.initial.velocity {
        s.get_or_insert(seed);
    }
    if let ConcentrationInit::Random { seed: s, .. } = &mut raw.initial.concentration {
        s.get_or_insert(seed.wrapping_add(1));
    }
    raw.twin.direction_seed.get_or_insert(seed.wrapping_add(2));
}

fn core_err(key: &str, e: chemflow_core::Error) -> ConfigError {
    ConfigError::new(Some(key), e.to_string())
}

fn build_solver(raw: &RawConfig, warnings: &mut Vec<String>) -> Result<SolverConfig, ConfigError> {
    let g = &raw.grid;
    let grid = GridSpec::new(g.dim, g.n, g.cutoff.unwrap_or(g.n / 3)).map_err(|e| core_err("grid", e))?;
    let exponent = match raw.fluid.exponent {
        ExponentSection::Constant { p } => ExponentFn::constant(p),
        ExponentSection::Logistic { p_lo, p_hi, c_mid, slope } => ExponentFn::logistic(p_lo, p_hi, c_mid, slope),
        ExponentSection::Affine { a, b, p_minus, p_plus } => ExponentFn::affine(a, b, p_minus, p_plus),
    }
    .map_err(|e| core_err("fluid.exponent", e))?;
    if !exponent.is_shear_thinning() && raw.mode == Mode::Solver {
        return Err(ConfigError::new(
            Some("fluid.exponent"),
            format!(
                "p_plus = {} exceeds 2; shear-thickening exponents need mode = \"analysis\"",
                exponent.p_plus()
            ),
        ));
    }
    if g.dim == 3 && exponent.p_minus() <= P_MINUS_3D {
        warnings.push(format!(
            "p_minus = {} is not above {P_MINUS_3D}; outside the regime where 3D strong solutions are known to exist",
            exponent.p_minus()
        ));
    }
    let stress = StressModel::new(raw.fluid.nu0, exponent).map_err(|e| core_err("fluid.nu0", e))?;
    let q = raw.monitor.q.unwrap_or(SolverConfig::default_q(g.dim));
    if g.dim == 3 && !(q >= 4.0) {
        return Err(ConfigError::new(
            Some("monitor.q"),
            format!("the monitor exponent must be at least 4 in 3D, got {q}"),
        ));
    }
    let forcing = match &raw.forcing {
        ForcingSection::Zero => ForcingSpec::Zero,
        ForcingSection::SingleMode { k, amplitude, component } => single_mode(k, *amplitude, *component)?,
        ForcingSection::Ramp {
            k,
            amplitude,
            component,
            rate,
        } => ForcingSpec::TimeRamp {
            base: Box::new(single_mode(k, *amplitude, *component)?),
            rate: *rate,
        },
    };
    let cfg = SolverConfig {
        grid,
        stress,
        q,
        delta: raw.initial.delta,
        dt: raw.time.dt,
        t_end: raw.time.t_end,
        forcing,
        scheme: match raw.time.scheme {
            SchemeName::ImexEuler => Scheme::ImexEuler,
            SchemeName::ImexRk2 => Scheme::ImexRK2,
        },
        blowup_threshold: raw.monitor.blowup_threshold,
    };
    cfg.validate().map_err(|e| {
        let msg = e.to_string();
        let key = if msg.contains("dt") {
            "time.dt"
        } else if msg.contains("t_end") {
            "time.t_end"
        } else if msg.contains("delta") {
            "initial.delta"
        } else if msg.contains("threshold") {
            "monitor.blowup_threshold"
        } else if msg.contains("forcing") {
            "forcing"
        } else {
            "monitor.q"
        };
        ConfigError::new(Some(key), msg)
    })?;
    Ok(cfg)
}

fn single_mode(k: &[i64], amplitude: f64, component: usize) -> Result<ForcingSpec, ConfigError> {
    if k.is_empty() || k.len() > 3 {
        return Err(ConfigError::new(Some("forcing.k"), "forcing wavevector needs 1 to 3 entries"));
    }
    let mut kk = [0i64; 3];
    kk[..k.len()].copy_from_slice(k);
    Ok(ForcingSpec::SingleMode {
        k: kk,
        amplitude,
        component,
    })
}

fn validate_experiment(raw: &RawConfig) -> Result<(), ConfigError> {
    if raw.monitor.report_every == 0 {
        return Err(ConfigError::new(Some("monitor.report_every"), "must be at least 1"));
    }
    if raw.monitor.snapshot_every == Some(0) {
        return Err(ConfigError::new(Some("monitor.snapshot_every"), "must be at least 1"));
    }
    if let Some(e) = raw.twin.eps.iter().find(|e| !(**e >= 0.0) || !e.is_finite()) {
        return Err(ConfigError::new(Some("twin.eps"), format!("eps must be finite and >= 0, got {e}")));
    }
    if !(raw.twin.direction_scale > 0.0) {
        return Err(ConfigError::new(Some("twin.direction_scale"), "must be positive"));
    }
    let kmax = raw.grid.n / 3;
    if let Some(k) = raw.sweep.cutoffs.iter().find(|&&k| k == 0 || k > kmax) {
        return Err(ConfigError::new(
            Some("sweep.cutoffs"),
            format!("cutoff {k} outside 1..={kmax}"),
        ));
    }
    if let Some(dt) = raw.sweep.dt.iter().find(|d| !(**d > 0.0) || !d.is_finite()) {
        return Err(ConfigError::new(Some("sweep.dt"), format!("step sizes must be positive, got {dt}")));
    }
    Ok(())
}

fn parse_raw(source: &str, overrides: &Overrides) -> Result<RawConfig, ConfigError> {
    let mut table: toml::Table = toml::from_str(source).map_err(|e| de_error(source, &e))?;
    let mut patched = false;
    for (name, value) in &overrides.env {
        let Some(rest) = name.strip_prefix(ENV_PREFIX) else {
            continue;
        };
        let path: Vec<String> = rest.split("__").map(|s| s.to_ascii_lowercase()).collect();
        apply_override(&mut table, &path, value).map_err(|m| ConfigError::new(Some(&path.join(".")), m))?;
        patched = true;
    }
    if let Some(seed) = overrides.seed {
        let seed = i64::try_from(seed).map_err(|_| ConfigError::new(Some("seed"), "seed must fit in 63 bits"))?;
        table.insert("seed".into(), toml::Value::Integer(seed));
        patched = true;
    }
    if !patched {
        return toml::from_str(source).map_err(|e| de_error(source, &e));
    }
    let text = toml::to_string(&table).map_err(|e| ConfigError::new(None, e.to_string()))?;
    toml::from_str(&text).map_err(|e| {
        let mut err = de_error(&text, &e);
        err.line = None;
        err.at(source)
    })
}

fn apply_override(table: &mut toml::Table, path: &[String], value: &str) -> Result<(), String> {
    let (leaf, parents) = path.split_last().ok_or("empty override key")?;
    if leaf.is_empty() || parents.iter().any(|p| p.is_empty()) {
        return Err("malformed override key".into());
    }
    let mut cur = table;
    for p in parents {
        let entry = cur
            .entry(p.clone())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry.as_table_mut().ok_or_else(|| format!("`{p}` is not a section"))?;
    }
    let parsed = toml::from_str::<toml::Table>(&format!("v = {value}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(value.to_owned()));
    cur.insert(leaf.clone(), parsed);
    Ok(())
}

fn de_error(source: &str, e: &toml::de::Error) -> ConfigError {
    let (line, key) = match e.span() {
        Some(span) => (Some(line_of(source, span.start)), key_at(source, span.start)),
        None => (None, None),
    };
    let message = e.message().trim().to_owned();
    let key = backticked_field(&message).map(|f| match &key {
        Some(k) if !k.ends_with(&f) => {
            let section = k.rsplit_once('.').map(|(s, _)| s).unwrap_or("");
            join_key(section, &f)
        }
        _ => key.clone().unwrap_or(f),
    });
    ConfigError {
        key: key.or_else(|| key_at_owned(source, e)),
        line,
        message,
    }
}

fn key_at_owned(source: &str, e: &toml::de::Error) -> Option<String> {
    e.span().and_then(|s| key_at(source, s.start))
}

/// Field named in messages like "unknown field `foo`" or "missing field `foo`".
fn backticked_field(message: &str) -> Option<String> {
    if !(message.starts_with("unknown field") || message.starts_with("missing field")) {
        return None;
    }
    let start = message.find('`')? + 1;
    let len = message[start..].find('`')?;
    Some(message[start..start + len].to_owned())
}

fn line_of(source: &str, offset: usize) -> usize {
    source[..offset.min(source.len())].matches('\n').count() + 1
}

fn join_key(section: &str, leaf: &str) -> String {
    if section.is_empty() {
        leaf.to_owned()
    } else {
        format!("{section}.{leaf}")
    }
}

fn header(line: &str) -> Option<&str> {
    let t = line.trim();
    t.strip_prefix('[')
        .and_then(|s| s.strip_suffix(']'))
        .map(|s| s.trim_matches(|c| c == '[' || c == ']').trim())
}

fn leaf_of(line: &str) -> Option<&str> {
    let t = line.trim();
    if t.starts_with('#') || t.starts_with('[') {
        return None;
    }
    let (k, _) = t.split_once('=')?;
    Some(k.trim().trim_matches('"'))
}

/// Dotted key of the entry around byte `offset`.
fn key_at(source: &str, offset: usize) -> Option<String> {
    let offset = offset.min(source.len());
    let mut section = String::new();
    let line_start = source[..offset].rfind('\n').map_or(0, |i| i + 1);
    for line in source[..line_start].lines() {
        if let Some(h) = header(line) {
            section = h.to_owned();
        }
    }
    let line = source[line_start..].lines().next().unwrap_or("");
    if let Some(h) = header(line) {
        return Some(h.to_owned());
    }
    leaf_of(line).map(|leaf| join_key(&section, leaf)).or(Some(section).filter(|s| !s.is_empty()))
}

/// Line on which a dotted key is written, or its section header.
pub fn locate(source: &str, key: &str) -> Option<usize> {
    let mut section = String::new();
    let mut header_line = None;
    for (i, line) in source.lines().enumerate() {
        if let Some(h) = header(line) {
            section = h.to_owned();
            if section == key {
                return Some(i + 1);
            }
            if key.starts_with(&format!("{section}.")) && header_line.is_none() {
                header_line = Some(i + 1);
            }
            continue;
        }
        if let Some(leaf) = leaf_of(line) {
            if join_key(&section, leaf) == key {
                return Some(i + 1);
            }
        }
    }
    header_line
}

#[cfg(test)]
mod tests {
    use super::*;
    use chemflow_core::Field;

    const MINIMAL_2D: &str = r#"
[grid]
dim = 2
n = 64
cutoff = 21

[fluid.exponent]
shape = "logistic"
p_lo = 1.2
p_hi = 2.0

[time]
t_end = 0.1
"#;

    #[test]
    fn minimal_2d_gets_default_monitor_exponent() {
        let e = Experiment::parse(MINIMAL_2D, &Overrides::default()).unwrap();
        assert_eq!(e.solver.q, 3.0);
        assert_eq!(e.solver.scheme, Scheme::ImexEuler);
        assert_eq!(e.solver.delta, 0.05);
        assert_eq!(e.solver.grid.cutoff(), 21);
        assert!(e.warnings.is_empty());
    }

    #[test]
    fn cutoff_defaults_to_a_third() {
        let e = Experiment::parse("[grid]\ndim = 2\nn = 32\n", &Overrides::default()).unwrap();
        assert_eq!(e.solver.grid.cutoff(), 10);
        assert!(e.resolved_toml().contains("cutoff = 10"));
    }

    #[test]
    fn q_below_four_in_3d_is_rejected() {
        let src = "[grid]\ndim = 3\nn = 16\n\n[monitor]\nq = 3.0\n";
        let err = Experiment::parse(src, &Overrides::default()).unwrap_err();
        assert_eq!(err.key.as_deref(), Some("monitor.q"));
        assert_eq!(err.line, Some(6));
    }

    #[test]
    fn low_p_minus_in_3d_warns() {
        let src = "[grid]\ndim = 3\nn = 16\n\n[fluid.exponent]\nshape = \"constant\"\np = 1.3\n";
        let e = Experiment::parse(src, &Overrides::default()).unwrap();
        assert_eq!(e.warnings.len(), 1);
        let a = Experiment::parse(&format!("mode = \"analysis\"\n{src}"), &Overrides::default()).unwrap();
        assert_eq!(a.warnings.len(), 1);
    }

    #[test]
    fn shear_thickening_needs_analysis_mode() {
        let src = "[grid]\ndim = 2\nn = 16\n\n[fluid.exponent]\nshape = \"constant\"\np = 2.5\n";
        let err = Experiment::parse(src, &Overrides::default()).unwrap_err();
        assert_eq!(err.key.as_deref(), Some("fluid.exponent"));
        assert!(Experiment::parse(&format!("mode = \"analysis\"\n{src}"), &Overrides::default()).is_ok());
    }

    #[test]
    fn unknown_key_reports_line() {
        let src = "[grid]\ndim = 2\nn = 16\n\n[time]\ndt = 0.01\nstep = 3\n";
        let err = Experiment::parse(src, &Overrides::default()).unwrap_err();
        assert_eq!(err.line, Some(7));
        assert_eq!(err.key.as_deref(), Some("time.step"));
        assert!(err.message.contains("unknown field"), "{err}");
    }

    #[test]
    fn unknown_top_level_key_rejected() {
        let err = Experiment::parse("colour = 1\n[grid]\ndim = 2\nn = 16\n", &Overrides::default()).unwrap_err();
        assert_eq!(err.key.as_deref(), Some("colour"));
        assert_eq!(err.line, Some(1));
    }

    #[test]
    fn missing_grid_is_an_error() {
        assert!(Experiment::parse("[time]\ndt = 0.1\n", &Overrides::default()).is_err());
    }

    #[test]
    fn syntax_error_has_line() {
        let err = Experiment::parse("[grid]\ndim = 2\nn = = 3\n", &Overrides::default()).unwrap_err();
        assert_eq!(err.line, Some(3));
    }

    #[test]
    fn env_overrides_apply() {
        let ov = Overrides {
            seed: Some(9),
            env: vec![
                ("CHEMFLOW_TIME__DT".into(), "0.002".into()),
                ("CHEMFLOW_TIME__SCHEME".into(), "imex-rk2".into()),
                ("CHEMFLOW_FLUID__NU0".into(), "0.2".into()),
                ("OTHER_VAR".into(), "x".into()),
            ],
        };
        let e = Experiment::parse(MINIMAL_2D, &ov).unwrap();
        assert_eq!(e.solver.dt, 0.002);
        assert_eq!(e.solver.scheme, Scheme::ImexRK2);
        assert_eq!(e.solver.stress.nu0(), 0.2);
        assert_eq!(e.seed(), 9);
    }

    #[test]
    fn env_override_errors_point_at_the_file() {
        let ov = Overrides {
            seed: None,
            env: vec![("CHEMFLOW_TIME__DT".into(), "-1.0".into())],
        };
        let err = Experiment::parse(MINIMAL_2D, &ov).unwrap_err();
        assert_eq!(err.key.as_deref(), Some("time.dt"));
        let ov = Overrides {
            seed: None,
            env: vec![("CHEMFLOW_TIME__DTT".into(), "1.0".into())],
        };
        let err = Experiment::parse(MINIMAL_2D, &ov).unwrap_err();
        assert_eq!(err.key.as_deref(), Some("time.dtt"));
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = Experiment::parse(MINIMAL_2D, &Overrides::default()).unwrap();
        let b = Experiment::parse(MINIMAL_2D, &Overrides::default()).unwrap();
        assert_eq!(a.config_hash(), b.config_hash());
        assert_eq!(a.config_hash().len(), 64);
        let c = Experiment::parse(MINIMAL_2D, &Overrides { seed: Some(1), env: vec![] }).unwrap();
        assert_ne!(a.config_hash(), c.config_hash());
    }

    #[test]
    fn resolved_toml_round_trips() {
        let a = Experiment::parse(MINIMAL_2D, &Overrides::default()).unwrap();
        let b = Experiment::parse(a.resolved_toml(), &Overrides::default()).unwrap();
        assert_eq!(a.resolved_toml(), b.resolved_toml());
        assert_eq!(a.solver, b.solver);
    }

    #[test]
    fn tagged_sections_parse() {
        let src = r#"
[grid]
dim = 2
n = 32

[initial.velocity]
kind = "random"
amplitude = 0.5

[initial.concentration]
kind = "cosine"
mean = 1.0

[forcing]
kind = "ramp"
k = [1, 0]
amplitude = 2.0
component = 1
rate = 0.5
"#;
        let e = Experiment::parse(src, &Overrides::default()).unwrap();
        let v = e.initial_velocity(e.solver.grid).unwrap();
        let norm: f64 = v.to_spectrum().norm_sq().sqrt();
        assert!((norm - 0.5).abs() < 1e-12);
        let c = e.initial_concentration(e.solver.grid).unwrap();
        assert!((c.mean() - 1.0).abs() < 1e-12);
        assert!(matches!(e.solver.forcing, ForcingSpec::TimeRamp { .. }));
    }

    #[test]
    fn locate_finds_keys_and_sections() {
        let src = "seed = 1\n[grid]\ndim = 2\n\n[fluid.exponent]\np = 2\n";
        assert_eq!(locate(src, "seed"), Some(1));
        assert_eq!(locate(src, "grid.dim"), Some(3));
        assert_eq!(locate(src, "fluid.exponent.p"), Some(6));
        assert_eq!(locate(src, "fluid.exponent"), Some(5));
        assert_eq!(locate(src, "grid.n"), Some(2));
    }
}

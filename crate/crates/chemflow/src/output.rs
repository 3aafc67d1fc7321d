//! Output tree: CSV tables, snapshots, reports and the run manifest.
//!
//! Floats are written with Rust's shortest round-trip formatting, so every
//! value read back parses to the identical `f64`.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use chemflow_core::solver::{Snapshot, StageDiagnostics, StepRecord};
use chemflow_core::{EnergyReport, InequalityReport, RunReport};
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::torf;

pub const MANIFEST: &str = "manifest";
pub const CONFIG: &str = "config.toml";
pub const ENERGIES: &str = "energies.csv";
pub const DIAGNOSTICS: &str = "diagnostics.csv";
pub const SNAPSHOTS: &str = "snapshots";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TerminationKind {
    Completed,
    BlowUpDetected,
    ConfigError,
    /// Any other error after the configuration was accepted.
    Failed,
}

impl TerminationKind {
    pub fn exit_code(self) -> u8 {
        match self {
            TerminationKind::Completed => 0,
            TerminationKind::BlowUpDetected => 2,
            TerminationKind::ConfigError | TerminationKind::Failed => 1,
        }
    }
}

/// Record of one command invocation, written to `<out>/manifest` as TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config_hash: String,
    pub seed: u64,
    pub termination: TerminationKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blowup_time: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    #[serde(default)]
    pub warnings: Vec<String>,
    /// Paths relative to the output directory.
    #[serde(default)]
    pub outputs: Vec<String>,
    /// Verification verdicts by check name.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub checks: BTreeMap<String, bool>,
}

impl RunManifest {
    pub fn read(dir: &Path) -> Result<Self, CliError> {
        let path = dir.join(MANIFEST);
        let text = fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
        toml::from_str(&text).map_err(|e| CliError::Format(format!("{}: {e}", path.display())))
    }

    pub fn exit_code(&self) -> u8 {
        self.termination.exit_code()
    }
}

/// Output directory that remembers what was written into it.
#[derive(Debug)]
pub struct OutDir {
    root: PathBuf,
    outputs: Vec<String>,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
        Ok(Self {
            root: root.to_path_buf(),
            outputs: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn outputs(&self) -> &[String] {
        &self.outputs
    }

    /// Absolute path for `rel`, with parent directories created.
    fn claim(&mut self, rel: &str) -> Result<PathBuf, CliError> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
        }
        self.outputs.push(rel.to_owned());
        Ok(path)
    }

    pub fn write_text(&mut self, rel: &str, text: &str) -> Result<(), CliError> {
        let path = self.claim(rel)?;
        fs::write(&path, text).map_err(|e| CliError::io(&path, e))
    }

    /// CSV with a header row and one row of floats per record.
    pub fn write_table<I>(&mut self, rel: &str, header: &[&str], rows: I) -> Result<(), CliError>
    where
        I: IntoIterator<Item = Vec<f64>>,
    {
        let path = self.claim(rel)?;
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(header)?;
        for row in rows {
            w.write_record(row.iter().map(|&x| fmt_f64(x)))?;
        }
        w.flush().map_err(|e| CliError::io(&path, e))
    }

    pub fn write_energies(&mut self, rel: &str, rows: &[EnergyReport]) -> Result<(), CliError> {
        self.write_table(rel, &EnergyReport::COLUMNS, rows.iter().map(|r| r.values().to_vec()))
    }

    /// Long format `t,quantity,value`.
    pub fn write_diagnostics(&mut self, rel: &str, report: &RunReport) -> Result<(), CliError> {
        let path = self.claim(rel)?;
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(["t", "quantity", "value"])?;
        for (t, name, value) in report.diagnostics_long() {
            w.write_record([fmt_f64(t).as_str(), name, fmt_f64(value).as_str()])?;
        }
        w.flush().map_err(|e| CliError::io(&path, e))
    }

    /// `v_XXXXXX.torf` and `c_XXXXXX.torf` per snapshot, numbered by step.
    pub fn write_snapshots(&mut self, dir: &str, snaps: &[Snapshot]) -> Result<(), CliError> {
        for s in snaps {
            let rel = format!("{dir}/v_{:06}.torf", s.step);
            let path = self.claim(&rel)?;
            torf::write_file(&s.velocity, &path).map_err(|e| CliError::io(&path, e))?;
            let rel = format!("{dir}/c_{:06}.torf", s.step);
            let path = self.claim(&rel)?;
            torf::write_file(&s.concentration, &path).map_err(|e| CliError::io(&path, e))?;
        }
        Ok(())
    }

    /// Energies, diagnostics and snapshots of one run under `prefix`.
    pub fn write_run(&mut self, prefix: &str, report: &RunReport) -> Result<(), CliError> {
        self.write_energies(&join(prefix, ENERGIES), &report.rows)?;
        self.write_diagnostics(&join(prefix, DIAGNOSTICS), report)?;
        self.write_snapshots(&join(prefix, SNAPSHOTS), &report.snapshots)
    }

    /// `<name>.report` with `key = value` lines and `<name>.csv` with the
    /// compared series.
    pub fn write_inequality(&mut self, dir: &str, r: &InequalityReport) -> Result<(), CliError> {
        let mut text = String::new();
        text.push_str(&format!("name = {}\n", r.name));
        text.push_str(&format!("satisfied = {}\n", r.satisfied));
        text.push_str(&format!("empirical_constant = {}\n", fmt_f64(r.empirical_constant)));
        text.push_str(&format!("tolerance = {}\n", fmt_f64(r.tolerance)));
        for (k, v) in &r.details {
            text.push_str(&format!("{k} = {}\n", fmt_f64(*v)));
        }
        self.write_text(&format!("{dir}/{}.report", r.name), &text)?;
        let rows = r
            .lhs_series
            .iter()
            .zip(&r.rhs_series)
            .map(|(&(t, l), &(_, rh))| vec![t, l, rh]);
        self.write_table(&format!("{dir}/{}.csv", r.name), &["t", "lhs", "rhs"], rows)
    }

    pub fn write_manifest(&mut self, manifest: &RunManifest) -> Result<(), CliError> {
        let text = toml::to_string(manifest).map_err(|e| CliError::Format(e.to_string()))?;
        let path = self.root.join(MANIFEST);
        let mut f = fs::File::create(&path).map_err(|e| CliError::io(&path, e))?;
        f.write_all(text.as_bytes()).map_err(|e| CliError::io(&path, e))
    }
}

/// Shortest decimal that parses back to `x`, in exponent form outside
/// `[1e-4, 1e15)`.
pub fn fmt_f64(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || !a.is_finite() || (1e-4..1e15).contains(&a) {
        x.to_string()
    } else {
        format!("{x:e}")
    }
}

pub fn join(prefix: &str, name: &str) -> String {
    if prefix.is_empty() {
        name.to_owned()
    } else {
        format!("{prefix}/{name}")
    }
}

fn parse_f64(s: &str, path: &Path) -> Result<f64, CliError> {
    s.trim()
        .parse()
        .map_err(|_| CliError::Format(format!("{}: bad number `{s}`", path.display())))
}

pub fn read_energies(path: &Path) -> Result<Vec<EnergyReport>, CliError> {
    let mut r = csv::Reader::from_path(path)?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    if header != EnergyReport::COLUMNS {
        return Err(CliError::Format(format!("{}: unexpected header {header:?}", path.display())));
    }
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let mut v = [0.0; 11];
        for (slot, s) in v.iter_mut().zip(rec.iter()) {
            *slot = parse_f64(s, path)?;
        }
        out.push(EnergyReport::from_values(v));
    }
    Ok(out)
}

/// Step records from a long-format diagnostics table; each step starts with
/// its `dt` row.
pub fn read_diagnostics(path: &Path) -> Result<Vec<StepRecord>, CliError> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out: Vec<StepRecord> = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let (Some(t), Some(name), Some(value)) = (rec.get(0), rec.get(1), rec.get(2)) else {
            return Err(CliError::Format(format!("{}: short record", path.display())));
        };
        let (t, value) = (parse_f64(t, path)?, parse_f64(value, path)?);
        if name == "dt" {
            out.push(StepRecord {
                step: out.len(),
                t,
                dt: value,
                diagnostics: StageDiagnostics::default(),
            });
            continue;
        }
        let Some(last) = out.last_mut() else {
            return Err(CliError::Format(format!("{}: record before the first dt", path.display())));
        };
        let d = &mut last.diagnostics;
        let slot = match name {
            "kinetic" => &mut d.kinetic,
            "dissipation" => &mut d.dissipation,
            "modular_gradv" => &mut d.modular_gradv,
            "stress_dual" => &mut d.stress_dual,
            "forcing_power" => &mut d.forcing_power,
            "dtf_sq" => &mut d.dtf_sq,
            "vmax" => &mut d.vmax,
            "divergence" => &mut d.divergence,
            "c_min" => &mut d.c_min,
            "c_max" => &mut d.c_max,
            "mass_c" => &mut d.mass_c,
            "gradc_bound" => &mut d.gradc_bound,
            other => return Err(CliError::Format(format!("{}: unknown quantity `{other}`", path.display()))),
        };
        *slot = value;
    }
    Ok(out)
}

/// Snapshot files in `dir` as `(step, velocity path, concentration path)`,
/// ordered by step.
pub fn list_snapshots(dir: &Path) -> io::Result<Vec<(usize, PathBuf, PathBuf)>> {
    let mut out = Vec::new();
    if !dir.is_dir() {
        return Ok(out);
    }
    for entry in fs::read_dir(dir)? {
        let name = entry?.file_name();
        let Some(name) = name.to_str() else { continue };
        let Some(step) = name.strip_prefix("v_").and_then(|s| s.strip_suffix(".torf")) else {
            continue;
        };
        let Ok(k) = step.parse::<usize>() else { continue };
        let c = dir.join(format!("c_{step}.torf"));
        if c.is_file() {
            out.push((k, dir.join(name), c));
        }
    }
    out.sort_by_key(|e| e.0);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for x in [0.0, -0.0, 1.0, 0.1, 1e-300, -3.059058535574637e-42, 1e20, 123456.789, f64::MAX, f64::MIN_POSITIVE] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits(), "{s}");
        }
        assert_eq!(fmt_f64(0.25), "0.25");
        assert_eq!(fmt_f64(1e-10), "1e-10");
    }
}

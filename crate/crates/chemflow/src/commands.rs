//! The `run`, `twin`, `verify` and `sweep` commands.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use chemflow_core::solver::{RunReport, Snapshot, Termination};
use chemflow_core::{
    check_energy_balance, check_gronwall_chain, check_lemma_difference, check_lemma_hessian, check_max_principle,
    estimate_stress_constants, galerkin_refinement, run, twin_run, ContractionReport, InequalityReport,
    RunOptions, ScalarField, SolverConfig, VectorField,
};
use rayon::prelude::*;

use crate::config::{ConfigError, Experiment, Overrides, SweepAxis};
use crate::error::CliError;
use crate::output::{
    join, list_snapshots, read_diagnostics, read_energies, OutDir, RunManifest, TerminationKind,
    CONFIG, DIAGNOSTICS, ENERGIES, SNAPSHOTS,
};
use crate::{presets, torf};

/// Samples drawn when estimating the stress constants during `verify`.
pub const STRESS_SAMPLES: usize = 100_000;
/// Bound on `|D|` and `|B|` for those samples.
pub const STRESS_CAP: f64 = 10.0;
/// Integrability exponent of the strain-difference check.
pub const DIFFERENCE_EXPONENT: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Run,
    Twin,
    Verify,
    Sweep,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Run => "run",
            Command::Twin => "twin",
            Command::Verify => "verify",
            Command::Sweep => "sweep",
        }
    }
}

/// Everything a command needs from the command line.
#[derive(Debug, Clone)]
pub struct Invocation {
    pub command: Command,
    pub config: Option<PathBuf>,
    pub preset: Option<String>,
    pub out: PathBuf,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub snapshot_every: Option<usize>,
    /// Existing output directory to verify instead of running afresh.
    pub input: Option<PathBuf>,
    pub axis: Option<SweepAxis>,
    /// `CHEMFLOW_*` overrides.
    pub env: Vec<(String, String)>,
}

impl Invocation {
    pub fn new(command: Command, out: impl Into<PathBuf>) -> Self {
        Self {
            command,
            config: None,
            preset: None,
            out: out.into(),
            seed: None,
            workers: None,
            snapshot_every: None,
            input: None,
            axis: None,
            env: Vec::new(),
        }
    }
}

/// Result of [`execute`]. `manifest` is absent only when the configuration
/// could not be parsed.
#[derive(Debug)]
pub struct Outcome {
    pub manifest: Option<RunManifest>,
    pub exit_code: u8,
    pub error: Option<String>,
}

/// What a command body reports back besides its files.
#[derive(Debug, Default)]
pub struct Body {
    /// Time of the first detected blow-up.
    pub blowup: Option<f64>,
    pub message: Option<String>,
    pub checks: BTreeMap<String, bool>,
}

impl Body {
    fn absorb(&mut self, t: &Termination) {
        if let Termination::BlowUpDetected { t, reason } = t {
            if self.blowup.is_none() {
                self.blowup = Some(*t);
                self.message = Some(reason.clone());
            }
        }
    }
}

fn load_source(inv: &Invocation) -> Result<String, ConfigError> {
    match (&inv.config, &inv.preset) {
        (Some(_), Some(_)) => Err(ConfigError::new(None, "give either --config or --preset, not both")),
        (Some(path), None) => std::fs::read_to_string(path)
            .map_err(|e| ConfigError::new(None, format!("cannot read {}: {e}", path.display()))),
        (None, Some(name)) => presets::get(name).map(str::to_owned).ok_or_else(|| {
            ConfigError::new(
                None,
                format!("unknown preset `{name}` (available: {})", presets::NAMES.join(", ")),
            )
        }),
        (None, None) => match (&inv.input, inv.command) {
            (Some(dir), Command::Verify) => {
                let path = dir.join(CONFIG);
                std::fs::read_to_string(&path)
                    .map_err(|e| ConfigError::new(None, format!("cannot read {}: {e}", path.display())))
            }
            _ => Err(ConfigError::new(None, "no configuration: pass --config or --preset")),
        },
    }
}

/// Parses the configuration named by `inv` with all overrides applied.
pub fn load_experiment(inv: &Invocation) -> Result<Experiment, ConfigError> {
    let source = load_source(inv)?;
    let mut env = inv.env.clone();
    if let Some(k) = inv.snapshot_every {
        env.push(("CHEMFLOW_MONITOR__SNAPSHOT_EVERY".into(), k.to_string()));
    }
    Experiment::parse(&source, &Overrides { seed: inv.seed, env })
}

/// Runs one command end to end.
pub fn execute(inv: &Invocation) -> Outcome {
    let exp = match load_experiment(inv) {
        Ok(e) => e,
        Err(e) => {
            return Outcome {
                manifest: None,
                exit_code: TerminationKind::ConfigError.exit_code(),
                error: Some(e.to_string()),
            }
        }
    };
    for w in &exp.warnings {
        log::warn!("{w}");
    }
    let mut out = match OutDir::create(&inv.out) {
        Ok(o) => o,
        Err(e) => {
            return Outcome {
                manifest: None,
                exit_code: TerminationKind::Failed.exit_code(),
                error: Some(e.to_string()),
            }
        }
    };
    let result = out
        .write_text(CONFIG, exp.resolved_toml())
        .and_then(|_| dispatch(inv, &exp, &mut out));
    let (termination, body, error) = match result {
        Ok(body) => {
            let kind = if body.blowup.is_some() {
                TerminationKind::BlowUpDetected
            } else {
                TerminationKind::Completed
            };
            (kind, body, None)
        }
        Err(e) => {
            let kind = match e {
                CliError::Config(_) => TerminationKind::ConfigError,
                _ => TerminationKind::Failed,
            };
            let msg = e.to_string();
            let body = Body {
                message: Some(msg.clone()),
                ..Body::default()
            };
            (kind, body, Some(msg))
        }
    };
    let manifest = RunManifest {
        command: inv.command.name().to_owned(),
        config_hash: exp.config_hash(),
        seed: exp.seed(),
        termination,
        blowup_time: body.blowup,
        message: body.message,
        warnings: exp.warnings.clone(),
        outputs: out.outputs().to_vec(),
        checks: body.checks,
    };
    let error = match out.write_manifest(&manifest) {
        Ok(()) => error,
        Err(e) => Some(error.map_or_else(|| e.to_string(), |m| format!("{m}; {e}"))),
    };
    let exit_code = if error.is_some() && termination == TerminationKind::Completed {
        TerminationKind::Failed.exit_code()
    } else {
        termination.exit_code()
    };
    Outcome {
        manifest: Some(manifest),
        exit_code,
        error,
    }
}

fn dispatch(inv: &Invocation, exp: &Experiment, out: &mut OutDir) -> Result<Body, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(inv.workers.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Format(e.to_string()))?;
    match inv.command {
        Command::Run => cmd_run(exp, out),
        Command::Twin => pool.install(|| cmd_twin(exp, out, "")),
        Command::Verify => cmd_verify(exp, out, inv.input.as_deref()),
        Command::Sweep => {
            let axis = inv.axis.or(exp.raw.sweep.axis).ok_or_else(|| {
                ConfigError::new(Some("sweep.axis"), "sweep needs an axis (--axis or [sweep] axis)")
            })?;
            pool.install(|| cmd_sweep(exp, out, axis))
        }
    }
}

fn initial_data(exp: &Experiment) -> Result<(VectorField, ScalarField), CliError> {
    let g = exp.solver.grid;
    Ok((exp.initial_velocity(g)?, exp.initial_concentration(g)?))
}

pub fn cmd_run(exp: &Experiment, out: &mut OutDir) -> Result<Body, CliError> {
    let (v0, c0) = initial_data(exp)?;
    log::info!("run: grid {:?}, dt {}, t_end {}", exp.solver.grid, exp.solver.dt, exp.solver.t_end);
    let report = run(&exp.solver, &v0, &c0, &exp.options())?;
    out.write_run("", &report)?;
    let mut body = Body::default();
    body.absorb(&report.termination);
    Ok(body)
}

fn twin_table(r: &[ContractionReport]) -> Vec<Vec<f64>> {
    r.iter()
        .map(|c| {
            let d = c.final_delta();
            let ratio = if c.eps > 0.0 { d / (c.eps * c.eps) } else { f64::NAN };
            vec![
                c.eps,
                d,
                ratio,
                c.growth_rate,
                if c.termination.is_completed() { 1.0 } else { 0.0 },
            ]
        })
        .collect()
}

pub fn cmd_twin(exp: &Experiment, out: &mut OutDir, prefix: &str) -> Result<Body, CliError> {
    let (v0, c0) = initial_data(exp)?;
    let w = exp.twin_direction()?;
    let opts = exp.options();
    let eps = &exp.raw.twin.eps;
    if eps.is_empty() {
        return Err(ConfigError::new(Some("twin.eps"), "no eps values to run").into());
    }
    let reports: Vec<ContractionReport> = eps
        .par_iter()
        .map(|&e| twin_run(&exp.solver, &v0, &c0, e, &w, &opts))
        .collect::<chemflow_core::Result<_>>()?;
    let mut body = Body::default();
    for (i, r) in reports.iter().enumerate() {
        out.write_table(
            &join(prefix, &format!("twin/delta_{i}.csv")),
            &["t", "delta"],
            r.times.iter().zip(&r.delta).map(|(&t, &d)| vec![t, d]),
        )?;
        out.write_table(
            &join(prefix, &format!("twin/weighted_{i}.csv")),
            &["t", "weighted_difference"],
            r.weighted_times
                .iter()
                .zip(&r.weighted_difference)
                .map(|(&t, &d)| vec![t, d]),
        )?;
        body.absorb(&r.termination);
    }
    out.write_table(
        &join(prefix, "contraction.csv"),
        &["eps", "final_delta", "delta_over_eps_sq", "growth_rate", "completed"],
        twin_table(&reports),
    )?;
    Ok(body)
}

fn retag_vector(v: &VectorField, cfg: &SolverConfig) -> chemflow_core::Result<VectorField> {
    VectorField::new(cfg.grid, v.components().to_vec())
}

fn retag_scalar(c: &ScalarField, cfg: &SolverConfig) -> chemflow_core::Result<ScalarField> {
    ScalarField::new(cfg.grid, c.values().to_vec())
}

/// Largest single-step increase of the kinetic energy.
pub fn max_energy_increase(r: &RunReport) -> f64 {
    r.steps
        .windows(2)
        .map(|w| w[1].diagnostics.kinetic - w[0].diagnostics.kinetic)
        .fold(0.0, f64::max)
}

pub fn cmd_sweep(exp: &Experiment, out: &mut OutDir, axis: SweepAxis) -> Result<Body, CliError> {
    if axis == SweepAxis::Eps {
        return cmd_twin(exp, out, "sweep");
    }
    let (v0, c0) = initial_data(exp)?;
    let configs: Vec<(f64, SolverConfig)> = match axis {
        SweepAxis::Cutoff => {
            if exp.raw.sweep.cutoffs.is_empty() {
                return Err(ConfigError::new(Some("sweep.cutoffs"), "no cutoffs to sweep").into());
            }
            exp.raw
                .sweep
                .cutoffs
                .iter()
                .map(|&k| {
                    let mut c = exp.solver.clone();
                    c.grid = c.grid.with_cutoff(k)?;
                    Ok((k as f64, c))
                })
                .collect::<chemflow_core::Result<_>>()?
        }
        SweepAxis::Dt => {
            if exp.raw.sweep.dt.is_empty() {
                return Err(ConfigError::new(Some("sweep.dt"), "no step sizes to sweep").into());
            }
            exp.raw
                .sweep
                .dt
                .iter()
                .map(|&dt| {
                    let mut c = exp.solver.clone();
                    c.dt = dt;
                    (dt, c)
                })
                .collect()
        }
        SweepAxis::Eps => unreachable!(),
    };
    let opts = exp.options();
    let reports: Vec<RunReport> = configs
        .par_iter()
        .map(|(_, cfg)| run(cfg, &retag_vector(&v0, cfg)?, &retag_scalar(&c0, cfg)?, &opts))
        .collect::<chemflow_core::Result<_>>()?;
    let label = match axis {
        SweepAxis::Cutoff => "cutoff",
        _ => "dt",
    };
    let mut body = Body::default();
    let mut rows = Vec::new();
    for (i, ((value, _), r)) in configs.iter().zip(&reports).enumerate() {
        out.write_run(&format!("sweep/{label}_{i}"), r)?;
        body.absorb(&r.termination);
        rows.push(vec![
            *value,
            r.steps.len().saturating_sub(1) as f64,
            r.steps.last().map_or(f64::NAN, |s| s.diagnostics.kinetic),
            max_energy_increase(r),
            if r.termination.is_completed() { 1.0 } else { 0.0 },
        ]);
    }
    out.write_table(
        "sweep.csv",
        &[label, "steps", "final_kinetic", "max_energy_increase", "completed"],
        rows,
    )?;
    if axis == SweepAxis::Cutoff {
        let limit = exp.solver.grid.dealias_limit();
        let pairs: Vec<usize> = exp.raw.sweep.cutoffs.iter().copied().filter(|&k| 2 * k <= limit).collect();
        if pairs.len() < exp.raw.sweep.cutoffs.len() {
            log::warn!("cutoffs above {} have no refined partner on this grid and are left out of refinement.csv", limit / 2);
        }
        if !pairs.is_empty() {
            let r = galerkin_refinement(&exp.solver, &v0, &c0, &pairs)?;
            body.absorb(&r.termination);
            out.write_table(
                "refinement.csv",
                &["cutoff", "refined_cutoff", "distance"],
                r.cutoffs
                    .iter()
                    .zip(&r.distances)
                    .map(|(&k, &d)| vec![k as f64, 2.0 * k as f64, d]),
            )?;
        }
    }
    Ok(body)
}

/// Trajectory plus the fields the spatial checks need.
struct Evidence {
    report: RunReport,
    initial: Option<(VectorField, ScalarField)>,
    last: Option<(VectorField, ScalarField)>,
}

fn fresh_evidence(exp: &Experiment, out: &mut OutDir) -> Result<Evidence, CliError> {
    let (v0, c0) = initial_data(exp)?;
    let opts = RunOptions {
        keep_final_state: true,
        ..exp.options()
    };
    let mut report = run(&exp.solver, &v0, &c0, &opts)?;
    out.write_run("", &report)?;
    let last = report
        .final_state
        .take()
        .filter(|_| report.termination.is_completed())
        .map(|s| (s.velocity(), s.concentration()));
    let initial = Some((retag_vector(&v0, &exp.solver)?, c0));
    Ok(Evidence { report, initial, last })
}

fn read_pair(v: &Path, c: &Path) -> Result<(VectorField, ScalarField), CliError> {
    Ok((torf::read_file(v)?, torf::read_file(c)?))
}

fn stored_evidence(exp: &Experiment, dir: &Path) -> Result<Evidence, CliError> {
    let cfg = &exp.solver;
    let rows = read_energies(&dir.join(ENERGIES))?;
    let steps = read_diagnostics(&dir.join(DIAGNOSTICS))?;
    let termination = match RunManifest::read(dir) {
        Ok(m) if m.termination == TerminationKind::BlowUpDetected => Termination::BlowUpDetected {
            t: m.blowup_time.unwrap_or(f64::NAN),
            reason: m.message.unwrap_or_default(),
        },
        _ => Termination::Completed,
    };
    let snaps = list_snapshots(&dir.join(SNAPSHOTS)).map_err(|e| CliError::io(dir, e))?;
    let initial = match snaps.first() {
        Some((0, v, c)) => Some(read_pair(v, c)?),
        _ => None,
    };
    let last = match snaps.last() {
        Some((_, v, c)) if snaps.len() > 1 && termination.is_completed() => Some(read_pair(v, c)?),
        _ => None,
    };
    let report = RunReport {
        dim: cfg.grid.dim(),
        nu0: cfg.stress.nu0(),
        p_minus: cfg.stress.exponent().p_minus(),
        q: cfg.q,
        rows,
        steps,
        termination,
        snapshots: Vec::<Snapshot>::new(),
        final_state: None,
    };
    Ok(Evidence { report, initial, last })
}

fn stress_constants_report(exp: &Experiment) -> Result<InequalityReport, CliError> {
    let cfg = &exp.solver;
    let k = estimate_stress_constants(&cfg.stress, cfg.grid.dim(), STRESS_SAMPLES, STRESS_CAP, exp.seed())?;
    let floor = 2.0 * cfg.stress.nu0() * (cfg.stress.exponent().p_minus() - 1.0);
    let tol = 1e-9;
    Ok(InequalityReport {
        name: "stress_constants".into(),
        lhs_series: Vec::new(),
        rhs_series: Vec::new(),
        empirical_constant: k.k4,
        satisfied: k.k1 >= floor * (1.0 - tol) && k.k4 > 0.0,
        tolerance: tol,
        details: vec![
            ("k1".into(), k.k1),
            ("k2".into(), k.k2),
            ("k3".into(), k.k3),
            ("k4".into(), k.k4),
            ("coercivity_floor".into(), floor),
            ("samples".into(), STRESS_SAMPLES as f64),
            ("cap".into(), STRESS_CAP),
        ],
    })
}

pub fn cmd_verify(exp: &Experiment, out: &mut OutDir, input: Option<&Path>) -> Result<Body, CliError> {
    let ev = match input {
        Some(dir) => stored_evidence(exp, dir)?,
        None => fresh_evidence(exp, out)?,
    };
    let exponent = exp.solver.stress.exponent();
    let mut checks: Vec<(&str, Result<InequalityReport, CliError>)> = vec![
        ("energy_balance", check_energy_balance(&ev.report).map_err(Into::into)),
        ("gronwall_chain", check_gronwall_chain(&ev.report).map_err(Into::into)),
        ("max_principle", check_max_principle(&ev.report).map_err(Into::into)),
        ("stress_constants", stress_constants_report(exp)),
    ];
    if let Some((v, c)) = &ev.last {
        checks.push(("lemma_hessian", check_lemma_hessian(exponent, c, v).map_err(Into::into)));
        if let Some((v0, _)) = &ev.initial {
            let v0 = VectorField::new(*v.grid(), v0.components().to_vec())?;
            checks.push((
                "lemma_difference",
                check_lemma_difference(exponent, c, &v0, v, DIFFERENCE_EXPONENT).map_err(Into::into),
            ));
        }
    }
    let mut body = Body::default();
    body.absorb(&ev.report.termination);
    let mut errors = String::new();
    for (name, result) in checks {
        match result {
            Ok(r) => {
                out.write_inequality("verify", &r)?;
                body.checks.insert(name.to_owned(), r.satisfied);
            }
            Err(e) => {
                out.write_text(&format!("verify/{name}.report"), &format!("name = {name}\nerror = {e}\n"))?;
                body.checks.insert(name.to_owned(), false);
                errors.push_str(&format!("{name}: {e}; "));
            }
        }
    }
    if !errors.is_empty() && body.message.is_none() {
        body.message = Some(errors.trim_end_matches("; ").to_owned());
    }
    Ok(body)
}

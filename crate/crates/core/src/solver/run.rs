#[allow(unused_imports)]
use num_traits::Float;
use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::config::SolverConfig;
use super::state::{init_with, State};
use super::stepper::{StageDiagnostics, Stepper};
use crate::calculus::{leray_project_spectrum, sym_gradient_spectrum};
use crate::constitutive::ExponentFn;
use crate::energies::{energy_report, EnergyReport};
use crate::error::{Error, Result};
use crate::field::{Field, ScalarField, VectorField};
use crate::grid::sym_pairs;

/// How a run ended.
#[derive(Debug, Clone, PartialEq)]
pub enum Termination {
    Completed,
    BlowUpDetected { t: f64, reason: String },
}

impl Termination {
    pub fn is_completed(&self) -> bool {
        matches!(self, Termination::Completed)
    }

    fn from_error(e: Error) -> Result<Self> {
        match e {
            Error::BlowUpDetected { t, reason } => Ok(Termination::BlowUpDetected { t, reason }),
            Error::NonFinite(what) => Ok(Termination::BlowUpDetected {
                t: f64::NAN,
                reason: format!("non-finite {what}"),
            }),
            e => Err(e),
        }
    }
}

/// Output cadence of [`run`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    /// Energy rows every this many steps; the initial and final states are
    /// always reported.
    pub report_every: usize,
    /// Field snapshots every this many steps, plus the final state.
    pub snapshot_every: Option<usize>,
    pub keep_final_state: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            report_every: 10,
            snapshot_every: None,
            keep_final_state: false,
        }
    }
}

impl RunOptions {
    pub fn every(report_every: usize) -> Self {
        Self {
            report_every,
            ..Self::default()
        }
    }
}

/// Cheap per-step diagnostics of the state at time `t`; `dt` is the size of
/// the step taken from it (zero for the last state).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub t: f64,
    pub dt: f64,
    pub diagnostics: StageDiagnostics,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub step: usize,
    pub t: f64,
    pub velocity: VectorField,
    pub concentration: ScalarField,
}

/// Trajectory of one run.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub dim: usize,
    pub nu0: f64,
    pub p_minus: f64,
    pub q: f64,
    pub rows: Vec<EnergyReport>,
    pub steps: Vec<StepRecord>,
    pub termination: Termination,
    pub snapshots: Vec<Snapshot>,
    pub final_state: Option<State>,
}

impl RunReport {
    fn new(cfg: &SolverConfig) -> Self {
        Self {
            dim: cfg.grid.dim(),
            nu0: cfg.stress.nu0(),
            p_minus: cfg.stress.exponent().p_minus(),
            q: cfg.q,
            rows: Vec::new(),
            steps: Vec::new(),
            termination: Termination::Completed,
            snapshots: Vec::new(),
            final_state: None,
        }
    }

    /// Per-step diagnostics as `(t, quantity, value)` triples.
    pub fn diagnostics_long(&self) -> Vec<(f64, &'static str, f64)> {
        let mut out = Vec::with_capacity(self.steps.len() * 13);
        for r in &self.steps {
            let d = &r.diagnostics;
            for (name, value) in [
                ("dt", r.dt),
                ("kinetic", d.kinetic),
                ("dissipation", d.dissipation),
                ("modular_gradv", d.modular_gradv),
                ("stress_dual", d.stress_dual),
                ("forcing_power", d.forcing_power),
                ("dtf_sq", d.dtf_sq),
                ("vmax", d.vmax),
                ("divergence", d.divergence),
                ("c_min", d.c_min),
                ("c_max", d.c_max),
                ("mass_c", d.mass_c),
                ("gradc_bound", d.gradc_bound),
            ] {
                out.push((r.t, name, value));
            }
        }
        out
    }
}

fn report_row(cfg: &SolverConfig, s: &State) -> Result<EnergyReport> {
    energy_report(
        cfg.stress.exponent(),
        s.t(),
        &s.velocity(),
        &s.velocity_rate(),
        &s.concentration(),
        &s.concentration_rate(),
        cfg.q,
    )
}

fn is_done(cfg: &SolverConfig, s: &State) -> bool {
    cfg.t_end - s.t <= 1e-12 * cfg.t_end
}

/// Integrates from `(v0, c0)` to `cfg.t_end` or until blow-up is detected.
pub fn run(cfg: &SolverConfig, v0: &VectorField, c0: &ScalarField, opts: &RunOptions) -> Result<RunReport> {
    let stepper = Stepper::new(cfg)?;
    let mut state = init_with(&stepper, v0, c0)?;
    let mut report = RunReport::new(cfg);
    let every = opts.report_every.max(1);
    let termination = loop {
        let stage = match stepper.stage(&state) {
            Ok(s) => s,
            Err(e) => break Termination::from_error(e)?,
        };
        report.steps.push(StepRecord {
            step: state.steps,
            t: state.t,
            dt: 0.0,
            diagnostics: stage.diagnostics,
        });
        let done = is_done(cfg, &state);
        if state.steps % every == 0 || done {
            let row = match report_row(cfg, &state) {
                Ok(r) => r,
                Err(e) => break Termination::from_error(e)?,
            };
            report.rows.push(row);
            if !row.is_finite() || row.zeta > cfg.blowup_threshold {
                break Termination::BlowUpDetected {
                    t: state.t,
                    reason: format!("zeta = {:e} exceeds threshold", row.zeta),
                };
            }
        }
        if let Some(k) = opts.snapshot_every {
            if state.steps % k.max(1) == 0 || done {
                report.snapshots.push(Snapshot {
                    step: state.steps,
                    t: state.t,
                    velocity: state.velocity(),
                    concentration: state.concentration(),
                });
            }
        }
        if done {
            break Termination::Completed;
        }
        let dt = match stepper.choose_dt(&state, &stage) {
            Ok(dt) => dt,
            Err(e) => break Termination::from_error(e)?,
        };
        if let Some(last) = report.steps.last_mut() {
            last.dt = dt;
        }
        if let Err(e) = stepper.advance(&mut state, &stage, dt) {
            break Termination::from_error(e)?;
        }
    };
    report.termination = termination;
    if opts.keep_final_state {
        report.final_state = Some(state);
    }
    Ok(report)
}

/// Outcome of two runs from nearby initial velocities.
#[derive(Debug, Clone, PartialEq)]
pub struct ContractionReport {
    pub eps: f64,
    pub times: Vec<f64>,
    /// `||v1 - v2||_2^2 + ||grad(c1 - c2)||_2^2`
    pub delta: Vec<f64>,
    pub weighted_times: Vec<f64>,
    /// `int (1 + |Dv1|^2 + |Dv2|^2)^((p(c1)-2)/2) |Dv1 - Dv2|^2`
    pub weighted_difference: Vec<f64>,
    /// Smallest `L` with `delta(t) <= delta(0) exp(L t)` on the samples.
    pub growth_rate: f64,
    pub termination: Termination,
}

impl ContractionReport {
    pub fn final_delta(&self) -> f64 {
        self.delta.last().copied().unwrap_or(0.0)
    }
}

fn twin_delta(stepper: &Stepper, a: &State, b: &State) -> f64 {
    let dv = a.v_hat.sub(&b.v_hat).norm_sq();
    let dc: f64 = a.c_hat.components()[0]
        .iter()
        .zip(b.c_hat.components()[0].iter())
        .zip(stepper.ksq())
        .map(|((x, y), k)| k * (x - y).norm_sqr())
        .sum();
    dv + dc
}

fn weighted_difference(exponent: &ExponentFn, a: &State, b: &State) -> f64 {
    let grid = *a.v_hat.grid();
    let d1 = sym_gradient_spectrum(&a.v_hat).to_physical();
    let d2 = sym_gradient_spectrum(&b.v_hat).to_physical();
    let c = a.concentration();
    let pairs = sym_pairs(grid.dim());
    let mut sum = 0.0;
    for idx in 0..grid.len() {
        let (mut s1, mut s2, mut sd) = (0.0, 0.0, 0.0);
        for (s, &(i, j)) in pairs.iter().enumerate() {
            let w = if i == j { 1.0 } else { 2.0 };
            s1 += w * d1[s][idx] * d1[s][idx];
            s2 += w * d2[s][idx] * d2[s][idx];
            sd += w * (d1[s][idx] - d2[s][idx]).powi(2);
        }
        let p = exponent.eval(c.values()[idx]);
        sum += (1.0 + s1 + s2).powf(0.5 * (p - 2.0)) * sd;
    }
    sum * grid.cell_volume()
}

/// Checks that `w` is a divergence-free, mean-free direction of unit `L^2`
/// norm.
fn check_direction(w: &VectorField) -> Result<()> {
    w.ensure_finite("perturbation")?;
    let s = w.to_spectrum();
    let norm = s.norm_sq().sqrt();
    let mut p = s.clone();
    leray_project_spectrum(&mut p);
    let off = p.sub(&s).norm_sq().sqrt();
    if (norm - 1.0).abs() > 1e-8 || off > 1e-8 {
        return Err(Error::InvalidParameter(format!(
            "perturbation must be divergence-free with unit norm (norm {norm}, non-solenoidal part {off:e})"
        )));
    }
    Ok(())
}

/// Evolves `(v0, c0)` and `(v0 + eps w, c0)` in lockstep with a common step
/// size.
pub fn twin_run(
    cfg: &SolverConfig,
    v0: &VectorField,
    c0: &ScalarField,
    eps: f64,
    w: &VectorField,
    opts: &RunOptions,
) -> Result<ContractionReport> {
    if !(eps >= 0.0) || !eps.is_finite() {
        return Err(Error::InvalidParameter(format!("eps must be >= 0, got {eps}")));
    }
    if w.grid() != &cfg.grid {
        return Err(Error::GridMismatch);
    }
    check_direction(w)?;
    let stepper = Stepper::new(cfg)?;
    let mut a = init_with(&stepper, v0, c0)?;
    let mut b = init_with(&stepper, &v0.add_scaled(eps, w)?, c0)?;
    let every = opts.report_every.max(1);
    let exponent = cfg.stress.exponent();
    let mut report = ContractionReport {
        eps,
        times: Vec::new(),
        delta: Vec::new(),
        weighted_times: Vec::new(),
        weighted_difference: Vec::new(),
        growth_rate: 0.0,
        termination: Termination::Completed,
    };
    let termination = loop {
        report.times.push(a.t);
        report.delta.push(twin_delta(&stepper, &a, &b));
        let done = is_done(cfg, &a);
        if a.steps % every == 0 || done {
            report.weighted_times.push(a.t);
            report.weighted_difference.push(weighted_difference(exponent, &a, &b));
        }
        if done {
            break Termination::Completed;
        }
        let stages = stepper.stage(&a).and_then(|sa| Ok((sa, stepper.stage(&b)?)));
        let (sa, sb) = match stages {
            Ok(s) => s,
            Err(e) => break Termination::from_error(e)?,
        };
        let dt = match stepper.choose_dt(&a, &sa).and_then(|x| Ok(x.min(stepper.choose_dt(&b, &sb)?))) {
            Ok(dt) => dt,
            Err(e) => break Termination::from_error(e)?,
        };
        if let Err(e) = stepper.advance(&mut a, &sa, dt).and_then(|_| stepper.advance(&mut b, &sb, dt)) {
            break Termination::from_error(e)?;
        }
    };
    report.termination = termination;
    report.growth_rate = growth_rate(&report.times, &report.delta);
    Ok(report)
}

fn growth_rate(times: &[f64], delta: &[f64]) -> f64 {
    let Some(&d0) = delta.first() else {
        return 0.0;
    };
    if d0 == 0.0 {
        return if delta.iter().all(|&d| d == 0.0) { 0.0 } else { f64::INFINITY };
    }
    times
        .iter()
        .zip(delta)
        .filter(|(t, _)| **t > 0.0)
        .map(|(t, d)| (d / d0).ln() / t)
        .fold(f64::NEG_INFINITY, f64::max)
        .max(f64::NEG_INFINITY)
}

/// Sup-over-time distances between runs at cutoffs `K` and `2K`.
#[derive(Debug, Clone, PartialEq)]
pub struct RefinementReport {
    pub cutoffs: Vec<usize>,
    /// `sup_t ||v_K(t) - v_2K(t)||_2`, one per entry of `cutoffs`.
    pub distances: Vec<f64>,
    pub termination: Termination,
}

/// Runs every cutoff `K` in `cutoffs` together with `2K` on the grid of
/// `cfg`, all with a common step size.
pub fn galerkin_refinement(
    cfg: &SolverConfig,
    v0: &VectorField,
    c0: &ScalarField,
    cutoffs: &[usize],
) -> Result<RefinementReport> {
    let levels: BTreeSet<usize> = cutoffs.iter().flat_map(|&k| [k, 2 * k]).collect();
    let levels: Vec<usize> = levels.into_iter().collect();
    let mut steppers = Vec::with_capacity(levels.len());
    let mut states = Vec::with_capacity(levels.len());
    for &k in &levels {
        let mut c = cfg.clone();
        c.grid = cfg.grid.with_cutoff(k)?;
        if let crate::solver::ForcingSpec::Custom(samples) = &mut c.forcing {
            for (_, f) in samples.iter_mut() {
                *f = retag(f, c.grid)?;
            }
        }
        let st = Stepper::new(&c)?;
        states.push(init_with(&st, &retag(v0, c.grid)?, &ScalarField::new(c.grid, c0.values().to_vec())?)?);
        steppers.push(st);
    }
    let pos = |k: usize| levels.iter().position(|&l| l == k).expect("level present");
    let pairs: Vec<(usize, usize)> = cutoffs.iter().map(|&k| (pos(k), pos(2 * k))).collect();
    let mut distances = alloc::vec![0.0f64; cutoffs.len()];
    let termination = loop {
        for (d, &(i, j)) in distances.iter_mut().zip(&pairs) {
            let diff: f64 = states[i]
                .v_hat
                .components()
                .iter()
                .zip(states[j].v_hat.components())
                .flat_map(|(x, y)| x.iter().zip(y.iter()).map(|(a, b)| (a - b).norm_sqr()))
                .sum();
            *d = d.max(diff.sqrt());
        }
        if is_done(cfg, &states[0]) {
            break Termination::Completed;
        }
        let mut stages = Vec::with_capacity(states.len());
        let mut dt = f64::INFINITY;
        let mut failure = None;
        for (st, s) in steppers.iter().zip(&states) {
            match st.stage(s).and_then(|g| Ok((st.choose_dt(s, &g)?, g))) {
                Ok((h, g)) => {
                    dt = dt.min(h);
                    stages.push(g);
                }
                Err(e) => {
                    failure = Some(e);
                    break;
                }
            }
        }
        if let Some(e) = failure {
            break Termination::from_error(e)?;
        }
        for ((st, s), g) in steppers.iter().zip(states.iter_mut()).zip(&stages) {
            if let Err(e) = st.advance(s, g, dt) {
                failure = Some(e);
                break;
            }
        }
        if let Some(e) = failure {
            break Termination::from_error(e)?;
        }
    };
    Ok(RefinementReport {
        cutoffs: cutoffs.to_vec(),
        distances,
        termination,
    })
}

fn retag(v: &VectorField, grid: crate::grid::GridSpec) -> Result<VectorField> {
    VectorField::new(grid, v.components().to_vec())
}

#[allow(unused_imports)]
use num_traits::Float;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use super::config::{ResolvedForcing, Scheme, SolverConfig};
use super::state::State;
use crate::calculus::{leray_project_spectrum, mode_sq_norms, mode_vectors};
use crate::error::{Error, Result};
use crate::fft::{forward_real, inverse_real};
use crate::field::Spectrum;
use crate::grid::{sym_index, sym_pairs, GridSpec};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Pointwise quantities gathered while forming a tendency.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StageDiagnostics {
    /// `max |v|`
    pub vmax: f64,
    /// `||v||_2^2 / 2`
    pub kinetic: f64,
    /// `int S : Dv`
    pub dissipation: f64,
    /// `int |grad v|^p(c)`
    pub modular_gradv: f64,
    /// `int |S|^p'(c)`
    pub stress_dual: f64,
    /// `int f . v`
    pub forcing_power: f64,
    /// `||d_t f||_2^2`
    pub dtf_sq: f64,
    /// `max |k . vhat| / ||grad v||_2`
    pub divergence: f64,
    pub c_min: f64,
    pub c_max: f64,
    /// `int c`
    pub mass_c: f64,
    /// `sum |2 pi k| |c_hat(k)|`, an upper bound for `max |grad c|`.
    pub gradc_bound: f64,
}

/// Explicit tendencies of one state, without the diffusion handled by the
/// integrating factor.
#[derive(Debug, Clone)]
pub struct Stage {
    pub t: f64,
    pub(crate) nv: Spectrum,
    pub(crate) nc: Spectrum,
    pub diagnostics: StageDiagnostics,
}

/// Precomputed operators for one configuration.
#[derive(Debug, Clone)]
pub struct Stepper {
    cfg: SolverConfig,
    forcing: ResolvedForcing,
    kvec: Vec<[f64; 3]>,
    ksq: Vec<f64>,
    keep_v: Vec<bool>,
    keep_c: Vec<bool>,
}

pub(crate) fn blowup(t: f64, reason: impl Into<alloc::string::String>) -> Error {
    Error::BlowUpDetected { t, reason: reason.into() }
}

fn mask(s: &mut Spectrum, keep: &[bool]) {
    for c in s.components_mut() {
        for (z, &k) in c.iter_mut().zip(keep) {
            if !k {
                *z = Complex64::new(0.0, 0.0);
            }
        }
    }
}

fn band(grid: &GridSpec, limit: usize) -> Vec<bool> {
    let mut keep = vec![false; grid.len()];
    let limit = limit as i64;
    grid.for_each_mode(|i, k| keep[i] = k.iter().all(|x| x.abs() <= limit));
    keep
}

impl Stepper {
    pub fn new(cfg: &SolverConfig) -> Result<Self> {
        cfg.validate()?;
        let grid = cfg.grid;
        Ok(Self {
            cfg: cfg.clone(),
            forcing: cfg.forcing.resolve(&grid),
            kvec: mode_vectors(&grid),
            ksq: mode_sq_norms(&grid),
            keep_v: band(&grid, grid.cutoff()),
            keep_c: band(&grid, grid.dealias_limit()),
        })
    }

    pub fn config(&self) -> &SolverConfig {
        &self.cfg
    }

    pub(crate) fn project_velocity(&self, v: &mut Spectrum) {
        leray_project_spectrum(v);
        mask(v, &self.keep_v);
    }

    pub(crate) fn band_concentration(&self, c: &mut Spectrum) {
        mask(c, &self.keep_c);
    }

    pub(crate) fn forcing_at(&self, t: f64) -> Option<Spectrum> {
        self.forcing.at(t)
    }

    pub(crate) fn kvec(&self) -> &[[f64; 3]] {
        &self.kvec
    }

    pub(crate) fn ksq(&self) -> &[f64] {
        &self.ksq
    }

    /// Relative spectral divergence `max |k . vhat| / ||grad v||_2`.
    pub fn relative_divergence(&self, v: &Spectrum) -> f64 {
        let dim = self.cfg.grid.dim();
        let comps = v.components();
        let mut worst: f64 = 0.0;
        let mut grad_sq = 0.0;
        for (idx, k) in self.kvec.iter().enumerate() {
            let mut d = Complex64::new(0.0, 0.0);
            for j in 0..dim {
                d += comps[j][idx] * k[j];
                grad_sq += self.ksq[idx] * comps[j][idx].norm_sqr();
            }
            worst = worst.max(d.norm());
        }
        if grad_sq > 0.0 {
            worst / grad_sq.sqrt()
        } else {
            0.0
        }
    }

    /// Explicit tendencies of `(v_hat, c_hat)` at time `t`.
    pub fn evaluate(&self, v_hat: &Spectrum, c_hat: &Spectrum, t: f64) -> Result<Stage> {
        let grid = self.cfg.grid;
        let dim = grid.dim();
        let len = grid.len();
        let stress = &self.cfg.stress;
        let nu0 = stress.nu0();
        let exponent = stress.exponent();

        let grad: Vec<Vec<Complex64>> = (0..dim * dim)
            .map(|ij| {
                let (i, j) = (ij / dim, ij % dim);
                v_hat.components()[i]
                    .iter()
                    .zip(self.kvec.iter())
                    .map(|(z, k)| I * k[j] * z)
                    .collect()
            })
            .collect();
        let mut refs: Vec<&[Complex64]> = v_hat.components().iter().map(|c| c.as_slice()).collect();
        refs.extend(grad.iter().map(|c| c.as_slice()));
        refs.push(c_hat.components()[0].as_slice());
        let phys = inverse_real(&grid, &refs);
        if phys.iter().any(|c| c.iter().any(|x| !x.is_finite())) {
            return Err(blowup(t, "non-finite field"));
        }
        let (v, rest) = phys.split_at(dim);
        let (gv, rest) = rest.split_at(dim * dim);
        let c = &rest[0];

        let pairs = sym_pairs(dim);
        let mut conv = vec![vec![0.0; len]; dim];
        let mut rem = vec![vec![0.0; len]; pairs.len()];
        let mut cv = vec![vec![0.0; len]; dim];
        let mut diag = StageDiagnostics {
            c_min: f64::INFINITY,
            c_max: f64::NEG_INFINITY,
            ..Default::default()
        };
        let mut vmax_sq: f64 = 0.0;
        for idx in 0..len {
            let mut g = [[0.0; 3]; 3];
            let mut grad_sq = 0.0;
            for i in 0..dim {
                for j in 0..dim {
                    g[i][j] = gv[i * dim + j][idx];
                    grad_sq += g[i][j] * g[i][j];
                }
            }
            let mut d_sq = 0.0;
            for &(a, b) in pairs {
                let d = 0.5 * (g[a][b] + g[b][a]);
                d_sq += if a == b { d * d } else { 2.0 * d * d };
            }
            let ci = c[idx];
            let p = exponent.eval(ci);
            let nu = stress.viscosity_from(p, d_sq);
            for (s, &(a, b)) in pairs.iter().enumerate() {
                rem[s][idx] = (nu - nu0) * (g[a][b] + g[b][a]);
            }
            let mut v_sq = 0.0;
            for i in 0..dim {
                let vi = v[i][idx];
                v_sq += vi * vi;
                let mut s = 0.0;
                for j in 0..dim {
                    s += v[j][idx] * g[i][j];
                }
                conv[i][idx] = s;
                cv[i][idx] = ci * vi;
            }
            vmax_sq = vmax_sq.max(v_sq);
            diag.dissipation += 2.0 * nu * d_sq;
            diag.modular_gradv += grad_sq.powf(0.5 * p);
            let s_norm = 2.0 * nu * d_sq.sqrt();
            if s_norm > 0.0 {
                diag.stress_dual += s_norm.powf(p / (p - 1.0));
            }
            diag.c_min = diag.c_min.min(ci);
            diag.c_max = diag.c_max.max(ci);
            diag.mass_c += ci;
        }
        let vol = grid.cell_volume();
        diag.vmax = vmax_sq.sqrt();
        diag.dissipation *= vol;
        diag.modular_gradv *= vol;
        diag.stress_dual *= vol;
        diag.mass_c *= vol;
        diag.kinetic = 0.5 * v_hat.norm_sq();
        diag.divergence = self.relative_divergence(v_hat);
        diag.gradc_bound = c_hat.components()[0]
            .iter()
            .zip(self.ksq.iter())
            .map(|(z, k)| k.sqrt() * z.norm())
            .sum();

        let mut frefs: Vec<&[f64]> = conv.iter().map(|c| c.as_slice()).collect();
        frefs.extend(rem.iter().map(|c| c.as_slice()));
        frefs.extend(cv.iter().map(|c| c.as_slice()));
        let spec = forward_real(&grid, &frefs);
        let (conv_hat, rest) = spec.split_at(dim);
        let (rem_hat, cv_hat) = rest.split_at(pairs.len());

        let forcing = self.forcing.at(t);
        if let Some(f) = &forcing {
            diag.forcing_power = f
                .components()
                .iter()
                .zip(v_hat.components())
                .flat_map(|(a, b)| a.iter().zip(b.iter()).map(|(x, y)| (x * y.conj()).re))
                .sum();
        }
        if let Some(r) = self.forcing.rate_at(t) {
            diag.dtf_sq = r.norm_sq();
        }

        let mut nv = Spectrum::zeros(grid, dim);
        for (i, out) in nv.components_mut().iter_mut().enumerate() {
            for (idx, o) in out.iter_mut().enumerate() {
                let k = &self.kvec[idx];
                let mut z = -conv_hat[i][idx];
                for j in 0..dim {
                    z += I * k[j] * rem_hat[sym_index(dim, i, j)][idx];
                }
                if let Some(f) = &forcing {
                    z += f.components()[i][idx];
                }
                *o = z;
            }
        }
        self.project_velocity(&mut nv);

        let mut nc = Spectrum::zeros(grid, 1);
        for (idx, o) in nc.components_mut()[0].iter_mut().enumerate() {
            let k = &self.kvec[idx];
            let mut z = Complex64::new(0.0, 0.0);
            for j in 0..dim {
                z -= I * k[j] * cv_hat[j][idx];
            }
            *o = z;
        }
        self.band_concentration(&mut nc);

        Ok(Stage { t, nv, nc, diagnostics: diag })
    }

    pub fn stage(&self, s: &State) -> Result<Stage> {
        self.evaluate(&s.v_hat, &s.c_hat, s.t)
    }

    /// Step size for the next step from `s`: the configured `dt`, reduced by
    /// the convective limit `h / (4 max|v|)` and the remaining time.
    pub fn choose_dt(&self, s: &State, stage: &Stage) -> Result<f64> {
        let vmax = stage.diagnostics.vmax;
        if !vmax.is_finite() || vmax > self.cfg.blowup_threshold {
            return Err(blowup(s.t, format!("max |v| = {vmax:e} exceeds threshold")));
        }
        let mut dt = self.cfg.dt.min(self.cfg.t_end - s.t);
        if vmax > 0.0 {
            let cfl = 0.25 * self.cfg.grid.spacing() / vmax;
            if cfl < 1e-6 * self.cfg.dt {
                return Err(blowup(s.t, format!("time step collapsed to {cfl:e}")));
            }
            dt = dt.min(cfl);
        }
        if !(dt > 0.0) {
            return Err(Error::InvalidParameter(format!("no time left to step at t = {}", s.t)));
        }
        Ok(dt)
    }

    fn factors(&self, rate: f64, dt: f64) -> Vec<f64> {
        self.ksq.iter().map(|&k| (-rate * dt * k).exp()).collect()
    }

    /// Advances `s` by `dt` using the tendencies `stage` of `s`.
    pub fn advance(&self, s: &mut State, stage: &Stage, dt: f64) -> Result<()> {
        let ev = self.factors(self.cfg.stress.nu0(), dt);
        let ec = self.factors(1.0, dt);
        let mut v_new = s.v_hat.clone();
        let mut c_new = s.c_hat.clone();
        match self.cfg.scheme {
            Scheme::ImexEuler => {
                v_new.axpy(dt, &stage.nv);
                v_new.apply_multiplier(&ev);
                c_new.axpy(dt, &stage.nc);
                c_new.apply_multiplier(&ec);
            }
            Scheme::ImexRK2 => {
                let mut v_star = v_new.clone();
                v_star.axpy(dt, &stage.nv);
                v_star.apply_multiplier(&ev);
                let mut c_star = c_new.clone();
                c_star.axpy(dt, &stage.nc);
                c_star.apply_multiplier(&ec);
                let second = self.evaluate(&v_star, &c_star, s.t + dt)?;
                v_new.axpy(0.5 * dt, &stage.nv);
                v_new.apply_multiplier(&ev);
                v_new.axpy(0.5 * dt, &second.nv);
                c_new.axpy(0.5 * dt, &stage.nc);
                c_new.apply_multiplier(&ec);
                c_new.axpy(0.5 * dt, &second.nc);
            }
        }
        if !v_new.is_finite() || !c_new.is_finite() {
            return Err(blowup(s.t + dt, "non-finite field"));
        }
        s.dtv_hat = v_new.sub(&s.v_hat).scaled(1.0 / dt);
        s.dtc_hat = c_new.sub(&s.c_hat).scaled(1.0 / dt);
        s.v_hat = v_new;
        s.c_hat = c_new;
        s.t += dt;
        s.steps += 1;
        Ok(())
    }

    /// Full velocity tendency including the diffusion `-nu0 |2 pi k|^2 vhat`.
    pub(crate) fn full_velocity_tendency(&self, stage: &Stage, v_hat: &Spectrum) -> Spectrum {
        let mut out = v_hat.clone();
        let nu0 = self.cfg.stress.nu0();
        let m: Vec<f64> = self.ksq.iter().map(|k| -nu0 * k).collect();
        out.apply_multiplier(&m);
        out.axpy(1.0, &stage.nv);
        out
    }

    /// Full concentration tendency `-div(c v) + Δc`.
    pub(crate) fn full_concentration_tendency(&self, stage: &Stage, c_hat: &Spectrum) -> Spectrum {
        let mut out = c_hat.clone();
        let m: Vec<f64> = self.ksq.iter().map(|k| -k).collect();
        out.apply_multiplier(&m);
        out.axpy(1.0, &stage.nc);
        out
    }

    /// One step of size `min(dt, CFL, remaining)`; returns the size used.
    pub fn step(&self, s: &mut State) -> Result<f64> {
        let stage = self.stage(s)?;
        let dt = self.choose_dt(s, &stage)?;
        self.advance(s, &stage, dt)?;
        Ok(dt)
    }
}

/// `P_K P_L [-(v . grad) v + div S(c, Dv) + f(t)]` in spectral form.
pub fn velocity_tendency(s: &State, cfg: &SolverConfig, t: f64) -> Result<Spectrum> {
    let stepper = Stepper::new(cfg)?;
    let stage = stepper.evaluate(&s.v_hat, &s.c_hat, t).map_err(|e| match e {
        Error::NonFinite(what) => blowup(t, what),
        e => e,
    })?;
    Ok(stepper.full_velocity_tendency(&stage, &s.v_hat))
}

/// Advances a copy of `s` by one step.
pub fn step(s: &State, cfg: &SolverConfig) -> Result<State> {
    let stepper = Stepper::new(cfg)?;
    let mut next = s.clone();
    stepper.step(&mut next)?;
    Ok(next)
}

#[allow(unused_imports)]
use num_traits::Float;
use super::config::SolverConfig;
use super::stepper::Stepper;
use crate::calculus::mollifier_multiplier;
use crate::error::{Error, Result};
use crate::field::{Field, ScalarField, Spectrum, VectorField};

/// Solution state: spectral velocity on the truncated mode set, spectral
/// concentration on the dealiased band, time, and the most recent time
/// derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub(crate) v_hat: Spectrum,
    pub(crate) c_hat: Spectrum,
    pub(crate) t: f64,
    pub(crate) dtv_hat: Spectrum,
    pub(crate) dtc_hat: Spectrum,
    pub(crate) steps: usize,
}

impl State {
    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn v_hat(&self) -> &Spectrum {
        &self.v_hat
    }

    pub fn c_hat(&self) -> &Spectrum {
        &self.c_hat
    }

    pub fn velocity(&self) -> VectorField {
        VectorField::from_spectrum(&self.v_hat).expect("vector spectrum")
    }

    pub fn concentration(&self) -> ScalarField {
        ScalarField::from_spectrum(&self.c_hat).expect("scalar spectrum")
    }

    /// Discrete `d_t v`: the backward difference of the last step, or the
    /// tendency itself before the first step.
    pub fn velocity_rate(&self) -> VectorField {
        VectorField::from_spectrum(&self.dtv_hat).expect("vector spectrum")
    }

    /// Discrete `d_t c`, defined like [`State::velocity_rate`].
    pub fn concentration_rate(&self) -> ScalarField {
        ScalarField::from_spectrum(&self.dtc_hat).expect("scalar spectrum")
    }

    /// `int c`, exact from the mean mode.
    pub fn mass(&self) -> f64 {
        self.c_hat.components()[0][0].re
    }
}

pub(crate) fn init_with(stepper: &Stepper, v0: &VectorField, c0: &ScalarField) -> Result<State> {
    let cfg = stepper.config();
    if v0.grid() != &cfg.grid || c0.grid() != &cfg.grid {
        return Err(Error::GridMismatch);
    }
    v0.ensure_finite("initial velocity")?;
    c0.ensure_finite("initial concentration")?;
    let mut v_hat = v0.to_spectrum();
    stepper.project_velocity(&mut v_hat);
    let mut c_hat = c0.to_spectrum();
    c_hat.apply_multiplier(&mollifier_multiplier(&cfg.grid, cfg.delta));
    stepper.band_concentration(&mut c_hat);
    let mut s = State {
        dtv_hat: Spectrum::zeros(cfg.grid, cfg.grid.dim()),
        dtc_hat: Spectrum::zeros(cfg.grid, 1),
        v_hat,
        c_hat,
        t: 0.0,
        steps: 0,
    };
    let stage = stepper.stage(&s)?;
    s.dtv_hat = stepper.full_velocity_tendency(&stage, &s.v_hat);
    s.dtc_hat = stepper.full_concentration_tendency(&stage, &s.c_hat);
    Ok(s)
}

/// `v = P_K P_L v0`, `c = eta_delta * c0` at `t = 0`, with time derivatives
/// seeded from the equations.
pub fn init_state(v0: &VectorField, c0: &ScalarField, cfg: &SolverConfig) -> Result<State> {
    init_with(&Stepper::new(cfg)?, v0, c0)
}

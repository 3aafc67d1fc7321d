#[allow(unused_imports)]
use num_traits::Float;
use alloc::boxed::Box;
use alloc::format;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::constitutive::StressModel;
use crate::energies::check_monitor_exponent;
use crate::error::{Error, Result};
use crate::field::{Field, Spectrum, VectorField};
use crate::grid::GridSpec;

/// Time discretization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scheme {
    /// First-order integrating-factor Euler.
    #[default]
    ImexEuler,
    /// Second-order integrating-factor Heun.
    ImexRK2,
}

/// Body force `f(t, x)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum ForcingSpec {
    #[default]
    Zero,
    /// `amplitude * sin(2 pi k . x)` in one velocity component.
    SingleMode {
        k: [i64; 3],
        amplitude: f64,
        component: usize,
    },
    /// `(1 + rate t) * base(t)`.
    TimeRamp { base: Box<ForcingSpec>, rate: f64 },
    /// Samples `(t, f)` increasing in `t`, linearly interpolated.
    Custom(Vec<(f64, VectorField)>),
}

impl ForcingSpec {
    pub fn validate(&self, grid: &GridSpec, t_end: f64) -> Result<()> {
        match self {
            ForcingSpec::Zero => Ok(()),
            ForcingSpec::SingleMode { k, amplitude, component } => {
                let kmax = k[..grid.dim()].iter().map(|x| x.unsigned_abs()).max().unwrap_or(0);
                if k[grid.dim()..].iter().any(|&x| x != 0) || kmax == 0 || kmax as usize > grid.cutoff() {
                    return Err(Error::InvalidParameter(format!(
                        "forcing mode {k:?} must be nonzero and within the cutoff {}",
                        grid.cutoff()
                    )));
                }
                if *component >= grid.dim() || !amplitude.is_finite() {
                    return Err(Error::InvalidParameter(format!(
                        "forcing component {component} / amplitude {amplitude} invalid"
                    )));
                }
                Ok(())
            }
            ForcingSpec::TimeRamp { base, rate } => {
                if !rate.is_finite() {
                    return Err(Error::InvalidParameter(format!("forcing ramp rate {rate}")));
                }
                base.validate(grid, t_end)
            }
            ForcingSpec::Custom(samples) => {
                let (Some(first), Some(last)) = (samples.first(), samples.last()) else {
                    return Err(Error::InvalidParameter("custom forcing has no samples".into()));
                };
                if first.0 > 0.0 || last.0 < t_end {
                    return Err(Error::InvalidParameter(format!(
                        "custom forcing covers [{}, {}], need [0, {t_end}]",
                        first.0, last.0
                    )));
                }
                if samples.windows(2).any(|w| !(w[1].0 > w[0].0)) {
                    return Err(Error::InvalidParameter("custom forcing times must increase".into()));
                }
                for (_, f) in samples {
                    if f.grid() != grid {
                        return Err(Error::GridMismatch);
                    }
                    f.ensure_finite("forcing")?;
                }
                Ok(())
            }
        }
    }

    pub(crate) fn resolve(&self, grid: &GridSpec) -> ResolvedForcing {
        match self {
            ForcingSpec::Zero => ResolvedForcing::Zero,
            ForcingSpec::SingleMode { k, amplitude, component } => {
                let mut s = Spectrum::zeros(*grid, grid.dim());
                let n = grid.n() as i64;
                let index = |sign: i64| {
                    let w = |x: i64| (sign * x).rem_euclid(n) as usize;
                    if grid.dim() == 2 {
                        w(k[0]) * grid.n() + w(k[1])
                    } else {
                        (w(k[0]) * grid.n() + w(k[1])) * grid.n() + w(k[2])
                    }
                };
                // sin(2 pi k.x) = (e^{i..} - e^{-i..}) / 2i
                let c = &mut s.components_mut()[*component];
                c[index(1)] += Complex64::new(0.0, -0.5 * amplitude);
                c[index(-1)] += Complex64::new(0.0, 0.5 * amplitude);
                ResolvedForcing::Static(s)
            }
            ForcingSpec::TimeRamp { base, rate } => ResolvedForcing::Ramp {
                base: Box::new(base.resolve(grid)),
                rate: *rate,
            },
            ForcingSpec::Custom(samples) => {
                ResolvedForcing::Sampled(samples.iter().map(|(t, f)| (*t, f.to_spectrum())).collect())
            }
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) enum ResolvedForcing {
    Zero,
    Static(Spectrum),
    Ramp { base: Box<ResolvedForcing>, rate: f64 },
    Sampled(Vec<(f64, Spectrum)>),
}

impl ResolvedForcing {
    fn segment(samples: &[(f64, Spectrum)], t: f64) -> (usize, f64) {
        if samples.len() == 1 || t <= samples[0].0 {
            return (0, 0.0);
        }
        for (i, w) in samples.windows(2).enumerate() {
            if t <= w[1].0 {
                return (i, (t - w[0].0) / (w[1].0 - w[0].0));
            }
        }
        (samples.len() - 1, 0.0)
    }

    pub(crate) fn at(&self, t: f64) -> Option<Spectrum> {
        match self {
            ResolvedForcing::Zero => None,
            ResolvedForcing::Static(s) => Some(s.clone()),
            ResolvedForcing::Ramp { base, rate } => base.at(t).map(|s| s.scaled(1.0 + rate * t)),
            ResolvedForcing::Sampled(samples) => {
                let (i, theta) = Self::segment(samples, t);
                let mut s = samples[i].1.scaled(1.0 - theta);
                if theta > 0.0 {
                    s.axpy(theta, &samples[i + 1].1);
                }
                Some(s)
            }
        }
    }

    /// `d f / d t` at `t`.
    pub(crate) fn rate_at(&self, t: f64) -> Option<Spectrum> {
        match self {
            ResolvedForcing::Zero | ResolvedForcing::Static(_) => None,
            ResolvedForcing::Ramp { base, rate } => {
                let mut out = base.at(t).map(|s| s.scaled(*rate));
                if let Some(r) = base.rate_at(t) {
                    let r = r.scaled(1.0 + rate * t);
                    match out.as_mut() {
                        Some(o) => o.axpy(1.0, &r),
                        None => out = Some(r),
                    }
                }
                out
            }
            ResolvedForcing::Sampled(samples) => {
                if samples.len() < 2 {
                    return None;
                }
                let (mut i, _) = Self::segment(samples, t);
                if i + 1 >= samples.len() {
                    if t > samples[samples.len() - 1].0 {
                        return None;
                    }
                    i = samples.len() - 2;
                }
                let h = samples[i + 1].0 - samples[i].0;
                Some(samples[i + 1].1.sub(&samples[i].1).scaled(1.0 / h))
            }
        }
    }
}

/// Everything the integrator needs besides the initial data.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub grid: GridSpec,
    pub stress: StressModel,
    /// Monitor exponent for the concentration terms of `zeta`.
    pub q: f64,
    /// Width of the Gaussian mollifier applied to the initial concentration.
    pub delta: f64,
    pub dt: f64,
    pub t_end: f64,
    pub forcing: ForcingSpec,
    pub scheme: Scheme,
    pub blowup_threshold: f64,
}

impl SolverConfig {
    pub const DEFAULT_DELTA: f64 = 0.05;
    pub const DEFAULT_BLOWUP_THRESHOLD: f64 = 1e8;

    /// Configuration with default monitor exponent, mollification, scheme,
    /// threshold and no forcing.
    pub fn new(grid: GridSpec, stress: StressModel, dt: f64, t_end: f64) -> Result<Self> {
        let cfg = Self {
            grid,
            stress,
            q: Self::default_q(grid.dim()),
            delta: Self::DEFAULT_DELTA,
            dt,
            t_end,
            forcing: ForcingSpec::Zero,
            scheme: Scheme::ImexEuler,
            blowup_threshold: Self::DEFAULT_BLOWUP_THRESHOLD,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// `4` in 3D, `3` in 2D.
    pub fn default_q(dim: usize) -> f64 {
        if dim == 3 {
            4.0
        } else {
            3.0
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::InvalidParameter(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end > 0.0) || !self.t_end.is_finite() {
            return Err(Error::InvalidParameter(format!("t_end must be positive, got {}", self.t_end)));
        }
        if !(self.delta >= 0.0) || !self.delta.is_finite() {
            return Err(Error::InvalidParameter(format!("delta must be >= 0, got {}", self.delta)));
        }
        if !(self.blowup_threshold > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "blow-up threshold must be positive, got {}",
                self.blowup_threshold
            )));
        }
        check_monitor_exponent(self.q, self.grid.dim())?;
        self.forcing.validate(&self.grid, self.t_end)
    }
}

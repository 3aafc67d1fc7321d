//! Diagnostic energies of a velocity/concentration state and the local
//! Grönwall-type comparison bound.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::format;
use alloc::vec::Vec;

use crate::calculus::{gradient_spectrum, sym_gradient_spectrum};
use crate::constitutive::ExponentFn;
use crate::error::{Error, Result};
use crate::field::{Field, ScalarField, Spectrum, SymTensorField, VectorField};
use crate::grid::{sym_pairs, GridSpec};
use crate::norms::{lp_norm, modular, sobolev_seminorm};

/// Integrability exponent of the shifted strain used by the 3D monitor.
pub const DBAR_EXPONENT_3D: f64 = 12.0 / 5.0;

/// One row of monitored quantities at time `t`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EnergyReport {
    pub t: f64,
    /// `||v||_2^2 / 2`
    pub kinetic: f64,
    pub ip: f64,
    pub jp: f64,
    /// `||Dbar v||_{12/5}^{12/5}` in 3D, `||grad v||_2^2` in 2D.
    pub dbar_s: f64,
    pub dtv2: f64,
    pub gradc_q: f64,
    pub dtc_q: f64,
    pub zeta: f64,
    /// `int |grad v|^p(c)`
    pub modular_gradv: f64,
    pub mass_c: f64,
}

impl EnergyReport {
    pub const COLUMNS: [&'static str; 11] = [
        "t",
        "kinetic",
        "ip",
        "jp",
        "dbar_s",
        "dtv2",
        "gradc_q",
        "dtc_q",
        "zeta",
        "modular_gradv",
        "mass_c",
    ];

    pub fn values(&self) -> [f64; 11] {
        [
            self.t,
            self.kinetic,
            self.ip,
            self.jp,
            self.dbar_s,
            self.dtv2,
            self.gradc_q,
            self.dtc_q,
            self.zeta,
            self.modular_gradv,
            self.mass_c,
        ]
    }

    pub fn from_values(v: [f64; 11]) -> Self {
        Self {
            t: v[0],
            kinetic: v[1],
            ip: v[2],
            jp: v[3],
            dbar_s: v[4],
            dtv2: v[5],
            gradc_q: v[6],
            dtc_q: v[7],
            zeta: v[8],
            modular_gradv: v[9],
            mass_c: v[10],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.values().iter().all(|v| v.is_finite())
    }
}

/// Pointwise `(1 + |D|^2)^(1/2)`.
pub fn d_bar(d: &SymTensorField) -> ScalarField {
    let len = d.grid().len();
    let vals = (0..len).map(|i| (1.0 + d.magnitude_sq_at(i)).sqrt()).collect();
    ScalarField::new(*d.grid(), vals).expect("same grid")
}

fn same_grid(a: &GridSpec, b: &GridSpec) -> Result<()> {
    if a != b {
        Err(Error::GridMismatch)
    } else {
        Ok(())
    }
}

/// `int (1 + |D|^2)^((p(c)-2)/2) |G|^2` where `|G|^2` is given pointwise.
fn weighted_integral(exponent: &ExponentFn, c: &ScalarField, d: &[Vec<f64>], g_sq: &[f64], dim: usize) -> f64 {
    let pairs = sym_pairs(dim);
    let grid = c.grid();
    let mut sum = 0.0;
    for (i, &gs) in g_sq.iter().enumerate() {
        let mut dsq = 0.0;
        for (s, &(a, b)) in pairs.iter().enumerate() {
            let w = if a == b { 1.0 } else { 2.0 };
            dsq += w * d[s][i] * d[s][i];
        }
        let p = exponent.eval(c.values()[i]);
        sum += (1.0 + dsq).powf(0.5 * (p - 2.0)) * gs;
    }
    sum * grid.cell_volume()
}

/// Squared pointwise magnitude of `grad` applied to a symmetric tensor
/// spectrum, `sum_k |d_k T|^2`.
fn sym_gradient_sq(ds: &Spectrum) -> Vec<f64> {
    let grid = *ds.grid();
    let dim = grid.dim();
    let g = gradient_spectrum(ds).to_physical();
    let pairs = sym_pairs(dim);
    let mut out = alloc::vec![0.0; grid.len()];
    for (s, &(a, b)) in pairs.iter().enumerate() {
        let w = if a == b { 1.0 } else { 2.0 };
        for j in 0..dim {
            for (o, x) in out.iter_mut().zip(g[s * dim + j].iter()) {
                *o += w * x * x;
            }
        }
    }
    out
}

/// Weighted second-derivative energy `int Dbar^(p(c)-2) |grad Dv|^2`.
pub fn energy_ip(exponent: &ExponentFn, c: &ScalarField, v: &VectorField) -> Result<f64> {
    same_grid(c.grid(), v.grid())?;
    v.ensure_finite("energy_ip")?;
    let ds = sym_gradient_spectrum(&v.to_spectrum());
    let d = ds.to_physical();
    let g_sq = sym_gradient_sq(&ds);
    Ok(weighted_integral(exponent, c, &d, &g_sq, c.grid().dim()))
}

/// Weighted time-derivative energy `int Dbar^(p(c)-2) |D v_dot|^2`.
pub fn energy_jp(exponent: &ExponentFn, c: &ScalarField, v: &VectorField, v_dot: &VectorField) -> Result<f64> {
    same_grid(c.grid(), v.grid())?;
    same_grid(c.grid(), v_dot.grid())?;
    v.ensure_finite("energy_jp")?;
    v_dot.ensure_finite("energy_jp")?;
    let d = sym_gradient_spectrum(&v.to_spectrum()).to_physical();
    let dd = SymTensorField::from_spectrum(&sym_gradient_spectrum(&v_dot.to_spectrum()))?;
    let g_sq: Vec<f64> = (0..c.grid().len()).map(|i| dd.magnitude_sq_at(i)).collect();
    Ok(weighted_integral(exponent, c, &d, &g_sq, c.grid().dim()))
}

/// Validates the monitor exponent: `q >= 4` in 3D, `q > 2` in 2D.
pub fn check_monitor_exponent(q: f64, dim: usize) -> Result<()> {
    let ok = match dim {
        3 => q >= 4.0,
        _ => q > 2.0,
    };
    if !ok || !q.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "monitor exponent q = {q} not admissible in {dim}D (need q >= 4 in 3D, q > 2 in 2D)"
        )));
    }
    Ok(())
}

/// The four terms of the comparison functional `zeta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZetaTerms {
    pub dbar_s: f64,
    pub dtv2: f64,
    pub gradc_q: f64,
    pub dtc_q: f64,
}

impl ZetaTerms {
    pub fn total(&self) -> f64 {
        self.dbar_s + self.dtv2 + self.gradc_q + self.dtc_q
    }
}

/// `zeta = ||Dbar v||_{12/5}^{12/5} + ||v_t||_2^2 + ||grad c||_q^q + ||c_t||_q^q`
/// in 3D; in 2D the first term is `||grad v||_2^2`.
pub fn gronwall_zeta(
    v: &VectorField,
    v_dot: &VectorField,
    c: &ScalarField,
    c_dot: &ScalarField,
    q: f64,
) -> Result<ZetaTerms> {
    let grid = v.grid();
    for g in [v_dot.grid(), c.grid(), c_dot.grid()] {
        same_grid(grid, g)?;
    }
    check_monitor_exponent(q, grid.dim())?;
    let dbar_s = if grid.dim() == 3 {
        let db = d_bar(&SymTensorField::from_spectrum(&sym_gradient_spectrum(&v.to_spectrum()))?);
        lp_norm(&db, DBAR_EXPONENT_3D)?.powf(DBAR_EXPONENT_3D)
    } else {
        sobolev_seminorm(v, 1, 2.0)?.powi(2)
    };
    let dtv2 = lp_norm(v_dot, 2.0)?.powi(2);
    let gradc_q = sobolev_seminorm(c, 1, q)?.powf(q);
    let dtc_q = lp_norm(c_dot, q)?.powf(q);
    Ok(ZetaTerms {
        dbar_s,
        dtv2,
        gradc_q,
        dtc_q,
    })
}

/// Every monitored quantity of a state with time derivatives `v_dot`, `c_dot`.
pub fn energy_report(
    exponent: &ExponentFn,
    t: f64,
    v: &VectorField,
    v_dot: &VectorField,
    c: &ScalarField,
    c_dot: &ScalarField,
    q: f64,
) -> Result<EnergyReport> {
    let terms = gronwall_zeta(v, v_dot, c, c_dot, q)?;
    let grad_v = crate::calculus::spectral_gradient(v)?;
    let p_field = exponent.eval_field(c);
    Ok(EnergyReport {
        t,
        kinetic: 0.5 * lp_norm(v, 2.0)?.powi(2),
        ip: energy_ip(exponent, c, v)?,
        jp: energy_jp(exponent, c, v, v_dot)?,
        dbar_s: terms.dbar_s,
        dtv2: terms.dtv2,
        gradc_q: terms.gradc_q,
        dtc_q: terms.dtc_q,
        zeta: terms.total(),
        modular_gradv: modular(&grad_v, &p_field)?,
        mass_c: c.integral(),
    })
}

/// Data of the comparison inequality `zeta' <= phi + c0 zeta^(1+alpha)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GronwallParams {
    pub zeta0: f64,
    pub alpha: f64,
    pub c0: f64,
    /// Samples `(t, phi(t))`, increasing in `t`, linearly interpolated and
    /// held constant past the last sample.
    pub phi: Vec<(f64, f64)>,
}

impl GronwallParams {
    pub fn new(zeta0: f64, alpha: f64, c0: f64, phi: Vec<(f64, f64)>) -> Result<Self> {
        if !(zeta0 >= 0.0) || !(alpha > 0.0) || !(c0 > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "need zeta0 >= 0, alpha > 0, c0 > 0; got {zeta0}, {alpha}, {c0}"
            )));
        }
        if phi.iter().any(|&(t, f)| !(f >= 0.0) || !t.is_finite()) {
            return Err(Error::InvalidParameter("phi must be nonnegative".into()));
        }
        if phi.windows(2).any(|w| w[1].0 < w[0].0) {
            return Err(Error::InvalidParameter("phi samples must be ordered in time".into()));
        }
        Ok(Self { zeta0, alpha, c0, phi })
    }

    fn phi_at(&self, t: f64) -> f64 {
        match self.phi.as_slice() {
            [] => 0.0,
            [(_, f)] => *f,
            s => {
                if t <= s[0].0 {
                    return s[0].1;
                }
                for w in s.windows(2) {
                    let ((t0, f0), (t1, f1)) = (w[0], w[1]);
                    if t <= t1 {
                        return if t1 > t0 { f0 + (f1 - f0) * (t - t0) / (t1 - t0) } else { f1 };
                    }
                }
                s[s.len() - 1].1
            }
        }
    }

    /// `Phi(t) = zeta0 + int_0^t phi`, trapezoidal on the samples.
    pub fn big_phi(&self, t: f64) -> f64 {
        let mut knots: Vec<f64> = alloc::vec![0.0];
        knots.extend(self.phi.iter().map(|&(s, _)| s).filter(|&s| s > 0.0 && s < t));
        knots.push(t);
        let integral: f64 = knots
            .windows(2)
            .map(|w| 0.5 * (w[1] - w[0]) * (self.phi_at(w[0]) + self.phi_at(w[1])))
            .sum();
        self.zeta0 + integral
    }

    /// `1 - alpha c0 Phi(t)^alpha t`.
    pub fn bracket(&self, t: f64) -> f64 {
        1.0 - self.alpha * self.c0 * self.big_phi(t).powf(self.alpha) * t
    }

    /// Time at which the bracket closes for `phi = 0`.
    pub fn horizon_without_forcing(&self) -> f64 {
        1.0 / (self.alpha * self.c0 * self.zeta0.powf(self.alpha))
    }
}

/// `Phi(t) + Phi(t) ((1 - alpha c0 Phi(t)^alpha t)^(-1/alpha) - 1)`, or
/// [`Error::BlowUpBeforeT`] once the bracket is no longer positive.
pub fn gronwall_bound(g: &GronwallParams, t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::InvalidParameter(format!("time must be >= 0, got {t}")));
    }
    let phi = g.big_phi(t);
    let bracket = 1.0 - g.alpha * g.c0 * phi.powf(g.alpha) * t;
    if !(bracket > 0.0) {
        return Err(Error::BlowUpBeforeT { t, bracket });
    }
    Ok(phi + phi * (bracket.powf(-1.0 / g.alpha) - 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    fn g3() -> GridSpec {
        GridSpec::new(3, 16, 5).unwrap()
    }

    fn newtonian() -> ExponentFn {
        ExponentFn::constant(2.0).unwrap()
    }

    #[test]
    fn d_bar_values() {
        let g = g3();
        assert!(d_bar(&SymTensorField::zeros(g)).values().iter().all(|&x| x == 1.0));
        let one = SymTensorField::from_fn(g, |_| [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);
        assert!(d_bar(&one).values().iter().all(|&x| (x - 2.0).abs() < 1e-15));
        let wild = SymTensorField::from_fn(g, |x| {
            let a = 40.0 * (x[0] - 0.3) * (x[2] + 0.1);
            [[a, -a, 0.5], [-a, 0.0, a * a], [0.5, a * a, -3.0 * a]]
        });
        assert!(d_bar(&wild).min() >= 1.0);
    }

    #[test]
    fn ip_of_constant_and_shear() {
        let g = g3();
        let c = ScalarField::from_fn(g, |x| x[0]);
        let v = VectorField::from_fn(g, |_| [1.0, -2.0, 0.5]);
        assert!(energy_ip(&newtonian(), &c, &v).unwrap() < 1e-20);
        let shear = VectorField::from_fn(g, |x| [(2.0 * PI * x[1]).sin(), 0.0, 0.0]);
        // d_2 D_12 = d_2 D_21 = -2 pi^2 sin(2 pi x2): integral of 2 (2 pi^2)^2 sin^2 = 4 pi^4
        let ip = energy_ip(&newtonian(), &c, &shear).unwrap();
        assert!((ip - 4.0 * PI.powi(4)).abs() < 1e-9 * ip);
    }

    #[test]
    fn ip_weight_never_exceeds_one() {
        let g = g3();
        let c = ScalarField::from_fn(g, |x| 0.3 * (2.0 * PI * x[2]).cos());
        let v = VectorField::from_fn(g, |x| {
            [(2.0 * PI * x[1]).sin() * 3.0, (4.0 * PI * x[2]).cos(), (2.0 * PI * (x[0] + x[1])).sin()]
        });
        let e = ExponentFn::logistic(1.4, 2.0, 0.0, 10.0).unwrap();
        let weighted = energy_ip(&e, &c, &v).unwrap();
        let plain = energy_ip(&newtonian(), &c, &v).unwrap();
        assert!(weighted > 0.0 && weighted <= plain);
    }

    #[test]
    fn jp_cases() {
        let g = g3();
        let c = ScalarField::constant(g, 0.1);
        let v = VectorField::from_fn(g, |x| [(2.0 * PI * x[1]).sin(), 0.0, 0.0]);
        assert_eq!(energy_jp(&newtonian(), &c, &v, &VectorField::zeros(g)).unwrap(), 0.0);
        let vd = VectorField::from_fn(g, |x| [0.0, 0.0, (2.0 * PI * x[0]).cos()]);
        // |D vd|^2 = 2 (pi sin)^2, integral pi^2
        let jp = energy_jp(&newtonian(), &c, &v, &vd).unwrap();
        assert!((jp - PI * PI).abs() < 1e-11);
    }

    #[test]
    fn jp_of_decaying_mode() {
        // v(t) = exp(-lambda t) w, v_dot = -lambda v
        let g = GridSpec::new(2, 128, 42).unwrap();
        let e = ExponentFn::constant(1.6).unwrap();
        let c = ScalarField::constant(g, 0.0);
        let lambda: f64 = 3.0;
        let t = 0.2;
        let amp = 2.0 * (-lambda * t).exp();
        let v = VectorField::from_fn(g, |x| [amp * (2.0 * PI * x[1]).sin(), 0.0, 0.0]);
        let vd = VectorField::from_fn(g, |x| [-lambda * amp * (2.0 * PI * x[1]).sin(), 0.0, 0.0]);
        let jp = energy_jp(&e, &c, &v, &vd).unwrap();
        // |Dv|^2 = 2 (pi amp cos)^2; integrand (1 + 2 pi^2 amp^2 cos^2)^(-0.2) 2 lambda^2 pi^2 amp^2 cos^2,
        // integrated with a fine midpoint rule in one variable
        let m = 200_000;
        let mut oracle = 0.0;
        for i in 0..m {
            let y = (i as f64 + 0.5) / m as f64;
            let cs = (2.0 * PI * y).cos();
            let dsq = 2.0 * (PI * amp * cs).powi(2);
            oracle += (1.0 + dsq).powf(-0.2) * lambda * lambda * dsq;
        }
        oracle /= m as f64;
        assert!((jp - oracle).abs() < 1e-6 * oracle, "{jp} {oracle}");
    }

    #[test]
    fn zeta_limits() {
        let g = g3();
        let z = VectorField::zeros(g);
        let c = ScalarField::constant(g, 0.4);
        let dc = ScalarField::zeros(g);
        let t = gronwall_zeta(&z, &z, &c, &dc, 4.0).unwrap();
        assert!((t.total() - 1.0).abs() < 1e-14);
        let g2 = GridSpec::new(2, 16, 5).unwrap();
        let z2 = VectorField::zeros(g2);
        let c2 = ScalarField::constant(g2, 0.4);
        let t2 = gronwall_zeta(&z2, &z2, &c2, &ScalarField::zeros(g2), 3.0).unwrap();
        assert!(t2.total().abs() < 1e-20);
        assert!(gronwall_zeta(&z, &z, &c, &dc, 3.0).is_err());
        assert!(gronwall_zeta(&z2, &z2, &c2, &ScalarField::zeros(g2), 2.0).is_err());
    }

    #[test]
    fn bound_examples() {
        let g = GronwallParams::new(1.0, 1.0, 1.0, Vec::new()).unwrap();
        assert_eq!(gronwall_bound(&g, 0.0).unwrap(), 1.0);
        assert!((gronwall_bound(&g, 0.5).unwrap() - 2.0).abs() < 1e-15);
        assert!(matches!(gronwall_bound(&g, 1.0), Err(Error::BlowUpBeforeT { .. })));
        let z = GronwallParams::new(2.5, 0.5, 0.3, alloc::vec![(0.0, 1.0), (1.0, 3.0)]).unwrap();
        assert_eq!(gronwall_bound(&z, 0.0).unwrap(), 2.5);
        // Phi(0.5) = 2.5 + (1 + 2)/2 * 0.5
        assert!((z.big_phi(0.5) - 3.25).abs() < 1e-15);
        assert!(GronwallParams::new(1.0, 0.0, 1.0, Vec::new()).is_err());
    }
}

//! Concentration-dependent power-law stress
//! `S(c, D) = 2 nu0 (1 + |D|^2)^((p(c) - 2)/2) D` and its derivatives.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::format;
use alloc::vec::Vec;


use crate::error::{Error, Result};
use crate::field::{Field, ScalarField, SymTensorField};
use crate::tensor::{SymTensor, Tensor4};

/// Functional form of the exponent map `c -> p(c)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExponentShape {
    Constant(f64),
    /// `p_lo + (p_hi - p_lo) / (1 + exp(slope (c - c_mid)))`, decreasing in `c`.
    Logistic {
        p_lo: f64,
        p_hi: f64,
        c_mid: f64,
        slope: f64,
    },
    /// `a + b c`, clamped into `[p_minus, p_plus]`.
    Affine { a: f64, b: f64 },
}

/// Lipschitz exponent function with bounds `1 < p_minus <= p <= p_plus`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentFn {
    p_minus: f64,
    p_plus: f64,
    lipschitz_bound: f64,
    shape: ExponentShape,
}

impl ExponentFn {
    fn checked(p_minus: f64, p_plus: f64, lipschitz_bound: f64, shape: ExponentShape) -> Result<Self> {
        if !(p_minus > 1.0) || !(p_plus >= p_minus) || !p_plus.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "exponent bounds must satisfy 1 < p_minus <= p_plus < inf, got [{p_minus}, {p_plus}]"
            )));
        }
        Ok(Self {
            p_minus,
            p_plus,
            lipschitz_bound,
            shape,
        })
    }

    pub fn constant(p: f64) -> Result<Self> {
        Self::checked(p, p, 0.0, ExponentShape::Constant(p))
    }

    pub fn logistic(p_lo: f64, p_hi: f64, c_mid: f64, slope: f64) -> Result<Self> {
        if !(slope > 0.0) || !slope.is_finite() || !c_mid.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "logistic exponent needs slope > 0 and finite midpoint, got slope {slope}, c_mid {c_mid}"
            )));
        }
        Self::checked(
            p_lo,
            p_hi,
            0.25 * (p_hi - p_lo) * slope,
            ExponentShape::Logistic { p_lo, p_hi, c_mid, slope },
        )
    }

    pub fn affine(a: f64, b: f64, p_minus: f64, p_plus: f64) -> Result<Self> {
        if !a.is_finite() || !b.is_finite() {
            return Err(Error::InvalidParameter("affine exponent coefficients must be finite".into()));
        }
        Self::checked(p_minus, p_plus, b.abs(), ExponentShape::Affine { a, b })
    }

    pub fn p_minus(&self) -> f64 {
        self.p_minus
    }

    pub fn p_plus(&self) -> f64 {
        self.p_plus
    }

    pub fn lipschitz_bound(&self) -> f64 {
        self.lipschitz_bound
    }

    pub fn shape(&self) -> &ExponentShape {
        &self.shape
    }

    /// Whether `p_plus <= 2`, the regime the solver is built for.
    pub fn is_shear_thinning(&self) -> bool {
        self.p_plus <= 2.0
    }

    /// `p(c)`, always clamped into `[p_minus, p_plus]`.
    pub fn eval(&self, c: f64) -> f64 {
        let raw = match self.shape {
            ExponentShape::Constant(p) => p,
            ExponentShape::Logistic { p_lo, p_hi, c_mid, slope } => {
                p_lo + (p_hi - p_lo) / (1.0 + (slope * (c - c_mid)).exp())
            }
            ExponentShape::Affine { a, b } => a + b * c,
        };
        if raw.is_nan() {
            return self.p_minus;
        }
        raw.max(self.p_minus).min(self.p_plus)
    }

    pub fn eval_field(&self, c: &ScalarField) -> ScalarField {
        c.with_components(alloc::vec![c.values().iter().map(|&x| self.eval(x)).collect()])
    }

    /// `p'(c)`; fails where the affine shape is clamped.
    pub fn derivative(&self, c: f64) -> Result<f64> {
        match self.shape {
            ExponentShape::Constant(_) => Ok(0.0),
            ExponentShape::Logistic { p_lo, p_hi, c_mid, slope } => {
                let s = 1.0 / (1.0 + (slope * (c - c_mid)).exp());
                Ok(-(p_hi - p_lo) * slope * s * (1.0 - s))
            }
            ExponentShape::Affine { a, b } => {
                if b == 0.0 {
                    return Ok(0.0);
                }
                let raw = a + b * c;
                if raw > self.p_minus && raw < self.p_plus {
                    Ok(b)
                } else {
                    Err(Error::NonDifferentiable { c })
                }
            }
        }
    }

    /// A concentration interval over which `p` sweeps its whole range.
    pub fn sampling_window(&self) -> (f64, f64) {
        match self.shape {
            ExponentShape::Constant(_) => (0.0, 1.0),
            ExponentShape::Logistic { c_mid, slope, .. } => (c_mid - 8.0 / slope, c_mid + 8.0 / slope),
            ExponentShape::Affine { a, b } => {
                if b == 0.0 {
                    (0.0, 1.0)
                } else {
                    let c1 = (self.p_minus - a) / b;
                    let c2 = (self.p_plus - a) / b;
                    let (lo, hi) = (c1.min(c2), c1.max(c2));
                    let pad = 0.1 * (hi - lo).max(1e-12);
                    (lo - pad, hi + pad)
                }
            }
        }
    }
}

/// Shorthand for [`ExponentFn::eval`].
pub fn p_eval(exponent: &ExponentFn, c: f64) -> f64 {
    exponent.eval(c)
}

/// Viscosity scale `nu0` together with the exponent map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StressModel {
    nu0: f64,
    exponent: ExponentFn,
}

/// Left-hand side and weight of one sample of a structural inequality; their
/// ratio is one empirical sample of the corresponding constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gap {
    pub lhs: f64,
    pub weight: f64,
    kind: GapKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum GapKind {
    Monotonicity,
    Coercivity,
}

impl Gap {
    pub fn ratio(&self) -> Result<f64> {
        if self.weight == 0.0 {
            return Err(match self.kind {
                GapKind::Monotonicity => Error::DegeneratePair,
                GapKind::Coercivity => Error::DegenerateDirection,
            });
        }
        Ok(self.lhs / self.weight)
    }
}

/// Empirical constants of the structural inequalities: coercivity `k1`,
/// growth `k2`, concentration sensitivity `k3` and monotonicity `k4`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StressConstants {
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub k4: f64,
}

impl StressModel {
    pub fn new(nu0: f64, exponent: ExponentFn) -> Result<Self> {
        if !(nu0 > 0.0) || !nu0.is_finite() {
            return Err(Error::InvalidParameter(format!("nu0 must be positive, got {nu0}")));
        }
        Ok(Self { nu0, exponent })
    }

    pub fn nu0(&self) -> f64 {
        self.nu0
    }

    pub fn exponent(&self) -> &ExponentFn {
        &self.exponent
    }

    /// `nu0 (1 + |D|^2)^((p - 2)/2)` for a given exponent and `|D|^2`.
    #[inline]
    pub fn viscosity_from(&self, p: f64, d_sq: f64) -> f64 {
        self.nu0 * (1.0 + d_sq).powf(0.5 * (p - 2.0))
    }

    pub fn viscosity(&self, c: f64, d: &SymTensor) -> f64 {
        self.viscosity_from(self.exponent.eval(c), d.norm_sq())
    }

    pub fn stress(&self, c: f64, d: &SymTensor) -> SymTensor {
        d.scale(2.0 * self.viscosity(c, d))
    }

    /// Pointwise stress of a strain field.
    pub fn stress_field(&self, c: &ScalarField, d: &SymTensorField) -> Result<SymTensorField> {
        if c.grid() != d.grid() {
            return Err(Error::GridMismatch);
        }
        d.ensure_finite("stress")?;
        let len = c.grid().len();
        let mut comps: Vec<Vec<f64>> = d.components().to_vec();
        for i in 0..len {
            let two_nu = 2.0 * self.viscosity_from(self.exponent.eval(c.values()[i]), d.magnitude_sq_at(i));
            for comp in comps.iter_mut() {
                comp[i] *= two_nu;
            }
        }
        let s = d.with_components(comps);
        s.ensure_finite("stress")?;
        Ok(s)
    }

    /// `dS/dD = 2 nu [I_sym + (p - 2) D ⊗ D / (1 + |D|^2)]`.
    pub fn dstress_dd(&self, c: f64, d: &SymTensor) -> Tensor4 {
        let p = self.exponent.eval(c);
        let d_sq = d.norm_sq();
        let two_nu = 2.0 * self.viscosity_from(p, d_sq);
        let coef = (p - 2.0) / (1.0 + d_sq);
        let id = Tensor4::sym_identity(d.dim);
        Tensor4::from_fn(d.dim, |i, j, k, l| {
            two_nu * (id.data[i][j][k][l] + coef * d.get(i, j) * d.get(k, l))
        })
    }

    /// `dS/dc = nu0 p'(c) (1 + |D|^2)^((p-2)/2) ln(1 + |D|^2) D`.
    pub fn dstress_dc(&self, c: f64, d: &SymTensor) -> Result<SymTensor> {
        let dp = self.exponent.derivative(c)?;
        let d_sq = d.norm_sq();
        let nu = self.viscosity_from(self.exponent.eval(c), d_sq);
        Ok(d.scale(nu * dp * (1.0 + d_sq).ln()))
    }

    /// `(S(c,D1) - S(c,D2)):(D1 - D2)` against
    /// `(1 + |D1|^2 + |D2|^2)^((p-2)/2) |D1 - D2|^2`.
    pub fn monotonicity_gap(&self, c: f64, d1: &SymTensor, d2: &SymTensor) -> Gap {
        let p = self.exponent.eval(c);
        let diff = d1.sub(d2);
        let lhs = self.stress(c, d1).sub(&self.stress(c, d2)).ddot(&diff);
        let weight = (1.0 + d1.norm_sq() + d2.norm_sq()).powf(0.5 * (p - 2.0)) * diff.norm_sq();
        Gap {
            lhs,
            weight,
            kind: GapKind::Monotonicity,
        }
    }

    /// `dS/dD : (B ⊗ B)` against `(1 + |D|^2)^((p-2)/2) |B|^2`.
    pub fn coercivity_gap(&self, c: f64, d: &SymTensor, b: &SymTensor) -> Gap {
        let p = self.exponent.eval(c);
        let lhs = self.dstress_dd(c, d).contract_pair(b);
        let weight = (1.0 + d.norm_sq()).powf(0.5 * (p - 2.0)) * b.norm_sq();
        Gap {
            lhs,
            weight,
            kind: GapKind::Coercivity,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn logistic() -> ExponentFn {
        ExponentFn::logistic(1.5, 2.0, 0.15, 20.0).unwrap()
    }

    fn sample_d() -> SymTensor {
        SymTensor::from_matrix(3, [[0.3, -1.2, 0.4], [-1.2, 0.9, 2.0], [0.4, 2.0, -1.1]])
    }

    #[test]
    fn exponent_evaluation_and_limits() {
        assert_eq!(ExponentFn::constant(1.5).unwrap().eval(7.0), 1.5);
        let e = logistic();
        assert!((e.eval(-1e6) - 2.0).abs() < 1e-15);
        assert!((e.eval(1e6) - 1.5).abs() < 1e-15);
        assert!((e.eval(0.15) - 1.75).abs() < 1e-15);
        for c in [-10.0, 0.0, 0.1, 0.15, 0.3, 100.0] {
            let p = e.eval(c);
            assert!(p >= 1.5 && p <= 2.0);
        }
    }

    #[test]
    fn exponent_rejects_bad_bounds() {
        assert!(ExponentFn::constant(1.0).is_err());
        assert!(ExponentFn::logistic(1.8, 1.5, 0.0, 1.0).is_err());
        assert!(ExponentFn::logistic(1.5, 2.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn logistic_derivative_matches_finite_differences_and_lipschitz() {
        let e = logistic();
        let (lo, hi) = e.sampling_window();
        for i in 0..1000 {
            let c = lo + (hi - lo) * i as f64 / 999.0;
            let h = 1e-6;
            let fd = (e.eval(c + h) - e.eval(c - h)) / (2.0 * h);
            let d = e.derivative(c).unwrap();
            assert!((fd - d).abs() <= 1e-6 * d.abs().max(1e-3), "c={c}");
            assert!(d.abs() <= e.lipschitz_bound() * (1.0 + 1e-12));
        }
    }

    #[test]
    fn affine_clamps_and_reports_kinks() {
        let e = ExponentFn::affine(2.0, -1.0, 1.4, 1.9).unwrap();
        assert_eq!(e.eval(0.0), 1.9);
        assert_eq!(e.eval(1.0), 1.4);
        assert!((e.eval(0.3) - 1.7).abs() < 1e-15);
        assert_eq!(e.derivative(0.3).unwrap(), -1.0);
        assert_eq!(e.derivative(0.0), Err(Error::NonDifferentiable { c: 0.0 }));
    }

    #[test]
    fn viscosity_values() {
        let m = StressModel::new(1.0, ExponentFn::constant(1.5).unwrap()).unwrap();
        assert_eq!(m.viscosity(0.0, &SymTensor::zero(3)), 1.0);
        // |D|^2 = 3
        let d = SymTensor::from_matrix(3, [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);
        let independent = 1.0 / 4f64.sqrt().sqrt();
        assert!((m.viscosity(0.0, &d) - independent).abs() < 1e-15);
        let newtonian = StressModel::new(0.7, ExponentFn::constant(2.0).unwrap()).unwrap();
        assert_eq!(newtonian.viscosity(3.0, &sample_d()), 0.7);
    }

    #[test]
    fn newtonian_limit_is_linear() {
        let m = StressModel::new(0.7, ExponentFn::constant(2.0).unwrap()).unwrap();
        let d = sample_d();
        assert_eq!(m.stress(0.0, &d), d.scale(1.4));
        let a = m.dstress_dd(0.0, &d);
        let id = Tensor4::sym_identity(3);
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    for l in 0..3 {
                        assert!((a.data[i][j][k][l] - 1.4 * id.data[i][j][k][l]).abs() < 1e-15);
                    }
                }
            }
        }
        assert_eq!(m.dstress_dc(0.3, &d).unwrap(), SymTensor::zero(3));
    }

    #[test]
    fn jacobian_at_zero_strain_is_scaled_identity() {
        let m = StressModel::new(1.3, logistic()).unwrap();
        let a = m.dstress_dd(0.1, &SymTensor::zero(3));
        assert!(a.major_asymmetry() == 0.0);
        assert!((a.norm() - 2.6 * 6f64.sqrt()).abs() < 1e-14);
        assert_eq!(m.stress(0.1, &SymTensor::zero(3)), SymTensor::zero(3));
        assert_eq!(m.dstress_dc(0.1, &SymTensor::zero(3)).unwrap(), SymTensor::zero(3));
    }

    #[test]
    fn gaps_in_degenerate_and_newtonian_cases() {
        let m = StressModel::new(0.8, ExponentFn::constant(2.0).unwrap()).unwrap();
        let d1 = sample_d().scale(0.01);
        let g = m.monotonicity_gap(0.0, &d1, &SymTensor::zero(3));
        assert!((g.ratio().unwrap() - 1.6).abs() < 1e-13);
        let same = m.monotonicity_gap(0.0, &d1, &d1);
        assert_eq!((same.lhs, same.weight), (0.0, 0.0));
        assert_eq!(same.ratio(), Err(Error::DegeneratePair));
        let cg = m.coercivity_gap(0.0, &sample_d(), &SymTensor::zero(3));
        assert_eq!(cg.ratio(), Err(Error::DegenerateDirection));
    }

    #[test]
    fn coercivity_ratio_for_aligned_direction() {
        let m = StressModel::new(1.0, ExponentFn::constant(1.4).unwrap()).unwrap();
        let d = sample_d();
        let d_sq = d.norm_sq();
        let oracle = 2.0 * (1.0 + (1.4 - 2.0) * d_sq / (1.0 + d_sq));
        let r = m.coercivity_gap(0.0, &d, &d.scale(0.37)).ratio().unwrap();
        assert!((r - oracle).abs() < 1e-13);
        assert!(r > 2.0 * (1.4 - 1.0));
    }
}

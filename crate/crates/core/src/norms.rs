//! Lebesgue norms, variable-exponent modulars and Sobolev seminorms by grid
//! quadrature with uniform weights `h^dim`.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::format;
use alloc::vec::Vec;


use crate::calculus::gradient_spectrum;
use crate::error::{Error, Result};
use crate::field::{Field, ScalarField};

fn check_exponent(r: f64) -> Result<()> {
    if r.is_nan() || r < 1.0 {
        return Err(Error::InvalidParameter(format!("norm exponent must be >= 1, got {r}")));
    }
    Ok(())
}

/// `L^r` norm of pointwise magnitudes given as squared values.
pub(crate) fn lp_of_sq(mag_sq: impl Iterator<Item = f64>, weight: f64, r: f64) -> f64 {
    if r.is_infinite() {
        return mag_sq.fold(0.0, f64::max).sqrt();
    }
    if r == 2.0 {
        return (mag_sq.sum::<f64>() * weight).sqrt();
    }
    let half = 0.5 * r;
    (mag_sq.map(|m| m.powf(half)).sum::<f64>() * weight).powf(1.0 / r)
}

/// `(int |f|^r dx)^(1/r)`; `r = inf` gives `max |f|`.
pub fn lp_norm<F: Field>(f: &F, r: f64) -> Result<f64> {
    check_exponent(r)?;
    let len = f.grid().len();
    Ok(lp_of_sq((0..len).map(|i| f.magnitude_sq_at(i)), f.grid().cell_volume(), r))
}

/// Variable-exponent modular `int |f(x)|^p(x) dx`.
pub fn modular<F: Field>(f: &F, p_field: &ScalarField) -> Result<f64> {
    if f.grid() != p_field.grid() {
        return Err(Error::GridMismatch);
    }
    if let Some(&p) = p_field.values().iter().find(|p| !(**p >= 1.0) || !p.is_finite()) {
        return Err(Error::InvalidParameter(format!("exponent field leaves [1, inf): {p}")));
    }
    let sum: f64 = p_field
        .values()
        .iter()
        .enumerate()
        .map(|(i, &p)| f.magnitude_sq_at(i).powf(0.5 * p))
        .sum();
    Ok(sum * f.grid().cell_volume())
}

/// `L^r` norm of the order-`k` derivative tensor (`k` in 0..=2).
pub fn sobolev_seminorm<F: Field>(f: &F, k: usize, r: f64) -> Result<f64> {
    check_exponent(r)?;
    if k > 2 {
        return Err(Error::InvalidParameter(format!("derivative order must be <= 2, got {k}")));
    }
    if k == 0 {
        return lp_norm(f, r);
    }
    f.ensure_finite("sobolev_seminorm")?;
    let dim = f.grid().dim();
    let mut s = f.to_spectrum();
    let mut weights: Vec<f64> = (0..f.components().len()).map(|i| f.component_weight(i)).collect();
    for _ in 0..k {
        s = gradient_spectrum(&s);
        weights = weights.iter().flat_map(|&w| core::iter::repeat(w).take(dim)).collect();
    }
    let comps = s.to_physical();
    let len = f.grid().len();
    let mag = (0..len).map(|i| {
        comps
            .iter()
            .zip(weights.iter())
            .map(|(c, w)| w * c[i] * c[i])
            .sum::<f64>()
    });
    Ok(lp_of_sq(mag, f.grid().cell_volume(), r))
}

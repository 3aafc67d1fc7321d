//! Initial data and perturbation directions.

#[allow(unused_imports)]
use num_traits::Float;
use core::f64::consts::PI;

use alloc::vec::Vec;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::calculus::leray_project_spectrum;
use crate::error::{Error, Result};
use crate::field::{ScalarField, Spectrum, VectorField};
use crate::grid::GridSpec;

/// `v_component = amplitude sin(2 pi m x_axis)`.
pub fn shear_mode(grid: GridSpec, amplitude: f64, component: usize, axis: usize, m: u32) -> Result<VectorField> {
    if component >= grid.dim() || axis >= grid.dim() || component == axis {
        return Err(Error::InvalidParameter(
            "shear mode needs distinct component and axis within the dimension".into(),
        ));
    }
    Ok(VectorField::from_fn(grid, |x| {
        let mut v = [0.0; 3];
        v[component] = amplitude * (2.0 * PI * m as f64 * x[axis]).sin();
        v
    }))
}

/// Taylor-Green vortex of unit wavenumber.
pub fn taylor_green(grid: GridSpec, amplitude: f64) -> VectorField {
    let dim = grid.dim();
    VectorField::from_fn(grid, |x| {
        let (sx, cx) = (2.0 * PI * x[0]).sin_cos();
        let (sy, cy) = (2.0 * PI * x[1]).sin_cos();
        if dim == 2 {
            [amplitude * sx * cy, -amplitude * cx * sy, 0.0]
        } else {
            let cz = (2.0 * PI * x[2]).cos();
            [amplitude * sx * cy * cz, -amplitude * cx * sy * cz, 0.0]
        }
    })
}

/// `mean + amplitude cos(2 pi x_axis)`.
pub fn cosine_profile(grid: GridSpec, mean: f64, amplitude: f64, axis: usize) -> ScalarField {
    ScalarField::from_fn(grid, |x| mean + amplitude * (2.0 * PI * x[axis]).cos())
}

/// Random Hermitian coefficients with Gaussian envelope `exp(-|k|^2 / (2 s^2))`
/// on `|k|_inf <= limit`, zero mean.
fn random_spectrum(grid: GridSpec, ncomp: usize, limit: usize, scale: f64, seed: u64) -> Spectrum {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = Spectrum::zeros(grid, ncomp);
    let limit = limit as i64;
    let mut env = alloc::vec![0.0; grid.len()];
    grid.for_each_mode(|i, k| {
        if k.iter().all(|x| x.abs() <= limit) && k.iter().any(|&x| x != 0) {
            let k2: f64 = k.iter().map(|&x| (x * x) as f64).sum();
            env[i] = (-0.5 * k2 / (scale * scale)).exp();
        }
    });
    let neg = grid.negated_indices();
    for c in s.components_mut() {
        let raw: Vec<Complex64> = env
            .iter()
            .map(|&e| {
                let re: f64 = rng.random_range(-1.0..1.0);
                let im: f64 = rng.random_range(-1.0..1.0);
                Complex64::new(re, im) * e
            })
            .collect();
        for (i, z) in c.iter_mut().enumerate() {
            *z = 0.5 * (raw[i] + raw[neg[i]].conj());
        }
    }
    s
}

/// Smooth random divergence-free velocity on the cutoff modes with
/// `||v||_2 = amplitude`, reproducible from `seed`.
pub fn random_smooth_velocity(grid: GridSpec, amplitude: f64, scale: f64, seed: u64) -> Result<VectorField> {
    if !(scale > 0.0) {
        return Err(Error::InvalidParameter(format_scale(scale)));
    }
    let mut s = random_spectrum(grid, grid.dim(), grid.cutoff(), scale, seed);
    leray_project_spectrum(&mut s);
    let norm = s.norm_sq().sqrt();
    if norm == 0.0 {
        return Err(Error::InvalidParameter("random field vanished".into()));
    }
    VectorField::from_spectrum(&s.scaled(amplitude / norm))
}

/// Smooth random scalar `mean + fluctuation` with `||fluctuation||_2 = amplitude`.
pub fn random_smooth_scalar(grid: GridSpec, mean: f64, amplitude: f64, scale: f64, seed: u64) -> Result<ScalarField> {
    if !(scale > 0.0) {
        return Err(Error::InvalidParameter(format_scale(scale)));
    }
    let s = random_spectrum(grid, 1, grid.dealias_limit(), scale, seed);
    let norm = s.norm_sq().sqrt();
    let mut s = s.scaled(if norm > 0.0 { amplitude / norm } else { 0.0 });
    s.components_mut()[0][0] = Complex64::new(mean, 0.0);
    ScalarField::from_spectrum(&s)
}

fn format_scale(scale: f64) -> alloc::string::String {
    alloc::format!("spectral scale must be positive, got {scale}")
}

#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use super::config::SolverConfig;
use super::state::State;
use super::stepper::Stepper;
use crate::error::Result;
use crate::fft::{forward_real, inverse_real};
use crate::field::{ScalarField, Spectrum};
use crate::grid::{sym_index, sym_pairs};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Mean-free kinematic pressure.
#[derive(Debug, Clone, PartialEq)]
pub struct PressureField {
    pub pi: ScalarField,
}

/// Solves `-Δπ = div[(v . grad) v - div S(c, Dv) - f(t)]` spectrally.
pub fn recover_pressure(s: &State, cfg: &SolverConfig, t: f64) -> Result<PressureField> {
    let stepper = Stepper::new(cfg)?;
    let grid = cfg.grid;
    let dim = grid.dim();
    let len = grid.len();
    let kvec = stepper.kvec();
    let pairs = sym_pairs(dim);

    let grad: Vec<Vec<Complex64>> = (0..dim * dim)
        .map(|ij| {
            let (i, j) = (ij / dim, ij % dim);
            s.v_hat.components()[i]
                .iter()
                .zip(kvec.iter())
                .map(|(z, k)| I * k[j] * z)
                .collect()
        })
        .collect();
    let mut refs: Vec<&[Complex64]> = s.v_hat.components().iter().map(|c| c.as_slice()).collect();
    refs.extend(grad.iter().map(|c| c.as_slice()));
    refs.push(s.c_hat.components()[0].as_slice());
    let phys = inverse_real(&grid, &refs);
    let (v, rest) = phys.split_at(dim);
    let (gv, rest) = rest.split_at(dim * dim);
    let c = &rest[0];

    let mut conv = vec![vec![0.0; len]; dim];
    let mut stress = vec![vec![0.0; len]; pairs.len()];
    for idx in 0..len {
        let g = |i: usize, j: usize| gv[i * dim + j][idx];
        let mut d_sq = 0.0;
        for &(a, b) in pairs {
            let d = 0.5 * (g(a, b) + g(b, a));
            d_sq += if a == b { d * d } else { 2.0 * d * d };
        }
        let nu = cfg.stress.viscosity_from(cfg.stress.exponent().eval(c[idx]), d_sq);
        for (k, &(a, b)) in pairs.iter().enumerate() {
            stress[k][idx] = nu * (g(a, b) + g(b, a));
        }
        for i in 0..dim {
            conv[i][idx] = (0..dim).map(|j| v[j][idx] * g(i, j)).sum();
        }
    }
    let mut frefs: Vec<&[f64]> = conv.iter().map(|c| c.as_slice()).collect();
    frefs.extend(stress.iter().map(|c| c.as_slice()));
    let mut spec = forward_real(&grid, &frefs);
    let limit = grid.dealias_limit() as i64;
    let mut keep = vec![false; len];
    grid.for_each_mode(|i, k| keep[i] = k.iter().all(|x| x.abs() <= limit));
    for comp in spec.iter_mut() {
        for (z, &k) in comp.iter_mut().zip(&keep) {
            if !k {
                *z = Complex64::new(0.0, 0.0);
            }
        }
    }
    let (conv_hat, stress_hat) = spec.split_at(dim);
    let forcing = stepper.forcing_at(t);

    let mut pi_hat = Spectrum::zeros(grid, 1);
    for (idx, o) in pi_hat.components_mut()[0].iter_mut().enumerate() {
        let k = &kvec[idx];
        let k2: f64 = k[..dim].iter().map(|x| x * x).sum();
        if k2 == 0.0 {
            continue;
        }
        let mut kg = Complex64::new(0.0, 0.0);
        for i in 0..dim {
            let mut gi = conv_hat[i][idx];
            for j in 0..dim {
                gi -= I * k[j] * stress_hat[sym_index(dim, i, j)][idx];
            }
            if let Some(f) = &forcing {
                gi -= f.components()[i][idx];
            }
            kg += gi * k[i];
        }
        *o = I * kg / k2;
    }
    Ok(PressureField {
        pi: ScalarField::from_spectrum(&pi_hat)?,
    })
}

//! Spectral differentiation, Leray projection, truncation and mollification.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{Field, ScalarField, Spectrum, SymTensorField, TensorField, VectorField};
use crate::grid::{sym_pairs, GridSpec};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Per-mode angular wavenumber vectors `2 pi k` (Nyquist entries zeroed).
pub(crate) fn mode_vectors(grid: &GridSpec) -> Vec<[f64; 3]> {
    let kd = grid.derivative_wavenumbers();
    let n = grid.n();
    let mut out = vec![[0.0; 3]; grid.len()];
    match grid.dim() {
        2 => {
            for a in 0..n {
                for b in 0..n {
                    out[a * n + b] = [kd[a], kd[b], 0.0];
                }
            }
        }
        _ => {
            for a in 0..n {
                for b in 0..n {
                    for c in 0..n {
                        out[(a * n + b) * n + c] = [kd[a], kd[b], kd[c]];
                    }
                }
            }
        }
    }
    out
}

/// Per-mode `|2 pi k|^2` (true wavenumbers, Nyquist included).
pub(crate) fn mode_sq_norms(grid: &GridSpec) -> Vec<f64> {
    let mut out = vec![0.0; grid.len()];
    let tp = 2.0 * core::f64::consts::PI;
    grid.for_each_mode(|i, k| {
        out[i] = k.iter().map(|&kk| (tp * kk as f64).powi(2)).sum();
    });
    out
}

/// Gradient of every component: output component `c * dim + j` is
/// `d_j` of input component `c`.
pub fn gradient_spectrum(s: &Spectrum) -> Spectrum {
    let grid = *s.grid();
    let dim = grid.dim();
    let kv = mode_vectors(&grid);
    let mut comps = Vec::with_capacity(s.len() * dim);
    for c in s.components() {
        for j in 0..dim {
            comps.push(c.iter().zip(kv.iter()).map(|(z, k)| I * k[j] * z).collect());
        }
    }
    Spectrum::from_components(grid, comps).expect("same grid")
}

/// Contracts the last index of a full-storage tensor spectrum with `nabla`.
pub fn divergence_spectrum(s: &Spectrum) -> Spectrum {
    let grid = *s.grid();
    let dim = grid.dim();
    let kv = mode_vectors(&grid);
    let comps = s
        .components()
        .chunks(dim)
        .map(|group| {
            let mut out = vec![Complex64::new(0.0, 0.0); grid.len()];
            for (j, c) in group.iter().enumerate() {
                for ((o, z), k) in out.iter_mut().zip(c.iter()).zip(kv.iter()) {
                    *o += I * k[j] * z;
                }
            }
            out
        })
        .collect();
    Spectrum::from_components(grid, comps).expect("same grid")
}

/// Divergence `(div T)_i = sum_j d_j T_ij` of a symmetric tensor spectrum.
pub fn sym_divergence_spectrum(s: &Spectrum) -> Spectrum {
    let grid = *s.grid();
    let dim = grid.dim();
    let kv = mode_vectors(&grid);
    let mut out = Spectrum::zeros(grid, dim);
    let pairs = sym_pairs(dim);
    for (p, &(a, b)) in pairs.iter().enumerate() {
        let src = &s.components()[p];
        // T_ab contributes d_b T_ab to row a, and d_a T_ab to row b when a != b.
        {
            let dst = &mut out.components_mut()[a];
            for ((o, z), k) in dst.iter_mut().zip(src.iter()).zip(kv.iter()) {
                *o += I * k[b] * z;
            }
        }
        if a != b {
            let dst = &mut out.components_mut()[b];
            for ((o, z), k) in dst.iter_mut().zip(src.iter()).zip(kv.iter()) {
                *o += I * k[a] * z;
            }
        }
    }
    out
}

/// Symmetric gradient `(grad v + grad v^T)/2` of a vector spectrum.
pub fn sym_gradient_spectrum(v: &Spectrum) -> Spectrum {
    let grid = *v.grid();
    let kv = mode_vectors(&grid);
    let comps = sym_pairs(grid.dim())
        .iter()
        .map(|&(a, b)| {
            let va = &v.components()[a];
            let vb = &v.components()[b];
            va.iter()
                .zip(vb.iter())
                .zip(kv.iter())
                .map(|((za, zb), k)| I * (za * k[b] + zb * k[a]) * 0.5)
                .collect()
        })
        .collect();
    Spectrum::from_components(grid, comps).expect("same grid")
}

/// Leray projection of a vector spectrum in place; also removes the mean.
pub fn leray_project_spectrum(v: &mut Spectrum) {
    let grid = *v.grid();
    let dim = grid.dim();
    let kv = mode_vectors(&grid);
    let len = grid.len();
    let comps = v.components_mut();
    for idx in 0..len {
        let k = kv[idx];
        let k2: f64 = k[..dim].iter().map(|x| x * x).sum();
        if k2 == 0.0 {
            // mean and pure-Nyquist modes carry no divergence information
            if idx == 0 {
                for c in comps.iter_mut() {
                    c[idx] = Complex64::new(0.0, 0.0);
                }
            }
            continue;
        }
        let mut kdotv = Complex64::new(0.0, 0.0);
        for j in 0..dim {
            kdotv += comps[j][idx] * k[j];
        }
        let f = kdotv / k2;
        for j in 0..dim {
            comps[j][idx] -= f * k[j];
        }
    }
}

/// Largest `|k . vhat(k)| / |2 pi|` over all modes.
pub fn max_spectral_divergence(v: &Spectrum) -> f64 {
    let grid = *v.grid();
    let kv = mode_vectors(&grid);
    let mut m: f64 = 0.0;
    for (idx, k) in kv.iter().enumerate() {
        let mut d = Complex64::new(0.0, 0.0);
        for (j, c) in v.components().iter().enumerate() {
            d += c[idx] * k[j];
        }
        m = m.max(d.norm());
    }
    m / (2.0 * core::f64::consts::PI)
}

/// Fields that can be differentiated spectrally, raising the rank by one.
pub trait Gradient: Field {
    type Output;
    fn spectral_gradient(&self) -> Result<Self::Output>;
}

impl Gradient for ScalarField {
    type Output = VectorField;
    fn spectral_gradient(&self) -> Result<VectorField> {
        self.ensure_finite("spectral_gradient")?;
        VectorField::from_spectrum(&gradient_spectrum(&self.to_spectrum()))
    }
}

impl Gradient for VectorField {
    type Output = TensorField;
    fn spectral_gradient(&self) -> Result<TensorField> {
        self.ensure_finite("spectral_gradient")?;
        TensorField::from_spectrum(&gradient_spectrum(&self.to_spectrum()), 2)
    }
}

impl Gradient for SymTensorField {
    type Output = TensorField;
    /// Full rank-3 gradient `d_k T_ij` of the symmetric tensor.
    fn spectral_gradient(&self) -> Result<TensorField> {
        self.ensure_finite("spectral_gradient")?;
        let full = expand_sym(&self.to_spectrum());
        TensorField::from_spectrum(&gradient_spectrum(&full), 3)
    }
}

impl Gradient for TensorField {
    type Output = TensorField;
    fn spectral_gradient(&self) -> Result<TensorField> {
        self.ensure_finite("spectral_gradient")?;
        TensorField::from_spectrum(&gradient_spectrum(&self.to_spectrum()), self.rank() + 1)
    }
}

/// Expands an upper-triangle spectrum to full `dim x dim` storage.
pub(crate) fn expand_sym(s: &Spectrum) -> Spectrum {
    let grid = *s.grid();
    let dim = grid.dim();
    let mut comps = Vec::with_capacity(dim * dim);
    for i in 0..dim {
        for j in 0..dim {
            comps.push(s.components()[crate::grid::sym_index(dim, i, j)].clone());
        }
    }
    Spectrum::from_components(grid, comps).expect("same grid")
}

/// Spectral gradient of a scalar, vector, or tensor field.
pub fn spectral_gradient<F: Gradient>(f: &F) -> Result<F::Output> {
    f.spectral_gradient()
}

/// `Dv = (grad v + grad v^T) / 2`.
pub fn sym_gradient(v: &VectorField) -> Result<SymTensorField> {
    v.ensure_finite("sym_gradient")?;
    SymTensorField::from_spectrum(&sym_gradient_spectrum(&v.to_spectrum()))
}

/// Fields with a spectral divergence lowering the rank by one.
pub trait Divergence: Field {
    type Output;
    fn divergence(&self) -> Result<Self::Output>;
}

impl Divergence for VectorField {
    type Output = ScalarField;
    fn divergence(&self) -> Result<ScalarField> {
        self.ensure_finite("divergence")?;
        ScalarField::from_spectrum(&divergence_spectrum(&self.to_spectrum()))
    }
}

impl Divergence for SymTensorField {
    type Output = VectorField;
    fn divergence(&self) -> Result<VectorField> {
        self.ensure_finite("divergence")?;
        VectorField::from_spectrum(&sym_divergence_spectrum(&self.to_spectrum()))
    }
}

pub fn divergence<F: Divergence>(f: &F) -> Result<F::Output> {
    f.divergence()
}

/// L2-orthogonal projection onto mean-zero divergence-free fields.
pub fn leray_project(v: &VectorField) -> Result<VectorField> {
    v.ensure_finite("leray_project")?;
    let mut s = v.to_spectrum();
    leray_project_spectrum(&mut s);
    VectorField::from_spectrum(&s)
}

/// Sharp Fourier cutoff keeping `|k|_inf <= cutoff`.
pub fn truncate<F: Field>(f: &F, cutoff: usize) -> Result<F> {
    if cutoff > f.grid().cutoff() {
        return Err(Error::InvalidGrid(format!(
            "truncation radius {cutoff} exceeds grid cutoff {}",
            f.grid().cutoff()
        )));
    }
    f.ensure_finite("truncate")?;
    let mut s = f.to_spectrum();
    s.truncate_to(cutoff);
    Ok(f.with_components(s.to_physical()))
}

/// 2/3-rule truncation to `|k|_inf <= n/3`.
pub fn dealias<F: Field>(f: &F) -> Result<F> {
    f.ensure_finite("dealias")?;
    let mut s = f.to_spectrum();
    s.truncate_to(f.grid().dealias_limit());
    Ok(f.with_components(s.to_physical()))
}

/// Gaussian multiplier `exp(-delta^2 |2 pi k|^2 / 2)` for each mode.
pub fn mollifier_multiplier(grid: &GridSpec, delta: f64) -> Vec<f64> {
    mode_sq_norms(grid)
        .into_iter()
        .map(|k2| (-0.5 * delta * delta * k2).exp())
        .collect()
}

/// Periodic Gaussian mollification `eta_delta * c`; `delta = 0` is the identity.
pub fn mollify(c: &ScalarField, delta: f64) -> Result<ScalarField> {
    if !(delta >= 0.0) || !delta.is_finite() {
        return Err(Error::InvalidParameter(format!("mollifier width must be >= 0, got {delta}")));
    }
    if delta == 0.0 {
        return Ok(c.clone());
    }
    c.ensure_finite("mollify")?;
    let mut s = c.to_spectrum();
    s.apply_multiplier(&mollifier_multiplier(c.grid(), delta));
    ScalarField::from_spectrum(&s)
}

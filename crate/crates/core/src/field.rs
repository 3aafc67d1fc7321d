//! Periodic scalar, vector and tensor fields sampled on a [`GridSpec`], and
//! their Fourier representation [`Spectrum`].

#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft;
use crate::grid::{sym_pairs, GridSpec};

/// Common access to the sampled components of any field.
pub trait Field: Sized {
    fn grid(&self) -> &GridSpec;

    /// Component arrays, each of length `grid.len()`.
    fn components(&self) -> &[Vec<f64>];

    /// Tensor rank (0 scalar, 1 vector, 2 matrix, ...).
    fn rank(&self) -> usize;

    /// Rebuilds a field of the same kind from new component data.
    fn with_components(&self, comps: Vec<Vec<f64>>) -> Self;

    /// Multiplicity of component `i` in the Frobenius magnitude.
    fn component_weight(&self, _i: usize) -> f64 {
        1.0
    }

    /// Pointwise squared magnitude (Euclidean / Frobenius).
    fn magnitude_sq_at(&self, idx: usize) -> f64 {
        self.components()
            .iter()
            .enumerate()
            .map(|(i, c)| self.component_weight(i) * c[idx] * c[idx])
            .sum()
    }

    fn ensure_finite(&self, context: &'static str) -> Result<()> {
        if self.components().iter().all(|c| c.iter().all(|v| v.is_finite())) {
            Ok(())
        } else {
            Err(Error::NonFinite(context))
        }
    }

    fn to_spectrum(&self) -> Spectrum {
        let refs: Vec<&[f64]> = self.components().iter().map(|c| c.as_slice()).collect();
        Spectrum {
            grid: *self.grid(),
            comps: fft::forward_real(self.grid(), &refs),
        }
    }
}

fn check_len(grid: &GridSpec, comps: &[Vec<f64>], expected: usize) -> Result<()> {
    if comps.len() != expected || comps.iter().any(|c| c.len() != grid.len()) {
        return Err(Error::GridMismatch);
    }
    Ok(())
}

macro_rules! field_common {
    ($ty:ident) => {
        impl $ty {
            pub fn grid(&self) -> &GridSpec {
                &self.grid
            }

            pub fn components(&self) -> &[Vec<f64>] {
                &self.comps
            }

            pub fn into_components(self) -> Vec<Vec<f64>> {
                self.comps
            }
        }
    };
}

/// Real scalar field.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: GridSpec,
    comps: Vec<Vec<f64>>,
}

field_common!(ScalarField);

impl ScalarField {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        let comps = vec![values];
        check_len(&grid, &comps, 1)?;
        Ok(Self { grid, comps })
    }

    pub fn constant(grid: GridSpec, value: f64) -> Self {
        Self {
            grid,
            comps: vec![vec![value; grid.len()]],
        }
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn from_fn<F: FnMut([f64; 3]) -> f64>(grid: GridSpec, mut f: F) -> Self {
        let mut values = vec![0.0; grid.len()];
        grid.for_each_point(|i, x| values[i] = f(x));
        Self {
            grid,
            comps: vec![values],
        }
    }

    pub fn from_spectrum(s: &Spectrum) -> Result<Self> {
        if s.comps.len() != 1 {
            return Err(Error::GridMismatch);
        }
        Ok(Self {
            grid: s.grid,
            comps: s.to_physical(),
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.comps[0]
    }

    /// Grid quadrature of the field, `sum f h^dim`.
    pub fn integral(&self) -> f64 {
        self.values().iter().sum::<f64>() * self.grid.cell_volume()
    }

    pub fn mean(&self) -> f64 {
        self.integral()
    }

    pub fn min(&self) -> f64 {
        self.values().iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values().iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

impl Field for ScalarField {
    fn grid(&self) -> &GridSpec {
        &self.grid
    }
    fn components(&self) -> &[Vec<f64>] {
        &self.comps
    }
    fn rank(&self) -> usize {
        0
    }
    fn with_components(&self, comps: Vec<Vec<f64>>) -> Self {
        Self { grid: self.grid, comps }
    }
}

/// Real vector field with `dim` components.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    grid: GridSpec,
    comps: Vec<Vec<f64>>,
}

field_common!(VectorField);

impl VectorField {
    pub fn new(grid: GridSpec, comps: Vec<Vec<f64>>) -> Result<Self> {
        check_len(&grid, &comps, grid.dim())?;
        Ok(Self { grid, comps })
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            grid,
            comps: vec![vec![0.0; grid.len()]; grid.dim()],
        }
    }

    /// Samples `f(x)`; only the first `dim` entries of the result are used.
    pub fn from_fn<F: FnMut([f64; 3]) -> [f64; 3]>(grid: GridSpec, mut f: F) -> Self {
        let mut comps = vec![vec![0.0; grid.len()]; grid.dim()];
        grid.for_each_point(|i, x| {
            let v = f(x);
            for (c, comp) in comps.iter_mut().enumerate() {
                comp[i] = v[c];
            }
        });
        Self { grid, comps }
    }

    pub fn from_spectrum(s: &Spectrum) -> Result<Self> {
        if s.comps.len() != s.grid.dim() {
            return Err(Error::GridMismatch);
        }
        Ok(Self {
            grid: s.grid,
            comps: s.to_physical(),
        })
    }

    pub fn component(&self, i: usize) -> &[f64] {
        &self.comps[i]
    }

    /// `self + scale * other`.
    pub fn add_scaled(&self, scale: f64, other: &Self) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let comps = self
            .comps
            .iter()
            .zip(other.comps.iter())
            .map(|(a, b)| a.iter().zip(b.iter()).map(|(x, y)| x + scale * y).collect())
            .collect();
        Ok(Self { grid: self.grid, comps })
    }

    /// Componentwise spatial mean.
    pub fn mean(&self) -> Vec<f64> {
        let w = self.grid.cell_volume();
        self.comps.iter().map(|c| c.iter().sum::<f64>() * w).collect()
    }
}

impl Field for VectorField {
    fn grid(&self) -> &GridSpec {
        &self.grid
    }
    fn components(&self) -> &[Vec<f64>] {
        &self.comps
    }
    fn rank(&self) -> usize {
        1
    }
    fn with_components(&self, comps: Vec<Vec<f64>>) -> Self {
        Self { grid: self.grid, comps }
    }
}

/// Symmetric rank-2 tensor field storing the upper triangle
/// (see [`crate::grid::sym_pairs`]).
#[derive(Debug, Clone, PartialEq)]
pub struct SymTensorField {
    grid: GridSpec,
    comps: Vec<Vec<f64>>,
}

field_common!(SymTensorField);

impl SymTensorField {
    pub fn new(grid: GridSpec, comps: Vec<Vec<f64>>) -> Result<Self> {
        check_len(&grid, &comps, grid.sym_len())?;
        Ok(Self { grid, comps })
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            grid,
            comps: vec![vec![0.0; grid.len()]; grid.sym_len()],
        }
    }

    /// Samples `f(x)` given as a full matrix; only the upper triangle is read.
    pub fn from_fn<F: FnMut([f64; 3]) -> [[f64; 3]; 3]>(grid: GridSpec, mut f: F) -> Self {
        let pairs = sym_pairs(grid.dim());
        let mut comps = vec![vec![0.0; grid.len()]; pairs.len()];
        grid.for_each_point(|i, x| {
            let m = f(x);
            for (s, &(a, b)) in pairs.iter().enumerate() {
                comps[s][i] = m[a][b];
            }
        });
        Self { grid, comps }
    }

    pub fn from_spectrum(s: &Spectrum) -> Result<Self> {
        if s.comps.len() != s.grid.sym_len() {
            return Err(Error::GridMismatch);
        }
        Ok(Self {
            grid: s.grid,
            comps: s.to_physical(),
        })
    }

    /// Entry `(i, j)` at grid point `idx`.
    pub fn entry(&self, i: usize, j: usize, idx: usize) -> f64 {
        self.comps[crate::grid::sym_index(self.grid.dim(), i, j)][idx]
    }

    /// Pointwise tensor at grid point `idx`.
    pub fn at(&self, idx: usize) -> crate::tensor::SymTensor {
        let mut t = crate::tensor::SymTensor::zero(self.grid.dim());
        for (s, c) in self.comps.iter().enumerate() {
            t.comps[s] = c[idx];
        }
        t
    }
}

impl Field for SymTensorField {
    fn grid(&self) -> &GridSpec {
        &self.grid
    }
    fn components(&self) -> &[Vec<f64>] {
        &self.comps
    }
    fn rank(&self) -> usize {
        2
    }
    fn with_components(&self, comps: Vec<Vec<f64>>) -> Self {
        Self { grid: self.grid, comps }
    }
    fn component_weight(&self, i: usize) -> f64 {
        let (a, b) = sym_pairs(self.grid.dim())[i];
        if a == b {
            1.0
        } else {
            2.0
        }
    }
}

/// General tensor field of arbitrary rank with full storage: component
/// `(i_1, ..., i_r)` lives at flat index `i_1 dim^{r-1} + ... + i_r`.
/// The last index is the one added by differentiation.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorField {
    grid: GridSpec,
    rank: usize,
    comps: Vec<Vec<f64>>,
}

field_common!(TensorField);

impl TensorField {
    pub fn new(grid: GridSpec, rank: usize, comps: Vec<Vec<f64>>) -> Result<Self> {
        check_len(&grid, &comps, grid.dim().pow(rank as u32))?;
        Ok(Self { grid, rank, comps })
    }

    pub fn from_spectrum(s: &Spectrum, rank: usize) -> Result<Self> {
        if s.comps.len() != s.grid.dim().pow(rank as u32) {
            return Err(Error::GridMismatch);
        }
        Ok(Self {
            grid: s.grid,
            rank,
            comps: s.to_physical(),
        })
    }

    /// For rank 2: entry `(i, j)` at grid point `idx`.
    pub fn entry2(&self, i: usize, j: usize, idx: usize) -> f64 {
        self.comps[i * self.grid.dim() + j][idx]
    }
}

impl Field for TensorField {
    fn grid(&self) -> &GridSpec {
        &self.grid
    }
    fn components(&self) -> &[Vec<f64>] {
        &self.comps
    }
    fn rank(&self) -> usize {
        self.rank
    }
    fn with_components(&self, comps: Vec<Vec<f64>>) -> Self {
        Self {
            grid: self.grid,
            rank: self.rank,
            comps,
        }
    }
}

/// Fourier coefficients of a real field, one array per component, in FFT
/// index order. Coefficients of real fields are conjugate-symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    grid: GridSpec,
    comps: Vec<Vec<Complex64>>,
}

impl Spectrum {
    pub fn zeros(grid: GridSpec, ncomp: usize) -> Self {
        Self {
            grid,
            comps: vec![vec![Complex64::new(0.0, 0.0); grid.len()]; ncomp],
        }
    }

    pub fn from_components(grid: GridSpec, comps: Vec<Vec<Complex64>>) -> Result<Self> {
        if comps.iter().any(|c| c.len() != grid.len()) {
            return Err(Error::GridMismatch);
        }
        Ok(Self { grid, comps })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn components(&self) -> &[Vec<Complex64>] {
        &self.comps
    }

    pub fn components_mut(&mut self) -> &mut [Vec<Complex64>] {
        &mut self.comps
    }

    pub fn len(&self) -> usize {
        self.comps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.comps.is_empty()
    }

    /// Inverse transform of every component.
    pub fn to_physical(&self) -> Vec<Vec<f64>> {
        let refs: Vec<&[Complex64]> = self.comps.iter().map(|c| c.as_slice()).collect();
        fft::inverse_real(&self.grid, &refs)
    }

    /// `sum_k |fhat(k)|^2` over all components; equals `int |f|^2 dx`.
    pub fn norm_sq(&self) -> f64 {
        self.comps
            .iter()
            .flat_map(|c| c.iter())
            .map(|z| z.norm_sqr())
            .sum()
    }

    /// Largest coefficient magnitude over all components.
    pub fn max_abs(&self) -> f64 {
        self.comps
            .iter()
            .flat_map(|c| c.iter())
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.comps
            .iter()
            .all(|c| c.iter().all(|z| z.re.is_finite() && z.im.is_finite()))
    }

    /// `self + scale * other`, in place.
    pub fn axpy(&mut self, scale: f64, other: &Spectrum) {
        for (a, b) in self.comps.iter_mut().zip(other.comps.iter()) {
            for (x, y) in a.iter_mut().zip(b.iter()) {
                *x += *y * scale;
            }
        }
    }

    /// Difference `self - other`.
    pub fn sub(&self, other: &Spectrum) -> Spectrum {
        let comps = self
            .comps
            .iter()
            .zip(other.comps.iter())
            .map(|(a, b)| a.iter().zip(b.iter()).map(|(x, y)| x - y).collect())
            .collect();
        Spectrum { grid: self.grid, comps }
    }

    pub fn scaled(&self, s: f64) -> Spectrum {
        let comps = self
            .comps
            .iter()
            .map(|a| a.iter().map(|x| x * s).collect())
            .collect();
        Spectrum { grid: self.grid, comps }
    }

    /// Multiplies every component by a per-mode real multiplier.
    pub fn apply_multiplier(&mut self, m: &[f64]) {
        for c in self.comps.iter_mut() {
            for (x, &f) in c.iter_mut().zip(m.iter()) {
                *x *= f;
            }
        }
    }

    /// Zeroes all modes with `|k|_inf > limit`.
    pub fn truncate_to(&mut self, limit: usize) {
        let limit = limit as i64;
        let mut mask = vec![false; self.grid.len()];
        self.grid.for_each_mode(|i, k| {
            mask[i] = k.iter().any(|&kk| kk.abs() > limit);
        });
        for c in self.comps.iter_mut() {
            for (x, &drop) in c.iter_mut().zip(mask.iter()) {
                if drop {
                    *x = Complex64::new(0.0, 0.0);
                }
            }
        }
    }

    /// Spectral interpolation onto another grid of the same dimension by
    /// zero-padding or cropping. Nyquist modes are dropped.
    pub fn resample(&self, target: GridSpec) -> Result<Spectrum> {
        if target.dim() != self.grid.dim() {
            return Err(Error::GridMismatch);
        }
        let keep = (self.grid.n().min(target.n()) / 2) as i64;
        let tn = target.n() as i64;
        let mut out = Spectrum::zeros(target, self.comps.len());
        let dim = self.grid.dim();
        self.grid.for_each_mode(|i, k| {
            if k.iter().any(|&kk| kk.abs() >= keep) {
                return;
            }
            let w = |kk: i64| (kk.rem_euclid(tn)) as usize;
            let j = if dim == 2 {
                w(k[0]) * target.n() + w(k[1])
            } else {
                (w(k[0]) * target.n() + w(k[1])) * target.n() + w(k[2])
            };
            for (o, s) in out.comps.iter_mut().zip(self.comps.iter()) {
                o[j] = s[i];
            }
        });
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    #[test]
    fn spectral_round_trip_all_ranks() {
        let g = GridSpec::new(3, 16, 5).unwrap();
        let s = ScalarField::from_fn(g, |x| (2.0 * PI * x[0]).sin() * (4.0 * PI * x[2]).cos() + 0.3);
        let back = ScalarField::from_spectrum(&s.to_spectrum()).unwrap();
        for (a, b) in s.values().iter().zip(back.values()) {
            assert!((a - b).abs() < 1e-12 * 1.3);
        }
        let t = SymTensorField::from_fn(g, |x| {
            let a = (2.0 * PI * (x[0] + x[1])).sin();
            [[a, 0.5, a * a], [0.5, 1.0, -a], [a * a, -a, 2.0]]
        });
        let back = SymTensorField::from_spectrum(&t.to_spectrum()).unwrap();
        for (ca, cb) in t.components().iter().zip(back.components()) {
            for (a, b) in ca.iter().zip(cb) {
                assert!((a - b).abs() < 1e-12 * 2.0);
            }
        }
    }

    #[test]
    fn single_mode_coefficients() {
        let g = GridSpec::new(2, 8, 2).unwrap();
        let s = ScalarField::from_fn(g, |x| (2.0 * PI * x[0]).cos());
        let sp = s.to_spectrum();
        // cos = (e^{ikx} + e^{-ikx}) / 2 with k = (1, 0) at index 8 and (-1, 0) at 56
        assert!((sp.components()[0][8].re - 0.5).abs() < 1e-15);
        assert!((sp.components()[0][56].re - 0.5).abs() < 1e-15);
        assert!((sp.norm_sq() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn resample_preserves_resolved_field() {
        let g = GridSpec::new(2, 16, 5).unwrap();
        let s = ScalarField::from_fn(g, |x| (2.0 * PI * x[0]).sin() + (6.0 * PI * x[1]).cos());
        let fine = g.refined().unwrap();
        let r = ScalarField::from_spectrum(&s.to_spectrum().resample(fine).unwrap()).unwrap();
        let exact = ScalarField::from_fn(fine, |x| (2.0 * PI * x[0]).sin() + (6.0 * PI * x[1]).cos());
        for (a, b) in r.values().iter().zip(exact.values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}

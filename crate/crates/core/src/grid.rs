//! Uniform periodic grids on the unit torus `[0,1]^dim`.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::format;
use core::f64::consts::PI;

use crate::error::{Error, Result};

/// Validated description of a uniform periodic grid with a Galerkin cutoff.
///
/// Samples sit at `x = i/n`, `i = 0..n` along each axis and are stored
/// row-major with the last axis fastest. The cutoff `K` bounds the retained
/// velocity modes, `|k|_inf <= K`, and never exceeds the 2/3-rule limit `n/3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GridSpec {
    dim: usize,
    n: usize,
    cutoff: usize,
}

impl GridSpec {
    pub fn new(dim: usize, n: usize, cutoff: usize) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::InvalidGrid(format!("dim must be 2 or 3, got {dim}")));
        }
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "n must be a power of two >= 8, got {n}"
            )));
        }
        if cutoff < 1 || cutoff > n / 3 {
            return Err(Error::InvalidGrid(format!(
                "cutoff must satisfy 1 <= K <= n/3 = {}, got {cutoff}",
                n / 3
            )));
        }
        Ok(Self { dim, n, cutoff })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    /// Galerkin truncation radius `K` in integer wavenumbers.
    #[inline]
    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    /// Largest wavenumber kept by the 2/3 dealiasing rule.
    #[inline]
    pub fn dealias_limit(&self) -> usize {
        self.n / 3
    }

    #[inline]
    pub fn spacing(&self) -> f64 {
        1.0 / self.n as f64
    }

    /// Number of grid points, `n^dim`.
    #[inline]
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    /// Quadrature weight `h^dim` of every grid point.
    #[inline]
    pub fn cell_volume(&self) -> f64 {
        1.0 / self.len() as f64
    }

    /// Number of independent components of a symmetric tensor.
    #[inline]
    pub fn sym_len(&self) -> usize {
        self.dim * (self.dim + 1) / 2
    }

    /// Same grid with a different cutoff.
    pub fn with_cutoff(&self, cutoff: usize) -> Result<Self> {
        Self::new(self.dim, self.n, cutoff)
    }

    /// Same dimension and cutoff on a grid with `2n` points per axis.
    pub fn refined(&self) -> Result<Self> {
        Self::new(self.dim, self.n * 2, self.cutoff)
    }

    /// Signed integer wavenumber of FFT index `j` (Nyquist maps to `-n/2`).
    #[inline]
    pub fn wavenumber(&self, j: usize) -> i64 {
        let n = self.n as i64;
        let j = j as i64;
        if j < n / 2 {
            j
        } else {
            j - n
        }
    }

    /// Angular wavenumbers `2 pi k` used for differentiation, with the
    /// Nyquist entry set to zero so derivatives of real fields stay real.
    pub fn derivative_wavenumbers(&self) -> alloc::vec::Vec<f64> {
        (0..self.n)
            .map(|j| {
                if j == self.n / 2 {
                    0.0
                } else {
                    2.0 * PI * self.wavenumber(j) as f64
                }
            })
            .collect()
    }

    /// Calls `f(index, k)` for every mode, where `k` holds the signed integer
    /// wavenumbers (unused trailing axes are zero).
    pub fn for_each_mode<F: FnMut(usize, [i64; 3])>(&self, mut f: F) {
        let n = self.n;
        let ks: alloc::vec::Vec<i64> = (0..n).map(|j| self.wavenumber(j)).collect();
        match self.dim {
            2 => {
                for a in 0..n {
                    for b in 0..n {
                        f(a * n + b, [ks[a], ks[b], 0]);
                    }
                }
            }
            _ => {
                for a in 0..n {
                    for b in 0..n {
                        for c in 0..n {
                            f((a * n + b) * n + c, [ks[a], ks[b], ks[c]]);
                        }
                    }
                }
            }
        }
    }

    /// Calls `f(index, x)` for every grid point with physical coordinates `x`.
    pub fn for_each_point<F: FnMut(usize, [f64; 3])>(&self, mut f: F) {
        let n = self.n;
        let h = self.spacing();
        match self.dim {
            2 => {
                for a in 0..n {
                    for b in 0..n {
                        f(a * n + b, [a as f64 * h, b as f64 * h, 0.0]);
                    }
                }
            }
            _ => {
                for a in 0..n {
                    for b in 0..n {
                        for c in 0..n {
                            f(
                                (a * n + b) * n + c,
                                [a as f64 * h, b as f64 * h, c as f64 * h],
                            );
                        }
                    }
                }
            }
        }
    }

    /// Index of the mode `-k` for the mode stored at `index`.
    pub(crate) fn negated_indices(&self) -> alloc::vec::Vec<usize> {
        let n = self.n;
        let neg = |j: usize| (n - j) % n;
        let mut out = alloc::vec![0usize; self.len()];
        match self.dim {
            2 => {
                for a in 0..n {
                    for b in 0..n {
                        out[a * n + b] = neg(a) * n + neg(b);
                    }
                }
            }
            _ => {
                for a in 0..n {
                    for b in 0..n {
                        for c in 0..n {
                            out[(a * n + b) * n + c] = (neg(a) * n + neg(b)) * n + neg(c);
                        }
                    }
                }
            }
        }
        out
    }
}

/// Index pairs `(i, j)`, `i <= j`, of the stored upper triangle of a
/// symmetric tensor in `dim` dimensions.
pub fn sym_pairs(dim: usize) -> &'static [(usize, usize)] {
    match dim {
        2 => &[(0, 0), (0, 1), (1, 1)],
        _ => &[(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)],
    }
}

/// Position of entry `(i, j)` in the upper-triangle storage.
pub fn sym_index(dim: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    match dim {
        2 => [[0, 1], [1, 2]][i][j],
        _ => [[0, 1, 2], [1, 3, 4], [2, 4, 5]][i][j],
    }
}

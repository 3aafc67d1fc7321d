//! Small pointwise tensors used by the constitutive law.


#[allow(unused_imports)]
use num_traits::Float;
use crate::grid::{sym_index, sym_pairs};

/// Symmetric `dim x dim` tensor (upper-triangle storage, `dim <= 3`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymTensor {
    pub dim: usize,
    pub comps: [f64; 6],
}

impl SymTensor {
    pub fn zero(dim: usize) -> Self {
        Self { dim, comps: [0.0; 6] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut t = Self::zero(dim);
        for i in 0..dim {
            t.comps[sym_index(dim, i, i)] = 1.0;
        }
        t
    }

    /// Symmetric part of `m`.
    pub fn from_matrix(dim: usize, m: [[f64; 3]; 3]) -> Self {
        let mut t = Self::zero(dim);
        for (s, &(i, j)) in sym_pairs(dim).iter().enumerate() {
            t.comps[s] = 0.5 * (m[i][j] + m[j][i]);
        }
        t
    }

    pub fn to_matrix(&self) -> [[f64; 3]; 3] {
        let mut m = [[0.0; 3]; 3];
        for i in 0..self.dim {
            for j in 0..self.dim {
                m[i][j] = self.get(i, j);
            }
        }
        m
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.comps[sym_index(self.dim, i, j)]
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.dim * (self.dim + 1) / 2
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    /// `A : B`, the full double contraction.
    pub fn ddot(&self, other: &Self) -> f64 {
        sym_pairs(self.dim)
            .iter()
            .enumerate()
            .map(|(s, &(i, j))| {
                let w = if i == j { 1.0 } else { 2.0 };
                w * self.comps[s] * other.comps[s]
            })
            .sum()
    }

    /// Squared Frobenius norm `|A|^2 = A : A`.
    #[inline]
    pub fn norm_sq(&self) -> f64 {
        self.ddot(self)
    }

    #[inline]
    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut t = *self;
        t.comps.iter_mut().for_each(|c| *c *= s);
        t
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut t = *self;
        for (a, b) in t.comps.iter_mut().zip(other.comps.iter()) {
            *a += b;
        }
        t
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1.0))
    }

    /// `Q A Q^T`.
    pub fn rotate(&self, q: &[[f64; 3]; 3]) -> Self {
        let a = self.to_matrix();
        let mut out = [[0.0; 3]; 3];
        for (i, row) in out.iter_mut().enumerate().take(self.dim) {
            for (j, o) in row.iter_mut().enumerate().take(self.dim) {
                let mut s = 0.0;
                for k in 0..self.dim {
                    for l in 0..self.dim {
                        s += q[i][k] * a[k][l] * q[j][l];
                    }
                }
                *o = s;
            }
        }
        Self::from_matrix(self.dim, out)
    }
}

/// Rank-4 tensor `A_ijkl` in `dim <= 3` dimensions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tensor4 {
    pub dim: usize,
    pub data: [[[[f64; 3]; 3]; 3]; 3],
}

impl Tensor4 {
    pub fn from_fn<F: FnMut(usize, usize, usize, usize) -> f64>(dim: usize, mut f: F) -> Self {
        let mut data = [[[[0.0; 3]; 3]; 3]; 3];
        for i in 0..dim {
            for j in 0..dim {
                for k in 0..dim {
                    for l in 0..dim {
                        data[i][j][k][l] = f(i, j, k, l);
                    }
                }
            }
        }
        Self { dim, data }
    }

    /// Symmetric identity `(d_ik d_jl + d_il d_jk) / 2`.
    pub fn sym_identity(dim: usize) -> Self {
        let d = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
        Self::from_fn(dim, |i, j, k, l| 0.5 * (d(i, k) * d(j, l) + d(i, l) * d(j, k)))
    }

    /// `A : (B ⊗ B) = sum A_ijkl B_ij B_kl`.
    pub fn contract_pair(&self, b: &SymTensor) -> f64 {
        self.apply(b).ddot(b)
    }

    /// `(A B)_ij = sum_kl A_ijkl B_kl` (symmetrized).
    pub fn apply(&self, b: &SymTensor) -> SymTensor {
        let mut out = SymTensor::zero(self.dim);
        for (s, &(i, j)) in sym_pairs(self.dim).iter().enumerate() {
            let mut acc = 0.0;
            for k in 0..self.dim {
                for l in 0..self.dim {
                    acc += 0.5 * (self.data[i][j][k][l] + self.data[j][i][k][l]) * b.get(k, l);
                }
            }
            out.comps[s] = acc;
        }
        out
    }

    pub fn norm(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                for k in 0..self.dim {
                    for l in 0..self.dim {
                        s += self.data[i][j][k][l] * self.data[i][j][k][l];
                    }
                }
            }
        }
        s.sqrt()
    }

    /// Largest violation of `A_ijkl = A_klij`.
    pub fn major_asymmetry(&self) -> f64 {
        let mut m: f64 = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                for k in 0..self.dim {
                    for l in 0..self.dim {
                        m = m.max((self.data[i][j][k][l] - self.data[k][l][i][j]).abs());
                    }
                }
            }
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frobenius_counts_off_diagonals_twice() {
        let t = SymTensor::from_matrix(3, [[1.0, 2.0, 0.0], [2.0, 0.0, 0.0], [0.0, 0.0, 3.0]]);
        assert_eq!(t.norm_sq(), 1.0 + 4.0 + 4.0 + 9.0);
    }

    #[test]
    fn sym_identity_norm_is_sqrt_of_sym_dimension() {
        assert!((Tensor4::sym_identity(3).norm() - 6f64.sqrt()).abs() < 1e-15);
        assert!((Tensor4::sym_identity(2).norm() - 3f64.sqrt()).abs() < 1e-15);
        let b = SymTensor::from_matrix(3, [[1.0, 2.0, 3.0], [2.0, 4.0, 5.0], [3.0, 5.0, 6.0]]);
        assert_eq!(Tensor4::sym_identity(3).apply(&b), b);
    }
}

//! Radix-2 complex FFT and the multi-dimensional real-field transforms used
//! throughout the crate.
//!
//! Normalization: forward transforms carry the `1/n^dim` factor, so a field
//! is `f(x) = sum_k fhat(k) exp(2 pi i k.x)` and Parseval reads
//! `int |f|^2 dx = sum_k |fhat(k)|^2`.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::grid::GridSpec;

/// Precomputed twiddles and bit-reversal table for one power-of-two length.
pub(crate) struct FftPlan {
    n: usize,
    twiddles: Vec<Complex64>,
    rev: Vec<usize>,
}

impl FftPlan {
    pub(crate) fn new(n: usize) -> Self {
        debug_assert!(n.is_power_of_two());
        let bits = n.trailing_zeros();
        let rev = (0..n)
            .map(|i| if bits == 0 { 0 } else { i.reverse_bits() >> (usize::BITS - bits) })
            .collect();
        let twiddles = (0..n / 2)
            .map(|k| {
                let a = -2.0 * PI * k as f64 / n as f64;
                Complex64::new(a.cos(), a.sin())
            })
            .collect();
        Self { n, twiddles, rev }
    }

    /// Unnormalized in-place transform: `X_k = sum_j x_j exp(-+2 pi i jk/n)`.
    pub(crate) fn process(&self, buf: &mut [Complex64], inverse: bool) {
        let n = self.n;
        debug_assert_eq!(buf.len(), n);
        for i in 0..n {
            let j = self.rev[i];
            if i < j {
                buf.swap(i, j);
            }
        }
        let mut len = 2;
        while len <= n {
            let half = len / 2;
            let stride = n / len;
            for start in (0..n).step_by(len) {
                let (lo, hi) = buf[start..start + len].split_at_mut(half);
                for (j, (a, b)) in lo.iter_mut().zip(hi.iter_mut()).enumerate() {
                    let mut w = self.twiddles[j * stride];
                    if inverse {
                        w = w.conj();
                    }
                    let t = *b * w;
                    *b = *a - t;
                    *a += t;
                }
            }
            len <<= 1;
        }
    }
}

/// In-place multi-dimensional transform along every axis (unnormalized).
pub(crate) fn transform_nd(grid: &GridSpec, data: &mut [Complex64], inverse: bool) {
    let n = grid.n();
    let dim = grid.dim();
    let plan = FftPlan::new(n);
    // contiguous last axis
    for line in data.chunks_exact_mut(n) {
        plan.process(line, inverse);
    }
    let mut scratch = vec![Complex64::new(0.0, 0.0); n];
    for axis in 0..dim - 1 {
        let stride = n.pow((dim - 1 - axis) as u32);
        let block = stride * n;
        for base in (0..data.len()).step_by(block) {
            for offset in 0..stride {
                let start = base + offset;
                for (i, s) in scratch.iter_mut().enumerate() {
                    *s = data[start + i * stride];
                }
                plan.process(&mut scratch, inverse);
                for (i, s) in scratch.iter().enumerate() {
                    data[start + i * stride] = *s;
                }
            }
        }
    }
}

/// Forward transforms of real fields, two per complex FFT.
pub(crate) fn forward_real(grid: &GridSpec, fields: &[&[f64]]) -> Vec<Vec<Complex64>> {
    let len = grid.len();
    let scale = 1.0 / len as f64;
    let neg = grid.negated_indices();
    let mut out = Vec::with_capacity(fields.len());
    for pair in fields.chunks(2) {
        let mut z: Vec<Complex64> = match pair {
            [a, b] => a.iter().zip(b.iter()).map(|(&x, &y)| Complex64::new(x, y)).collect(),
            [a] => a.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
            _ => unreachable!(),
        };
        transform_nd(grid, &mut z, false);
        if pair.len() == 2 {
            let mut a = vec![Complex64::new(0.0, 0.0); len];
            let mut b = vec![Complex64::new(0.0, 0.0); len];
            for i in 0..len {
                let zk = z[i];
                let zm = z[neg[i]].conj();
                a[i] = (zk + zm) * (0.5 * scale);
                // (zk - zm) / 2i
                let d = (zk - zm) * (0.5 * scale);
                b[i] = Complex64::new(d.im, -d.re);
            }
            out.push(a);
            out.push(b);
        } else {
            for v in z.iter_mut() {
                *v *= scale;
            }
            out.push(z);
        }
    }
    out
}

/// Inverse transforms of conjugate-symmetric spectra, two per complex FFT.
pub(crate) fn inverse_real(grid: &GridSpec, spectra: &[&[Complex64]]) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(spectra.len());
    let i = Complex64::new(0.0, 1.0);
    for pair in spectra.chunks(2) {
        let mut z: Vec<Complex64> = match pair {
            [a, b] => a.iter().zip(b.iter()).map(|(&x, &y)| x + i * y).collect(),
            [a] => a.to_vec(),
            _ => unreachable!(),
        };
        transform_nd(grid, &mut z, true);
        out.push(z.iter().map(|v| v.re).collect());
        if pair.len() == 2 {
            out.push(z.iter().map(|v| v.im).collect());
        }
    }
    out
}

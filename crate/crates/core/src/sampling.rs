//! Deterministic low-discrepancy point sets.

use alloc::vec::Vec;
#[allow(unused_imports)] // inherent float methods are missing without std
use num_traits::Float;

use crate::Vector;

const PRIMES: [u32; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

/// Radical inverse of `index` in `base`.
pub fn radical_inverse(mut index: u64, base: u32) -> f64 {
    let b = base as f64;
    let mut inv = 1.0 / b;
    let mut out = 0.0;
    while index > 0 {
        out += (index % base as u64) as f64 * inv;
        index /= base as u64;
        inv /= b;
    }
    out
}

/// Point `index` (1-based internally, so never the origin) of the Halton
/// sequence in `[0, 1)^dim`.
pub fn halton(index: usize, dim: usize) -> Vector {
    assert!(dim <= PRIMES.len(), "Halton sequence supports up to {} dimensions", PRIMES.len());
    Vector::from_fn(dim, |d, _| radical_inverse(index as u64 + 1, PRIMES[d]))
}

/// An axis-aligned box `[lo_i, hi_i]`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SampleBox {
    pub bounds: Vec<(f64, f64)>,
}

impl SampleBox {
    pub fn new(bounds: Vec<(f64, f64)>) -> Self {
        Self { bounds }
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    /// `n` quasi-random points in the box.
    pub fn points(&self, n: usize) -> Vec<Vector> {
        (0..n)
            .map(|k| {
                let h = halton(k, self.dim());
                Vector::from_fn(self.dim(), |i, _| {
                    let (lo, hi) = self.bounds[i];
                    lo + (hi - lo) * h[i]
                })
            })
            .collect()
    }
}

/// `n` quasi-uniform unit vectors in `ℝ^dim` (Box–Muller on Halton pairs).
pub fn sphere_points(n: usize, dim: usize) -> Vec<Vector> {
    if dim == 1 {
        return (0..n)
            .map(|k| Vector::from_element(1, if k % 2 == 0 { 1.0 } else { -1.0 }))
            .collect();
    }
    if dim == 2 {
        return (0..n)
            .map(|k| {
                let th = 2.0 * core::f64::consts::PI * (k as f64 + 0.5) / n as f64;
                Vector::from_column_slice(&[th.cos(), th.sin()])
            })
            .collect();
    }
    let pairs = dim.div_ceil(2);
    (0..n)
        .map(|k| {
            let h = halton(k, 2 * pairs);
            let mut v = Vector::zeros(dim);
            for j in 0..pairs {
                let r = (-2.0 * (1.0 - h[2 * j]).ln()).sqrt();
                let th = 2.0 * core::f64::consts::PI * h[2 * j + 1];
                v[2 * j] = r * th.cos();
                if 2 * j + 1 < dim {
                    v[2 * j + 1] = r * th.sin();
                }
            }
            let nrm = v.norm();
            if nrm > 0.0 {
                v / nrm
            } else {
                let mut e = Vector::zeros(dim);
                e[0] = 1.0;
                e
            }
        })
        .collect()
}

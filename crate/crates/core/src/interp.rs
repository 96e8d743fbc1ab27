//! Piecewise-cubic Hermite interpolation and Gauss–Legendre quadrature.

use alloc::vec::Vec;
#[allow(unused_imports)] // inherent float methods are missing without std
use num_traits::Float;

use crate::Vector;

/// Cubic Hermite interpolant through `(xₖ, yₖ)` with prescribed slopes `mₖ`.
///
/// With `monotone` set, slopes are limited per interval (Fritsch–Carlson), so
/// each component is monotone wherever its data are.
#[derive(Debug, Clone, PartialEq)]
pub struct Hermite {
    x: Vec<f64>,
    y: Vec<Vector>,
    m: Vec<Vector>,
    monotone: bool,
}

impl Hermite {
    /// # Panics
    /// If the lengths differ, fewer than two nodes are given, or `x` is not
    /// strictly increasing.
    pub fn new(x: Vec<f64>, y: Vec<Vector>, m: Vec<Vector>, monotone: bool) -> Self {
        assert!(x.len() >= 2 && x.len() == y.len() && x.len() == m.len());
        assert!(x.windows(2).all(|w| w[1] > w[0]), "nodes must be strictly increasing");
        Self { x, y, m, monotone }
    }

    pub fn scalar(x: Vec<f64>, y: Vec<f64>, m: Vec<f64>, monotone: bool) -> Self {
        let wrap = |v: Vec<f64>| v.into_iter().map(|s| Vector::from_element(1, s)).collect();
        Self::new(x, wrap(y), wrap(m), monotone)
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.x[0], *self.x.last().expect("nonempty"))
    }

    pub fn nodes(&self) -> &[f64] {
        &self.x
    }

    pub fn values(&self) -> &[Vector] {
        &self.y
    }

    fn interval(&self, t: f64) -> usize {
        let k = self.x.partition_point(|&xk| xk <= t);
        k.saturating_sub(1).min(self.x.len() - 2)
    }

    fn limited(&self, k: usize, c: usize, h: f64) -> (f64, f64) {
        let (mut m0, mut m1) = (self.m[k][c], self.m[k + 1][c]);
        if self.monotone {
            let delta = (self.y[k + 1][c] - self.y[k][c]) / h;
            if delta == 0.0 {
                return (0.0, 0.0);
            }
            let (mut a, mut b) = (m0 / delta, m1 / delta);
            if !a.is_finite() || a < 0.0 {
                a = 0.0;
            }
            if !b.is_finite() || b < 0.0 {
                b = 0.0;
            }
            let r = a * a + b * b;
            if r > 9.0 {
                let tau = 3.0 / r.sqrt();
                a *= tau;
                b *= tau;
            }
            m0 = a * delta;
            m1 = b * delta;
        }
        (m0, m1)
    }

    /// Value at `t`; clamped to the end values outside the node range.
    pub fn eval(&self, t: f64) -> Vector {
        let (lo, hi) = self.domain();
        if t <= lo {
            return self.y[0].clone();
        }
        if t >= hi {
            return self.y[self.y.len() - 1].clone();
        }
        let k = self.interval(t);
        let h = self.x[k + 1] - self.x[k];
        let s = (t - self.x[k]) / h;
        let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
        let h10 = s * (1.0 - s) * (1.0 - s);
        let h01 = s * s * (3.0 - 2.0 * s);
        let h11 = s * s * (s - 1.0);
        Vector::from_fn(self.y[k].len(), |c, _| {
            let (m0, m1) = self.limited(k, c, h);
            h00 * self.y[k][c] + h10 * h * m0 + h01 * self.y[k + 1][c] + h11 * h * m1
        })
    }

    pub fn eval_scalar(&self, t: f64) -> f64 {
        self.eval(t)[0]
    }
}

const GL5_NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683_1,
    0.0,
    0.538_469_310_105_683_1,
    0.906_179_845_938_664,
];
const GL5_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189_1,
    0.478_628_670_499_366_5,
    128.0 / 225.0,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
];

/// Five-point Gauss–Legendre rule on `[a, b]` (exact for degree ≤ 9).
pub fn gauss_legendre<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64) -> f64 {
    let c = 0.5 * (a + b);
    let r = 0.5 * (b - a);
    GL5_NODES.iter().zip(GL5_WEIGHTS.iter()).map(|(x, w)| w * f(c + r * x)).sum::<f64>() * r
}

/// Adaptive bisection of the five-point rule until two levels agree to `tol`.
pub fn adaptive_quad<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64, tol: f64, depth: usize) -> f64 {
    let whole = gauss_legendre(&mut *f, a, b);
    let m = 0.5 * (a + b);
    let left = gauss_legendre(&mut *f, a, m);
    let right = gauss_legendre(&mut *f, m, b);
    let split = left + right;
    if depth == 0 || (split - whole).abs() <= tol {
        split
    } else {
        adaptive_quad(f, a, m, 0.5 * tol, depth - 1) + adaptive_quad(f, m, b, 0.5 * tol, depth - 1)
    }
}

/// Cumulative integral of `f` at the nodes of `grid`, starting from zero.
pub fn cumulative<F: FnMut(f64) -> f64>(mut f: F, grid: &[f64], tol: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(grid.len());
    let mut acc = 0.0;
    out.push(0.0);
    for w in grid.windows(2) {
        acc += adaptive_quad(&mut f, w[0], w[1], tol, 20);
        out.push(acc);
    }
    out
}

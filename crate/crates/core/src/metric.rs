//! Kinetic metric evaluation, reduced blocks `A`, `E`, `K` and the Legendre
//! maps between velocities and momenta.
//!
//! Coordinates on the configuration space are split as `(q, u)` with
//! `q ∈ ℝᴺ` evolving dynamically and `u ∈ ℝᴹ` assigned by the controller.
//! The kinetic energy is `½ (v, w)ᵀ G(q, u) (v, w)`, and `G` is partitioned
//! into the blocks `G1` (N×N), `G12` (N×M), `G2` (M×M).
//!
//! Metric callbacks must be re-entrant; every evaluation here is a pure
//! function of its inputs.

use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{asymmetry, fd_step, spd_inverse};
use crate::{Matrix, Vector};

pub type MetricFn = Arc<dyn Fn(&Vector, &Vector) -> Result<Matrix> + Send + Sync>;
pub type MetricPartialsFn = Arc<dyn Fn(&Vector, &Vector) -> Result<MetricPartials> + Send + Sync>;

/// Relative symmetry tolerance enforced on every metric evaluation.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Partial derivatives of the full metric `G` with respect to each coordinate.
#[derive(Debug, Clone)]
pub struct MetricPartials {
    /// `∂G/∂qⁱ`, one matrix per reduced coordinate.
    pub dq: Vec<Matrix>,
    /// `∂G/∂uᵅ`, one matrix per control coordinate.
    pub du: Vec<Matrix>,
}

/// A mechanical system's inertia: the kinetic metric as a function of `(q, u)`.
#[derive(Clone)]
pub struct MetricModel {
    dim_q: usize,
    dim_u: usize,
    metric: MetricFn,
    partials: Option<MetricPartialsFn>,
    derivative_step: f64,
}

impl core::fmt::Debug for MetricModel {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("MetricModel")
            .field("dim_q", &self.dim_q)
            .field("dim_u", &self.dim_u)
            .field("analytic_partials", &self.partials.is_some())
            .field("derivative_step", &self.derivative_step)
            .finish()
    }
}

impl MetricModel {
    pub fn new<F>(dim_q: usize, dim_u: usize, metric: F) -> Self
    where
        F: Fn(&Vector, &Vector) -> Result<Matrix> + Send + Sync + 'static,
    {
        assert!(dim_q > 0 && dim_u > 0, "dimensions must be positive");
        Self {
            dim_q,
            dim_u,
            metric: Arc::new(metric),
            partials: None,
            derivative_step: 1e-6,
        }
    }

    /// Supplies analytic `∂G/∂q`, `∂G/∂u`, overriding finite differences.
    pub fn with_partials<F>(mut self, partials: F) -> Self
    where
        F: Fn(&Vector, &Vector) -> Result<MetricPartials> + Send + Sync + 'static,
    {
        self.partials = Some(Arc::new(partials));
        self
    }

    pub fn with_derivative_step(mut self, step: f64) -> Self {
        assert!(step > 0.0, "derivative step must be positive");
        self.derivative_step = step;
        self
    }

    /// Drops analytic partials so every derivative comes from finite differences.
    pub fn without_partials(mut self) -> Self {
        self.partials = None;
        self
    }

    pub fn dim_q(&self) -> usize {
        self.dim_q
    }

    pub fn dim_u(&self) -> usize {
        self.dim_u
    }

    pub fn dim(&self) -> usize {
        self.dim_q + self.dim_u
    }

    pub fn derivative_step(&self) -> f64 {
        self.derivative_step
    }

    pub fn has_analytic_partials(&self) -> bool {
        self.partials.is_some()
    }

    pub(crate) fn check_point(&self, q: &Vector, u: &Vector) -> Result<()> {
        if q.len() != self.dim_q || u.len() != self.dim_u {
            return Err(Error::DimensionError(alloc::format!(
                "expected q ∈ ℝ^{}, u ∈ ℝ^{}, got {} and {}",
                self.dim_q,
                self.dim_u,
                q.len(),
                u.len()
            )));
        }
        if q.iter().chain(u.iter()).any(|x| !x.is_finite()) {
            return Err(Error::DomainError("non-finite coordinate".into()));
        }
        Ok(())
    }

    /// Raw callback evaluation with dimension and symmetry checks (no
    /// definiteness check).
    fn eval_raw(&self, q: &Vector, u: &Vector) -> Result<Matrix> {
        self.check_point(q, u)?;
        let g = (self.metric)(q, u)?;
        let n = self.dim();
        if g.nrows() != n || g.ncols() != n {
            return Err(Error::DimensionError(alloc::format!(
                "metric callback returned {}×{}, expected {n}×{n}",
                g.nrows(),
                g.ncols()
            )));
        }
        if asymmetry(&g) > SYMMETRY_TOL {
            return Err(Error::InvalidInput(alloc::format!(
                "metric is not symmetric (relative asymmetry {:e})",
                asymmetry(&g)
            )));
        }
        Ok(g)
    }

    /// `G(q, u)`, checked for symmetry and positive definiteness.
    pub fn metric_at(&self, q: &Vector, u: &Vector) -> Result<Matrix> {
        let g = self.eval_raw(q, u)?;
        // definiteness and conditioning are checked by the inversion
        spd_inverse(&g, "G")?;
        Ok(g)
    }

    /// `G(q, u)` together with its inverse.
    pub fn metric_and_inverse(&self, q: &Vector, u: &Vector) -> Result<(Matrix, Matrix)> {
        let g = self.eval_raw(q, u)?;
        let gi = spd_inverse(&g, "G")?;
        Ok((g, gi))
    }

    /// Metric partials: analytic when supplied, otherwise central differences
    /// with step `derivative_step · max(1, |x|)`.
    pub fn metric_partials(&self, q: &Vector, u: &Vector) -> Result<MetricPartials> {
        match &self.partials {
            Some(p) => {
                self.check_point(q, u)?;
                let out = p(q, u)?;
                if out.dq.len() != self.dim_q || out.du.len() != self.dim_u {
                    return Err(Error::DimensionError(
                        "metric partials callback returned the wrong number of matrices".into(),
                    ));
                }
                Ok(out)
            }
            None => self.fd_metric_partials(q, u),
        }
    }

    /// Finite-difference metric partials regardless of analytic callbacks.
    pub fn fd_metric_partials(&self, q: &Vector, u: &Vector) -> Result<MetricPartials> {
        let mut dq = Vec::with_capacity(self.dim_q);
        for i in 0..self.dim_q {
            let h = fd_step(self.derivative_step, q[i]);
            let mut qp = q.clone();
            let mut qm = q.clone();
            qp[i] += h;
            qm[i] -= h;
            dq.push((self.eval_raw(&qp, u)? - self.eval_raw(&qm, u)?) / (2.0 * h));
        }
        let mut du = Vec::with_capacity(self.dim_u);
        for a in 0..self.dim_u {
            let h = fd_step(self.derivative_step, u[a]);
            let mut up = u.clone();
            let mut um = u.clone();
            up[a] += h;
            um[a] -= h;
            du.push((self.eval_raw(q, &up)? - self.eval_raw(q, &um)?) / (2.0 * h));
        }
        Ok(MetricPartials { dq, du })
    }
}

/// Coefficients of the reduced control equations at a point.
#[derive(Debug, Clone)]
pub struct ReducedBlocks {
    pub g1: Matrix,
    pub g2: Matrix,
    pub g12: Matrix,
    /// `A = G1⁻¹`
    pub a: Matrix,
    /// `E = ((G⁻¹)₂)⁻¹`
    pub e: Matrix,
    /// `K = (G⁻¹)₁₂ E`
    pub k: Matrix,
    /// Full inverse metric.
    pub g_inv: Matrix,
    pub da_dq: Vec<Matrix>,
    pub de_dq: Vec<Matrix>,
    pub dk_dq: Vec<Matrix>,
    pub da_du: Vec<Matrix>,
    pub de_du: Vec<Matrix>,
    pub dk_du: Vec<Matrix>,
}

impl ReducedBlocks {
    pub fn dim_q(&self) -> usize {
        self.a.nrows()
    }

    pub fn dim_u(&self) -> usize {
        self.e.nrows()
    }
}

struct BlockCore {
    g1: Matrix,
    g2: Matrix,
    g12: Matrix,
    a: Matrix,
    e: Matrix,
    k: Matrix,
    g_inv: Matrix,
}

fn block_core(g: &Matrix, g_inv: &Matrix, n: usize, m: usize) -> Result<BlockCore> {
    let g1 = g.view((0, 0), (n, n)).into_owned();
    let g2 = g.view((n, n), (m, m)).into_owned();
    let g12 = g.view((0, n), (n, m)).into_owned();
    let a = spd_inverse(&g1, "G1")?;
    let gi2 = g_inv.view((n, n), (m, m)).into_owned();
    let e = spd_inverse(&gi2, "(G⁻¹)₂")?;
    let k = g_inv.view((0, n), (n, m)) * &e;
    Ok(BlockCore {
        g1,
        g2,
        g12,
        a,
        e,
        k,
        g_inv: g_inv.clone(),
    })
}

/// Partials of `(A, E, K)` along one coordinate direction, from `∂G`.
fn block_partials(c: &BlockCore, dg: &Matrix, n: usize, m: usize) -> (Matrix, Matrix, Matrix) {
    let dg1 = dg.view((0, 0), (n, n));
    let da = -(&c.a * dg1 * &c.a);
    let dgi = -(&c.g_inv * dg * &c.g_inv);
    let dgi2 = dgi.view((n, n), (m, m));
    let de = -(&c.e * dgi2 * &c.e);
    let dk = dgi.view((0, n), (n, m)) * &c.e + c.g_inv.view((0, n), (n, m)) * &de;
    // A and E are symmetric; drop the rounding asymmetry from the products
    ((&da + da.transpose()) * 0.5, (&de + de.transpose()) * 0.5, dk)
}

/// Evaluates `A`, `E`, `K` and their partials at `(q, u)`.
pub fn reduced_blocks(model: &MetricModel, q: &Vector, u: &Vector) -> Result<ReducedBlocks> {
    let n = model.dim_q();
    let m = model.dim_u();
    let (g, g_inv) = model.metric_and_inverse(q, u)?;
    let c = block_core(&g, &g_inv, n, m)?;
    let parts = model.metric_partials(q, u)?;

    let mut da_dq = Vec::with_capacity(n);
    let mut de_dq = Vec::with_capacity(n);
    let mut dk_dq = Vec::with_capacity(n);
    for dg in &parts.dq {
        let (da, de, dk) = block_partials(&c, dg, n, m);
        da_dq.push(da);
        de_dq.push(de);
        dk_dq.push(dk);
    }
    let mut da_du = Vec::with_capacity(m);
    let mut de_du = Vec::with_capacity(m);
    let mut dk_du = Vec::with_capacity(m);
    for dg in &parts.du {
        let (da, de, dk) = block_partials(&c, dg, n, m);
        da_du.push(da);
        de_du.push(de);
        dk_du.push(dk);
    }
    Ok(ReducedBlocks {
        g1: c.g1,
        g2: c.g2,
        g12: c.g12,
        a: c.a,
        e: c.e,
        k: c.k,
        g_inv: c.g_inv,
        da_dq,
        de_dq,
        dk_dq,
        da_du,
        de_du,
        dk_du,
    })
}

/// `E(q, u)` alone, without partials.
pub fn e_matrix(model: &MetricModel, q: &Vector, u: &Vector) -> Result<Matrix> {
    let (g, g_inv) = model.metric_and_inverse(q, u)?;
    Ok(block_core(&g, &g_inv, model.dim_q(), model.dim_u())?.e)
}

fn split(model: &MetricModel, x: &Vector) -> (Vector, Vector) {
    let n = model.dim_q();
    (x.rows(0, n).into_owned(), x.rows(n, model.dim_u()).into_owned())
}

fn stack(a: &Vector, b: &Vector) -> Vector {
    let mut out = Vector::zeros(a.len() + b.len());
    out.rows_mut(0, a.len()).copy_from(a);
    out.rows_mut(a.len(), b.len()).copy_from(b);
    out
}

/// `(p, ℘)ᵀ = G(q, u) (v, w)ᵀ`.
pub fn momentum_from_velocity(model: &MetricModel, q: &Vector, u: &Vector, v: &Vector, w: &Vector) -> Result<(Vector, Vector)> {
    if v.len() != model.dim_q() || w.len() != model.dim_u() {
        return Err(Error::DimensionError("velocity dimensions".into()));
    }
    let g = model.metric_at(q, u)?;
    Ok(split(model, &(g * stack(v, w))))
}

/// `(v, w)ᵀ = G(q, u)⁻¹ (p, ℘)ᵀ`.
pub fn velocity_from_momentum(model: &MetricModel, q: &Vector, u: &Vector, p: &Vector, wp: &Vector) -> Result<(Vector, Vector)> {
    if p.len() != model.dim_q() || wp.len() != model.dim_u() {
        return Err(Error::DimensionError("momentum dimensions".into()));
    }
    let (_, gi) = model.metric_and_inverse(q, u)?;
    Ok(split(model, &(gi * stack(p, wp))))
}

/// Control momentum `℘ = E w − Kᵀ p` realizing control velocity `w` at reduced momentum `p`.
pub fn wp_from_w(model: &MetricModel, q: &Vector, u: &Vector, p: &Vector, w: &Vector) -> Result<Vector> {
    if p.len() != model.dim_q() || w.len() != model.dim_u() {
        return Err(Error::DimensionError("momentum dimensions".into()));
    }
    let (g, g_inv) = model.metric_and_inverse(q, u)?;
    let c = block_core(&g, &g_inv, model.dim_q(), model.dim_u())?;
    Ok(&c.e * w - c.k.transpose() * p)
}

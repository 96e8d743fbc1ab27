//! Geometry of the foliation by leaves `Q × {u}`: the orthogonal curvature
//! tensor `∂e_{αβ}/∂qⁱ`, the N-fit classification, metric geodesics, and
//! the two-geodesic construction whose leaf displacement recovers the
//! curvature in the limit of short arcs.

use alloc::vec::Vec;
#[allow(unused_imports)] // inherent float methods are missing without std
use num_traits::Float;

use crate::error::{Error, Result};
use crate::metric::{e_matrix, reduced_blocks, MetricModel};
use crate::ode::{rk4_on_grid, uniform_grid};
use crate::sampling::SampleBox;
use crate::{Matrix, Vector};

/// `∂e_{αβ}/∂qⁱ` at a point; one symmetric M×M matrix per reduced coordinate.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CurvatureTensor {
    pub q: Vector,
    pub u: Vector,
    pub components: Vec<Matrix>,
}

impl CurvatureTensor {
    /// `½ Σ_{αβ} ∂e_{αβ}/∂qⁱ wᵅ wᵝ` for each `i`.
    pub fn half_quadratic(&self, w: &Vector) -> Vector {
        Vector::from_iterator(self.components.len(), self.components.iter().map(|c| 0.5 * w.dot(&(c * w))))
    }

    pub fn max_abs(&self) -> f64 {
        self.components.iter().map(|c| c.amax()).fold(0.0, f64::max)
    }
}

pub fn curvature_tensor(model: &MetricModel, q: &Vector, u: &Vector) -> Result<CurvatureTensor> {
    let b = reduced_blocks(model, q, u)?;
    Ok(CurvatureTensor {
        q: q.clone(),
        u: u.clone(),
        components: b.de_dq,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Fitness {
    Generic,
    NFit,
    StronglyNFit,
}

impl Fitness {
    pub fn label(self) -> &'static str {
        match self {
            Fitness::Generic => "generic",
            Fitness::NFit => "N-fit",
            Fitness::StronglyNFit => "strongly N-fit",
        }
    }
}

/// Sampled evidence for the N-fit classification.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FitnessVerdict {
    pub classification: Fitness,
    /// Largest sampled `|∂e_{αβ}/∂qⁱ|` (orthogonal curvature).
    pub max_violation: f64,
    /// Largest sampled `|∂g^{N+α,N+β}/∂qⁱ|` (inverse-metric control block).
    pub max_inverse_block_drift: f64,
    /// Largest sampled `|g^{i,N+α}|` (inverse-metric coupling block).
    pub max_coupling: f64,
    pub samples: usize,
    pub tol: f64,
}

/// Classifies the metric over `bounds` (q-ranges followed by u-ranges) by
/// quasi-random sampling. A sampled test: it can refute but not prove fitness.
pub fn classify_fitness(model: &MetricModel, bounds: &SampleBox, n_samples: usize, tol: f64) -> Result<FitnessVerdict> {
    let n = model.dim_q();
    let m = model.dim_u();
    if bounds.dim() != n + m {
        return Err(Error::DimensionError(alloc::format!(
            "sampling box has {} ranges, expected {}",
            bounds.dim(),
            n + m
        )));
    }
    let mut curv: f64 = 0.0;
    let mut drift: f64 = 0.0;
    let mut coupling: f64 = 0.0;
    for x in bounds.points(n_samples) {
        let q = x.rows(0, n).into_owned();
        let u = x.rows(n, m).into_owned();
        let (_, gi) = model.metric_and_inverse(&q, &u)?;
        let parts = model.metric_partials(&q, &u)?;
        for dg in &parts.dq {
            let dgi = -(&gi * dg * &gi);
            drift = drift.max(dgi.view((n, n), (m, m)).amax());
        }
        coupling = coupling.max(gi.view((0, n), (n, m)).amax());
        curv = curv.max(curvature_tensor(model, &q, &u)?.max_abs());
    }
    let classification = if drift <= tol {
        if coupling <= tol {
            Fitness::StronglyNFit
        } else {
            Fitness::NFit
        }
    } else {
        Fitness::Generic
    };
    Ok(FitnessVerdict {
        classification,
        max_violation: curv,
        max_inverse_block_drift: drift,
        max_coupling: coupling,
        samples: n_samples,
        tol,
    })
}

/// A geodesic sampled on a parameter grid, in canonical coordinates
/// `(q, u, p, π)` with `(p, π) = G (q̇, u̇)`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GeodesicArc {
    pub s: Vec<f64>,
    pub q: Vec<Vector>,
    pub u: Vec<Vector>,
    pub p: Vec<Vector>,
    pub pi: Vec<Vector>,
    /// `½ (p, π)ᵀ G⁻¹ (p, π)` at each node.
    pub hamiltonian: Vec<f64>,
}

impl GeodesicArc {
    pub fn end_q(&self) -> &Vector {
        self.q.last().expect("arc has nodes")
    }

    pub fn end_u(&self) -> &Vector {
        self.u.last().expect("arc has nodes")
    }

    /// Largest deviation of the Hamiltonian from its initial value.
    pub fn hamiltonian_drift(&self) -> f64 {
        let h0 = self.hamiltonian.first().copied().unwrap_or(0.0);
        self.hamiltonian.iter().map(|h| (h - h0).abs()).fold(0.0, f64::max)
    }
}

fn split4(y: &Vector, n: usize, m: usize) -> (Vector, Vector, Vector, Vector) {
    (
        y.rows(0, n).into_owned(),
        y.rows(n, m).into_owned(),
        y.rows(n + m, n).into_owned(),
        y.rows(2 * n + m, m).into_owned(),
    )
}

/// Hamiltonian geodesic field: `ẋ = G⁻¹P`, `Ṗ_k = ½ ẋᵀ (∂G/∂x_k) ẋ`.
fn geodesic_field(model: &MetricModel, y: &Vector) -> Result<Vector> {
    let n = model.dim_q();
    let m = model.dim_u();
    let d = n + m;
    let (q, u, _, _) = split4(y, n, m);
    let (_, gi) = model.metric_and_inverse(&q, &u)?;
    let parts = model.metric_partials(&q, &u)?;
    let mom = y.rows(d, d).into_owned();
    let vel = &gi * mom;
    let mut out = Vector::zeros(2 * d);
    out.rows_mut(0, d).copy_from(&vel);
    for (k, dg) in parts.dq.iter().chain(parts.du.iter()).enumerate() {
        out[d + k] = 0.5 * vel.dot(&(dg * &vel));
    }
    Ok(out)
}

fn hamiltonian_at(model: &MetricModel, y: &Vector) -> Result<f64> {
    let n = model.dim_q();
    let m = model.dim_u();
    let (q, u, _, _) = split4(y, n, m);
    let (_, gi) = model.metric_and_inverse(&q, &u)?;
    let mom = y.rows(n + m, n + m).into_owned();
    Ok(0.5 * mom.dot(&(&gi * &mom)))
}

fn arc_from_states(model: &MetricModel, grid: Vec<f64>, ys: Vec<Vector>) -> Result<GeodesicArc> {
    let n = model.dim_q();
    let m = model.dim_u();
    let mut arc = GeodesicArc {
        s: grid,
        q: Vec::with_capacity(ys.len()),
        u: Vec::with_capacity(ys.len()),
        p: Vec::with_capacity(ys.len()),
        pi: Vec::with_capacity(ys.len()),
        hamiltonian: Vec::with_capacity(ys.len()),
    };
    for y in ys {
        arc.hamiltonian.push(hamiltonian_at(model, &y)?);
        let (q, u, p, pi) = split4(&y, n, m);
        arc.q.push(q);
        arc.u.push(u);
        arc.p.push(p);
        arc.pi.push(pi);
    }
    Ok(arc)
}

fn integrate_canonical(model: &MetricModel, y0: &Vector, length: f64, step: f64) -> Result<GeodesicArc> {
    if !(length > 0.0) || !(step > 0.0) {
        return Err(Error::InvalidInput("geodesic length and step must be positive".into()));
    }
    let grid = uniform_grid(0.0, length, step);
    let ys = rk4_on_grid(|_, y| geodesic_field(model, y), &grid, y0)?;
    arc_from_states(model, grid, ys)
}

/// Geodesic from `(q, u)` with initial velocity `(v, w)`, integrated by RK4 over
/// the parameter interval `[0, length]`.
pub fn geodesic_ivp(model: &MetricModel, q: &Vector, u: &Vector, v: &Vector, w: &Vector, length: f64, step: f64) -> Result<GeodesicArc> {
    let n = model.dim_q();
    let m = model.dim_u();
    if v.len() != n || w.len() != m {
        return Err(Error::DimensionError("geodesic velocity".into()));
    }
    if v.amax() == 0.0 && w.amax() == 0.0 {
        return Err(Error::InvalidInput("geodesic needs a nonzero velocity".into()));
    }
    let g = model.metric_at(q, u)?;
    let mut vel = Vector::zeros(n + m);
    vel.rows_mut(0, n).copy_from(v);
    vel.rows_mut(n, m).copy_from(w);
    let mom = g * vel;
    let mut y0 = Vector::zeros(2 * (n + m));
    y0.rows_mut(0, n).copy_from(q);
    y0.rows_mut(n, m).copy_from(u);
    y0.rows_mut(n + m, n + m).copy_from(&mom);
    integrate_canonical(model, &y0, length, step)
}

/// A g-orthonormal basis of the orthogonal complement of the leaf tangent
/// space at `(q, u)`, as M vectors in `ℝ^{N+M}`.
pub fn orthogonal_complement_basis(model: &MetricModel, q: &Vector, u: &Vector) -> Result<Vec<Vector>> {
    let n = model.dim_q();
    let m = model.dim_u();
    let b = reduced_blocks(model, q, u)?;
    let g = model.metric_at(q, u)?;
    let mut basis: Vec<Vector> = Vec::with_capacity(m);
    for a in 0..m {
        // G1 v + G12 eₐ = 0  ⇒  v = K eₐ
        let mut y = Vector::zeros(n + m);
        y.rows_mut(0, n).copy_from(&b.k.column(a));
        y[n + a] = 1.0;
        for prev in &basis {
            let c = prev.dot(&(&g * &y));
            y -= prev * c;
        }
        let nrm = y.dot(&(&g * &y)).sqrt();
        basis.push(y / nrm);
    }
    Ok(basis)
}

/// Settings for the two-point shooting solve in [`leaf_return_displacement`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShootingOptions {
    pub steps: usize,
    pub max_iterations: usize,
    pub max_halvings: usize,
    /// Residual that must be reached for success.
    pub accept_residual: f64,
}

impl Default for ShootingOptions {
    fn default() -> Self {
        Self {
            steps: 200,
            max_iterations: 50,
            max_halvings: 10,
            accept_residual: 1e-10,
        }
    }
}

fn shoot_end_u(model: &MetricModel, q0: &Vector, u0: &Vector, pi0: &Vector, steps: usize) -> Result<(Vector, Vector)> {
    let n = model.dim_q();
    let m = model.dim_u();
    let mut y0 = Vector::zeros(2 * (n + m));
    y0.rows_mut(0, n).copy_from(q0);
    y0.rows_mut(n, m).copy_from(u0);
    y0.rows_mut(2 * n + m, m).copy_from(pi0);
    let h = 1.0 / steps as f64;
    let grid: Vec<f64> = (0..=steps).map(|k| k as f64 * h).collect();
    let ys = rk4_on_grid(|_, y| geodesic_field(model, y), &grid, &y0)?;
    let end = ys.last().expect("grid has nodes");
    let (q, u, _, _) = split4(end, n, m);
    Ok((q, u))
}

/// Leaf displacement `q̂(s) − q` of the two-geodesic construction.
///
/// Leaves `(q, u)` along `s·V`, `V = Σ wₐ Jₐ` in the orthogonal complement,
/// then returns to the leaf `Q × {u}` along the geodesic that starts
/// perpendicular to the leaf through the landing point (`p(0) = 0`), found by
/// Newton shooting on `π(0)`.
pub fn leaf_return_displacement(model: &MetricModel, q: &Vector, u: &Vector, w: &Vector, s: f64, opts: &ShootingOptions) -> Result<Vector> {
    let n = model.dim_q();
    let m = model.dim_u();
    if w.len() != m {
        return Err(Error::DimensionError("direction must live in ℝᴹ".into()));
    }
    if s == 0.0 || w.amax() == 0.0 {
        return Ok(Vector::zeros(n));
    }
    let basis = orthogonal_complement_basis(model, q, u)?;
    let mut dir = Vector::zeros(n + m);
    for (a, j) in basis.iter().enumerate() {
        dir += j * w[a];
    }
    dir *= s;
    let first = geodesic_ivp(
        model,
        q,
        u,
        &dir.rows(0, n).into_owned(),
        &dir.rows(n, m).into_owned(),
        1.0,
        1.0 / opts.steps as f64,
    )?;
    let qs = first.end_q().clone();
    let us = first.end_u().clone();

    let e_s = e_matrix(model, &qs, &us)?;
    let mut pi = &e_s * (u - &us);
    let residual = |pi: &Vector| -> Result<(Vector, Vector)> {
        let (qe, ue) = shoot_end_u(model, &qs, &us, pi, opts.steps)?;
        Ok((qe, ue - u))
    };
    let (mut q_end, mut r) = residual(&pi)?;
    let mut rn = r.amax();
    let target = (1e-14f64).max(1e-13 * s.abs());
    let mut iterations = 0;
    while rn > target && iterations < opts.max_iterations {
        iterations += 1;
        // forward-difference Jacobian of the end control w.r.t. π(0)
        let scale = pi.amax().max(s.abs() * 1e-3).max(1e-12);
        let h = 1e-7 * scale;
        let mut jac = Matrix::zeros(m, m);
        for a in 0..m {
            let mut pp = pi.clone();
            pp[a] += h;
            let (_, rp) = residual(&pp)?;
            jac.set_column(a, &((rp - &r) / h));
        }
        let delta = jac
            .clone()
            .lu()
            .solve(&r)
            .ok_or(Error::ShootingDiverged { iterations, residual: rn })?;
        let mut lambda = 1.0;
        let mut improved = false;
        for _ in 0..=opts.max_halvings {
            let trial = &pi - &delta * lambda;
            if let Ok((qt, rt)) = residual(&trial) {
                let rtn = rt.amax();
                if rtn < rn {
                    pi = trial;
                    q_end = qt;
                    r = rt;
                    rn = rtn;
                    improved = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !improved {
            break;
        }
    }
    if rn > opts.accept_residual {
        return Err(Error::ShootingDiverged { iterations, residual: rn });
    }
    Ok(q_end - q)
}

/// `0.1 · 2^{-k}` down to `1e-3`.
pub fn default_s_sequence() -> Vec<f64> {
    let mut out = Vec::new();
    let mut s = 0.1;
    while s >= 1e-3 {
        out.push(s);
        s *= 0.5;
    }
    out
}

/// Result of [`curvature_from_geodesics`].
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CurvatureLimit {
    /// Richardson-extrapolated `lim q̂(s)/s²`.
    pub limit: Vector,
    /// `(s, q̂(s)/s²)` for every `s` of the sequence.
    pub ratios: Vec<(f64, Vector)>,
}

/// Recovers `½ Σ ∂e_{αβ}/∂qⁱ wᵅwᵝ` from geodesic displacements.
///
/// The base point must have `G = I` there (to 1e-8), so that `w` is read in an
/// orthonormal frame.
pub fn curvature_from_geodesics(model: &MetricModel, q: &Vector, u: &Vector, w: &Vector, s_sequence: &[f64]) -> Result<CurvatureLimit> {
    let g = model.metric_at(q, u)?;
    let deviation = (g - Matrix::identity(model.dim(), model.dim())).amax();
    if deviation > 1e-8 {
        return Err(Error::ChartNotOrthonormal { deviation });
    }
    if s_sequence.len() < 2 {
        return Err(Error::InvalidInput("need at least two values of s".into()));
    }
    let opts = ShootingOptions::default();
    let mut ratios = Vec::with_capacity(s_sequence.len());
    for &s in s_sequence {
        let d = leaf_return_displacement(model, q, u, w, s, &opts)?;
        ratios.push((s, d / (s * s)));
    }
    // one Richardson step on the two smallest s, assuming an O(s) remainder
    let (s_a, r_a) = &ratios[ratios.len() - 2];
    let (s_b, r_b) = &ratios[ratios.len() - 1];
    let limit = (r_b * *s_a - r_a * *s_b) / (s_a - s_b);
    Ok(CurvatureLimit { limit, ratios })
}

/// Fitness test boxes and bounds helpers.
pub fn box_from_ranges(q: &[(f64, f64)], u: &[(f64, f64)]) -> SampleBox {
    SampleBox::new(q.iter().chain(u.iter()).copied().collect())
}

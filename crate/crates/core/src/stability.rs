//! Stabilizability tests: weak-Lyapunov verification with a positive time
//! component, Kalman rank of selection linearizations, the rank/equilibrium
//! test for vibration tuples, and the effective-potential minimum test.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)] // inherent float methods are missing without std
use num_traits::Float;

use crate::dynamics::{ForceModel, Potential};
use crate::error::{Error, Result};
use crate::linalg::{controllability_matrix, fd_jacobian, fd_step, lstsq, min_eigenvalue, numerical_rank, sym_eigenvalues};
use crate::metric::{reduced_blocks, MetricModel};
use crate::reparam::{cone_violation, Coefficients, QuadraticControlSystem};
use crate::sampling::{halton, sphere_points};
use crate::{Matrix, Vector};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn passed(self) -> bool {
        self == Verdict::Pass
    }
}

type ScalarFn = Arc<dyn Fn(&Vector) -> f64 + Send + Sync>;
type GradientFn = Arc<dyn Fn(&Vector) -> Vector + Send + Sync>;

/// A candidate weak Lyapunov function around `center`, probed inside a ball
/// of radius `radius`.
#[derive(Clone)]
pub struct LyapunovCandidate {
    value: ScalarFn,
    gradient: Option<GradientFn>,
    center: Vector,
    radius: f64,
}

impl core::fmt::Debug for LyapunovCandidate {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("LyapunovCandidate")
            .field("center", &self.center)
            .field("radius", &self.radius)
            .field("analytic_gradient", &self.gradient.is_some())
            .finish()
    }
}

/// What [`LyapunovCandidate::check_structure`] observed.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureReport {
    pub value_at_center: f64,
    pub min_interior: f64,
    pub min_boundary: f64,
    pub max_gradient: f64,
    pub samples: usize,
}

impl LyapunovCandidate {
    pub fn new<V>(center: Vector, radius: f64, value: V) -> Self
    where
        V: Fn(&Vector) -> f64 + Send + Sync + 'static,
    {
        assert!(radius > 0.0, "radius must be positive");
        Self {
            value: Arc::new(value),
            gradient: None,
            center,
            radius,
        }
    }

    pub fn with_gradient<G>(mut self, gradient: G) -> Self
    where
        G: Fn(&Vector) -> Vector + Send + Sync + 'static,
    {
        self.gradient = Some(Arc::new(gradient));
        self
    }

    pub fn center(&self) -> &Vector {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn value(&self, x: &Vector) -> f64 {
        (self.value)(x)
    }

    /// Analytic gradient, or central differences with relative step 1e-6.
    pub fn gradient(&self, x: &Vector) -> Vector {
        if let Some(g) = &self.gradient {
            return g(x);
        }
        Vector::from_fn(x.len(), |i, _| {
            let h = fd_step(1e-6, x[i]);
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[i] += h;
            xm[i] -= h;
            (self.value(&xp) - self.value(&xm)) / (2.0 * h)
        })
    }

    /// Checks `V(x̄) = 0`, `V > 0` on a punctured neighbourhood, a positive
    /// minimum on the boundary sphere (bounded sublevel sets), continuity at
    /// `x̄`, and that `∇V` is not identically zero.
    pub fn check_structure(&self, n_samples: usize) -> Result<StructureReport> {
        let n = self.center.len();
        let dirs = sphere_points(n_samples.max(2 * n), n);
        let v0 = self.value(&self.center);
        let mut min_interior = f64::INFINITY;
        let mut min_boundary = f64::INFINITY;
        let mut max_gradient: f64 = 0.0;
        for (k, d) in dirs.iter().enumerate() {
            let frac = 0.05 + 0.9 * ((k as f64 + 1.0) * 0.618_033_988_749_895).fract();
            let x = &self.center + d * (frac * self.radius);
            min_interior = min_interior.min(self.value(&x));
            max_gradient = max_gradient.max(self.gradient(&x).amax());
            min_boundary = min_boundary.min(self.value(&(&self.center + d * self.radius)));
        }
        let report = StructureReport {
            value_at_center: v0,
            min_interior,
            min_boundary,
            max_gradient,
            samples: dirs.len(),
        };
        let fail = |why: &str| Err(Error::InvalidInput(alloc::format!("Lyapunov candidate rejected: {why}")));
        if v0.abs() > 1e-12 {
            return fail("V does not vanish at the center");
        }
        if !(min_interior > 0.0) {
            return fail("V is not positive away from the center");
        }
        if !(min_boundary > 0.0) {
            return fail("V has no positive minimum on the boundary sphere");
        }
        let eps = 1e-6 * self.radius;
        for d in dirs.iter().take(2 * n) {
            if !(self.value(&(&self.center + d * eps)) < min_boundary) {
                return fail("V is discontinuous at the center");
            }
        }
        if max_gradient <= 1e-14 {
            return fail("the gradient vanishes identically");
        }
        Ok(report)
    }
}

/// Options for [`lyapunov_condition_iv_prime`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IvPrimeOptions {
    /// Smallest admissible time component `y₀`.
    pub kappa_min: f64,
    /// Relative tolerance on `∇V·y ≤ 0`, scaled by `|∇V|` and the coefficients.
    pub rel_tol: f64,
}

impl Default for IvPrimeOptions {
    fn default() -> Self {
        Self {
            kappa_min: 1e-3,
            rel_tol: 1e-10,
        }
    }
}

/// Outcome of a pointwise descent test over a sample set.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DescentVerdict {
    pub verdict: Verdict,
    /// Sample with the largest (worst) minimal `∇V·y`.
    pub worst_point: Vec<f64>,
    /// That minimal value.
    pub worst_value: f64,
    /// Tolerance that was applied at the worst point.
    pub worst_tolerance: f64,
    pub points_checked: usize,
}

/// `min {c·y : y ∈ co(generators), y₀ ≥ κ}` through its concave dual
/// `max_{μ ≥ 0} λ_min(Φ_c − μ e₀e₀ᵀ) + μκ`.
fn min_descent_with_time(coef: &Coefficients, c: &Vector, kappa: f64) -> f64 {
    let phi = coef.form(c);
    let dual = |mu: f64| {
        let mut m = phi.clone();
        m[(0, 0)] -= mu;
        min_eigenvalue(&m) + mu * kappa
    };
    let mut hi = 1.0 + phi.amax();
    while dual(2.0 * hi) > dual(hi) && hi < 1e12 {
        hi *= 2.0;
    }
    hi *= 2.0;
    let mut lo = 0.0;
    for _ in 0..200 {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if dual(m1) < dual(m2) {
            lo = m1;
        } else {
            hi = m2;
        }
        if hi - lo <= 1e-15 * hi.max(1.0) {
            break;
        }
    }
    dual(0.5 * (lo + hi)).max(dual(0.0))
}

fn descent_scale(coef: &Coefficients, grad: &Vector) -> f64 {
    let mut s = coef.f.amax();
    for g in &coef.g {
        s = s.max(g.amax());
    }
    for row in &coef.h {
        for h in row {
            s = s.max(h.amax());
        }
    }
    grad.norm() * s.max(1.0)
}

/// Condition (iv′): at each sample `x ≠ x̄` there must be a velocity `y` of
/// the convexified extended system with time component `y₀ ≥ κ_min` and
/// `∇V(x)·y ≤ 0`. Exact search through the dual of the eigenvalue problem.
pub fn lyapunov_condition_iv_prime(
    system: &QuadraticControlSystem,
    v: &LyapunovCandidate,
    samples: &[Vector],
    opts: &IvPrimeOptions,
) -> Result<DescentVerdict> {
    descent_test(
        system,
        v,
        samples,
        |coef, grad| min_descent_with_time(coef, grad, opts.kappa_min),
        opts.rel_tol,
    )
}

/// The naive test without a time component: `min ∇V·y ≤ 0` over all of
/// `co(generators)` (the smallest eigenvalue of `Φ_{∇V}`).
pub fn naive_descent_test(
    system: &QuadraticControlSystem,
    v: &LyapunovCandidate,
    samples: &[Vector],
    rel_tol: f64,
) -> Result<DescentVerdict> {
    descent_test(system, v, samples, |coef, grad| min_eigenvalue(&coef.form(grad)), rel_tol)
}

fn descent_test<F>(
    system: &QuadraticControlSystem,
    v: &LyapunovCandidate,
    samples: &[Vector],
    min_value: F,
    rel_tol: f64,
) -> Result<DescentVerdict>
where
    F: Fn(&Coefficients, &Vector) -> f64,
{
    let mut worst = DescentVerdict {
        verdict: Verdict::Pass,
        worst_point: Vec::new(),
        worst_value: f64::NEG_INFINITY,
        worst_tolerance: 0.0,
        points_checked: 0,
    };
    let mut any_fail = false;
    let mut any_marginal = false;
    for x in samples {
        if (x - v.center()).amax() == 0.0 {
            continue;
        }
        let coef = system.coefficients(x)?;
        let grad = v.gradient(x);
        let val = min_value(&coef, &grad);
        let tol = rel_tol * descent_scale(&coef, &grad);
        if val > 1e3 * tol {
            any_fail = true;
        } else if val > tol {
            any_marginal = true;
        }
        worst.points_checked += 1;
        if val - tol > worst.worst_value - worst.worst_tolerance || worst.worst_point.is_empty() {
            worst.worst_value = val;
            worst.worst_tolerance = tol;
            worst.worst_point = x.iter().copied().collect();
        }
    }
    worst.verdict = if any_fail {
        Verdict::Fail
    } else if any_marginal {
        Verdict::Inconclusive
    } else {
        Verdict::Pass
    };
    Ok(worst)
}

/// Numerical rank of `[B, AB, …, A^{n−1}B]`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RankInfo {
    pub rank: usize,
    pub required: usize,
    pub singular_values: Vec<f64>,
    /// Relative tolerance; the threshold is `tol · σ_max · max(rows, cols)`.
    pub tol: f64,
}

impl RankInfo {
    pub fn full(&self) -> bool {
        self.rank == self.required
    }
}

/// Default relative tolerance of the numerical rank tests.
pub const RANK_TOL: f64 = 1e-10;

pub fn kalman_rank(a: &Matrix, b: &Matrix, tol: f64) -> Result<RankInfo> {
    let n = a.nrows();
    if a.ncols() != n || b.nrows() != n {
        return Err(Error::DimensionError("A must be n×n and B n×d".into()));
    }
    let (rank, singular_values) = numerical_rank(&controllability_matrix(a, b), tol);
    Ok(RankInfo {
        rank,
        required: n,
        singular_values,
        tol,
    })
}

/// Linearization `ẋ = A x + B ξ` of `ẋ = f(x) + γ(x, ξ)` at an equilibrium.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearPair {
    pub a: Matrix,
    pub b: Matrix,
    pub residual: f64,
}

/// Largest `|f(x̄) + γ(x̄, ξ̄)|` accepted as an equilibrium.
pub const EQUILIBRIUM_TOL: f64 = 1e-8;

/// Jacobians of `f + γ` at `(x̄, ξ̄)` by central differences (relative step
/// 1e-6). `γ(x̄, ξ̄)` is spot-checked against the supports of `ℱ₁(x̄)`.
pub fn selection_linearization<S>(system: &QuadraticControlSystem, selection: S, x_bar: &Vector, xi_bar: &Vector) -> Result<LinearPair>
where
    S: Fn(&Vector, &Vector) -> Result<Vector>,
{
    let f0 = system.coefficients(x_bar)?.f;
    let gamma = selection(x_bar, xi_bar)?;
    let residual = (&f0 + &gamma).amax();
    if residual > EQUILIBRIUM_TOL {
        return Err(Error::NotAnEquilibrium { residual });
    }
    let n = system.dim_x();
    let mut dirs = sphere_points(64, n);
    for i in 0..n {
        let mut e = Vector::zeros(n);
        e[i] = 1.0;
        dirs.push(e.clone());
        dirs.push(-e);
    }
    let violation = cone_violation(system, x_bar, &gamma, &dirs)?;
    if violation > 1e-6 {
        return Err(Error::SelectionOutsideCone { violation });
    }
    let a = fd_jacobian(|x| Ok(system.coefficients(x)?.f + selection(x, xi_bar)?), x_bar, 1e-6)?;
    let b = fd_jacobian(|xi| selection(x_bar, xi), xi_bar, 1e-6)?;
    Ok(LinearPair { a, b, residual })
}

/// A k-tuple `W = (w₁, …, w_k)` of control-velocity vectors.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct VibrationTuple {
    pub ws: Vec<Vector>,
}

impl VibrationTuple {
    pub fn new(ws: Vec<Vector>) -> Result<Self> {
        if ws.is_empty() {
            return Err(Error::InvalidInput("a vibration tuple needs at least one vector".into()));
        }
        let m = ws[0].len();
        if ws.iter().any(|w| w.len() != m) {
            return Err(Error::DimensionError("tuple vectors differ in length".into()));
        }
        Ok(Self { ws })
    }

    pub fn single(w: Vector) -> Self {
        Self { ws: vec![w] }
    }

    pub fn k(&self) -> usize {
        self.ws.len()
    }

    pub fn dim_u(&self) -> usize {
        self.ws[0].len()
    }

    /// `Σ_ℓ w_ℓ w_ℓᵀ`.
    pub fn outer_sum(&self) -> Matrix {
        self.ws
            .iter()
            .fold(Matrix::zeros(self.dim_u(), self.dim_u()), |acc, w| acc + w * w.transpose())
    }

    fn from_flat(x: &Vector, k: usize, m: usize) -> Self {
        Self {
            ws: (0..k).map(|l| x.rows(l * m, m).into_owned()).collect(),
        }
    }
}

/// Result record of the stability tests, ready for serialization.
#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StabilityReport {
    pub test: String,
    pub verdict: Option<Verdict>,
    pub equilibrium_residual: Vec<f64>,
    pub equilibrium_tol: f64,
    pub rank: Option<RankInfo>,
    pub gradient: Vec<f64>,
    pub gradient_tol: f64,
    pub hessian_eigenvalues: Vec<f64>,
    pub hessian_tol: f64,
    pub tuple: Vec<Vec<f64>>,
    pub half_quadratic: Option<bool>,
    pub parameters: BTreeMap<String, f64>,
    pub notes: Vec<String>,
}

impl StabilityReport {
    pub fn passed(&self) -> bool {
        self.verdict == Some(Verdict::Pass)
    }
}

/// Options for [`mechanical_rank_test`] and [`solve_vibration_tuple`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankTestOptions {
    /// Equilibrium residual tolerance.
    pub tol: f64,
    /// Relative singular-value tolerance for the rank.
    pub rank_tol: f64,
    /// Use `½ Σ ∂E/∂q w w` (the factor of the equations of motion) in the
    /// equilibrium condition; `false` drops the ½.
    pub half_quadratic: bool,
}

impl Default for RankTestOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            rank_tol: RANK_TOL,
            half_quadratic: true,
        }
    }
}

/// `M(u, q, W)`: `N × kM` with `M[i, (ℓ, α)] = Σ_β ∂e_{αβ}/∂qⁱ w_ℓᵝ`.
pub fn vibration_matrix(de_dq: &[Matrix], w: &VibrationTuple) -> Matrix {
    let n = de_dq.len();
    let m = w.dim_u();
    let mut out = Matrix::zeros(n, w.k() * m);
    for (i, de) in de_dq.iter().enumerate() {
        for (l, wl) in w.ws.iter().enumerate() {
            let col = de * wl;
            for a in 0..m {
                out[(i, l * m + a)] = col[a];
            }
        }
    }
    out
}

fn equilibrium_residual(de_dq: &[Matrix], f0: &Vector, w: &VibrationTuple, half: bool) -> Vector {
    let c = if half { 0.5 } else { 1.0 };
    Vector::from_fn(de_dq.len(), |i, _| {
        f0[i] + c * w.ws.iter().map(|wl| wl.dot(&(&de_dq[i] * wl))).sum::<f64>()
    })
}

/// Rank and equilibrium test for a vibration tuple at `(q̄, 0, ū)`.
pub fn mechanical_rank_test(
    model: &MetricModel,
    force: &ForceModel,
    q_bar: &Vector,
    u_bar: &Vector,
    w: &VibrationTuple,
    opts: &RankTestOptions,
) -> Result<StabilityReport> {
    let n = model.dim_q();
    let m = model.dim_u();
    if w.dim_u() != m {
        return Err(Error::DimensionError("tuple vectors must live in ℝᴹ".into()));
    }
    if w.k() * m < n {
        return Err(Error::DimensionError(alloc::format!(
            "kM = {} is smaller than N = {}",
            w.k() * m,
            n
        )));
    }
    let b = reduced_blocks(model, q_bar, u_bar)?;
    let p0 = Vector::zeros(n);
    let f0 = force.f0(q_bar, &p0, u_bar)?;
    let res = equilibrium_residual(&b.de_dq, &f0, w, opts.half_quadratic);
    let (rank, sv) = numerical_rank(&vibration_matrix(&b.de_dq, w), opts.rank_tol);
    let rank_info = RankInfo {
        rank,
        required: n,
        singular_values: sv,
        tol: opts.rank_tol,
    };
    let ok = res.amax() <= opts.tol && rank_info.full();
    let mut report = StabilityReport {
        test: "vibration-rank".to_string(),
        verdict: Some(Verdict::from_bool(ok)),
        equilibrium_residual: res.iter().copied().collect(),
        equilibrium_tol: opts.tol,
        rank: Some(rank_info),
        tuple: w.ws.iter().map(|v| v.iter().copied().collect()).collect(),
        half_quadratic: Some(opts.half_quadratic),
        ..Default::default()
    };
    report.parameters.insert("k".to_string(), w.k() as f64);
    Ok(report)
}

/// Finds a k-tuple meeting the equilibrium condition with full rank by
/// damped Gauss–Newton (minimum-norm steps) from deterministic starts.
pub fn solve_vibration_tuple(
    model: &MetricModel,
    force: &ForceModel,
    q_bar: &Vector,
    u_bar: &Vector,
    k: usize,
    opts: &RankTestOptions,
) -> Result<VibrationTuple> {
    let n = model.dim_q();
    let m = model.dim_u();
    if k == 0 || k * m < n {
        return Err(Error::DimensionError(alloc::format!("kM = {} is smaller than N = {}", k * m, n)));
    }
    let b = reduced_blocks(model, q_bar, u_bar)?;
    let f0 = force.f0(q_bar, &Vector::zeros(n), u_bar)?;
    let c = if opts.half_quadratic { 0.5 } else { 1.0 };
    let residual = |x: &Vector| equilibrium_residual(&b.de_dq, &f0, &VibrationTuple::from_flat(x, k, m), opts.half_quadratic);
    // ∂rᵢ/∂w_ℓ = 2c ∂Eᵢ w_ℓ, i.e. 2c·M(W)
    let jacobian = |x: &Vector| vibration_matrix(&b.de_dq, &VibrationTuple::from_flat(x, k, m)) * (2.0 * c);
    let scale = f0.amax().max(1.0).sqrt();
    let dim = k * m;
    let mut best: Option<(f64, Vector)> = None;
    for start in 0..64 {
        let h = halton(start, dim);
        let mut x = Vector::from_fn(dim, |i, _| (2.0 * h[i] - 1.0) * 3.0 * scale);
        let mut r = residual(&x);
        for _ in 0..200 {
            if r.amax() <= 1e-14 * scale * scale {
                break;
            }
            let step = lstsq(&jacobian(&x), &r);
            let mut lambda = 1.0;
            let mut moved = false;
            for _ in 0..30 {
                let trial = &x - &step * lambda;
                let rt = residual(&trial);
                if rt.norm() < r.norm() {
                    x = trial;
                    r = rt;
                    moved = true;
                    break;
                }
                lambda *= 0.5;
            }
            if !moved {
                break;
            }
        }
        let tuple = VibrationTuple::from_flat(&x, k, m);
        let (rank, _) = numerical_rank(&vibration_matrix(&b.de_dq, &tuple), opts.rank_tol);
        let rn = r.amax();
        if rank == n && rn <= opts.tol {
            return Ok(tuple);
        }
        if rank == n && best.as_ref().is_none_or(|(v, _)| rn < *v) {
            best = Some((rn, x));
        }
    }
    Err(Error::SolveFailed(alloc::format!(
        "no full-rank vibration tuple found (best residual {:e})",
        best.map(|b| b.0).unwrap_or(f64::INFINITY)
    )))
}

/// `U_W(q, u) = U(q, u) − ½ Σ_ℓ w_ℓᵀ E(q, u) w_ℓ`.
#[derive(Debug, Clone)]
pub struct EffectivePotential {
    model: MetricModel,
    potential: Potential,
    tuple: VibrationTuple,
    /// Relative step of the Hessian differences.
    pub hessian_step: f64,
}

impl EffectivePotential {
    pub fn value(&self, q: &Vector, u: &Vector) -> Result<f64> {
        let e = crate::metric::e_matrix(&self.model, q, u)?;
        let quad: f64 = self.tuple.ws.iter().map(|w| w.dot(&(&e * w))).sum();
        Ok(self.potential.value(q, u)? - 0.5 * quad)
    }

    /// `(∂U_W/∂q, ∂U_W/∂u)` from `∇U` and the partials of `E`.
    pub fn gradient(&self, q: &Vector, u: &Vector) -> Result<(Vector, Vector)> {
        let b = reduced_blocks(&self.model, q, u)?;
        let (mut gq, mut gu) = self.potential.gradient(q, u)?;
        for w in &self.tuple.ws {
            for (i, de) in b.de_dq.iter().enumerate() {
                gq[i] -= 0.5 * w.dot(&(de * w));
            }
            for (a, de) in b.de_du.iter().enumerate() {
                gu[a] -= 0.5 * w.dot(&(de * w));
            }
        }
        Ok((gq, gu))
    }

    /// Hessian in `(q, u)` by central differences of the gradient.
    pub fn hessian(&self, q: &Vector, u: &Vector) -> Result<Matrix> {
        hessian_of(|x| self.stacked_gradient(x, q.len()), &stack(q, u), self.hessian_step)
    }

    fn stacked_gradient(&self, x: &Vector, n: usize) -> Result<Vector> {
        let (q, u) = (x.rows(0, n).into_owned(), x.rows(n, x.len() - n).into_owned());
        let (gq, gu) = self.gradient(&q, &u)?;
        Ok(stack(&gq, &gu))
    }
}

fn stack(a: &Vector, b: &Vector) -> Vector {
    let mut out = Vector::zeros(a.len() + b.len());
    out.rows_mut(0, a.len()).copy_from(a);
    out.rows_mut(a.len(), b.len()).copy_from(b);
    out
}

fn hessian_of<G>(grad: G, x: &Vector, rel: f64) -> Result<Matrix>
where
    G: Fn(&Vector) -> Result<Vector>,
{
    let h = fd_jacobian(grad, x, rel)?;
    Ok((&h + h.transpose()) * 0.5)
}

pub fn effective_potential(model: &MetricModel, potential: &Potential, tuple: &VibrationTuple) -> Result<EffectivePotential> {
    if tuple.dim_u() != model.dim_u() {
        return Err(Error::DimensionError("tuple vectors must live in ℝᴹ".into()));
    }
    Ok(EffectivePotential {
        model: model.clone(),
        potential: potential.clone(),
        tuple: tuple.clone(),
        hessian_step: 1e-5,
    })
}

/// Strict-minimum test for `U_W + β` at `(q̄, ū)`: gradient below 1e-6 and
/// Hessian eigenvalues above 1e-8. `beta` must depend on `u` only.
pub fn effective_minimum_test(
    model: &MetricModel,
    potential: &Potential,
    tuple: &VibrationTuple,
    beta: &Potential,
    q_bar: &Vector,
    u_bar: &Vector,
) -> Result<StabilityReport> {
    let uw = effective_potential(model, potential, tuple)?;
    let n = model.dim_q();
    let total_grad = |x: &Vector| -> Result<Vector> {
        let (q, u) = (x.rows(0, n).into_owned(), x.rows(n, x.len() - n).into_owned());
        let (gq, gu) = uw.gradient(&q, &u)?;
        let (_, bu) = beta.gradient(&q, &u)?;
        Ok(stack(&gq, &(gu + bu)))
    };
    let x = stack(q_bar, u_bar);
    let grad = total_grad(&x)?;
    let hess = hessian_of(total_grad, &x, uw.hessian_step)?;
    let eig = sym_eigenvalues(&hess);
    let grad_tol = 1e-6;
    let hess_tol = 1e-8;
    let ok = grad.amax() <= grad_tol && eig.first().is_some_and(|&l| l > hess_tol);
    let mut report = StabilityReport {
        test: "effective-minimum".to_string(),
        verdict: Some(Verdict::from_bool(ok)),
        gradient: grad.iter().copied().collect(),
        gradient_tol: grad_tol,
        hessian_eigenvalues: eig,
        hessian_tol: hess_tol,
        tuple: tuple.ws.iter().map(|v| v.iter().copied().collect()).collect(),
        ..Default::default()
    };
    report.parameters.insert("hessian_step".to_string(), uw.hessian_step);
    if ok {
        report
            .notes
            .push("strict local minimum: stabilizable at (q̄, 0, ū) by vibrations realizing W".to_string());
    }
    Ok(report)
}

/// Structure of `Q = ∂E/∂q¹ · J · ∂E/∂q²` for the double pendulum.
#[derive(Debug, Clone, PartialEq)]
pub struct QAnalysis {
    pub q: Matrix,
    pub de_dq1: Matrix,
    pub de_dq2: Matrix,
    pub det_de_dq1: f64,
    /// `−16/(−3 + cos 2(q¹ − q²))²`.
    pub det_de_dq1_closed_form: f64,
    pub det_de_dq2: f64,
    /// Least-squares `c` in `Q ≈ c ∂E/∂q²`.
    pub proportionality: f64,
    /// `‖Q − c ∂E/∂q²‖ / ‖Q‖`.
    pub proportionality_residual: f64,
    pub q_eigenvalues: Vec<f64>,
    pub semidefinite: bool,
}

pub fn double_pendulum_q_analysis(q1: f64, q2: f64) -> Result<QAnalysis> {
    let entry = crate::catalog::double_pendulum(crate::catalog::DEFAULT_GRAVITY);
    let b = reduced_blocks(&entry.model, &Vector::from_column_slice(&[q1, q2]), &Vector::zeros(2))?;
    let (d1, d2) = (b.de_dq[0].clone(), b.de_dq[1].clone());
    let j = Matrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
    let q = &d1 * j * &d2;
    let denom = d2.norm_squared();
    let c = if denom > 0.0 { q.dot(&d2) / denom } else { 0.0 };
    let qn = q.norm();
    let residual = if qn > 0.0 { (&q - &d2 * c).norm() / qn } else { 0.0 };
    let sym = (&q + q.transpose()) * 0.5;
    let eig = sym_eigenvalues(&sym);
    let tol = 1e-12 * qn.max(1.0);
    let semidefinite = eig.iter().all(|&l| l >= -tol) || eig.iter().all(|&l| l <= tol);
    let cd = (2.0 * (q1 - q2)).cos();
    Ok(QAnalysis {
        det_de_dq1: d1.determinant(),
        det_de_dq1_closed_form: -16.0 / ((cd - 3.0) * (cd - 3.0)),
        det_de_dq2: d2.determinant(),
        proportionality: c,
        proportionality_residual: residual,
        q_eigenvalues: eig,
        semidefinite,
        q,
        de_dq1: d1,
        de_dq2: d2,
    })
}

/// Feedback gain `K` placing the eigenvalues of `A − B K` at the given real
/// `poles` (Ackermann's formula; several inputs are combined through a fixed
/// direction `v`, `K = v kᵀ`).
pub fn place_poles(a: &Matrix, b: &Matrix, poles: &[f64]) -> Result<Matrix> {
    let n = a.nrows();
    if poles.len() != n {
        return Err(Error::DimensionError("need one pole per state".into()));
    }
    let d = b.ncols();
    let mut candidates: Vec<Vector> = vec![Vector::from_element(d, 1.0)];
    for i in 0..d {
        let mut e = Vector::zeros(d);
        e[i] = 1.0;
        candidates.push(e);
    }
    candidates.extend((1..16).map(|k| halton(k, d).map(|x| 2.0 * x - 1.0)));
    for v in candidates {
        let bv = b * &v;
        let ctrb = controllability_matrix(a, &Matrix::from_column_slice(n, 1, bv.as_slice()));
        let (rank, _) = numerical_rank(&ctrb, RANK_TOL);
        if rank < n {
            continue;
        }
        let Some(inv) = ctrb.try_inverse() else { continue };
        // characteristic polynomial Π (A − λᵢ I)
        let mut pa = Matrix::identity(n, n);
        for &l in poles {
            pa *= a - Matrix::identity(n, n) * l;
        }
        let k_row = inv.row(n - 1) * pa;
        return Ok(&v * k_row);
    }
    let (rank, _) = numerical_rank(&controllability_matrix(a, b), RANK_TOL);
    Err(Error::UncontrollableLinearization { rank, dim: n })
}

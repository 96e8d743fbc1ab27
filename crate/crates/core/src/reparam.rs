//! Quadratic impulsive systems `ẋ = f + Σ g_α u̇ᵅ + Σ h_{αβ} u̇ᵅu̇ᵝ`, their
//! reparametrization by `s(t) = ∫ (1 + |u̇|²)` into a graph system with
//! controls on the unit sphere, and the support functions of the
//! convexified velocity sets.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)] // inherent float methods are missing without std
use num_traits::Float;

use crate::dynamics::{ControlSignal, ForceModel};
use crate::error::{Error, Result};
use crate::interp::{cumulative, gauss_legendre, Hermite};
use crate::linalg::{max_eigenvalue, sym_eigenvalues};
use crate::metric::{reduced_blocks, MetricModel};
use crate::ode::{rk4_on_grid, uniform_grid};
use crate::sampling::sphere_points;
use crate::{Matrix, Vector};

type DriftFn = Arc<dyn Fn(&Vector) -> Result<Vector> + Send + Sync>;
type InputFn = Arc<dyn Fn(&Vector) -> Result<Vec<Vector>> + Send + Sync>;
type QuadFn = Arc<dyn Fn(&Vector) -> Result<Vec<Vec<Vector>>> + Send + Sync>;

/// `ẋ = f(x) + Σ_α g_α(x) u̇ᵅ + Σ_{αβ} h_{αβ}(x) u̇ᵅ u̇ᵝ` on `ℝⁿ` with `m` controls.
#[derive(Clone)]
pub struct QuadraticControlSystem {
    dim_x: usize,
    dim_u: usize,
    f: DriftFn,
    g: InputFn,
    h: QuadFn,
}

impl core::fmt::Debug for QuadraticControlSystem {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("QuadraticControlSystem")
            .field("dim_x", &self.dim_x)
            .field("dim_u", &self.dim_u)
            .finish_non_exhaustive()
    }
}

/// The coefficient fields of a [`QuadraticControlSystem`] at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct Coefficients {
    pub f: Vector,
    pub g: Vec<Vector>,
    pub h: Vec<Vec<Vector>>,
}

impl Coefficients {
    /// `Φ_d` with `aᵀ Φ_d a = d · (f a₀² + Σ g_α a₀ aᵅ + Σ h_{αβ} aᵅ aᵝ)`.
    pub fn form(&self, d: &Vector) -> Matrix {
        let m = self.g.len();
        let mut phi = Matrix::zeros(m + 1, m + 1);
        phi[(0, 0)] = d.dot(&self.f);
        for a in 0..m {
            let v = 0.5 * d.dot(&self.g[a]);
            phi[(0, a + 1)] = v;
            phi[(a + 1, 0)] = v;
            for b in 0..m {
                phi[(a + 1, b + 1)] = 0.5 * (d.dot(&self.h[a][b]) + d.dot(&self.h[b][a]));
            }
        }
        phi
    }

    /// Velocity for control rate `w`.
    pub fn velocity(&self, w: &Vector) -> Vector {
        let mut v = self.f.clone();
        for (a, g) in self.g.iter().enumerate() {
            v += g * w[a];
        }
        for (a, row) in self.h.iter().enumerate() {
            for (b, h) in row.iter().enumerate() {
                v += h * (w[a] * w[b]);
            }
        }
        v
    }

    /// Graph-system velocity `f a₀² + Σ g_α a₀ aᵅ + Σ h_{αβ} aᵅ aᵝ`.
    pub fn graph_velocity(&self, a: &Vector) -> Vector {
        let a0 = a[0];
        let mut v = &self.f * (a0 * a0);
        for (al, g) in self.g.iter().enumerate() {
            v += g * (a0 * a[al + 1]);
        }
        for (al, row) in self.h.iter().enumerate() {
            for (be, h) in row.iter().enumerate() {
                v += h * (a[al + 1] * a[be + 1]);
            }
        }
        v
    }
}

impl QuadraticControlSystem {
    pub fn new<F, G, H>(dim_x: usize, dim_u: usize, f: F, g: G, h: H) -> Self
    where
        F: Fn(&Vector) -> Result<Vector> + Send + Sync + 'static,
        G: Fn(&Vector) -> Result<Vec<Vector>> + Send + Sync + 'static,
        H: Fn(&Vector) -> Result<Vec<Vec<Vector>>> + Send + Sync + 'static,
    {
        assert!(dim_x > 0 && dim_u > 0, "dimensions must be positive");
        Self {
            dim_x,
            dim_u,
            f: Arc::new(f),
            g: Arc::new(g),
            h: Arc::new(h),
        }
    }

    pub fn dim_x(&self) -> usize {
        self.dim_x
    }

    pub fn dim_u(&self) -> usize {
        self.dim_u
    }

    /// Evaluates `f`, `g`, `h` at `x`, checking shapes and `h_{αβ} = h_{βα}`.
    pub fn coefficients(&self, x: &Vector) -> Result<Coefficients> {
        if x.len() != self.dim_x {
            return Err(Error::DimensionError(alloc::format!("state must be in ℝ^{}", self.dim_x)));
        }
        let f = (self.f)(x)?;
        let g = (self.g)(x)?;
        let h = (self.h)(x)?;
        let (n, m) = (self.dim_x, self.dim_u);
        if f.len() != n || g.len() != m || g.iter().any(|v| v.len() != n) {
            return Err(Error::DimensionError("drift or input field has the wrong shape".into()));
        }
        if h.len() != m || h.iter().any(|row| row.len() != m || row.iter().any(|v| v.len() != n)) {
            return Err(Error::DimensionError("quadratic field has the wrong shape".into()));
        }
        for (a, row) in h.iter().enumerate() {
            for (b, hab) in row.iter().enumerate().take(a) {
                let asym = (hab - &h[b][a]).amax();
                let scale = hab.amax().max(1.0);
                if asym > 1e-12 * scale {
                    return Err(Error::InvalidInput(alloc::format!("h is not symmetric in (α, β): {asym:e}")));
                }
            }
        }
        Ok(Coefficients { f, g, h })
    }

    /// `ẋ` at control rate `w`.
    pub fn velocity(&self, x: &Vector, w: &Vector) -> Result<Vector> {
        if w.len() != self.dim_u {
            return Err(Error::DimensionError("control rate dimension".into()));
        }
        Ok(self.coefficients(x)?.velocity(w))
    }
}

/// The mechanical system as a quadratic impulsive system on `x = (q, p, u)`.
pub fn lift_mechanical(model: &MetricModel, force: &ForceModel) -> QuadraticControlSystem {
    let n = model.dim_q();
    let m = model.dim_u();
    let dim = 2 * n + m;
    let split = move |x: &Vector| (x.rows(0, n).into_owned(), x.rows(n, n).into_owned(), x.rows(2 * n, m).into_owned());
    let (mf, ff) = (model.clone(), force.clone());
    let f = move |x: &Vector| -> Result<Vector> {
        let (q, p, u) = split(x);
        let b = reduced_blocks(&mf, &q, &u)?;
        let mut out = Vector::zeros(dim);
        out.rows_mut(0, n).copy_from(&(&b.a * &p));
        let mut dp = ff.f0(&q, &p, &u)?;
        for i in 0..n {
            dp[i] -= 0.5 * p.dot(&(&b.da_dq[i] * &p));
        }
        out.rows_mut(n, n).copy_from(&dp);
        Ok(out)
    };
    let (mg, fg) = (model.clone(), force.clone());
    let g = move |x: &Vector| -> Result<Vec<Vector>> {
        let (q, p, u) = split(x);
        let b = reduced_blocks(&mg, &q, &u)?;
        let f1 = fg.f1(&q, &p, &u)?;
        Ok((0..m)
            .map(|a| {
                let mut col = Vector::zeros(dim);
                col.rows_mut(0, n).copy_from(&b.k.column(a));
                for i in 0..n {
                    col[n + i] = f1[(i, a)] - p.dot(&b.dk_dq[i].column(a));
                }
                col[2 * n + a] = 1.0;
                col
            })
            .collect())
    };
    let mh = model.clone();
    let h = move |x: &Vector| -> Result<Vec<Vec<Vector>>> {
        let (q, _, u) = split(x);
        let b = reduced_blocks(&mh, &q, &u)?;
        Ok(quadratic_rows(&b.de_dq, n, m, dim, n))
    };
    QuadraticControlSystem::new(dim, m, f, g, h)
}

/// `h_{αβ}` carrying `½ ∂e_{αβ}/∂qⁱ` into the momentum slots starting at `offset`.
fn quadratic_rows(de_dq: &[Matrix], n: usize, m: usize, dim: usize, offset: usize) -> Vec<Vec<Vector>> {
    (0..m)
        .map(|a| {
            (0..m)
                .map(|b| {
                    let mut v = Vector::zeros(dim);
                    for i in 0..n {
                        v[offset + i] = 0.5 * de_dq[i][(a, b)];
                    }
                    v
                })
                .collect()
        })
        .collect()
}

/// The averaged system on `(q, p)` with the control frozen at `ū`: drift
/// `(Ap, −½ p∂A p + F⁰(q, p, ū))`, no linear term, and `½ ∂E/∂q` in the
/// momentum rows. Its `ℱ₁` is the cone in which vibration-realized forces live.
pub fn cone_system(model: &MetricModel, force: &ForceModel, u_bar: &Vector) -> QuadraticControlSystem {
    let n = model.dim_q();
    let m = model.dim_u();
    let dim = 2 * n;
    let (mf, ff, uf) = (model.clone(), force.clone(), u_bar.clone());
    let f = move |x: &Vector| -> Result<Vector> {
        let q = x.rows(0, n).into_owned();
        let p = x.rows(n, n).into_owned();
        let b = reduced_blocks(&mf, &q, &uf)?;
        let mut out = Vector::zeros(dim);
        out.rows_mut(0, n).copy_from(&(&b.a * &p));
        let mut dp = ff.f0(&q, &p, &uf)?;
        for i in 0..n {
            dp[i] -= 0.5 * p.dot(&(&b.da_dq[i] * &p));
        }
        out.rows_mut(n, n).copy_from(&dp);
        Ok(out)
    };
    let g = move |_: &Vector| -> Result<Vec<Vector>> { Ok(vec![Vector::zeros(dim); m]) };
    let (mh, uh) = (model.clone(), u_bar.clone());
    let h = move |x: &Vector| -> Result<Vec<Vec<Vector>>> {
        let q = x.rows(0, n).into_owned();
        let b = reduced_blocks(&mh, &q, &uh)?;
        Ok(quadratic_rows(&b.de_dq, n, m, dim, n))
    };
    QuadraticControlSystem::new(dim, m, f, g, h)
}

type GraphFn = Arc<dyn Fn(f64) -> Vector + Send + Sync>;

/// A control `s ↦ a(s) = (a⁰, a¹, …, aᵐ)` for the graph system; valid values
/// have `a⁰ ∈ [0, 1]` and `Σ (aᵅ)² = 1`.
#[derive(Clone)]
pub struct GraphControl {
    dim_u: usize,
    a: GraphFn,
}

impl core::fmt::Debug for GraphControl {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("GraphControl").field("dim_u", &self.dim_u).finish_non_exhaustive()
    }
}

/// Tolerance on the sphere and hemisphere constraints of graph controls.
pub const SPHERE_TOL: f64 = 1e-9;

impl GraphControl {
    pub fn new<A>(dim_u: usize, a: A) -> Self
    where
        A: Fn(f64) -> Vector + Send + Sync + 'static,
    {
        Self { dim_u, a: Arc::new(a) }
    }

    /// `a ≡ a_const`.
    pub fn constant(a_const: Vector) -> Self {
        let m = a_const.len() - 1;
        Self::new(m, move |_| a_const.clone())
    }

    pub fn dim_u(&self) -> usize {
        self.dim_u
    }

    pub fn eval(&self, s: f64) -> Vector {
        (self.a)(s)
    }

    /// `a(s)`, or [`Error::SphereViolation`] if it leaves the hemisphere.
    pub fn checked(&self, s: f64) -> Result<Vector> {
        let a = self.eval(s);
        if a.len() != self.dim_u + 1 {
            return Err(Error::DimensionError("graph control has the wrong length".into()));
        }
        let defect = (a.norm_squared() - 1.0).abs();
        let range = if a[0] < 0.0 {
            -a[0]
        } else if a[0] > 1.0 {
            a[0] - 1.0
        } else {
            0.0
        };
        let worst = defect.max(range);
        if worst > SPHERE_TOL || !worst.is_finite() {
            return Err(Error::SphereViolation { s, defect: worst });
        }
        Ok(a)
    }
}

/// Solution of the graph system: time `x⁰ = t(s)` and state `x(s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphTrajectory {
    pub s: Vec<f64>,
    pub t: Vec<f64>,
    pub x: Vec<Vector>,
}

/// Integrates `dt/ds = (a⁰)²`, `dx/ds = f (a⁰)² + Σ g_α a⁰aᵅ + Σ h_{αβ} aᵅaᵝ`
/// from `(0, x♯)` on `[0, s_end]` by RK4 with step `ds`.
pub fn simulate_graph(
    system: &QuadraticControlSystem,
    control: &GraphControl,
    x0: &Vector,
    s_end: f64,
    ds: f64,
) -> Result<GraphTrajectory> {
    if !(s_end > 0.0) || !(ds > 0.0) {
        return Err(Error::InvalidInput("graph horizon and step must be positive".into()));
    }
    simulate_graph_on_grid(system, control, x0, &uniform_grid(0.0, s_end, ds))
}

/// [`simulate_graph`] on an explicit increasing grid starting at `s = 0`.
pub fn simulate_graph_on_grid(
    system: &QuadraticControlSystem,
    control: &GraphControl,
    x0: &Vector,
    grid: &[f64],
) -> Result<GraphTrajectory> {
    if control.dim_u() != system.dim_u() {
        return Err(Error::DimensionError("graph control and system disagree on m".into()));
    }
    if x0.len() != system.dim_x() {
        return Err(Error::DimensionError("initial state dimension".into()));
    }
    if grid.len() < 2 || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput("graph grid must be strictly increasing".into()));
    }
    let n = system.dim_x();
    let field = |s: f64, y: &Vector| -> Result<Vector> {
        let a = control.checked(s)?;
        let x = y.rows(1, n).into_owned();
        let v = system.coefficients(&x)?.graph_velocity(&a);
        let mut out = Vector::zeros(n + 1);
        out[0] = a[0] * a[0];
        out.rows_mut(1, n).copy_from(&v);
        Ok(out)
    };
    let mut y0 = Vector::zeros(n + 1);
    y0.rows_mut(1, n).copy_from(x0);
    let ys = rk4_on_grid(field, grid, &y0)?;
    Ok(GraphTrajectory {
        s: grid.to_vec(),
        t: ys.iter().map(|y| y[0]).collect(),
        x: ys.into_iter().map(|y| y.rows(1, n).into_owned()).collect(),
    })
}

/// The pair of monotone maps `s(t)` and `t(s)` sampled on a common grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeWarp {
    t: Vec<f64>,
    s: Vec<f64>,
    /// `ds/dt` at the nodes (infinite where `a⁰ = 0`).
    ds_dt: Vec<f64>,
    pub t_nondecreasing: bool,
    pub s_strictly_increasing: bool,
}

impl TimeWarp {
    fn from_nodes(t: Vec<f64>, s: Vec<f64>, ds_dt: Vec<f64>) -> Self {
        let t_nondecreasing = t.windows(2).all(|w| w[1] >= w[0]);
        let s_strictly_increasing = s.windows(2).all(|w| w[1] > w[0]);
        Self {
            t,
            s,
            ds_dt,
            t_nondecreasing,
            s_strictly_increasing,
        }
    }

    pub fn t_nodes(&self) -> &[f64] {
        &self.t
    }

    pub fn s_nodes(&self) -> &[f64] {
        &self.s
    }

    pub fn s_end(&self) -> f64 {
        *self.s.last().expect("nonempty warp")
    }

    pub fn t_end(&self) -> f64 {
        *self.t.last().expect("nonempty warp")
    }

    fn locate(nodes: &[f64], x: f64) -> usize {
        nodes.partition_point(|&v| v <= x).saturating_sub(1).min(nodes.len() - 2)
    }

    /// `s(t)`; monotone cubic Hermite between the nodes.
    pub fn s_of_t(&self, t: f64) -> f64 {
        let k = Self::locate(&self.t, t);
        let (t0, t1) = (self.t[k], self.t[k + 1]);
        if t1 <= t0 {
            return self.s[k + 1];
        }
        let (m0, m1) = (self.ds_dt[k], self.ds_dt[k + 1]);
        if !m0.is_finite() || !m1.is_finite() {
            return self.s[k] + (self.s[k + 1] - self.s[k]) * (t - t0) / (t1 - t0);
        }
        hermite_1d(t0, t1, self.s[k], self.s[k + 1], m0, m1, t)
    }

    /// `t(s)`; monotone cubic Hermite between the nodes, slopes `(a⁰)²`.
    pub fn t_of_s(&self, s: f64) -> f64 {
        let k = Self::locate(&self.s, s);
        let (m0, m1) = (1.0 / self.ds_dt[k], 1.0 / self.ds_dt[k + 1]);
        hermite_1d(self.s[k], self.s[k + 1], self.t[k], self.t[k + 1], m0, m1, s)
    }
}

fn hermite_1d(x0: f64, x1: f64, y0: f64, y1: f64, m0: f64, m1: f64, x: f64) -> f64 {
    let h = Hermite::scalar(vec![x0, x1], vec![y0, y1], vec![m0, m1], true);
    h.eval_scalar(x)
}

/// Default number of warp intervals when no grid is given.
pub const DEFAULT_WARP_INTERVALS: usize = 2000;

/// Time warp and graph control of a signal on its own domain.
pub fn warp_from_signal(signal: &ControlSignal) -> Result<(TimeWarp, GraphControl)> {
    let dt = (signal.t1() - signal.t0()) / DEFAULT_WARP_INTERVALS as f64;
    warp_from_signal_on_grid(signal, &uniform_grid(signal.t0(), signal.t1(), dt))
}

/// `s(t) = ∫ (1 + |u̇|²)` at the nodes of `t_grid` (adaptive Gauss
/// quadrature), `a⁰ = 1/√(1 + |u̇|²)`, `aᵅ = u̇ᵅ a⁰`.
pub fn warp_from_signal_on_grid(signal: &ControlSignal, t_grid: &[f64]) -> Result<(TimeWarp, GraphControl)> {
    if t_grid.len() < 2 || t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput("time grid must be strictly increasing".into()));
    }
    let t0 = t_grid[0];
    let speed = |t: f64| 1.0 + signal.rate(t).norm_squared();
    let s: Vec<f64> = cumulative(speed, t_grid, 1e-14).into_iter().collect();
    let ds_dt: Vec<f64> = t_grid.iter().map(|&t| speed(t)).collect();
    let times: Vec<f64> = t_grid.iter().map(|t| t - t0).collect();
    let warp = TimeWarp::from_nodes(times, s, ds_dt);
    let m = signal.value(t0).len();
    let sig = signal.clone();
    let w2 = warp.clone();
    let control = GraphControl::new(m, move |s| {
        let w = sig.rate(t0 + w2.t_of_s(s));
        let a0 = 1.0 / (1.0 + w.norm_squared()).sqrt();
        let mut a = Vector::zeros(m + 1);
        a[0] = a0;
        a.rows_mut(1, m).copy_from(&(w * a0));
        a
    });
    Ok((warp, control))
}

/// `t(s) = ∫ (a⁰)²` for a graph control on `[0, s_end]`, sampled at `intervals + 1` nodes.
pub fn warp_from_graph(control: &GraphControl, s_end: f64, intervals: usize) -> Result<TimeWarp> {
    if !(s_end > 0.0) || intervals == 0 {
        return Err(Error::InvalidInput("graph warp needs a positive horizon".into()));
    }
    let grid = uniform_grid(0.0, s_end, s_end / intervals as f64);
    for &s in &grid {
        control.checked(s)?;
    }
    let rate = |s: f64| {
        let a0 = control.eval(s)[0];
        a0 * a0
    };
    let t = cumulative(rate, &grid, 1e-14);
    let ds_dt = grid.iter().map(|&s| 1.0 / rate(s)).collect();
    Ok(TimeWarp::from_nodes(t, grid, ds_dt))
}

/// Threshold below which `a⁰` is treated as zero when recovering `u̇ = a/a⁰`.
pub const MIN_TIME_COMPONENT: f64 = 1e-8;

/// Recovers `u(t) = u₀ + ∫ aᵅ/a⁰ (s(τ)) dτ` on the warp's time domain.
pub fn recover_controls(control: &GraphControl, warp: &TimeWarp, u0: &Vector) -> Result<ControlSignal> {
    let m = control.dim_u();
    if u0.len() != m {
        return Err(Error::DimensionError("initial control dimension".into()));
    }
    let mut min_a0 = f64::INFINITY;
    for &s in warp.s_nodes() {
        min_a0 = min_a0.min(control.checked(s)?[0]);
    }
    if !warp.s_strictly_increasing || !warp.t_nondecreasing {
        return Err(Error::InvalidInput("time warp is not monotone".into()));
    }
    if min_a0 <= MIN_TIME_COMPONENT {
        return Err(Error::ZeroTimeComponent { min_a0 });
    }
    let times = warp.t_nodes().to_vec();
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::ZeroTimeComponent { min_a0 });
    }
    let rate_at = {
        let c = control.clone();
        let w = warp.clone();
        move |t: f64| -> Vector {
            let a = c.eval(w.s_of_t(t));
            a.rows(1, a.len() - 1) / a[0]
        }
    };
    let mut values = Vec::with_capacity(times.len());
    let mut slopes = Vec::with_capacity(times.len());
    let mut acc = u0.clone();
    values.push(acc.clone());
    slopes.push(rate_at(times[0]));
    for win in times.windows(2) {
        let inc = Vector::from_fn(m, |i, _| gauss_legendre(|t| rate_at(t)[i], win[0], win[1]));
        acc += inc;
        values.push(acc.clone());
        slopes.push(rate_at(win[1]));
    }
    let spline = Hermite::new(times.clone(), values, slopes, false);
    let (t0, t1) = (times[0], *times.last().expect("nonempty"));
    Ok(ControlSignal::new(t0, t1, move |t| spline.eval(t), rate_at))
}

/// Exact support of the convexified velocity set `F◇(x)` in direction `d`:
/// the largest eigenvalue of `Φ_d` over the unit sphere (the form is even in
/// `a`, so the hemisphere gives the same maximum).
pub fn fdiamond_support(system: &QuadraticControlSystem, x: &Vector, d: &Vector) -> Result<f64> {
    check_direction(system, d)?;
    Ok(max_eigenvalue(&system.coefficients(x)?.form(d)))
}

/// Support of the extended set `F(x̂) ∋ ((a⁰)², f(a⁰)² + …)` in direction `(d₀, d)`.
pub fn extended_support(system: &QuadraticControlSystem, x: &Vector, d0: f64, d: &Vector) -> Result<f64> {
    check_direction(system, d)?;
    let mut phi = system.coefficients(x)?.form(d);
    phi[(0, 0)] += d0;
    Ok(max_eigenvalue(&phi))
}

fn check_direction(system: &QuadraticControlSystem, d: &Vector) -> Result<()> {
    if d.len() != system.dim_x() {
        return Err(Error::DimensionError("direction dimension".into()));
    }
    Ok(())
}

/// Support of `F◇(x)` by sampling `n_samples` quasi-random points of the
/// sphere followed by 50 steps of projected gradient ascent from the best few.
/// Kept as an independent cross-check of [`fdiamond_support`].
pub fn fdiamond_support_sampled(system: &QuadraticControlSystem, x: &Vector, d: &Vector, n_samples: usize) -> Result<f64> {
    check_direction(system, d)?;
    let phi = system.coefficients(x)?.form(d);
    let m1 = phi.nrows();
    let value = |a: &Vector| a.dot(&(&phi * a));
    let mut scored: Vec<(f64, Vector)> = sphere_points(n_samples.max(1), m1).into_iter().map(|a| (value(&a), a)).collect();
    scored.sort_by(|l, r| r.0.total_cmp(&l.0));
    scored.truncate(8);
    let step = 0.5 / phi.amax().max(1e-300);
    let mut best = f64::NEG_INFINITY;
    for (_, mut a) in scored {
        for _ in 0..50 {
            let grad = &phi * &a * 2.0;
            let trial = &a + grad * step;
            let nrm = trial.norm();
            if nrm == 0.0 {
                break;
            }
            a = trial / nrm;
        }
        best = best.max(value(&a));
    }
    Ok(best)
}

/// `σ₁(d) = sup_w d · (Σ g_α wᵅ + Σ h_{αβ} wᵅwᵝ)`, the support of the closed
/// convex set `ℱ₁(x)`; `+∞` when unbounded.
pub fn cone_support(system: &QuadraticControlSystem, x: &Vector, d: &Vector) -> Result<f64> {
    check_direction(system, d)?;
    let c = system.coefficients(x)?;
    let m = system.dim_u();
    let b = Vector::from_fn(m, |a, _| d.dot(&c.g[a]));
    let hd = Matrix::from_fn(m, m, |a, be| 0.5 * (d.dot(&c.h[a][be]) + d.dot(&c.h[be][a])));
    let scale = hd.amax().max(b.amax()).max(1e-300);
    let tol = 1e-12 * scale;
    let eig = nalgebra::SymmetricEigen::new(hd);
    if eig.eigenvalues.iter().any(|&l| l > tol) {
        return Ok(f64::INFINITY);
    }
    // maximize bᵀw − wᵀ(−H)w: finite iff b ⟂ ker H
    let mut value = 0.0;
    for k in 0..m {
        let lam = -eig.eigenvalues[k];
        let coef = eig.eigenvectors.column(k).dot(&b);
        if lam <= tol {
            if coef.abs() > 1e-9 * scale {
                return Ok(f64::INFINITY);
            }
        } else {
            value += 0.25 * coef * coef / lam;
        }
    }
    Ok(value)
}

/// Support of the cone `ℱ₂(x) = co{Σ h_{αβ} wᵅwᵝ}`: `0` or `+∞`.
pub fn quadratic_cone_support(system: &QuadraticControlSystem, x: &Vector, d: &Vector) -> Result<f64> {
    check_direction(system, d)?;
    let c = system.coefficients(x)?;
    let m = system.dim_u();
    let hd = Matrix::from_fn(m, m, |a, be| 0.5 * (d.dot(&c.h[a][be]) + d.dot(&c.h[be][a])));
    let top = sym_eigenvalues(&hd).last().copied().unwrap_or(0.0);
    Ok(if top > 1e-12 * hd.amax().max(1e-300) { f64::INFINITY } else { 0.0 })
}

/// Largest violation `d·y − σ₁(d)` over `directions` (non-positive when `y`
/// passes every support test of `ℱ₁(x)`).
pub fn cone_violation(system: &QuadraticControlSystem, x: &Vector, y: &Vector, directions: &[Vector]) -> Result<f64> {
    let mut worst = f64::NEG_INFINITY;
    for d in directions {
        let sigma = cone_support(system, x, d)?;
        if sigma.is_finite() {
            worst = worst.max(d.dot(y) - sigma);
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{rhs, ReducedState};

    fn v(x: &[f64]) -> Vector {
        Vector::from_column_slice(x)
    }

    fn single_h() -> QuadraticControlSystem {
        QuadraticControlSystem::new(
            2,
            1,
            |_| Ok(Vector::zeros(2)),
            |_| Ok(vec![Vector::zeros(2)]),
            |_| Ok(vec![vec![v(&[1.0, 0.0])]]),
        )
    }

    fn remark_system() -> QuadraticControlSystem {
        QuadraticControlSystem::new(
            2,
            2,
            |_| Ok(v(&[1.0, 0.0])),
            |_| Ok(vec![Vector::zeros(2), Vector::zeros(2)]),
            |_| {
                Ok(vec![
                    vec![v(&[0.0, 1.0]), Vector::zeros(2)],
                    vec![Vector::zeros(2), v(&[0.0, -1.0])],
                ])
            },
        )
    }

    #[test]
    fn support_examples() {
        let s = single_h();
        let x = Vector::zeros(2);
        assert!((fdiamond_support(&s, &x, &v(&[1.0, 0.0])).unwrap() - 1.0).abs() < 1e-14);
        assert!(fdiamond_support(&s, &x, &v(&[0.0, 1.0])).unwrap().abs() < 1e-14);
        // 0 lies in the extended set: every extended support is ≥ 0
        let r = remark_system();
        for d in sphere_points(200, 3) {
            let val = extended_support(&r, &v(&[0.3, -0.7]), d[0], &d.rows(1, 2).into_owned()).unwrap();
            assert!(val >= -1e-14);
        }
    }

    #[test]
    fn sampled_support_agrees_with_eigenvalue() {
        let r = remark_system();
        for d in sphere_points(20, 2) {
            let exact = fdiamond_support(&r, &v(&[0.1, 0.2]), &d).unwrap();
            let sampled = fdiamond_support_sampled(&r, &v(&[0.1, 0.2]), &d, 2000).unwrap();
            assert!(sampled <= exact + 1e-12 && exact - sampled < 1e-6, "{exact} {sampled}");
        }
    }

    #[test]
    fn asymmetric_h_is_rejected() {
        let bad = QuadraticControlSystem::new(
            1,
            2,
            |_| Ok(Vector::zeros(1)),
            |_| Ok(vec![Vector::zeros(1), Vector::zeros(1)]),
            |_| Ok(vec![vec![v(&[0.0]), v(&[1.0])], vec![v(&[2.0]), v(&[0.0])]]),
        );
        assert!(matches!(bad.coefficients(&v(&[0.0])), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn graph_control_sphere_check() {
        let bad = GraphControl::constant(v(&[0.5, 0.5]));
        assert!(matches!(bad.checked(0.0), Err(Error::SphereViolation { .. })));
        let neg = GraphControl::constant(v(&[-0.6, 0.8]));
        assert!(matches!(neg.checked(0.0), Err(Error::SphereViolation { .. })));
        let s = single_h();
        assert!(matches!(
            simulate_graph(&s, &bad, &Vector::zeros(2), 1.0, 0.1),
            Err(Error::SphereViolation { .. })
        ));
    }

    #[test]
    fn pure_impulse_freezes_time() {
        let s = single_h();
        let out = simulate_graph(&s, &GraphControl::constant(v(&[0.0, 1.0])), &Vector::zeros(2), 2.0, 0.1).unwrap();
        assert!(out.t.iter().all(|&t| t == 0.0));
        assert!((out.x.last().unwrap()[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn linear_signal_warp() {
        let sig = ControlSignal::new(0.0, 1.0, |t| v(&[t]), |_| v(&[1.0]));
        let (warp, a) = warp_from_signal(&sig).unwrap();
        assert!((warp.s_end() - 2.0).abs() < 1e-12);
        assert!((warp.s_of_t(0.37) - 0.74).abs() < 1e-12);
        assert!((warp.t_of_s(1.1) - 0.55).abs() < 1e-12);
        let val = a.eval(0.7);
        let h = core::f64::consts::FRAC_1_SQRT_2;
        assert!((val[0] - h).abs() < 1e-14 && (val[1] - h).abs() < 1e-14);
        let back = recover_controls(&a, &warp, &v(&[0.0])).unwrap();
        assert!((back.value(0.8)[0] - 0.8).abs() < 1e-12);
    }

    #[test]
    fn zero_time_component_is_rejected() {
        let a = GraphControl::constant(v(&[0.0, 1.0]));
        let warp = TimeWarp::from_nodes(vec![0.0, 0.0], vec![0.0, 1.0], vec![f64::INFINITY; 2]);
        assert!(matches!(
            recover_controls(&a, &warp, &v(&[0.0])),
            Err(Error::ZeroTimeComponent { .. })
        ));
    }

    #[test]
    fn lifted_pendulum_matches_reduced_rhs() {
        let model = MetricModel::new(1, 1, |q, _| {
            let s = q[0].sin();
            Ok(Matrix::from_row_slice(2, 2, &[1.0, -s, -s, 2.0]))
        });
        let force = ForceModel::new(|q, _, _| Ok(v(&[9.8 * q[0].sin()])), |_, _, _| Ok(Matrix::zeros(1, 1)));
        let sys = lift_mechanical(&model, &force);
        let x = v(&[0.4, -0.3, 0.2]);
        let c = sys.coefficients(&x).unwrap();
        let q = 0.4f64;
        assert!((c.h[0][0][1] + q.sin() * q.cos()).abs() < 1e-6);
        let w = v(&[1.7]);
        let lifted = c.velocity(&w);
        let (dq, dp) = rhs(&model, &force, &ReducedState::new(v(&[0.4]), v(&[-0.3]), v(&[0.2])), &w).unwrap();
        assert!((lifted[0] - dq[0]).abs() < 1e-12);
        assert!((lifted[1] - dp[0]).abs() < 1e-12);
        assert!((lifted[2] - 1.7).abs() < 1e-15);
    }

    #[test]
    fn cone_support_closed_form() {
        // d·y = b w + H w² with H < 0: sup = b²/(4|H|)
        let sys = QuadraticControlSystem::new(
            1,
            1,
            |_| Ok(Vector::zeros(1)),
            |_| Ok(vec![v(&[2.0])]),
            |_| Ok(vec![vec![v(&[-1.0])]]),
        );
        let x = v(&[0.0]);
        assert!((cone_support(&sys, &x, &v(&[1.0])).unwrap() - 1.0).abs() < 1e-14);
        assert!(cone_support(&sys, &x, &v(&[-1.0])).unwrap().is_infinite());
        assert_eq!(quadratic_cone_support(&sys, &x, &v(&[1.0])).unwrap(), 0.0);
    }
}

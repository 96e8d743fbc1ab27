//! Reduced control equations of motion for a system driven by a moving
//! holonomic constraint.
//!
//! With `u(t)` assigned and `w = u̇`, the pair `(q, p)` obeys
//!
//! ```text
//! q̇ = A p + K w
//! ṗ = −½ pᵀ ∂A/∂q p − pᵀ ∂K/∂q w + ½ wᵀ ∂E/∂q w + F⁰ + F¹ w
//! ```
//!
//! which is Hamilton's system for `ℋ = ½ pᵀAp + pᵀKw − ½ wᵀEw` plus the
//! external force.

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
#[allow(unused_imports)] // inherent float methods are missing without std
use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg::fd_step;
use crate::metric::{reduced_blocks, MetricModel, ReducedBlocks};
use crate::ode::{rk4_on_grid, rkf45, uniform_grid, AdaptiveOptions};
use crate::{Matrix, Vector};

/// `(q, p, u)`: reduced coordinates, conjugate momenta and control position.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ReducedState {
    pub q: Vector,
    pub p: Vector,
    pub u: Vector,
}

impl ReducedState {
    pub fn new(q: Vector, p: Vector, u: Vector) -> Self {
        Self { q, p, u }
    }

    pub fn is_finite(&self) -> bool {
        self.q.iter().chain(self.p.iter()).chain(self.u.iter()).all(|x| x.is_finite())
    }

    fn check(&self, model: &MetricModel) -> Result<()> {
        if self.q.len() != model.dim_q() || self.p.len() != model.dim_q() || self.u.len() != model.dim_u() {
            return Err(Error::DimensionError("state does not match the metric model".into()));
        }
        if !self.is_finite() {
            return Err(Error::DomainError("non-finite state".into()));
        }
        Ok(())
    }
}

pub type VecFn = Arc<dyn Fn(&Vector, &Vector, &Vector) -> Result<Vector> + Send + Sync>;
pub type MatFn = Arc<dyn Fn(&Vector, &Vector, &Vector) -> Result<Matrix> + Send + Sync>;
type ScalarFn2 = Arc<dyn Fn(&Vector, &Vector) -> Result<f64> + Send + Sync>;
type GradFn2 = Arc<dyn Fn(&Vector, &Vector) -> Result<(Vector, Vector)> + Send + Sync>;

/// A potential `U(q, u)` with optional analytic gradient.
#[derive(Clone)]
pub struct Potential {
    value: ScalarFn2,
    gradient: Option<GradFn2>,
    step: f64,
}

impl Potential {
    pub fn new<F>(value: F) -> Self
    where
        F: Fn(&Vector, &Vector) -> Result<f64> + Send + Sync + 'static,
    {
        Self {
            value: Arc::new(value),
            gradient: None,
            step: 1e-6,
        }
    }

    /// Analytic gradient returning `(∂U/∂q, ∂U/∂u)`.
    pub fn with_gradient<G>(mut self, gradient: G) -> Self
    where
        G: Fn(&Vector, &Vector) -> Result<(Vector, Vector)> + Send + Sync + 'static,
    {
        self.gradient = Some(Arc::new(gradient));
        self
    }

    pub fn value(&self, q: &Vector, u: &Vector) -> Result<f64> {
        (self.value)(q, u)
    }

    /// `(∂U/∂q, ∂U/∂u)`.
    pub fn gradient(&self, q: &Vector, u: &Vector) -> Result<(Vector, Vector)> {
        if let Some(g) = &self.gradient {
            return g(q, u);
        }
        let mut gq = Vector::zeros(q.len());
        for i in 0..q.len() {
            let h = fd_step(self.step, q[i]);
            let mut qp = q.clone();
            let mut qm = q.clone();
            qp[i] += h;
            qm[i] -= h;
            gq[i] = (self.value(&qp, u)? - self.value(&qm, u)?) / (2.0 * h);
        }
        let mut gu = Vector::zeros(u.len());
        for a in 0..u.len() {
            let h = fd_step(self.step, u[a]);
            let mut up = u.clone();
            let mut um = u.clone();
            up[a] += h;
            um[a] -= h;
            gu[a] = (self.value(q, &up)? - self.value(q, &um)?) / (2.0 * h);
        }
        Ok((gq, gu))
    }
}

impl core::fmt::Debug for Potential {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("Potential")
            .field("analytic_gradient", &self.gradient.is_some())
            .finish()
    }
}

/// External force, affine in the control rate: `F_Q = F⁰(q,p,u) + F¹(q,p,u)·w`.
#[derive(Clone)]
pub struct ForceModel {
    f0: VecFn,
    f1: MatFn,
    potential: Option<Potential>,
}

impl core::fmt::Debug for ForceModel {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("ForceModel")
            .field("potential", &self.potential)
            .finish_non_exhaustive()
    }
}

impl ForceModel {
    pub fn new<F0, F1>(f0: F0, f1: F1) -> Self
    where
        F0: Fn(&Vector, &Vector, &Vector) -> Result<Vector> + Send + Sync + 'static,
        F1: Fn(&Vector, &Vector, &Vector) -> Result<Matrix> + Send + Sync + 'static,
    {
        Self {
            f0: Arc::new(f0),
            f1: Arc::new(f1),
            potential: None,
        }
    }

    /// No external force.
    pub fn zero(dim_q: usize, dim_u: usize) -> Self {
        Self::new(
            move |_, _, _| Ok(Vector::zeros(dim_q)),
            move |_, _, _| Ok(Matrix::zeros(dim_q, dim_u)),
        )
    }

    /// Conservative force `F⁰ = −∂U/∂q`, `F¹ = 0`.
    pub fn conservative(potential: Potential, dim_q: usize, dim_u: usize) -> Self {
        let pot = potential.clone();
        Self {
            f0: Arc::new(move |q, _p, u| Ok(-pot.gradient(q, u)?.0)),
            f1: Arc::new(move |_, _, _| Ok(Matrix::zeros(dim_q, dim_u))),
            potential: Some(potential),
        }
    }

    /// Attaches a potential to an explicitly given force; see
    /// [`ForceModel::potential_violation`] for the consistency check.
    pub fn with_potential(mut self, potential: Potential) -> Self {
        self.potential = Some(potential);
        self
    }

    pub fn potential(&self) -> Option<&Potential> {
        self.potential.as_ref()
    }

    pub fn f0(&self, q: &Vector, p: &Vector, u: &Vector) -> Result<Vector> {
        (self.f0)(q, p, u)
    }

    pub fn f1(&self, q: &Vector, p: &Vector, u: &Vector) -> Result<Matrix> {
        (self.f1)(q, p, u)
    }

    /// Force on the control factor. Taken as `−∂U/∂u` when a potential is
    /// present, zero otherwise.
    pub fn control_force(&self, q: &Vector, u: &Vector) -> Result<Vector> {
        match &self.potential {
            Some(pot) => Ok(-pot.gradient(q, u)?.1),
            None => Ok(Vector::zeros(u.len())),
        }
    }

    /// Largest `|F⁰ + ∂U/∂q|` over the given states; zero without a potential.
    pub fn potential_violation(&self, states: &[ReducedState]) -> Result<f64> {
        let Some(pot) = &self.potential else {
            return Ok(0.0);
        };
        let mut worst: f64 = 0.0;
        for s in states {
            let f0 = self.f0(&s.q, &s.p, &s.u)?;
            let (gq, _) = pot.gradient(&s.q, &s.u)?;
            worst = worst.max((f0 + gq).amax());
        }
        Ok(worst)
    }

    /// Errors when the attached potential disagrees with `F⁰` beyond 1e-8.
    pub fn check_potential(&self, states: &[ReducedState]) -> Result<()> {
        let v = self.potential_violation(states)?;
        if v > 1e-8 {
            return Err(Error::InvalidInput(alloc::format!("F⁰ differs from −∂U/∂q by {v:e}")));
        }
        Ok(())
    }
}

type SignalFn = Arc<dyn Fn(f64) -> Vector + Send + Sync>;

/// A piecewise-smooth control path `t ↦ u(t)` on `[t0, t1]` with its rate.
#[derive(Clone)]
pub struct ControlSignal {
    value: SignalFn,
    rate: SignalFn,
    accel: Option<SignalFn>,
    t0: f64,
    t1: f64,
}

impl core::fmt::Debug for ControlSignal {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("ControlSignal")
            .field("t0", &self.t0)
            .field("t1", &self.t1)
            .field("has_accel", &self.accel.is_some())
            .finish()
    }
}

impl ControlSignal {
    pub fn new<V, D>(t0: f64, t1: f64, value: V, rate: D) -> Self
    where
        V: Fn(f64) -> Vector + Send + Sync + 'static,
        D: Fn(f64) -> Vector + Send + Sync + 'static,
    {
        assert!(t1 > t0, "empty signal domain");
        Self {
            value: Arc::new(value),
            rate: Arc::new(rate),
            accel: None,
            t0,
            t1,
        }
    }

    /// Supplies `ü(t)`; otherwise it is differenced from the rate.
    pub fn with_accel<A>(mut self, accel: A) -> Self
    where
        A: Fn(f64) -> Vector + Send + Sync + 'static,
    {
        self.accel = Some(Arc::new(accel));
        self
    }

    /// `u ≡ u0` on `[t0, t1]`.
    pub fn constant(u0: Vector, t0: f64, t1: f64) -> Self {
        let m = u0.len();
        Self::new(t0, t1, move |_| u0.clone(), move |_| Vector::zeros(m)).with_accel(move |_| Vector::zeros(m))
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn t1(&self) -> f64 {
        self.t1
    }

    pub fn value(&self, t: f64) -> Vector {
        (self.value)(t)
    }

    pub fn rate(&self, t: f64) -> Vector {
        (self.rate)(t)
    }

    pub fn accel(&self, t: f64) -> Vector {
        match &self.accel {
            Some(a) => a(t),
            None => {
                let h = 1e-5 * (self.t1 - self.t0);
                (self.rate(t + h) - self.rate(t - h)) / (2.0 * h)
            }
        }
    }

    /// Restricts (or extends) the nominal domain.
    pub fn on_interval(mut self, t0: f64, t1: f64) -> Self {
        assert!(t1 > t0);
        self.t0 = t0;
        self.t1 = t1;
        self
    }

    /// Largest mismatch between `rate` and a central difference of `value`
    /// at `n` deterministic interior points, relative to `max(1, |rate|)`.
    pub fn rate_defect(&self, n: usize) -> f64 {
        let span = self.t1 - self.t0;
        let h = 1e-6 * span;
        let mut worst: f64 = 0.0;
        for k in 0..n {
            // golden-ratio sequence keeps the points away from the ends
            let frac = 0.05 + 0.9 * ((k as f64 + 1.0) * 0.618_033_988_749_895).fract();
            let t = self.t0 + frac * span;
            let fd = (self.value(t + h) - self.value(t - h)) / (2.0 * h);
            let r = self.rate(t);
            worst = worst.max((fd - &r).amax() / r.amax().max(1.0));
        }
        worst
    }

    /// Fails when [`ControlSignal::rate_defect`] exceeds 1e-4.
    pub fn check_rate(&self, n: usize) -> Result<()> {
        let d = self.rate_defect(n);
        if d > 1e-4 {
            return Err(Error::InvalidInput(alloc::format!("signal rate disagrees with its value by {d:e}")));
        }
        Ok(())
    }
}

/// Integration scheme for [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepSpec {
    /// Classical RK4 with a fixed step.
    Fixed { dt: f64 },
    /// Runge–Kutta–Fehlberg 4(5).
    Adaptive(AdaptiveOptions),
}

impl StepSpec {
    pub fn rk4(dt: f64) -> Self {
        StepSpec::Fixed { dt }
    }

    pub fn adaptive() -> Self {
        StepSpec::Adaptive(AdaptiveOptions::default())
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IntegratorMeta {
    pub method: String,
    pub step: f64,
    pub accepted: usize,
    pub rejected: usize,
}

/// A sampled solution of the reduced equations.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<ReducedState>,
    /// Control rate `w = u̇` at each sample.
    pub rates: Vec<Vector>,
    pub meta: IntegratorMeta,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<&ReducedState> {
        self.states.last()
    }

    /// Builds a trajectory from a prescribed path `q(t)` and its velocity,
    /// filling momenta by the Legendre map `p = G1 q̇ + G12 u̇`.
    pub fn from_path<Q, V>(model: &MetricModel, signal: &ControlSignal, times: &[f64], path: Q, velocity: V) -> Result<Self>
    where
        Q: Fn(f64) -> Vector,
        V: Fn(f64) -> Vector,
    {
        let mut states = Vec::with_capacity(times.len());
        let mut rates = Vec::with_capacity(times.len());
        for &t in times {
            let q = path(t);
            let u = signal.value(t);
            let w = signal.rate(t);
            let g = model.metric_at(&q, &u)?;
            let n = model.dim_q();
            let p = g.view((0, 0), (n, n)) * velocity(t) + g.view((0, n), (n, model.dim_u())) * &w;
            states.push(ReducedState::new(q, p, u));
            rates.push(w);
        }
        Ok(Self {
            times: times.to_vec(),
            states,
            rates,
            meta: IntegratorMeta {
                method: "prescribed".into(),
                step: 0.0,
                accepted: 0,
                rejected: 0,
            },
        })
    }

    /// Concatenates `next` onto `self`, dropping its duplicated first sample.
    pub fn append(&mut self, next: Trajectory) {
        let skip = usize::from(!self.times.is_empty());
        self.times.extend(next.times.into_iter().skip(skip));
        self.states.extend(next.states.into_iter().skip(skip));
        self.rates.extend(next.rates.into_iter().skip(skip));
        self.meta.accepted += next.meta.accepted;
        self.meta.rejected += next.meta.rejected;
    }
}

fn rhs_from_blocks(b: &ReducedBlocks, force: &ForceModel, state: &ReducedState, w: &Vector) -> Result<(Vector, Vector)> {
    let p = &state.p;
    let dq = &b.a * p + &b.k * w;
    let n = b.dim_q();
    let mut dp = force.f0(&state.q, p, &state.u)? + force.f1(&state.q, p, &state.u)? * w;
    for i in 0..n {
        let quad_a = p.dot(&(&b.da_dq[i] * p));
        let mixed = p.dot(&(&b.dk_dq[i] * w));
        let quad_e = w.dot(&(&b.de_dq[i] * w));
        dp[i] += -0.5 * quad_a - mixed + 0.5 * quad_e;
    }
    Ok((dq, dp))
}

/// Right-hand side `(q̇, ṗ)` of the reduced equations at control rate `w`.
pub fn rhs(model: &MetricModel, force: &ForceModel, state: &ReducedState, w: &Vector) -> Result<(Vector, Vector)> {
    state.check(model)?;
    if w.len() != model.dim_u() {
        return Err(Error::DimensionError("control rate dimension".into()));
    }
    let b = reduced_blocks(model, &state.q, &state.u)?;
    rhs_from_blocks(&b, force, state, w)
}

/// `ℋ = ½ pᵀAp + pᵀKw − ½ wᵀEw`.
pub fn reduced_hamiltonian(model: &MetricModel, state: &ReducedState, w: &Vector) -> Result<f64> {
    state.check(model)?;
    let (g, g_inv) = model.metric_and_inverse(&state.q, &state.u)?;
    let n = model.dim_q();
    let m = model.dim_u();
    let a = crate::linalg::spd_inverse(&g.view((0, 0), (n, n)).into_owned(), "G1")?;
    let e = crate::linalg::spd_inverse(&g_inv.view((n, n), (m, m)).into_owned(), "(G⁻¹)₂")?;
    let k = g_inv.view((0, n), (n, m)) * &e;
    let p = &state.p;
    Ok(0.5 * p.dot(&(&a * p)) + p.dot(&(&k * w)) - 0.5 * w.dot(&(&e * w)))
}

fn pack(q: &Vector, p: &Vector) -> Vector {
    let n = q.len();
    let mut y = Vector::zeros(2 * n);
    y.rows_mut(0, n).copy_from(q);
    y.rows_mut(n, n).copy_from(p);
    y
}

/// Integrates `(q, p)` driven by `(u, u̇)` from `signal` over its domain.
pub fn integrate(
    model: &MetricModel,
    force: &ForceModel,
    signal: &ControlSignal,
    initial: &ReducedState,
    step: StepSpec,
) -> Result<Trajectory> {
    initial.check(model)?;
    let t0 = signal.t0();
    let t1 = signal.t1();
    let u0 = signal.value(t0);
    if u0.len() != model.dim_u() {
        return Err(Error::DimensionError("signal dimension".into()));
    }
    let tol = 1e-12 * u0.amax().max(1.0);
    if (&u0 - &initial.u).amax() > tol {
        return Err(Error::InitialControlMismatch {
            state: initial.u.iter().copied().collect(),
            signal: u0.iter().copied().collect(),
        });
    }
    let n = model.dim_q();
    let f = |t: f64, y: &Vector| -> Result<Vector> {
        let u = signal.value(t);
        let w = signal.rate(t);
        let st = ReducedState::new(y.rows(0, n).into_owned(), y.rows(n, n).into_owned(), u);
        let (dq, dp) = rhs(model, force, &st, &w)?;
        Ok(pack(&dq, &dp))
    };
    let y0 = pack(&initial.q, &initial.p);
    let (times, ys, meta) = match step {
        StepSpec::Fixed { dt } => {
            if !(dt > 0.0) {
                return Err(Error::InvalidInput("dt must be positive".into()));
            }
            let grid = uniform_grid(t0, t1, dt);
            let ys = rk4_on_grid(f, &grid, &y0)?;
            let steps = grid.len() - 1;
            (
                grid,
                ys,
                IntegratorMeta {
                    method: "rk4".into(),
                    step: dt,
                    accepted: steps,
                    rejected: 0,
                },
            )
        }
        StepSpec::Adaptive(opts) => {
            let out = rkf45(f, t0, t1, &y0, &opts)?;
            (
                out.times,
                out.states,
                IntegratorMeta {
                    method: "rkf45".into(),
                    step: opts.initial_step,
                    accepted: out.accepted,
                    rejected: out.rejected,
                },
            )
        }
    };
    let mut states = Vec::with_capacity(times.len());
    let mut rates = Vec::with_capacity(times.len());
    for (t, y) in times.iter().zip(ys) {
        let st = ReducedState::new(y.rows(0, n).into_owned(), y.rows(n, n).into_owned(), signal.value(*t));
        if !st.is_finite() {
            return Err(Error::DomainError(alloc::format!("state blew up at t = {t}")));
        }
        states.push(st);
        rates.push(signal.rate(*t));
    }
    Ok(Trajectory {
        times,
        states,
        rates,
        meta,
    })
}

/// Control momentum and the constraint reaction that realizes the motion.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintReaction {
    /// `℘ = E w − Kᵀ p`
    pub wp: Vector,
    /// `r = ℘̇ − (X_H + F)_℘`
    pub reaction: Vector,
    /// `℘̇` by the chain rule.
    pub wp_rate: Vector,
}

/// Reaction on the control factor needed to keep `u(t)` on its prescribed path.
///
/// `w = u̇` and `dw = ü` at the sample time. The reaction has no
/// `Q`-components; that identity is checked in debug builds.
pub fn constraint_reaction(
    model: &MetricModel,
    force: &ForceModel,
    state: &ReducedState,
    w: &Vector,
    dw: &Vector,
) -> Result<ConstraintReaction> {
    state.check(model)?;
    let b = reduced_blocks(model, &state.q, &state.u)?;
    let (dq, dp) = rhs_from_blocks(&b, force, state, w)?;
    let p = &state.p;
    let n = model.dim_q();
    let m = model.dim_u();
    let wp = &b.e * w - b.k.transpose() * p;

    let mut wp_rate = &b.e * dw - b.k.transpose() * &dp;
    for i in 0..n {
        wp_rate += (&b.de_dq[i] * w - b.dk_dq[i].transpose() * p) * dq[i];
    }
    for a in 0..m {
        wp_rate += (&b.de_du[a] * w - b.dk_du[a].transpose() * p) * w[a];
    }

    // Hamiltonian vector field of ½ Pᵀ G⁻¹ P on the control factor: ½ Vᵀ ∂G/∂uᵅ V
    let parts = model.metric_partials(&state.q, &state.u)?;
    let vel = pack(&dq, w);
    let mut ham_u = Vector::zeros(m);
    for a in 0..m {
        ham_u[a] = 0.5 * vel.dot(&(&parts.du[a] * &vel));
    }
    let reaction = &wp_rate - ham_u - force.control_force(&state.q, &state.u)?;

    #[cfg(debug_assertions)]
    {
        let f_q = force.f0(&state.q, p, &state.u)? + force.f1(&state.q, p, &state.u)? * w;
        for i in 0..n {
            let full = 0.5 * vel.dot(&(&parts.dq[i] * &vel)) + f_q[i];
            let scale = full.abs().max(dp[i].abs()).max(1.0);
            debug_assert!(
                (full - dp[i]).abs() <= 1e-6 * scale,
                "nonzero Q-component of the constraint reaction: {}",
                full - dp[i]
            );
        }
    }
    Ok(ConstraintReaction { wp, reaction, wp_rate })
}

/// Integral of `L = ½ (q̇, u̇)ᵀ G (q̇, u̇) − U(q, u)` along `path`, by composite
/// Simpson quadrature on the path's time grid. `q̇` is recovered as `A p + K w`.
pub fn action_functional(model: &MetricModel, force: &ForceModel, signal: &ControlSignal, path: &Trajectory) -> Result<f64> {
    let pot = force.potential().ok_or(Error::MissingPotential)?;
    if path.len() < 2 {
        return Ok(0.0);
    }
    let n = model.dim_q();
    let m = model.dim_u();
    let mut lag = Vec::with_capacity(path.len());
    for (t, s) in path.times.iter().zip(&path.states) {
        let w = signal.rate(*t);
        let (g, g_inv) = model.metric_and_inverse(&s.q, &s.u)?;
        let a = crate::linalg::spd_inverse(&g.view((0, 0), (n, n)).into_owned(), "G1")?;
        let e = crate::linalg::spd_inverse(&g_inv.view((n, n), (m, m)).into_owned(), "(G⁻¹)₂")?;
        let k = g_inv.view((0, n), (n, m)) * &e;
        let v = &a * &s.p + &k * &w;
        let vel = pack(&v, &w);
        lag.push(0.5 * vel.dot(&(&g * &vel)) - pot.value(&s.q, &s.u)?);
    }
    Ok(simpson(&path.times, &lag))
}

/// Composite Simpson rule on a possibly non-uniform grid. An odd trailing
/// interval is integrated with the quadratic through the last three nodes.
pub fn simpson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len();
    assert_eq!(n, y.len());
    if n < 2 {
        return 0.0;
    }
    if n == 2 {
        return 0.5 * (x[1] - x[0]) * (y[0] + y[1]);
    }
    let mut total = 0.0;
    let mut i = 0;
    while i + 2 < n {
        let h0 = x[i + 1] - x[i];
        let h1 = x[i + 2] - x[i + 1];
        let hs = h0 + h1;
        total += hs / 6.0 * (y[i] * (2.0 - h1 / h0) + y[i + 1] * hs * hs / (h0 * h1) + y[i + 2] * (2.0 - h0 / h1));
        i += 2;
    }
    if i + 1 < n {
        // last single interval [x_{n-2}, x_{n-1}] from the parabola through the last three nodes
        let (x0, x1, x2) = (x[n - 3], x[n - 2], x[n - 1]);
        let (y0, y1, y2) = (y[n - 3], y[n - 2], y[n - 1]);
        let h0 = x1 - x0;
        let h1 = x2 - x1;
        total += h1 / 6.0 * (3.0 - h1 / (h0 + h1)) * y2 + h1 / 6.0 * (3.0 + h1 / h0) * y1 - h1 * h1 * h1 / (6.0 * h0 * (h0 + h1)) * y0;
    }
    total
}

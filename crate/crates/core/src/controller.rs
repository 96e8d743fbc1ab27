//! Oscillatory controls that realize vibration tuples: open-loop signal
//! synthesis and amplitude-modulated feedback around a cone selection.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{PI, SQRT_2};
#[allow(unused_imports)] // inherent float methods are missing without std
use num_traits::Float;

use crate::dynamics::{integrate, ControlSignal, ForceModel, ReducedState, StepSpec, Trajectory};
use crate::error::{Error, Result};
use crate::interp::adaptive_quad;
use crate::linalg::lstsq;
use crate::metric::{reduced_blocks, MetricModel};
use crate::reparam::cone_system;
use crate::stability::{place_poles, selection_linearization, solve_vibration_tuple, RankTestOptions, VibrationTuple};
use crate::{Matrix, Vector};

/// Two frequencies whose ratio lies this close to `p/q` (`p, q ≤ 8`) count as resonant.
pub const RESONANCE_TOL: f64 = 1e-3;

/// Largest numerator/denominator of the excluded rational ratios.
pub const RESONANCE_ORDER: u32 = 8;

/// Default ratio between the slowest vibration and the system's natural frequency.
pub const DEFAULT_SEPARATION: f64 = 20.0;

/// Samples per vibration period required of fixed-step integrators.
pub const STEPS_PER_PERIOD: f64 = 50.0;

/// Returns the offending pair if two frequencies are nearly commensurate.
pub fn resonant_pair(omegas: &[f64]) -> Option<(f64, f64)> {
    for (i, &a) in omegas.iter().enumerate() {
        for &b in &omegas[i + 1..] {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            let r = hi / lo;
            for q in 1..=RESONANCE_ORDER {
                for p in 1..=RESONANCE_ORDER {
                    if (r - f64::from(p) / f64::from(q)).abs() <= RESONANCE_TOL {
                        return Some((a, b));
                    }
                }
            }
        }
    }
    None
}

/// A vibration tuple together with the frequencies and phases that realize it.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct VibrationPlan {
    pub tuple: VibrationTuple,
    pub omegas: Vec<f64>,
    pub phases: Vec<f64>,
}

impl VibrationPlan {
    /// # Errors
    /// `DimensionError` on length mismatch, `InvalidInput` unless the
    /// frequencies are positive and strictly increasing, `ResonantPlan` for
    /// nearly commensurate pairs.
    pub fn new(tuple: VibrationTuple, omegas: Vec<f64>, phases: Vec<f64>) -> Result<Self> {
        if omegas.len() != tuple.k() || phases.len() != tuple.k() {
            return Err(Error::DimensionError("one frequency and one phase per tuple vector".into()));
        }
        if omegas.iter().any(|w| !(w.is_finite() && *w > 0.0)) || omegas.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput("frequencies must be positive and strictly increasing".into()));
        }
        if phases.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidInput("phases must be finite".into()));
        }
        if let Some((a, b)) = resonant_pair(&omegas) {
            return Err(Error::ResonantPlan(a, b));
        }
        Ok(Self { tuple, omegas, phases })
    }

    /// One vector at one frequency, zero phase.
    pub fn single(w: Vector, omega: f64) -> Result<Self> {
        Self::new(VibrationTuple::single(w), vec![omega], vec![0.0])
    }

    pub fn omega_min(&self) -> f64 {
        self.omegas[0]
    }

    pub fn omega_max(&self) -> f64 {
        self.omegas[self.omegas.len() - 1]
    }

    /// Requires `ω_min ≥ factor · natural_frequency`.
    pub fn check_separation(&self, natural_frequency: f64, factor: f64) -> Result<()> {
        if self.omega_min() < factor * natural_frequency {
            return Err(Error::InvalidInput(alloc::format!(
                "slowest vibration {} rad/s is below {factor} × natural frequency {natural_frequency}",
                self.omega_min()
            )));
        }
        Ok(())
    }

    /// Largest fixed step allowed by the vibration period.
    pub fn max_step(&self) -> f64 {
        2.0 * PI / self.omega_max() / STEPS_PER_PERIOD
    }
}

/// `u(t) = ū + Σ_ℓ (√2/ω_ℓ) w_ℓ sin(ω_ℓ t + φ_ℓ)` on `[t0, t1]`, so that the
/// long-window average of `u̇u̇ᵀ` is `Σ_ℓ w_ℓ w_ℓᵀ`.
pub fn synthesize_signal(plan: &VibrationPlan, u_bar: &Vector, t0: f64, t1: f64) -> Result<ControlSignal> {
    if plan.tuple.dim_u() != u_bar.len() {
        return Err(Error::DimensionError("tuple and ū differ in dimension".into()));
    }
    if !(t1 > t0) {
        return Err(Error::InvalidInput("empty horizon".into()));
    }
    let terms: Vec<(Vector, f64, f64)> = plan
        .tuple
        .ws
        .iter()
        .zip(&plan.omegas)
        .zip(&plan.phases)
        .map(|((w, &om), &ph)| (w.clone(), om, ph))
        .collect();
    let (tv, tr, ta) = (terms.clone(), terms.clone(), terms);
    let (ub, m) = (u_bar.clone(), u_bar.len());
    Ok(ControlSignal::new(
        t0,
        t1,
        move |t| {
            tv.iter()
                .fold(ub.clone(), |acc, (w, om, ph)| acc + w * (SQRT_2 / om * (om * t + ph).sin()))
        },
        move |t| {
            tr.iter()
                .fold(Vector::zeros(m), |acc, (w, om, ph)| acc + w * (SQRT_2 * (om * t + ph).cos()))
        },
    )
    .with_accel(move |t| {
        ta.iter()
            .fold(Vector::zeros(m), |acc, (w, om, ph)| acc - w * (SQRT_2 * om * (om * t + ph).sin()))
    }))
}

/// `(1/T) ∫ u̇ u̇ᵀ dt` over `[t0, t0 + window]`, by adaptive quadrature.
pub fn window_average_outer(signal: &ControlSignal, t0: f64, window: f64) -> Matrix {
    let m = signal.value(t0).len();
    let pieces = ((window * 64.0).ceil() as usize).clamp(1, 1 << 16);
    let h = window / pieces as f64;
    Matrix::from_fn(m, m, |a, b| {
        let mut f = |t: f64| {
            let r = signal.rate(t);
            r[a] * r[b]
        };
        (0..pieces)
            .map(|k| adaptive_quad(&mut f, t0 + k as f64 * h, t0 + (k + 1) as f64 * h, 1e-12, 8))
            .sum::<f64>()
            / window
    })
}

/// How far a run strays from the reference point.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ContainmentMetrics {
    /// `sup_t |q(t) − q̄|∞`
    pub sup_q_deviation: f64,
    /// `sup_t |p(t)|∞`
    pub sup_momentum: f64,
    /// First sample time with `|q − q̄|∞ > exit_radius`, if any.
    pub exit_time: Option<f64>,
    pub exit_radius: f64,
}

impl ContainmentMetrics {
    pub fn from_trajectory(traj: &Trajectory, q_bar: &Vector, exit_radius: f64) -> Self {
        let mut out = Self {
            sup_q_deviation: 0.0,
            sup_momentum: 0.0,
            exit_time: None,
            exit_radius,
        };
        for (t, s) in traj.times.iter().zip(&traj.states) {
            let dq = (&s.q - q_bar).amax();
            out.sup_q_deviation = out.sup_q_deviation.max(dq);
            out.sup_momentum = out.sup_momentum.max(s.p.amax());
            if out.exit_time.is_none() && dq > exit_radius {
                out.exit_time = Some(*t);
            }
        }
        out
    }
}

/// Settings of [`run_open_loop`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpenLoopOptions {
    pub horizon: f64,
    /// Fixed RK4 step; must resolve the fastest vibration.
    pub dt: f64,
    pub exit_radius: f64,
}

impl Default for OpenLoopOptions {
    fn default() -> Self {
        Self {
            horizon: 20.0,
            dt: 1e-4,
            exit_radius: PI / 2.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct OpenLoopRun {
    pub trajectory: Trajectory,
    pub metrics: ContainmentMetrics,
}

/// Integrates the system driven by the synthesized plan around `ū` from
/// `initial` (whose `u` must equal the signal at `t = 0`, i.e. `ū` for zero
/// phases), measuring deviations from `q̄`.
pub fn run_open_loop(
    model: &MetricModel,
    force: &ForceModel,
    plan: &VibrationPlan,
    initial: &ReducedState,
    q_bar: &Vector,
    u_bar: &Vector,
    opts: &OpenLoopOptions,
) -> Result<OpenLoopRun> {
    if opts.dt > plan.max_step() * (1.0 + 1e-12) {
        return Err(Error::InvalidInput(alloc::format!(
            "step {} exceeds (2π/ω_max)/{STEPS_PER_PERIOD} = {}",
            opts.dt,
            plan.max_step()
        )));
    }
    if q_bar.len() != model.dim_q() {
        return Err(Error::DimensionError("q̄ dimension".into()));
    }
    let signal = synthesize_signal(plan, u_bar, 0.0, opts.horizon)?;
    let trajectory = integrate(model, force, &signal, initial, StepSpec::rk4(opts.dt))?;
    let metrics = ContainmentMetrics::from_trajectory(&trajectory, q_bar, opts.exit_radius);
    log::debug!(
        "open loop: sup|q−q̄| = {:.3e}, sup|p| = {:.3e}, exit = {:?}",
        metrics.sup_q_deviation,
        metrics.sup_momentum,
        metrics.exit_time
    );
    Ok(OpenLoopRun { trajectory, metrics })
}

/// How the cone variable `ξ` is turned into a vibration tuple.
#[derive(Debug, Clone, PartialEq)]
pub enum ConeSelection {
    /// One degree of freedom, one control: the realized force is `sign · ξ`
    /// with `ξ ≥ 0`, obtained from `w² = sign·ξ / (½ ∂E/∂q)`.
    Scalar { sign: f64 },
    /// `ξ` is the flattened k-tuple itself; the force is `½ Σ wᵀ∂E w`.
    Tuple { k: usize },
}

impl ConeSelection {
    /// The pendulum's choice `γ = −ξ`.
    pub fn pendulum() -> Self {
        Self::Scalar { sign: -1.0 }
    }

    /// The bead's choice `γ = ξ`.
    pub fn bead() -> Self {
        Self::Scalar { sign: 1.0 }
    }

    pub fn dim_xi(&self, dim_u: usize) -> usize {
        match self {
            Self::Scalar { .. } => 1,
            Self::Tuple { k } => k * dim_u,
        }
    }

    /// Projects `ξ` onto the admissible set; reports whether it moved.
    pub fn clamp(&self, xi: &Vector) -> (Vector, bool) {
        match self {
            Self::Scalar { .. } if xi[0] < 0.0 => (Vector::zeros(1), true),
            _ => (xi.clone(), false),
        }
    }

    /// Vibration tuple realizing `ξ` at `q` (frozen control `ū`), and whether
    /// realization was impossible (no authority or wrong sign), in which case
    /// the zero tuple is returned.
    pub fn realize(&self, de_dq: &[Matrix], xi: &Vector, dim_u: usize) -> (VibrationTuple, bool) {
        match self {
            Self::Scalar { sign } => {
                let authority = 0.5 * de_dq[0][(0, 0)];
                let w2 = sign * xi[0] / authority;
                if authority.abs() < 1e-12 || !(w2 >= 0.0) || !w2.is_finite() {
                    (VibrationTuple::single(Vector::zeros(1)), xi[0] != 0.0)
                } else {
                    (VibrationTuple::single(Vector::from_element(1, w2.sqrt())), false)
                }
            }
            Self::Tuple { k } => {
                let ws = (0..*k).map(|l| xi.rows(l * dim_u, dim_u).into_owned()).collect();
                (VibrationTuple { ws }, false)
            }
        }
    }
}

/// `½ Σ_ℓ w_ℓᵀ ∂E/∂qⁱ w_ℓ`.
pub fn vibration_force(de_dq: &[Matrix], tuple: &VibrationTuple) -> Vector {
    Vector::from_fn(de_dq.len(), |i, _| {
        0.5 * tuple.ws.iter().map(|w| w.dot(&(&de_dq[i] * w))).sum::<f64>()
    })
}

/// Settings of [`run_feedback`].
#[derive(Debug, Clone, PartialEq)]
pub struct FeedbackOptions {
    /// Vibration frequency; the amplitude is updated every `2π/ω`.
    pub omega: f64,
    /// Closed-loop poles of the linearization (default: all at −1).
    pub poles: Option<Vec<f64>>,
    pub horizon: f64,
    /// Fixed RK4 step (default `(2π/ω)/50`).
    pub dt: Option<f64>,
    /// When given, `ω` must be at least 20 times this frequency.
    pub natural_frequency: Option<f64>,
}

impl Default for FeedbackOptions {
    fn default() -> Self {
        Self {
            omega: 200.0,
            poles: None,
            horizon: 20.0,
            dt: None,
            natural_frequency: None,
        }
    }
}

/// Final errors and bookkeeping of a feedback run.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FeedbackMetrics {
    /// `|q(T) − q̄|∞`
    pub final_q_error: f64,
    /// `|p(T)|∞`
    pub final_momentum: f64,
    pub epochs: usize,
    /// Epochs in which `ξ` was clamped or could not be realized.
    pub saturated_epochs: usize,
    /// The equilibrium value of the cone variable.
    pub xi_bar: Vec<f64>,
    /// Feedback gain `K` (`ξ = ξ̄ − K (q − q̄, p)`), row-major.
    pub gain: Vec<Vec<f64>>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct FeedbackRun {
    pub trajectory: Trajectory,
    pub metrics: FeedbackMetrics,
    /// Cone variable applied in each epoch.
    pub xi_history: Vec<Vector>,
}

fn selection_force(model: &MetricModel, selection: &ConeSelection, q: &Vector, u_bar: &Vector, xi: &Vector) -> Result<Vector> {
    let b = reduced_blocks(model, q, u_bar)?;
    let (tuple, _) = selection.realize(&b.de_dq, xi, model.dim_u());
    Ok(vibration_force(&b.de_dq, &tuple))
}

/// Cone value `ξ̄` that balances the forces at `(q̄, 0, ū)`.
pub fn equilibrium_xi(
    model: &MetricModel,
    force: &ForceModel,
    selection: &ConeSelection,
    q_bar: &Vector,
    u_bar: &Vector,
) -> Result<Vector> {
    let n = model.dim_q();
    let f0 = force.f0(q_bar, &Vector::zeros(n), u_bar)?;
    match selection {
        ConeSelection::Scalar { sign } => {
            if n != 1 || model.dim_u() != 1 {
                return Err(Error::DimensionError("scalar selection needs N = M = 1".into()));
            }
            let xi = -sign * f0[0];
            if xi < 0.0 {
                return Err(Error::SelectionOutsideCone { violation: -xi });
            }
            Ok(Vector::from_element(1, xi))
        }
        ConeSelection::Tuple { k } => {
            let tuple = solve_vibration_tuple(model, force, q_bar, u_bar, *k, &RankTestOptions::default())?;
            let m = model.dim_u();
            let mut xi = Vector::zeros(k * m);
            for (l, w) in tuple.ws.iter().enumerate() {
                xi.rows_mut(l * m, m).copy_from(w);
            }
            // polish with a few Gauss–Newton steps on the realized force
            for _ in 0..5 {
                let r = &f0 + selection_force(model, selection, q_bar, u_bar, &xi)?;
                if r.amax() < 1e-14 {
                    break;
                }
                let j = crate::linalg::fd_jacobian(|x| selection_force(model, selection, q_bar, u_bar, x), &xi, 1e-7)?;
                xi -= lstsq(&j, &r);
            }
            Ok(xi)
        }
    }
}

/// Linearization `(A, B)` of the averaged system at `(q̄, 0)` under the selection.
pub fn feedback_linearization(
    model: &MetricModel,
    force: &ForceModel,
    selection: &ConeSelection,
    q_bar: &Vector,
    u_bar: &Vector,
) -> Result<(crate::stability::LinearPair, Vector)> {
    let n = model.dim_q();
    let xi_bar = equilibrium_xi(model, force, selection, q_bar, u_bar)?;
    let system = cone_system(model, force, u_bar);
    let mut x_bar = Vector::zeros(2 * n);
    x_bar.rows_mut(0, n).copy_from(q_bar);
    let gamma = |x: &Vector, xi: &Vector| -> Result<Vector> {
        let q = x.rows(0, n).into_owned();
        let mut out = Vector::zeros(2 * n);
        out.rows_mut(n, n).copy_from(&selection_force(model, selection, &q, u_bar, xi)?);
        Ok(out)
    };
    let pair = selection_linearization(&system, gamma, &x_bar, &xi_bar)?;
    Ok((pair, xi_bar))
}

/// Stabilizes `(q̄, 0, ū)` by pole placement on the selection linearization,
/// realizing the commanded cone value through the vibration amplitude.
///
/// Every epoch `Δ = 2π/ω` the cone variable is set to
/// `ξ = clamp(ξ̄ − K (q − q̄, p))` and the control runs one full period of
/// `u = ū + Σ_ℓ (√2/(ℓω)) w_ℓ(ξ) sin(ℓω (t − t_e))`, so `u` returns to `ū`
/// at every epoch boundary.
pub fn run_feedback(
    model: &MetricModel,
    force: &ForceModel,
    selection: &ConeSelection,
    q_bar: &Vector,
    u_bar: &Vector,
    initial: &ReducedState,
    opts: &FeedbackOptions,
) -> Result<FeedbackRun> {
    let n = model.dim_q();
    let m = model.dim_u();
    if !(opts.omega > 0.0 && opts.horizon > 0.0) {
        return Err(Error::InvalidInput("ω and the horizon must be positive".into()));
    }
    if let Some(nf) = opts.natural_frequency {
        if opts.omega < DEFAULT_SEPARATION * nf {
            return Err(Error::InvalidInput(alloc::format!(
                "ω = {} is below {DEFAULT_SEPARATION} × natural frequency {nf}",
                opts.omega
            )));
        }
    }
    if (&initial.u - u_bar).amax() > 1e-12 * u_bar.amax().max(1.0) {
        return Err(Error::InitialControlMismatch {
            state: initial.u.iter().copied().collect(),
            signal: u_bar.iter().copied().collect(),
        });
    }
    let (pair, xi_bar) = feedback_linearization(model, force, selection, q_bar, u_bar)?;
    let poles = opts.poles.clone().unwrap_or_else(|| vec![-1.0; 2 * n]);
    let gain = place_poles(&pair.a, &pair.b, &poles)?;

    let period = 2.0 * PI / opts.omega;
    let dt = opts.dt.unwrap_or(period / STEPS_PER_PERIOD);
    if dt > period / STEPS_PER_PERIOD * (1.0 + 1e-12) {
        return Err(Error::InvalidInput("step does not resolve the vibration period".into()));
    }
    let epochs = (opts.horizon / period).ceil() as usize;
    let mut state = initial.clone();
    let mut trajectory: Option<Trajectory> = None;
    let mut xi_history = Vec::with_capacity(epochs);
    let mut saturated = 0;
    let mut warnings = Vec::new();
    for e in 0..epochs {
        let te = e as f64 * period;
        let t_end = (te + period).min(opts.horizon);
        let mut x = Vector::zeros(2 * n);
        x.rows_mut(0, n).copy_from(&(&state.q - q_bar));
        x.rows_mut(n, n).copy_from(&state.p);
        let (xi, clamped) = selection.clamp(&(&xi_bar - &gain * x));
        let b = reduced_blocks(model, &state.q, u_bar)?;
        let (tuple, unrealizable) = selection.realize(&b.de_dq, &xi, m);
        if clamped || unrealizable {
            saturated += 1;
            log::warn!("cone selection saturated at t = {te:.4} (ξ = {:?})", xi.as_slice());
        }
        let ws = tuple.ws;
        let (wv, wr, ub, om) = (ws.clone(), ws, u_bar.clone(), opts.omega);
        let signal = ControlSignal::new(
            te,
            t_end,
            move |t| {
                wv.iter().enumerate().fold(ub.clone(), |acc, (l, w)| {
                    let o = om * (l + 1) as f64;
                    acc + w * (SQRT_2 / o * (o * (t - te)).sin())
                })
            },
            move |t| {
                wr.iter().enumerate().fold(Vector::zeros(m), |acc, (l, w)| {
                    let o = om * (l + 1) as f64;
                    acc + w * (SQRT_2 * (o * (t - te)).cos())
                })
            },
        );
        state.u = u_bar.clone();
        let piece = integrate(model, force, &signal, &state, StepSpec::rk4(dt))?;
        state = piece.last().cloned().expect("nonempty piece");
        xi_history.push(xi);
        match trajectory.as_mut() {
            Some(t) => t.append(piece),
            None => trajectory = Some(piece),
        }
    }
    if saturated > 0 {
        warnings.push(alloc::format!("ConeClampSaturated in {saturated} of {epochs} epochs"));
    }
    let trajectory = trajectory.expect("at least one epoch");
    let last = trajectory.last().expect("nonempty trajectory");
    let metrics = FeedbackMetrics {
        final_q_error: (&last.q - q_bar).amax(),
        final_momentum: last.p.amax(),
        epochs,
        saturated_epochs: saturated,
        xi_bar: xi_bar.iter().copied().collect(),
        gain: (0..gain.nrows()).map(|r| gain.row(r).iter().copied().collect()).collect(),
        warnings,
    };
    Ok(FeedbackRun {
        trajectory,
        metrics,
        xi_history,
    })
}

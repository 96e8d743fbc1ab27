//! Explicit Runge–Kutta steppers used by the simulators.

use alloc::vec::Vec;
#[allow(unused_imports)] // inherent float methods are missing without std
use num_traits::Float;

use crate::error::{Error, Result};
use crate::Vector;

/// One classical RK4 step of size `h` from `(t, y)`.
pub fn rk4_step<F>(f: &mut F, t: f64, y: &Vector, h: f64) -> Result<Vector>
where
    F: FnMut(f64, &Vector) -> Result<Vector>,
{
    let k1 = f(t, y)?;
    let k2 = f(t + 0.5 * h, &(y + &k1 * (0.5 * h)))?;
    let k3 = f(t + 0.5 * h, &(y + &k2 * (0.5 * h)))?;
    let k4 = f(t + h, &(y + &k3 * h))?;
    Ok(y + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0))
}

/// RK4 over an explicit, strictly monotone grid. Returns the state at every node.
pub fn rk4_on_grid<F>(mut f: F, grid: &[f64], y0: &Vector) -> Result<Vec<Vector>>
where
    F: FnMut(f64, &Vector) -> Result<Vector>,
{
    let mut out = Vec::with_capacity(grid.len());
    let mut y = y0.clone();
    out.push(y.clone());
    for win in grid.windows(2) {
        y = rk4_step(&mut f, win[0], &y, win[1] - win[0])?;
        out.push(y.clone());
    }
    Ok(out)
}

/// Uniform grid `t0, t0+dt, …, t1` whose last interval may be shorter.
pub fn uniform_grid(t0: f64, t1: f64, dt: f64) -> Vec<f64> {
    assert!(dt > 0.0 && t1 >= t0);
    let n = ((t1 - t0) / dt).round() as usize;
    let mut grid: Vec<f64> = (0..=n).map(|k| t0 + k as f64 * dt).collect();
    // absorb the remainder into a last step, or snap the endpoint
    let last = *grid.last().unwrap_or(&t0);
    if (last - t1).abs() <= 1e-9 * dt.max(1.0) {
        if let Some(l) = grid.last_mut() {
            *l = t1;
        }
    } else if last < t1 {
        grid.push(t1);
    } else {
        grid.pop();
        grid.push(t1);
    }
    grid
}

/// Tolerances for the adaptive Runge–Kutta–Fehlberg 4(5) integrator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveOptions {
    pub rtol: f64,
    pub atol: f64,
    pub initial_step: f64,
    pub min_step: f64,
    pub max_step: f64,
}

impl Default for AdaptiveOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-8,
            atol: 1e-10,
            initial_step: 1e-3,
            min_step: 1e-12,
            max_step: f64::INFINITY,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct AdaptiveOutput {
    pub times: Vec<f64>,
    pub states: Vec<Vector>,
    pub accepted: usize,
    pub rejected: usize,
}

const C2: f64 = 1.0 / 4.0;
const C3: f64 = 3.0 / 8.0;
const C4: f64 = 12.0 / 13.0;
const C6: f64 = 1.0 / 2.0;

/// Adaptive RKF45 on `[t0, t1]`, propagating the 5th-order solution.
pub fn rkf45<F>(mut f: F, t0: f64, t1: f64, y0: &Vector, opts: &AdaptiveOptions) -> Result<AdaptiveOutput>
where
    F: FnMut(f64, &Vector) -> Result<Vector>,
{
    let mut out = AdaptiveOutput::default();
    let mut t = t0;
    let mut y = y0.clone();
    out.times.push(t);
    out.states.push(y.clone());
    let mut h = opts.initial_step.min(t1 - t0).min(opts.max_step);
    while t < t1 {
        if t + h > t1 {
            h = t1 - t;
        }
        let k1 = f(t, &y)?;
        let k2 = f(t + C2 * h, &(&y + &k1 * (h / 4.0)))?;
        let k3 = f(t + C3 * h, &(&y + &k1 * (3.0 * h / 32.0) + &k2 * (9.0 * h / 32.0)))?;
        let k4 = f(
            t + C4 * h,
            &(&y + &k1 * (1932.0 * h / 2197.0) - &k2 * (7200.0 * h / 2197.0) + &k3 * (7296.0 * h / 2197.0)),
        )?;
        let k5 = f(
            t + h,
            &(&y + &k1 * (439.0 * h / 216.0) - &k2 * (8.0 * h) + &k3 * (3680.0 * h / 513.0) - &k4 * (845.0 * h / 4104.0)),
        )?;
        let k6 = f(
            t + C6 * h,
            &(&y - &k1 * (8.0 * h / 27.0) + &k2 * (2.0 * h) - &k3 * (3544.0 * h / 2565.0) + &k4 * (1859.0 * h / 4104.0)
                - &k5 * (11.0 * h / 40.0)),
        )?;
        let y5 = &y
            + (&k1 * (16.0 / 135.0) + &k3 * (6656.0 / 12825.0) + &k4 * (28561.0 / 56430.0) - &k5 * (9.0 / 50.0) + &k6 * (2.0 / 55.0)) * h;
        let err_vec =
            (&k1 * (1.0 / 360.0) - &k3 * (128.0 / 4275.0) - &k4 * (2197.0 / 75240.0) + &k5 * (1.0 / 50.0) + &k6 * (2.0 / 55.0)) * h;
        let mut err: f64 = 0.0;
        for i in 0..y.len() {
            let sc = opts.atol + opts.rtol * y[i].abs().max(y5[i].abs());
            err = err.max((err_vec[i] / sc).abs());
        }
        if !err.is_finite() {
            err = f64::INFINITY;
        }
        if err <= 1.0 {
            t += h;
            y = y5;
            out.times.push(t);
            out.states.push(y.clone());
            out.accepted += 1;
        } else {
            out.rejected += 1;
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h = (h * factor).min(opts.max_step);
        if t < t1 && h < opts.min_step {
            return Err(Error::StepFailure { t, h });
        }
    }
    Ok(out)
}

use std::f64::consts::{PI, SQRT_2};

use mocon_core::catalog::{double_pendulum, pendulum_oscillating_pivot, sliding_bead};
use mocon_core::controller::{
    run_feedback, run_open_loop, synthesize_signal, window_average_outer, ConeSelection, FeedbackOptions, OpenLoopOptions, VibrationPlan,
};
use mocon_core::dynamics::{ReducedState, Trajectory};
use mocon_core::stability::VibrationTuple;
use mocon_core::{Matrix, Vector};

fn v(x: &[f64]) -> Vector {
    Vector::from_column_slice(x)
}

#[test]
fn two_tone_average_reproduces_the_outer_sum() {
    let tuple = VibrationTuple::new(vec![v(&[1.0, 2.0]), v(&[-3.0, 0.5])]).unwrap();
    let target = tuple.outer_sum();
    let plan = VibrationPlan::new(tuple, vec![100.0, 100.0 * SQRT_2], vec![0.0, 0.3]).unwrap();
    let sig = synthesize_signal(&plan, &v(&[0.0, 0.0]), 0.0, 20.0).unwrap();
    let avg = window_average_outer(&sig, 0.0, 2.0 * PI / 100.0 * 200.0);
    assert!((&avg - &target).amax() <= 0.01 * target.amax());
}

#[test]
fn averaging_error_shrinks_with_the_window() {
    let plan = VibrationPlan::new(VibrationTuple::single(v(&[5.0])), vec![200.0], vec![0.7]).unwrap();
    let sig = synthesize_signal(&plan, &v(&[0.0]), 0.0, 10.0).unwrap();
    // windows that are not whole periods leave an O(1/(ω T)) remainder
    let err = |window: f64| (window_average_outer(&sig, 0.0, window)[(0, 0)] - 25.0).abs();
    let (short, long) = (err(0.1013), err(1.013));
    assert!(long < short && long <= 25.0 / (200.0 * 1.013), "{short} {long}");
}

fn slow_envelope(traj: &Trajectory, window: f64, t_end: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut start = 0.0;
    while start + window <= t_end + 1e-12 {
        let vals: Vec<f64> = traj
            .times
            .iter()
            .zip(&traj.states)
            .filter(|(t, _)| **t >= start && **t < start + window)
            .map(|(_, s)| s.q[0])
            .collect();
        out.push(vals.iter().sum::<f64>() / vals.len() as f64);
        start += window;
    }
    out
}

#[test]
fn doubling_the_frequency_keeps_the_slow_motion() {
    let pend = pendulum_oscillating_pivot(9.8);
    let init = ReducedState::new(v(&[0.1]), v(&[0.0]), v(&[0.0]));
    let opts = OpenLoopOptions {
        horizon: 5.0,
        dt: 1e-4,
        ..Default::default()
    };
    let run = |omega: f64| {
        let plan = VibrationPlan::single(v(&[5.0]), omega).unwrap();
        run_open_loop(&pend.model, &pend.force, &plan, &init, &v(&[0.0]), &v(&[0.0]), &opts).unwrap()
    };
    let (a, b) = (run(200.0), run(400.0));
    let window = 2.0 * PI / 200.0;
    let (ea, eb) = (slow_envelope(&a.trajectory, window, 5.0), slow_envelope(&b.trajectory, window, 5.0));
    let sup = ea.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let diff = ea.iter().zip(&eb).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    assert!(diff <= 0.05 * sup, "envelope change {diff} vs sup {sup}");
}

#[test]
fn double_pendulum_is_contained_by_fast_pivot_motion() {
    let dp = double_pendulum(9.8);
    let plan = VibrationPlan::single(v(&[0.0, 6.0]), 200.0).unwrap();
    plan.check_separation(dp.natural_frequency, 20.0).unwrap();
    let init = ReducedState::new(v(&[0.05, -0.05]), v(&[0.0, 0.0]), v(&[0.0, 0.0]));
    let opts = OpenLoopOptions {
        horizon: 5.0,
        dt: 2e-4,
        ..Default::default()
    };
    let run = run_open_loop(&dp.model, &dp.force, &plan, &init, &v(&[0.0, 0.0]), &v(&[0.0, 0.0]), &opts).unwrap();
    assert!(run.metrics.exit_time.is_none());
    assert!(run.metrics.sup_q_deviation < 0.3, "{}", run.metrics.sup_q_deviation);
}

#[test]
fn far_start_saturates_the_cone() {
    let bead = sliding_bead(9.8);
    let init = ReducedState::new(v(&[12.0]), v(&[0.0]), v(&[0.0]));
    let opts = FeedbackOptions {
        horizon: 0.5,
        ..Default::default()
    };
    let run = run_feedback(
        &bead.model,
        &bead.force,
        &ConeSelection::bead(),
        &v(&[1.0]),
        &v(&[0.0]),
        &init,
        &opts,
    )
    .unwrap();
    assert!(run.metrics.saturated_epochs > 0);
    assert!(run.metrics.warnings.iter().any(|w| w.contains("ConeClampSaturated")));
    assert!(run.xi_history.iter().all(|xi| xi[0] >= 0.0));
}

#[test]
fn controller_gain_places_the_default_poles() {
    let bead = sliding_bead(9.8);
    let init = ReducedState::new(v(&[1.0]), v(&[0.0]), v(&[0.0]));
    let opts = FeedbackOptions {
        horizon: 0.1,
        ..Default::default()
    };
    let run = run_feedback(
        &bead.model,
        &bead.force,
        &ConeSelection::bead(),
        &v(&[1.0]),
        &v(&[0.0]),
        &init,
        &opts,
    )
    .unwrap();
    // double integrator with poles at −1: K = (1, 2)
    let k = Matrix::from_row_slice(1, 2, &[run.metrics.gain[0][0], run.metrics.gain[0][1]]);
    assert!((k - Matrix::from_row_slice(1, 2, &[1.0, 2.0])).amax() < 1e-5);
}

#[test]
fn feedback_rejects_slow_vibrations() {
    let pend = pendulum_oscillating_pivot(9.8);
    let init = ReducedState::new(v(&[0.3]), v(&[0.0]), v(&[0.0]));
    let opts = FeedbackOptions {
        omega: 20.0,
        natural_frequency: Some(pend.natural_frequency),
        ..Default::default()
    };
    assert!(run_feedback(
        &pend.model,
        &pend.force,
        &ConeSelection::pendulum(),
        &v(&[0.5]),
        &v(&[0.0]),
        &init,
        &opts
    )
    .is_err());
}

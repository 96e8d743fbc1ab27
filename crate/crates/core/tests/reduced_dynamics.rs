use mocon_core::catalog::{double_pendulum, identity, pendulum_oscillating_pivot};
use mocon_core::dynamics::{constraint_reaction, integrate, reduced_hamiltonian, ControlSignal, ReducedState, StepSpec};
use mocon_core::ode::AdaptiveOptions;
use mocon_core::{Error, Vector};

fn v(x: &[f64]) -> Vector {
    Vector::from_column_slice(x)
}

#[test]
fn energy_is_conserved_with_frozen_control() {
    let dp = double_pendulum(9.8);
    let u0 = v(&[0.1, -0.2]);
    let signal = ControlSignal::constant(u0.clone(), 0.0, 3.0);
    let init = ReducedState::new(v(&[0.2, -0.1]), v(&[0.0, 0.3]), u0);
    let traj = integrate(&dp.model, &dp.force, &signal, &init, StepSpec::rk4(5e-4)).unwrap();
    let pot = dp.potential().unwrap();
    let energy = |s: &ReducedState| reduced_hamiltonian(&dp.model, s, &v(&[0.0, 0.0])).unwrap() + pot.value(&s.q, &s.u).unwrap();
    let e0 = energy(&traj.states[0]);
    let drift = traj.states.iter().map(|s| (energy(s) - e0).abs()).fold(0.0, f64::max);
    assert!(drift < 1e-8, "energy drift {drift:e}");
}

#[test]
fn adaptive_and_fixed_steps_agree() {
    let pend = pendulum_oscillating_pivot(9.8);
    let signal = ControlSignal::new(0.0, 1.0, |t| v(&[0.2 * (3.0 * t).sin()]), |t| v(&[0.6 * (3.0 * t).cos()]));
    let init = ReducedState::new(v(&[0.4]), v(&[0.0]), v(&[0.0]));
    let fixed = integrate(&pend.model, &pend.force, &signal, &init, StepSpec::rk4(1e-3)).unwrap();
    let opts = AdaptiveOptions {
        rtol: 1e-10,
        atol: 1e-12,
        ..Default::default()
    };
    let adaptive = integrate(&pend.model, &pend.force, &signal, &init, StepSpec::Adaptive(opts)).unwrap();
    let (a, b) = (fixed.last().unwrap(), adaptive.last().unwrap());
    assert!((&a.q - &b.q).amax() < 1e-8 && (&a.p - &b.p).amax() < 1e-8);
    assert_eq!(adaptive.meta.method, "rkf45");
}

#[test]
fn free_particle_moves_straight() {
    let id = identity(2, 1);
    let signal = ControlSignal::new(0.0, 2.0, |t| v(&[t * t]), |t| v(&[2.0 * t]));
    let init = ReducedState::new(v(&[0.0, 1.0]), v(&[1.0, -0.5]), v(&[0.0]));
    let traj = integrate(&id.model, &id.force, &signal, &init, StepSpec::rk4(0.01)).unwrap();
    let last = traj.last().unwrap();
    assert!((&last.q - v(&[2.0, 0.0])).amax() < 1e-12);
}

#[test]
fn mismatched_initial_control_is_rejected() {
    let pend = pendulum_oscillating_pivot(9.8);
    let signal = ControlSignal::constant(v(&[0.5]), 0.0, 1.0);
    let init = ReducedState::new(v(&[0.4]), v(&[0.0]), v(&[0.0]));
    assert!(matches!(
        integrate(&pend.model, &pend.force, &signal, &init, StepSpec::rk4(0.01)),
        Err(Error::InitialControlMismatch { .. })
    ));
}

#[test]
fn reaction_vanishes_for_a_free_control_factor() {
    // on the identity metric the free motion of u is ü = 0, so a uniform
    // motion needs no reaction and an accelerated one needs exactly ü
    let id = identity(1, 1);
    let state = ReducedState::new(v(&[0.3]), v(&[0.7]), v(&[0.1]));
    let r = constraint_reaction(&id.model, &id.force, &state, &v(&[2.0]), &v(&[0.0])).unwrap();
    assert!(r.reaction.amax() < 1e-12);
    let r = constraint_reaction(&id.model, &id.force, &state, &v(&[2.0]), &v(&[-3.0])).unwrap();
    assert!((r.reaction[0] + 3.0).abs() < 1e-12);
    assert!((r.wp[0] - 2.0).abs() < 1e-15);
}

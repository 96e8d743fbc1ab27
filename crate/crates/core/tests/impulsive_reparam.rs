use mocon_core::catalog::pendulum_oscillating_pivot;
use mocon_core::dynamics::ControlSignal;
use mocon_core::reparam::{
    cone_system, extended_support, fdiamond_support, lift_mechanical, recover_controls, simulate_graph, warp_from_graph, warp_from_signal,
    GraphControl, QuadraticControlSystem,
};
use mocon_core::sampling::sphere_points;
use mocon_core::Vector;
use proptest::prelude::*;

fn v(x: &[f64]) -> Vector {
    Vector::from_column_slice(x)
}

fn chirp() -> ControlSignal {
    ControlSignal::new(
        0.0,
        1.5,
        |t| v(&[0.3 * (4.0 * t * t).sin()]),
        |t| v(&[2.4 * t * (4.0 * t * t).cos()]),
    )
}

#[test]
fn warp_is_monotone_and_invertible() {
    let (warp, _) = warp_from_signal(&chirp()).unwrap();
    assert!(warp.t_nondecreasing && warp.s_strictly_increasing);
    assert!(warp.s_nodes().windows(2).all(|w| w[1] > w[0]));
    for k in 0..=30 {
        let t = 1.5 * k as f64 / 30.0;
        assert!((warp.t_of_s(warp.s_of_t(t)) - t).abs() < 1e-9);
    }
    assert!(warp.s_end() > warp.t_end());
}

#[test]
fn controls_are_recovered_from_the_graph() {
    let sig = chirp();
    let (warp, graph) = warp_from_signal(&sig).unwrap();
    let back = recover_controls(&graph, &warp, &v(&[0.0])).unwrap();
    for k in 0..=40 {
        let t = 1.5 * k as f64 / 40.0;
        assert!((back.value(t)[0] - sig.value(t)[0]).abs() < 1e-6, "t = {t}");
    }
}

#[test]
fn graph_warp_matches_graph_simulation_clock() {
    let a = GraphControl::new(1, |s: f64| {
        let th = 0.5 * (1.0 + s.sin());
        v(&[th.cos(), th.sin()])
    });
    let warp = warp_from_graph(&a, 2.0, 400).unwrap();
    let sys = lift_mechanical(&pendulum_oscillating_pivot(9.8).model, &pendulum_oscillating_pivot(9.8).force);
    let out = simulate_graph(&sys, &a, &v(&[0.1, 0.0, 0.0]), 2.0, 1e-3).unwrap();
    assert!((out.t.last().unwrap() - warp.t_end()).abs() < 1e-8);
}

proptest! {
    #[test]
    fn extended_support_dominates_fdiamond(d0 in 0.0f64..1.0, d1 in -1.0f64..1.0, d2 in -1.0f64..1.0, q in -1.0f64..1.0, p in -1.0f64..1.0) {
        let pend = pendulum_oscillating_pivot(9.8);
        let sys = lift_mechanical(&pend.model, &pend.force);
        let x = v(&[q, p, 0.1]);
        let d = v(&[d1, d2, 0.3]);
        let plain = fdiamond_support(&sys, &x, &d).unwrap();
        let ext = extended_support(&sys, &x, d0, &d).unwrap();
        prop_assert!(ext >= plain - 1e-12);
    }
}

#[test]
fn cone_system_has_only_quadratic_controls() {
    let pend = pendulum_oscillating_pivot(9.8);
    let sys: QuadraticControlSystem = cone_system(&pend.model, &pend.force, &v(&[0.0]));
    let c = sys.coefficients(&v(&[0.4, 0.2])).unwrap();
    assert!(c.g.iter().all(|g| g.amax() == 0.0));
    assert!((c.h[0][0][1] + 0.4f64.sin() * 0.4f64.cos()).abs() < 1e-12);
    // the momentum row can only be pushed down at q > 0
    for d in sphere_points(16, 2) {
        let s = fdiamond_support(&sys, &v(&[0.4, 0.2]), &d).unwrap();
        assert!(s.is_finite());
    }
}

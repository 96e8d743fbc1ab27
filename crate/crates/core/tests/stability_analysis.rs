use mocon_core::catalog::{double_pendulum, pendulum_oscillating_pivot};
use mocon_core::linalg::controllability_matrix;
use mocon_core::ode::{rk4_on_grid, uniform_grid};
use mocon_core::stability::{
    double_pendulum_q_analysis, effective_potential, kalman_rank, mechanical_rank_test, solve_vibration_tuple, RankTestOptions, Verdict,
    VibrationTuple, RANK_TOL,
};
use mocon_core::{Matrix, Vector};
use proptest::prelude::*;

fn v(x: &[f64]) -> Vector {
    Vector::from_column_slice(x)
}

proptest! {
    #[test]
    fn kalman_rank_is_similarity_invariant(entries in proptest::collection::vec(-1.0f64..1.0, 9 + 3 + 9)) {
        let a = Matrix::from_row_slice(3, 3, &entries[..9]);
        let b = Matrix::from_row_slice(3, 1, &entries[9..12]);
        let t = Matrix::identity(3, 3) * 3.0 + Matrix::from_row_slice(3, 3, &entries[12..]);
        let t_inv = t.clone().try_inverse().unwrap();
        let r1 = kalman_rank(&a, &b, RANK_TOL).unwrap();
        let r2 = kalman_rank(&(&t * &a * &t_inv), &(&t * &b), RANK_TOL).unwrap();
        prop_assert_eq!(r1.rank, r2.rank);
        prop_assert_eq!(controllability_matrix(&a, &b).ncols(), 3);
    }
}

#[test]
fn pendulum_rank_test_at_the_scalar_solution() {
    let pend = pendulum_oscillating_pivot(9.8);
    let q_bar = 0.6f64;
    let w = (9.8 / q_bar.cos()).sqrt();
    let opts = RankTestOptions::default();
    let rep = mechanical_rank_test(
        &pend.model,
        &pend.force,
        &v(&[q_bar]),
        &v(&[0.0]),
        &VibrationTuple::single(v(&[w])),
        &opts,
    )
    .unwrap();
    assert_eq!(rep.verdict, Some(Verdict::Pass));
    assert_eq!(rep.half_quadratic, Some(true));
    let zero = mechanical_rank_test(
        &pend.model,
        &pend.force,
        &v(&[q_bar]),
        &v(&[0.0]),
        &VibrationTuple::single(v(&[0.0])),
        &opts,
    )
    .unwrap();
    assert_eq!(zero.verdict, Some(Verdict::Fail));
}

#[test]
fn rank_test_ignores_tuple_order() {
    let dp = double_pendulum(9.8);
    let (q, u) = (v(&[0.3, -0.05]), v(&[0.0, 0.0]));
    let opts = RankTestOptions::default();
    let w = solve_vibration_tuple(&dp.model, &dp.force, &q, &u, 2, &opts).unwrap();
    let swapped = VibrationTuple::new(vec![w.ws[1].clone(), w.ws[0].clone()]).unwrap();
    let a = mechanical_rank_test(&dp.model, &dp.force, &q, &u, &w, &opts).unwrap();
    let b = mechanical_rank_test(&dp.model, &dp.force, &q, &u, &swapped, &opts).unwrap();
    for (x, y) in a.equilibrium_residual.iter().zip(&b.equilibrium_residual) {
        assert!((x - y).abs() < 1e-12);
    }
}

#[test]
fn q_matrix_structure() {
    let qa = double_pendulum_q_analysis(0.3, -0.05).unwrap();
    assert!(qa.det_de_dq1 < 0.0);
    assert!(qa.det_de_dq2.abs() < 1e-9);
    assert!(qa.proportionality_residual < 1e-8);
}

#[test]
fn averaged_hamiltonian_is_conserved() {
    // H_W = ½p² + U_W(q) along q̇ = p, ṗ = −U_W′(q)
    let pend = pendulum_oscillating_pivot(9.8);
    let uw = effective_potential(&pend.model, pend.potential().unwrap(), &VibrationTuple::single(v(&[5.0]))).unwrap();
    let zero = v(&[0.0]);
    let field = |_: f64, y: &Vector| {
        let (g, _) = uw.gradient(&v(&[y[0]]), &zero)?;
        Ok(v(&[y[1], -g[0]]))
    };
    let grid = uniform_grid(0.0, 5.0, 1e-3);
    let ys = rk4_on_grid(field, &grid, &v(&[0.2, 0.0])).unwrap();
    let h = |y: &Vector| 0.5 * y[1] * y[1] + uw.value(&v(&[y[0]]), &zero).unwrap();
    let h0 = h(&ys[0]);
    assert!(ys.iter().all(|y| (h(y) - h0).abs() < 1e-9));
}

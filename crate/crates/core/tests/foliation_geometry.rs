use mocon_core::catalog::{pendulum_oscillating_pivot, synthetic_diag};
use mocon_core::geometry::{
    box_from_ranges, classify_fitness, curvature_tensor, geodesic_ivp, leaf_return_displacement, Fitness, ShootingOptions,
};
use mocon_core::metric::MetricModel;
use mocon_core::{Matrix, Vector};

fn v(x: &[f64]) -> Vector {
    Vector::from_column_slice(x)
}

#[test]
fn classification_of_simple_metrics() {
    let bounds = box_from_ranges(&[(-1.0, 1.0)], &[(-1.0, 1.0)]);
    let pend = pendulum_oscillating_pivot(9.8);
    assert_eq!(
        classify_fitness(&pend.model, &bounds, 64, 1e-9).unwrap().classification,
        Fitness::Generic
    );

    let fit = MetricModel::new(1, 1, |_, u| Ok(Matrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0 + u[0] * u[0]])));
    let verdict = classify_fitness(&fit, &bounds, 64, 1e-9).unwrap();
    assert_eq!(verdict.classification, Fitness::StronglyNFit);
    assert!(verdict.max_violation < 1e-9);

    // constant coupling: the control block of G⁻¹ is constant but G⁻¹ couples q and u
    let coupled = MetricModel::new(1, 1, |_, _| Ok(Matrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0])));
    assert_eq!(classify_fitness(&coupled, &bounds, 16, 1e-9).unwrap().classification, Fitness::NFit);
}

#[test]
fn geodesics_conserve_their_hamiltonian() {
    let pend = pendulum_oscillating_pivot(9.8);
    let arc = geodesic_ivp(&pend.model, &v(&[0.2]), &v(&[0.0]), &v(&[0.5]), &v(&[1.0]), 2.0, 1e-3).unwrap();
    assert!(arc.hamiltonian_drift() < 1e-10, "{}", arc.hamiltonian_drift());
}

#[test]
fn displacement_scales_with_curvature() {
    let entry = synthetic_diag("steep", |q| 1.0 + 3.0 * q, |_| 3.0);
    let t = curvature_tensor(&entry.model, &v(&[0.0]), &v(&[0.0])).unwrap();
    let expected = t.half_quadratic(&v(&[1.0]))[0];
    let s = 0.01;
    let d = leaf_return_displacement(&entry.model, &v(&[0.0]), &v(&[0.0]), &v(&[1.0]), s, &ShootingOptions::default()).unwrap();
    assert!(
        (d[0] / (s * s) - expected).abs() < 0.05 * expected,
        "{} vs {expected}",
        d[0] / (s * s)
    );
}

use approx::assert_relative_eq;
use mocon_core::catalog::{double_pendulum, pendulum_oscillating_pivot, sliding_bead};
use mocon_core::metric::{momentum_from_velocity, reduced_blocks, velocity_from_momentum, wp_from_w, MetricModel};
use mocon_core::{Error, Matrix, Vector};
use proptest::prelude::*;

fn v(x: &[f64]) -> Vector {
    Vector::from_column_slice(x)
}

proptest! {
    #[test]
    fn legendre_maps_are_inverse(q1 in -1.5f64..1.5, q2 in -1.5f64..1.5, v1 in -3.0f64..3.0, v2 in -3.0f64..3.0, w1 in -3.0f64..3.0, w2 in -3.0f64..3.0) {
        let dp = double_pendulum(9.8);
        let (q, u) = (v(&[q1, q2]), v(&[0.2, -0.1]));
        let (p, wp) = momentum_from_velocity(&dp.model, &q, &u, &v(&[v1, v2]), &v(&[w1, w2])).unwrap();
        let (vb, wb) = velocity_from_momentum(&dp.model, &q, &u, &p, &wp).unwrap();
        prop_assert!((vb - v(&[v1, v2])).amax() < 1e-10);
        prop_assert!((wb - v(&[w1, w2])).amax() < 1e-10);
    }

    #[test]
    fn control_momentum_realizes_the_rate(q in -1.5f64..1.5, p in -3.0f64..3.0, w in -3.0f64..3.0) {
        let pend = pendulum_oscillating_pivot(9.8);
        let (qv, u) = (v(&[q]), v(&[0.0]));
        let wp = wp_from_w(&pend.model, &qv, &u, &v(&[p]), &v(&[w])).unwrap();
        let (_, w_back) = velocity_from_momentum(&pend.model, &qv, &u, &v(&[p]), &wp).unwrap();
        prop_assert!((w_back[0] - w).abs() < 1e-12 * w.abs().max(1.0));
    }

    #[test]
    fn analytic_and_difference_partials_agree(q1 in -1.5f64..1.5, q2 in -1.5f64..1.5) {
        let dp = double_pendulum(9.8);
        let fd = dp.model.clone().without_partials();
        let (q, u) = (v(&[q1, q2]), v(&[0.3, 0.4]));
        let a = reduced_blocks(&dp.model, &q, &u).unwrap();
        let b = reduced_blocks(&fd, &q, &u).unwrap();
        for i in 0..2 {
            prop_assert!((&a.de_dq[i] - &b.de_dq[i]).amax() < 1e-7);
            prop_assert!((&a.dk_dq[i] - &b.dk_dq[i]).amax() < 1e-7);
            prop_assert!((&a.de_dq[i] - a.de_dq[i].transpose()).amax() == 0.0);
        }
    }
}

#[test]
fn documented_block_values() {
    let pend = pendulum_oscillating_pivot(9.8);
    let b = reduced_blocks(&pend.model, &v(&[0.3]), &v(&[0.0])).unwrap();
    assert_relative_eq!(b.a[(0, 0)], 1.0, epsilon = 1e-14);
    assert_relative_eq!(b.e[(0, 0)], 1.0 + 0.3f64.cos().powi(2), epsilon = 1e-14);
    assert_relative_eq!(b.k[(0, 0)], 0.3f64.sin(), epsilon = 1e-14);

    let bead = sliding_bead(9.8);
    let b = reduced_blocks(&bead.model, &v(&[2.0]), &v(&[0.5])).unwrap();
    assert_relative_eq!(b.e[(0, 0)], 4.0, epsilon = 1e-14);
    assert_eq!(b.k[(0, 0)], 0.0);
}

#[test]
fn identity_metric_has_trivial_blocks() {
    let id = MetricModel::new(2, 1, |_, _| Ok(Matrix::identity(3, 3)));
    let b = reduced_blocks(&id, &v(&[0.4, -2.0]), &v(&[1.0])).unwrap();
    assert_eq!(b.a, Matrix::identity(2, 2));
    assert_eq!(b.e, Matrix::identity(1, 1));
    assert_eq!(b.k.amax(), 0.0);
    assert!(b.de_dq.iter().chain(&b.da_dq).all(|m| m.amax() == 0.0));
}

#[test]
fn invalid_metrics_are_rejected() {
    let indefinite = MetricModel::new(1, 1, |_, _| Ok(Matrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0])));
    assert!(reduced_blocks(&indefinite, &v(&[0.0]), &v(&[0.0])).is_err());
    let bead = sliding_bead(9.8);
    assert!(matches!(
        reduced_blocks(&bead.model, &v(&[0.0]), &v(&[0.0])),
        Err(Error::DomainError(_))
    ));
    let pend = pendulum_oscillating_pivot(9.8);
    assert!(matches!(
        momentum_from_velocity(&pend.model, &v(&[0.0]), &v(&[0.0]), &v(&[1.0, 2.0]), &v(&[0.0])),
        Err(Error::DimensionError(_))
    ));
}

use mocon_core::catalog::{by_name, double_pendulum_with_pivot_mass, pendulum_with_pivot_mass, sample_points, SYSTEM_NAMES};
use mocon_core::dynamics::{rhs, ReducedState};
use mocon_core::metric::reduced_blocks;
use mocon_core::{Error, Matrix, Vector};

fn v(x: &[f64]) -> Vector {
    Vector::from_column_slice(x)
}

#[test]
fn every_listed_system_resolves() {
    for name in SYSTEM_NAMES {
        let entry = by_name(name, 9.8).unwrap();
        assert_eq!(entry.name, name);
        let (q, u) = if name == "bead" {
            (v(&[1.0]), v(&[0.0]))
        } else {
            (Vector::zeros(entry.model.dim_q()), Vector::zeros(entry.model.dim_u()))
        };
        reduced_blocks(&entry.model, &q, &u).unwrap();
    }
    assert!(matches!(by_name("trapeze", 9.8), Err(Error::InvalidInput(_))));
    assert!(by_name("pendulum", -1.0).is_err());
}

#[test]
fn pivot_mass_leaves_the_reduced_equations_unchanged() {
    for (light, heavy) in [
        (pendulum_with_pivot_mass(9.8, 1.0), pendulum_with_pivot_mass(9.8, 4.0)),
        (double_pendulum_with_pivot_mass(9.8, 1.0), double_pendulum_with_pivot_mass(9.8, 4.0)),
    ] {
        for (q, u) in sample_points(&light, (-1.0, 1.0), (-1.0, 1.0), 20) {
            let (a, b) = (
                reduced_blocks(&light.model, &q, &u).unwrap(),
                reduced_blocks(&heavy.model, &q, &u).unwrap(),
            );
            for (x, y) in a.de_dq.iter().zip(&b.de_dq) {
                assert!((x - y).amax() < 1e-12);
            }
            // E itself shifts by (m0 − 1)·I
            let shift = &b.e - &a.e;
            assert!((shift.clone() - Matrix::identity(shift.nrows(), shift.ncols()) * 3.0).amax() < 1e-12);
            let n = q.len();
            let state = ReducedState::new(q.clone(), Vector::from_element(n, 0.3), u.clone());
            let w = Vector::from_element(u.len(), 1.3);
            let (ra, rb) = (
                rhs(&light.model, &light.force, &state, &w).unwrap(),
                rhs(&heavy.model, &heavy.force, &state, &w).unwrap(),
            );
            assert!((&ra.0 - &rb.0).amax() < 1e-12 && (&ra.1 - &rb.1).amax() < 1e-12);
        }
    }
}

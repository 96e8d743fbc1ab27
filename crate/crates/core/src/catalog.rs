//! Ready-made mechanical systems with analytic metric partials and the
//! closed forms of their reduced blocks.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)] // inherent float methods are missing without std
use num_traits::Float;

use crate::dynamics::{ForceModel, Potential};
use crate::error::{Error, Result};
use crate::metric::{MetricModel, MetricPartials};
use crate::{Matrix, Vector};

/// Standard gravity used when none is given.
pub const DEFAULT_GRAVITY: f64 = 9.8;

/// Lower bound on the bead's distance from the pivot.
pub const BEAD_Q_MIN: f64 = 1e-3;

type ClosedFormFn = Arc<dyn Fn(&Vector, &Vector) -> (Matrix, Matrix, Matrix) + Send + Sync>;

/// A catalog system: metric, forces, parameters and documented closed forms.
#[derive(Clone)]
pub struct CatalogEntry {
    pub name: String,
    pub description: String,
    pub model: MetricModel,
    pub force: ForceModel,
    pub parameters: BTreeMap<String, f64>,
    /// Rough linear frequency scale, used to validate vibration frequencies.
    pub natural_frequency: f64,
    closed_form: Option<ClosedFormFn>,
}

impl core::fmt::Debug for CatalogEntry {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("CatalogEntry")
            .field("name", &self.name)
            .field("parameters", &self.parameters)
            .finish_non_exhaustive()
    }
}

impl CatalogEntry {
    /// Closed forms `(A, E, K)` at `(q, u)`, when documented.
    pub fn closed_form(&self, q: &Vector, u: &Vector) -> Option<(Matrix, Matrix, Matrix)> {
        self.closed_form.as_ref().map(|f| f(q, u))
    }

    pub fn potential(&self) -> Option<&Potential> {
        self.force.potential()
    }
}

fn m1(x: f64) -> Matrix {
    Matrix::from_element(1, 1, x)
}

fn v1(x: f64) -> Vector {
    Vector::from_element(1, x)
}

fn params(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

/// Pendulum on a pivot that moves horizontally: `G = (1, −sin q; −sin q, 2)`,
/// `U = g cos q` (`q` measured from the upward vertical).
pub fn pendulum_oscillating_pivot(g: f64) -> CatalogEntry {
    pendulum_with_pivot_mass(g, 1.0)
}

/// The pendulum with pivot mass `m0` (`G₂₂ = 1 + m0`).
pub fn pendulum_with_pivot_mass(g: f64, m0: f64) -> CatalogEntry {
    let g22 = 1.0 + m0;
    let model = MetricModel::new(1, 1, move |q, _| {
        let s = q[0].sin();
        Ok(Matrix::from_row_slice(2, 2, &[1.0, -s, -s, g22]))
    })
    .with_partials(|q, _| {
        let c = q[0].cos();
        Ok(MetricPartials {
            dq: vec![Matrix::from_row_slice(2, 2, &[0.0, -c, -c, 0.0])],
            du: vec![Matrix::zeros(2, 2)],
        })
    });
    let potential = Potential::new(move |q, _| Ok(g * q[0].cos())).with_gradient(move |q, _| Ok((v1(-g * q[0].sin()), v1(0.0))));
    CatalogEntry {
        name: "pendulum".into(),
        description: "pendulum with a horizontally oscillating pivot".into(),
        model,
        force: ForceModel::conservative(potential, 1, 1),
        parameters: params(&[("g", g), ("pivot_mass", m0)]),
        natural_frequency: g.sqrt(),
        closed_form: Some(Arc::new(move |q, _| {
            let s = q[0].sin();
            (m1(1.0), m1(g22 - s * s), m1(s))
        })),
    }
}

/// Bead on a bar rotated about the origin in a vertical plane:
/// `G = diag(1, q²)`, `U = g q cos u` (`u` measured from the vertical).
pub fn sliding_bead(g: f64) -> CatalogEntry {
    let guard = |q: &Vector| -> Result<()> {
        if !(q[0] > BEAD_Q_MIN) {
            return Err(Error::DomainError(alloc::format!(
                "bead position q = {} is below q_min = {BEAD_Q_MIN}",
                q[0]
            )));
        }
        Ok(())
    };
    let model = MetricModel::new(1, 1, move |q, _| {
        guard(q)?;
        Ok(Matrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, q[0] * q[0]]))
    })
    .with_partials(move |q, _| {
        guard(q)?;
        Ok(MetricPartials {
            dq: vec![Matrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 2.0 * q[0]])],
            du: vec![Matrix::zeros(2, 2)],
        })
    });
    let potential = Potential::new(move |q, u| Ok(g * q[0] * u[0].cos()))
        .with_gradient(move |q, u| Ok((v1(g * u[0].cos()), v1(-g * q[0] * u[0].sin()))));
    CatalogEntry {
        name: "bead".into(),
        description: "bead sliding on a bar rotated in a vertical plane".into(),
        model,
        force: ForceModel::conservative(potential, 1, 1),
        parameters: params(&[("g", g), ("q_min", BEAD_Q_MIN)]),
        natural_frequency: g.sqrt(),
        closed_form: Some(Arc::new(|q, _| (m1(1.0), m1(q[0] * q[0]), m1(0.0)))),
    }
}

/// Double pendulum (unit masses and lengths) whose pivot `(u¹, u²)` moves in
/// the plane; angles measured clockwise from the upward vertical.
pub fn double_pendulum(g: f64) -> CatalogEntry {
    double_pendulum_with_pivot_mass(g, 1.0)
}

/// The double pendulum with pivot mass `m0` (`G₃₃ = G₄₄ = 2 + m0`).
pub fn double_pendulum_with_pivot_mass(g: f64, m0: f64) -> CatalogEntry {
    let total = 2.0 + m0;
    let model = MetricModel::new(2, 2, move |q, _| {
        let (q1, q2) = (q[0], q[1]);
        let c12 = (q1 - q2).cos();
        let (s1, c1, s2, c2) = (q1.sin(), q1.cos(), q2.sin(), q2.cos());
        Ok(Matrix::from_row_slice(
            4,
            4,
            &[
                2.0,
                c12,
                2.0 * c1,
                -2.0 * s1, //
                c12,
                1.0,
                c2,
                -s2, //
                2.0 * c1,
                c2,
                total,
                0.0, //
                -2.0 * s1,
                -s2,
                0.0,
                total,
            ],
        ))
    })
    .with_partials(|q, _| {
        let (q1, q2) = (q[0], q[1]);
        let s12 = (q1 - q2).sin();
        let (s1, c1, s2, c2) = (q1.sin(), q1.cos(), q2.sin(), q2.cos());
        let d1 = Matrix::from_row_slice(
            4,
            4,
            &[
                0.0,
                -s12,
                -2.0 * s1,
                -2.0 * c1, //
                -s12,
                0.0,
                0.0,
                0.0, //
                -2.0 * s1,
                0.0,
                0.0,
                0.0, //
                -2.0 * c1,
                0.0,
                0.0,
                0.0,
            ],
        );
        let d2 = Matrix::from_row_slice(
            4,
            4,
            &[
                0.0, s12, 0.0, 0.0, //
                s12, 0.0, -s2, -c2, //
                0.0, -s2, 0.0, 0.0, //
                0.0, -c2, 0.0, 0.0,
            ],
        );
        Ok(MetricPartials {
            dq: vec![d1, d2],
            du: vec![Matrix::zeros(4, 4), Matrix::zeros(4, 4)],
        })
    });
    let potential = Potential::new(move |q, _| Ok(g * (2.0 * q[0].cos() + q[1].cos()))).with_gradient(move |q, _| {
        Ok((
            Vector::from_column_slice(&[-2.0 * g * q[0].sin(), -g * q[1].sin()]),
            Vector::zeros(2),
        ))
    });
    CatalogEntry {
        name: "double-pendulum".into(),
        description: "double pendulum with a pivot moving in the plane".into(),
        model,
        force: ForceModel::conservative(potential, 2, 2),
        parameters: params(&[("g", g), ("pivot_mass", m0)]),
        natural_frequency: (2.0 * g).sqrt() * 2.0,
        closed_form: Some(Arc::new(move |q, _| {
            let (q1, q2) = (q[0], q[1]);
            let c12 = (q1 - q2).cos();
            let det = 2.0 - c12 * c12;
            let a = Matrix::from_row_slice(2, 2, &[1.0, -c12, -c12, 2.0]) / det;
            let den = (2.0 * (q1 - q2)).cos() - 3.0;
            let shift = m0 - 1.0;
            let e = Matrix::from_row_slice(
                2,
                2,
                &[
                    1.0 + shift - 4.0 * q1.sin().powi(2) / den,
                    -2.0 * (2.0 * q1).sin() / den,
                    -2.0 * (2.0 * q1).sin() / den,
                    1.0 + shift - 4.0 * q1.cos().powi(2) / den,
                ],
            );
            // K = −A G12
            let (s1, c1, s2, c2) = (q1.sin(), q1.cos(), q2.sin(), q2.cos());
            let g12 = Matrix::from_row_slice(2, 2, &[2.0 * c1, -2.0 * s1, c2, -s2]);
            let k = -(&a * g12);
            (a, e, k)
        })),
    }
}

/// `G = diag(1, e(q))` with no forces (`N = M = 1`).
pub fn synthetic_diag<E, D>(name: &str, e: E, de: D) -> CatalogEntry
where
    E: Fn(f64) -> f64 + Send + Sync + Clone + 'static,
    D: Fn(f64) -> f64 + Send + Sync + 'static,
{
    let e_metric = e.clone();
    let model = MetricModel::new(1, 1, move |q, _| {
        let v = e_metric(q[0]);
        if !(v > 0.0) {
            return Err(Error::DomainError(alloc::format!("e(q) = {v} is not positive")));
        }
        Ok(Matrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, v]))
    })
    .with_partials(move |q, _| {
        Ok(MetricPartials {
            dq: vec![Matrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, de(q[0])])],
            du: vec![Matrix::zeros(2, 2)],
        })
    });
    CatalogEntry {
        name: name.into(),
        description: "diagonal metric diag(1, e(q)) without forces".into(),
        model,
        force: ForceModel::zero(1, 1),
        parameters: BTreeMap::new(),
        natural_frequency: 1.0,
        closed_form: Some(Arc::new(move |q, _| (m1(1.0), m1(e(q[0])), m1(0.0)))),
    }
}

/// `G = diag(1, 1 + q)`; orthonormal at the origin, unit curvature there.
pub fn synthetic_linear() -> CatalogEntry {
    synthetic_diag("synthetic-linear", |q| 1.0 + q, |_| 1.0)
}

/// Identity metric on `ℝᴺ × ℝᴹ` with no forces.
pub fn identity(n: usize, m: usize) -> CatalogEntry {
    let d = n + m;
    let model = MetricModel::new(n, m, move |_, _| Ok(Matrix::identity(d, d))).with_partials(move |_, _| {
        Ok(MetricPartials {
            dq: vec![Matrix::zeros(d, d); n],
            du: vec![Matrix::zeros(d, d); m],
        })
    });
    CatalogEntry {
        name: "identity".into(),
        description: "Euclidean metric without forces".into(),
        model,
        force: ForceModel::zero(n, m),
        parameters: BTreeMap::new(),
        natural_frequency: 1.0,
        closed_form: Some(Arc::new(move |_, _| {
            (Matrix::identity(n, n), Matrix::identity(m, m), Matrix::zeros(n, m))
        })),
    }
}

/// Names accepted by [`by_name`].
pub const SYSTEM_NAMES: [&str; 5] = ["pendulum", "bead", "double-pendulum", "synthetic-linear", "identity"];

/// Looks up a catalog system by name with gravity `g`.
pub fn by_name(name: &str, g: f64) -> Result<CatalogEntry> {
    if !(g > 0.0) && matches!(name, "pendulum" | "bead" | "double-pendulum") {
        return Err(Error::InvalidInput("gravity must be positive".into()));
    }
    match name {
        "pendulum" => Ok(pendulum_oscillating_pivot(g)),
        "bead" => Ok(sliding_bead(g)),
        "double-pendulum" => Ok(double_pendulum(g)),
        "synthetic-linear" => Ok(synthetic_linear()),
        "identity" => Ok(identity(1, 1)),
        other => Err(Error::InvalidInput(alloc::format!(
            "unknown system '{other}' (known: {})",
            SYSTEM_NAMES.join(", ")
        ))),
    }
}

/// `β(u) = |u|²` as a potential in `u` alone, with analytic gradient.
pub fn quadratic_penalty() -> Potential {
    Potential::new(|_, u| Ok(u.norm_squared())).with_gradient(|q, u| Ok((Vector::zeros(q.len()), u * 2.0)))
}

/// Sample points `(q, u)` inside a box, skipping metric domain errors.
pub fn sample_points(entry: &CatalogEntry, q_range: (f64, f64), u_range: (f64, f64), n: usize) -> Vec<(Vector, Vector)> {
    let (nq, nu) = (entry.model.dim_q(), entry.model.dim_u());
    let mut bounds = vec![q_range; nq];
    bounds.extend(vec![u_range; nu]);
    crate::sampling::SampleBox::new(bounds)
        .points(n)
        .into_iter()
        .map(|x| (x.rows(0, nq).into_owned(), x.rows(nq, nu).into_owned()))
        .collect()
}

//! Subcommand implementations.

mod catalog;
mod geometry;
mod reparam;
mod simulate;
mod stability;

pub use catalog::catalog;
pub use geometry::geometry;
pub use reparam::reparam;
pub use simulate::simulate;
pub use stability::stability;

use mocon_core::catalog::{by_name, double_pendulum_with_pivot_mass, pendulum_with_pivot_mass, CatalogEntry};
use mocon_core::controller::ConeSelection;
use mocon_core::stability::VibrationTuple;
use mocon_core::{Matrix, Vector};

use crate::error::{config_err, CliResult};
use crate::spec::{parse_vector, sized};

pub const DEFAULT_G: f64 = 9.8;

/// Looks up `--system` with the optional gravity and pivot-mass overrides.
pub fn load_system(name: Option<&str>, g: Option<f64>, pivot_mass: Option<f64>) -> CliResult<CatalogEntry> {
    let name = name.ok_or_else(|| config_err("--system is required (see `mocon catalog`)"))?;
    let g = g.unwrap_or(DEFAULT_G);
    let Some(m0) = pivot_mass else {
        return Ok(by_name(name, g)?);
    };
    if !(m0 > 0.0) {
        return Err(config_err("--pivot-mass must be positive"));
    }
    // validates the name and the gravity first
    by_name(name, g)?;
    match name {
        "pendulum" => Ok(pendulum_with_pivot_mass(g, m0)),
        "double-pendulum" => Ok(double_pendulum_with_pivot_mass(g, m0)),
        other => Err(config_err(format!("--pivot-mass does not apply to '{other}'"))),
    }
}

/// `gamma+`, `gamma-` or `tuple`; defaults follow the system.
pub fn parse_selection(name: Option<&str>, entry: &CatalogEntry, k: Option<usize>) -> CliResult<ConeSelection> {
    let (n, m) = (entry.model.dim_q(), entry.model.dim_u());
    let default = match entry.name.as_str() {
        "bead" => "gamma+",
        "pendulum" => "gamma-",
        _ => "tuple",
    };
    let sel = match name.unwrap_or(default) {
        "gamma+" => ConeSelection::bead(),
        "gamma-" => ConeSelection::pendulum(),
        "tuple" => ConeSelection::Tuple {
            k: k.unwrap_or_else(|| default_k(n, m)),
        },
        other => return Err(config_err(format!("unknown selection '{other}' (gamma+, gamma-, tuple)"))),
    };
    if matches!(sel, ConeSelection::Scalar { .. }) && (n, m) != (1, 1) {
        return Err(config_err("gamma± selections need one coordinate and one control"));
    }
    Ok(sel)
}

/// Default base point in `Q`: the origin, or `q = 1` for the bead, whose
/// domain excludes the pivot.
pub fn default_point(entry: &CatalogEntry) -> Vector {
    let n = entry.model.dim_q();
    if entry.name == "bead" {
        Vector::from_element(n, 1.0)
    } else {
        Vector::zeros(n)
    }
}

/// Smallest `k` with `kM ≥ N`.
pub fn default_k(n: usize, m: usize) -> usize {
    n.div_ceil(m).max(1)
}

/// Tuple from repeated `--w` values, each a comma-separated vector in ℝᴹ.
pub fn parse_tuple(ws: &[String], m: usize) -> CliResult<VibrationTuple> {
    if ws.is_empty() {
        return Err(config_err("at least one --w vector is required"));
    }
    let vs = ws
        .iter()
        .map(|s| parse_vector(s, "--w").and_then(|v| sized(Some(&v), m, "--w")))
        .collect::<CliResult<Vec<Vector>>>()?;
    Ok(VibrationTuple::new(vs)?)
}

pub fn to_vec(v: &Vector) -> Vec<f64> {
    v.iter().copied().collect()
}

pub fn to_rows(m: &Matrix) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

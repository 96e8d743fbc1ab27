use mocon_core::geometry::{
    box_from_ranges, classify_fitness, curvature_from_geodesics, curvature_tensor, default_s_sequence, FitnessVerdict,
};
use serde::Serialize;

use super::{default_point, load_system, to_rows, to_vec};
use crate::args::GeometryArgs;
use crate::error::{config_err, CliResult};
use crate::output::emit_report;
use crate::spec::{parse_box, sized};

#[derive(Serialize)]
struct TensorOut {
    q: Vec<f64>,
    u: Vec<f64>,
    /// `∂e_{αβ}/∂qⁱ`, one M×M matrix per coordinate.
    components: Vec<Vec<Vec<f64>>>,
    max_abs: f64,
}

#[derive(Serialize)]
struct LimitOut {
    w: Vec<f64>,
    limit: Vec<f64>,
    /// `½ Σ ∂e_{αβ}/∂qⁱ wᵅwᵝ` from the tensor.
    expected: Vec<f64>,
    abs_error: f64,
    ratios: Vec<(f64, Vec<f64>)>,
}

#[derive(Serialize)]
struct GeometryReport<'a> {
    command: &'static str,
    system: String,
    config: &'a GeometryArgs,
    classification: Option<FitnessVerdict>,
    tensor: Option<TensorOut>,
    curvature_limit: Option<LimitOut>,
}

fn default_box(system: &str) -> &'static str {
    match system {
        "bead" => "q:0.1..3,u:-1..1",
        _ => "q:-1..1,u:-1..1",
    }
}

pub fn geometry(args: GeometryArgs) -> CliResult<()> {
    let entry = load_system(args.system.as_deref(), args.g, args.pivot_mass)?;
    let (n, m) = (entry.model.dim_q(), entry.model.dim_u());
    let tensor_wanted = args.tensor || !(args.classify || args.curvature_limit);
    let q = match &args.at_q {
        Some(v) => sized(Some(v), n, "--at-q")?,
        None => default_point(&entry),
    };
    let u = sized(args.at_u.as_ref(), m, "--at-u")?;

    let classification = if args.classify {
        let spec = args.sample_box.clone().unwrap_or_else(|| default_box(&entry.name).to_string());
        let (qr, ur) = parse_box(&spec, n, m)?;
        let samples = args.samples.unwrap_or(256);
        let tol = args.tol.unwrap_or(1e-9);
        if samples == 0 || !(tol >= 0.0) {
            return Err(config_err("--samples must be positive and --tol non-negative"));
        }
        Some(classify_fitness(&entry.model, &box_from_ranges(&qr, &ur), samples, tol)?)
    } else {
        None
    };

    let tensor = if tensor_wanted || args.curvature_limit {
        Some(curvature_tensor(&entry.model, &q, &u)?)
    } else {
        None
    };
    let curvature_limit = if let (true, Some(tensor)) = (args.curvature_limit, &tensor) {
        let w = sized(
            Some(args.w.as_ref().ok_or_else(|| config_err("--curvature-limit needs --w"))?),
            m,
            "--w",
        )?;
        let lim = curvature_from_geodesics(&entry.model, &q, &u, &w, &default_s_sequence())?;
        let expected = tensor.half_quadratic(&w);
        Some(LimitOut {
            w: to_vec(&w),
            abs_error: (&lim.limit - &expected).amax(),
            limit: to_vec(&lim.limit),
            expected: to_vec(&expected),
            ratios: lim.ratios.iter().map(|(s, r)| (*s, to_vec(r))).collect(),
        })
    } else {
        None
    };

    let report = GeometryReport {
        command: "geometry",
        system: entry.name.clone(),
        config: &args,
        classification,
        tensor: tensor.filter(|_| tensor_wanted).map(|tensor| TensorOut {
            q: to_vec(&q),
            u: to_vec(&u),
            components: tensor.components.iter().map(to_rows).collect(),
            max_abs: tensor.max_abs(),
        }),
        curvature_limit,
    };
    emit_report(&report, args.out.as_ref(), "geometry.json")
}

use mocon_core::catalog::CatalogEntry;
use mocon_core::controller::feedback_linearization;
use mocon_core::dynamics::Potential;
use mocon_core::metric::reduced_blocks;
use mocon_core::reparam::cone_system;
use mocon_core::sampling::SampleBox;
use mocon_core::stability::{
    effective_minimum_test, effective_potential, kalman_rank, lyapunov_condition_iv_prime, mechanical_rank_test, solve_vibration_tuple,
    DescentVerdict, IvPrimeOptions, LyapunovCandidate, RankInfo, RankTestOptions, StabilityReport, Verdict, VibrationTuple, RANK_TOL,
};
use mocon_core::{Error, Vector};
use serde::Serialize;

use super::{default_k, load_system, parse_selection, parse_tuple, to_rows, to_vec};
use crate::args::StabilityArgs;
use crate::error::{config_err, CliResult};
use crate::output::emit_report;
use crate::spec::{parse_target, sized};

#[derive(Serialize)]
struct LinearizationOut {
    verdict: Verdict,
    xi_bar: Vec<f64>,
    a: Vec<Vec<f64>>,
    b: Vec<Vec<f64>>,
    equilibrium_residual: f64,
    rank: RankInfo,
}

#[derive(Serialize)]
struct StructureOut {
    ok: bool,
    detail: String,
}

#[derive(Serialize)]
struct LyapunovOut {
    verdict: Verdict,
    radius: f64,
    structure: StructureOut,
    descent: DescentVerdict,
}

#[derive(Serialize)]
struct StabilityOutput<'a> {
    command: &'static str,
    system: String,
    config: &'a StabilityArgs,
    q_bar: Vec<f64>,
    u_bar: Vec<f64>,
    rank_test: Option<StabilityReport>,
    effective: Option<StabilityReport>,
    linearization: Option<LinearizationOut>,
    lyapunov: Option<LyapunovOut>,
}

pub fn stability(args: StabilityArgs) -> CliResult<()> {
    if !(args.rank_test || args.effective || args.linearize || args.lyapunov) {
        return Err(config_err(
            "choose at least one of --rank-test, --effective, --linearize, --lyapunov",
        ));
    }
    let entry = load_system(args.system.as_deref(), args.g, args.pivot_mass)?;
    let (n, m) = (entry.model.dim_q(), entry.model.dim_u());
    let (q, u) = match args.target.as_deref() {
        Some(t) => parse_target(t)?,
        None => (vec![0.0], None),
    };
    let q_bar = sized(Some(&q), n, "target q")?;
    let u_bar = sized(u.as_ref(), m, "target u")?;
    let rank_opts = RankTestOptions {
        half_quadratic: args.half_quadratic.unwrap_or(true),
        ..Default::default()
    };
    let tuple = || -> CliResult<VibrationTuple> {
        if args.solve_w {
            let k = args.k.unwrap_or_else(|| default_k(n, m));
            Ok(solve_vibration_tuple(&entry.model, &entry.force, &q_bar, &u_bar, k, &rank_opts)?)
        } else {
            parse_tuple(&args.w, m)
        }
    };

    let rank_test = if args.rank_test {
        Some(mechanical_rank_test(
            &entry.model,
            &entry.force,
            &q_bar,
            &u_bar,
            &tuple()?,
            &rank_opts,
        )?)
    } else {
        None
    };
    let effective = if args.effective {
        let potential = entry.potential().ok_or(Error::MissingPotential)?;
        let beta = beta_potential(args.beta.as_deref(), &u_bar)?;
        Some(effective_minimum_test(&entry.model, potential, &tuple()?, &beta, &q_bar, &u_bar)?)
    } else {
        None
    };
    let linearization = if args.linearize {
        let sel = parse_selection(args.selection.as_deref(), &entry, args.k)?;
        let (pair, xi_bar) = feedback_linearization(&entry.model, &entry.force, &sel, &q_bar, &u_bar)?;
        let rank = kalman_rank(&pair.a, &pair.b, RANK_TOL)?;
        Some(LinearizationOut {
            verdict: Verdict::from_bool(rank.full()),
            xi_bar: to_vec(&xi_bar),
            a: to_rows(&pair.a),
            b: to_rows(&pair.b),
            equilibrium_residual: pair.residual,
            rank,
        })
    } else {
        None
    };
    let lyapunov = if args.lyapunov {
        let radius = args.radius.unwrap_or(0.5);
        if !(radius > 0.0) {
            return Err(config_err("--radius must be positive"));
        }
        Some(lyapunov_test(&entry, &tuple()?, &q_bar, &u_bar, radius)?)
    } else {
        None
    };

    let report = StabilityOutput {
        command: "stability",
        system: entry.name.clone(),
        config: &args,
        q_bar: to_vec(&q_bar),
        u_bar: to_vec(&u_bar),
        rank_test,
        effective,
        linearization,
        lyapunov,
    };
    emit_report(&report, args.out.as_ref(), "stability.json")
}

/// `β(u) = |u − ū|²` or zero.
fn beta_potential(name: Option<&str>, u_bar: &Vector) -> CliResult<Potential> {
    match name.unwrap_or("quad") {
        "quad" => {
            let (ub, ug) = (u_bar.clone(), u_bar.clone());
            Ok(Potential::new(move |_, u| Ok((u - &ub).norm_squared()))
                .with_gradient(move |q, u| Ok((Vector::zeros(q.len()), (u - &ug) * 2.0))))
        }
        "none" => Ok(Potential::new(|_, _| Ok(0.0)).with_gradient(|q, u| Ok((Vector::zeros(q.len()), Vector::zeros(u.len()))))),
        other => Err(config_err(format!("unknown --beta '{other}' (quad, none)"))),
    }
}

/// Effective Hamiltonian `½ pᵀA(q, ū)p + U_W(q, ū) − U_W(q̄, ū)` against
/// the averaged system with the control frozen at `ū`.
fn lyapunov_test(entry: &CatalogEntry, tuple: &VibrationTuple, q_bar: &Vector, u_bar: &Vector, radius: f64) -> CliResult<LyapunovOut> {
    let n = entry.model.dim_q();
    let potential = entry.potential().ok_or(Error::MissingPotential)?;
    let uw = effective_potential(&entry.model, potential, tuple)?;
    let base = uw.value(q_bar, u_bar)?;
    let (model_v, model_g) = (entry.model.clone(), entry.model.clone());
    let (uw_v, uw_g) = (uw.clone(), uw);
    let (ub_v, ub_g) = (u_bar.clone(), u_bar.clone());
    let split = move |x: &Vector| (x.rows(0, n).into_owned(), x.rows(n, n).into_owned());
    let value = move |x: &Vector| -> f64 {
        let (q, p) = split(x);
        let eval = || -> mocon_core::Result<f64> {
            let a = reduced_blocks(&model_v, &q, &ub_v)?.a;
            Ok(0.5 * p.dot(&(&a * &p)) + uw_v.value(&q, &ub_v)? - base)
        };
        eval().unwrap_or(f64::NAN)
    };
    let gradient = move |x: &Vector| -> Vector {
        let (q, p) = split(x);
        let eval = || -> mocon_core::Result<Vector> {
            let b = reduced_blocks(&model_g, &q, &ub_g)?;
            let (gq, _) = uw_g.gradient(&q, &ub_g)?;
            let mut out = Vector::zeros(2 * n);
            for i in 0..n {
                out[i] = gq[i] + 0.5 * p.dot(&(&b.da_dq[i] * &p));
            }
            out.rows_mut(n, n).copy_from(&(&b.a * &p));
            Ok(out)
        };
        eval().unwrap_or_else(|_| Vector::from_element(2 * n, f64::NAN))
    };
    let mut center = Vector::zeros(2 * n);
    center.rows_mut(0, n).copy_from(q_bar);
    let candidate = LyapunovCandidate::new(center.clone(), radius, value).with_gradient(gradient);
    let structure = match candidate.check_structure(64) {
        Ok(s) => StructureOut {
            ok: true,
            detail: format!("min on boundary {:.3e}, max |∇V| {:.3e}", s.min_boundary, s.max_gradient),
        },
        Err(e) => StructureOut {
            ok: false,
            detail: e.to_string(),
        },
    };
    let samples = sample_ball_box(&center, radius);
    let system = cone_system(&entry.model, &entry.force, u_bar);
    let descent = lyapunov_condition_iv_prime(&system, &candidate, &samples, &IvPrimeOptions::default())?;
    Ok(LyapunovOut {
        verdict: if structure.ok { descent.verdict } else { Verdict::Fail },
        radius,
        structure,
        descent,
    })
}

/// 21×21 grid in the plane, Halton points in higher dimensions.
fn sample_ball_box(center: &Vector, radius: f64) -> Vec<Vector> {
    let d = center.len();
    if d == 2 {
        let steps = 20;
        let h = 2.0 * radius / steps as f64;
        let mut out = Vec::with_capacity((steps + 1) * (steps + 1));
        for i in 0..=steps {
            for j in 0..=steps {
                let mut x = center.clone();
                x[0] += -radius + i as f64 * h;
                x[1] += -radius + j as f64 * h;
                out.push(x);
            }
        }
        out
    } else {
        let bounds = center.iter().map(|c| (c - radius, c + radius)).collect();
        SampleBox::new(bounds).points(512)
    }
}

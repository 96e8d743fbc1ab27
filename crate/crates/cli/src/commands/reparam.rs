use mocon_core::controller::{synthesize_signal, VibrationPlan};
use mocon_core::dynamics::{integrate, ControlSignal, ReducedState, StepSpec};
use mocon_core::reparam::{lift_mechanical, simulate_graph_on_grid, warp_from_signal_on_grid};
use mocon_core::stability::VibrationTuple;
use mocon_core::Vector;
use serde::Serialize;

use super::load_system;
use crate::args::ReparamArgs;
use crate::error::{config_err, CliResult};
use crate::output::{emit_report, pairs_csv, write_file};
use crate::spec::{sized, ControlSpec};

#[derive(Serialize)]
struct ReparamReport<'a> {
    command: &'static str,
    system: String,
    config: &'a ReparamArgs,
    samples: usize,
    t_end: f64,
    s_end: f64,
    warp_monotone: bool,
    /// `sup |x_direct(t) − x_graph(s(t))|` over states and time.
    max_round_trip_error: f64,
    warp_file: Option<String>,
}

pub fn reparam(args: ReparamArgs) -> CliResult<()> {
    let entry = load_system(args.system.as_deref(), args.g, args.pivot_mass)?;
    let (n, m) = (entry.model.dim_q(), entry.model.dim_u());
    let t_end = args.t_end.unwrap_or(2.0);
    let dt = args.dt.unwrap_or(1e-4);
    if !(t_end > 0.0 && dt > 0.0) {
        return Err(config_err("--t-end and --dt must be positive"));
    }
    let q0 = sized(args.q0.as_ref(), n, "--q0")?;
    let p0 = sized(args.p0.as_ref(), n, "--p0")?;
    let u0 = sized(args.u0.as_ref(), m, "--u0")?;
    let spec = ControlSpec::parse(args.control.as_deref().unwrap_or("sin:w=0.5,omega=5"))?;
    let signal: ControlSignal = match spec {
        ControlSpec::Const => ControlSignal::constant(u0.clone(), 0.0, t_end),
        ControlSpec::Sin(tones) => {
            let ws = tones.iter().map(|t| sized(Some(&t.w), m, "w")).collect::<CliResult<Vec<_>>>()?;
            let plan = VibrationPlan::new(
                VibrationTuple::new(ws)?,
                tones.iter().map(|t| t.omega).collect(),
                tones.iter().map(|t| t.phase).collect(),
            )?;
            synthesize_signal(&plan, &u0, 0.0, t_end)?
        }
        ControlSpec::Feedback(_) => return Err(config_err("reparam takes a const or sin control")),
    };
    let init = ReducedState::new(q0.clone(), p0.clone(), signal.value(0.0));
    let direct = integrate(&entry.model, &entry.force, &signal, &init, StepSpec::rk4(dt))?;
    let (warp, graph) = warp_from_signal_on_grid(&signal, &direct.times)?;
    let s_grid: Vec<f64> = direct.times.iter().map(|&t| warp.s_of_t(t)).collect();
    let lifted = lift_mechanical(&entry.model, &entry.force);
    let mut x0 = Vector::zeros(2 * n + m);
    x0.rows_mut(0, n).copy_from(&q0);
    x0.rows_mut(n, n).copy_from(&p0);
    x0.rows_mut(2 * n, m).copy_from(&init.u);
    let out = simulate_graph_on_grid(&lifted, &graph, &x0, &s_grid)?;

    let mut worst: f64 = 0.0;
    for (k, st) in direct.states.iter().enumerate() {
        let x = &out.x[k];
        worst = worst
            .max((x.rows(0, n) - &st.q).amax())
            .max((x.rows(n, n) - &st.p).amax())
            .max((x.rows(2 * n, m) - &st.u).amax())
            .max((out.t[k] - direct.times[k]).abs());
    }
    let warp_file = match &args.out {
        Some(dir) => {
            let csv = pairs_csv(("t", "s"), direct.times.iter().copied().zip(s_grid.iter().copied()));
            write_file(&dir.join("warp.csv"), &csv)?;
            Some("warp.csv".to_string())
        }
        None => None,
    };
    let report = ReparamReport {
        command: "reparam",
        system: entry.name.clone(),
        config: &args,
        samples: direct.len(),
        t_end: warp.t_end(),
        s_end: warp.s_end(),
        warp_monotone: warp.t_nondecreasing && warp.s_strictly_increasing,
        max_round_trip_error: worst,
        warp_file,
    };
    emit_report(&report, args.out.as_ref(), "reparam.json")
}

use std::f64::consts::PI;

use mocon_core::catalog::CatalogEntry;
use mocon_core::controller::{
    run_feedback, run_open_loop, synthesize_signal, ContainmentMetrics, FeedbackMetrics, FeedbackOptions, OpenLoopOptions, VibrationPlan,
};
use mocon_core::dynamics::{integrate, ControlSignal, ReducedState, StepSpec, Trajectory};
use mocon_core::stability::VibrationTuple;
use mocon_core::Vector;
use serde::Serialize;

use super::{load_system, parse_selection, to_vec};
use crate::args::SimulateArgs;
use crate::error::{config_err, CliResult};
use crate::output::{emit_report, trajectory_csv, write_file};
use crate::spec::{sized, ControlSpec, FeedbackSpec, Tone};

/// Everything a single run needs besides its control.
struct Setup {
    entry: CatalogEntry,
    q0: Vector,
    p0: Vector,
    u0: Vector,
    q_ref: Vector,
    t_end: f64,
    dt: Option<f64>,
    exit_radius: f64,
    separation: f64,
}

#[derive(Serialize)]
struct StateOut {
    t: f64,
    q: Vec<f64>,
    p: Vec<f64>,
    u: Vec<f64>,
}

#[derive(Serialize)]
struct RunReport {
    control: String,
    kind: &'static str,
    step: f64,
    samples: usize,
    final_state: StateOut,
    containment: ContainmentMetrics,
    #[serde(skip_serializing_if = "Option::is_none")]
    feedback: Option<FeedbackMetrics>,
    trajectory_file: Option<String>,
}

#[derive(Serialize)]
struct SimulateReport<'a> {
    command: &'static str,
    system: String,
    config: &'a SimulateArgs,
    runs: Vec<RunReport>,
}

pub fn simulate(args: SimulateArgs) -> CliResult<()> {
    let entry = load_system(args.system.as_deref(), args.g, args.pivot_mass)?;
    let (n, m) = (entry.model.dim_q(), entry.model.dim_u());
    let t_end = args.t_end.unwrap_or(10.0);
    let exit_radius = args.exit_radius.unwrap_or(PI / 2.0);
    let separation = args.separation.unwrap_or(20.0);
    if !(t_end > 0.0) || !(exit_radius > 0.0) || !(separation >= 0.0) {
        return Err(config_err("--t-end and --exit-radius must be positive, --separation non-negative"));
    }
    if args.dt.is_some_and(|dt| !(dt > 0.0)) {
        return Err(config_err("--dt must be positive"));
    }
    let setup = Setup {
        q0: sized(args.q0.as_ref(), n, "--q0")?,
        p0: sized(args.p0.as_ref(), n, "--p0")?,
        u0: sized(args.u0.as_ref(), m, "--u0")?,
        q_ref: sized(args.q_ref.as_ref(), n, "--q-ref")?,
        t_end,
        dt: args.dt,
        exit_radius,
        separation,
        entry,
    };
    let labels: Vec<String> = if args.control.is_empty() {
        vec!["const".into()]
    } else {
        args.control.clone()
    };
    let specs = labels.iter().map(|s| ControlSpec::parse(s)).collect::<CliResult<Vec<_>>>()?;
    let jobs = args.jobs.unwrap_or(1).max(1);

    let results = run_all(&setup, &specs, jobs);
    let mut runs = Vec::with_capacity(results.len());
    for (i, (result, label)) in results.into_iter().zip(&labels).enumerate() {
        let (traj, mut report) = result?;
        report.control = label.clone();
        if let Some(dir) = &args.out {
            let name = if labels.len() == 1 {
                "trajectory.csv".to_string()
            } else {
                format!("trajectory_{i}.csv")
            };
            write_file(&dir.join(&name), &trajectory_csv(&traj))?;
            report.trajectory_file = Some(name);
        }
        runs.push(report);
    }
    let report = SimulateReport {
        command: "simulate",
        system: setup.entry.name.clone(),
        config: &args,
        runs,
    };
    emit_report(&report, args.out.as_ref(), "metrics.json")
}

type RunResult = CliResult<(Trajectory, RunReport)>;

/// Runs the controls on up to `jobs` threads, keeping the input order.
fn run_all(setup: &Setup, specs: &[ControlSpec], jobs: usize) -> Vec<RunResult> {
    if jobs == 1 || specs.len() == 1 {
        return specs.iter().map(|s| run_one(setup, s)).collect();
    }
    let chunk = specs.len().div_ceil(jobs);
    std::thread::scope(|scope| {
        let handles: Vec<_> = specs
            .chunks(chunk)
            .map(|part| scope.spawn(move || part.iter().map(|s| run_one(setup, s)).collect::<Vec<_>>()))
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("simulation thread panicked"))
            .collect()
    })
}

fn run_one(setup: &Setup, spec: &ControlSpec) -> RunResult {
    match spec {
        ControlSpec::Const => run_const(setup),
        ControlSpec::Sin(tones) => run_sin(setup, tones),
        ControlSpec::Feedback(fb) => run_feedback_spec(setup, fb),
    }
}

fn report(kind: &'static str, step: f64, traj: &Trajectory, containment: ContainmentMetrics) -> RunReport {
    let (t, last) = (
        traj.times.last().copied().unwrap_or(0.0),
        traj.last().expect("trajectory has samples"),
    );
    RunReport {
        control: String::new(),
        kind,
        step,
        samples: traj.len(),
        final_state: StateOut {
            t,
            q: to_vec(&last.q),
            p: to_vec(&last.p),
            u: to_vec(&last.u),
        },
        containment,
        feedback: None,
        trajectory_file: None,
    }
}

fn run_const(s: &Setup) -> RunResult {
    let dt = s.dt.unwrap_or(1e-3);
    let signal = ControlSignal::constant(s.u0.clone(), 0.0, s.t_end);
    let init = ReducedState::new(s.q0.clone(), s.p0.clone(), s.u0.clone());
    let traj = integrate(&s.entry.model, &s.entry.force, &signal, &init, StepSpec::rk4(dt))?;
    let c = ContainmentMetrics::from_trajectory(&traj, &s.q_ref, s.exit_radius);
    let r = report("const", dt, &traj, c);
    Ok((traj, r))
}

fn run_sin(s: &Setup, tones: &[Tone]) -> RunResult {
    let m = s.entry.model.dim_u();
    let ws = tones.iter().map(|t| sized(Some(&t.w), m, "w")).collect::<CliResult<Vec<_>>>()?;
    let plan = VibrationPlan::new(
        VibrationTuple::new(ws)?,
        tones.iter().map(|t| t.omega).collect(),
        tones.iter().map(|t| t.phase).collect(),
    )?;
    if s.separation > 0.0 {
        plan.check_separation(s.entry.natural_frequency, s.separation)?;
    }
    let dt = s.dt.unwrap_or_else(|| plan.max_step().min(1e-3));
    // the vibration starts at its own phase, so u(0) may differ from ū
    let u_start = synthesize_signal(&plan, &s.u0, 0.0, s.t_end)?.value(0.0);
    let init = ReducedState::new(s.q0.clone(), s.p0.clone(), u_start);
    let opts = OpenLoopOptions {
        horizon: s.t_end,
        dt,
        exit_radius: s.exit_radius,
    };
    let run = run_open_loop(&s.entry.model, &s.entry.force, &plan, &init, &s.q_ref, &s.u0, &opts)?;
    let r = report("sin", dt, &run.trajectory, run.metrics);
    Ok((run.trajectory, r))
}

fn run_feedback_spec(s: &Setup, fb: &FeedbackSpec) -> RunResult {
    let (n, m) = (s.entry.model.dim_q(), s.entry.model.dim_u());
    let target = sized(Some(&fb.target), n, "target")?;
    let u_bar = match &fb.u_bar {
        Some(u) => sized(Some(u), m, "ubar")?,
        None => s.u0.clone(),
    };
    let selection = parse_selection(fb.selection.as_deref(), &s.entry, fb.k)?;
    let opts = FeedbackOptions {
        omega: fb.omega.unwrap_or(200.0),
        poles: fb.poles.clone(),
        horizon: s.t_end,
        dt: s.dt,
        natural_frequency: (s.separation > 0.0).then_some(s.entry.natural_frequency),
    };
    let init = ReducedState::new(s.q0.clone(), s.p0.clone(), u_bar.clone());
    let run = run_feedback(&s.entry.model, &s.entry.force, &selection, &target, &u_bar, &init, &opts)?;
    for w in &run.metrics.warnings {
        log::warn!("{w}");
    }
    let c = ContainmentMetrics::from_trajectory(&run.trajectory, &target, s.exit_radius);
    let step = run.trajectory.meta.step;
    let mut r = report("feedback", step, &run.trajectory, c);
    r.feedback = Some(run.metrics);
    Ok((run.trajectory, r))
}

//! Command pipelines behind the `phlmi` binary: validate a plant,
//! synthesize an observer-based controller, simulate the closed loop, and
//! the two packaged demos.

use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};

use crate::config::{load_config, parse_config, parse_matrix_file, PlantKind, RunConfig};
use crate::error::{Error, Result};
use crate::io::{
    synthesis_summary, write_deflection_csv, write_diagnostics_csv, write_eigenvalue_csv, write_matrix_csv,
    write_trace_csv, DesignBundle,
};
use crate::models::beam::{beam_initial_state, build_timoshenko, reconstruct_deflection, BeamStateLayout};
use crate::models::mems::MemsParams;
use crate::sim::{
    decay_rate, energy_balance_residual, integrate_with, max_overshoot, settling_time,
    simulate_closed_loop_linear_partial, simulate_closed_loop_nonlinear_partial, step_halving_ratio,
    ClosedLoopTrace, ConstantInputField, Dynamics, NonlinearPlant, Offsets, SimConfig,
};
use crate::synthesis::{
    controller_synthesis, observer_gain, passivity_certificates, verify_matching, LmiOptions,
    PassivityCertificate,
};
use crate::system::{min_symmetric_eigenvalue, plant_abc, spectrum, validate_ph, LinearPhSystem};

/// Exit-code contract: 0 success, 2 validation failure, 3 LMI infeasibility,
/// 4 simulation abort, 1 anything else.
pub fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::Infeasible { .. } => 3,
        Error::Integration { .. } => 4,
        Error::Structure(_)
        | Error::Dimension { .. }
        | Error::InvalidArgument(_)
        | Error::Domain(_)
        | Error::Config(_) => 2,
        _ => 1,
    }
}

/// Design-model data shared by the pipelines.
enum DesignPlant {
    /// Linear pH plant used both as design model and (possibly refined)
    /// simulation plant.
    Linear { sys: LinearPhSystem },
    /// Nonlinear MEMS with its operating point and linearization.
    Mems {
        params: crate::models::mems::MemsParams,
        eq: crate::models::mems::MemsEquilibrium,
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        c: DMatrix<f64>,
    },
}

impl DesignPlant {
    fn abc(&self) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
        match self {
            DesignPlant::Linear { sys } => {
                let (a, c) = plant_abc(sys);
                (a, sys.b().clone(), c)
            }
            DesignPlant::Mems { a, b, c, .. } => (a.clone(), b.clone(), c.clone()),
        }
    }
}

fn load_design_plant(cfg: &RunConfig) -> Result<DesignPlant> {
    match cfg.plant.kind {
        PlantKind::Beam => Ok(DesignPlant::Linear {
            sys: build_timoshenko(cfg.plant.n_d, &cfg.plant.beam)?,
        }),
        PlantKind::Mems => {
            let params = cfg.plant.mems.clone();
            let eq = params.equilibrium(cfg.plant.q_star)?;
            let (a, b, c) = params.linearize(&eq)?;
            Ok(DesignPlant::Mems { params, eq, a, b, c })
        }
        PlantKind::File => {
            let path = cfg
                .plant
                .matrices
                .as_ref()
                .ok_or_else(|| Error::Config("file plant without matrices path".into()))?;
            let text = std::fs::read_to_string(path)?;
            let (j, r, q, b) = parse_matrix_file(&text)?;
            Ok(DesignPlant::Linear {
                sys: LinearPhSystem::validated(j, r, q, b, &cfg.tolerances)?,
            })
        }
    }
}

/// Outcome of `validate`: printable report and overall verdict.
pub struct ValidationOutcome {
    pub pass: bool,
    pub text: String,
}

pub fn cmd_validate(cfg: &RunConfig, out_dir: Option<&Path>) -> Result<ValidationOutcome> {
    let mut text = String::new();
    let pass = match cfg.plant.kind {
        PlantKind::Beam | PlantKind::File => {
            let sys = match load_design_plant(cfg) {
                Ok(DesignPlant::Linear { sys }) => sys,
                Ok(_) => unreachable!(),
                Err(e) => {
                    // construction already rejected the quadruple; report it
                    text.push_str(&format!("structural validation failed: {e}\n"));
                    write_validation(out_dir, &text)?;
                    return Ok(ValidationOutcome { pass: false, text });
                }
            };
            let report = validate_ph(&sys, &cfg.tolerances);
            text.push_str(&format!("n = {}, m = {}\n", sys.n(), sys.m()));
            text.push_str(&report.summary());
            text.push('\n');
            let spec = spectrum(&sys.a())?;
            text.push_str(&format!(
                "spectral abscissa of A: {:.6e} (hurwitz: {})\n",
                spec.spectral_abscissa, spec.hurwitz
            ));
            report.pass
        }
        PlantKind::Mems => {
            let DesignPlant::Mems { eq, a, b, c, .. } = load_design_plant(cfg)? else {
                unreachable!()
            };
            text.push_str("MEMS linearization about the configured operating point\n");
            text.push_str(&format!(
                "equilibrium: q* = {:.6e} m, p* = {:.6e}, Q* = {:.6e} C, u* = {:.6e} V, y* = {:.6e} A\n",
                eq.q, eq.p, eq.charge, eq.u, eq.y
            ));
            text.push_str(&format!("A = {a:.6e}"));
            text.push_str(&format!("B = {b:.6e}"));
            text.push_str(&format!("C = {c:.6e}"));
            let spec = spectrum(&a)?;
            text.push_str(&format!(
                "spectral abscissa of A: {:.6e} (hurwitz: {})\n",
                spec.spectral_abscissa, spec.hurwitz
            ));
            true
        }
    };
    write_validation(out_dir, &text)?;
    Ok(ValidationOutcome { pass, text })
}

fn write_validation(out_dir: Option<&Path>, text: &str) -> Result<()> {
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("validation.txt"), text)?;
    }
    Ok(())
}

/// Everything `synthesize` produces for one design.
pub struct SynthesisOutcome {
    pub bundle: DesignBundle,
    pub certificate: PassivityCertificate,
    pub matching_residual: f64,
    pub pass: bool,
    pub summary: String,
}

pub fn cmd_synthesize(cfg: &RunConfig, design_index: usize, out_dir: &Path) -> Result<SynthesisOutcome> {
    let plant = load_design_plant(cfg)?;
    let (a, b, c) = plant.abc();
    let n = a.nrows();
    let m = b.ncols();
    let obs_cfg = cfg
        .observer_bounds
        .as_ref()
        .ok_or_else(|| Error::Config("synthesize needs an [observer_bounds] section".into()))?;
    let obs_bounds = obs_cfg.materialize(n, n - m)?;
    let ctrl_bounds = cfg.design(design_index)?.materialize(n)?;
    let opts = LmiOptions { max_iter: 800, seed: cfg.seed };

    let observer = observer_gain(&a, &c, &obs_bounds, &cfg.tolerances, &opts)?;
    let ctrl = controller_synthesis(&a, &b, &c, &observer.l, &ctrl_bounds, &cfg.tolerances, &opts)?;
    let certificate = passivity_certificates(&ctrl, &cfg.tolerances);
    let matching_residual = verify_matching(&a, &b, &c, &observer.l, &ctrl);

    let spec_a = spectrum(&a)?;
    let spec_al = spectrum(&observer.a_l)?;
    let a_k = &a - &b * &ctrl.k;
    let spec_ak = spectrum(&a_k)?;

    // certificates must be strict whenever a definite damping floor was set
    let gamma1_pd = min_symmetric_eigenvalue(&ctrl_bounds.gamma1) > cfg.tolerances.tol_pd;
    let certs_ok = !gamma1_pd
        || (certificate.spr_epsilon > 0.0 && certificate.osp_epsilon > 0.0 && certificate.zsd);
    let pass = spec_al.hurwitz
        && spec_ak.hurwitz
        && matching_residual <= cfg.tolerances.tol_match
        && certs_ok;

    let design_dir = out_dir.join(format!("design{design_index}"));
    std::fs::create_dir_all(&design_dir)?;
    let bundle = DesignBundle {
        l: observer.l.clone(),
        ctrl,
        seed: cfg.seed,
        design: design_index,
    };
    bundle.save(&design_dir.join("design.bundle"))?;
    write_matrix_csv(&design_dir.join("L.csv"), &bundle.l)?;
    write_matrix_csv(&design_dir.join("K.csv"), &bundle.ctrl.k)?;
    write_matrix_csv(&design_dir.join("J_c.csv"), &bundle.ctrl.j_c)?;
    write_matrix_csv(&design_dir.join("R_c.csv"), &bundle.ctrl.r_c)?;
    write_matrix_csv(&design_dir.join("Q_c.csv"), &bundle.ctrl.q_c)?;
    write_matrix_csv(&design_dir.join("B_c.csv"), &bundle.ctrl.b_c)?;
    write_eigenvalue_csv(
        &design_dir.join("eigenvalues.csv"),
        &[
            ("A", &spec_a.eigenvalues),
            ("A_L", &spec_al.eigenvalues),
            ("A_K", &spec_ak.eigenvalues),
        ],
    )?;
    let summary = synthesis_summary(
        design_index,
        n,
        m,
        matching_residual,
        &certificate,
        &[
            ("A", spec_a.spectral_abscissa),
            ("A_L", spec_al.spectral_abscissa),
            ("A - B K", spec_ak.spectral_abscissa),
        ],
    );
    std::fs::write(design_dir.join("summary.txt"), &summary)?;

    Ok(SynthesisOutcome {
        bundle,
        certificate,
        matching_residual,
        pass,
        summary,
    })
}

/// Simulation entry point. Closed-loop runs read the design bundle written
/// by `synthesize` into `out_dir/design{i}/`; `open_loop` simulates the
/// plant alone. On an integration abort the partial trace is flushed before
/// the error propagates.
pub fn cmd_simulate(cfg: &RunConfig, design_index: usize, open_loop: bool, out_dir: &Path) -> Result<PathBuf> {
    let case_dir = if open_loop {
        out_dir.join("open_loop")
    } else {
        out_dir.join(format!("design{design_index}"))
    };
    std::fs::create_dir_all(&case_dir)?;

    match cfg.plant.kind {
        PlantKind::Beam => simulate_beam(cfg, design_index, open_loop, out_dir, &case_dir),
        PlantKind::File => simulate_file_plant(cfg, design_index, open_loop, out_dir, &case_dir),
        PlantKind::Mems => simulate_mems(cfg, design_index, open_loop, out_dir, &case_dir),
    }?;
    Ok(case_dir)
}

/// Open-loop trace wrapper: no controller states, zero controller energy.
fn open_loop_trace(
    times: Vec<f64>,
    states: Vec<DVector<f64>>,
    u_of: impl Fn(usize) -> DVector<f64>,
    y_of: impl Fn(&DVector<f64>) -> DVector<f64>,
    h_of: impl Fn(&DVector<f64>) -> f64,
    m: usize,
) -> ClosedLoopTrace {
    let len = times.len();
    let mut trace = ClosedLoopTrace {
        times,
        plant_states: Vec::with_capacity(len),
        controller_states: vec![DVector::zeros(0); len],
        u: Vec::with_capacity(len),
        y: Vec::with_capacity(len),
        u_c: vec![DVector::zeros(m); len],
        y_c: vec![DVector::zeros(m); len],
        y_r: vec![DVector::zeros(m); len],
        r: vec![DVector::zeros(m); len],
        h_plant: Vec::with_capacity(len),
        h_ctrl: vec![0.0; len],
        est_err: vec![0.0; len],
    };
    for (k, x) in states.into_iter().enumerate() {
        trace.u.push(u_of(k));
        trace.y.push(y_of(&x));
        trace.h_plant.push(h_of(&x));
        trace.plant_states.push(x);
    }
    trace
}

fn simulate_beam(
    cfg: &RunConfig,
    design_index: usize,
    open_loop: bool,
    out_dir: &Path,
    case_dir: &Path,
) -> Result<()> {
    let n_d = cfg.sim.plant_n_d.max(2);
    let plant = build_timoshenko(n_d, &cfg.plant.beam)?;
    let layout = BeamStateLayout::new(n_d, &cfg.plant.beam)?;
    let x0 = beam_initial_state(n_d, &cfg.plant.beam, cfg.sim.tip_force)?;
    let sim_cfg = SimConfig::new(cfg.sim.dt, cfg.sim.t_end).with_stride(cfg.sim.record_stride);

    let (trace, abort, design_layout) = if open_loop {
        let a = plant.a();
        let mut times = Vec::new();
        let mut states = Vec::new();
        let n_steps = sim_cfg.n_steps();
        let outcome = integrate_with(&Dynamics::Linear { a: &a, forcing: None }, &x0, &sim_cfg, |k, t, x| {
            if k % sim_cfg.record_stride == 0 || k == n_steps {
                times.push(t);
                states.push(x.clone());
            }
        });
        let abort = match outcome {
            Ok(_) => None,
            Err(e @ Error::Integration { .. }) => Some(e),
            Err(e) => return Err(e),
        };
        let m = plant.m();
        let trace = open_loop_trace(
            times,
            states,
            |_| DVector::zeros(m),
            |x| plant.output(x),
            |x| plant.hamiltonian(x),
            m,
        );
        (trace, abort, None)
    } else {
        let bundle = DesignBundle::load(&out_dir.join(format!("design{design_index}/design.bundle")))?;
        let design_sys = build_timoshenko(cfg.plant.n_d, &cfg.plant.beam)?;
        let design_c = design_sys.c();
        let design_layout = BeamStateLayout::new(cfg.plant.n_d, &cfg.plant.beam)?;
        let xhat0 = DVector::zeros(bundle.ctrl.n());
        let (trace, abort) = simulate_closed_loop_linear_partial(
            &plant,
            &bundle.ctrl,
            Some(&design_c),
            None,
            &x0,
            &xhat0,
            &sim_cfg,
        )?;
        (trace, abort, Some(design_layout))
    };

    write_trace_csv(&case_dir.join("trace.csv"), &trace)?;
    write_beam_deflection(case_dir, &trace, &layout, design_layout.as_ref(), cfg)?;
    write_beam_diagnostics(case_dir, cfg, &plant, &trace, &layout, &x0)?;
    if let Some(e) = abort {
        return Err(e);
    }
    Ok(())
}

fn write_beam_deflection(
    case_dir: &Path,
    trace: &ClosedLoopTrace,
    layout: &BeamStateLayout,
    design_layout: Option<&BeamStateLayout>,
    cfg: &RunConfig,
) -> Result<()> {
    // decimate the surface to at most ~200 time samples
    let step = (trace.len() / 200).max(1);
    let mut times = Vec::new();
    let mut w = Vec::new();
    let mut w_hat = Vec::new();
    let mut zeta: Vec<f64> = Vec::new();
    for k in (0..trace.len()).step_by(step) {
        let prof = reconstruct_deflection(&trace.plant_states[k], layout, &cfg.plant.beam)?;
        if zeta.is_empty() {
            zeta = prof.zeta.clone();
        }
        if let Some(dl) = design_layout {
            let prof_hat = reconstruct_deflection(&trace.controller_states[k], dl, &cfg.plant.beam)?;
            w_hat.push(prof_hat.sample_w(&zeta));
        } else {
            w_hat.push(vec![0.0; zeta.len()]);
        }
        w.push(prof.w);
        times.push(trace.times[k]);
    }
    write_deflection_csv(&case_dir.join("deflection.csv"), &times, &zeta, &w, &w_hat)
}

fn write_beam_diagnostics(
    case_dir: &Path,
    cfg: &RunConfig,
    plant: &LinearPhSystem,
    trace: &ClosedLoopTrace,
    layout: &BeamStateLayout,
    x0: &DVector<f64>,
) -> Result<()> {
    let tip: Vec<f64> = trace
        .plant_states
        .iter()
        .map(|x| reconstruct_deflection(x, layout, &cfg.plant.beam).map(|p| p.tip()))
        .collect::<Result<_>>()?;
    let tip0 = tip.first().copied().unwrap_or(0.0);
    let band = 0.02 * tip0.abs().max(1e-300);
    // conservative plant: unmodeled flow is the port power u' y
    let residual = energy_balance_residual(&trace.times, &trace.h_plant, |j| {
        0.5 * (trace.u[j].dot(&trace.y[j]) + trace.u[j + 1].dot(&trace.y[j + 1]))
    });
    // step-resolution self-check over a short window of the open-loop plant
    let a = plant.a();
    let window = cfg.sim.dt * 64.0;
    let ratio = step_halving_ratio(&Dynamics::Linear { a: &a, forcing: None }, x0, cfg.sim.dt, window)
        .unwrap_or(f64::NAN);
    write_diagnostics_csv(
        &case_dir.join("diagnostics.csv"),
        &[
            ("settling_time_tip", settling_time(&trace.times, &tip, 0.0, band)),
            ("error_decay_rate", decay_rate(&trace.times, &trace.est_err)),
            ("max_overshoot_tip", max_overshoot(&tip, 0.0)),
            ("energy_balance_residual", residual),
            ("step_halving_ratio", ratio),
        ],
    )
}

fn simulate_file_plant(
    cfg: &RunConfig,
    design_index: usize,
    open_loop: bool,
    out_dir: &Path,
    case_dir: &Path,
) -> Result<()> {
    let DesignPlant::Linear { sys: plant } = load_design_plant(cfg)? else {
        unreachable!()
    };
    let sim_cfg = SimConfig::new(cfg.sim.dt, cfg.sim.t_end).with_stride(cfg.sim.record_stride);
    let x0 = DVector::zeros(plant.n());
    let (trace, abort) = if open_loop {
        let a = plant.a();
        let mut times = Vec::new();
        let mut states = Vec::new();
        let n_steps = sim_cfg.n_steps();
        let outcome = integrate_with(&Dynamics::Linear { a: &a, forcing: None }, &x0, &sim_cfg, |k, t, x| {
            if k % sim_cfg.record_stride == 0 || k == n_steps {
                times.push(t);
                states.push(x.clone());
            }
        });
        let abort = match outcome {
            Ok(_) => None,
            Err(e @ Error::Integration { .. }) => Some(e),
            Err(e) => return Err(e),
        };
        let m = plant.m();
        (
            open_loop_trace(times, states, |_| DVector::zeros(m), |x| plant.output(x), |x| plant.hamiltonian(x), m),
            abort,
        )
    } else {
        let bundle = DesignBundle::load(&out_dir.join(format!("design{design_index}/design.bundle")))?;
        let xhat0 = DVector::zeros(bundle.ctrl.n());
        simulate_closed_loop_linear_partial(&plant, &bundle.ctrl, None, None, &x0, &xhat0, &sim_cfg)?
    };
    write_trace_csv(&case_dir.join("trace.csv"), &trace)?;
    write_diagnostics_csv(
        &case_dir.join("diagnostics.csv"),
        &[("error_decay_rate", decay_rate(&trace.times, &trace.est_err))],
    )?;
    if let Some(e) = abort {
        return Err(e);
    }
    Ok(())
}

fn simulate_mems(
    cfg: &RunConfig,
    design_index: usize,
    open_loop: bool,
    out_dir: &Path,
    case_dir: &Path,
) -> Result<()> {
    let DesignPlant::Mems { params, eq, .. } = load_design_plant(cfg)? else {
        unreachable!()
    };
    let x_star = eq.state();
    let x0 = DVector::from_column_slice(&[eq.q, eq.p, cfg.sim.charge_factor * eq.charge]);
    let sim_cfg = SimConfig::new(cfg.sim.dt, cfg.sim.t_end).with_stride(cfg.sim.record_stride);

    let (trace, abort) = if open_loop {
        // constant bias at the operating point, no feedback
        let u = DVector::from_element(1, eq.u);
        let field = ConstantInputField { plant: &params, u: u.clone() };
        let mut times = Vec::new();
        let mut states = Vec::new();
        let n_steps = sim_cfg.n_steps();
        let outcome = integrate_with(&Dynamics::Nonlinear(&field), &x0, &sim_cfg, |k, t, x| {
            if k % sim_cfg.record_stride == 0 || k == n_steps {
                times.push(t);
                states.push(x.clone());
            }
        });
        let abort = match outcome {
            Ok(_) => None,
            Err(e @ Error::Integration { .. }) => Some(e),
            Err(e) => return Err(e),
        };
        (
            open_loop_trace(
                times,
                states,
                |_| u.clone(),
                |x| NonlinearPlant::output(&params, x).unwrap_or_else(|_| DVector::from_element(1, f64::NAN)),
                |x| NonlinearPlant::hamiltonian(&params, x).unwrap_or(f64::NAN),
                1,
            ),
            abort,
        )
    } else {
        let bundle = DesignBundle::load(&out_dir.join(format!("design{design_index}/design.bundle")))?;
        let xhat0 = DVector::zeros(bundle.ctrl.n());
        let offsets = Offsets {
            x_star: x_star.clone(),
            u_star: DVector::from_element(1, eq.u),
            y_star: DVector::from_element(1, eq.y),
        };
        simulate_closed_loop_nonlinear_partial(&params, &bundle.ctrl, None, &x0, &xhat0, &sim_cfg, Some(offsets))?
    };

    write_trace_csv(&case_dir.join("trace.csv"), &trace)?;
    let q_series: Vec<f64> = trace.plant_states.iter().map(|x| x[0]).collect();
    let q_peak = q_series.iter().map(|q| (q - eq.q).abs()).fold(0.0_f64, f64::max);
    let flows: Vec<f64> = (0..trace.len().saturating_sub(1))
        .map(|j| {
            let mid = 0.5 * (&trace.plant_states[j] + &trace.plant_states[j + 1]);
            let u_mid = 0.5 * (&trace.u[j] + &trace.u[j + 1]);
            let y = mems_output_or_nan(&params, &mid);
            y * u_mid[0] - params.b_damp * (mid[1] / params.m).powi(2) - params.r * y * y
        })
        .collect();
    let residual = if flows.is_empty() {
        0.0
    } else {
        energy_balance_residual(&trace.times, &trace.h_plant, |j| flows[j])
    };
    let u_star = DVector::from_element(1, eq.u);
    let field = ConstantInputField { plant: &params, u: u_star };
    let ratio = step_halving_ratio(
        &Dynamics::Nonlinear(&field),
        &x0,
        cfg.sim.dt,
        cfg.sim.dt * 64.0,
    )
    .unwrap_or(f64::NAN);
    // the plate starts exactly at its stationary position, so overshoot
    // relative to the initial deviation is meaningless; report the peak
    write_diagnostics_csv(
        &case_dir.join("diagnostics.csv"),
        &[
            (
                "settling_time_q",
                settling_time(&trace.times, &q_series, eq.q, 0.02 * q_peak.max(1e-300)),
            ),
            ("error_decay_rate", decay_rate(&trace.times, &trace.est_err)),
            ("peak_deviation_q", q_peak),
            ("energy_balance_residual", residual),
            ("step_halving_ratio", ratio),
        ],
    )?;
    if let Some(e) = abort {
        return Err(e);
    }
    Ok(())
}

/// Flexible-beam demo: validation, both designs, open- and closed-loop runs.
pub fn run_demo_beam(out_dir: &Path) -> Result<()> {
    let cfg = parse_config(crate::config::BEAM_DEMO_CONFIG)?;
    run_demo(&cfg, crate::config::BEAM_DEMO_CONFIG, out_dir)
}

/// MEMS optical-switch demo.
pub fn run_demo_mems(out_dir: &Path) -> Result<()> {
    let cfg = parse_config(crate::config::MEMS_DEMO_CONFIG)?;
    run_demo(&cfg, crate::config::MEMS_DEMO_CONFIG, out_dir)
}

fn run_demo(cfg: &RunConfig, cfg_text: &str, out_dir: &Path) -> Result<()> {
    std::fs::create_dir_all(out_dir)?;
    std::fs::write(out_dir.join("run.conf"), cfg_text.trim_start())?;

    let validation = cmd_validate(cfg, Some(out_dir))?;
    print!("{}", validation.text);
    if !validation.pass {
        return Err(Error::Structure("demo plant failed validation".into()));
    }
    for design in 1..=cfg.controller_designs.len() {
        let outcome = cmd_synthesize(cfg, design, out_dir)?;
        print!("{}", outcome.summary);
        if !outcome.pass {
            return Err(Error::Internal(format!("design {design} failed its certificates")));
        }
    }
    println!("simulating open loop ...");
    cmd_simulate(cfg, 1, true, out_dir)?;
    for design in 1..=cfg.controller_designs.len() {
        println!("simulating closed loop, design {design} ...");
        cmd_simulate(cfg, design, false, out_dir)?;
    }
    println!("outputs written under {}", out_dir.display());
    Ok(())
}

/// Loads a config file and applies the `--out` override.
pub fn load_run_config(path: &Path, out_override: Option<PathBuf>) -> Result<(RunConfig, PathBuf)> {
    let mut cfg = load_config(path)?;
    if let Some(out) = out_override {
        cfg.out = Some(out);
    }
    let out = cfg.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    Ok((cfg, out))
}

fn mems_output_or_nan(params: &MemsParams, x: &DVector<f64>) -> f64 {
    MemsParams::output(params, x).unwrap_or(f64::NAN)
}

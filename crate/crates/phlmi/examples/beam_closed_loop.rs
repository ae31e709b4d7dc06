//! Boundary control of the flexible beam: the 20-state controller designed
//! on the coarse model regulates a much finer discretization, coupled only
//! through the four boundary ports. Prints tip-deflection settling for the
//! open loop and both designs.
//!
//! A reduced plant resolution keeps this example quick; `demo-beam` runs
//! the full-size configuration.
//!
//! ```bash
//! cargo run --release --example beam_closed_loop
//! ```

use nalgebra::DVector;
use phlmi::config::{parse_config, BEAM_DEMO_CONFIG};
use phlmi::models::beam::{beam_initial_state, build_timoshenko, reconstruct_deflection, BeamStateLayout};
use phlmi::sim::{integrate_with, settling_time, simulate_closed_loop_linear, Dynamics, SimConfig};
use phlmi::synthesis::{controller_synthesis, observer_gain, LmiOptions};
use phlmi::system::plant_abc;

fn main() -> phlmi::Result<()> {
    let cfg = parse_config(BEAM_DEMO_CONFIG)?;
    let params = cfg.plant.beam.clone();

    // coarse design model
    let design_sys = build_timoshenko(cfg.plant.n_d, &params)?;
    let (a, c) = plant_abc(&design_sys);
    let b = design_sys.b().clone();
    let n = design_sys.n();
    let opts = LmiOptions { max_iter: 800, seed: cfg.seed };
    let obs_bounds = cfg.observer_bounds.as_ref().unwrap().materialize(n, n - design_sys.m())?;
    let observer = observer_gain(&a, &c, &obs_bounds, &cfg.tolerances, &opts)?;

    // finer simulation plant coupled through the boundary ports
    let n_d = 40;
    let plant = build_timoshenko(n_d, &params)?;
    let layout = BeamStateLayout::new(n_d, &params)?;
    let x0 = beam_initial_state(n_d, &params, cfg.sim.tip_force)?;
    let sim_cfg = SimConfig::new(1e-4, 10.0).with_stride(20);
    println!(
        "plant {} states, controller {} states, tip deflection starts at {:.4} m",
        plant.n(),
        n,
        reconstruct_deflection(&x0, &layout, &params)?.tip()
    );

    let band = 0.02 * reconstruct_deflection(&x0, &layout, &params)?.tip().abs();

    // open loop: conservative, never settles
    let a_plant = plant.a();
    let mut times = Vec::new();
    let mut tip = Vec::new();
    let steps = sim_cfg.n_steps();
    integrate_with(&Dynamics::Linear { a: &a_plant, forcing: None }, &x0, &sim_cfg, |k, t, x| {
        if k % sim_cfg.record_stride == 0 || k == steps {
            times.push(t);
            tip.push(reconstruct_deflection(x, &layout, &params).unwrap().tip());
        }
    })?;
    println!("open loop: settling {:?} s", settling_time(&times, &tip, 0.0, band));

    for design in 1..=cfg.controller_designs.len() {
        let bounds = cfg.design(design)?.materialize(n)?;
        let ctrl = controller_synthesis(&a, &b, &c, &observer.l, &bounds, &cfg.tolerances, &opts)?;
        let trace = simulate_closed_loop_linear(
            &plant,
            &ctrl,
            Some(&c),
            None,
            &x0,
            &DVector::zeros(n),
            &sim_cfg,
        )?;
        let tip: Vec<f64> = trace
            .plant_states
            .iter()
            .map(|x| reconstruct_deflection(x, &layout, &params).unwrap().tip())
            .collect();
        let settle = settling_time(&trace.times, &tip, 0.0, band);
        let h_end = trace.h_plant.last().unwrap() + trace.h_ctrl.last().unwrap();
        println!(
            "design {design}: 2%-band settling {settle:.3} s, total stored energy {:.3e} -> {:.3e} J",
            trace.h_plant[0] + trace.h_ctrl[0],
            h_end
        );
    }
    Ok(())
}

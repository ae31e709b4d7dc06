//! Regulation of the nonlinear MEMS switch about its operating point: the
//! linear pH controller sees deviation variables, the plant runs its full
//! nonlinear dynamics.
//!
//! ```bash
//! cargo run --release --example mems_closed_loop
//! ```

use nalgebra::DVector;
use phlmi::config::{parse_config, MEMS_DEMO_CONFIG};
use phlmi::sim::{decay_rate, simulate_closed_loop_nonlinear, Offsets, SimConfig};
use phlmi::synthesis::{controller_synthesis, observer_gain, LmiOptions};
use phlmi::system::spectrum;

fn main() -> phlmi::Result<()> {
    let cfg = parse_config(MEMS_DEMO_CONFIG)?;
    let params = cfg.plant.mems.clone();
    let eq = params.equilibrium(cfg.plant.q_star)?;
    let (a, b, c) = params.linearize(&eq)?;
    let opts = LmiOptions { max_iter: 800, seed: cfg.seed };
    let obs_bounds = cfg.observer_bounds.as_ref().unwrap().materialize(3, 2)?;
    let observer = observer_gain(&a, &c, &obs_bounds, &cfg.tolerances, &opts)?;

    let x_star = eq.state();
    let x0 = DVector::from_column_slice(&[eq.q, eq.p, cfg.sim.charge_factor * eq.charge]);
    let sim_cfg = SimConfig::new(cfg.sim.dt, cfg.sim.t_end);
    println!(
        "start: charge at {:.0}% of its stationary value; horizon {} s",
        100.0 * cfg.sim.charge_factor,
        cfg.sim.t_end
    );

    for design in 1..=cfg.controller_designs.len() {
        let bounds = cfg.design(design)?.materialize(3)?;
        let ctrl = controller_synthesis(&a, &b, &c, &observer.l, &bounds, &cfg.tolerances, &opts)?;
        let trace = simulate_closed_loop_nonlinear(
            &params,
            &ctrl,
            None,
            &x0,
            &DVector::zeros(3),
            &sim_cfg,
            Some(Offsets {
                x_star: x_star.clone(),
                u_star: DVector::from_element(1, eq.u),
                y_star: DVector::from_element(1, eq.y),
            }),
        )?;
        let dev: Vec<f64> = trace.plant_states.iter().map(|x| (x - &x_star).norm()).collect();
        let q_peak = trace
            .plant_states
            .iter()
            .map(|x| (x[0] - eq.q).abs())
            .fold(0.0_f64, f64::max);
        println!(
            "design {design}: abscissa(A - BK) {:.1}, plate excursion peak {:.3e} m, deviation decay rate {:.1} 1/s, observer error decay {:.1} 1/s",
            spectrum(&(&a - &b * &ctrl.k))?.spectral_abscissa,
            q_peak,
            decay_rate(&trace.times, &dev),
            decay_rate(&trace.times, &trace.est_err),
        );
    }
    Ok(())
}

//! Full synthesis on the beam design model: observer gain, controller
//! realization in pH form, matching identity and passivity certificates.
//!
//! ```bash
//! cargo run --example controller_synthesis
//! ```

use phlmi::config::{parse_config, BEAM_DEMO_CONFIG};
use phlmi::models::beam::build_timoshenko;
use phlmi::synthesis::{controller_synthesis, observer_gain, passivity_certificates, verify_matching, LmiOptions};
use phlmi::system::{plant_abc, spectrum};

fn main() -> phlmi::Result<()> {
    let cfg = parse_config(BEAM_DEMO_CONFIG)?;
    let sys = build_timoshenko(cfg.plant.n_d, &cfg.plant.beam)?;
    let (a, c) = plant_abc(&sys);
    let b = sys.b().clone();
    let (n, m) = (sys.n(), sys.m());
    println!("design model: {n} states, {m} boundary ports");

    let opts = LmiOptions { max_iter: 800, seed: cfg.seed };
    let obs_bounds = cfg.observer_bounds.as_ref().unwrap().materialize(n, n - m)?;
    let observer = observer_gain(&a, &c, &obs_bounds, &cfg.tolerances, &opts)?;
    println!("observer error abscissa {:.4}", spectrum(&observer.a_l)?.spectral_abscissa);

    for design in 1..=cfg.controller_designs.len() {
        let bounds = cfg.design(design)?.materialize(n)?;
        let ctrl = controller_synthesis(&a, &b, &c, &observer.l, &bounds, &cfg.tolerances, &opts)?;
        let residual = verify_matching(&a, &b, &c, &observer.l, &ctrl);
        let cert = passivity_certificates(&ctrl, &cfg.tolerances);
        let closed = spectrum(&(&a - &b * &ctrl.k))?;
        println!(
            "design {design}: matching residual {residual:.3e}, abscissa(A - BK) {:.4}",
            closed.spectral_abscissa
        );
        println!(
            "    spr_epsilon {:.4e}, osp_epsilon {:.4e}, zsd {}, lambda_min(R_c) {:.4e}",
            cert.spr_epsilon, cert.osp_epsilon, cert.zsd, cert.r_c_min_eig
        );
    }
    Ok(())
}

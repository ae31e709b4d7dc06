//! Observer gain for the MEMS switch by the dual structure-assignment
//! problem on `(A', C')`.
//!
//! ```bash
//! cargo run --example observer_design
//! ```

use phlmi::config::{parse_config, MEMS_DEMO_CONFIG};
use phlmi::synthesis::{observer_gain, LmiOptions};
use phlmi::system::spectrum;

fn main() -> phlmi::Result<()> {
    let cfg = parse_config(MEMS_DEMO_CONFIG)?;
    let params = &cfg.plant.mems;
    let eq = params.equilibrium(cfg.plant.q_star)?;
    let (a, _b, c) = params.linearize(&eq)?;
    println!(
        "operating point: q* = {:.4e} m, Q* = {:.4e} C, u* = {:.4e} V",
        eq.q, eq.charge, eq.u
    );

    let bounds = cfg.observer_bounds.as_ref().unwrap().materialize(3, 2)?;
    let opts = LmiOptions { max_iter: 800, seed: cfg.seed };
    let obs = observer_gain(&a, &c, &bounds, &cfg.tolerances, &opts)?;

    println!("L' = {:?}", obs.l.transpose().as_slice());
    let open = spectrum(&a)?;
    let closed = spectrum(&obs.a_l)?;
    println!("spectral abscissa: open loop {:.1}, observer error dynamics {:.1}", open.spectral_abscissa, closed.spectral_abscissa);
    for z in &closed.eigenvalues {
        println!("    lambda(A - LC) = {:+.4e} {:+.4e}i", z.re, z.im);
    }

    // the dual design certifies (A - LC)' = (J_d - R_d) Q_d
    let assigned = (&obs.dual.j_d - &obs.dual.r_d) * &obs.dual.q_d;
    let residual = (obs.a_l.transpose() - assigned).norm() / a.norm();
    println!("duality residual {residual:.3e}");
    Ok(())
}

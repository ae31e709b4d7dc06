//! Build the staggered-grid beam and check its pH structure.
//!
//! ```bash
//! cargo run --example validate_beam
//! ```

use phlmi::models::beam::{build_timoshenko, BeamParams};
use phlmi::system::{plant_abc, spectrum, validate_ph, Tolerances};

fn main() -> phlmi::Result<()> {
    let params = BeamParams::default();
    for n_d in [2, 5, 20] {
        let sys = build_timoshenko(n_d, &params)?;
        let report = validate_ph(&sys, &Tolerances::default());
        let (a, _c) = plant_abc(&sys);
        let spec = spectrum(&a)?;
        println!(
            "n_d = {n_d:>2}: n = {:>2}, m = {}, {} | spectral abscissa {:+.3e} (conservative plant)",
            sys.n(),
            sys.m(),
            if report.pass { "structure ok" } else { "structure FAILED" },
            spec.spectral_abscissa,
        );
        if n_d == 5 {
            for check in &report.checks {
                println!("    {:<28} violation {:.3e}", check.name, check.violation);
            }
        }
    }
    Ok(())
}

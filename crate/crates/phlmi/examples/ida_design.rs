//! Structure assignment on the double integrator: choose the closed-loop
//! interconnection, dissipation and energy matrices through one LMI solve.
//!
//! ```bash
//! cargo run --example ida_design
//! ```

use nalgebra::DMatrix;
use phlmi::synthesis::{ida_design, ida_design_bounded, DesignBoundsIda, LmiOptions};
use phlmi::system::{spectrum, Tolerances};

fn main() -> phlmi::Result<()> {
    let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
    let b = DMatrix::from_column_slice(2, 1, &[0.0, 1.0]);
    let tol = Tolerances::default();
    let opts = LmiOptions::default();

    // plain feasibility: stabilizability test plus some assignment
    let plain = ida_design(&a, &b, &tol, &opts)?;
    let residual = ((&plain.j_d - &plain.r_d) * &plain.q_d - (&a + &b * &plain.f)).norm() / a.norm();
    println!("plain design: assignment residual {residual:.3e}, F = {:?}", plain.f.as_slice());

    // bounded design: energy matrix confined to (0.1, 100), damping forced
    // strictly positive through the gamma row
    let bounds = DesignBoundsIda::scalar(2, 1, 0.1, 100.0, 0.0, 1000.0, 1.0);
    let design = ida_design_bounded(&a, &b, &bounds, &tol, &opts)?;
    let q_eigs = design.q_d.clone().symmetric_eigenvalues();
    let r_eigs = design.r_d.clone().symmetric_eigenvalues();
    println!("bounded design: eig(Q_d) = {:?}", q_eigs.as_slice());
    println!("                eig(R_d) = {:?}", r_eigs.as_slice());
    let closed = &a + &b * &design.f;
    let spec = spectrum(&closed)?;
    println!("closed-loop spectral abscissa {:.4} (hurwitz: {})", spec.spectral_abscissa, spec.hurwitz);
    Ok(())
}

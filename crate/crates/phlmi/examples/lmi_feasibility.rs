//! Feasibility of small matrix inequalities, with independently checked
//! margins and an infeasibility certificate.
//!
//! ```bash
//! cargo run --example lmi_feasibility
//! ```

use nalgebra::DMatrix;
use phlmi::lmi::{check_solution, scalar_bounds_problem, solve_feasible, ConeSense, LmiConstraint, LmiProblem, LmiTerm};
use phlmi::system::Tolerances;

fn main() -> phlmi::Result<()> {
    let tol = Tolerances::default();

    // scalar interval 2 <= X <= 3
    let p = scalar_bounds_problem(2.0, 3.0);
    let sol = solve_feasible(&p, &tol, 400, 0)?;
    println!("interval [2, 3]: {:?}, X = {:.6}", sol.status, sol.x[(0, 0)]);
    for m in check_solution(&p, &sol.x, &tol)? {
        println!("    block {}: margin {:+.4e} ({})", m.index, m.min_eigenvalue, if m.pass { "ok" } else { "violated" });
    }

    // contradictory interval: X >= 1 and X <= 0
    let one = DMatrix::from_element(1, 1, 1.0);
    let half = DMatrix::from_element(1, 1, 0.5);
    let contradictory = LmiProblem::new(
        1,
        vec![
            LmiConstraint::new(-&one, vec![LmiTerm::new(half.clone(), one.clone())], ConeSense::Psd),
            LmiConstraint::new(DMatrix::zeros(1, 1), vec![LmiTerm::new(-half, one)], ConeSense::Psd),
        ],
        false,
    );
    let sol = solve_feasible(&contradictory, &tol, 400, 0)?;
    println!("contradictory bounds: {:?}, best margin {:+.4e}", sol.status, sol.best_margin);

    // a 2x2 structural problem: X > 0 with a damping direction
    let bperp = DMatrix::from_row_slice(1, 2, &[1.0, 0.0]);
    let eperp = DMatrix::from_row_slice(1, 2, &[0.0, 1.0]);
    let structural = LmiProblem::new(
        2,
        vec![LmiConstraint::new(
            DMatrix::zeros(1, 1),
            vec![LmiTerm::new(-eperp, bperp)],
            ConeSense::Psd,
        )],
        true,
    );
    let sol = solve_feasible(&structural, &tol, 400, 7)?;
    println!(
        "structural 2x2: {:?}, X = [[{:.3}, {:.3}], [., {:.3}]]",
        sol.status,
        sol.x[(0, 0)],
        sol.x[(0, 1)],
        sol.x[(1, 1)]
    );
    Ok(())
}

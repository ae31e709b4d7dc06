//! Interconnection-and-damping-assignment design and its dual (observer gain).

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::lmi::{solve_feasible, ConeSense, LmiConstraint, LmiProblem, LmiSolution, LmiTerm};
use crate::system::{shape, spectrum, symmetrize, min_symmetric_eigenvalue, Tolerances};

use super::{cond_guard, left_annihilator, DesignBoundsIda, IdaDesign, LmiOptions, ObserverDesign};

/// Feasibility problem deciding stabilizability of `(A, B)`:
/// `X ≻ 0` and `-(E⊥ X B⊥' + B⊥ X E⊥') ⪰ 0` with `E⊥ = B⊥ A`.
pub fn ida_feasibility_problem(a: &DMatrix<f64>, bperp: &DMatrix<f64>) -> LmiProblem {
    let eperp = bperp * a;
    let rows = bperp.nrows();
    LmiProblem::new(
        a.nrows(),
        vec![LmiConstraint::new(
            DMatrix::zeros(rows, rows),
            vec![LmiTerm::new(-&eperp, bperp.clone())],
            ConeSense::Psd,
        )],
        true,
    )
}

/// Damped-design problem in `⪰ 0` orientation:
///
/// ```text
/// X - Λ2⁻¹ ≻ 0,   Λ1⁻¹ - X ≻ 0,
/// -Ξ1 - (E⊥ X B⊥' + B⊥ X E⊥') ⪰ 0,   Ξ2 + (E⊥ X B⊥' + B⊥ X E⊥') ⪰ 0.
/// ```
///
/// The inverse bounds are formed once here; ill-conditioned bound matrices
/// only draw a warning because the inequality itself stays affine in `X`.
pub fn ida_bounded_problem(
    a: &DMatrix<f64>,
    bperp: &DMatrix<f64>,
    bounds: &DesignBoundsIda,
    tol: &Tolerances,
) -> Result<LmiProblem> {
    let n = a.nrows();
    let eperp = bperp * a;
    let lambda1_inv = invert_bound(&bounds.lambda1, "Lambda1", tol)?;
    let lambda2_inv = invert_bound(&bounds.lambda2, "Lambda2", tol)?;
    let half_id = DMatrix::<f64>::identity(n, n) * 0.5;
    let id = DMatrix::<f64>::identity(n, n);
    let constraints = vec![
        LmiConstraint::new(-lambda2_inv, vec![LmiTerm::new(half_id.clone(), id.clone())], ConeSense::Pd),
        LmiConstraint::new(lambda1_inv, vec![LmiTerm::new(-&half_id, id)], ConeSense::Pd),
        LmiConstraint::new(-&bounds.xi1, vec![LmiTerm::new(-&eperp, bperp.clone())], ConeSense::Psd),
        LmiConstraint::new(bounds.xi2.clone(), vec![LmiTerm::new(eperp, bperp.clone())], ConeSense::Psd),
    ];
    Ok(LmiProblem::new(n, constraints, false))
}

const IDA_BLOCK_NAMES: [&str; 4] = [
    "Q_d upper bound (Lambda2)",
    "Q_d lower bound (Lambda1)",
    "damping floor (Xi1)",
    "damping cap (Xi2)",
];

fn invert_bound(m: &DMatrix<f64>, name: &str, tol: &Tolerances) -> Result<DMatrix<f64>> {
    if min_symmetric_eigenvalue(&symmetrize(m)) <= tol.tol_pd {
        return Err(Error::InvalidArgument(format!("bound {name} must be positive definite to invert")));
    }
    let cond = crate::system::condition_number(m);
    if cond > 1e12 {
        log::warn!("bound matrix {name} has condition number {cond:.3e}; its inverse may be inaccurate");
    }
    let chol = nalgebra::linalg::Cholesky::new(symmetrize(m))
        .ok_or_else(|| Error::InvalidArgument(format!("bound {name} is not positive definite")))?;
    Ok(symmetrize(&chol.inverse()))
}

/// Builds the assigned structure from a feasible `X`:
///
/// ```text
/// S_d = [B⊥; B']⁻¹ [E⊥ X; -B' X E⊥' (B⊥ B⊥')⁻¹ B⊥ - γ B']
/// J_d = (S_d - S_d')/2,  R_d = -(S_d + S_d')/2,  Q_d = X⁻¹,
/// F = (B'B)⁻¹ B' (S_d X⁻¹ - A)
/// ```
///
/// The `γ B'` row only enters the damped variant. The stacked matrix is
/// applied through a linear solve rather than an explicit inverse.
pub(crate) fn assemble_ida(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    bperp: &DMatrix<f64>,
    x: &DMatrix<f64>,
    gamma: Option<f64>,
    tol: &Tolerances,
) -> Result<IdaDesign> {
    let n = a.nrows();
    let m = b.ncols();
    let eperp = bperp * a;

    let mut stacked = DMatrix::zeros(n, n);
    stacked.view_mut((0, 0), (n - m, n)).copy_from(bperp);
    stacked.view_mut((n - m, 0), (m, n)).copy_from(&b.transpose());
    cond_guard(&stacked, "stacked [B_perp; B'] matrix")?;

    // (B⊥ B⊥')⁻¹ B⊥ via Cholesky solve; identity for orthonormal rows but
    // kept general.
    let gram = bperp * bperp.transpose();
    let gram_chol = nalgebra::linalg::Cholesky::new(symmetrize(&gram))
        .ok_or_else(|| Error::Internal("B_perp Gram matrix not PD".into()))?;
    let gperp = gram_chol.solve(bperp);

    let mut rhs = DMatrix::zeros(n, n);
    rhs.view_mut((0, 0), (n - m, n)).copy_from(&(&eperp * x));
    let mut lower = -(b.transpose() * x * eperp.transpose()) * &gperp;
    if let Some(g) = gamma {
        lower -= g * b.transpose();
    }
    rhs.view_mut((n - m, 0), (m, n)).copy_from(&lower);

    let s_d = stacked
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Internal("stacked annihilator solve failed".into()))?;

    cond_guard(x, "LMI solution X")?;
    let x_chol = nalgebra::linalg::Cholesky::new(symmetrize(x))
        .ok_or_else(|| Error::Internal("LMI solution X not positive definite".into()))?;
    let q_d = symmetrize(&x_chol.inverse());

    let j_d = 0.5 * (&s_d - s_d.transpose());
    let r_d = -0.5 * (&s_d + s_d.transpose());

    let btb = b.transpose() * b;
    let btb_chol = nalgebra::linalg::Cholesky::new(symmetrize(&btb))
        .ok_or_else(|| Error::Internal("B'B not PD (rank loss)".into()))?;
    let f = btb_chol.solve(&(b.transpose() * (&s_d * &q_d - a)));

    let design = IdaDesign { j_d, r_d, q_d, f, s_d };
    certify_ida(a, b, &design, tol)?;
    Ok(design)
}

fn certify_ida(a: &DMatrix<f64>, b: &DMatrix<f64>, d: &IdaDesign, tol: &Tolerances) -> Result<()> {
    let assigned = (&d.j_d - &d.r_d) * &d.q_d;
    let target = a + b * &d.f;
    let scale = a.norm().max(1e-300);
    let residual = (assigned - target).norm() / scale;
    if residual > tol.tol_match {
        return Err(Error::Internal(format!(
            "matching identity violated: |(J_d-R_d)Q_d - (A+BF)| / |A| = {residual:.3e}"
        )));
    }
    let r_min = min_symmetric_eigenvalue(&symmetrize(&d.r_d));
    if r_min < -tol.tol_psd {
        return Err(Error::Internal(format!(
            "assigned dissipation not PSD: lambda_min(R_d) = {r_min:.3e} (solver margin too small)"
        )));
    }
    let q_min = min_symmetric_eigenvalue(&d.q_d);
    if q_min <= tol.tol_pd {
        return Err(Error::Internal(format!(
            "assigned energy matrix not PD: lambda_min(Q_d) = {q_min:.3e}"
        )));
    }
    Ok(())
}

fn infeasibility_diagnostic(sol: &LmiSolution, names: &[&str]) -> String {
    let mut parts = Vec::new();
    for (i, &m) in sol.margins.iter().enumerate() {
        let name = names.get(i).copied().unwrap_or("block");
        parts.push(format!("{name}: margin {m:.3e}"));
    }
    parts.join(", ")
}

/// Structure assignment for `(A, B)` (stabilizability is exactly LMI
/// feasibility here, so an infeasible verdict is the diagnostic).
pub fn ida_design(a: &DMatrix<f64>, b: &DMatrix<f64>, tol: &Tolerances, opts: &LmiOptions) -> Result<IdaDesign> {
    check_ab(a, b)?;
    let bperp = left_annihilator(b, tol)?;
    let problem = ida_feasibility_problem(a, &bperp);
    let sol = solve_feasible(&problem, tol, opts.max_iter, opts.seed)?;
    if !sol.is_feasible() {
        return Err(Error::Infeasible {
            diagnostic: format!(
                "pair (A, B) is not stabilizable ({})",
                infeasibility_diagnostic(&sol, &["damping", "X positivity"])
            ),
            best_margin: sol.best_margin,
        });
    }
    assemble_ida(a, b, &bperp, &sol.x, None, tol)
}

/// Structure assignment with energy and damping bounds; `γ > 0` yields
/// strictly positive definite `R_d`.
pub fn ida_design_bounded(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    bounds: &DesignBoundsIda,
    tol: &Tolerances,
    opts: &LmiOptions,
) -> Result<IdaDesign> {
    check_ab(a, b)?;
    let n = a.nrows();
    let m = b.ncols();
    bounds.validate(n, n - m, tol)?;
    let bperp = left_annihilator(b, tol)?;
    let problem = ida_bounded_problem(a, &bperp, bounds, tol)?;
    let sol = solve_feasible(&problem, tol, opts.max_iter, opts.seed)?;
    if !sol.is_feasible() {
        return Err(Error::Infeasible {
            diagnostic: format!(
                "bounded design LMI infeasible ({})",
                infeasibility_diagnostic(&sol, &IDA_BLOCK_NAMES)
            ),
            best_margin: sol.best_margin,
        });
    }
    let design = assemble_ida(a, b, &bperp, &sol.x, Some(bounds.gamma), tol)?;

    // Post-certify the bound claims on the assigned matrices.
    let q_above = min_symmetric_eigenvalue(&(&design.q_d - &bounds.lambda1));
    let q_below = min_symmetric_eigenvalue(&(&bounds.lambda2 - &design.q_d));
    if q_above <= 0.0 || q_below <= 0.0 {
        return Err(Error::Internal(format!(
            "Q_d escaped its bounds: lambda_min(Q_d - Lambda1) = {q_above:.3e}, lambda_min(Lambda2 - Q_d) = {q_below:.3e}"
        )));
    }
    let r_min = min_symmetric_eigenvalue(&symmetrize(&design.r_d));
    if r_min <= 0.0 {
        return Err(Error::Internal(format!(
            "gamma > 0 should give R_d > 0, got lambda_min(R_d) = {r_min:.3e}"
        )));
    }
    Ok(design)
}

/// Observer gain by the dual problem: run the bounded design on
/// `(A', C')` and set `L = -F'`. Detectability of `(A, C)` is exactly
/// feasibility of this dual LMI.
pub fn observer_gain(
    a: &DMatrix<f64>,
    c: &DMatrix<f64>,
    bounds: &DesignBoundsIda,
    tol: &Tolerances,
    opts: &LmiOptions,
) -> Result<ObserverDesign> {
    if c.ncols() != a.nrows() {
        return Err(Error::dimension("observer C", format!("cols = {}", a.nrows()), shape(c)));
    }
    let at = a.transpose();
    let ct = c.transpose();
    let dual = ida_design_bounded(&at, &ct, bounds, tol, opts).map_err(|e| match e {
        Error::Infeasible { diagnostic, best_margin } => Error::Infeasible {
            diagnostic: format!("pair (A, C) is not detectable: {diagnostic}"),
            best_margin,
        },
        other => other,
    })?;

    let l = -dual.f.transpose();
    let a_l = a - &l * c;

    // (A - LC)' must equal the dual assigned structure.
    let assigned = (&dual.j_d - &dual.r_d) * &dual.q_d;
    let residual = (a_l.transpose() - assigned).norm() / a.norm().max(1e-300);
    if residual > tol.tol_match {
        return Err(Error::Internal(format!(
            "dual matching identity violated: residual {residual:.3e}"
        )));
    }
    let spec = spectrum(&a_l)?;
    if !spec.hurwitz {
        return Err(Error::Internal(format!(
            "observer dynamics not Hurwitz despite gamma > 0 (abscissa {:.3e})",
            spec.spectral_abscissa
        )));
    }
    Ok(ObserverDesign { l, dual, a_l })
}

fn check_ab(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<()> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::dimension("A", "square", shape(a)));
    }
    if b.nrows() != n {
        return Err(Error::dimension("B", format!("{n} rows"), shape(b)));
    }
    Ok(())
}

//! Controller realization in pH form and its passivity certificates.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::lmi::{solve_feasible, ConeSense, LmiConstraint, LmiProblem, LmiTerm};
use crate::system::{
    max_symmetric_eigenvalue, min_symmetric_eigenvalue, shape, spectrum, symmetrize, Tolerances,
};

use super::{cond_guard, ControllerRealization, DesignBoundsCtrl, LmiOptions, PassivityCertificate};

/// Controller LMI in `⪰ 0` orientation, with `A_L = A - LC`:
///
/// ```text
/// -2Γ1 + BL' + LB' - A_L X - X A_L' ⪰ 0
///  2Γ2 - BL' - LB' + A_L X + X A_L' ⪰ 0
///  Δ1⁻¹ - X ⪰ 0
///  X - Δ2⁻¹ ⪰ 0
/// ```
pub fn controller_lmi_problem(
    a_l: &DMatrix<f64>,
    b: &DMatrix<f64>,
    l: &DMatrix<f64>,
    bounds: &DesignBoundsCtrl,
    tol: &Tolerances,
) -> Result<LmiProblem> {
    let n = a_l.nrows();
    let blt = b * l.transpose();
    let sym_bl = &blt + blt.transpose();
    let delta1_inv = invert_pd(&bounds.delta1, "Delta1", tol)?;
    let delta2_inv = invert_pd(&bounds.delta2, "Delta2", tol)?;
    let half_id = DMatrix::<f64>::identity(n, n) * 0.5;
    let id = DMatrix::<f64>::identity(n, n);
    let constraints = vec![
        LmiConstraint::new(
            -2.0 * &bounds.gamma1 + &sym_bl,
            vec![LmiTerm::new(-a_l, id.clone())],
            ConeSense::Psd,
        ),
        LmiConstraint::new(
            2.0 * &bounds.gamma2 - &sym_bl,
            vec![LmiTerm::new(a_l.clone(), id.clone())],
            ConeSense::Psd,
        ),
        LmiConstraint::new(delta1_inv, vec![LmiTerm::new(-&half_id, id.clone())], ConeSense::Psd),
        LmiConstraint::new(-delta2_inv, vec![LmiTerm::new(half_id, id)], ConeSense::Psd),
    ];
    Ok(LmiProblem::new(n, constraints, false))
}

const CTRL_BLOCK_NAMES: [&str; 4] = [
    "R_c lower bound (Gamma1)",
    "R_c upper bound (Gamma2)",
    "Q_c lower bound (Delta1)",
    "Q_c upper bound (Delta2)",
];

fn invert_pd(m: &DMatrix<f64>, name: &str, tol: &Tolerances) -> Result<DMatrix<f64>> {
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

/// Designs the feedback `K` and the controller realization
/// `(J_c, R_c, Q_c, B_c)` so that `A - LC - BK = (J_c - R_c) Q_c`.
///
/// The identity holds by construction: with `S_c = A_L X - B L'` and
/// `Q_c = X⁻¹`, `S_c Q_c = A_L - B L' Q_c = A - LC - BK`.
pub fn controller_synthesis(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    c: &DMatrix<f64>,
    l: &DMatrix<f64>,
    bounds: &DesignBoundsCtrl,
    tol: &Tolerances,
    opts: &LmiOptions,
) -> Result<ControllerRealization> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::dimension("A", "square", shape(a)));
    }
    if b.nrows() != n || c.ncols() != n || l.nrows() != n || l.ncols() != c.nrows() {
        return Err(Error::dimension(
            "controller synthesis operands",
            format!("B {n}xm, C mx{n}, L {n}xm"),
            format!("B {}, C {}, L {}", shape(b), shape(c), shape(l)),
        ));
    }
    bounds.validate(n, tol)?;

    let a_l = a - l * c;
    let spec = spectrum(&a_l)?;
    if spec.spectral_abscissa >= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "A - LC is not Hurwitz (spectral abscissa {:.3e})",
            spec.spectral_abscissa
        )));
    }
    if spec.spectral_abscissa >= -1e-12 {
        log::warn!(
            "A - LC is only marginally Hurwitz (abscissa {:.3e}); proceeding, the LMI may still certify",
            spec.spectral_abscissa
        );
    }

    let problem = controller_lmi_problem(&a_l, b, l, bounds, tol)?;
    let sol = solve_feasible(&problem, tol, opts.max_iter, opts.seed)?;
    if !sol.is_feasible() {
        let detail: Vec<String> = sol
            .margins
            .iter()
            .enumerate()
            .map(|(i, m)| format!("{}: margin {m:.3e}", CTRL_BLOCK_NAMES.get(i).copied().unwrap_or("block")))
            .collect();
        return Err(Error::Infeasible {
            diagnostic: format!("controller LMI infeasible ({})", detail.join(", ")),
            best_margin: sol.best_margin,
        });
    }

    let x = symmetrize(&sol.x);
    cond_guard(&x, "controller LMI solution X")?;
    let chol = nalgebra::linalg::Cholesky::new(x.clone())
        .ok_or_else(|| Error::Internal("controller X not positive definite".into()))?;
    let q_c = symmetrize(&chol.inverse());

    let s_c = &a_l * &x - b * l.transpose();
    let j_c = 0.5 * (&s_c - s_c.transpose());
    let r_c = -0.5 * (&s_c + s_c.transpose());
    let b_c = l.clone();
    let k = b_c.transpose() * &q_c;

    let realization = ControllerRealization {
        j_c,
        r_c,
        q_c,
        b_c,
        k,
        s_c,
        b_r: b.clone(),
    };

    // Corollary bound checks on the realized matrices.
    for (name, diff) in [
        ("Gamma1 <= R_c", &realization.r_c - &bounds.gamma1),
        ("R_c <= Gamma2", &bounds.gamma2 - &realization.r_c),
        ("Delta1 <= Q_c", &realization.q_c - &bounds.delta1),
        ("Q_c <= Delta2", &bounds.delta2 - &realization.q_c),
    ] {
        let lam = min_symmetric_eigenvalue(&symmetrize(&diff));
        if lam < -tol.tol_psd {
            return Err(Error::Internal(format!(
                "corollary bound {name} violated: lambda_min = {lam:.3e}"
            )));
        }
    }

    let residual = verify_matching(a, b, c, l, &realization);
    if residual > tol.tol_match {
        return Err(Error::Internal(format!(
            "matching equation residual {residual:.3e} exceeds {:.3e}",
            tol.tol_match
        )));
    }
    Ok(realization)
}

/// Relative residual of the matching equation,
/// `|A - LC - BK - (J_c - R_c) Q_c|_F / |A|_F`.
pub fn verify_matching(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    c: &DMatrix<f64>,
    l: &DMatrix<f64>,
    ctrl: &ControllerRealization,
) -> f64 {
    let lhs = a - l * c - b * &ctrl.k;
    let rhs = (&ctrl.j_c - &ctrl.r_c) * &ctrl.q_c;
    (lhs - rhs).norm() / a.norm().max(1e-300)
}

/// Computes the SPR, OSP and ZSD evidence for a realization.
///
/// SPR: bisection for the largest `ε` with `2 Q_c R_c Q_c - ε Q_c ≻ 0` on
/// `[0, 2 λ_min(Q_c R_c Q_c)/λ_max(Q_c) (1 + pad)]`, 60 iterations; zero when
/// `R_c` has no definite margin. OSP: `ϵ = 1/λ_max(B_c' R_c⁻¹ B_c)` from the
/// generalized eigenvalue problem. ZSD: `λ_min(R_c) > tol_pd`. All three are
/// strictly positive exactly when a definite `Γ1 ≻ 0` was enforced and
/// attained.
pub fn passivity_certificates(ctrl: &ControllerRealization, tol: &Tolerances) -> PassivityCertificate {
    let r_sym = symmetrize(&ctrl.r_c);
    let q_sym = symmetrize(&ctrl.q_c);
    let r_min = min_symmetric_eigenvalue(&r_sym);
    let zsd = r_min > tol.tol_pd;

    let (spr_epsilon, spr_witness_min_eig) = if r_min <= tol.tol_pd {
        (0.0, f64::NAN)
    } else {
        let qrq = symmetrize(&(&q_sym * &r_sym * &q_sym));
        let hi = 2.0 * min_symmetric_eigenvalue(&qrq) / max_symmetric_eigenvalue(&q_sym) * (1.0 + 1e-3);
        let pd = |eps: f64| min_symmetric_eigenvalue(&(2.0 * &qrq - eps * &q_sym)) > 0.0;
        let mut lo = 0.0;
        let mut hi = hi.max(0.0);
        if pd(hi) {
            lo = hi;
        } else {
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if pd(mid) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
        }
        let witness = min_symmetric_eigenvalue(&(2.0 * &qrq - lo * &q_sym));
        (lo, witness)
    };

    let (osp_epsilon, osp_witness_min_eig) = if r_min <= tol.tol_pd {
        let witness = min_symmetric_eigenvalue(&r_sym);
        (0.0, witness)
    } else {
        let chol = nalgebra::linalg::Cholesky::new(r_sym.clone());
        match chol {
            Some(ch) => {
                let w = symmetrize(&(ctrl.b_c.transpose() * ch.solve(&ctrl.b_c)));
                let lam = max_symmetric_eigenvalue(&w);
                if lam <= 0.0 {
                    (f64::INFINITY, r_min)
                } else {
                    let eps = 1.0 / lam;
                    let witness =
                        min_symmetric_eigenvalue(&(&r_sym - eps * (&ctrl.b_c * ctrl.b_c.transpose())));
                    (eps, witness)
                }
            }
            None => (0.0, r_min),
        }
    };

    PassivityCertificate {
        spr_epsilon,
        osp_epsilon,
        zsd,
        r_c_min_eig: r_min,
        spr_witness_min_eig,
        osp_witness_min_eig,
    }
}

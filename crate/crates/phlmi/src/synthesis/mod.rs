//! Observer and state-feedback synthesis for linear pH systems.
//!
//! The pipeline designs a Luenberger gain `L` by solving the dual
//! interconnection-and-damping-assignment problem, then a feedback gain `K`
//! such that the combined observer-based controller
//!
//! ```text
//! xh' = (Jc - Rc) Qc xh + Bc uc + B r,    yc = Bc' Qc xh
//! ```
//!
//! is itself a pH system coupled to the plant through the power-preserving
//! interconnection `u = r - yc`, `uc = y`. Feasibility of each step is an LMI
//! problem; every returned design carries numerically certified structure.

mod controller;
mod ida;

pub use controller::{controller_lmi_problem, controller_synthesis, passivity_certificates, verify_matching};
pub use ida::{ida_design, ida_design_bounded, ida_feasibility_problem, ida_bounded_problem, observer_gain};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::system::{condition_number, min_symmetric_eigenvalue, shape, Tolerances};

/// Solver knobs threaded through every synthesis call; all randomness in the
/// pipeline flows from `seed`.
#[derive(Debug, Clone)]
pub struct LmiOptions {
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for LmiOptions {
    fn default() -> Self {
        LmiOptions { max_iter: 800, seed: 0 }
    }
}

/// Structure-assigned design `(J_d - R_d) Q_d = A + B F`.
#[derive(Debug, Clone)]
pub struct IdaDesign {
    pub j_d: DMatrix<f64>,
    pub r_d: DMatrix<f64>,
    pub q_d: DMatrix<f64>,
    pub f: DMatrix<f64>,
    pub s_d: DMatrix<f64>,
}

/// Observer gain together with the dual design that produced it.
#[derive(Debug, Clone)]
pub struct ObserverDesign {
    pub l: DMatrix<f64>,
    pub dual: IdaDesign,
    pub a_l: DMatrix<f64>,
}

/// Bounds for the damped design problem: `Λ1 < Q_d < Λ2` and
/// `Ξ1 <= -(E⊥ X B⊥' + B⊥ X E⊥') <= Ξ2`, with `γ > 0` forcing `R_d > 0`.
#[derive(Debug, Clone)]
pub struct DesignBoundsIda {
    pub lambda1: DMatrix<f64>,
    pub lambda2: DMatrix<f64>,
    pub xi1: DMatrix<f64>,
    pub xi2: DMatrix<f64>,
    pub gamma: f64,
}

impl DesignBoundsIda {
    /// Scalar-identity shorthand matching the usual table conventions.
    pub fn scalar(n: usize, n_damp: usize, lambda1: f64, lambda2: f64, xi1: f64, xi2: f64, gamma: f64) -> Self {
        DesignBoundsIda {
            lambda1: DMatrix::identity(n, n) * lambda1,
            lambda2: DMatrix::identity(n, n) * lambda2,
            xi1: DMatrix::identity(n_damp, n_damp) * xi1,
            xi2: DMatrix::identity(n_damp, n_damp) * xi2,
            gamma,
        }
    }

    pub fn validate(&self, n: usize, n_damp: usize, tol: &Tolerances) -> Result<()> {
        for (name, m, rows) in [
            ("Lambda1", &self.lambda1, n),
            ("Lambda2", &self.lambda2, n),
            ("Xi1", &self.xi1, n_damp),
            ("Xi2", &self.xi2, n_damp),
        ] {
            if m.nrows() != rows || m.ncols() != rows {
                return Err(Error::dimension(format!("bounds {name}"), format!("{rows}x{rows}"), shape(m)));
            }
        }
        if min_symmetric_eigenvalue(&self.lambda1) <= tol.tol_pd {
            return Err(Error::InvalidArgument("bounds require 0 < Lambda1".into()));
        }
        if min_symmetric_eigenvalue(&(&self.lambda2 - &self.lambda1)) <= tol.tol_pd {
            return Err(Error::InvalidArgument("bounds require Lambda1 < Lambda2".into()));
        }
        if n_damp > 0 {
            if min_symmetric_eigenvalue(&self.xi1) < -tol.tol_psd {
                return Err(Error::InvalidArgument("bounds require 0 <= Xi1".into()));
            }
            if min_symmetric_eigenvalue(&(&self.xi2 - &self.xi1)) <= tol.tol_pd {
                return Err(Error::InvalidArgument("bounds require Xi1 < Xi2".into()));
            }
        }
        if !(self.gamma > 0.0) {
            return Err(Error::InvalidArgument(format!("bounds require gamma > 0, got {}", self.gamma)));
        }
        Ok(())
    }
}

/// Bounds for the controller problem: `Γ1 <= R_c <= Γ2`, `Δ1 <= Q_c <= Δ2`.
#[derive(Debug, Clone)]
pub struct DesignBoundsCtrl {
    pub gamma1: DMatrix<f64>,
    pub gamma2: DMatrix<f64>,
    pub delta1: DMatrix<f64>,
    pub delta2: DMatrix<f64>,
}

impl DesignBoundsCtrl {
    pub fn scalar(n: usize, gamma1: f64, gamma2: f64, delta1: f64, delta2: f64) -> Self {
        DesignBoundsCtrl {
            gamma1: DMatrix::identity(n, n) * gamma1,
            gamma2: DMatrix::identity(n, n) * gamma2,
            delta1: DMatrix::identity(n, n) * delta1,
            delta2: DMatrix::identity(n, n) * delta2,
        }
    }

    pub fn validate(&self, n: usize, tol: &Tolerances) -> Result<()> {
        for (name, m) in [
            ("Gamma1", &self.gamma1),
            ("Gamma2", &self.gamma2),
            ("Delta1", &self.delta1),
            ("Delta2", &self.delta2),
        ] {
            if m.nrows() != n || m.ncols() != n {
                return Err(Error::dimension(format!("bounds {name}"), format!("{n}x{n}"), shape(m)));
            }
        }
        if min_symmetric_eigenvalue(&self.gamma1) < -tol.tol_psd {
            return Err(Error::InvalidArgument("bounds require 0 <= Gamma1".into()));
        }
        if min_symmetric_eigenvalue(&(&self.gamma2 - &self.gamma1)) <= tol.tol_pd {
            return Err(Error::InvalidArgument("bounds require Gamma1 < Gamma2".into()));
        }
        if min_symmetric_eigenvalue(&self.delta1) <= tol.tol_pd {
            return Err(Error::InvalidArgument("bounds require 0 < Delta1".into()));
        }
        if min_symmetric_eigenvalue(&(&self.delta2 - &self.delta1)) <= tol.tol_pd {
            return Err(Error::InvalidArgument("bounds require Delta1 < Delta2".into()));
        }
        Ok(())
    }
}

/// Observer-based controller in pH form.
///
/// `B_c = L`, `K = B_c' Q_c`, and `A - LC - BK = (J_c - R_c) Q_c` holds by
/// construction. `b_r` is the plant input map, which feeds the reference into
/// the controller state and defines the auxiliary output `y_r = B' Q_c xh`.
#[derive(Debug, Clone)]
pub struct ControllerRealization {
    pub j_c: DMatrix<f64>,
    pub r_c: DMatrix<f64>,
    pub q_c: DMatrix<f64>,
    pub b_c: DMatrix<f64>,
    pub k: DMatrix<f64>,
    pub s_c: DMatrix<f64>,
    pub b_r: DMatrix<f64>,
}

impl ControllerRealization {
    /// Controller state matrix `(J_c - R_c) Q_c`.
    pub fn a_c(&self) -> DMatrix<f64> {
        (&self.j_c - &self.r_c) * &self.q_c
    }

    pub fn n(&self) -> usize {
        self.j_c.nrows()
    }

    pub fn m(&self) -> usize {
        self.b_c.ncols()
    }

    /// Port output `y_c = B_c' Q_c xh`.
    pub fn y_c(&self, xhat: &nalgebra::DVector<f64>) -> nalgebra::DVector<f64> {
        self.b_c.transpose() * (&self.q_c * xhat)
    }

    /// Reference-port output `y_r = B' Q_c xh`.
    pub fn y_r(&self, xhat: &nalgebra::DVector<f64>) -> nalgebra::DVector<f64> {
        self.b_r.transpose() * (&self.q_c * xhat)
    }

    /// Controller stored energy `xh' Q_c xh / 2`.
    pub fn hamiltonian(&self, xhat: &nalgebra::DVector<f64>) -> f64 {
        0.5 * xhat.dot(&(&self.q_c * xhat))
    }
}

/// Passivity evidence for a controller realization.
#[derive(Debug, Clone)]
pub struct PassivityCertificate {
    /// Largest `ε` found with `2 Q_c R_c Q_c - ε Q_c ≻ 0` (0 when `R_c` is
    /// singular or indefinite).
    pub spr_epsilon: f64,
    /// Largest `ϵ` with `R_c - ϵ B_c B_c' ⪰ 0`.
    pub osp_epsilon: f64,
    /// `λ_min(R_c) > tol_pd`: zero dynamics contract.
    pub zsd: bool,
    /// Witness data backing the three scalars.
    pub r_c_min_eig: f64,
    pub spr_witness_min_eig: f64,
    pub osp_witness_min_eig: f64,
}

/// Full-rank left annihilator of `B`: rows form an orthonormal basis of the
/// orthogonal complement of `range(B)`, so `B⊥ B = 0` and `B⊥ B⊥' = I`.
pub fn left_annihilator(b: &DMatrix<f64>, _tol: &Tolerances) -> Result<DMatrix<f64>> {
    let n = b.nrows();
    let m = b.ncols();
    if m >= n {
        return Err(Error::InvalidArgument(format!(
            "annihilator of a {n}x{m} matrix is empty (need m < n)"
        )));
    }
    let sv = b.clone().singular_values();
    let smax = sv.iter().copied().fold(0.0_f64, f64::max);
    let smin = sv.iter().copied().fold(f64::INFINITY, f64::min);
    if smax == 0.0 || smin <= 1e-10 * smax {
        return Err(Error::InvalidArgument(format!(
            "B is column-rank deficient (sigma_min/sigma_max = {:.3e})",
            if smax == 0.0 { 0.0 } else { smin / smax }
        )));
    }

    // Orthogonal projector onto range(B)^perp, then its unit eigenvectors.
    let btb = b.transpose() * b;
    let chol = nalgebra::linalg::Cholesky::new(btb)
        .ok_or_else(|| Error::Internal("Gram matrix of B not PD despite rank check".into()))?;
    let proj = DMatrix::identity(n, n) - b * chol.solve(&b.transpose());
    let eig = nalgebra::linalg::SymmetricEigen::new(crate::system::symmetrize(&proj));

    let mut rows: Vec<nalgebra::DVector<f64>> = Vec::with_capacity(n - m);
    for (i, &lam) in eig.eigenvalues.iter().enumerate() {
        if lam > 0.5 {
            rows.push(eig.eigenvectors.column(i).into_owned());
        }
    }
    if rows.len() != n - m {
        return Err(Error::Internal(format!(
            "annihilator rank mismatch: found {} complement directions, expected {}",
            rows.len(),
            n - m
        )));
    }
    let mut bperp = DMatrix::zeros(n - m, n);
    for (r, v) in rows.iter().enumerate() {
        // canonical sign: largest-magnitude entry positive
        let mut idx = 0;
        for (i, e) in v.iter().enumerate() {
            if e.abs() > v[idx].abs() {
                idx = i;
            }
        }
        let sign = if v[idx] < 0.0 { -1.0 } else { 1.0 };
        for c in 0..n {
            bperp[(r, c)] = sign * v[c];
        }
    }

    let residual = (&bperp * b).amax();
    if residual > 1e-12 * smax.max(1.0) {
        return Err(Error::Internal(format!(
            "annihilator residual too large: |Bperp B| = {residual:.3e}"
        )));
    }
    Ok(bperp)
}

pub(crate) fn cond_guard(m: &DMatrix<f64>, context: &str) -> Result<f64> {
    let cond = condition_number(m);
    if !cond.is_finite() || cond > 1e12 {
        return Err(Error::IllConditioned { context: context.to_string(), cond });
    }
    Ok(cond)
}

//! Linear port-Hamiltonian system types, structural validation and spectral
//! utilities.
//!
//! A linear pH system is the quadruple `(J, R, Q, B)` with dynamics
//!
//! ```text
//! x' = (J - R) Q x + B u,      y = B' Q x
//! ```
//!
//! where `J` is skew-symmetric (internal power routing), `R` is symmetric
//! positive semidefinite (dissipation), `Q` is symmetric positive definite
//! (the Hessian of the stored energy `H(x) = x' Q x / 2`) and `B` maps the
//! `m` input ports into the state space.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Numerical tolerances shared across validation, LMI solving and synthesis.
#[derive(Debug, Clone)]
pub struct Tolerances {
    /// Relative tolerance on symmetry / skew-symmetry residuals.
    pub tol_struct: f64,
    /// Absolute slack allowed below zero for semidefiniteness checks.
    pub tol_psd: f64,
    /// Absolute margin required above zero for definiteness checks.
    pub tol_pd: f64,
    /// Margin an LMI solution must attain on strict blocks to count as feasible.
    pub lmi_margin: f64,
    /// Convergence tolerance of the implicit-midpoint Newton iteration.
    pub newton_tol: f64,
    /// Relative tolerance on the synthesis matching identities.
    pub tol_match: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            tol_struct: 1e-9,
            tol_psd: 1e-8,
            tol_pd: 1e-10,
            lmi_margin: 1e-8,
            newton_tol: 1e-10,
            tol_match: 1e-7,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        let all = [
            ("tol_struct", self.tol_struct),
            ("tol_psd", self.tol_psd),
            ("tol_pd", self.tol_pd),
            ("lmi_margin", self.lmi_margin),
            ("newton_tol", self.newton_tol),
            ("tol_match", self.tol_match),
        ];
        for (name, v) in all {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "tolerance {name} must be strictly positive and finite, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Linear port-Hamiltonian system `(J, R, Q, B)`.
#[derive(Debug, Clone)]
pub struct LinearPhSystem {
    j: DMatrix<f64>,
    r: DMatrix<f64>,
    q: DMatrix<f64>,
    b: DMatrix<f64>,
}

impl LinearPhSystem {
    /// Builds a system after checking dimensional consistency only.
    ///
    /// Structural properties (skewness, symmetry, definiteness, rank) are
    /// measured by [`validate_ph`]; use [`LinearPhSystem::validated`] to get
    /// both in one step.
    pub fn new(j: DMatrix<f64>, r: DMatrix<f64>, q: DMatrix<f64>, b: DMatrix<f64>) -> Result<Self> {
        let n = j.nrows();
        if j.ncols() != n {
            return Err(Error::dimension("J", format!("{n}x{n}"), shape(&j)));
        }
        for (name, m) in [("R", &r), ("Q", &q)] {
            if m.nrows() != n || m.ncols() != n {
                return Err(Error::dimension(name, format!("{n}x{n}"), shape(m)));
            }
        }
        if b.nrows() != n {
            return Err(Error::dimension("B", format!("{n} rows"), shape(&b)));
        }
        if b.ncols() == 0 || b.ncols() > n {
            return Err(Error::dimension("B", format!("1..={n} columns"), shape(&b)));
        }
        Ok(LinearPhSystem { j, r, q, b })
    }

    /// Builds and validates a system, repairing sub-tolerance symmetry
    /// violations by symmetrization. Violations above `tol_struct` (relative)
    /// are hard errors. LMI solver outputs carry roundoff, which is what the
    /// repair absorbs.
    pub fn validated(
        j: DMatrix<f64>,
        r: DMatrix<f64>,
        q: DMatrix<f64>,
        b: DMatrix<f64>,
        tol: &Tolerances,
    ) -> Result<Self> {
        let mut sys = Self::new(j, r, q, b)?;
        let scale_j = sys.j.amax().max(1e-300);
        let skew_violation = (&sys.j + sys.j.transpose()).amax();
        if skew_violation > tol.tol_struct * scale_j {
            return Err(Error::Structure(format!(
                "J is not skew-symmetric: max |J + J'| = {skew_violation:.3e} (scale {scale_j:.3e})"
            )));
        }
        if skew_violation > 0.0 {
            log::warn!("repairing skew-symmetry of J (violation {skew_violation:.3e})");
            sys.j = 0.5 * (&sys.j - sys.j.transpose());
        }
        for (name, m) in [("R", &mut sys.r), ("Q", &mut sys.q)] {
            let scale = m.amax().max(1e-300);
            let violation = (&*m - m.transpose()).amax();
            if violation > tol.tol_struct * scale {
                return Err(Error::Structure(format!(
                    "{name} is not symmetric: max |{name} - {name}'| = {violation:.3e}"
                )));
            }
            if violation > 0.0 {
                log::warn!("repairing symmetry of {name} (violation {violation:.3e})");
                *m = 0.5 * (&*m + m.transpose());
            }
        }
        let report = validate_ph(&sys, tol);
        if !report.pass {
            return Err(Error::Structure(report.summary()));
        }
        Ok(sys)
    }

    pub fn n(&self) -> usize {
        self.j.nrows()
    }

    pub fn m(&self) -> usize {
        self.b.ncols()
    }

    pub fn j(&self) -> &DMatrix<f64> {
        &self.j
    }

    pub fn r(&self) -> &DMatrix<f64> {
        &self.r
    }

    pub fn q(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    /// State matrix `A = (J - R) Q`.
    pub fn a(&self) -> DMatrix<f64> {
        (&self.j - &self.r) * &self.q
    }

    /// Output matrix `C = B' Q`.
    pub fn c(&self) -> DMatrix<f64> {
        self.b.transpose() * &self.q
    }

    /// Stored energy `H(x) = x' Q x / 2`.
    pub fn hamiltonian(&self, x: &DVector<f64>) -> f64 {
        0.5 * x.dot(&(&self.q * x))
    }

    /// Power-conjugated output `y = B' Q x`.
    pub fn output(&self, x: &DVector<f64>) -> DVector<f64> {
        self.b.transpose() * (&self.q * x)
    }
}

/// State and output matrices `(A, C)` of a validated system.
pub fn plant_abc(sys: &LinearPhSystem) -> (DMatrix<f64>, DMatrix<f64>) {
    (sys.a(), sys.c())
}

/// One measured structural invariant.
#[derive(Debug, Clone)]
pub struct StructureCheck {
    pub name: &'static str,
    pub pass: bool,
    /// Magnitude of the violation (0 when the invariant holds exactly).
    pub violation: f64,
}

/// Result of [`validate_ph`]: one entry per invariant plus the overall verdict.
#[derive(Debug, Clone)]
pub struct StructureReport {
    pub checks: Vec<StructureCheck>,
    pub pass: bool,
    pub n: usize,
    pub m: usize,
}

impl StructureReport {
    pub fn summary(&self) -> String {
        let mut out = format!("structure report (n = {}, m = {}): ", self.n, self.m);
        let mut first = true;
        for c in &self.checks {
            if !first {
                out.push_str("; ");
            }
            first = false;
            out.push_str(&format!(
                "{} {} (violation {:.3e})",
                c.name,
                if c.pass { "ok" } else { "FAIL" },
                c.violation
            ));
        }
        out
    }
}

/// Measures every pH structural invariant of `sys` and reports pass/fail with
/// violation magnitudes. Overall pass iff all invariants hold.
pub fn validate_ph(sys: &LinearPhSystem, tol: &Tolerances) -> StructureReport {
    let mut checks = Vec::new();

    let scale_j = sys.j.amax().max(1e-300);
    let skew = (sys.j() + sys.j().transpose()).amax();
    checks.push(StructureCheck {
        name: "J skew-symmetric",
        pass: skew <= tol.tol_struct * scale_j,
        violation: skew,
    });

    let scale_r = sys.r.amax().max(1e-300);
    let r_sym = (sys.r() - sys.r().transpose()).amax();
    checks.push(StructureCheck {
        name: "R symmetric",
        pass: r_sym <= tol.tol_struct * scale_r,
        violation: r_sym,
    });

    let r_min = min_symmetric_eigenvalue(&symmetrize(sys.r()));
    checks.push(StructureCheck {
        name: "R positive semidefinite",
        pass: r_min >= -tol.tol_psd,
        violation: (-r_min).max(0.0),
    });

    let scale_q = sys.q.amax().max(1e-300);
    let q_sym = (sys.q() - sys.q().transpose()).amax();
    checks.push(StructureCheck {
        name: "Q symmetric",
        pass: q_sym <= tol.tol_struct * scale_q,
        violation: q_sym,
    });

    let q_min = min_symmetric_eigenvalue(&symmetrize(sys.q()));
    checks.push(StructureCheck {
        name: "Q positive definite",
        pass: q_min > tol.tol_pd,
        violation: if q_min > tol.tol_pd { 0.0 } else { tol.tol_pd - q_min },
    });

    let rank_gap = column_rank_gap(sys.b());
    checks.push(StructureCheck {
        name: "B full column rank",
        pass: rank_gap == 0.0,
        violation: rank_gap,
    });

    let pass = checks.iter().all(|c| c.pass);
    StructureReport {
        checks,
        pass,
        n: sys.n(),
        m: sys.m(),
    }
}

/// Eigenvalue summary of a (generally nonsymmetric) real matrix.
#[derive(Debug, Clone)]
pub struct SpectralReport {
    /// Eigenvalues sorted by real part, then imaginary part.
    pub eigenvalues: Vec<Complex64>,
    /// Maximum real part over all eigenvalues.
    pub spectral_abscissa: f64,
    /// True iff `spectral_abscissa < 0` strictly.
    pub hurwitz: bool,
}

/// Eigenvalues of a square matrix via the general dense eigensolver.
///
/// Symmetric definiteness checks elsewhere use the symmetric eigensolver so
/// spurious imaginary parts cannot pollute sign decisions.
pub fn spectrum(m: &DMatrix<f64>) -> Result<SpectralReport> {
    if m.nrows() != m.ncols() {
        return Err(Error::dimension("spectrum", "square matrix", shape(m)));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("spectrum: matrix has non-finite entries".into()));
    }
    let ev = m.clone().complex_eigenvalues();
    let mut eigenvalues: Vec<Complex64> = ev.iter().copied().collect();
    eigenvalues.sort_by(|a, b| {
        (a.re, a.im)
            .partial_cmp(&(b.re, b.im))
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let spectral_abscissa = eigenvalues.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    Ok(SpectralReport {
        eigenvalues,
        spectral_abscissa,
        hurwitz: spectral_abscissa < 0.0,
    })
}

/// Smallest eigenvalue of a symmetric matrix (symmetric eigensolver).
pub fn min_symmetric_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return f64::INFINITY;
    }
    let eig = nalgebra::linalg::SymmetricEigen::new(m.clone());
    eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Largest eigenvalue of a symmetric matrix.
pub fn max_symmetric_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return f64::NEG_INFINITY;
    }
    let eig = nalgebra::linalg::SymmetricEigen::new(m.clone());
    eig.eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

pub(crate) fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    0.5 * (m + m.transpose())
}

pub(crate) fn shape(m: &DMatrix<f64>) -> String {
    format!("{}x{}", m.nrows(), m.ncols())
}

/// 2-norm condition number from singular values.
pub(crate) fn condition_number(m: &DMatrix<f64>) -> f64 {
    let sv = m.clone().singular_values();
    let smax = sv.iter().copied().fold(0.0_f64, f64::max);
    let smin = sv.iter().copied().fold(f64::INFINITY, f64::min);
    if smin == 0.0 {
        f64::INFINITY
    } else {
        smax / smin
    }
}

/// Returns 0.0 when B has full column rank, otherwise the relative gap
/// `1 - sigma_min/sigma_max` exceeded past the rank tolerance.
fn column_rank_gap(b: &DMatrix<f64>) -> f64 {
    let sv = b.clone().singular_values();
    let smax = sv.iter().copied().fold(0.0_f64, f64::max);
    if smax == 0.0 {
        return 1.0;
    }
    let smin = sv.iter().copied().fold(f64::INFINITY, f64::min);
    let tol = f64::EPSILON * (b.nrows().max(b.ncols()) as f64) * smax * 16.0;
    if smin > tol {
        0.0
    } else {
        1.0 - smin / smax
    }
}

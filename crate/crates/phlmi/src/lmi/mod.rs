//! Affine linear matrix inequalities in one symmetric unknown `X`, with a
//! feasibility solver and an independent solution checker.
//!
//! A constraint is `K0 + sum_r (M_r X N_r' + N_r X M_r')`, required to lie in
//! the positive semidefinite (`⪰ 0`) or positive definite (`≻ 0`) cone. Every
//! inequality is stored in `⪰ 0` orientation; callers negate as needed.

mod solver;

pub use solver::solve_feasible;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::system::{symmetrize, shape, Tolerances};

/// Cone a constraint block must lie in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConeSense {
    /// Positive semidefinite, `⪰ 0`.
    Psd,
    /// Positive definite, `≻ 0`; certified with margin `>= lmi_margin`.
    Pd,
}

/// One bilinear term `M X N' + N X M'` (symmetric by construction).
#[derive(Debug, Clone)]
pub struct LmiTerm {
    pub m: DMatrix<f64>,
    pub n: DMatrix<f64>,
}

impl LmiTerm {
    pub fn new(m: DMatrix<f64>, n: DMatrix<f64>) -> Self {
        LmiTerm { m, n }
    }
}

/// A single matrix-inequality block `K0 + sum_r (M_r X N_r' + N_r X M_r')`.
#[derive(Debug, Clone)]
pub struct LmiConstraint {
    pub constant: DMatrix<f64>,
    pub terms: Vec<LmiTerm>,
    pub sense: ConeSense,
}

impl LmiConstraint {
    pub fn new(constant: DMatrix<f64>, terms: Vec<LmiTerm>, sense: ConeSense) -> Self {
        LmiConstraint { constant, terms, sense }
    }

    /// Block size `p`.
    pub fn block_size(&self) -> usize {
        self.constant.nrows()
    }
}

/// Feasibility problem: find symmetric `X` of size `dim` satisfying every
/// constraint; `include_x_pd` additionally requires `X ≻ 0`.
#[derive(Debug, Clone)]
pub struct LmiProblem {
    pub dim: usize,
    pub constraints: Vec<LmiConstraint>,
    pub include_x_pd: bool,
}

impl LmiProblem {
    pub fn new(dim: usize, constraints: Vec<LmiConstraint>, include_x_pd: bool) -> Self {
        LmiProblem { dim, constraints, include_x_pd }
    }

    /// Validates shapes, symmetry of the constants and non-emptiness.
    pub fn validate(&self, tol: &Tolerances) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::InvalidArgument("LMI unknown dimension must be >= 1".into()));
        }
        if self.constraints.is_empty() && !self.include_x_pd {
            return Err(Error::InvalidArgument("LMI problem needs at least one constraint".into()));
        }
        for (idx, c) in self.constraints.iter().enumerate() {
            let p = c.constant.nrows();
            if c.constant.ncols() != p {
                return Err(Error::dimension(
                    format!("constraint {idx} constant"),
                    "square",
                    shape(&c.constant),
                ));
            }
            let scale = c.constant.amax().max(1e-300);
            let asym = (&c.constant - c.constant.transpose()).amax();
            if asym > tol.tol_struct * scale {
                return Err(Error::Structure(format!(
                    "constraint {idx}: constant block not symmetric (violation {asym:.3e})"
                )));
            }
            for (tix, t) in c.terms.iter().enumerate() {
                for (name, m) in [("M", &t.m), ("N", &t.n)] {
                    if m.nrows() != p || m.ncols() != self.dim {
                        return Err(Error::dimension(
                            format!("constraint {idx} term {tix} {name}"),
                            format!("{p}x{}", self.dim),
                            shape(m),
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    /// Number of blocks including the implicit `X ≻ 0` block when present.
    pub fn block_count(&self) -> usize {
        self.constraints.len() + usize::from(self.include_x_pd)
    }

    /// Sense of block `idx` in the order of [`substitute`].
    pub fn block_sense(&self, idx: usize) -> ConeSense {
        if idx < self.constraints.len() {
            self.constraints[idx].sense
        } else {
            ConeSense::Pd
        }
    }
}

/// Outcome classification of a feasibility solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LmiStatus {
    Feasible,
    Marginal,
    Infeasible,
}

/// Solver output: the candidate `X`, per-block margins, and the verdict.
#[derive(Debug, Clone)]
pub struct LmiSolution {
    pub x: DMatrix<f64>,
    /// `lambda_min` of every substituted block, constraints first, then the
    /// implicit `X ≻ 0` block when the problem carries one.
    pub margins: Vec<f64>,
    pub status: LmiStatus,
    /// Worst margin attained over all blocks.
    pub best_margin: f64,
    /// Newton iterations spent.
    pub newton_iterations: usize,
}

impl LmiSolution {
    pub fn is_feasible(&self) -> bool {
        self.status == LmiStatus::Feasible
    }
}

/// Margin of one substituted block as seen by the independent checker.
#[derive(Debug, Clone)]
pub struct BlockMargin {
    pub index: usize,
    pub sense: ConeSense,
    pub min_eigenvalue: f64,
    pub pass: bool,
}

/// Substitutes `X` into every block and returns the block matrices,
/// constraints first, then the implicit `X ≻ 0` block when present.
pub fn substitute(p: &LmiProblem, x: &DMatrix<f64>) -> Result<Vec<DMatrix<f64>>> {
    if x.nrows() != p.dim || x.ncols() != p.dim {
        return Err(Error::dimension("substitute X", format!("{0}x{0}", p.dim), shape(x)));
    }
    let mut blocks = Vec::with_capacity(p.block_count());
    for c in &p.constraints {
        let mut s = symmetrize(&c.constant);
        for t in &c.terms {
            let mxn = &t.m * x * t.n.transpose();
            s += &mxn + mxn.transpose();
        }
        blocks.push(s);
    }
    if p.include_x_pd {
        blocks.push(x.clone());
    }
    Ok(blocks)
}

/// Independent certificate of a candidate solution: returns `lambda_min` of
/// each substituted block with a pass/fail verdict per cone sense.
///
/// This path is deliberately separate from the solver's internal residual
/// evaluation so it can serve as the oracle for every downstream test.
pub fn check_solution(p: &LmiProblem, x: &DMatrix<f64>, tol: &Tolerances) -> Result<Vec<BlockMargin>> {
    let scale = x.amax().max(1e-300);
    let asym = (x - x.transpose()).amax();
    if asym > tol.tol_struct * scale {
        return Err(Error::Structure(format!(
            "candidate X not symmetric (violation {asym:.3e})"
        )));
    }
    let blocks = substitute(p, x)?;
    let mut out = Vec::with_capacity(blocks.len());
    for (index, block) in blocks.iter().enumerate() {
        let sense = p.block_sense(index);
        let min_eigenvalue = crate::system::min_symmetric_eigenvalue(&symmetrize(block));
        let pass = match sense {
            ConeSense::Pd => min_eigenvalue >= tol.lmi_margin,
            ConeSense::Psd => min_eigenvalue >= -tol.tol_psd,
        };
        out.push(BlockMargin { index, sense, min_eigenvalue, pass });
    }
    Ok(out)
}

/// True iff every block of [`check_solution`] passes.
pub fn solution_passes(margins: &[BlockMargin]) -> bool {
    margins.iter().all(|b| b.pass)
}

/// Scalar-interval constraint `X - lo >= 0`, `hi - X >= 0` helpers used by
/// tests and small examples (1x1 blocks on a 1-dimensional unknown).
pub fn scalar_bounds_problem(lo: f64, hi: f64) -> LmiProblem {
    let one = DMatrix::from_element(1, 1, 0.5);
    let eye = DMatrix::from_element(1, 1, 1.0);
    LmiProblem::new(
        1,
        vec![
            LmiConstraint::new(
                DMatrix::from_element(1, 1, -lo),
                vec![LmiTerm::new(one.clone(), eye.clone())],
                ConeSense::Psd,
            ),
            LmiConstraint::new(
                DMatrix::from_element(1, 1, hi),
                vec![LmiTerm::new(-one, eye)],
                ConeSense::Psd,
            ),
        ],
        false,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn interval_margins_at_midpoint() {
        let p = scalar_bounds_problem(2.0, 3.0);
        let x = DMatrix::from_element(1, 1, 2.5);
        let margins = check_solution(&p, &x, &Tolerances::default()).unwrap();
        assert_eq!(margins.len(), 2);
        assert_relative_eq!(margins[0].min_eigenvalue, 0.5);
        assert_relative_eq!(margins[1].min_eigenvalue, 0.5);
        assert!(solution_passes(&margins));
    }

    #[test]
    fn violated_lower_bound_fails() {
        let p = LmiProblem::new(
            1,
            vec![LmiConstraint::new(
                DMatrix::from_element(1, 1, -2.0),
                vec![LmiTerm::new(
                    DMatrix::from_element(1, 1, 0.5),
                    DMatrix::from_element(1, 1, 1.0),
                )],
                ConeSense::Psd,
            )],
            false,
        );
        let margins = check_solution(&p, &DMatrix::from_element(1, 1, 1.0), &Tolerances::default()).unwrap();
        assert_relative_eq!(margins[0].min_eigenvalue, -1.0);
        assert!(!margins[0].pass);
    }

    #[test]
    fn asymmetric_candidate_rejected() {
        let p = scalar_bounds_problem(0.0, 1.0);
        // dim-1 X cannot be asymmetric; use a 2-dim problem
        let p2 = LmiProblem::new(2, p.constraints.clone().into_iter().map(|mut c| {
            c.terms = vec![LmiTerm::new(DMatrix::zeros(1, 2), DMatrix::zeros(1, 2))];
            c
        }).collect(), false);
        let x = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(check_solution(&p2, &x, &Tolerances::default()).is_err());
    }

    #[test]
    fn validation_catches_bad_shapes() {
        let bad = LmiProblem::new(
            2,
            vec![LmiConstraint::new(
                DMatrix::zeros(2, 2),
                vec![LmiTerm::new(DMatrix::zeros(2, 3), DMatrix::zeros(2, 2))],
                ConeSense::Psd,
            )],
            false,
        );
        assert!(bad.validate(&Tolerances::default()).is_err());
        let empty = LmiProblem::new(2, vec![], false);
        assert!(empty.validate(&Tolerances::default()).is_err());
    }

    fn random_problem(rng: &mut ChaCha8Rng, n: usize, blocks: usize) -> LmiProblem {
        let constraints = (0..blocks)
            .map(|_| {
                let p = rng.gen_range(1..=3);
                let k = DMatrix::from_fn(p, p, |_, _| rng.gen_range(-1.0..1.0));
                LmiConstraint::new(
                    &k + k.transpose(),
                    vec![LmiTerm::new(
                        DMatrix::from_fn(p, n, |_, _| rng.gen_range(-1.0..1.0)),
                        DMatrix::from_fn(p, n, |_, _| rng.gen_range(-1.0..1.0)),
                    )],
                    ConeSense::Psd,
                )
            })
            .collect();
        LmiProblem::new(n, constraints, false)
    }

    fn random_sym(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
        let m = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-2.0..2.0));
        &m + m.transpose()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn substitution_is_affine(seed in 0u64..1000, alpha in 0.0f64..1.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = rng.gen_range(1..4usize);
            let p = random_problem(&mut rng, n, 2);
            let x1 = random_sym(&mut rng, n);
            let x2 = random_sym(&mut rng, n);
            let xa = alpha * &x1 + (1.0 - alpha) * &x2;
            let b1 = substitute(&p, &x1).unwrap();
            let b2 = substitute(&p, &x2).unwrap();
            let ba = substitute(&p, &xa).unwrap();
            for ((m1, m2), ma) in b1.iter().zip(&b2).zip(&ba) {
                let combo = alpha * m1 + (1.0 - alpha) * m2;
                prop_assert!((ma - &combo).amax() <= 1e-12 * combo.amax().max(1.0));
            }
        }
    }
}

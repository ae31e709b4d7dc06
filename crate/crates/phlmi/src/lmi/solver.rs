//! Margin-maximizing LMI feasibility solver.
//!
//! Solves `max t  s.t.  B_c(X) - (req_c + t) I ⪰ 0` for every block `B_c`
//! by log-det barrier path following on the joint unknown `(X, t)`, where
//! `req_c` is the margin each block must certify (`lmi_margin` for strict
//! blocks, zero for semidefinite ones): minimize
//! `-eta * t - sum_c log det(B_c(X) - (req_c + t) I)` for an increasing
//! weight `eta`. Any `(X0, t0)` with `t0` below the worst shifted margin of
//! `X0` is strictly interior, so no separate phase-1 is needed. The solve
//! stops as soon as every true block margin certifies against its
//! requirement, or when the path stalls.
//!
//! `X` is parametrized in an orthonormal basis of symmetric matrices
//! (off-diagonal entries scaled by sqrt(2)), which keeps the Newton system
//! well conditioned. Hessian entries `tr(S^-1 A_k S^-1 A_l)` are assembled
//! from per-term column Gram matrices in O(1) per entry rather than by
//! forming the derivative matrices `A_k` explicitly.
//!
//! Internally every block is normalized by its data magnitude so that
//! problems mixing scales across many decades (bound blocks at 1e-10 next
//! to bilinear blocks at 1e7) stay solvable; margins are always reported
//! and tested against tolerances in the original, unnormalized units.
//! When a solve stalls short of the requested margins, the unknown is
//! re-parametrized by the matrix square root of the best iterate
//! (`X = S Y S`, which maps that iterate to `Y = I`) and the solve
//! restarts; block values are invariant under this congruence, so nothing
//! observable changes except conditioning. Severely anisotropic solution
//! sets (state scales differing by many decades) become locally round in
//! the new coordinates.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::system::{symmetrize, Tolerances};

use super::{ConeSense, LmiProblem, LmiSolution, LmiStatus};

const ETA_INITIAL: f64 = 1.0;
const ETA_GROWTH: f64 = 8.0;
const ETA_MAX: f64 = 1e20;
const MAX_NEWTON_PER_CENTERING: usize = 40;
const MAX_LINE_SEARCH_HALVINGS: usize = 60;
const ARMIJO_SLOPE: f64 = 1e-4;
/// Iterate cap against scale-invariant problems whose margin grows without
/// bound along a ray (maximizing the margin then has no finite optimum); the
/// point reached at the cap is returned and classified by its true margins.
/// Kept low enough that eigensolver noise at cap scale stays below the
/// absolute margin tolerances.
const COORD_CAP: f64 = 1e6;

fn trace_enabled() -> bool {
    static ENABLED: std::sync::OnceLock<bool> = std::sync::OnceLock::new();
    *ENABLED.get_or_init(|| std::env::var("PHLMI_LMI_TRACE").ok().as_deref() == Some("1"))
}

/// Decides feasibility of `p`, returning a strictly interior `X` when one is
/// found. Deterministic for a fixed `seed`; `max_iter` caps the Newton
/// iteration count of each re-parametrized attempt.
pub fn solve_feasible(p: &LmiProblem, tol: &Tolerances, max_iter: usize, seed: u64) -> Result<LmiSolution> {
    p.validate(tol)?;
    tol.validate()?;

    let n = p.dim;
    let mut scaling = DMatrix::<f64>::identity(n, n);
    let mut best: Option<LmiSolution> = None;
    let mut total_iterations = 0usize;
    for attempt in 0..4 {
        let scaled = reparametrize(p, &scaling);
        let mut sol = solve_attempt(&scaled, tol, max_iter, seed, attempt > 0);
        // map back: X = S Y S; block values and margins are invariant
        sol.x = symmetrize(&(&scaling * &sol.x * &scaling));
        total_iterations += sol.newton_iterations;
        sol.newton_iterations = total_iterations;
        let improved = match &best {
            Some(b) => rank(sol.status) > rank(b.status) || (sol.status == b.status && sol.best_margin > b.best_margin),
            None => true,
        };
        let done = sol.status == LmiStatus::Feasible;
        let runaway = sol.x.amax() > 1e6;
        if improved {
            best = Some(sol);
        }
        if done || runaway {
            // zooming into an unbounded ray only amplifies noise
            break;
        }
        // re-parametrize by the square root of the best iterate, clamping
        // its spectrum so the congruence stays invertible; the next attempt
        // continues from that point (mapped to the identity)
        let b = best.as_ref().expect("set above");
        let eig = nalgebra::linalg::SymmetricEigen::new(symmetrize(&b.x));
        let lam_max = eig.eigenvalues.iter().copied().fold(0.0_f64, f64::max).max(1e-300);
        let clamped = eig.eigenvalues.map(|l| l.max(1e-12 * lam_max).sqrt());
        let next = symmetrize(&(&eig.eigenvectors * DMatrix::from_diagonal(&clamped) * eig.eigenvectors.transpose()));
        if (&next - &scaling).amax() <= 1e-9 * scaling.amax() {
            break;
        }
        scaling = next;
    }
    let mut sol = best.expect("at least one attempt");
    // final margins and verdict re-derived at identity scaling
    let verify = Workspace::new(p, tol);
    let mut coords = vec![0.0; n * (n + 1) / 2];
    mat_to_coords(&sol.x, &mut coords);
    sol.margins = verify.true_margins(&coords);
    sol.best_margin = sol.margins.iter().copied().fold(f64::INFINITY, f64::min);
    sol.status = classify(p, &sol.margins, tol);
    sol.newton_iterations = total_iterations;
    Ok(sol)
}

fn rank(s: LmiStatus) -> u8 {
    match s {
        LmiStatus::Feasible => 2,
        LmiStatus::Marginal => 1,
        LmiStatus::Infeasible => 0,
    }
}

fn reparametrize(p: &LmiProblem, s: &DMatrix<f64>) -> LmiProblem {
    let constraints = p
        .constraints
        .iter()
        .map(|c| super::LmiConstraint {
            constant: c.constant.clone(),
            terms: c
                .terms
                .iter()
                .map(|t| super::LmiTerm::new(&t.m * s, &t.n * s))
                .collect(),
            sense: c.sense,
        })
        .collect();
    // X > 0 iff Y > 0 under congruence, but the block value must stay X
    // itself, so materialize the implicit block explicitly
    let mut out = LmiProblem::new(p.dim, constraints, false);
    if p.include_x_pd {
        out.constraints.push(super::LmiConstraint {
            constant: DMatrix::zeros(p.dim, p.dim),
            terms: vec![super::LmiTerm::new(0.5 * s, s.clone())],
            sense: super::ConeSense::Pd,
        });
    }
    out
}

fn solve_attempt(p: &LmiProblem, tol: &Tolerances, max_iter: usize, seed: u64, warm: bool) -> LmiSolution {
    let mut work = Workspace::new(p, tol);
    let n = p.dim;
    let nx = n * (n + 1) / 2;

    // Seeded start near the identity; the t-shift makes any start interior.
    // A warm attempt continues from the previous best iterate, which the
    // re-parametrization has mapped to the identity exactly, so it starts
    // unperturbed with a barrier weight matched to its remaining gap.
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x0 = if warm {
        DMatrix::identity(n, n)
    } else {
        let perturb = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        DMatrix::identity(n, n) + 0.01 * symmetrize(&perturb)
    };
    let mut z = DVector::zeros(nx + 1);
    mat_to_coords(&x0, &mut z.as_mut_slice()[..nx]);

    let scaled_m0 = work.worst_scaled_margin(&z.as_slice()[..nx]);
    let (gap0, mut eta) = if warm {
        let gap = (0.1 * scaled_m0.abs()).max(1e-12);
        let nu: usize = work.blocks.iter().map(|b| b.p).sum();
        (gap, (nu as f64 / gap).clamp(ETA_INITIAL, 1e16))
    } else {
        (1.0 + 0.1 * scaled_m0.abs(), ETA_INITIAL)
    };
    z[nx] = scaled_m0 - gap0;

    let mut best_coords = z.as_slice()[..nx].to_vec();
    let mut best_score = scaled_m0;
    let mut iterations = 0usize;
    let mut stalled = false;
    // once feasible, keep walking the path a bounded number of rounds: the
    // max-margin point differentiates nearby design configurations much more
    // than the first certifiable iterate does
    let mut polish_left: Option<usize> = None;
    let mut prev_score = f64::NEG_INFINITY;

    'outer: while eta <= ETA_MAX && iterations < max_iter {
        let mut inner = 0usize;
        let mut stall_cause = "";
        while inner < MAX_NEWTON_PER_CENTERING && iterations < max_iter {
            let Some(step) = work.newton_step(&z, eta) else {
                stalled = true;
                stall_cause = "newton step";
                break;
            };
            inner += 1;
            iterations += 1;

            let decrement_sq = step.decrement_sq;
            let accepted = work.line_search(&mut z, &step.direction, eta);
            if !accepted {
                stalled = true;
                stall_cause = "line search";
                break;
            }
            if z.as_slice()[..nx].iter().any(|v| v.abs() > COORD_CAP) {
                stalled = true;
                stall_cause = "coordinate cap";
                break;
            }
            if decrement_sq <= 1e-12 * (1.0 + step.phi.abs()) {
                break;
            }
        }
        if trace_enabled() {
            eprintln!(
                "lmi: eta {eta:.1e}, {inner} newton steps, t {:.6e}, shifted margin {:.6e}{}{}",
                z[nx],
                work.worst_scaled_margin(&z.as_slice()[..nx]),
                if stalled { ", stalled: " } else { "" },
                stall_cause
            );
        }

        // Track the best point by its worst requirement-shifted margin.
        let score = work.worst_scaled_margin(&z.as_slice()[..nx]);
        if score > best_score {
            best_score = score;
            best_coords.copy_from_slice(&z.as_slice()[..nx]);
            if polish_left.is_none() {
                let margins = work.true_margins(&best_coords);
                if classify(p, &margins, tol) == LmiStatus::Feasible {
                    polish_left = Some(6);
                }
            }
        }
        if let Some(rounds) = polish_left.as_mut() {
            let gain = score - prev_score;
            if *rounds == 0 || gain <= 0.03 * score.abs().max(1e-300) {
                break 'outer;
            }
            *rounds -= 1;
        }
        prev_score = score;
        if stalled {
            break;
        }
        // Keep t strictly below the worst shifted margin when re-centering.
        if score - z[nx] <= 0.0 {
            z[nx] = score - 1e-6 * (1.0 + score.abs());
        }
        eta *= ETA_GROWTH;
    }

    let x_best = coords_to_mat(&best_coords, n);
    let margins = work.true_margins(&best_coords);
    let status = classify(p, &margins, tol);
    let best_margin = margins.iter().copied().fold(f64::INFINITY, f64::min);
    LmiSolution {
        x: x_best,
        margins,
        status,
        best_margin,
        newton_iterations: iterations,
    }
}

fn classify(p: &LmiProblem, margins: &[f64], tol: &Tolerances) -> LmiStatus {
    let mut feasible = true;
    let mut above_psd_floor = true;
    for (idx, &m) in margins.iter().enumerate() {
        match p.block_sense(idx) {
            ConeSense::Pd => {
                if m < tol.lmi_margin {
                    feasible = false;
                }
            }
            ConeSense::Psd => {
                if m < -tol.tol_psd {
                    feasible = false;
                }
            }
        }
        if m < -tol.tol_psd {
            above_psd_floor = false;
        }
    }
    if feasible {
        LmiStatus::Feasible
    } else if above_psd_floor {
        LmiStatus::Marginal
    } else {
        LmiStatus::Infeasible
    }
}

struct NewtonStep {
    direction: DVector<f64>,
    decrement_sq: f64,
    phi: f64,
}

/// Preprocessed block data plus scratch state for one solve.
struct Workspace {
    n: usize,
    nx: usize,
    blocks: Vec<Block>,
    /// Basis index -> (i, j), i <= j.
    pairs: Vec<(usize, usize)>,
}

struct Block {
    /// Requirement-shifted, scale-normalized constant.
    k0: DMatrix<f64>,
    terms: Vec<(DMatrix<f64>, DMatrix<f64>)>,
    p: usize,
    /// Data magnitude divided out of this block.
    scale: f64,
    /// Margin the block must certify in raw units.
    req: f64,
}

impl Block {
    fn normalized(k0: DMatrix<f64>, terms: Vec<(DMatrix<f64>, DMatrix<f64>)>, p: usize, req: f64) -> Self {
        let mut scale = k0.amax();
        for (m, n) in &terms {
            scale = scale.max(m.amax() * n.amax());
        }
        let scale = if scale > 0.0 && scale.is_finite() { scale } else { 1.0 };
        let inv_sqrt = 1.0 / scale.sqrt();
        let mut shifted = k0;
        for d in 0..p {
            shifted[(d, d)] -= req;
        }
        Block {
            k0: shifted / scale,
            terms: terms
                .into_iter()
                .map(|(m, n)| (m * inv_sqrt, n * inv_sqrt))
                .collect(),
            p,
            scale,
            req,
        }
    }
}

impl Workspace {
    fn new(problem: &LmiProblem, tol: &Tolerances) -> Self {
        let n = problem.dim;
        let req_of = |sense: super::ConeSense| match sense {
            super::ConeSense::Pd => tol.lmi_margin,
            super::ConeSense::Psd => 0.0,
        };
        let mut blocks: Vec<Block> = problem
            .constraints
            .iter()
            .map(|c| {
                Block::normalized(
                    symmetrize(&c.constant),
                    c.terms.iter().map(|t| (t.m.clone(), t.n.clone())).collect(),
                    c.block_size(),
                    req_of(c.sense),
                )
            })
            .collect();
        if problem.include_x_pd {
            blocks.push(Block::normalized(
                DMatrix::zeros(n, n),
                vec![(DMatrix::identity(n, n) * 0.5, DMatrix::identity(n, n))],
                n,
                tol.lmi_margin,
            ));
        }
        let mut pairs = Vec::with_capacity(n * (n + 1) / 2);
        for i in 0..n {
            for j in i..n {
                pairs.push((i, j));
            }
        }
        Workspace { n, nx: pairs.len(), blocks, pairs }
    }

    fn eval_block(&self, block: &Block, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut s = block.k0.clone();
        for (m, nn) in &block.terms {
            let mxn = m * x * nn.transpose();
            s += &mxn + mxn.transpose();
        }
        s
    }

    /// Margins of the raw (unnormalized, unshifted) blocks at `X`.
    fn true_margins(&self, coords: &[f64]) -> Vec<f64> {
        let x = coords_to_mat(coords, self.n);
        self.blocks
            .iter()
            .map(|b| {
                let s = self.eval_block(b, &x);
                b.scale * crate::system::min_symmetric_eigenvalue(&symmetrize(&s)) + b.req
            })
            .collect()
    }

    /// Worst requirement-shifted normalized margin; the shift variable `t`
    /// lives in these units.
    fn worst_scaled_margin(&self, coords: &[f64]) -> f64 {
        let x = coords_to_mat(coords, self.n);
        self.blocks
            .iter()
            .map(|b| {
                let s = self.eval_block(b, &x);
                crate::system::min_symmetric_eigenvalue(&symmetrize(&s))
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Barrier value of the shifted blocks, or None when not interior.
    fn phi(&self, z: &DVector<f64>, eta: f64) -> Option<f64> {
        let x = coords_to_mat(&z.as_slice()[..self.nx], self.n);
        let t = z[self.nx];
        let mut phi = -eta * t;
        for b in &self.blocks {
            let mut s = self.eval_block(b, &x);
            for d in 0..b.p {
                s[(d, d)] -= t;
            }
            let chol = nalgebra::linalg::Cholesky::new(symmetrize(&s))?;
            let mut logdet = 0.0;
            let l = chol.l();
            for d in 0..b.p {
                let v = l[(d, d)];
                if !(v > 0.0) || !v.is_finite() {
                    return None;
                }
                logdet += v.ln();
            }
            phi -= 2.0 * logdet;
        }
        phi.is_finite().then_some(phi)
    }

    /// Assembles and solves the Newton system at `z`.
    fn newton_step(&mut self, z: &DVector<f64>, eta: f64) -> Option<NewtonStep> {
        let nx = self.nx;
        let dim = nx + 1;
        let x = coords_to_mat(&z.as_slice()[..nx], self.n);
        let t = z[nx];

        let mut grad = DVector::<f64>::zeros(dim);
        grad[nx] = -eta;
        let mut hess = DMatrix::<f64>::zeros(dim, dim);

        for block in &self.blocks {
            let mut s = self.eval_block(block, &x);
            for d in 0..block.p {
                s[(d, d)] -= t;
            }
            let eig = nalgebra::linalg::SymmetricEigen::new(symmetrize(&s));
            let lmin = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
            if !(lmin > 0.0) {
                return None;
            }
            let v = &eig.eigenvectors;
            let inv = v * DMatrix::from_diagonal(&eig.eigenvalues.map(|e| 1.0 / e)) * v.transpose();
            let inv_sqrt = v * DMatrix::from_diagonal(&eig.eigenvalues.map(|e| 1.0 / e.sqrt())) * v.transpose();
            let inv2 = v * DMatrix::from_diagonal(&eig.eigenvalues.map(|e| 1.0 / (e * e))) * v.transpose();

            grad[nx] += inv.trace();
            hess[(nx, nx)] += inv2.trace();

            let tilded: Vec<(DMatrix<f64>, DMatrix<f64>)> = block
                .terms
                .iter()
                .map(|(m, nn)| (&inv_sqrt * m, &inv_sqrt * nn))
                .collect();

            for (m, nn) in &block.terms {
                // gradient: -tr(S^-1 A_k) accumulated in svec coordinates
                let zmat = nn.transpose() * &inv * m;
                let w = &zmat + zmat.transpose();
                add_svec(&mut grad, &self.pairs, &w, -1.0, 0);
                // cross term with t: -tr(S^-2 A_k)
                let ymat = nn.transpose() * &inv2 * m;
                let wy = &ymat + ymat.transpose();
                add_svec_col(&mut hess, nx, &self.pairs, &wy, -1.0);
            }

            // X-X Hessian block from per-term-pair Gram matrices.
            for (mt_r, nt_r) in &tilded {
                for (mt_s, nt_s) in &tilded {
                    let pa = nt_r.transpose() * mt_s;
                    let qa = nt_s.transpose() * mt_r;
                    let pb = nt_r.transpose() * nt_s;
                    let qb = mt_s.transpose() * mt_r;
                    let pc = mt_r.transpose() * mt_s;
                    let qc = nt_s.transpose() * nt_r;
                    let pd = mt_r.transpose() * nt_s;
                    let qd = mt_s.transpose() * nt_r;
                    accumulate_pairwise(&mut hess, &self.pairs, &[(pa, qa), (pb, qb), (pc, qc), (pd, qd)]);
                }
            }
        }

        // mirror the t column into the t row
        for k in 0..nx {
            hess[(nx, k)] = hess[(k, nx)];
        }

        let phi = self.phi(z, eta)?;

        // Cholesky solve for the Newton direction; the barrier Hessian is PD
        // by construction, so regularize only when roundoff breaks that.
        let diag_scale = (0..dim).map(|i| hess[(i, i)].abs()).fold(0.0_f64, f64::max).max(1e-300);
        let mut reg = 0.0;
        for _ in 0..8 {
            let mut h = hess.clone();
            if reg > 0.0 {
                for i in 0..dim {
                    h[(i, i)] += reg;
                }
            }
            if let Some(chol) = nalgebra::linalg::Cholesky::new(h) {
                let direction = chol.solve(&(-&grad));
                let decrement_sq = -grad.dot(&direction);
                if decrement_sq.is_finite() && decrement_sq >= 0.0 {
                    return Some(NewtonStep { direction, decrement_sq, phi });
                }
            }
            reg = if reg == 0.0 { 1e-14 * diag_scale } else { reg * 1e3 };
        }
        None
    }

    /// Backtracking line search keeping all shifted blocks strictly PD;
    /// updates `z` in place and reports whether a step was accepted.
    fn line_search(&self, z: &mut DVector<f64>, direction: &DVector<f64>, eta: f64) -> bool {
        let Some(phi0) = self.phi(z, eta) else { return false };
        // Trust-region-style clamp: never grow the iterate by more than a
        // couple of its own scale in one step, so runaway rays advance
        // geometrically instead of jumping past the iterate cap.
        let step_cap = 2.0 * (1.0 + z.amax());
        let dmax = direction.amax();
        let mut alpha = if dmax > step_cap { step_cap / dmax } else { 1.0 };
        for _ in 0..MAX_LINE_SEARCH_HALVINGS {
            let trial = &*z + alpha * direction;
            if let Some(phi_trial) = self.phi(&trial, eta) {
                if phi_trial <= phi0 - ARMIJO_SLOPE * alpha * direction.norm_squared().min(1.0 / ARMIJO_SLOPE) {
                    *z = trial;
                    return true;
                }
                if phi_trial < phi0 {
                    *z = trial;
                    return true;
                }
            }
            alpha *= 0.5;
        }
        false
    }
}

/// Adds `scale * svec(W)` (orthonormal convention) into `out[offset..]`.
fn add_svec(out: &mut DVector<f64>, pairs: &[(usize, usize)], w: &DMatrix<f64>, scale: f64, offset: usize) {
    for (k, &(i, j)) in pairs.iter().enumerate() {
        let v = if i == j { w[(i, i)] } else { std::f64::consts::SQRT_2 * w[(i, j)] };
        out[offset + k] += scale * v;
    }
}

/// Adds `scale * svec(W)` into column `col` of `hess`.
fn add_svec_col(hess: &mut DMatrix<f64>, col: usize, pairs: &[(usize, usize)], w: &DMatrix<f64>, scale: f64) {
    for (k, &(i, j)) in pairs.iter().enumerate() {
        let v = if i == j { w[(i, i)] } else { std::f64::consts::SQRT_2 * w[(i, j)] };
        hess[(k, col)] += scale * v;
    }
}

/// Accumulates `tr(E_k P E_l Q)` over the basis pairs into the X-X Hessian
/// block for each `(P, Q)` product, exploiting the dyadic structure of the
/// basis matrices.
fn accumulate_pairwise(hess: &mut DMatrix<f64>, pairs: &[(usize, usize)], products: &[(DMatrix<f64>, DMatrix<f64>); 4]) {
    let nx = pairs.len();
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    for k in 0..nx {
        let (i1, j1) = pairs[k];
        let f1 = if i1 == j1 { 1.0 } else { inv_sqrt2 };
        let dy1: &[(usize, usize)] = if i1 == j1 { &[(i1, i1)] } else { &[(i1, j1), (j1, i1)] };
        for l in k..nx {
            let (i2, j2) = pairs[l];
            let f2 = if i2 == j2 { 1.0 } else { inv_sqrt2 };
            let dy2: &[(usize, usize)] = if i2 == j2 { &[(i2, i2)] } else { &[(i2, j2), (j2, i2)] };
            let mut acc = 0.0;
            for (p, q) in products {
                for &(u, v) in dy1 {
                    for &(w, zz) in dy2 {
                        acc += p[(v, w)] * q[(zz, u)];
                    }
                }
            }
            let contrib = f1 * f2 * acc;
            hess[(k, l)] += contrib;
            if k != l {
                hess[(l, k)] += contrib;
            }
        }
    }
}

fn mat_to_coords(x: &DMatrix<f64>, out: &mut [f64]) {
    let n = x.nrows();
    let mut k = 0;
    for i in 0..n {
        for j in i..n {
            out[k] = if i == j { x[(i, i)] } else { std::f64::consts::SQRT_2 * x[(i, j)] };
            k += 1;
        }
    }
}

fn coords_to_mat(coords: &[f64], n: usize) -> DMatrix<f64> {
    let mut x = DMatrix::zeros(n, n);
    let mut k = 0;
    for i in 0..n {
        for j in i..n {
            if i == j {
                x[(i, i)] = coords[k];
            } else {
                let v = coords[k] * std::f64::consts::FRAC_1_SQRT_2;
                x[(i, j)] = v;
                x[(j, i)] = v;
            }
            k += 1;
        }
    }
    x
}

//! Timoshenko beam on a 1-D domain, discretized by finite differences on
//! staggered grids so the pH structure survives discretization exactly.
//!
//! State layout: four blocks of `n_d` samples each,
//! `x = (x1, x2, x3, x4)` approximating shear displacement, transverse
//! momentum, angular displacement and angular momentum. The odd blocks live
//! on cell midpoints `(i - 1/2) h`, the even blocks on nodes `i h`. The four
//! boundary ports are the left-end velocities and the right-end force and
//! torque, so `u = 0` is the clamped-free beam.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::system::{LinearPhSystem, Tolerances};

/// Physical beam parameters, spatially constant.
#[derive(Debug, Clone)]
pub struct BeamParams {
    /// Shear modulus T (Pa).
    pub shear: f64,
    /// Mass per unit length rho (kg/m).
    pub rho: f64,
    /// Bending stiffness EI (Pa m^4).
    pub ei: f64,
    /// Rotational inertia I_rho (kg m^2).
    pub i_rho: f64,
    /// Domain endpoints (m).
    pub a: f64,
    pub b: f64,
}

impl Default for BeamParams {
    fn default() -> Self {
        BeamParams { shear: 1.0, rho: 1.0, ei: 1.0, i_rho: 1.0, a: 0.0, b: 1.0 }
    }
}

impl BeamParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("shear", self.shear), ("rho", self.rho), ("ei", self.ei), ("i_rho", self.i_rho)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidArgument(format!("beam parameter {name} must be > 0, got {v}")));
            }
        }
        if !(self.b > self.a) {
            return Err(Error::InvalidArgument(format!(
                "beam domain must satisfy b > a, got [{}, {}]",
                self.a, self.b
            )));
        }
        Ok(())
    }
}

/// Grid bookkeeping for the staggered discretization.
#[derive(Debug, Clone)]
pub struct BeamStateLayout {
    pub n_d: usize,
    /// Grid step `h = 2 (b - a) / (2 n_d + 1)`.
    pub h: f64,
    pub a: f64,
}

impl BeamStateLayout {
    pub fn new(n_d: usize, params: &BeamParams) -> Result<Self> {
        if n_d < 2 {
            return Err(Error::InvalidArgument(format!("beam needs n_d >= 2, got {n_d}")));
        }
        params.validate()?;
        let h = 2.0 * (params.b - params.a) / (2.0 * n_d as f64 + 1.0);
        Ok(BeamStateLayout { n_d, h, a: params.a })
    }

    /// Total state dimension `4 n_d`.
    pub fn state_dim(&self) -> usize {
        4 * self.n_d
    }

    /// Index range of state block `block` (0..4).
    pub fn block(&self, block: usize) -> std::ops::Range<usize> {
        debug_assert!(block < 4);
        block * self.n_d..(block + 1) * self.n_d
    }

    /// Sample location of `x1`/`x3` entry `i`: `a + (i + 1/2) h`.
    pub fn midpoint(&self, i: usize) -> f64 {
        self.a + (i as f64 + 0.5) * self.h
    }

    /// Sample location of `x2`/`x4` entry `i`: `a + (i + 1) h`.
    pub fn node(&self, i: usize) -> f64 {
        self.a + (i as f64 + 1.0) * self.h
    }
}

/// Assembles the discretized beam as a validated pH system with `R = 0`.
pub fn build_timoshenko(n_d: usize, params: &BeamParams) -> Result<LinearPhSystem> {
    let layout = BeamStateLayout::new(n_d, params)?;
    let h = layout.h;
    let n = layout.state_dim();

    // lower-bidiagonal difference operators
    let mut d = DMatrix::<f64>::zeros(n_d, n_d);
    let mut f = DMatrix::<f64>::zeros(n_d, n_d);
    for i in 0..n_d {
        d[(i, i)] = 1.0 / (h * h);
        f[(i, i)] = 1.0 / (2.0 * h);
        if i > 0 {
            d[(i, i - 1)] = -1.0 / (h * h);
            f[(i, i - 1)] = 1.0 / (2.0 * h);
        }
    }

    let mut j = DMatrix::<f64>::zeros(n, n);
    set_block(&mut j, &layout, 0, 1, &d);
    set_block(&mut j, &layout, 1, 0, &(-d.transpose()));
    set_block(&mut j, &layout, 0, 3, &(-&f));
    set_block(&mut j, &layout, 3, 0, &f.transpose());
    set_block(&mut j, &layout, 2, 3, &d);
    set_block(&mut j, &layout, 3, 2, &(-d.transpose()));

    let r = DMatrix::<f64>::zeros(n, n);

    // Q = h * blockdiag(T, 1/rho, EI, 1/I_rho); constant coefficients make
    // the per-point samples collapse to scalars.
    let mut q = DMatrix::<f64>::zeros(n, n);
    let coeffs = [params.shear, 1.0 / params.rho, params.ei, 1.0 / params.i_rho];
    for (blk, &cv) in coeffs.iter().enumerate() {
        for i in layout.block(blk) {
            q[(i, i)] = h * cv;
        }
    }

    let mut b = DMatrix::<f64>::zeros(n, 4);
    let first = layout.block(0).start;
    let last1 = layout.block(1).start + n_d - 1;
    let last3 = layout.block(3).start + n_d - 1;
    b[(first, 0)] = -1.0 / h; // b11
    b[(first, 1)] = -0.5; // b12
    b[(layout.block(2).start, 1)] = -1.0 / h; // b32 = b11
    b[(last1, 2)] = 1.0 / h; // b23
    b[(last3, 2)] = 0.5; // b43
    b[(last3, 3)] = 1.0 / h; // b44 = b23

    LinearPhSystem::validated(j, r, q, b, &Tolerances::default())
}

fn set_block(j: &mut DMatrix<f64>, layout: &BeamStateLayout, bi: usize, bj: usize, m: &DMatrix<f64>) {
    let (r0, c0) = (layout.block(bi).start, layout.block(bj).start);
    j.view_mut((r0, c0), (layout.n_d, layout.n_d)).copy_from(m);
}

/// State sampled from the static tip-load profile: a force `tip_force` at the
/// free end gives constant shear `P/T` and linearly decaying bending moment
/// `P (b - zeta) / EI`, with zero momenta.
pub fn beam_initial_state(n_d: usize, params: &BeamParams, tip_force: f64) -> Result<DVector<f64>> {
    let layout = BeamStateLayout::new(n_d, params)?;
    let mut x = DVector::zeros(layout.state_dim());
    for i in 0..n_d {
        let zeta = layout.midpoint(i);
        x[layout.block(0).start + i] = tip_force / params.shear;
        x[layout.block(2).start + i] = tip_force * (params.b - zeta) / params.ei;
    }
    Ok(x)
}

/// Deflection and cross-section rotation reconstructed on the node grid
/// (`n_d + 1` points including the clamped left end).
#[derive(Debug, Clone)]
pub struct DeflectionProfile {
    pub zeta: Vec<f64>,
    pub w: Vec<f64>,
    pub phi: Vec<f64>,
}

impl DeflectionProfile {
    /// Transverse deflection at the last node (the free-end sample).
    pub fn tip(&self) -> f64 {
        *self.w.last().unwrap_or(&0.0)
    }

    /// Linear interpolation of `w` onto query locations.
    pub fn sample_w(&self, zq: &[f64]) -> Vec<f64> {
        zq.iter().map(|&z| interp(&self.zeta, &self.w, z)).collect()
    }
}

fn interp(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    if x <= xs[0] {
        return ys[0];
    }
    if x >= xs[xs.len() - 1] {
        return ys[ys.len() - 1];
    }
    let mut i = 0;
    while i + 1 < xs.len() && xs[i + 1] < x {
        i += 1;
    }
    let t = (x - xs[i]) / (xs[i + 1] - xs[i]);
    ys[i] * (1.0 - t) + ys[i + 1] * t
}

/// Cumulative reconstruction anchored at the clamped end: `phi` integrates
/// the angular displacement samples, `w` integrates `z1 + phi` (because
/// `z1 = w_zeta - phi`), both with zero value at `zeta = a`. The midpoint
/// samples integrate each cell exactly; `phi` enters `w` through the
/// trapezoid average of its node values.
pub fn reconstruct_deflection(x: &DVector<f64>, layout: &BeamStateLayout, _params: &BeamParams) -> Result<DeflectionProfile> {
    if x.len() != layout.state_dim() {
        return Err(Error::dimension(
            "beam state",
            format!("{}", layout.state_dim()),
            format!("{}", x.len()),
        ));
    }
    let n_d = layout.n_d;
    let h = layout.h;
    let mut zeta = Vec::with_capacity(n_d + 1);
    let mut phi = Vec::with_capacity(n_d + 1);
    let mut w = Vec::with_capacity(n_d + 1);
    zeta.push(layout.a);
    phi.push(0.0);
    w.push(0.0);
    for i in 0..n_d {
        let z1 = x[layout.block(0).start + i];
        let z3 = x[layout.block(2).start + i];
        let phi_next = phi[i] + h * z3;
        let w_next = w[i] + h * (z1 + 0.5 * (phi[i] + phi_next));
        zeta.push(layout.a + (i as f64 + 1.0) * h);
        phi.push(phi_next);
        w.push(w_next);
    }
    Ok(DeflectionProfile { zeta, w, phi })
}

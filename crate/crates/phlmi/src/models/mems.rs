//! Nonlinear MEMS optical switch: a spring-mass stage pulled by a charged
//! plate capacitor through a series resistor.
//!
//! State `x = (q, p, Q)`: plate position, momentum and capacitor charge. The
//! stored energy is
//!
//! ```text
//! H = p^2 / 2m + k1 q^2 / 2 + k2 q^4 / 4 + Q^2 / 2 C(q),
//! C(q) = eps A_s / (q_max - q),
//! ```
//!
//! the dynamics are `x' = J_R grad H + g u` with
//! `J_R = [[0, 1, 0], [-1, -b, 0], [0, 0, -1/r]]`, `g = (0, 0, 1/r)'`, and
//! the supplied current is `y = (1/r) dH/dQ`. The balance
//! `H' = -b (p/m)^2 - r y^2 + y u` makes the plant output strictly passive.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Plate and circuit parameters.
#[derive(Debug, Clone)]
pub struct MemsParams {
    /// Linear spring coefficient (N/m).
    pub k1: f64,
    /// Cubic spring coefficient (N/m^3).
    pub k2: f64,
    /// Moving mass (kg).
    pub m: f64,
    /// Dielectric constant (F/m).
    pub eps: f64,
    /// Plate surface (m^2).
    pub a_s: f64,
    /// Gap at rest (m); states must keep `q < q_max`.
    pub q_max: f64,
    /// Mechanical damping (N s).
    pub b_damp: f64,
    /// Series resistance (Ohm).
    pub r: f64,
}

impl Default for MemsParams {
    fn default() -> Self {
        MemsParams {
            k1: 0.46,
            k2: 0.46,
            m: 2.4e-8,
            eps: 8.854e-12,
            a_s: 4e-4,
            q_max: 1e-5,
            b_damp: 1e-7,
            r: 0.5e6,
        }
    }
}

impl MemsParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("k1", self.k1),
            ("k2", self.k2),
            ("m", self.m),
            ("eps", self.eps),
            ("a_s", self.a_s),
            ("q_max", self.q_max),
            ("b_damp", self.b_damp),
            ("r", self.r),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidArgument(format!("MEMS parameter {name} must be > 0, got {v}")));
            }
        }
        Ok(())
    }

    fn guard(&self, q: f64) -> Result<()> {
        if !(q < self.q_max) {
            return Err(Error::Domain(format!(
                "capacitance singularity: q = {q:.6e} >= q_max = {:.6e}",
                self.q_max
            )));
        }
        Ok(())
    }

    /// Gap-dependent capacitance `eps A_s / (q_max - q)`.
    pub fn capacitance(&self, q: f64) -> Result<f64> {
        self.guard(q)?;
        Ok(self.eps * self.a_s / (self.q_max - q))
    }

    /// Stored energy at `x = (q, p, Q)`.
    pub fn hamiltonian(&self, x: &DVector<f64>) -> Result<f64> {
        let (q, p, qe) = unpack(x)?;
        self.guard(q)?;
        let ea = self.eps * self.a_s;
        Ok(p * p / (2.0 * self.m)
            + 0.5 * self.k1 * q * q
            + 0.25 * self.k2 * q.powi(4)
            + qe * qe * (self.q_max - q) / (2.0 * ea))
    }

    /// Energy gradient `(dH/dq, dH/dp, dH/dQ)` together with `H`.
    pub fn grad_h(&self, x: &DVector<f64>) -> Result<(DVector<f64>, f64)> {
        let (q, p, qe) = unpack(x)?;
        self.guard(q)?;
        let ea = self.eps * self.a_s;
        let g = DVector::from_column_slice(&[
            self.k1 * q + self.k2 * q.powi(3) - qe * qe / (2.0 * ea),
            p / self.m,
            qe * (self.q_max - q) / ea,
        ]);
        Ok((g, self.hamiltonian(x)?))
    }

    /// Hessian of the energy.
    pub fn hess_h(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        let (q, _p, qe) = unpack(x)?;
        self.guard(q)?;
        let ea = self.eps * self.a_s;
        Ok(DMatrix::from_row_slice(
            3,
            3,
            &[
                self.k1 + 3.0 * self.k2 * q * q,
                0.0,
                -qe / ea,
                0.0,
                1.0 / self.m,
                0.0,
                -qe / ea,
                0.0,
                (self.q_max - q) / ea,
            ],
        ))
    }

    /// Structure matrix `J_R` (skew interconnection plus damping).
    pub fn structure_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(
            3,
            3,
            &[0.0, 1.0, 0.0, -1.0, -self.b_damp, 0.0, 0.0, 0.0, -1.0 / self.r],
        )
    }

    /// Input map `g = (0, 0, 1/r)'`.
    pub fn input_map(&self) -> DVector<f64> {
        DVector::from_column_slice(&[0.0, 0.0, 1.0 / self.r])
    }

    /// State derivative `J_R grad H + g u`.
    pub fn dynamics(&self, x: &DVector<f64>, u: f64) -> Result<DVector<f64>> {
        let (grad, _) = self.grad_h(x)?;
        Ok(self.structure_matrix() * grad + self.input_map() * u)
    }

    /// Supplied current `y = (1/r) dH/dQ`.
    pub fn output(&self, x: &DVector<f64>) -> Result<f64> {
        let (grad, _) = self.grad_h(x)?;
        Ok(grad[2] / self.r)
    }

    /// State Jacobian of the dynamics, `J_R Hess H`.
    pub fn dynamics_jacobian(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        Ok(self.structure_matrix() * self.hess_h(x)?)
    }

    /// Stationary point at prescribed plate position `q_star`.
    ///
    /// `p* = 0`, `Q* = sqrt(2 eps A_s (k1 q* + k2 q*^3))`, `u* = dH/dQ|*`,
    /// `y* = u*/r`; the residual of the dynamics at the point is certified
    /// against per-channel magnitude scales.
    pub fn equilibrium(&self, q_star: f64) -> Result<MemsEquilibrium> {
        self.validate()?;
        if !(q_star > 0.0 && q_star < self.q_max) {
            return Err(Error::InvalidArgument(format!(
                "equilibrium position must lie in (0, q_max), got {q_star:.6e}"
            )));
        }
        let ea = self.eps * self.a_s;
        let spring = self.k1 * q_star + self.k2 * q_star.powi(3);
        let charge = (2.0 * ea * spring).sqrt();
        let u = charge * (self.q_max - q_star) / ea;
        let y = u / self.r;
        let eq = MemsEquilibrium { q: q_star, p: 0.0, charge, u, y };

        let x = eq.state();
        let f = self.dynamics(&x, eq.u)?;
        let omega = (self.k1 / self.m).sqrt();
        let scales = [
            omega * q_star,
            spring.abs() + charge * charge / (2.0 * ea),
            (eq.u + charge * (self.q_max - q_star) / ea) / self.r,
        ];
        for i in 0..3 {
            let rel = f[i].abs() / scales[i].max(1e-300);
            if rel > 1e-12 {
                return Err(Error::Internal(format!(
                    "equilibrium residual too large in channel {i}: {rel:.3e}"
                )));
            }
        }
        Ok(eq)
    }

    /// Analytic linearization `(A, B, C)` about an equilibrium, cross-checked
    /// entry by entry against central finite differences of the dynamics and
    /// output maps (hard error beyond 1e-5 relative, guarding transcription).
    pub fn linearize(&self, eq: &MemsEquilibrium) -> Result<(DMatrix<f64>, DMatrix<f64>, DMatrix<f64>)> {
        let ea = self.eps * self.a_s;
        let q = eq.q;
        let qe = eq.charge;
        let a = DMatrix::from_row_slice(
            3,
            3,
            &[
                0.0,
                1.0 / self.m,
                0.0,
                -3.0 * self.k2 * q * q - self.k1,
                -self.b_damp / self.m,
                qe / ea,
                qe / (ea * self.r),
                0.0,
                (q - self.q_max) / (ea * self.r),
            ],
        );
        let b = DMatrix::from_column_slice(3, 1, &[0.0, 0.0, 1.0 / self.r]);
        // Jacobian of y = Q (q_max - q) / (eps A_s r); the q-entry is
        // negative, the Q-entry positive.
        let c = DMatrix::from_row_slice(
            1,
            3,
            &[-qe / (ea * self.r), 0.0, (self.q_max - q) / (ea * self.r)],
        );

        let x0 = eq.state();
        let scale = x0.amax();
        let mut a_fd = DMatrix::zeros(3, 3);
        let mut c_fd = DMatrix::zeros(1, 3);
        for jcol in 0..3 {
            let h = 1e-7 * (x0[jcol].abs() + 1e-6 * scale);
            let mut xp = x0.clone();
            let mut xm = x0.clone();
            xp[jcol] += h;
            xm[jcol] -= h;
            let fp = self.dynamics(&xp, eq.u)?;
            let fm = self.dynamics(&xm, eq.u)?;
            for i in 0..3 {
                a_fd[(i, jcol)] = (fp[i] - fm[i]) / (2.0 * h);
            }
            c_fd[(0, jcol)] = (self.output(&xp)? - self.output(&xm)?) / (2.0 * h);
        }
        let hu = 1e-7 * (eq.u.abs() + 1e-3);
        let fp = self.dynamics(&x0, eq.u + hu)?;
        let fm = self.dynamics(&x0, eq.u - hu)?;
        let mut b_fd = DMatrix::zeros(3, 1);
        for i in 0..3 {
            b_fd[(i, 0)] = (fp[i] - fm[i]) / (2.0 * hu);
        }

        for (name, analytic, fd) in [("A", &a, &a_fd), ("B", &b, &b_fd), ("C", &c, &c_fd)] {
            let rel = (analytic - fd).norm() / analytic.norm().max(1e-300);
            if rel > 1e-5 {
                return Err(Error::Internal(format!(
                    "linearization cross-check failed for {name}: relative deviation {rel:.3e}"
                )));
            }
        }
        Ok((a, b, c))
    }
}

/// Equilibrium data `(q*, p*, Q*, u*, y*)`.
#[derive(Debug, Clone)]
pub struct MemsEquilibrium {
    pub q: f64,
    pub p: f64,
    pub charge: f64,
    pub u: f64,
    pub y: f64,
}

impl MemsEquilibrium {
    pub fn state(&self) -> DVector<f64> {
        DVector::from_column_slice(&[self.q, self.p, self.charge])
    }
}

fn unpack(x: &DVector<f64>) -> Result<(f64, f64, f64)> {
    if x.len() != 3 {
        return Err(Error::dimension("MEMS state", "3", format!("{}", x.len())));
    }
    Ok((x[0], x[1], x[2]))
}

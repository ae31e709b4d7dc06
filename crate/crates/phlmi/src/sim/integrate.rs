//! Implicit midpoint stepping for linear and nonlinear fields.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

use super::SimConfig;

/// Smooth state-derivative function with an analytic Jacobian.
pub trait NonlinearField {
    fn dim(&self) -> usize;
    fn deriv(&self, t: f64, x: &DVector<f64>) -> Result<DVector<f64>>;
    fn jacobian(&self, t: f64, x: &DVector<f64>) -> Result<DMatrix<f64>>;
}

/// Field to integrate: a linear drift with optional forcing, or a general
/// nonlinear field.
pub enum Dynamics<'a> {
    Linear {
        a: &'a DMatrix<f64>,
        /// Additive forcing evaluated at the step midpoint.
        forcing: Option<&'a dyn Fn(f64) -> DVector<f64>>,
    },
    Nonlinear(&'a dyn NonlinearField),
}

/// Recorded trajectory. States are stored every `record_stride` steps plus
/// the final step.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DVector<f64>>,
}

impl Trajectory {
    pub fn last_state(&self) -> &DVector<f64> {
        self.states.last().expect("trajectory never empty")
    }
}

/// Integrates and returns the recorded trajectory.
pub fn integrate(dynamics: &Dynamics, x0: &DVector<f64>, cfg: &SimConfig) -> Result<Trajectory> {
    integrate_with(dynamics, x0, cfg, |_, _, _| {})
}

/// Integrates, invoking `on_step(step_index, t, x)` after every step
/// (index 0 fires on the initial state). The callback sees every step
/// regardless of the recording stride.
pub fn integrate_with(
    dynamics: &Dynamics,
    x0: &DVector<f64>,
    cfg: &SimConfig,
    mut on_step: impl FnMut(usize, f64, &DVector<f64>),
) -> Result<Trajectory> {
    cfg.validate()?;
    let n_steps = cfg.n_steps();
    let dt = cfg.dt;
    let mut x = x0.clone();
    let mut traj = Trajectory {
        times: Vec::with_capacity(n_steps / cfg.record_stride + 2),
        states: Vec::with_capacity(n_steps / cfg.record_stride + 2),
    };
    traj.times.push(0.0);
    traj.states.push(x.clone());
    on_step(0, 0.0, &x);

    match dynamics {
        Dynamics::Linear { a, forcing } => {
            let n = a.nrows();
            if a.ncols() != n || x0.len() != n {
                return Err(Error::dimension(
                    "linear integrate",
                    format!("A {n}x{n}, x0 {n}"),
                    format!("A {}x{}, x0 {}", a.nrows(), a.ncols(), x0.len()),
                ));
            }
            let tau = 0.5 * dt;
            let m_minus = DMatrix::identity(n, n) - tau * *a;
            let m_plus = DMatrix::identity(n, n) + tau * *a;
            let lu = m_minus.lu();
            // forcing-free systems advance through a single precomputed
            // propagator matrix; forced systems solve each step
            let propagator = if forcing.is_none() {
                Some(lu.solve(&m_plus).ok_or_else(|| Error::Internal("midpoint step matrix singular".into()))?)
            } else {
                None
            };
            for k in 0..n_steps {
                let t_mid = (k as f64 + 0.5) * dt;
                x = match (&propagator, forcing) {
                    (Some(p), _) => p * &x,
                    (None, Some(f)) => {
                        let rhs = &m_plus * &x + dt * f(t_mid);
                        lu.solve(&rhs)
                            .ok_or_else(|| Error::Internal("midpoint step matrix singular".into()))?
                    }
                    (None, None) => unreachable!(),
                };
                finish_step(k + 1, n_steps, dt, &x, cfg, &mut traj, &mut on_step)?;
            }
        }
        Dynamics::Nonlinear(field) => {
            let n = field.dim();
            if x0.len() != n {
                return Err(Error::dimension("nonlinear integrate", format!("{n}"), format!("{}", x0.len())));
            }
            let id = DMatrix::<f64>::identity(n, n);
            for k in 0..n_steps {
                let t_mid = (k as f64 + 0.5) * dt;
                x = newton_midpoint_step(*field, &id, &x, t_mid, dt, cfg, k)?;
                finish_step(k + 1, n_steps, dt, &x, cfg, &mut traj, &mut on_step)?;
            }
        }
    }
    Ok(traj)
}

fn finish_step(
    step: usize,
    n_steps: usize,
    dt: f64,
    x: &DVector<f64>,
    cfg: &SimConfig,
    traj: &mut Trajectory,
    on_step: &mut impl FnMut(usize, f64, &DVector<f64>),
) -> Result<()> {
    let t = step as f64 * dt;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Integration {
            step,
            time: t,
            reason: "state left the finite range".into(),
        });
    }
    on_step(step, t, x);
    if step % cfg.record_stride == 0 || step == n_steps {
        traj.times.push(t);
        traj.states.push(x.clone());
    }
    Ok(())
}

/// One implicit midpoint step solved by a damped-free Newton iteration on
/// `g(w) = w - x - dt f((x + w)/2)`. Iterates to the floating-point floor
/// (the systems here are small), accepting earlier only when the update has
/// stagnated below `newton_tol` relative to the state scale.
fn newton_midpoint_step(
    field: &dyn NonlinearField,
    id: &DMatrix<f64>,
    x: &DVector<f64>,
    t_mid: f64,
    dt: f64,
    cfg: &SimConfig,
    step: usize,
) -> Result<DVector<f64>> {
    let wrap = |e: Error| match e {
        Error::Domain(msg) => Error::Integration {
            step,
            time: t_mid,
            reason: format!("{msg}; state snapshot {:?}", truncate_state(x)),
        },
        other => other,
    };

    // explicit Euler predictor
    let f0 = field.deriv(t_mid, x).map_err(wrap)?;
    let mut w = x + dt * &f0;
    let mut prev_update = f64::INFINITY;
    for _ in 0..cfg.newton_max_iter {
        let mid = 0.5 * (x + &w);
        let f = field.deriv(t_mid, &mid).map_err(wrap)?;
        let residual = &w - x - dt * &f;
        let jac = field.jacobian(t_mid, &mid).map_err(wrap)?;
        let step_matrix = id - (0.5 * dt) * jac;
        let delta = step_matrix
            .lu()
            .solve(&(-&residual))
            .ok_or_else(|| Error::Integration {
                step,
                time: t_mid,
                reason: "Newton step matrix singular".into(),
            })?;
        w += &delta;
        let scale = w.amax().max(x.amax()).max(1e-300);
        let update = delta.amax();
        if update <= 4.0 * f64::EPSILON * scale {
            return Ok(w);
        }
        // stagnated at an acceptable relative level
        if update <= cfg.newton_tol * scale && update > 0.45 * prev_update {
            return Ok(w);
        }
        prev_update = update;
    }
    Err(Error::Integration {
        step,
        time: t_mid,
        reason: format!("Newton did not converge in {} iterations", cfg.newton_max_iter),
    })
}

fn truncate_state(x: &DVector<f64>) -> Vec<f64> {
    x.iter().copied().take(6).collect()
}

/// Plant driven by a constant input, viewed as an autonomous field.
pub struct ConstantInputField<'a> {
    pub plant: &'a dyn super::NonlinearPlant,
    pub u: DVector<f64>,
}

impl NonlinearField for ConstantInputField<'_> {
    fn dim(&self) -> usize {
        self.plant.n()
    }

    fn deriv(&self, _t: f64, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.plant.deriv(x, &self.u)
    }

    fn jacobian(&self, _t: f64, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        self.plant.jac_x(x, &self.u)
    }
}

/// Ratio `|x_T(dt) - x_T(dt/2)| / |x_T(dt/2) - x_T(dt/4)|` of terminal-state
/// differences; close to 4 for a second-order stepper.
pub fn step_halving_ratio(dynamics: &Dynamics, x0: &DVector<f64>, dt: f64, t_end: f64) -> Result<f64> {
    let mut terminals = Vec::new();
    for div in [1.0, 2.0, 4.0] {
        let cfg = SimConfig::new(dt / div, t_end).with_stride(usize::MAX);
        let traj = integrate(dynamics, x0, &cfg)?;
        terminals.push(traj.last_state().clone());
    }
    let coarse = (&terminals[0] - &terminals[1]).norm();
    let fine = (&terminals[1] - &terminals[2]).norm();
    if fine == 0.0 {
        return Err(Error::InvalidArgument(
            "step-halving differences vanished; horizon too short or dynamics trivial".into(),
        ));
    }
    Ok(coarse / fine)
}

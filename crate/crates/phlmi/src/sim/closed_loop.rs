//! Power-preserving interconnection of a plant with the observer-based
//! controller: `u = r - y_c`, `u_c = y`, with optional operating-point
//! offsets for plants controlled about an equilibrium.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::models::mems::MemsParams;
use crate::synthesis::ControllerRealization;
use crate::system::LinearPhSystem;

use super::integrate::{integrate_with, Dynamics, NonlinearField};
use super::SimConfig;

/// Plant with possibly nonlinear dynamics, exposing what the coupled
/// integrator needs: derivatives, output, their Jacobians, and the stored
/// energy.
pub trait NonlinearPlant {
    fn n(&self) -> usize;
    fn m(&self) -> usize;
    fn deriv(&self, x: &DVector<f64>, u: &DVector<f64>) -> Result<DVector<f64>>;
    fn output(&self, x: &DVector<f64>) -> Result<DVector<f64>>;
    fn jac_x(&self, x: &DVector<f64>, u: &DVector<f64>) -> Result<DMatrix<f64>>;
    /// df/du, constant for input-affine plants.
    fn input_map(&self, x: &DVector<f64>) -> DMatrix<f64>;
    fn output_jac(&self, x: &DVector<f64>) -> Result<DMatrix<f64>>;
    fn hamiltonian(&self, x: &DVector<f64>) -> Result<f64>;
}

impl NonlinearPlant for MemsParams {
    fn n(&self) -> usize {
        3
    }

    fn m(&self) -> usize {
        1
    }

    fn deriv(&self, x: &DVector<f64>, u: &DVector<f64>) -> Result<DVector<f64>> {
        MemsParams::dynamics(self, x, u[0])
    }

    fn output(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(DVector::from_element(1, MemsParams::output(self, x)?))
    }

    fn jac_x(&self, x: &DVector<f64>, _u: &DVector<f64>) -> Result<DMatrix<f64>> {
        self.dynamics_jacobian(x)
    }

    fn input_map(&self, _x: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::from_column_slice(3, 1, self.input_map().as_slice())
    }

    fn output_jac(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        // y = (1/r) dH/dQ, so the Jacobian is the last Hessian row over r
        let hess = self.hess_h(x)?;
        Ok(DMatrix::from_row_slice(1, 3, &[
            hess[(2, 0)] / self.r,
            hess[(2, 1)] / self.r,
            hess[(2, 2)] / self.r,
        ]))
    }

    fn hamiltonian(&self, x: &DVector<f64>) -> Result<f64> {
        MemsParams::hamiltonian(self, x)
    }
}

/// Operating-point offsets for deviation-variable control of a nonlinear
/// plant: the physical input is `u = u* + r - y_c` and the controller sees
/// `u_c = y - y*`; the controller state estimates `x - x*`.
#[derive(Debug, Clone)]
pub struct Offsets {
    pub x_star: DVector<f64>,
    pub u_star: DVector<f64>,
    pub y_star: DVector<f64>,
}

/// Time series of a closed-loop run; every series shares the (strided)
/// recording grid.
#[derive(Debug, Clone)]
pub struct ClosedLoopTrace {
    pub times: Vec<f64>,
    pub plant_states: Vec<DVector<f64>>,
    pub controller_states: Vec<DVector<f64>>,
    pub u: Vec<DVector<f64>>,
    pub y: Vec<DVector<f64>>,
    pub u_c: Vec<DVector<f64>>,
    pub y_c: Vec<DVector<f64>>,
    pub y_r: Vec<DVector<f64>>,
    pub r: Vec<DVector<f64>>,
    pub h_plant: Vec<f64>,
    pub h_ctrl: Vec<f64>,
    /// `|x - xh|` when plant and controller share the state space (after
    /// offset removal), otherwise the output-space error `|y - C xh|`
    /// against the design-model output map.
    pub est_err: Vec<f64>,
}

impl ClosedLoopTrace {
    fn with_capacity(cap: usize) -> Self {
        ClosedLoopTrace {
            times: Vec::with_capacity(cap),
            plant_states: Vec::with_capacity(cap),
            controller_states: Vec::with_capacity(cap),
            u: Vec::with_capacity(cap),
            y: Vec::with_capacity(cap),
            u_c: Vec::with_capacity(cap),
            y_c: Vec::with_capacity(cap),
            y_r: Vec::with_capacity(cap),
            r: Vec::with_capacity(cap),
            h_plant: Vec::with_capacity(cap),
            h_ctrl: Vec::with_capacity(cap),
            est_err: Vec::with_capacity(cap),
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    fn assert_uniform(&self) {
        let n = self.times.len();
        debug_assert!(
            [
                self.plant_states.len(),
                self.controller_states.len(),
                self.u.len(),
                self.y.len(),
                self.u_c.len(),
                self.y_c.len(),
                self.y_r.len(),
                self.r.len(),
                self.h_plant.len(),
                self.h_ctrl.len(),
                self.est_err.len(),
            ]
            .iter()
            .all(|&l| l == n)
        );
    }
}

/// Closed loop of a linear pH plant with the controller. The plant may be a
/// finer discretization than the controller's design model; the two then
/// couple only through the `m` port signals, and `design_c` (the design
/// model's output map) defines the output-space estimation error.
pub fn simulate_closed_loop_linear(
    plant: &LinearPhSystem,
    ctrl: &ControllerRealization,
    design_c: Option<&DMatrix<f64>>,
    reference: Option<&dyn Fn(f64) -> DVector<f64>>,
    x0: &DVector<f64>,
    xhat0: &DVector<f64>,
    cfg: &SimConfig,
) -> Result<ClosedLoopTrace> {
    let (trace, abort) = simulate_closed_loop_linear_partial(plant, ctrl, design_c, reference, x0, xhat0, cfg)?;
    match abort {
        None => Ok(trace),
        Some(e) => Err(e),
    }
}

/// As [`simulate_closed_loop_linear`], but an integration abort returns the
/// partial trace together with the abort error instead of discarding it.
pub fn simulate_closed_loop_linear_partial(
    plant: &LinearPhSystem,
    ctrl: &ControllerRealization,
    design_c: Option<&DMatrix<f64>>,
    reference: Option<&dyn Fn(f64) -> DVector<f64>>,
    x0: &DVector<f64>,
    xhat0: &DVector<f64>,
    cfg: &SimConfig,
) -> Result<(ClosedLoopTrace, Option<Error>)> {
    let n_p = plant.n();
    let n_c = ctrl.n();
    let m = plant.m();
    if ctrl.m() != m {
        return Err(Error::dimension("interconnection ports", format!("{m}"), format!("{}", ctrl.m())));
    }
    if x0.len() != n_p || xhat0.len() != n_c {
        return Err(Error::dimension(
            "closed-loop initial state",
            format!("x0 {n_p}, xhat0 {n_c}"),
            format!("x0 {}, xhat0 {}", x0.len(), xhat0.len()),
        ));
    }
    if n_p != n_c && design_c.is_none() {
        return Err(Error::InvalidArgument(
            "mismatched plant/controller dimensions need the design-model output map for the error signal".into(),
        ));
    }

    let a_p = plant.a();
    let c_p = plant.c();
    let b_p = plant.b();
    let a_c = ctrl.a_c();

    // joint drift [[A, -B K], [B_c C, A_c]]
    let n = n_p + n_c;
    let mut a_cl = DMatrix::<f64>::zeros(n, n);
    a_cl.view_mut((0, 0), (n_p, n_p)).copy_from(&a_p);
    a_cl.view_mut((0, n_p), (n_p, n_c)).copy_from(&(-b_p * &ctrl.k));
    a_cl.view_mut((n_p, 0), (n_c, n_p)).copy_from(&(&ctrl.b_c * &c_p));
    a_cl.view_mut((n_p, n_p), (n_c, n_c)).copy_from(&a_c);

    let forcing_fn;
    let forcing: Option<&dyn Fn(f64) -> DVector<f64>> = match reference {
        Some(r) => {
            let b_p = b_p.clone();
            let b_r = ctrl.b_r.clone();
            forcing_fn = move |t: f64| {
                let rv = r(t);
                let mut f = DVector::zeros(n);
                f.rows_mut(0, n_p).copy_from(&(&b_p * &rv));
                f.rows_mut(n_p, n_c).copy_from(&(&b_r * &rv));
                f
            };
            Some(&forcing_fn)
        }
        None => None,
    };

    let mut w0 = DVector::zeros(n);
    w0.rows_mut(0, n_p).copy_from(x0);
    w0.rows_mut(n_p, n_c).copy_from(xhat0);

    let cap = cfg.n_steps() / cfg.record_stride + 2;
    let mut trace = ClosedLoopTrace::with_capacity(cap);
    let n_steps = cfg.n_steps();
    {
        let record = |k: usize, t: f64, w: &DVector<f64>| {
            if k % cfg.record_stride != 0 && k != n_steps {
                return;
            }
            let x = w.rows(0, n_p).into_owned();
            let xh = w.rows(n_p, n_c).into_owned();
            let rv = reference.map(|r| r(t)).unwrap_or_else(|| DVector::zeros(m));
            let y = &c_p * &x;
            let y_c = &ctrl.k * &xh;
            let u = &rv - &y_c;
            let y_r = ctrl.y_r(&xh);
            let err = if n_p == n_c {
                (&x - &xh).norm()
            } else {
                (&y - design_c.unwrap() * &xh).norm()
            };
            trace.times.push(t);
            trace.h_plant.push(plant.hamiltonian(&x));
            trace.h_ctrl.push(ctrl.hamiltonian(&xh));
            trace.u.push(u);
            trace.u_c.push(y.clone());
            trace.y.push(y);
            trace.y_c.push(y_c);
            trace.y_r.push(y_r);
            trace.r.push(rv);
            trace.est_err.push(err);
            trace.plant_states.push(x);
            trace.controller_states.push(xh);
        };
        let outcome = integrate_with(&Dynamics::Linear { a: &a_cl, forcing }, &w0, cfg, record);
        if let Err(e) = outcome {
            if matches!(e, Error::Integration { .. }) {
                trace.assert_uniform();
                return Ok((trace, Some(e)));
            }
            return Err(e);
        }
    }
    trace.assert_uniform();
    Ok((trace, None))
}

/// Coupled plant + controller field for the nonlinear case.
struct CoupledField<'a> {
    plant: &'a dyn NonlinearPlant,
    ctrl: &'a ControllerRealization,
    a_c: DMatrix<f64>,
    reference: Option<&'a dyn Fn(f64) -> DVector<f64>>,
    offsets: Offsets,
}

impl<'a> CoupledField<'a> {
    fn split(&self, w: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        let n_p = self.plant.n();
        (w.rows(0, n_p).into_owned(), w.rows(n_p, self.ctrl.n()).into_owned())
    }

    fn reference_at(&self, t: f64) -> DVector<f64> {
        self.reference
            .map(|r| r(t))
            .unwrap_or_else(|| DVector::zeros(self.plant.m()))
    }

    /// Port signals `(u, y, u_c, y_c, y_r)` at a state.
    fn signals(
        &self,
        t: f64,
        x: &DVector<f64>,
        xh: &DVector<f64>,
    ) -> Result<(DVector<f64>, DVector<f64>, DVector<f64>, DVector<f64>, DVector<f64>)> {
        let rv = self.reference_at(t);
        let y = self.plant.output(x)?;
        let y_c = &self.ctrl.k * xh;
        let u = &self.offsets.u_star + &rv - &y_c;
        let u_c = &y - &self.offsets.y_star;
        let y_r = self.ctrl.y_r(xh);
        Ok((u, y, u_c, y_c, y_r))
    }
}

impl NonlinearField for CoupledField<'_> {
    fn dim(&self) -> usize {
        self.plant.n() + self.ctrl.n()
    }

    fn deriv(&self, t: f64, w: &DVector<f64>) -> Result<DVector<f64>> {
        let (x, xh) = self.split(w);
        let rv = self.reference_at(t);
        let (u, _y, u_c, _yc, _yr) = self.signals(t, &x, &xh)?;
        let dx = self.plant.deriv(&x, &u)?;
        let dxh = &self.a_c * &xh + &self.ctrl.b_c * &u_c + &self.ctrl.b_r * &rv;
        let mut dw = DVector::zeros(self.dim());
        dw.rows_mut(0, self.plant.n()).copy_from(&dx);
        dw.rows_mut(self.plant.n(), self.ctrl.n()).copy_from(&dxh);
        Ok(dw)
    }

    fn jacobian(&self, t: f64, w: &DVector<f64>) -> Result<DMatrix<f64>> {
        let (x, xh) = self.split(w);
        let (u, _, _, _, _) = self.signals(t, &x, &xh)?;
        let n_p = self.plant.n();
        let n_c = self.ctrl.n();
        let mut j = DMatrix::zeros(n_p + n_c, n_p + n_c);
        j.view_mut((0, 0), (n_p, n_p)).copy_from(&self.plant.jac_x(&x, &u)?);
        j.view_mut((0, n_p), (n_p, n_c))
            .copy_from(&(-self.plant.input_map(&x) * &self.ctrl.k));
        j.view_mut((n_p, 0), (n_c, n_p))
            .copy_from(&(&self.ctrl.b_c * self.plant.output_jac(&x)?));
        j.view_mut((n_p, n_p), (n_c, n_c)).copy_from(&self.a_c);
        Ok(j)
    }
}

/// Closed loop of a nonlinear plant with the (linear pH) controller. With
/// `offsets` the controller regulates deviations from the operating point.
pub fn simulate_closed_loop_nonlinear(
    plant: &dyn NonlinearPlant,
    ctrl: &ControllerRealization,
    reference: Option<&dyn Fn(f64) -> DVector<f64>>,
    x0: &DVector<f64>,
    xhat0: &DVector<f64>,
    cfg: &SimConfig,
    offsets: Option<Offsets>,
) -> Result<ClosedLoopTrace> {
    let (trace, abort) =
        simulate_closed_loop_nonlinear_partial(plant, ctrl, reference, x0, xhat0, cfg, offsets)?;
    match abort {
        None => Ok(trace),
        Some(e) => Err(e),
    }
}

/// As [`simulate_closed_loop_nonlinear`], but an integration abort returns
/// the partial trace alongside the abort error.
pub fn simulate_closed_loop_nonlinear_partial(
    plant: &dyn NonlinearPlant,
    ctrl: &ControllerRealization,
    reference: Option<&dyn Fn(f64) -> DVector<f64>>,
    x0: &DVector<f64>,
    xhat0: &DVector<f64>,
    cfg: &SimConfig,
    offsets: Option<Offsets>,
) -> Result<(ClosedLoopTrace, Option<Error>)> {
    let n_p = plant.n();
    let n_c = ctrl.n();
    let m = plant.m();
    if ctrl.m() != m {
        return Err(Error::dimension("interconnection ports", format!("{m}"), format!("{}", ctrl.m())));
    }
    if n_p != n_c {
        return Err(Error::InvalidArgument(
            "nonlinear closed loop expects the controller to share the plant state dimension".into(),
        ));
    }
    let offsets = match offsets {
        Some(o) => {
            if o.x_star.len() != n_p || o.u_star.len() != m || o.y_star.len() != m {
                return Err(Error::InvalidArgument("offset dimensions do not match the plant".into()));
            }
            o
        }
        None => Offsets {
            x_star: DVector::zeros(n_p),
            u_star: DVector::zeros(m),
            y_star: DVector::zeros(m),
        },
    };

    let field = CoupledField {
        plant,
        ctrl,
        a_c: ctrl.a_c(),
        reference,
        offsets,
    };

    let mut w0 = DVector::zeros(n_p + n_c);
    w0.rows_mut(0, n_p).copy_from(x0);
    w0.rows_mut(n_p, n_c).copy_from(xhat0);

    let n_steps = cfg.n_steps();
    let cap = n_steps / cfg.record_stride + 2;
    let mut trace = ClosedLoopTrace::with_capacity(cap);
    let mut record_err: Option<Error> = None;
    {
        let record = |k: usize, t: f64, w: &DVector<f64>| {
            if record_err.is_some() || (k % cfg.record_stride != 0 && k != n_steps) {
                return;
            }
            let (x, xh) = field.split(w);
            match field.signals(t, &x, &xh) {
                Ok((u, y, u_c, y_c, y_r)) => {
                    trace.times.push(t);
                    trace.h_plant.push(field.plant.hamiltonian(&x).unwrap_or(f64::NAN));
                    trace.h_ctrl.push(ctrl.hamiltonian(&xh));
                    trace.est_err.push(((&x - &field.offsets.x_star) - &xh).norm());
                    trace.r.push(field.reference_at(t));
                    trace.u.push(u);
                    trace.y.push(y);
                    trace.u_c.push(u_c);
                    trace.y_c.push(y_c);
                    trace.y_r.push(y_r);
                    trace.plant_states.push(x);
                    trace.controller_states.push(xh);
                }
                Err(e) => record_err = Some(e),
            }
        };
        let outcome = integrate_with(&Dynamics::Nonlinear(&field), &w0, cfg, record);
        if let Err(e) = outcome {
            if matches!(e, Error::Integration { .. }) {
                trace.assert_uniform();
                return Ok((trace, Some(e)));
            }
            return Err(e);
        }
    }
    if let Some(e) = record_err {
        return Err(e);
    }
    trace.assert_uniform();
    Ok((trace, None))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::beam::{beam_initial_state, build_timoshenko, BeamParams};
    use crate::models::mems::MemsParams;
    use crate::synthesis::{
        controller_synthesis, observer_gain, DesignBoundsCtrl, DesignBoundsIda, LmiOptions,
    };
    use crate::system::{plant_abc, Tolerances};
    use approx::assert_relative_eq;

    fn double_integrator_controller() -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>, ControllerRealization) {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        let b = DMatrix::from_column_slice(2, 1, &[0.0, 1.0]);
        let c = DMatrix::from_row_slice(1, 2, &[1.0, 0.0]);
        let tol = Tolerances::default();
        let obs = observer_gain(
            &a,
            &c,
            &DesignBoundsIda::scalar(2, 1, 1e-2, 1e4, 0.1, 1e4, 1.0),
            &tol,
            &LmiOptions::default(),
        )
        .unwrap();
        let ctrl = controller_synthesis(
            &a,
            &b,
            &c,
            &obs.l,
            &DesignBoundsCtrl::scalar(2, 1e-6, 1e8, 1e-2, 1e8),
            &tol,
            &LmiOptions::default(),
        )
        .unwrap();
        (a, b, c, ctrl)
    }

    #[test]
    fn zero_everything_stays_zero() {
        let (_, _, _, ctrl) = double_integrator_controller();
        let j = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        let plant = crate::system::LinearPhSystem::validated(
            j,
            DMatrix::zeros(2, 2),
            DMatrix::identity(2, 2),
            DMatrix::from_column_slice(2, 1, &[0.0, 1.0]),
            &Tolerances::default(),
        )
        .unwrap();
        let cfg = SimConfig::new(0.01, 1.0);
        let trace = simulate_closed_loop_linear(
            &plant,
            &ctrl,
            None,
            None,
            &DVector::zeros(2),
            &DVector::zeros(2),
            &cfg,
        )
        .unwrap();
        for k in 0..trace.len() {
            assert_eq!(trace.plant_states[k].amax(), 0.0);
            assert_eq!(trace.controller_states[k].amax(), 0.0);
            assert_eq!(trace.u[k].amax(), 0.0);
        }
    }

    #[test]
    fn interconnection_power_identity() {
        // u' y at the plant port equals (r - y_c)' u_c at the controller port
        let sys = build_timoshenko(3, &BeamParams::default()).unwrap();
        let (a, c) = plant_abc(&sys);
        let b = sys.b().clone();
        let tol = Tolerances::default();
        let obs = observer_gain(
            &a,
            &c,
            &DesignBoundsIda::scalar(12, 8, 0.1, 5000.0, 1.0, 1000.0, 10.0),
            &tol,
            &LmiOptions::default(),
        )
        .unwrap();
        let ctrl = controller_synthesis(
            &a,
            &b,
            &c,
            &obs.l,
            &DesignBoundsCtrl::scalar(12, 1e-15, 1e15, 1e-2, 1e15),
            &tol,
            &LmiOptions::default(),
        )
        .unwrap();
        let x0 = beam_initial_state(3, &BeamParams::default(), 0.01).unwrap();
        let cfg = SimConfig::new(1e-3, 0.5);
        let trace = simulate_closed_loop_linear(&sys, &ctrl, None, None, &x0, &DVector::zeros(12), &cfg).unwrap();
        for k in 0..trace.len() {
            let lhs = trace.u[k].dot(&trace.y[k]);
            let rhs = (&trace.r[k] - &trace.y_c[k]).dot(&trace.u_c[k]);
            assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0), "step {k}");
        }
        // Lyapunov decrease of the total energy for the conservative plant
        let mut prev = trace.h_plant[0] + trace.h_ctrl[0];
        for k in 1..trace.len() {
            let tot = trace.h_plant[k] + trace.h_ctrl[k];
            assert!(tot <= prev * (1.0 + 1e-9) + 1e-12, "energy grew at step {k}: {tot} > {prev}");
            prev = tot;
        }
    }

    #[test]
    fn observer_exactness_when_model_matches() {
        let (a, _b, _c, ctrl) = double_integrator_controller();
        // plant exactly the design model, same initial state
        let j = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        // the double integrator is not skew; embed via direct linear sim of
        // the joint system instead: use the pH beam for the matched test
        let _ = (a, j);
        let sys = build_timoshenko(2, &BeamParams::default()).unwrap();
        let (a8, c8) = plant_abc(&sys);
        let tol = Tolerances::default();
        let obs = observer_gain(
            &a8,
            &c8,
            &DesignBoundsIda::scalar(8, 4, 0.1, 5000.0, 1.0, 1000.0, 10.0),
            &tol,
            &LmiOptions::default(),
        )
        .unwrap();
        let ctrl8 = controller_synthesis(
            &a8,
            sys.b(),
            &c8,
            &obs.l,
            &DesignBoundsCtrl::scalar(8, 1e-15, 1e15, 1e-2, 1e15),
            &tol,
            &LmiOptions::default(),
        )
        .unwrap();
        let x0 = beam_initial_state(2, &BeamParams::default(), 0.01).unwrap();
        let cfg = SimConfig::new(1e-3, 2.0);
        let trace = simulate_closed_loop_linear(&sys, &ctrl8, None, None, &x0, &x0, &cfg).unwrap();
        let max_err = trace.est_err.iter().copied().fold(0.0_f64, f64::max);
        assert!(max_err < 1e-10, "max estimation error {max_err}");
        drop(ctrl);
    }

    #[test]
    fn mems_energy_balance_under_midpoint() {
        // H' = -b (p/m)^2 - r y^2 + y u along trajectories; with midpoint
        // stepping and midpoint-reconstructed flows the discrete residual
        // stays below 1e-8 relative.
        let p = MemsParams::default();
        let eq = p.equilibrium(0.5e-6).unwrap();
        let x0 = DVector::from_column_slice(&[eq.q, 0.0, 0.9 * eq.charge]);
        let u = DVector::from_element(1, eq.u);
        let field = crate::sim::ConstantInputField { plant: &p, u: u.clone() };
        let cfg = SimConfig::new(1e-7, 2e-4);
        let traj = crate::sim::integrate(&Dynamics::Nonlinear(&field), &x0, &cfg).unwrap();

        let h0 = NonlinearPlant::hamiltonian(&p, &x0).unwrap();
        let mut h_scale: f64 = h0.abs();
        let mut flow_sum = 0.0;
        let mut max_residual: f64 = 0.0;
        for k in 1..traj.states.len() {
            let mid = 0.5 * (&traj.states[k - 1] + &traj.states[k]);
            let y = MemsParams::output(&p, &mid).unwrap();
            let flow = y * u[0] - p.b_damp * (mid[1] / p.m).powi(2) - p.r * y * y;
            flow_sum += cfg.dt * flow;
            let h = NonlinearPlant::hamiltonian(&p, &traj.states[k]).unwrap();
            h_scale = h_scale.max(h.abs());
            max_residual = max_residual.max((h - h0 - flow_sum).abs());
        }
        assert!(
            max_residual <= 1e-8 * h_scale,
            "residual {max_residual:.3e} vs scale {h_scale:.3e}"
        );
    }

    #[test]
    fn mems_osp_inequality_along_trajectory() {
        // H' <= y u - r y^2: output strict passivity of the plant.
        let p = MemsParams::default();
        let eq = p.equilibrium(0.5e-6).unwrap();
        let x0 = DVector::from_column_slice(&[eq.q, 0.0, 0.8 * eq.charge]);
        let u = DVector::from_element(1, 0.95 * eq.u);
        let field = crate::sim::ConstantInputField { plant: &p, u: u.clone() };
        let cfg = SimConfig::new(1e-7, 1e-4);
        let traj = crate::sim::integrate(&Dynamics::Nonlinear(&field), &x0, &cfg).unwrap();
        for k in 1..traj.states.len() {
            let mid = 0.5 * (&traj.states[k - 1] + &traj.states[k]);
            let y = MemsParams::output(&p, &mid).unwrap();
            let h_prev = NonlinearPlant::hamiltonian(&p, &traj.states[k - 1]).unwrap();
            let h_next = NonlinearPlant::hamiltonian(&p, &traj.states[k]).unwrap();
            let hdot = (h_next - h_prev) / cfg.dt;
            let supply = y * u[0] - p.r * y * y;
            assert!(hdot <= supply + 1e-8 * supply.abs().max(1e-12), "step {k}");
        }
    }

    #[test]
    fn mismatched_dimensions_need_design_output_map() {
        let (_, _, _, ctrl) = double_integrator_controller();
        let sys = build_timoshenko(3, &BeamParams::default()).unwrap();
        let err = simulate_closed_loop_linear(
            &sys,
            &ctrl,
            None,
            None,
            &DVector::zeros(12),
            &DVector::zeros(2),
            &SimConfig::new(0.01, 0.1),
        )
        .unwrap_err();
        assert!(err.to_string().contains("port"));
    }

    #[test]
    fn domain_abort_reports_step() {
        // drive the MEMS hard enough to slam the gap closed
        let p = MemsParams::default();
        let x0 = DVector::from_column_slice(&[0.99 * p.q_max, 0.0, 0.0]);
        let u = DVector::from_element(1, 500.0);
        let field = crate::sim::ConstantInputField { plant: &p, u };
        let cfg = SimConfig::new(1e-5, 1e-2);
        let err = crate::sim::integrate(&Dynamics::Nonlinear(&field), &x0, &cfg).unwrap_err();
        match err {
            Error::Integration { reason, .. } => {
                assert!(
                    reason.contains("singular") || reason.contains("q_max") || reason.contains("Newton"),
                    "reason: {reason}"
                );
            }
            other => panic!("expected integration abort, got {other}"),
        }
    }

    #[test]
    fn reference_feed_enters_both_subsystems() {
        let (_, _, _, ctrl) = double_integrator_controller();
        let sys = build_timoshenko(2, &BeamParams::default()).unwrap();
        let (a8, c8) = plant_abc(&sys);
        let tol = Tolerances::default();
        let obs = observer_gain(
            &a8,
            &c8,
            &DesignBoundsIda::scalar(8, 4, 0.1, 5000.0, 1.0, 1000.0, 10.0),
            &tol,
            &LmiOptions::default(),
        )
        .unwrap();
        let ctrl8 = controller_synthesis(
            &a8,
            sys.b(),
            &c8,
            &obs.l,
            &DesignBoundsCtrl::scalar(8, 1e-15, 1e15, 1e-2, 1e15),
            &tol,
            &LmiOptions::default(),
        )
        .unwrap();
        let rfun = |_t: f64| DVector::from_column_slice(&[0.0, 0.0, 1e-3, 0.0]);
        let cfg = SimConfig::new(1e-3, 0.2);
        let trace = simulate_closed_loop_linear(
            &sys,
            &ctrl8,
            None,
            Some(&rfun),
            &DVector::zeros(8),
            &DVector::zeros(8),
            &cfg,
        )
        .unwrap();
        assert!(trace.plant_states.last().unwrap().amax() > 0.0);
        assert_relative_eq!(trace.r.last().unwrap()[2], 1e-3);
        drop(ctrl);
    }
}

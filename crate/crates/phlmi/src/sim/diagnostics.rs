//! Quantitative summaries of simulation traces: settling, decay rates,
//! overshoot and energy bookkeeping.

use nalgebra::DVector;

use super::closed_loop::ClosedLoopTrace;

/// First time after which the signal stays within `band` (absolute
/// half-width) of `target` for the rest of the trace; `f64::INFINITY` when
/// the band is never held.
pub fn settling_time(times: &[f64], signal: &[f64], target: f64, band: f64) -> f64 {
    debug_assert_eq!(times.len(), signal.len());
    let mut settle_idx = None;
    for k in 0..signal.len() {
        if (signal[k] - target).abs() <= band {
            if settle_idx.is_none() {
                settle_idx = Some(k);
            }
        } else {
            settle_idx = None;
        }
    }
    match settle_idx {
        Some(k) => times[k],
        None => f64::INFINITY,
    }
}

/// Least-squares slope of `ln(err)` over the second half of the horizon.
/// Samples at or below the floating-point floor are skipped.
pub fn decay_rate(times: &[f64], err: &[f64]) -> f64 {
    debug_assert_eq!(times.len(), err.len());
    let t_half = times.last().copied().unwrap_or(0.0) * 0.5;
    let points: Vec<(f64, f64)> = times
        .iter()
        .zip(err)
        .filter(|(t, e)| **t >= t_half && **e > 1e-300)
        .map(|(t, e)| (*t, e.ln()))
        .collect();
    if points.len() < 2 {
        return f64::NAN;
    }
    let n = points.len() as f64;
    let sx: f64 = points.iter().map(|(t, _)| t).sum();
    let sy: f64 = points.iter().map(|(_, l)| l).sum();
    let sxx: f64 = points.iter().map(|(t, _)| t * t).sum();
    let sxy: f64 = points.iter().map(|(t, l)| t * l).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-300 {
        return f64::NAN;
    }
    (n * sxy - sx * sy) / denom
}

/// Peak deviation beyond the initial deviation from `target`, normalized by
/// the initial deviation (0 when the signal never exceeds its start).
pub fn max_overshoot(signal: &[f64], target: f64) -> f64 {
    if signal.is_empty() {
        return 0.0;
    }
    let initial = (signal[0] - target).abs().max(1e-300);
    let peak = signal.iter().map(|s| (s - target).abs()).fold(0.0_f64, f64::max);
    ((peak - initial) / initial).max(0.0)
}

/// Maximum over the trace of `|H(t_k) - H(0) - sum_j dt_j flow_j|`,
/// normalized by the peak energy magnitude. `flow_between(j)` is the energy
/// flow on the interval `(t_j, t_{j+1})`, best evaluated at midpoint-
/// reconstructed states when the recording stride is 1.
pub fn energy_balance_residual(times: &[f64], energy: &[f64], mut flow_between: impl FnMut(usize) -> f64) -> f64 {
    debug_assert_eq!(times.len(), energy.len());
    if energy.is_empty() {
        return 0.0;
    }
    let mut scale = energy[0].abs();
    let mut acc = 0.0;
    let mut worst = 0.0_f64;
    for k in 1..energy.len() {
        acc += (times[k] - times[k - 1]) * flow_between(k - 1);
        scale = scale.max(energy[k].abs());
        worst = worst.max((energy[k] - energy[0] - acc).abs());
    }
    worst / scale.max(1e-300)
}

/// Bundle of the standard trace diagnostics.
#[derive(Debug, Clone)]
pub struct TraceDiagnostics {
    pub settling_time: f64,
    pub error_decay_rate: f64,
    pub max_overshoot: f64,
    pub energy_balance_residual: Option<f64>,
}

/// Diagnostics of a closed-loop trace for one monitored scalar signal
/// (e.g. tip deflection or plate position) regulated toward `target`.
/// `balance_flow`, when given, carries one energy-flow sample per recorded
/// interval for the plant balance law.
pub fn diagnostics(
    trace: &ClosedLoopTrace,
    monitored: &[f64],
    target: f64,
    band: f64,
    balance_flow: Option<&[f64]>,
) -> TraceDiagnostics {
    let residual = balance_flow.map(|flows| {
        energy_balance_residual(&trace.times, &trace.h_plant, |j| flows[j])
    });
    TraceDiagnostics {
        settling_time: settling_time(&trace.times, monitored, target, band),
        error_decay_rate: decay_rate(&trace.times, &trace.est_err),
        max_overshoot: max_overshoot(monitored, target),
        energy_balance_residual: residual,
    }
}

/// Euclidean distance series of trace states to a fixed point; a common
/// monitored signal for regulation runs.
pub fn state_distance_series(states: &[DVector<f64>], point: &DVector<f64>) -> Vec<f64> {
    states.iter().map(|x| (x - point).norm()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn constant_trace_settles_immediately() {
        let times: Vec<f64> = (0..10).map(|k| k as f64).collect();
        let signal = vec![2.0; 10];
        assert_eq!(settling_time(&times, &signal, 2.0, 0.01), 0.0);
        assert_eq!(max_overshoot(&signal, 2.0), 0.0);
    }

    #[test]
    fn never_settling_yields_infinity() {
        let times: Vec<f64> = (0..100).map(|k| k as f64 * 0.1).collect();
        let signal: Vec<f64> = times.iter().map(|t| (5.0 * t).sin()).collect();
        assert_eq!(settling_time(&times, &signal, 0.0, 0.01), f64::INFINITY);
    }

    #[test]
    fn settling_uses_last_excursion() {
        let times = vec![0.0, 1.0, 2.0, 3.0, 4.0];
        let signal = vec![1.0, 0.005, 0.5, 0.004, 0.003];
        assert_relative_eq!(settling_time(&times, &signal, 0.0, 0.01), 3.0);
    }

    #[test]
    fn decay_rate_recovers_exponential() {
        let times: Vec<f64> = (0..=1000).map(|k| k as f64 * 0.01).collect();
        let err: Vec<f64> = times.iter().map(|t| (-2.0 * t).exp()).collect();
        let rate = decay_rate(&times, &err);
        assert!((rate + 2.0).abs() <= 0.01 * 2.0, "rate {rate}");
    }

    #[test]
    fn zero_flow_balance_on_constant_energy() {
        let times: Vec<f64> = (0..5).map(|k| k as f64).collect();
        let energy = vec![3.0; 5];
        assert_eq!(energy_balance_residual(&times, &energy, |_| 0.0), 0.0);
    }

    #[test]
    fn balance_detects_unaccounted_flow() {
        let times: Vec<f64> = (0..=10).map(|k| k as f64).collect();
        let energy: Vec<f64> = times.iter().map(|t| 1.0 + 0.1 * t).collect();
        let residual = energy_balance_residual(&times, &energy, |_| 0.0);
        assert_relative_eq!(residual, 1.0 / 2.0, epsilon = 1e-12);
    }

    #[test]
    fn bundle_on_synthetic_trace() {
        use nalgebra::DVector;
        let n = 400usize;
        let times: Vec<f64> = (0..n).map(|k| k as f64 * 0.01).collect();
        let decaying: Vec<f64> = times.iter().map(|t| (-2.0 * t).exp()).collect();
        let trace = crate::sim::ClosedLoopTrace {
            times: times.clone(),
            plant_states: vec![DVector::zeros(1); n],
            controller_states: vec![DVector::zeros(1); n],
            u: vec![DVector::zeros(1); n],
            y: vec![DVector::zeros(1); n],
            u_c: vec![DVector::zeros(1); n],
            y_c: vec![DVector::zeros(1); n],
            y_r: vec![DVector::zeros(1); n],
            r: vec![DVector::zeros(1); n],
            h_plant: vec![1.0; n],
            h_ctrl: vec![0.0; n],
            est_err: decaying.clone(),
        };
        let d = diagnostics(&trace, &decaying, 0.0, 0.02, Some(&vec![0.0; n - 1]));
        assert!((d.error_decay_rate + 2.0).abs() <= 0.02 * 2.0);
        assert!(d.settling_time.is_finite());
        assert_eq!(d.max_overshoot, 0.0);
        assert_eq!(d.energy_balance_residual, Some(0.0));
    }
}

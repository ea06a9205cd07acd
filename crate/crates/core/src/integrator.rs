//! Adaptive explicit Runge–Kutta integration with the Dormand–Prince 5(4)
//! embedded pair.
//!
//! The stepper is generic over the state dimension, so the same code
//! integrates the 12-compartment model, scalar verification problems, and
//! any auxiliary system a caller supplies. Three entry points cover the
//! crate's needs:
//!
//! * [`integrate_adaptive`] — record every accepted step from `t0` to `t1`;
//! * [`integrate_at`] — record exactly at caller-supplied sample times
//!   (the step size is clipped so each sample time is hit exactly —
//!   step-to-boundary rather than interpolation);
//! * [`integrate_fixed`] — fixed-step operation with no error control, used
//!   for convergence-order verification.
//!
//! Step control is the classical PI controller: on acceptance the step
//! scales by `0.9·err^(-0.7/5)·err_prev^(0.4/5)` clamped to `[0.2, 10]`; on
//! rejection by `0.9·err^(-1/5)` clamped to `[0.2, 1]`. The error norm is
//! the RMS of componentwise errors scaled by `atol + rtol·max(|y|, |y_new|)`.
//! The first-same-as-last property of the pair saves one derivative
//! evaluation per accepted step.

use nalgebra::SVector;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tolerances::{
    DEFAULT_ATOL, DEFAULT_H_INIT, DEFAULT_MAX_STEPS, DEFAULT_RTOL,
    STEP_FACTOR_MAX, STEP_FACTOR_MIN, STEP_SAFETY,
};

// Dormand–Prince 5(4) tableau. Node fractions c2..c6; the seventh stage is
// evaluated at t+h on the fifth-order solution (FSAL).
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
// Fifth-order weights (b2 = 0).
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// Error weights: fifth-order minus embedded fourth-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Errors the integrator can return. Precondition violations (reversed time
/// span, non-increasing sample times, invalid config) are programming errors
/// and panic instead.
#[derive(Debug, Error, PartialEq)]
pub enum IntegratorError {
    /// The step-attempt budget was exhausted before reaching the end time.
    /// `t` is how far integration got.
    #[error("step budget exhausted at t = {t}")]
    StepBudgetExceeded { t: f64 },
    /// A step produced a non-finite component (overflow or NaN), typically
    /// from integrating outside the model's valid region.
    #[error("state became non-finite during the step starting at t = {t}")]
    NonFiniteState { t: f64 },
}

/// Tolerances and budgets for one integration run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorConfig {
    /// Relative error tolerance (> 0).
    pub rtol: f64,
    /// Absolute error tolerance (> 0).
    pub atol: f64,
    /// Initial step size in years (> 0).
    pub h_init: f64,
    /// Maximum step size in years; additionally capped at the current
    /// distance to the next mandatory output time.
    pub h_max: f64,
    /// Budget of step *attempts* (accepted and rejected both count).
    pub max_steps: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            rtol: DEFAULT_RTOL,
            atol: DEFAULT_ATOL,
            h_init: DEFAULT_H_INIT,
            h_max: f64::INFINITY,
            max_steps: DEFAULT_MAX_STEPS,
        }
    }
}

impl IntegratorConfig {
    /// Panics if any invariant fails: `rtol, atol > 0`,
    /// `0 < h_init <= h_max`, `max_steps >= 1`.
    fn assert_valid(&self) {
        assert!(self.rtol > 0.0, "rtol must be > 0 (got {})", self.rtol);
        assert!(self.atol > 0.0, "atol must be > 0 (got {})", self.atol);
        assert!(
            self.h_init > 0.0 && self.h_init <= self.h_max,
            "h_init must satisfy 0 < h_init <= h_max (got h_init={}, h_max={})",
            self.h_init,
            self.h_max
        );
        assert!(self.max_steps >= 1, "max_steps must be >= 1");
    }
}

/// A time-stamped solution: `times` strictly increasing, one state per time,
/// and `states[0]` equal to the supplied initial condition bit-for-bit.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<const N: usize = 12> {
    pub times: Vec<f64>,
    pub states: Vec<SVector<f64, N>>,
}

impl<const N: usize> Trajectory<N> {
    /// Number of recorded samples.
    pub fn len(&self) -> usize {
        self.times.len()
    }

    /// True when no samples are recorded (never the case for integrator
    /// output, which always includes the initial condition).
    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// The last recorded time.
    pub fn last_time(&self) -> f64 {
        *self.times.last().expect("trajectory is never empty")
    }

    /// The last recorded state.
    pub fn last_state(&self) -> &SVector<f64, N> {
        self.states.last().expect("trajectory is never empty")
    }
}

/// One Runge–Kutta step attempt from `(t, y)` with step `h`, reusing the
/// derivative `k1 = f(t, y)`. Returns the fifth-order solution, the
/// derivative at the new point (the next step's `k1` if accepted), and the
/// scaled RMS error norm (acceptance means `err <= 1`).
fn attempt_step<const N: usize, F>(
    f: &F,
    t: f64,
    y: &SVector<f64, N>,
    h: f64,
    k1: &SVector<f64, N>,
    rtol: f64,
    atol: f64,
) -> (SVector<f64, N>, SVector<f64, N>, f64)
where
    F: Fn(f64, &SVector<f64, N>) -> SVector<f64, N>,
{
    let k2 = f(t + C2 * h, &(y + k1 * (A21 * h)));
    let k3 = f(t + C3 * h, &(y + (k1 * A31 + k2 * A32) * h));
    let k4 = f(t + C4 * h, &(y + (k1 * A41 + k2 * A42 + k3 * A43) * h));
    let k5 = f(
        t + C5 * h,
        &(y + (k1 * A51 + k2 * A52 + k3 * A53 + k4 * A54) * h),
    );
    let k6 = f(
        t + h,
        &(y + (k1 * A61 + k2 * A62 + k3 * A63 + k4 * A64 + k5 * A65) * h),
    );
    let y5 = y + (k1 * B1 + k3 * B3 + k4 * B4 + k5 * B5 + k6 * B6) * h;
    let k7 = f(t + h, &y5);
    let e = (k1 * E1 + k3 * E3 + k4 * E4 + k5 * E5 + k6 * E6 + k7 * E7) * h;

    let mut acc = 0.0;
    for i in 0..N {
        let scale = atol + rtol * y[i].abs().max(y5[i].abs());
        let r = e[i] / scale;
        acc += r * r;
    }
    let err = (acc / N as f64).sqrt();
    (y5, k7, err)
}

/// Shared engine: integrates across the strictly increasing `checkpoints`
/// (the first entry is the initial time), hitting each checkpoint exactly by
/// clipping the step. With `record_all` every accepted step is recorded;
/// otherwise only the checkpoints are.
fn integrate_engine<const N: usize, F>(
    f: &F,
    y0: &SVector<f64, N>,
    checkpoints: &[f64],
    record_all: bool,
    cfg: &IntegratorConfig,
) -> Result<Trajectory<N>, IntegratorError>
where
    F: Fn(f64, &SVector<f64, N>) -> SVector<f64, N>,
{
    let t0 = checkpoints[0];
    let t_end = *checkpoints.last().unwrap();
    let mut traj = Trajectory {
        times: vec![t0],
        states: vec![*y0],
    };
    if checkpoints.len() == 1 {
        return Ok(traj);
    }

    let h_cap = cfg.h_max.min(t_end - t0);
    let mut t = t0;
    let mut y = *y0;
    let mut k1 = f(t, &y);
    let mut h = cfg.h_init.min(h_cap);
    // PI controller memory; 1.0 is neutral (no history yet).
    let mut err_prev: f64 = 1.0;
    let mut attempts: usize = 0;
    let mut next_idx = 1;

    while next_idx < checkpoints.len() {
        let t_next = checkpoints[next_idx];
        let to_boundary = t_next - t;
        let h_try = h.min(h_cap).min(to_boundary);
        let hits_boundary = h_try >= to_boundary;

        if attempts >= cfg.max_steps {
            return Err(IntegratorError::StepBudgetExceeded { t });
        }
        attempts += 1;

        let (y5, k7, err) = attempt_step(f, t, &y, h_try, &k1, cfg.rtol, cfg.atol);
        if !err.is_finite() || y5.iter().any(|v| !v.is_finite()) {
            return Err(IntegratorError::NonFiniteState { t });
        }

        if err <= 1.0 {
            // Accept. Land on the checkpoint exactly rather than
            // accumulating t += h rounding.
            if hits_boundary {
                t = t_next;
                next_idx += 1;
            } else {
                t += h_try;
            }
            y = y5;
            k1 = k7; // first-same-as-last
            if record_all || hits_boundary {
                traj.times.push(t);
                traj.states.push(y);
            }
            let factor = if err == 0.0 {
                STEP_FACTOR_MAX
            } else {
                (STEP_SAFETY * err.powf(-0.7 / 5.0) * err_prev.powf(0.4 / 5.0))
                    .clamp(STEP_FACTOR_MIN, STEP_FACTOR_MAX)
            };
            h = (h_try * factor).min(h_cap);
            // Floor the stored error so one very clean step cannot zero the
            // controller memory.
            err_prev = err.max(1e-4);
        } else {
            h = h_try * (STEP_SAFETY * err.powf(-0.2)).clamp(STEP_FACTOR_MIN, 1.0);
        }
    }
    Ok(traj)
}

/// Integrates `y' = f(t, y)` from `t0` to `t1`, recording every accepted
/// step. The output starts at `t0` with `y0` and ends exactly at `t1`.
///
/// # Panics
///
/// Panics if `t1 <= t0` or `cfg` violates its invariants.
///
/// # Errors
///
/// [`IntegratorError::StepBudgetExceeded`] if `cfg.max_steps` attempts did
/// not reach `t1`; [`IntegratorError::NonFiniteState`] if the state leaves
/// the finite floating-point range.
pub fn integrate_adaptive<const N: usize, F>(
    f: F,
    y0: &SVector<f64, N>,
    t0: f64,
    t1: f64,
    cfg: &IntegratorConfig,
) -> Result<Trajectory<N>, IntegratorError>
where
    F: Fn(f64, &SVector<f64, N>) -> SVector<f64, N>,
{
    assert!(t1 > t0, "integrate_adaptive requires t1 > t0");
    cfg.assert_valid();
    integrate_engine(&f, y0, &[t0, t1], true, cfg)
}

/// Integrates `y' = f(t, y)` and records the solution exactly at
/// `sample_times` (the first entry is the initial time). Accuracy matches
/// [`integrate_adaptive`]: sample times are reached by clipping the adaptive
/// step, not by interpolating.
///
/// # Panics
///
/// Panics if `sample_times` is empty or not strictly increasing, or if
/// `cfg` violates its invariants.
///
/// # Errors
///
/// As [`integrate_adaptive`].
pub fn integrate_at<const N: usize, F>(
    f: F,
    y0: &SVector<f64, N>,
    sample_times: &[f64],
    cfg: &IntegratorConfig,
) -> Result<Trajectory<N>, IntegratorError>
where
    F: Fn(f64, &SVector<f64, N>) -> SVector<f64, N>,
{
    assert!(!sample_times.is_empty(), "sample_times must be non-empty");
    assert!(
        sample_times.windows(2).all(|w| w[0] < w[1]),
        "sample_times must be strictly increasing"
    );
    cfg.assert_valid();
    integrate_engine(&f, y0, sample_times, false, cfg)
}

/// Fixed-step Dormand–Prince with no error control: `n` equal steps chosen
/// so the grid lands exactly on `t1` (`n` is `(t1-t0)/h` rounded, at least
/// one). Used to verify the pair's convergence order.
///
/// # Panics
///
/// Panics if `t1 <= t0` or `h <= 0`.
pub fn integrate_fixed<const N: usize, F>(
    f: F,
    y0: &SVector<f64, N>,
    t0: f64,
    t1: f64,
    h: f64,
) -> Trajectory<N>
where
    F: Fn(f64, &SVector<f64, N>) -> SVector<f64, N>,
{
    assert!(t1 > t0, "integrate_fixed requires t1 > t0");
    assert!(h > 0.0, "step size must be positive");
    let n = (((t1 - t0) / h).round() as usize).max(1);
    let h = (t1 - t0) / n as f64;

    let mut traj = Trajectory {
        times: vec![t0],
        states: vec![*y0],
    };
    let mut y = *y0;
    let mut k1 = f(t0, &y);
    for step in 0..n {
        let t = t0 + step as f64 * h;
        let (y5, k7, _err) = attempt_step(&f, t, &y, h, &k1, 1.0, 1.0);
        y = y5;
        k1 = k7;
        let t_new = if step + 1 == n {
            t1
        } else {
            t0 + (step + 1) as f64 * h
        };
        traj.times.push(t_new);
        traj.states.push(y);
    }
    traj
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::rhs;
    use crate::params::Params;
    use crate::state::{default_initial_state, StateVector};
    use approx::assert_relative_eq;
    use nalgebra::Vector1;

    fn decay(_t: f64, y: &Vector1<f64>) -> Vector1<f64> {
        -y
    }

    fn model_dfe(p: &Params) -> StateVector {
        let mut y = StateVector::zeros();
        y[crate::state::idx::S_H] = p.theta1 / p.mu1;
        y[crate::state::idx::S_F] = p.theta2 / p.mu2;
        y[crate::state::idx::S_D] = p.theta3 / p.mu3;
        y
    }

    #[test]
    fn scalar_exponential_decay() {
        let cfg = IntegratorConfig::default();
        let traj =
            integrate_adaptive(decay, &Vector1::new(1.0), 0.0, 1.0, &cfg).unwrap();
        assert_eq!(traj.times[0], 0.0);
        assert_eq!(traj.last_time(), 1.0);
        assert_relative_eq!(
            traj.last_state()[0],
            (-1.0f64).exp(),
            max_relative = 1e-8
        );
    }

    #[test]
    fn disease_free_point_stays_put() {
        let p = Params::default();
        let dfe = model_dfe(&p);
        let cfg = IntegratorConfig::default();
        let traj =
            integrate_adaptive(|t, y| rhs(t, y, &p), &dfe, 0.0, 100.0, &cfg)
                .unwrap();
        let scale = dfe.amax();
        for state in &traj.states {
            let dev = (state - dfe).amax();
            assert!(
                dev < 1e-9 * scale,
                "trajectory drifted from the fixed point by {dev}"
            );
        }
    }

    #[test]
    fn self_convergence_between_tolerances() {
        let p = Params::default();
        let y0 = default_initial_state();
        let loose = IntegratorConfig {
            rtol: 1e-6,
            atol: 1e-6,
            ..IntegratorConfig::default()
        };
        let tight = IntegratorConfig {
            rtol: 1e-9,
            atol: 1e-9,
            ..IntegratorConfig::default()
        };
        let a = integrate_adaptive(|t, y| rhs(t, y, &p), &y0, 0.0, 100.0, &loose)
            .unwrap();
        let b = integrate_adaptive(|t, y| rhs(t, y, &p), &y0, 0.0, 100.0, &tight)
            .unwrap();
        for i in 0..12 {
            assert_relative_eq!(
                a.last_state()[i],
                b.last_state()[i],
                max_relative = 1e-4
            );
        }
    }

    #[test]
    fn sampling_at_requested_times() {
        let cfg = IntegratorConfig::default();
        let traj = integrate_at(
            decay,
            &Vector1::new(1.0),
            &[0.0, 0.5, 1.0],
            &cfg,
        )
        .unwrap();
        assert_eq!(traj.times, vec![0.0, 0.5, 1.0]);
        assert_relative_eq!(traj.states[1][0], (-0.5f64).exp(), max_relative = 1e-8);
        assert_relative_eq!(traj.states[2][0], (-1.0f64).exp(), max_relative = 1e-8);
    }

    #[test]
    fn single_sample_time_returns_initial_state_unchanged() {
        let cfg = IntegratorConfig::default();
        let y0 = Vector1::new(0.75);
        let traj = integrate_at(decay, &y0, &[2.5], &cfg).unwrap();
        assert_eq!(traj.times, vec![2.5]);
        assert_eq!(traj.states, vec![y0]);
    }

    #[test]
    fn sampled_states_match_separate_full_runs() {
        let p = Params::default();
        let y0 = default_initial_state();
        let cfg = IntegratorConfig::default();
        let times: Vec<f64> = (0..=20).map(f64::from).collect();
        let sampled =
            integrate_at(|t, y| rhs(t, y, &p), &y0, &times, &cfg).unwrap();
        for &year in &[5usize, 10, 20] {
            let full = integrate_adaptive(
                |t, y| rhs(t, y, &p),
                &y0,
                0.0,
                year as f64,
                &cfg,
            )
            .unwrap();
            for i in 0..12 {
                assert_relative_eq!(
                    sampled.states[year][i],
                    full.last_state()[i],
                    max_relative = 1e-6
                );
            }
        }
    }

    #[test]
    fn fixed_step_order_is_five() {
        // Global error on y' = -y over [0, 1] should shrink ~2^5 per halving.
        let exact = (-1.0f64).exp();
        let errs: Vec<f64> = [0.1, 0.05, 0.025]
            .iter()
            .map(|&h| {
                let traj = integrate_fixed(decay, &Vector1::new(1.0), 0.0, 1.0, h);
                (traj.last_state()[0] - exact).abs()
            })
            .collect();
        for w in errs.windows(2) {
            let ratio = w[0] / w[1];
            assert!(
                (32.0 / 3.0..32.0 * 3.0).contains(&ratio),
                "order-5 halving ratio out of range: {ratio}"
            );
        }
    }

    #[test]
    fn identical_inputs_give_bit_identical_trajectories() {
        let p = Params::default();
        let y0 = default_initial_state();
        let cfg = IntegratorConfig::default();
        let a = integrate_adaptive(|t, y| rhs(t, y, &p), &y0, 0.0, 25.0, &cfg)
            .unwrap();
        let b = integrate_adaptive(|t, y| rhs(t, y, &p), &y0, 0.0, 25.0, &cfg)
            .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn tightening_rtol_never_worsens_the_endpoint() {
        let p = Params::default();
        let y0 = default_initial_state();
        let reference_cfg = IntegratorConfig {
            rtol: 1e-12,
            atol: 1e-12,
            ..IntegratorConfig::default()
        };
        let reference = integrate_adaptive(
            |t, y| rhs(t, y, &p),
            &y0,
            0.0,
            10.0,
            &reference_cfg,
        )
        .unwrap();
        let endpoint_error = |rtol: f64| -> f64 {
            let cfg = IntegratorConfig {
                rtol,
                atol: rtol,
                ..IntegratorConfig::default()
            };
            let traj =
                integrate_adaptive(|t, y| rhs(t, y, &p), &y0, 0.0, 10.0, &cfg)
                    .unwrap();
            (traj.last_state() - reference.last_state()).amax()
                / reference.last_state().amax()
        };
        let mut prev = endpoint_error(1e-4);
        for rtol in [1e-5, 1e-6, 1e-7] {
            let next = endpoint_error(rtol);
            assert!(
                next <= prev,
                "error grew when tightening to rtol={rtol}: {next} > {prev}"
            );
            prev = next;
        }
    }

    #[test]
    fn step_budget_is_enforced() {
        let cfg = IntegratorConfig {
            max_steps: 5,
            ..IntegratorConfig::default()
        };
        let err = integrate_adaptive(decay, &Vector1::new(1.0), 0.0, 1e6, &cfg)
            .unwrap_err();
        assert!(matches!(err, IntegratorError::StepBudgetExceeded { .. }));
    }

    #[test]
    fn blowup_reports_non_finite_state() {
        // y' = y^2 from y(0)=1 blows up at t=1.
        let cfg = IntegratorConfig::default();
        let err = integrate_adaptive(
            |_t, y: &Vector1<f64>| Vector1::new(y[0] * y[0]),
            &Vector1::new(1.0),
            0.0,
            2.0,
            &cfg,
        )
        .unwrap_err();
        assert!(matches!(err, IntegratorError::NonFiniteState { .. }));
    }
}

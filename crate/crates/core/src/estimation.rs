//! Synthetic-data generation and nonlinear least-squares parameter
//! estimation.
//!
//! The pipeline mirrors a standard identifiability study: integrate the
//! model at a set of observation times, add seeded Gaussian noise, then
//! recover chosen parameters by minimizing a sum of squared residuals with
//! a derivative-free Nelder–Mead search (on log-parameters, which keeps
//! rates positive) followed by an optional Levenberg–Marquardt polish.
//! Linearized 95% confidence half-widths come from the finite-difference
//! residual Jacobian at the estimate.
//!
//! # Noise model
//!
//! Compartments span five orders of magnitude, so a single absolute
//! standard deviation is meaningless across them. In the default
//! [`NoiseMode::Scaled`] mode the per-compartment standard deviation is
//! `noise_sd · scale_c`, where `scale_c = max_t |trajectory_c(t)|` (floored
//! at 1 for identically-zero compartments). The scales are frozen into the
//! dataset, and residuals are normalized by them, so the objective
//! `Σ ((obs − model)/scale)²` treats every observed compartment on equal
//! footing and `s² = sse/(n−k)` is a single pooled variance.
//! [`NoiseMode::Absolute`] sets every scale to 1 for noise in raw units.
//!
//! # Reproducible noise stream
//!
//! Noise is generated from `ChaCha8Rng::seed_from_u64(seed)` through the
//! Box–Muller transform, specified exactly so other implementations can
//! reproduce identical datasets from the same seed:
//!
//! ```text
//! a, b = rng.next_u64(), rng.next_u64()
//! u1 = ((a >> 11) + 1) · 2⁻⁵³        (in (0, 1], never 0: ln is safe)
//! u2 = (b >> 11) · 2⁻⁵³              (in [0, 1))
//! r  = sqrt(−2 ln u1)
//! z0 = r · cos(2π u2),  z1 = r · sin(2π u2)
//! ```
//!
//! `z0` is consumed before `z1`, and draws are assigned time-major: for
//! each observation time in order, one draw per observed compartment in
//! ascending compartment index.

use nalgebra::{DMatrix, DVector};
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::integrator::{integrate_at, IntegratorConfig, IntegratorError};
use crate::model::rhs;
use crate::params::Params;
use crate::state::{idx, StateVector};
use crate::tolerances::{
    CI_Z_95, LM_LAMBDA_INIT, LM_MAX_ITERATIONS, NM_DIAMETER_TOL,
    NM_MAX_ITERATIONS, NM_SPREAD_TOL, RESIDUAL_JACOBIAN_RELSTEP,
};

/// Observed compartments used when no explicit subset is given: infectious
/// humans, infectious free-range and domestic dogs, and the environmental
/// reservoir — the compartments a surveillance program plausibly reports.
pub const DEFAULT_OBSERVED: [usize; 4] = [idx::I_H, idx::I_F, idx::I_D, idx::M];

/// How the requested `noise_sd` maps to per-compartment standard deviations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseMode {
    /// `sd_c = noise_sd · max_t |trajectory_c(t)|` (floor 1 for a
    /// compartment that is identically zero).
    Scaled,
    /// `sd_c = noise_sd` in raw compartment units for every compartment.
    Absolute,
}

/// A noisy model realization with everything needed to reproduce it.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticDataset {
    /// Observation times, strictly increasing.
    pub times: Vec<f64>,
    /// One full state per time; noise is added only to `observed`
    /// components, the rest carry the exact trajectory.
    pub observations: Vec<StateVector>,
    /// Indices of the observed compartments, strictly increasing.
    pub observed: Vec<usize>,
    /// Frozen per-compartment residual scales (all 1 in absolute mode).
    pub scales: [f64; 12],
    /// The requested noise level.
    pub noise_sd: f64,
    /// How `noise_sd` was interpreted.
    pub noise_mode: NoiseMode,
    /// Seed of the noise stream.
    pub seed: u64,
    /// Parameters that generated the trajectory.
    pub truth: Params,
}

/// Estimation failures.
#[derive(Debug, Error)]
pub enum EstimationError {
    /// Trajectory integration failed while generating data.
    #[error(transparent)]
    Integrator(#[from] IntegratorError),
    /// A free-parameter name is not a model parameter.
    #[error("unknown parameter `{0}` in free set")]
    UnknownParameter(String),
    /// `fit` needs at least one free parameter.
    #[error("free parameter set is empty")]
    EmptyFreeSet,
    /// Bounds must satisfy `0 < lo < hi` (positivity is required by the
    /// log-parameter search).
    #[error("invalid bounds [{lo}, {hi}] for `{name}`: need 0 < lo < hi")]
    InvalidBounds { name: String, lo: f64, hi: f64 },
    /// The initial guess must lie inside the bounds.
    #[error("initial value {value} for `{name}` is outside [{lo}, {hi}]")]
    InitOutsideBounds {
        name: String,
        value: f64,
        lo: f64,
        hi: f64,
    },
    /// Observed-component list must be non-empty, strictly increasing, and
    /// within `0..12`.
    #[error("observed components must be a non-empty strictly increasing subset of 0..12")]
    MalformedObserved,
    /// The optimizer exhausted its budget without ever improving on the
    /// initial objective value.
    #[error("the initial simplex could not reduce the objective (sse stayed at {sse})")]
    NoImprovement { sse: f64 },
    /// Residual evaluation at the estimate failed (integration broke down).
    #[error("residual integration failed at the fit estimate")]
    ResidualEvaluation,
    /// `JᵀJ` is numerically singular: the free set is unidentifiable from
    /// this dataset.
    #[error("information matrix is numerically singular; the free parameter set is unidentifiable from this dataset")]
    SingularInformation,
}

/// Result of a least-squares fit.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    /// Full parameter set with fitted values substituted.
    pub estimate: Params,
    /// Names of the optimized parameters, in the order given to [`fit`].
    pub free_names: Vec<String>,
    /// Scaled sum of squared residuals at `estimate`.
    pub sse: f64,
    /// Optimizer iterations spent (Nelder–Mead plus any polish steps).
    pub iterations: usize,
    /// Whether the Nelder–Mead stopping rule (simplex diameter or objective
    /// spread) fired before the iteration budget ran out.
    pub converged: bool,
    /// 95% confidence half-widths per free parameter; empty until filled
    /// from [`confidence_intervals`].
    pub ci_half_widths: Vec<f64>,
}

/// Knobs for [`fit`]. The defaults reproduce the documented pipeline.
#[derive(Debug, Clone, Copy)]
pub struct FitOptions {
    /// Run the Levenberg–Marquardt refinement after Nelder–Mead.
    pub lm_polish: bool,
    /// Iteration budget for the Nelder–Mead stage.
    pub nm_max_iterations: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            lm_polish: true,
            nm_max_iterations: NM_MAX_ITERATIONS,
        }
    }
}

/// Deterministic standard-normal stream (see the module docs for the exact
/// recipe).
struct NormalStream {
    rng: ChaCha8Rng,
    spare: Option<f64>,
}

impl NormalStream {
    fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            spare: None,
        }
    }

    fn next(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let a = self.rng.next_u64();
        let b = self.rng.next_u64();
        let u1 = ((a >> 11) as f64 + 1.0) * 2f64.powi(-53);
        let u2 = (b >> 11) as f64 * 2f64.powi(-53);
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = std::f64::consts::TAU * u2;
        self.spare = Some(r * theta.sin());
        r * theta.cos()
    }
}

fn validate_observed(observed: &[usize]) -> Result<(), EstimationError> {
    let increasing = observed.windows(2).all(|w| w[0] < w[1]);
    if observed.is_empty() || !increasing || observed.iter().any(|&c| c >= 12) {
        return Err(EstimationError::MalformedObserved);
    }
    Ok(())
}

/// Generates a noisy dataset with the default scaled-noise mode and the
/// [`DEFAULT_OBSERVED`] compartments.
///
/// # Panics
///
/// Panics if `noise_sd < 0` or `times` is empty or not strictly increasing
/// (propagated from the integrator's sampling preconditions).
///
/// # Errors
///
/// Propagates integration failures.
pub fn generate_synthetic(
    truth: &Params,
    y0: &StateVector,
    times: &[f64],
    noise_sd: f64,
    seed: u64,
) -> Result<SyntheticDataset, EstimationError> {
    generate_synthetic_with(
        truth,
        y0,
        times,
        noise_sd,
        NoiseMode::Scaled,
        &DEFAULT_OBSERVED,
        seed,
    )
}

/// Generates a noisy dataset with full control over noise mode and the
/// observed subset.
///
/// Noise is added to observed components only; unobserved components carry
/// the exact trajectory. With `noise_sd = 0` the observations equal the
/// trajectory bit-for-bit and the noise stream is never consumed.
///
/// # Panics
///
/// Panics if `noise_sd < 0` or `times` is empty or not strictly increasing.
///
/// # Errors
///
/// [`EstimationError::MalformedObserved`] for a bad component list;
/// integration failures are propagated.
pub fn generate_synthetic_with(
    truth: &Params,
    y0: &StateVector,
    times: &[f64],
    noise_sd: f64,
    noise_mode: NoiseMode,
    observed: &[usize],
    seed: u64,
) -> Result<SyntheticDataset, EstimationError> {
    assert!(noise_sd >= 0.0, "noise_sd must be non-negative");
    validate_observed(observed)?;

    let cfg = IntegratorConfig::default();
    let traj = integrate_at(|t, y| rhs(t, y, truth), y0, times, &cfg)?;

    let mut scales = [1.0; 12];
    if noise_mode == NoiseMode::Scaled {
        for (c, scale) in scales.iter_mut().enumerate() {
            let amax = traj
                .states
                .iter()
                .map(|y| y[c].abs())
                .fold(0.0, f64::max);
            // Floor at 1: an identically-zero compartment still gets a
            // well-defined (absolute) noise level and residual scale.
            *scale = if amax > 0.0 { amax } else { 1.0 };
        }
    }

    let mut observations = traj.states.clone();
    if noise_sd > 0.0 {
        let mut stream = NormalStream::new(seed);
        for state in &mut observations {
            for &c in observed {
                state[c] += noise_sd * scales[c] * stream.next();
            }
        }
    }

    Ok(SyntheticDataset {
        times: times.to_vec(),
        observations,
        observed: observed.to_vec(),
        scales,
        noise_sd,
        noise_mode,
        seed,
        truth: *truth,
    })
}

/// Scaled sum of squared residuals of `candidate` against the dataset.
///
/// Returns `+∞` when integration fails or produces non-finite values, which
/// steers the optimizer away from pathological parameter regions instead of
/// aborting the search.
pub fn sse(candidate: &Params, data: &SyntheticDataset, y0: &StateVector) -> f64 {
    let cfg = IntegratorConfig::default();
    let Ok(traj) = integrate_at(|t, y| rhs(t, y, candidate), y0, &data.times, &cfg)
    else {
        return f64::INFINITY;
    };
    let mut total = 0.0;
    for (obs, model) in data.observations.iter().zip(traj.states.iter()) {
        for &c in &data.observed {
            let r = (obs[c] - model[c]) / data.scales[c];
            total += r * r;
        }
    }
    if total.is_finite() {
        total
    } else {
        f64::INFINITY
    }
}

/// Residual vector of `candidate` (scaled, time-major, observed components
/// in ascending order), or `None` if integration fails.
fn residual_vector(
    candidate: &Params,
    data: &SyntheticDataset,
    y0: &StateVector,
) -> Option<DVector<f64>> {
    let cfg = IntegratorConfig::default();
    let traj =
        integrate_at(|t, y| rhs(t, y, candidate), y0, &data.times, &cfg).ok()?;
    let n = data.times.len() * data.observed.len();
    let mut r = DVector::zeros(n);
    let mut row = 0;
    for (obs, model) in data.observations.iter().zip(traj.states.iter()) {
        for &c in &data.observed {
            r[row] = (obs[c] - model[c]) / data.scales[c];
            row += 1;
        }
    }
    if r.iter().all(|v| v.is_finite()) {
        Some(r)
    } else {
        None
    }
}

/// Outcome of the private Nelder–Mead stage.
struct NmOutcome {
    best_x: Vec<f64>,
    best_f: f64,
    iterations: usize,
    converged: bool,
    /// Best objective value after each iteration (for the monotonicity
    /// invariant; the best vertex is never discarded, so this never rises).
    #[cfg_attr(not(test), allow(dead_code))]
    trace_best: Vec<f64>,
}

/// Standard Nelder–Mead with reflection 1, expansion 2, contraction 0.5,
/// shrink 0.5, from a simplex at `x0` plus `step` along each axis.
///
/// Stops when the simplex ∞-norm diameter falls below
/// [`NM_DIAMETER_TOL`], the objective spread falls below
/// [`NM_SPREAD_TOL`]·(1+f_best), or `max_iterations` passes elapse.
fn nelder_mead<F: Fn(&[f64]) -> f64>(
    objective: F,
    x0: &[f64],
    step: f64,
    max_iterations: usize,
) -> NmOutcome {
    let k = x0.len();
    let mut vertices: Vec<Vec<f64>> = Vec::with_capacity(k + 1);
    vertices.push(x0.to_vec());
    for j in 0..k {
        let mut v = x0.to_vec();
        v[j] += step;
        vertices.push(v);
    }
    let mut values: Vec<f64> = vertices.iter().map(|v| objective(v)).collect();

    let mut iterations = 0;
    let mut converged = false;
    let mut trace_best = Vec::new();

    loop {
        // Order so vertex 0 is best and vertex k is worst.
        let mut order: Vec<usize> = (0..=k).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        let reordered: Vec<Vec<f64>> =
            order.iter().map(|&i| vertices[i].clone()).collect();
        let revalued: Vec<f64> = order.iter().map(|&i| values[i]).collect();
        vertices = reordered;
        values = revalued;

        let diameter = vertices[1..]
            .iter()
            .flat_map(|v| {
                v.iter()
                    .zip(vertices[0].iter())
                    .map(|(a, b)| (a - b).abs())
            })
            .fold(0.0, f64::max);
        let spread = values[k] - values[0];
        if diameter < NM_DIAMETER_TOL
            || spread < NM_SPREAD_TOL * (1.0 + values[0])
        {
            converged = true;
            break;
        }
        if iterations >= max_iterations {
            break;
        }
        iterations += 1;

        let mut centroid = vec![0.0; k];
        for v in &vertices[..k] {
            for (c, x) in centroid.iter_mut().zip(v.iter()) {
                *c += x / k as f64;
            }
        }
        let along = |coef: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(vertices[k].iter())
                .map(|(c, w)| c + coef * (c - w))
                .collect()
        };

        let reflected = along(1.0);
        let f_reflected = objective(&reflected);

        if f_reflected < values[0] {
            // Best so far: probe further along the same direction.
            let expanded = along(2.0);
            let f_expanded = objective(&expanded);
            if f_expanded < f_reflected {
                vertices[k] = expanded;
                values[k] = f_expanded;
            } else {
                vertices[k] = reflected;
                values[k] = f_reflected;
            }
        } else if f_reflected < values[k - 1] {
            vertices[k] = reflected;
            values[k] = f_reflected;
        } else {
            // Contract, outside or inside of the worst vertex.
            let (contracted, f_contracted, bar) = if f_reflected < values[k] {
                let c = along(0.5);
                let f = objective(&c);
                (c, f, f_reflected)
            } else {
                let c = along(-0.5);
                let f = objective(&c);
                (c, f, values[k])
            };
            if f_contracted < bar {
                vertices[k] = contracted;
                values[k] = f_contracted;
            } else {
                // Shrink everything toward the best vertex.
                for i in 1..=k {
                    let shrunk: Vec<f64> = vertices[0]
                        .iter()
                        .zip(vertices[i].iter())
                        .map(|(b, v)| b + 0.5 * (v - b))
                        .collect();
                    values[i] = objective(&shrunk);
                    vertices[i] = shrunk;
                }
            }
        }

        let best_now = values
            .iter()
            .copied()
            .fold(f64::INFINITY, |acc, v| if v < acc { v } else { acc });
        trace_best.push(best_now);
    }

    let mut best = 0;
    for i in 1..=k {
        if values[i] < values[best] {
            best = i;
        }
    }
    NmOutcome {
        best_x: vertices[best].clone(),
        best_f: values[best],
        iterations,
        converged,
        trace_best,
    }
}

/// One Levenberg–Marquardt refinement pass in linear parameter space.
///
/// Steps solve `(JᵀJ + λ·diag(JᵀJ))·δ = −Jᵀr` with central-difference
/// Jacobians; a step is accepted only if it stays inside the bounds and
/// reduces the objective (then λ shrinks), otherwise λ grows and the step
/// is retried. Returns the (possibly unchanged) parameters, the final
/// objective, and the number of attempts consumed.
fn lm_polish<R: Fn(&[f64]) -> Option<DVector<f64>>>(
    residuals: R,
    x0: &[f64],
    bounds: &[(f64, f64)],
) -> (Vec<f64>, f64, usize) {
    let k = x0.len();
    let mut x = x0.to_vec();
    let Some(mut r) = residuals(&x) else {
        return (x, f64::INFINITY, 0);
    };
    let mut best_sse = r.norm_squared();
    let mut lambda = LM_LAMBDA_INIT;
    let mut attempts = 0;

    while attempts < LM_MAX_ITERATIONS {
        attempts += 1;

        // Central-difference Jacobian of the residual vector.
        let n = r.len();
        let mut jac = DMatrix::zeros(n, k);
        let mut fd_failed = false;
        for j in 0..k {
            let h = RESIDUAL_JACOBIAN_RELSTEP * x[j].abs().max(f64::MIN_POSITIVE);
            let mut hi = x.clone();
            hi[j] += h;
            let mut lo = x.clone();
            lo[j] -= h;
            let (Some(rh), Some(rl)) = (residuals(&hi), residuals(&lo)) else {
                fd_failed = true;
                break;
            };
            let col = (rh - rl) / (2.0 * h);
            jac.set_column(j, &col);
        }
        if fd_failed {
            break;
        }

        let jtj = jac.transpose() * &jac;
        let jtr = jac.transpose() * &r;
        let mut damped = jtj.clone();
        for j in 0..k {
            // Marquardt diagonal scaling keeps the damping meaningful for
            // parameters of wildly different magnitudes.
            damped[(j, j)] += lambda * jtj[(j, j)].max(f64::MIN_POSITIVE);
        }
        let Some(delta) = damped.lu().solve(&(-&jtr)) else {
            break;
        };

        let candidate: Vec<f64> =
            x.iter().zip(delta.iter()).map(|(a, d)| a + d).collect();
        let inside = candidate
            .iter()
            .zip(bounds.iter())
            .all(|(v, (lo, hi))| *v >= *lo && *v <= *hi);
        let trial = if inside { residuals(&candidate) } else { None };

        match trial {
            Some(tr) => {
                let trial_sse = tr.norm_squared();
                if trial_sse < best_sse {
                    let gain = best_sse - trial_sse;
                    x = candidate;
                    r = tr;
                    best_sse = trial_sse;
                    lambda = (lambda / 10.0).max(1e-12);
                    if gain < 1e-15 * (1.0 + best_sse) {
                        break;
                    }
                } else {
                    lambda *= 10.0;
                }
            }
            None => lambda *= 10.0,
        }
        if lambda > 1e10 {
            break;
        }
    }
    (x, best_sse, attempts)
}

/// Nonlinear least-squares fit of `free_names` against the dataset.
///
/// The search runs Nelder–Mead on the logarithms of the free parameters
/// (an implicit positivity constraint), starting from a simplex at
/// `ln(init)` with 0.05 steps, and rejecting any candidate outside its
/// bounds with an infinite objective. With [`FitOptions::lm_polish`] a
/// Levenberg–Marquardt pass then refines the returned vertex in linear
/// space. `converged` reports whether the Nelder–Mead stopping rule fired;
/// `ci_half_widths` is left empty — fill it from [`confidence_intervals`].
///
/// # Errors
///
/// Validation errors for bad names/bounds/inits;
/// [`EstimationError::NoImprovement`] when the budget is exhausted without
/// ever improving on the objective at `init`.
pub fn fit(
    data: &SyntheticDataset,
    y0: &StateVector,
    init: &Params,
    free_names: &[&str],
    bounds: &[(f64, f64)],
    options: &FitOptions,
) -> Result<FitResult, EstimationError> {
    if free_names.is_empty() {
        return Err(EstimationError::EmptyFreeSet);
    }
    assert_eq!(
        free_names.len(),
        bounds.len(),
        "one (lo, hi) pair is required per free parameter"
    );
    let mut init_values = Vec::with_capacity(free_names.len());
    for (&name, &(lo, hi)) in free_names.iter().zip(bounds.iter()) {
        let value = init
            .get(name)
            .ok_or_else(|| EstimationError::UnknownParameter(name.to_string()))?;
        if !(lo > 0.0 && lo < hi && lo.is_finite() && hi.is_finite()) {
            return Err(EstimationError::InvalidBounds {
                name: name.to_string(),
                lo,
                hi,
            });
        }
        if value < lo || value > hi {
            return Err(EstimationError::InitOutsideBounds {
                name: name.to_string(),
                value,
                lo,
                hi,
            });
        }
        init_values.push(value);
    }

    let build_candidate = |linear: &[f64]| -> Params {
        let mut p = *init;
        for (&name, &v) in free_names.iter().zip(linear.iter()) {
            p.set(name, v).expect("free names validated above");
        }
        p
    };

    let objective = |log_x: &[f64]| -> f64 {
        let linear: Vec<f64> = log_x.iter().map(|v| v.exp()).collect();
        let inside = linear
            .iter()
            .zip(bounds.iter())
            .all(|(v, (lo, hi))| *v >= *lo && *v <= *hi);
        if !inside {
            return f64::INFINITY;
        }
        sse(&build_candidate(&linear), data, y0)
    };

    let x0: Vec<f64> = init_values.iter().map(|v| v.ln()).collect();
    let f_init = objective(&x0);
    let nm = nelder_mead(&objective, &x0, 0.05, options.nm_max_iterations);

    if !nm.converged && nm.best_f >= f_init {
        return Err(EstimationError::NoImprovement { sse: nm.best_f });
    }

    let mut linear: Vec<f64> = nm.best_x.iter().map(|v| v.exp()).collect();
    let mut best_sse = nm.best_f;
    let mut iterations = nm.iterations;

    if options.lm_polish {
        let residuals =
            |lin: &[f64]| residual_vector(&build_candidate(lin), data, y0);
        let (polished, polished_sse, lm_iters) =
            lm_polish(residuals, &linear, bounds);
        iterations += lm_iters;
        if polished_sse < best_sse {
            linear = polished;
            best_sse = polished_sse;
        }
    }

    Ok(FitResult {
        estimate: build_candidate(&linear),
        free_names: free_names.iter().map(|s| s.to_string()).collect(),
        sse: best_sse,
        iterations,
        converged: nm.converged,
        ci_half_widths: Vec::new(),
    })
}

/// Linearized-Gaussian 95% confidence half-widths for a converged fit.
///
/// `half_j = 1.96·sqrt(s²·[(JᵀJ)⁻¹]_jj)` with `s² = sse/(n−k)`, where `J`
/// is the central-difference Jacobian of the scaled residual vector at the
/// estimate, `n` the number of scalar residuals, and `k` the number of free
/// parameters.
///
/// # Panics
///
/// Panics if the fit did not converge (the linearization is meaningless at
/// an arbitrary non-stationary point).
///
/// # Errors
///
/// [`EstimationError::SingularInformation`] when `n ≤ k` or `JᵀJ` cannot be
/// inverted (an unidentifiable free set, e.g. a parameter the observations
/// are insensitive to); [`EstimationError::ResidualEvaluation`] if the
/// model cannot be integrated at the estimate.
pub fn confidence_intervals(
    fit: &FitResult,
    data: &SyntheticDataset,
    y0: &StateVector,
) -> Result<Vec<f64>, EstimationError> {
    assert!(
        fit.converged,
        "confidence intervals require a converged fit"
    );
    let k = fit.free_names.len();
    let n = data.times.len() * data.observed.len();
    if n <= k {
        return Err(EstimationError::SingularInformation);
    }

    let theta: Vec<f64> = fit
        .free_names
        .iter()
        .map(|name| {
            fit.estimate
                .get(name)
                .expect("fit result carries valid names")
        })
        .collect();
    let residuals = |lin: &[f64]| -> Option<DVector<f64>> {
        let mut p = fit.estimate;
        for (name, &v) in fit.free_names.iter().zip(lin.iter()) {
            p.set(name, v).ok()?;
        }
        residual_vector(&p, data, y0)
    };

    let mut jac = DMatrix::zeros(n, k);
    for j in 0..k {
        let h = RESIDUAL_JACOBIAN_RELSTEP * theta[j].abs().max(f64::MIN_POSITIVE);
        let mut hi = theta.clone();
        hi[j] += h;
        let mut lo = theta.clone();
        lo[j] -= h;
        let rh = residuals(&hi).ok_or(EstimationError::ResidualEvaluation)?;
        let rl = residuals(&lo).ok_or(EstimationError::ResidualEvaluation)?;
        jac.set_column(j, &((rh - rl) / (2.0 * h)));
    }

    let jtj = jac.transpose() * &jac;
    let inverse = jtj
        .try_inverse()
        .ok_or(EstimationError::SingularInformation)?;
    let s2 = fit.sse / (n - k) as f64;
    let mut half_widths = Vec::with_capacity(k);
    for j in 0..k {
        // Clamp rounding-level negatives on the inverse diagonal.
        let var = (s2 * inverse[(j, j)]).max(0.0);
        let half = CI_Z_95 * var.sqrt();
        if !half.is_finite() {
            return Err(EstimationError::SingularInformation);
        }
        half_widths.push(half);
    }
    Ok(half_widths)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::default_initial_state;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn fit_times() -> Vec<f64> {
        (0..=20).map(|i| 0.5 * i as f64).collect()
    }

    #[test]
    fn zero_noise_observations_equal_the_trajectory_bit_for_bit() {
        let truth = Params::default();
        let y0 = default_initial_state();
        let times = fit_times();
        let data = generate_synthetic(&truth, &y0, &times, 0.0, 3).unwrap();
        let traj = integrate_at(
            |t, y| rhs(t, y, &truth),
            &y0,
            &times,
            &IntegratorConfig::default(),
        )
        .unwrap();
        for (obs, state) in data.observations.iter().zip(traj.states.iter()) {
            for c in 0..12 {
                assert_eq!(obs[c].to_bits(), state[c].to_bits());
            }
        }
    }

    #[test]
    fn identical_seeds_reproduce_identical_datasets() {
        let truth = Params::default();
        let y0 = default_initial_state();
        let times = fit_times();
        let a = generate_synthetic(&truth, &y0, &times, 0.05, 42).unwrap();
        let b = generate_synthetic(&truth, &y0, &times, 0.05, 42).unwrap();
        assert_eq!(a, b);

        let c = generate_synthetic(&truth, &y0, &times, 0.05, 43).unwrap();
        assert_ne!(a, c, "a different seed must change the noise");
    }

    #[test]
    fn empirical_noise_sd_matches_the_requested_level() {
        // 1000 times × 4 observed compartments = 4000 scaled noise draws;
        // their pooled standard deviation estimates noise_sd with relative
        // error ~1/sqrt(2·4000) ≈ 1.1%, comfortably inside ±10%.
        let truth = Params::default();
        let y0 = default_initial_state();
        let times: Vec<f64> = (0..1000).map(|i| 0.1 * i as f64).collect();
        let data = generate_synthetic(&truth, &y0, &times, 0.05, 11).unwrap();
        let traj = integrate_at(
            |t, y| rhs(t, y, &truth),
            &y0,
            &times,
            &IntegratorConfig::default(),
        )
        .unwrap();
        let mut sum_sq = 0.0;
        let mut n = 0usize;
        for (obs, state) in data.observations.iter().zip(traj.states.iter()) {
            for &c in &data.observed {
                let scaled = (obs[c] - state[c]) / data.scales[c];
                sum_sq += scaled * scaled;
                n += 1;
            }
        }
        let sd = (sum_sq / n as f64).sqrt();
        assert!(
            (0.045..=0.055).contains(&sd),
            "pooled noise sd {sd} outside [0.045, 0.055]"
        );
    }

    #[test]
    fn normal_stream_follows_the_documented_recipe() {
        let mut stream = NormalStream::new(7);
        let mut raw = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..8 {
            let a = raw.next_u64();
            let b = raw.next_u64();
            let u1 = ((a >> 11) as f64 + 1.0) * 2f64.powi(-53);
            let u2 = (b >> 11) as f64 * 2f64.powi(-53);
            let r = (-2.0 * u1.ln()).sqrt();
            let theta = std::f64::consts::TAU * u2;
            assert_eq!(stream.next().to_bits(), (r * theta.cos()).to_bits());
            assert_eq!(stream.next().to_bits(), (r * theta.sin()).to_bits());
        }
    }

    #[test]
    fn scaled_mode_freezes_trajectory_scales_with_a_unit_floor() {
        // Kill transmission and seed no infections: every infected
        // compartment stays identically zero and must fall back to the
        // unit scale, while populated compartments use their own maxima.
        let mut p = Params::default();
        for name in crate::params::CONTACT_RATE_NAMES {
            p.set(name, 0.0).unwrap();
        }
        let mut y0 = default_initial_state();
        for &c in &[idx::E_H, idx::I_H, idx::E_F, idx::I_F, idx::E_D, idx::I_D] {
            y0[c] = 0.0;
        }
        y0[idx::M] = 0.0;
        let times = fit_times();
        let data = generate_synthetic_with(
            &p,
            &y0,
            &times,
            0.05,
            NoiseMode::Scaled,
            &[idx::I_H, idx::M],
            5,
        )
        .unwrap();
        assert_eq!(data.scales[idx::I_H], 1.0);
        assert_eq!(data.scales[idx::M], 1.0);
        // S_H starts above its carrying value and decays: the max is y0.
        assert_eq!(data.scales[idx::S_H], 142000.0);
        // Observed zero compartments now fluctuate at the absolute 0.05
        // level; unobserved ones stay exactly zero.
        assert!(data.observations.iter().any(|y| y[idx::I_H] != 0.0));
        assert!(data.observations.iter().all(|y| y[idx::I_F] == 0.0));
        let max_ih = data
            .observations
            .iter()
            .map(|y| y[idx::I_H].abs())
            .fold(0.0, f64::max);
        assert!(max_ih < 1.0, "unit-floor noise should stay near 0.05");
    }

    #[test]
    fn absolute_mode_uses_unit_scales_everywhere() {
        let truth = Params::default();
        let y0 = default_initial_state();
        let times = fit_times();
        let data = generate_synthetic_with(
            &truth,
            &y0,
            &times,
            0.05,
            NoiseMode::Absolute,
            &DEFAULT_OBSERVED,
            9,
        )
        .unwrap();
        assert_eq!(data.scales, [1.0; 12]);
    }

    #[test]
    fn sse_is_zero_at_truth_and_positive_elsewhere() {
        let truth = Params::default();
        let y0 = default_initial_state();
        let times = fit_times();
        let clean = generate_synthetic(&truth, &y0, &times, 0.0, 1).unwrap();
        assert_eq!(sse(&truth, &clean, &y0), 0.0);

        let noisy = generate_synthetic(&truth, &y0, &times, 0.05, 1).unwrap();
        assert!(sse(&truth, &noisy, &y0) > 0.0);

        // A 10% bump in one transmission rate must be visible in the
        // zero-noise objective (local identifiability).
        let bumped = truth.with("tau1", truth.tau1 * 1.1).unwrap();
        let off = sse(&bumped, &clean, &y0);
        assert!(off > 1e-6, "sse {off} should clearly separate from 0");
    }

    #[test]
    fn sse_returns_infinity_when_integration_blows_up() {
        let truth = Params::default();
        let y0 = default_initial_state();
        let times = fit_times();
        let clean = generate_synthetic(&truth, &y0, &times, 0.0, 1).unwrap();
        let absurd = truth.with("tau1", 1e300).unwrap();
        assert_eq!(sse(&absurd, &clean, &y0), f64::INFINITY);
    }

    #[test]
    fn fit_recovers_tau1_from_a_doubled_start() {
        let truth = Params::default();
        let y0 = default_initial_state();
        let times = fit_times();
        let data = generate_synthetic(&truth, &y0, &times, 0.0, 0).unwrap();
        let init = truth.with("tau1", truth.tau1 * 2.0).unwrap();
        let result = fit(
            &data,
            &y0,
            &init,
            &["tau1"],
            &[(truth.tau1 / 10.0, truth.tau1 * 10.0)],
            &FitOptions::default(),
        )
        .unwrap();
        assert!(result.converged);
        assert_relative_eq!(
            result.estimate.tau1,
            truth.tau1,
            max_relative = 1e-3
        );
        assert!(result.sse <= sse(&init, &data, &y0));
    }

    #[test]
    fn fit_recovers_three_contact_rates_within_one_percent() {
        let truth = Params::default();
        let y0 = default_initial_state();
        let times = fit_times();
        let data = generate_synthetic(&truth, &y0, &times, 0.0, 0).unwrap();
        let free = ["tau1", "kappa1", "psi1"];
        let mut init = truth;
        let mut bounds = Vec::new();
        for name in free {
            let v = truth.get(name).unwrap();
            init.set(name, v * 1.5).unwrap();
            bounds.push((v / 10.0, v * 10.0));
        }
        let result =
            fit(&data, &y0, &init, &free, &bounds, &FitOptions::default())
                .unwrap();
        assert!(result.converged);
        for name in free {
            assert_relative_eq!(
                result.estimate.get(name).unwrap(),
                truth.get(name).unwrap(),
                max_relative = 1e-2
            );
        }
    }

    #[test]
    fn fit_started_at_the_optimum_stays_there() {
        let truth = Params::default();
        let y0 = default_initial_state();
        let times = fit_times();
        let data = generate_synthetic(&truth, &y0, &times, 0.0, 0).unwrap();
        let result = fit(
            &data,
            &y0,
            &truth,
            &["tau1"],
            &[(truth.tau1 / 10.0, truth.tau1 * 10.0)],
            &FitOptions::default(),
        )
        .unwrap();
        assert!(result.converged);
        assert!(result.sse <= 1e-12);
        assert_relative_eq!(
            result.estimate.tau1,
            truth.tau1,
            max_relative = 1e-6
        );
    }

    #[test]
    fn nelder_mead_trace_is_monotone_and_finds_a_quadratic_minimum() {
        let objective = |x: &[f64]| {
            (x[0] - 1.0) * (x[0] - 1.0) + 10.0 * (x[1] - 2.0) * (x[1] - 2.0)
        };
        let out = nelder_mead(objective, &[4.0, -3.0], 0.5, 2000);
        assert!(out.converged);
        assert_abs_diff_eq!(out.best_x[0], 1.0, epsilon = 1e-4);
        assert_abs_diff_eq!(out.best_x[1], 2.0, epsilon = 1e-4);
        for pair in out.trace_best.windows(2) {
            assert!(
                pair[1] <= pair[0],
                "best-so-far rose from {} to {}",
                pair[0],
                pair[1]
            );
        }
    }

    #[test]
    fn generate_then_fit_is_bit_reproducible() {
        let truth = Params::default();
        let y0 = default_initial_state();
        let times = fit_times();
        let init = truth.with("tau1", truth.tau1 * 1.3).unwrap();
        let bounds = [(truth.tau1 / 10.0, truth.tau1 * 10.0)];
        let run = || {
            let data =
                generate_synthetic(&truth, &y0, &times, 0.02, 5).unwrap();
            fit(&data, &y0, &init, &["tau1"], &bounds, &FitOptions::default())
                .unwrap()
        };
        let a = run();
        let b = run();
        assert_eq!(a.estimate.tau1.to_bits(), b.estimate.tau1.to_bits());
        assert_eq!(a.sse.to_bits(), b.sse.to_bits());
        assert_eq!(a.iterations, b.iterations);
    }

    #[test]
    fn zero_noise_confidence_intervals_sit_at_the_fd_noise_floor() {
        let truth = Params::default();
        let y0 = default_initial_state();
        let times = fit_times();
        let data = generate_synthetic(&truth, &y0, &times, 0.0, 0).unwrap();
        let init = truth.with("tau1", truth.tau1 * 1.5).unwrap();
        let result = fit(
            &data,
            &y0,
            &init,
            &["tau1"],
            &[(truth.tau1 / 10.0, truth.tau1 * 10.0)],
            &FitOptions::default(),
        )
        .unwrap();
        let half = confidence_intervals(&result, &data, &y0).unwrap();
        assert!(
            half[0] / truth.tau1 < 1e-4,
            "zero-noise half-width {} too wide",
            half[0]
        );
    }

    #[test]
    fn doubling_the_noise_roughly_doubles_the_half_widths() {
        let truth = Params::default();
        let y0 = default_initial_state();
        let times = fit_times();
        let bounds = [(truth.tau1 / 10.0, truth.tau1 * 10.0)];
        let init = truth.with("tau1", truth.tau1 * 1.2).unwrap();
        let mut widths = Vec::new();
        for noise in [0.02, 0.04] {
            let data =
                generate_synthetic(&truth, &y0, &times, noise, 17).unwrap();
            let result = fit(
                &data,
                &y0,
                &init,
                &["tau1"],
                &bounds,
                &FitOptions::default(),
            )
            .unwrap();
            widths
                .push(confidence_intervals(&result, &data, &y0).unwrap()[0]);
        }
        let ratio = widths[1] / widths[0];
        assert!(
            (1.4..=2.6).contains(&ratio),
            "half-width ratio {ratio} not ≈ 2"
        );
    }

    #[test]
    fn observations_at_time_zero_only_are_unidentifiable() {
        // At t = 0 the model output equals y0 for every parameter value, so
        // the residual Jacobian vanishes identically.
        let truth = Params::default();
        let y0 = default_initial_state();
        let data = generate_synthetic_with(
            &truth,
            &y0,
            &[0.0],
            0.0,
            NoiseMode::Scaled,
            &[0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11],
            0,
        )
        .unwrap();
        let handmade = FitResult {
            estimate: truth,
            free_names: vec!["tau1".to_string()],
            sse: 0.0,
            iterations: 0,
            converged: true,
            ci_half_widths: Vec::new(),
        };
        let err = confidence_intervals(&handmade, &data, &y0).unwrap_err();
        assert!(matches!(err, EstimationError::SingularInformation));
    }

    #[test]
    fn fit_validates_names_bounds_and_inits() {
        let truth = Params::default();
        let y0 = default_initial_state();
        let times = fit_times();
        let data = generate_synthetic(&truth, &y0, &times, 0.0, 0).unwrap();
        let opts = FitOptions::default();

        let err = fit(&data, &y0, &truth, &[], &[], &opts).unwrap_err();
        assert!(matches!(err, EstimationError::EmptyFreeSet));

        let err = fit(&data, &y0, &truth, &["bogus"], &[(0.1, 1.0)], &opts)
            .unwrap_err();
        assert!(matches!(err, EstimationError::UnknownParameter(n) if n == "bogus"));

        let err = fit(&data, &y0, &truth, &["tau1"], &[(0.0, 1.0)], &opts)
            .unwrap_err();
        assert!(matches!(err, EstimationError::InvalidBounds { .. }));

        let err = fit(&data, &y0, &truth, &["tau1"], &[(1.0, 0.5)], &opts)
            .unwrap_err();
        assert!(matches!(err, EstimationError::InvalidBounds { .. }));

        let err = fit(&data, &y0, &truth, &["tau1"], &[(1.0, 2.0)], &opts)
            .unwrap_err();
        assert!(matches!(err, EstimationError::InitOutsideBounds { .. }));
    }

    #[test]
    fn zero_iteration_budget_reports_no_improvement() {
        let truth = Params::default();
        let y0 = default_initial_state();
        let times = fit_times();
        let data = generate_synthetic(&truth, &y0, &times, 0.0, 0).unwrap();
        let init = truth.with("tau1", truth.tau1 * 2.0).unwrap();
        let opts = FitOptions {
            lm_polish: false,
            nm_max_iterations: 0,
        };
        let err = fit(
            &data,
            &y0,
            &init,
            &["tau1"],
            &[(truth.tau1 / 10.0, truth.tau1 * 10.0)],
            &opts,
        )
        .unwrap_err();
        assert!(matches!(err, EstimationError::NoImprovement { .. }));
    }
}

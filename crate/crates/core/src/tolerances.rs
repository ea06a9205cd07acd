//! Centralized numerical tolerances and iteration budgets.
//!
//! Every magic number that controls accuracy or termination lives here with
//! a rationale, so call sites never embed bare literals and tests can refer
//! to the same constants the implementation uses.

/// Default relative tolerance of the adaptive integrator. Tight enough that
/// trajectory anchors reproduce to ~9 significant digits over 100-year
/// horizons while keeping step counts in the low thousands.
pub const DEFAULT_RTOL: f64 = 1e-8;

/// Default absolute tolerance of the adaptive integrator. Compartments span
/// ~1e-3 (reservoir concentration) to ~1e5 (humans); 1e-8 keeps the error
/// weight meaningful at the small end without stalling the large end.
pub const DEFAULT_ATOL: f64 = 1e-8;

/// Default initial step in years. The fastest default-parameter time scale
/// is σ1 = 1/yr; 1e-3 yr resolves it comfortably and the controller grows
/// the step immediately when it can.
pub const DEFAULT_H_INIT: f64 = 1e-3;

/// Default step-attempt budget. Generous: a century of the default system
/// needs a few thousand accepted steps.
pub const DEFAULT_MAX_STEPS: usize = 1_000_000;

/// Step-size safety factor applied to every controller prediction.
pub const STEP_SAFETY: f64 = 0.9;

/// Lower clamp on the step-size change ratio per accepted/rejected step.
pub const STEP_FACTOR_MIN: f64 = 0.2;

/// Upper clamp on the step-size growth ratio per accepted step.
pub const STEP_FACTOR_MAX: f64 = 10.0;

/// Relative perturbation for the central-difference Jacobian of the model
/// right-hand side. sqrt(eps) ≈ 1.5e-8 is optimal for forward differences;
/// central differences tolerate the slightly larger 1e-7, trading a little
/// truncation error for much less cancellation.
pub const FD_JACOBIAN_RELSTEP: f64 = 1e-7;

/// Relative perturbation for finite-difference sensitivity indices. Central
/// differences on the smooth spectral radius lose ~2 digits to cancellation
/// at this step, leaving ~10 good digits — far inside the 1e-3 agreement
/// bar against the analytic route.
pub const SENSITIVITY_FD_RELSTEP: f64 = 1e-6;

/// Relative perturbation for the residual Jacobian in least-squares fitting.
pub const RESIDUAL_JACOBIAN_RELSTEP: f64 = 1e-6;

/// Iteration cap for the damped Newton equilibrium solver.
pub const NEWTON_MAX_ITERATIONS: usize = 200;

/// Maximum step halvings per damped Newton iteration; if no candidate
/// reduces the residual, the smallest one is taken anyway (the next
/// iteration's residual check still governs convergence).
pub const NEWTON_MAX_HALVINGS: usize = 10;

/// Default Newton residual tolerance as a fraction of the state scale
/// (largest compartment magnitude of the initial guess). Compartment sizes
/// span ~1e-2 to ~1e5, so an absolute tolerance makes no sense globally.
pub const NEWTON_DEFAULT_RELTOL: f64 = 1e-10;

/// Iteration cap for Nelder–Mead simplex optimization.
pub const NM_MAX_ITERATIONS: usize = 2000;

/// Nelder–Mead terminates when the simplex diameter (infinity norm over
/// vertex differences, in log-parameter space) falls below this.
pub const NM_DIAMETER_TOL: f64 = 1e-8;

/// Nelder–Mead also terminates when the function-value spread across the
/// simplex falls below `NM_SPREAD_TOL * (1 + |f_best|)`.
pub const NM_SPREAD_TOL: f64 = 1e-12;

/// Levenberg–Marquardt polish: initial damping factor.
pub const LM_LAMBDA_INIT: f64 = 1e-3;

/// Levenberg–Marquardt polish: iteration cap. The simplex already lands
/// near the optimum; a handful of Gauss–Newton-like steps finishes the job.
pub const LM_MAX_ITERATIONS: usize = 20;

/// Two-sided 95% normal quantile used for confidence half-widths.
pub const CI_Z_95: f64 = 1.96;

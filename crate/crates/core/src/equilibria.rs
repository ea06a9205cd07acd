//! Equilibrium points: the disease-free equilibrium in closed form, the
//! biologically invariant region's bounds, and a damped-Newton root finder
//! for the endemic equilibrium.
//!
//! The endemic equilibrium has no trustworthy closed form, so it is located
//! numerically: Newton iteration on `rhs = 0` with a finite-difference
//! Jacobian and residual-decrease backtracking. The intended initialization
//! is *simulate-then-polish* — integrate to a late time (say `t = 500`) and
//! hand the endpoint to [`find_endemic_equilibrium`] — which starts the
//! solver inside the basin where one or two undamped steps finish the job.

use thiserror::Error;

use crate::model::rhs;
use crate::params::Params;
use crate::stability::fd_jacobian;
use crate::state::{idx, StateVector};
use crate::tolerances::{
    FD_JACOBIAN_RELSTEP, NEWTON_MAX_HALVINGS, NEWTON_MAX_ITERATIONS,
};

/// Classification of a located equilibrium.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EquilibriumKind {
    /// All seven infected coordinates are exactly zero.
    DiseaseFree,
    /// At least one infected coordinate exceeds the solver tolerance.
    Endemic,
}

/// A located equilibrium with its verification data.
///
/// Invariants: `converged` implies `residual_norm` is below the tolerance
/// the solver was given, and `kind == DiseaseFree` implies every infected
/// coordinate of `state` is exactly `0.0`. A Newton root whose infected
/// coordinates are all within tolerance of zero is identified with the
/// disease-free point: the reported state is the exact closed-form DFE and
/// the residual is re-evaluated there.
#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumResult {
    pub state: StateVector,
    /// Euclidean norm of `rhs` at `state`.
    pub residual_norm: f64,
    pub kind: EquilibriumKind,
    pub converged: bool,
    /// Newton iterations used (0 for the closed-form DFE).
    pub iterations: usize,
}

/// Errors from the endemic root finder.
#[derive(Debug, Error, PartialEq)]
pub enum EquilibriumError {
    /// The iteration budget ran out before the residual fell below `tol`.
    #[error(
        "Newton did not converge in {iterations} iterations \
         (residual norm {residual_norm})"
    )]
    NoConvergence {
        iterations: usize,
        residual_norm: f64,
    },
    /// Newton converged to a point materially outside the non-negative
    /// orthant, which is not a biologically admissible equilibrium. The
    /// offending coordinate is reported rather than silently projected.
    #[error("equilibrium has negative coordinate {index} = {value}")]
    NegativeEquilibrium { index: usize, value: f64 },
}

/// Upper bounds of the invariant region: the three population ceilings
/// `θ/μ` and the reservoir ceiling fed by fully infectious populations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvariantBounds {
    pub n_h_max: f64,
    pub n_f_max: f64,
    pub n_d_max: f64,
    pub m_max: f64,
}

/// The invariant-region bounds. Populations starting below their ceiling
/// stay below it (total derivative `θ − μN − σI ≤ θ − μN`); the reservoir
/// bound follows by inserting the population ceilings into the shedding
/// terms: `m_max = (ν1·n_h_max + ν2·n_f_max + ν3·n_d_max)/μ4`.
pub fn invariant_bounds(p: &Params) -> InvariantBounds {
    let n_h_max = p.theta1 / p.mu1;
    let n_f_max = p.theta2 / p.mu2;
    let n_d_max = p.theta3 / p.mu3;
    InvariantBounds {
        n_h_max,
        n_f_max,
        n_d_max,
        m_max: (p.nu1 * n_h_max + p.nu2 * n_f_max + p.nu3 * n_d_max) / p.mu4,
    }
}

/// The disease-free equilibrium `(θ1/μ1, 0, 0, 0, θ2/μ2, 0, 0, θ3/μ3, 0,
/// 0, 0, 0)`, with its residual evaluated for verification.
pub fn disease_free_equilibrium(p: &Params) -> EquilibriumResult {
    let mut state = StateVector::zeros();
    state[idx::S_H] = p.theta1 / p.mu1;
    state[idx::S_F] = p.theta2 / p.mu2;
    state[idx::S_D] = p.theta3 / p.mu3;
    EquilibriumResult {
        residual_norm: rhs(0.0, &state, p).norm(),
        state,
        kind: EquilibriumKind::DiseaseFree,
        converged: true,
        iterations: 0,
    }
}

/// Finds an equilibrium by damped Newton iteration on `rhs = 0`, starting
/// from `guess`. Convergence means the Euclidean residual norm falls below
/// `tol`; each iteration backtracks (halving the step up to
/// [`NEWTON_MAX_HALVINGS`] times) until the residual decreases, taking the
/// smallest candidate if none does.
///
/// A converged root is classified [`EquilibriumKind::Endemic`] if any
/// infected coordinate exceeds `tol`; otherwise it is identified with the
/// disease-free point (see [`EquilibriumResult`]).
///
/// # Panics
///
/// Panics if `tol <= 0` or `guess` is not strictly positive.
///
/// # Errors
///
/// [`EquilibriumError::NoConvergence`] when the iteration budget is spent
/// or the Jacobian solve breaks down; [`EquilibriumError::NegativeEquilibrium`]
/// when the root has a meaningfully negative coordinate (below the negative
/// of the coarser of `tol` and machine resolution at the state's scale).
pub fn find_endemic_equilibrium(
    p: &Params,
    guess: &StateVector,
    tol: f64,
) -> Result<EquilibriumResult, EquilibriumError> {
    assert!(tol > 0.0, "tolerance must be positive");
    assert!(
        guess.iter().all(|&v| v > 0.0),
        "initial guess must be strictly positive"
    );

    let f = |y: &StateVector| rhs(0.0, y, p);
    let mut y = *guess;
    let mut residual = f(&y);
    let mut residual_norm = residual.norm();
    let mut iterations = 0;

    loop {
        if residual_norm < tol {
            break;
        }
        // A diverged iterate (overflow/NaN residual) can never converge;
        // report it rather than letting a NaN comparison end the loop.
        if !residual_norm.is_finite() || iterations >= NEWTON_MAX_ITERATIONS {
            return Err(EquilibriumError::NoConvergence {
                iterations,
                residual_norm,
            });
        }
        iterations += 1;

        let jac = fd_jacobian(&f, &y, FD_JACOBIAN_RELSTEP);
        let Some(delta) = jac.lu().solve(&(-residual)) else {
            return Err(EquilibriumError::NoConvergence {
                iterations,
                residual_norm,
            });
        };

        // Backtracking line search: accept the first step length that
        // reduces the residual norm, else the smallest one tried.
        let mut step = 1.0;
        let mut best = y + delta;
        let mut best_norm = f(&best).norm();
        for _ in 0..NEWTON_MAX_HALVINGS {
            if best_norm < residual_norm {
                break;
            }
            step *= 0.5;
            best = y + delta * step;
            best_norm = f(&best).norm();
        }
        y = best;
        residual = f(&y);
        residual_norm = residual.norm();
    }

    // Coordinates are judged against the coarser of the requested tolerance
    // and the floating-point resolution at this state's scale: a root driven
    // to a 1e-300 residual still carries O(eps·|y|) dust in coordinates that
    // are mathematically zero, and such dust is not a sign violation.
    let coord_floor = tol.max(f64::EPSILON * y.amax().max(1.0));
    for i in 0..12 {
        if y[i] < -coord_floor {
            return Err(EquilibriumError::NegativeEquilibrium {
                index: i,
                value: y[i],
            });
        }
    }

    let endemic = idx::INFECTED.iter().any(|&i| y[i] > coord_floor);
    if endemic {
        Ok(EquilibriumResult {
            state: y,
            residual_norm,
            kind: EquilibriumKind::Endemic,
            converged: true,
            iterations,
        })
    } else {
        // Sub-tolerance infected residue: this is the disease-free point.
        let mut dfe = disease_free_equilibrium(p);
        dfe.iterations = iterations;
        // Re-assert convergence against the residual at the reported state,
        // keeping the `converged ⇒ residual_norm < tol` invariant exact.
        dfe.converged = dfe.residual_norm < tol;
        Ok(dfe)
    }
}

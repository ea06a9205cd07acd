//! Forces of infection and the right-hand side of the 12-compartment
//! transmission model.
//!
//! The model couples three host settings — humans, free-range dogs, and
//! domestic dogs — through direct contact with infectious dogs and through
//! an environmental virus reservoir `M` whose infectivity saturates as
//! `λ(M) = M/(M+C)`. Domestic-dog exposure is damped by the dimensionless
//! deterrent coefficients `ρ1..3` (confinement, vaccination, supervision).
//!
//! All functions here are pure and allocation-free; [`rhs`] is the single
//! derivative evaluator shared by the integrator, the Jacobian builders,
//! and the fitting workflows.

use crate::params::Params;
use crate::state::{Compartments, StateVector};
use thiserror::Error;

/// Errors raised by the saturation function's domain checks.
#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    /// `environment_saturation` was called outside its domain.
    #[error("environment saturation requires m >= 0 and c > 0 (got m={m}, c={c})")]
    SaturationDomain { m: f64, c: f64 },
}

/// Saturating infectivity of the environmental reservoir: `m / (m + c)`.
///
/// `c` is the half-saturation concentration: the reservoir level at which
/// infectivity reaches one half. The result lies in `[0, 1)` for any finite
/// `m >= 0`.
///
/// # Errors
///
/// Returns [`ModelError::SaturationDomain`] if `m < 0` or `c <= 0`.
pub fn environment_saturation(m: f64, c: f64) -> Result<f64, ModelError> {
    if m < 0.0 || c <= 0.0 {
        return Err(ModelError::SaturationDomain { m, c });
    }
    Ok(m / (m + c))
}

/// Unchecked saturation for the derivative hot path. The integrator can
/// transiently probe states with tiny negative `m`; the rational form is
/// still finite and smooth there, so no domain check is applied.
#[inline]
fn saturation_raw(m: f64, c: f64) -> f64 {
    m / (m + c)
}

/// Force of infection on susceptible humans:
/// `(τ1·I_F + τ2·I_D + τ3·λ(M)) · S_H`.
#[inline]
pub fn foi_human(state: &StateVector, p: &Params) -> f64 {
    (p.tau1 * state.i_f() + p.tau2 * state.i_d()
        + p.tau3 * saturation_raw(state.m(), p.c))
        * state.s_h()
}

/// Force of infection on susceptible free-range dogs:
/// `(κ1·I_F + κ2·I_D + κ3·λ(M)) · S_F`.
#[inline]
pub fn foi_free_range(state: &StateVector, p: &Params) -> f64 {
    (p.kappa1 * state.i_f() + p.kappa2 * state.i_d()
        + p.kappa3 * saturation_raw(state.m(), p.c))
        * state.s_f()
}

/// Force of infection on susceptible domestic dogs, with each exposure route
/// damped by its deterrent coefficient:
/// `(ψ1·I_F/(1+ρ1) + ψ2·I_D/(1+ρ2) + ψ3·λ(M)/(1+ρ3)) · S_D`.
#[inline]
pub fn foi_domestic(state: &StateVector, p: &Params) -> f64 {
    (p.psi1 * state.i_f() / (1.0 + p.rho1)
        + p.psi2 * state.i_d() / (1.0 + p.rho2)
        + p.psi3 * saturation_raw(state.m(), p.c) / (1.0 + p.rho3))
        * state.s_d()
}

/// The twelve derivatives of the transmission model at `state`.
///
/// The system is autonomous, so `_t` is unused here; the signature keeps the
/// time argument so the same evaluator type serves the periodically forced
/// variant, where rates genuinely depend on `t`.
///
/// Compartment order matches [`crate::state::idx`]: humans
/// `(S_H, E_H, I_H, R_H)`, free-range dogs `(S_F, E_F, I_F)`, domestic dogs
/// `(S_D, E_D, I_D, R_D)`, then the environmental reservoir `M`.
pub fn rhs(_t: f64, state: &StateVector, p: &Params) -> StateVector {
    let chi1 = foi_human(state, p);
    let chi2 = foi_free_range(state, p);
    let chi3 = foi_domestic(state, p);

    StateVector::from_column_slice(&[
        // Humans: recruitment, infection, immunity loss from R_H, death.
        p.theta1 - chi1 + p.beta3 * state.r_h() - p.mu1 * state.s_h(),
        // Exposed humans leave by progression (β1), treatment (β2), death.
        chi1 - (p.mu1 + p.beta1 + p.beta2) * state.e_h(),
        p.beta1 * state.e_h() - (p.sigma1 + p.mu1) * state.i_h(),
        p.beta2 * state.e_h() - (p.beta3 + p.mu1) * state.r_h(),
        // Free-range dogs: no recovered class.
        p.theta2 - chi2 - p.mu2 * state.s_f(),
        chi2 - (p.mu2 + p.gamma) * state.e_f(),
        p.gamma * state.e_f() - (p.mu2 + p.sigma2) * state.i_f(),
        // Domestic dogs: recovered class with immunity loss γ3 back to S_D.
        p.theta3 - chi3 + p.gamma3 * state.r_d() - p.mu3 * state.s_d(),
        chi3 - (p.mu3 + p.gamma1 + p.gamma2) * state.e_d(),
        p.gamma1 * state.e_d() - (p.mu3 + p.sigma3) * state.i_d(),
        p.gamma2 * state.e_d() - (p.gamma3 + p.mu3) * state.r_d(),
        // Environmental reservoir: shedding from all infectious classes,
        // first-order decay.
        p.nu1 * state.i_h() + p.nu2 * state.i_f() + p.nu3 * state.i_d()
            - p.mu4 * state.m(),
    ])
}

/// Population totals `(N_H, N_F, N_D)` — the componentwise sums of the
/// human, free-range-dog, and domestic-dog compartments. The environmental
/// concentration `M` is not a population and is excluded.
pub fn population_totals(state: &StateVector) -> (f64, f64, f64) {
    let n_h = state.s_h() + state.e_h() + state.i_h() + state.r_h();
    let n_f = state.s_f() + state.e_f() + state.i_f();
    let n_d = state.s_d() + state.e_d() + state.i_d() + state.r_d();
    (n_h, n_f, n_d)
}

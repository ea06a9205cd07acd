//! One module per subcommand. Each `run` takes the resolved scenario (plus
//! its own arguments), computes everything up front, and writes artifacts
//! only after all computation has succeeded, so a failing run never leaves
//! a half-written artifact set behind.

pub mod fit;
pub mod r0;
pub mod sensitivity;
pub mod simulate;
pub mod stability;
pub mod sweep;

use anyhow::anyhow;

use rabies_dyn_core::{IntegratorError, Trajectory};

use crate::config::Scenario;
use crate::output::Meta;

/// The scenario's provenance stamp.
pub(crate) fn meta(scenario: &Scenario) -> Meta {
    Meta { seed: scenario.seed, mode_label: scenario.mode_label }
}

/// Converts an integration failure into a diagnostic that names the last
/// time the integrator completed successfully.
pub(crate) fn integration_error(err: IntegratorError) -> anyhow::Error {
    let (reason, t) = match err {
        IntegratorError::StepBudgetExceeded { t } => ("step budget exhausted", t),
        IntegratorError::NonFiniteState { t } => ("state became non-finite", t),
    };
    anyhow!("integration failed: {reason}; last completed time t = {t}")
}

/// Integrates the scenario (forced when configured, autonomous otherwise)
/// and records the state exactly at `times`.
pub(crate) fn integrate_scenario(
    scenario: &Scenario,
    times: &[f64],
) -> anyhow::Result<Trajectory> {
    use rabies_dyn_core::{forced_rhs, integrate_at, rhs};

    let result = match &scenario.forcing {
        Some(cfg) => integrate_at(
            forced_rhs(scenario.params, cfg.clone()),
            &scenario.y0,
            times,
            &scenario.integrator,
        ),
        None => integrate_at(
            |t, y| rhs(t, y, &scenario.params),
            &scenario.y0,
            times,
            &scenario.integrator,
        ),
    };
    result.map_err(integration_error)
}

//! Numerical core of a 12-compartment rabies transmission model spanning
//! humans, free-range dogs, domestic dogs, and an environmental virus
//! reservoir.
//!
//! # Capabilities
//!
//! * **Model** ([`model`], [`state`], [`params`]) — forces of infection,
//!   the full ODE right-hand side, population totals, and the Table-style
//!   default parameter set.
//! * **Integration** ([`integrator`]) — adaptive Dormand–Prince 5(4) with
//!   PI step control, exact-time sampling, and a fixed-step mode for order
//!   verification.
//! * **Reproduction number** ([`ngm`]) — next-generation matrix assembly
//!   (literal and environment-corrected variants), spectral-radius R0, and
//!   the closed-form R0 built from named matrix entries.
//! * **Sensitivity** ([`sensitivity`]) — normalized forward sensitivity
//!   indices of R0, by analytic differentiation of the closed form and by
//!   central finite differences on the spectral radius.
//! * **Equilibria & stability** ([`equilibria`], [`stability`]) — the
//!   disease-free point, numeric endemic root-finding, Jacobians,
//!   Routh–Hurwitz quartic checks, and eigenvalue-based classification.
//! * **Forcing** ([`forcing`]) — sinusoidal seasonal modulation of the
//!   transmission and shedding rates, plus the bite-incidence functional.
//! * **Estimation** ([`estimation`]) — synthetic noisy data generation,
//!   scaled least squares, Nelder–Mead with Levenberg–Marquardt polish, and
//!   95% confidence half-widths.
//!
//! Time is measured in years and rates per year throughout. The state
//! ordering is fixed by [`state::idx`] and shared by every matrix in the
//! crate.

pub mod equilibria;
pub mod estimation;
pub mod forcing;
pub mod integrator;
pub mod model;
pub mod ngm;
pub mod params;
pub mod sensitivity;
pub mod stability;
pub mod state;
pub mod tolerances;

pub use equilibria::{
    disease_free_equilibrium, find_endemic_equilibrium, invariant_bounds,
    EquilibriumError, EquilibriumKind, EquilibriumResult, InvariantBounds,
};
pub use estimation::{
    confidence_intervals, fit, generate_synthetic, generate_synthetic_with,
    sse, EstimationError, FitOptions, FitResult, NoiseMode, SyntheticDataset,
    DEFAULT_OBSERVED,
};
pub use forcing::{
    bite_incidence, forced_params, forced_rhs, modulation_factor,
    periodic_rate, ForcingConfig, ForcingError, FORCEABLE_RATES,
};
pub use integrator::{
    integrate_adaptive, integrate_at, integrate_fixed, IntegratorConfig,
    IntegratorError, Trajectory,
};
pub use model::{
    environment_saturation, foi_domestic, foi_free_range, foi_human,
    population_totals, rhs, ModelError,
};
pub use ngm::{
    build_f, build_v, next_generation_matrix, r0_closed_form, r_entries,
    spectral_radius, InfectedMatrix, NgmDecomposition, NgmError, R0Mode,
    REntries,
};
pub use params::{Params, ParamsError, CONTACT_RATE_NAMES, DEFAULT_PARAMS, PARAM_NAMES};
pub use sensitivity::{
    sensitivity_index, sensitivity_table, SensitivityEntry, SensitivityError,
    SensitivityMethod, SensitivityReport, TABLE_EXPECTED_SIGNS,
    TABLE_PARAMETERS,
};
pub use stability::{
    fd_jacobian, jacobian, local_dfe_stability, metzler_global_check,
    quartic_coefficients, reduced_quartic_block, routh_hurwitz_quartic,
    FullJacobian, MetzlerCheck, RhDetail, StabilityClass, StabilityReport,
};
pub use state::{
    default_initial_state, Compartments, StateVector, COMPARTMENT_LABELS,
};

//! State-space definition: the twelve-compartment state vector.
//!
//! The model tracks three host populations and an environmental reservoir:
//!
//! * humans: susceptible `S_H`, exposed `E_H`, infectious `I_H`, recovered `R_H`
//! * free-range dogs: `S_F`, `E_F`, `I_F`
//! * domestic dogs: `S_D`, `E_D`, `I_D`, `R_D`
//! * environment: virus concentration `M` (same units as the half-saturation
//!   constant `c` in [`crate::params::Params`])
//!
//! The state is stored as a fixed-order 12-vector; the ordering above is the
//! single canonical ordering shared by the right-hand side, the Jacobian, and
//! the next-generation-matrix modules. Use [`idx`] constants or the
//! [`Compartments`] accessors rather than raw integer literals.

use nalgebra::SVector;

/// Fixed-order 12-compartment state:
/// `(S_H, E_H, I_H, R_H, S_F, E_F, I_F, S_D, E_D, I_D, R_D, M)`.
pub type StateVector = SVector<f64, 12>;

/// Compartment positions within a [`StateVector`].
pub mod idx {
    /// Susceptible humans.
    pub const S_H: usize = 0;
    /// Exposed humans.
    pub const E_H: usize = 1;
    /// Infectious humans.
    pub const I_H: usize = 2;
    /// Recovered (temporarily immune) humans.
    pub const R_H: usize = 3;
    /// Susceptible free-range dogs.
    pub const S_F: usize = 4;
    /// Exposed free-range dogs.
    pub const E_F: usize = 5;
    /// Infectious free-range dogs.
    pub const I_F: usize = 6;
    /// Susceptible domestic dogs.
    pub const S_D: usize = 7;
    /// Exposed domestic dogs.
    pub const E_D: usize = 8;
    /// Infectious domestic dogs.
    pub const I_D: usize = 9;
    /// Recovered (vaccinated/immune) domestic dogs.
    pub const R_D: usize = 10;
    /// Environmental virus concentration.
    pub const M: usize = 11;

    /// The seven infected coordinates `(E_H, I_H, E_F, I_F, E_D, I_D, M)`,
    /// in the ordering used by the next-generation decomposition.
    pub const INFECTED: [usize; 7] = [E_H, I_H, E_F, I_F, E_D, I_D, M];

    /// The five uninfected coordinates `(S_H, R_H, S_F, S_D, R_D)`, in the
    /// ordering used by the global-stability decomposition.
    pub const UNINFECTED: [usize; 5] = [S_H, R_H, S_F, S_D, R_D];
}

/// Column labels in canonical order, as used by every CSV artifact.
pub const COMPARTMENT_LABELS: [&str; 12] = [
    "S_H", "E_H", "I_H", "R_H", "S_F", "E_F", "I_F", "S_D", "E_D", "I_D",
    "R_D", "M",
];

/// Named read access to the compartments of a [`StateVector`].
pub trait Compartments {
    fn s_h(&self) -> f64;
    fn e_h(&self) -> f64;
    fn i_h(&self) -> f64;
    fn r_h(&self) -> f64;
    fn s_f(&self) -> f64;
    fn e_f(&self) -> f64;
    fn i_f(&self) -> f64;
    fn s_d(&self) -> f64;
    fn e_d(&self) -> f64;
    fn i_d(&self) -> f64;
    fn r_d(&self) -> f64;
    fn m(&self) -> f64;
}

impl Compartments for StateVector {
    #[inline]
    fn s_h(&self) -> f64 {
        self[idx::S_H]
    }
    #[inline]
    fn e_h(&self) -> f64 {
        self[idx::E_H]
    }
    #[inline]
    fn i_h(&self) -> f64 {
        self[idx::I_H]
    }
    #[inline]
    fn r_h(&self) -> f64 {
        self[idx::R_H]
    }
    #[inline]
    fn s_f(&self) -> f64 {
        self[idx::S_F]
    }
    #[inline]
    fn e_f(&self) -> f64 {
        self[idx::E_F]
    }
    #[inline]
    fn i_f(&self) -> f64 {
        self[idx::I_F]
    }
    #[inline]
    fn s_d(&self) -> f64 {
        self[idx::S_D]
    }
    #[inline]
    fn e_d(&self) -> f64 {
        self[idx::E_D]
    }
    #[inline]
    fn i_d(&self) -> f64 {
        self[idx::I_D]
    }
    #[inline]
    fn r_d(&self) -> f64 {
        self[idx::R_D]
    }
    #[inline]
    fn m(&self) -> f64 {
        self[idx::M]
    }
}

/// Default initial condition used by the simulation and fitting scenarios:
/// a large, mostly susceptible human population, two dog populations with
/// small exposed seeds, and a low environmental virus load.
///
/// `(S_H, E_H, I_H, R_H) = (142000, 40, 0, 0)`,
/// `(S_F, E_F, I_F) = (12500, 20, 0)`,
/// `(S_D, E_D, I_D, R_D) = (15000, 25, 0, 0)`, `M = 90`.
pub fn default_initial_state() -> StateVector {
    StateVector::from([
        142000.0, 40.0, 0.0, 0.0, 12500.0, 20.0, 0.0, 15000.0, 25.0, 0.0,
        0.0, 90.0,
    ])
}

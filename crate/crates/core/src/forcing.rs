//! Time-periodic modulation of transmission and shedding rates.
//!
//! Seasonal control campaigns, climate, and host behaviour all impose a
//! roughly periodic rhythm on contact and shedding intensities. This module
//! models that rhythm as a sinusoidal factor `1 + A·sin(2πt/T + φ)` applied
//! multiplicatively to a chosen subset of the transmission rates
//! (`tau1..3`, `kappa1..3`, `psi1..3`) and shedding rates (`nu1..3`), and
//! provides the matching bite-incidence functional.
//!
//! Keeping the amplitude `A` within `[0, 1]` guarantees the modulated rates
//! never go negative, so every positivity argument for the autonomous system
//! carries over to the forced one unchanged.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::rhs;
use crate::params::Params;
use crate::state::StateVector;

/// Rate names that may be targeted by periodic forcing: the nine contact
/// rates and the three environmental shedding rates.
pub const FORCEABLE_RATES: [&str; 12] = [
    "tau1", "tau2", "tau3", "kappa1", "kappa2", "kappa3", "psi1", "psi2",
    "psi3", "nu1", "nu2", "nu3",
];

/// Configuration failures detected when building a [`ForcingConfig`].
#[derive(Debug, Error, PartialEq)]
pub enum ForcingError {
    /// Amplitude outside `[0, 1]`: values above 1 would drive rates negative.
    #[error("forcing amplitude {0} is outside [0, 1]")]
    InvalidAmplitude(f64),
    /// Period must be a positive, finite number of years.
    #[error("forcing period {0} is not a positive finite number")]
    InvalidPeriod(f64),
    /// Phase must be finite (any real number of radians is acceptable).
    #[error("forcing phase {0} is not finite")]
    NonFinitePhase(f64),
    /// Target name not in [`FORCEABLE_RATES`].
    #[error("unknown forcing target `{0}`; expected one of tau1..3, kappa1..3, psi1..3, nu1..3")]
    UnknownTarget(String),
}

fn default_period() -> f64 {
    10.0
}

fn default_targets() -> Vec<String> {
    FORCEABLE_RATES.iter().map(|s| s.to_string()).collect()
}

/// Mirror of [`ForcingConfig`] used to validate deserialized input.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawForcingConfig {
    amplitude: f64,
    #[serde(default = "default_period")]
    period: f64,
    #[serde(default)]
    phase: f64,
    #[serde(default = "default_targets")]
    targets: Vec<String>,
}

/// A validated sinusoidal forcing scenario.
///
/// The modulation factor is `1 + amplitude·sin(2π·t/period + phase)` and is
/// applied multiplicatively to every rate named in `targets`. Construction
/// (directly or through deserialization) enforces `amplitude ∈ [0, 1]`,
/// `period > 0`, a finite phase, and recognised target names, so a value of
/// this type is always safe to evaluate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawForcingConfig")]
pub struct ForcingConfig {
    amplitude: f64,
    period: f64,
    phase: f64,
    targets: BTreeSet<String>,
}

impl TryFrom<RawForcingConfig> for ForcingConfig {
    type Error = ForcingError;

    fn try_from(raw: RawForcingConfig) -> Result<Self, ForcingError> {
        let targets: Vec<&str> = raw.targets.iter().map(String::as_str).collect();
        ForcingConfig::new(raw.amplitude, raw.period, raw.phase, &targets)
    }
}

impl Default for ForcingConfig {
    /// A mid-strength scenario forcing all twelve rates over a ten-year
    /// cycle with zero phase offset.
    fn default() -> Self {
        Self::all_rates(0.25, 10.0, 0.0)
            .expect("built-in default forcing configuration is valid")
    }
}

impl ForcingConfig {
    /// Builds a validated configuration.
    ///
    /// Duplicate target names are collapsed; order is irrelevant.
    ///
    /// # Errors
    ///
    /// [`ForcingError::InvalidAmplitude`] unless `amplitude ∈ [0, 1]`,
    /// [`ForcingError::InvalidPeriod`] unless `period` is positive and
    /// finite, [`ForcingError::NonFinitePhase`] for NaN/infinite phase, and
    /// [`ForcingError::UnknownTarget`] for a name outside
    /// [`FORCEABLE_RATES`].
    pub fn new(
        amplitude: f64,
        period: f64,
        phase: f64,
        targets: &[&str],
    ) -> Result<Self, ForcingError> {
        if !(0.0..=1.0).contains(&amplitude) {
            return Err(ForcingError::InvalidAmplitude(amplitude));
        }
        if !(period.is_finite() && period > 0.0) {
            return Err(ForcingError::InvalidPeriod(period));
        }
        if !phase.is_finite() {
            return Err(ForcingError::NonFinitePhase(phase));
        }
        let mut set = BTreeSet::new();
        for &name in targets {
            if !FORCEABLE_RATES.contains(&name) {
                return Err(ForcingError::UnknownTarget(name.to_string()));
            }
            set.insert(name.to_string());
        }
        Ok(Self {
            amplitude,
            period,
            phase,
            targets: set,
        })
    }

    /// Convenience constructor targeting all twelve forceable rates.
    ///
    /// # Errors
    ///
    /// Same validation as [`ForcingConfig::new`].
    pub fn all_rates(
        amplitude: f64,
        period: f64,
        phase: f64,
    ) -> Result<Self, ForcingError> {
        Self::new(amplitude, period, phase, &FORCEABLE_RATES)
    }

    /// Dimensionless amplitude `A ∈ [0, 1]`.
    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    /// Cycle length in years.
    pub fn period(&self) -> f64 {
        self.period
    }

    /// Phase offset in radians.
    pub fn phase(&self) -> f64 {
        self.phase
    }

    /// The targeted rate names, in canonical (sorted) order.
    pub fn targets(&self) -> &BTreeSet<String> {
        &self.targets
    }

    /// Which entries of [`FORCEABLE_RATES`] are targeted, index-aligned.
    pub fn target_mask(&self) -> [bool; 12] {
        let mut mask = [false; 12];
        for (slot, name) in mask.iter_mut().zip(FORCEABLE_RATES.iter()) {
            *slot = self.targets.contains(*name);
        }
        mask
    }

    /// The modulation factor `1 + A·sin(2π·t/T + φ)` at time `t`.
    ///
    /// Evaluated through [`modulation_factor`], so whole-period shifts of
    /// `t` reproduce the factor to machine precision even after many cycles.
    pub fn factor_at(&self, t: f64) -> f64 {
        modulation_factor(self.amplitude, t / self.period, self.phase)
    }
}

/// The shared sinusoidal factor `1 + amplitude·sin(2π·cycles + phase)`.
///
/// `cycles` counts elapsed periods (`t/T` for rate forcing, the dimensionless
/// frequency argument for bite incidence). Only the fractional part of
/// `cycles` enters the angle, which keeps the argument of `sin` small: the
/// factor at `cycles` and at `cycles + 1` then agrees to machine precision
/// however many periods have elapsed, instead of degrading as the raw angle
/// grows.
///
/// With `amplitude = 0` the factor is exactly `1.0`.
pub fn modulation_factor(amplitude: f64, cycles: f64, phase: f64) -> f64 {
    let angle = std::f64::consts::TAU * cycles.fract() + phase;
    1.0 + amplitude * angle.sin()
}

/// A rate under periodic forcing: `mean·(1 + A·sin(2πt/T + φ))`.
///
/// Expects `mean ≥ 0`; with a validated [`ForcingConfig`] the result is then
/// non-negative for all `t`. With `cfg.amplitude == 0` the mean is returned
/// bit-for-bit.
pub fn periodic_rate(mean: f64, cfg: &ForcingConfig, t: f64) -> f64 {
    mean * cfg.factor_at(t)
}

/// Bite incidence under seasonal modulation:
/// `beta_mean·(1 + A·sin(2πf + φ))·s·i`.
///
/// `f` is the dimensionless cycle fraction (elapsed time over period), `s`
/// the susceptible count, and `i` the infectious count. All arguments are
/// expected non-negative with `a ≤ 1`, under which the incidence is
/// non-negative.
pub fn bite_incidence(
    beta_mean: f64,
    a: f64,
    f: f64,
    phi: f64,
    s: f64,
    i: f64,
) -> f64 {
    beta_mean * modulation_factor(a, f, phi) * s * i
}

/// The parameter set with every targeted rate modulated for time `t`.
///
/// Untargeted fields are copied bit-for-bit from `base`.
pub fn forced_params(base: &Params, cfg: &ForcingConfig, t: f64) -> Params {
    forced_params_masked(base, &cfg.target_mask(), cfg.factor_at(t))
}

/// Applies `factor` to the rates selected by `mask` (aligned with
/// [`FORCEABLE_RATES`]). Split out so the hot path in [`forced_rhs`] can
/// compute the mask once per closure rather than once per evaluation.
fn forced_params_masked(base: &Params, mask: &[bool; 12], factor: f64) -> Params {
    let mut p = *base;
    if mask[0] {
        p.tau1 *= factor;
    }
    if mask[1] {
        p.tau2 *= factor;
    }
    if mask[2] {
        p.tau3 *= factor;
    }
    if mask[3] {
        p.kappa1 *= factor;
    }
    if mask[4] {
        p.kappa2 *= factor;
    }
    if mask[5] {
        p.kappa3 *= factor;
    }
    if mask[6] {
        p.psi1 *= factor;
    }
    if mask[7] {
        p.psi2 *= factor;
    }
    if mask[8] {
        p.psi3 *= factor;
    }
    if mask[9] {
        p.nu1 *= factor;
    }
    if mask[10] {
        p.nu2 *= factor;
    }
    if mask[11] {
        p.nu3 *= factor;
    }
    p
}

/// Builds the time-dependent right-hand side of the forced system.
///
/// The returned closure is identical to [`rhs`] except that every targeted
/// rate is replaced by its periodically modulated value at evaluation time.
/// With `amplitude == 0` or an empty target set, the closure reproduces the
/// autonomous right-hand side bit-for-bit.
pub fn forced_rhs(
    base: Params,
    cfg: ForcingConfig,
) -> impl Fn(f64, &StateVector) -> StateVector {
    let mask = cfg.target_mask();
    move |t, y| {
        let p = forced_params_masked(&base, &mask, cfg.factor_at(t));
        rhs(t, y, &p)
    }
}

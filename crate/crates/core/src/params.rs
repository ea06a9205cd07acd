//! Model parameters: rates, deterrent coefficients, and the environmental
//! saturation constant, with a fully populated default set.
//!
//! All rates are per year; the time unit throughout the crate is years.
//! Parameters are serializable to and from a flat key-value document using
//! the symbol names below as keys (`theta1`, `tau1`, ..., `c`); unknown keys
//! are hard errors so that typos in 32-parameter configs fail fast.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors raised by parameter validation and name-keyed access.
#[derive(Debug, Error, PartialEq)]
pub enum ParamsError {
    /// A name-keyed lookup or override used a name that is not a parameter.
    #[error("unknown parameter name `{0}`")]
    UnknownParameter(String),
    /// A parameter value violates its domain constraint.
    #[error("invalid value for `{name}`: {value} ({requirement})")]
    InvalidValue {
        name: &'static str,
        value: f64,
        requirement: &'static str,
    },
}

/// Full parameter set of the transmission model.
///
/// Naming convention (all rates per year):
///
/// * `theta1..3`: recruitment into humans, free-range dogs, domestic dogs
/// * `tau1..3`: human infection contact rates (from `I_F`, `I_D`, environment)
/// * `kappa1..3`: free-range-dog contact rates (same three sources)
/// * `psi1..3`: domestic-dog contact rates (same three sources)
/// * `beta1`, `beta2`, `beta3`: human progression, recovery (post-exposure
///   treatment), and immunity-loss rates
/// * `gamma`: free-range-dog progression rate
/// * `gamma1..3`: domestic-dog progression, recovery, and immunity-loss rates
/// * `mu1..4`: natural death/removal rates (humans, free-range dogs,
///   domestic dogs, environment)
/// * `sigma1..3`: disease-induced death rates
/// * `nu1..3`: environmental virus shedding rates from `I_H`, `I_F`, `I_D`
/// * `rho1..3`: dimensionless deterrent coefficients damping domestic-dog
///   exposure
/// * `c`: environmental half-saturation concentration (same units as `M`)
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    pub theta1: f64,
    pub tau1: f64,
    pub tau2: f64,
    pub tau3: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub beta3: f64,
    pub mu1: f64,
    pub sigma1: f64,
    pub theta2: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    pub kappa3: f64,
    pub gamma: f64,
    pub sigma2: f64,
    pub mu2: f64,
    pub theta3: f64,
    pub psi1: f64,
    pub psi2: f64,
    pub psi3: f64,
    pub mu3: f64,
    pub sigma3: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub gamma3: f64,
    pub nu1: f64,
    pub nu2: f64,
    pub nu3: f64,
    pub mu4: f64,
    pub rho1: f64,
    pub rho2: f64,
    pub rho3: f64,
    pub c: f64,
}

/// The default parameter set. Ranged literature entries default to their
/// lower bound (`tau3 = 0.0003`, `beta2 = 0.54`, `kappa3 = 0.00001`) so that
/// the default configuration is a single deterministic point.
pub const DEFAULT_PARAMS: Params = Params {
    theta1: 2000.0,
    tau1: 0.0004,
    tau2: 0.0004,
    tau3: 0.0003,
    beta1: 1.0 / 6.0,
    beta2: 0.54,
    beta3: 1.0,
    mu1: 0.0142,
    sigma1: 1.0,
    theta2: 1000.0,
    kappa1: 0.00006,
    kappa2: 0.00005,
    kappa3: 0.00001,
    gamma: 1.0 / 6.0,
    sigma2: 0.09,
    mu2: 0.067,
    theta3: 1200.0,
    psi1: 0.0004,
    psi2: 0.0004,
    psi3: 0.0003,
    mu3: 0.067,
    sigma3: 0.08,
    gamma1: 1.0 / 6.0,
    gamma2: 0.09,
    gamma3: 0.05,
    nu1: 0.001,
    nu2: 0.006,
    nu3: 0.001,
    mu4: 0.08,
    rho1: 10.0,
    rho2: 8.0,
    rho3: 15.0,
    c: 0.003,
};

impl Default for Params {
    fn default() -> Self {
        DEFAULT_PARAMS
    }
}

/// All parameter names, in declaration order. This is the canonical key set
/// for flat key-value serialization and `--set` style overrides.
pub const PARAM_NAMES: [&str; 33] = [
    "theta1", "tau1", "tau2", "tau3", "beta1", "beta2", "beta3", "mu1",
    "sigma1", "theta2", "kappa1", "kappa2", "kappa3", "gamma", "sigma2",
    "mu2", "theta3", "psi1", "psi2", "psi3", "mu3", "sigma3", "gamma1",
    "gamma2", "gamma3", "nu1", "nu2", "nu3", "mu4", "rho1", "rho2", "rho3",
    "c",
];

/// The nine direct-contact transmission rates (excludes the shedding rates
/// `nu1..3`, which feed the environment rather than hosts).
pub const CONTACT_RATE_NAMES: [&str; 9] = [
    "tau1", "tau2", "tau3", "kappa1", "kappa2", "kappa3", "psi1", "psi2",
    "psi3",
];

impl Params {
    /// Checks the domain constraints: `mu1..4 > 0`, `c > 0`, everything else
    /// finite and `>= 0`.
    pub fn validate(&self) -> Result<(), ParamsError> {
        for name in PARAM_NAMES {
            let value = self.get(name).expect("names enumerate all fields");
            if !value.is_finite() {
                return Err(ParamsError::InvalidValue {
                    name: canonical_name(name),
                    value,
                    requirement: "must be finite",
                });
            }
        }
        for name in ["mu1", "mu2", "mu3", "mu4", "c"] {
            let value = self.get(name).unwrap();
            if value <= 0.0 {
                return Err(ParamsError::InvalidValue {
                    name: canonical_name(name),
                    value,
                    requirement: "must be > 0",
                });
            }
        }
        for name in PARAM_NAMES {
            let value = self.get(name).unwrap();
            if value < 0.0 {
                return Err(ParamsError::InvalidValue {
                    name: canonical_name(name),
                    value,
                    requirement: "must be >= 0",
                });
            }
        }
        Ok(())
    }

    /// Reads a parameter by symbol name. Returns `None` for unknown names.
    pub fn get(&self, name: &str) -> Option<f64> {
        Some(match name {
            "theta1" => self.theta1,
            "tau1" => self.tau1,
            "tau2" => self.tau2,
            "tau3" => self.tau3,
            "beta1" => self.beta1,
            "beta2" => self.beta2,
            "beta3" => self.beta3,
            "mu1" => self.mu1,
            "sigma1" => self.sigma1,
            "theta2" => self.theta2,
            "kappa1" => self.kappa1,
            "kappa2" => self.kappa2,
            "kappa3" => self.kappa3,
            "gamma" => self.gamma,
            "sigma2" => self.sigma2,
            "mu2" => self.mu2,
            "theta3" => self.theta3,
            "psi1" => self.psi1,
            "psi2" => self.psi2,
            "psi3" => self.psi3,
            "mu3" => self.mu3,
            "sigma3" => self.sigma3,
            "gamma1" => self.gamma1,
            "gamma2" => self.gamma2,
            "gamma3" => self.gamma3,
            "nu1" => self.nu1,
            "nu2" => self.nu2,
            "nu3" => self.nu3,
            "mu4" => self.mu4,
            "rho1" => self.rho1,
            "rho2" => self.rho2,
            "rho3" => self.rho3,
            "c" => self.c,
            _ => return None,
        })
    }

    /// Writes a parameter by symbol name.
    pub fn set(&mut self, name: &str, value: f64) -> Result<(), ParamsError> {
        let slot: &mut f64 = match name {
            "theta1" => &mut self.theta1,
            "tau1" => &mut self.tau1,
            "tau2" => &mut self.tau2,
            "tau3" => &mut self.tau3,
            "beta1" => &mut self.beta1,
            "beta2" => &mut self.beta2,
            "beta3" => &mut self.beta3,
            "mu1" => &mut self.mu1,
            "sigma1" => &mut self.sigma1,
            "theta2" => &mut self.theta2,
            "kappa1" => &mut self.kappa1,
            "kappa2" => &mut self.kappa2,
            "kappa3" => &mut self.kappa3,
            "gamma" => &mut self.gamma,
            "sigma2" => &mut self.sigma2,
            "mu2" => &mut self.mu2,
            "theta3" => &mut self.theta3,
            "psi1" => &mut self.psi1,
            "psi2" => &mut self.psi2,
            "psi3" => &mut self.psi3,
            "mu3" => &mut self.mu3,
            "sigma3" => &mut self.sigma3,
            "gamma1" => &mut self.gamma1,
            "gamma2" => &mut self.gamma2,
            "gamma3" => &mut self.gamma3,
            "nu1" => &mut self.nu1,
            "nu2" => &mut self.nu2,
            "nu3" => &mut self.nu3,
            "mu4" => &mut self.mu4,
            "rho1" => &mut self.rho1,
            "rho2" => &mut self.rho2,
            "rho3" => &mut self.rho3,
            "c" => &mut self.c,
            _ => return Err(ParamsError::UnknownParameter(name.to_string())),
        };
        *slot = value;
        Ok(())
    }

    /// Returns a copy with one parameter replaced.
    pub fn with(&self, name: &str, value: f64) -> Result<Self, ParamsError> {
        let mut out = *self;
        out.set(name, value)?;
        Ok(out)
    }

    /// Returns a copy with all nine contact rates multiplied by `scale`.
    pub fn with_scaled_contact_rates(&self, scale: f64) -> Self {
        let mut out = *self;
        for name in CONTACT_RATE_NAMES {
            let v = out.get(name).unwrap();
            out.set(name, v * scale).unwrap();
        }
        out
    }
}

/// Maps a known name to its `'static` canonical spelling (for error values).
fn canonical_name(name: &str) -> &'static str {
    PARAM_NAMES
        .iter()
        .find(|&&n| n == name)
        .copied()
        .unwrap_or("?")
}

//! Normalized forward sensitivity indices of the basic reproduction number.
//!
//! The index of a parameter `π` is the elasticity `(∂R0/∂π)·(π/R0)`: the
//! fractional change in R0 per fractional change in `π`. Two independent
//! routes are provided and cross-checked in tests:
//!
//! * **Analytic** — differentiates the closed-form R0 through the chain
//!   rule. R0 depends on the four dog–dog entries `(R33, R35, R53, R55)`;
//!   each entry is a product/quotient of parameters, so its log-derivative
//!   (elasticity) is a short sum of rational terms, and the index is the
//!   weighted sum of entry elasticities with weights
//!   `w = (∂R0/∂R_entry)·(R_entry/R0)`.
//! * **Central finite differences** — perturbs the parameter by a relative
//!   step of [`crate::tolerances::SENSITIVITY_FD_RELSTEP`] in each
//!   direction and differences the spectral radius of the
//!   [`R0Mode::PaperLiteral`] next-generation matrix.
//!
//! Since the spectral radius equals the closed form, the two routes measure
//! the same quantity and must agree to within finite-difference error.

use thiserror::Error;

use crate::ngm::{next_generation_matrix, r0_closed_form, r_entries, NgmError, R0Mode};
use crate::params::Params;
use crate::tolerances::SENSITIVITY_FD_RELSTEP;

/// Which differentiation route to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SensitivityMethod {
    /// Exact differentiation of the closed-form R0.
    AnalyticClosedForm,
    /// Central finite differences on the spectral radius.
    CentralFiniteDifference,
}

/// Errors raised by sensitivity computation.
#[derive(Debug, Error, PartialEq)]
pub enum SensitivityError {
    /// The requested name is not a model parameter.
    #[error("unknown parameter name `{0}`")]
    UnknownParameter(String),
    /// The normalized index `(∂R0/∂π)·(π/R0)` is undefined at `π = 0`.
    #[error("sensitivity index of `{name}` is undefined at value 0")]
    ZeroParameter { name: String },
    /// The normalized index is undefined when R0 = 0.
    #[error("sensitivity index undefined: R0 is zero")]
    ZeroR0,
    /// The underlying matrix computation failed.
    #[error(transparent)]
    Ngm(#[from] NgmError),
}

/// One row of a sensitivity report.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensitivityEntry {
    pub name: &'static str,
    pub index: f64,
}

/// Indices for the fourteen tabulated parameters, in [`TABLE_PARAMETERS`]
/// order, all computed with the same method.
#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityReport {
    pub method: SensitivityMethod,
    pub entries: Vec<SensitivityEntry>,
}

/// The fourteen parameters of the standard sensitivity table, in reporting
/// order.
pub const TABLE_PARAMETERS: [&str; 14] = [
    "gamma1", "psi1", "gamma2", "psi2", "kappa1", "kappa2", "mu2", "rho1",
    "mu3", "rho2", "sigma2", "sigma3", "theta2", "theta3",
];

/// Anticipated sign of each [`TABLE_PARAMETERS`] index at the default
/// parameter set: `+1` for transmission and recruitment parameters, `-1`
/// for removal, mortality, and deterrence parameters. Progression rates
/// (`gamma1`) are listed as negative here; the computed index can disagree
/// in sign for a progression rate, because faster progression both supplies
/// infectious individuals sooner and shortens the exposed stage, and the
/// net direction depends on the surrounding rates. Reporting layers compare
/// computed signs against this list and flag mismatches rather than assume
/// agreement.
pub const TABLE_EXPECTED_SIGNS: [i8; 14] =
    [-1, 1, -1, 1, 1, 1, -1, -1, -1, -1, -1, -1, 1, 1];

// Elasticities of the four closed-form entries with respect to a parameter.
// Writing a_f = mu2+gamma, b_f = mu2+sigma2, a_d = mu3+gamma1+gamma2,
// b_d = mu3+sigma3:
//   R33 = kappa1·theta2·gamma / (mu2·a_f·b_f)
//   R35 = kappa2·theta2·gamma1 / (mu2·a_d·b_d)
//   R53 = psi1·theta3·gamma / ((1+rho1)·mu3·a_f·b_f)
//   R55 = psi2·theta3·gamma1 / ((1+rho2)·mu3·a_d·b_d)
// Each function returns ∂ln(R_entry)/∂ln(π), zero when π is absent.

fn elasticity_r33(p: &Params, name: &str) -> f64 {
    let a_f = p.mu2 + p.gamma;
    let b_f = p.mu2 + p.sigma2;
    match name {
        "kappa1" | "theta2" => 1.0,
        "gamma" => 1.0 - p.gamma / a_f,
        "mu2" => -1.0 - p.mu2 / a_f - p.mu2 / b_f,
        "sigma2" => -p.sigma2 / b_f,
        _ => 0.0,
    }
}

fn elasticity_r35(p: &Params, name: &str) -> f64 {
    let a_d = p.mu3 + p.gamma1 + p.gamma2;
    let b_d = p.mu3 + p.sigma3;
    match name {
        "kappa2" | "theta2" => 1.0,
        "gamma1" => 1.0 - p.gamma1 / a_d,
        "gamma2" => -p.gamma2 / a_d,
        "mu2" => -1.0,
        "mu3" => -p.mu3 / a_d - p.mu3 / b_d,
        "sigma3" => -p.sigma3 / b_d,
        _ => 0.0,
    }
}

fn elasticity_r53(p: &Params, name: &str) -> f64 {
    let a_f = p.mu2 + p.gamma;
    let b_f = p.mu2 + p.sigma2;
    match name {
        "psi1" | "theta3" => 1.0,
        "gamma" => 1.0 - p.gamma / a_f,
        "rho1" => -p.rho1 / (1.0 + p.rho1),
        "mu3" => -1.0,
        "mu2" => -p.mu2 / a_f - p.mu2 / b_f,
        "sigma2" => -p.sigma2 / b_f,
        _ => 0.0,
    }
}

fn elasticity_r55(p: &Params, name: &str) -> f64 {
    let a_d = p.mu3 + p.gamma1 + p.gamma2;
    let b_d = p.mu3 + p.sigma3;
    match name {
        "psi2" | "theta3" => 1.0,
        "gamma1" => 1.0 - p.gamma1 / a_d,
        "gamma2" => -p.gamma2 / a_d,
        "rho2" => -p.rho2 / (1.0 + p.rho2),
        "mu3" => -1.0 - p.mu3 / a_d - p.mu3 / b_d,
        "sigma3" => -p.sigma3 / b_d,
        _ => 0.0,
    }
}

fn analytic_index(p: &Params, name: &str) -> Result<f64, SensitivityError> {
    let r = r_entries(p);
    let r0 = r0_closed_form(p)?;
    if r0 == 0.0 {
        return Err(SensitivityError::ZeroR0);
    }
    let diff = r.r33 - r.r55;
    let s = (diff * diff + 4.0 * r.r35 * r.r53).sqrt();
    // Directional derivatives of R0 with respect to the four entries. At
    // s = 0 (equal diagonal, no coupling) R0 = R33 = R55 and the symmetric
    // split is the natural limit.
    let (d33, d55, d35, d53) = if s > 0.0 {
        (
            (1.0 + diff / s) / 2.0,
            (1.0 - diff / s) / 2.0,
            r.r53 / s,
            r.r35 / s,
        )
    } else {
        (0.5, 0.5, 0.0, 0.0)
    };
    // Entry weights w = (∂R0/∂R)·(R/R0); a zero entry contributes nothing
    // regardless of its directional derivative.
    let weight = |d: f64, entry: f64| if entry == 0.0 { 0.0 } else { d * entry / r0 };
    Ok(weight(d33, r.r33) * elasticity_r33(p, name)
        + weight(d35, r.r35) * elasticity_r35(p, name)
        + weight(d53, r.r53) * elasticity_r53(p, name)
        + weight(d55, r.r55) * elasticity_r55(p, name))
}

fn finite_difference_index(
    p: &Params,
    name: &str,
    value: f64,
) -> Result<f64, SensitivityError> {
    let r0 = next_generation_matrix(p, R0Mode::PaperLiteral)?.r0;
    if r0 == 0.0 {
        return Err(SensitivityError::ZeroR0);
    }
    let h = SENSITIVITY_FD_RELSTEP * value;
    let radius = |v: f64| -> Result<f64, SensitivityError> {
        let q = p.with(name, v).expect("name validated by caller");
        Ok(next_generation_matrix(&q, R0Mode::PaperLiteral)?.r0)
    };
    let plus = radius(value + h)?;
    let minus = radius(value - h)?;
    Ok((plus - minus) / (2.0 * h) * value / r0)
}

/// Normalized forward sensitivity index `(∂R0/∂π)·(π/R0)` of the parameter
/// `name`, by the chosen method. Parameters absent from the closed form
/// (for example `tau1`) have index exactly zero.
///
/// # Errors
///
/// [`SensitivityError::UnknownParameter`] for a non-parameter name;
/// [`SensitivityError::ZeroParameter`] when the parameter value is zero
/// (the relative index is undefined there); [`SensitivityError::ZeroR0`]
/// when R0 vanishes.
pub fn sensitivity_index(
    p: &Params,
    name: &str,
    method: SensitivityMethod,
) -> Result<f64, SensitivityError> {
    let value = p
        .get(name)
        .ok_or_else(|| SensitivityError::UnknownParameter(name.to_string()))?;
    if value == 0.0 {
        return Err(SensitivityError::ZeroParameter {
            name: name.to_string(),
        });
    }
    match method {
        SensitivityMethod::AnalyticClosedForm => analytic_index(p, name),
        SensitivityMethod::CentralFiniteDifference => {
            finite_difference_index(p, name, value)
        }
    }
}

/// Indices for all fourteen tabulated parameters, in [`TABLE_PARAMETERS`]
/// order.
///
/// # Errors
///
/// Propagates the first [`sensitivity_index`] failure.
pub fn sensitivity_table(
    p: &Params,
    method: SensitivityMethod,
) -> Result<SensitivityReport, SensitivityError> {
    let mut entries = Vec::with_capacity(TABLE_PARAMETERS.len());
    for name in TABLE_PARAMETERS {
        entries.push(SensitivityEntry {
            name,
            index: sensitivity_index(p, name, method)?,
        });
    }
    Ok(SensitivityReport { method, entries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use rand_chacha::rand_core::{RngCore, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
        let u = (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
        lo + (hi - lo) * u
    }

    fn random_params(rng: &mut ChaCha8Rng) -> Params {
        let mut p = Params::default();
        for name in crate::params::PARAM_NAMES {
            let v = p.get(name).unwrap();
            p.set(name, v * uniform(rng, 0.5, 2.0)).unwrap();
        }
        p
    }

    #[test]
    fn parameters_absent_from_the_closed_form_have_zero_index() {
        let p = Params::default();
        for name in ["tau1", "tau2", "tau3", "nu1", "beta1", "mu1", "theta1"] {
            let a = sensitivity_index(&p, name, SensitivityMethod::AnalyticClosedForm)
                .unwrap();
            assert_eq!(a, 0.0, "analytic index of {name} should be exactly 0");
            let f = sensitivity_index(
                &p,
                name,
                SensitivityMethod::CentralFiniteDifference,
            )
            .unwrap();
            assert_abs_diff_eq!(f, 0.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn indices_at_defaults_match_independent_evaluation() {
        // Values frozen from a separate high-precision evaluation of the
        // closed form's exact derivative.
        let expected = [
            ("gamma1", 0.1881420759066575),
            ("psi1", 0.21571174817509745),
            ("gamma2", -0.10785214542419856),
            ("psi2", 0.17215652296155745),
            ("kappa1", 0.3964199806882475),
            ("kappa2", 0.21571174817509736),
            ("mu2", -1.0488784317288176),
            ("rho1", -0.19610158925008855),
            ("mu3", -0.6449416993480653),
            ("rho2", -0.1530280204102733),
            ("sigma2", -0.3509035388388602),
            ("sigma3", -0.2110847734077033),
            ("theta2", 0.612131728863345),
            ("theta3", 0.3878682711366548),
        ];
        let p = Params::default();
        for (name, want) in expected {
            let got =
                sensitivity_index(&p, name, SensitivityMethod::AnalyticClosedForm)
                    .unwrap();
            assert_relative_eq!(got, want, max_relative = 1e-12);
        }
    }

    #[test]
    fn analytic_and_finite_difference_agree_on_random_draws() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..50 {
            let p = random_params(&mut rng);
            let a = sensitivity_index(
                &p,
                "kappa1",
                SensitivityMethod::AnalyticClosedForm,
            )
            .unwrap();
            let f = sensitivity_index(
                &p,
                "kappa1",
                SensitivityMethod::CentralFiniteDifference,
            )
            .unwrap();
            assert_abs_diff_eq!(a, f, epsilon = 1e-4);
        }
    }

    #[test]
    fn recruitment_indices_obey_the_euler_identity() {
        // R0 is homogeneous of degree one in (theta2, theta3) jointly, so
        // the two recruitment indices must sum to exactly one.
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..20 {
            let p = random_params(&mut rng);
            let t2 = sensitivity_index(&p, "theta2", SensitivityMethod::AnalyticClosedForm)
                .unwrap();
            let t3 = sensitivity_index(&p, "theta3", SensitivityMethod::AnalyticClosedForm)
                .unwrap();
            assert_relative_eq!(t2 + t3, 1.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn table_has_all_fourteen_parameters_in_order() {
        let p = Params::default();
        let report =
            sensitivity_table(&p, SensitivityMethod::AnalyticClosedForm).unwrap();
        assert_eq!(report.entries.len(), 14);
        for (entry, name) in report.entries.iter().zip(TABLE_PARAMETERS) {
            assert_eq!(entry.name, name);
            assert!(entry.index.is_finite());
        }
        // Pure function: querying again gives the same table.
        let again =
            sensitivity_table(&p, SensitivityMethod::AnalyticClosedForm).unwrap();
        assert_eq!(report, again);
    }

    #[test]
    fn doubling_theta2_leaves_absent_parameters_at_zero() {
        let p = Params::default().with("theta2", 2000.0).unwrap();
        for name in ["tau1", "tau2", "nu3"] {
            let idx =
                sensitivity_index(&p, name, SensitivityMethod::AnalyticClosedForm)
                    .unwrap();
            assert_eq!(idx, 0.0);
        }
        // theta2's own index moves with the reweighting but stays positive.
        let t2 = sensitivity_index(&p, "theta2", SensitivityMethod::AnalyticClosedForm)
            .unwrap();
        assert!(t2 > 0.0);
    }

    #[test]
    fn error_cases() {
        let p = Params::default();
        assert!(matches!(
            sensitivity_index(&p, "zeta9", SensitivityMethod::AnalyticClosedForm),
            Err(SensitivityError::UnknownParameter(_))
        ));
        let q = p.with("kappa1", 0.0).unwrap();
        assert!(matches!(
            sensitivity_index(&q, "kappa1", SensitivityMethod::AnalyticClosedForm),
            Err(SensitivityError::ZeroParameter { .. })
        ));
        let mut zero = Params::default();
        for name in crate::params::CONTACT_RATE_NAMES {
            zero.set(name, 0.0).unwrap();
        }
        assert_eq!(
            sensitivity_index(&zero, "mu2", SensitivityMethod::AnalyticClosedForm),
            Err(SensitivityError::ZeroR0)
        );
    }
}

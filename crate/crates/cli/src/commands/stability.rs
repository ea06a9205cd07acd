//! `stability`: report disease-free-equilibrium stability — all twelve
//! Jacobian eigenvalues, the Routh–Hurwitz detail, and the Metzler check —
//! and, with `--endemic`, settle the system, polish the equilibrium by
//! Newton iteration, and classify it locally.

use anyhow::{Context, Result};
use nalgebra::Complex;

use rabies_dyn_core::{
    disease_free_equilibrium, find_endemic_equilibrium, integrate_adaptive,
    jacobian, local_dfe_stability, metzler_global_check, next_generation_matrix,
    r0_closed_form, rhs, EquilibriumKind, StabilityClass, COMPARTMENT_LABELS,
};

use crate::config::Scenario;
use crate::output::{csv_document, emit, fmt, Meta, Report};
use crate::StabilityArgs;

/// Horizon (years) the system is settled over before Newton polishing, when
/// the configured span is shorter.
const MIN_SETTLE_TIME: f64 = 500.0;

/// Dead band on the leading real part inside which the local
/// classification is reported as inconclusive rather than guessed.
const CLASSIFICATION_DEAD_BAND: f64 = 1e-9;

/// Residual tolerance for the Newton polish of the endemic equilibrium.
const ENDEMIC_TOLERANCE: f64 = 1e-10;

pub fn run(scenario: &Scenario, args: &StabilityArgs) -> Result<()> {
    let meta = super::meta(scenario);
    let p = &scenario.params;

    let report_data = local_dfe_stability(p);
    let metzler = metzler_global_check(p);
    let dfe = disease_free_equilibrium(p);
    let closed = r0_closed_form(p).context("evaluating the closed-form R0")?;
    let spectral = next_generation_matrix(p, scenario.mode)
        .context("assembling the next-generation matrix")?
        .r0;

    let eigen_csv = eigenvalue_csv(&meta, &report_data.jacobian_eigenvalues)?;

    let mut report = Report::new(&meta);
    report
        .line("command", "stability")
        .line("classification", class_label(report_data.classification))
        .float("max_real_part", report_data.max_real_part)
        .float("r0_closed_form", closed)
        .float("r0_spectral", spectral)
        .line("threshold_agreement", threshold_agreement(report_data.classification, closed))
        .blank();

    let (c1, c2, c3, c0) = report_data.rh_coefficients;
    report
        .float("rh.c1", c1)
        .float("rh.c2", c2)
        .float("rh.c3", c3)
        .float("rh.c0", c0)
        .line("rh.satisfied", report_data.rh_satisfied)
        .line(
            "rh.all_coefficients_positive",
            report_data.rh_all_coefficients_positive,
        )
        .blank();

    for (i, eig) in report_data.metzler_g0_eigs.iter().enumerate() {
        report.float(&format!("metzler.g0_eig.{i}"), *eig);
    }
    report
        .line("metzler.offdiag_nonnegative", metzler.g2_offdiag_nonnegative)
        .line("metzler.g0_stable", metzler.g0_stable)
        .line("metzler.verdict", metzler.verdict)
        .blank();

    for (i, label) in COMPARTMENT_LABELS.iter().enumerate() {
        report.float(&format!("dfe.{label}"), dfe.state[i]);
    }

    let endemic_artifacts = if args.endemic {
        Some(endemic_section(scenario, &meta, &mut report)?)
    } else {
        None
    };

    emit(&scenario.output_dir, "eigenvalues.csv", &eigen_csv)?;
    if let Some(csv) = endemic_artifacts {
        emit(&scenario.output_dir, "endemic_eigenvalues.csv", &csv)?;
    }
    emit(&scenario.output_dir, "stability_report.txt", &report.into_string())
}

/// Settles the system over a long horizon, polishes the equilibrium, and
/// appends its classification; returns the endemic eigenvalue CSV.
fn endemic_section(
    scenario: &Scenario,
    meta: &Meta,
    report: &mut Report,
) -> Result<String> {
    let p = &scenario.params;
    if scenario.forcing.is_some() {
        eprintln!("note: forcing is ignored for equilibrium analysis");
    }

    let t1 = scenario.t_span.1.max(scenario.t_span.0 + MIN_SETTLE_TIME);
    let traj = integrate_adaptive(
        |t, y| rhs(t, y, p),
        &scenario.y0,
        scenario.t_span.0,
        t1,
        &scenario.integrator,
    )
    .map_err(super::integration_error)?;
    let settled = *traj.states.last().expect("trajectory is non-empty");
    // Newton polishing needs a strictly interior starting point. A settled
    // state with a zero coordinate means the flow collapsed onto the
    // disease-free manifold (e.g. subcritical scenarios), so the honest
    // answer is the disease-free equilibrium itself.
    let eq = if settled.iter().all(|&v| v > 0.0) {
        find_endemic_equilibrium(p, &settled, ENDEMIC_TOLERANCE)
            .context("polishing the endemic equilibrium")?
    } else {
        eprintln!(
            "note: trajectory settled onto the disease-free manifold; reporting the disease-free equilibrium"
        );
        disease_free_equilibrium(p)
    };

    let jac = jacobian(&eq.state, p);
    let mut eigs: Vec<Complex<f64>> = jac.complex_eigenvalues().iter().copied().collect();
    eigs.sort_by(|a, b| {
        b.re.partial_cmp(&a.re)
            .expect("eigenvalues are finite")
            .then(b.im.partial_cmp(&a.im).expect("eigenvalues are finite"))
    });
    let max_real = eigs[0].re;
    let class = if max_real < -CLASSIFICATION_DEAD_BAND {
        "locally-stable"
    } else if max_real > CLASSIFICATION_DEAD_BAND {
        "unstable"
    } else {
        "inconclusive"
    };

    report.blank();
    report
        .line(
            "endemic.kind",
            match eq.kind {
                EquilibriumKind::DiseaseFree => "disease-free",
                EquilibriumKind::Endemic => "endemic",
            },
        )
        .line("endemic.converged", eq.converged)
        .line("endemic.iterations", eq.iterations)
        .float("endemic.residual_norm", eq.residual_norm)
        .float("endemic.settled_at", t1)
        .line("endemic.classification", class)
        .float("endemic.max_real_part", max_real);
    for (i, label) in COMPARTMENT_LABELS.iter().enumerate() {
        report.float(&format!("endemic.{label}"), eq.state[i]);
    }

    eigenvalue_csv(meta, &eigs)
}

fn eigenvalue_csv(meta: &Meta, eigs: &[Complex<f64>]) -> Result<String> {
    let rows = eigs.iter().enumerate().map(|(i, eig)| {
        vec![i.to_string(), fmt(eig.re), fmt(eig.im)]
    });
    csv_document(meta, &["index", "real", "imag"], rows)
}

fn class_label(class: StabilityClass) -> &'static str {
    match class {
        StabilityClass::LocallyStable => "locally-stable",
        StabilityClass::Unstable => "unstable",
        StabilityClass::Inconclusive => "inconclusive",
    }
}

/// Whether the local classification agrees with the R0 < 1 threshold;
/// an inconclusive classification reports `inconclusive`.
fn threshold_agreement(class: StabilityClass, r0: f64) -> &'static str {
    match class {
        StabilityClass::LocallyStable => {
            if r0 < 1.0 {
                "true"
            } else {
                "false"
            }
        }
        StabilityClass::Unstable => {
            if r0 > 1.0 {
                "true"
            } else {
                "false"
            }
        }
        StabilityClass::Inconclusive => "inconclusive",
    }
}

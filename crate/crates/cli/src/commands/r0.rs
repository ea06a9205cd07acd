//! `r0`: report the basic reproduction number in both next-generation-
//! matrix conventions, the named transmission entries, and the matrix
//! itself in the active convention.

use anyhow::{Context, Result};

use rabies_dyn_core::state::idx;
use rabies_dyn_core::{
    next_generation_matrix, r0_closed_form, R0Mode, COMPARTMENT_LABELS,
};

use crate::config::Scenario;
use crate::output::{csv_document, emit, fmt, Report};

pub fn run(scenario: &Scenario) -> Result<()> {
    let meta = super::meta(scenario);
    let p = &scenario.params;

    let closed = r0_closed_form(p).context("evaluating the closed-form R0")?;
    let literal = next_generation_matrix(p, R0Mode::PaperLiteral)
        .context("assembling the next-generation matrix (paper-literal)")?;
    let corrected = next_generation_matrix(p, R0Mode::Corrected)
        .context("assembling the next-generation matrix (corrected)")?;
    let active = match scenario.mode {
        R0Mode::PaperLiteral => &literal,
        R0Mode::Corrected => &corrected,
    };

    let infected_labels: Vec<&str> =
        idx::INFECTED.iter().map(|&c| COMPARTMENT_LABELS[c]).collect();
    let mut header = vec!["compartment"];
    header.extend(&infected_labels);
    let rows = (0..7).map(|i| {
        let mut row = Vec::with_capacity(8);
        row.push(infected_labels[i].to_owned());
        row.extend((0..7).map(|j| fmt(active.ngm[(i, j)])));
        row
    });
    let csv = csv_document(&meta, &header, rows)?;

    let mut report = Report::new(&meta);
    report
        .line("command", "r0")
        .float("r0_closed_form", closed)
        .float("r0_spectral.paper-literal", literal.r0)
        .float("r0_spectral.corrected", corrected.r0)
        .blank();
    let e = &active.r_entries;
    for (name, value) in [
        ("r13", e.r13),
        ("r14", e.r14),
        ("r15", e.r15),
        ("r16", e.r16),
        ("r33", e.r33),
        ("r34", e.r34),
        ("r35", e.r35),
        ("r36", e.r36),
        ("r53", e.r53),
        ("r54", e.r54),
        ("r55", e.r55),
        ("r56", e.r56),
    ] {
        report.float(&format!("entry.{name}"), value);
    }

    emit(&scenario.output_dir, "ngm.csv", &csv)?;
    emit(&scenario.output_dir, "r0_report.txt", &report.into_string())
}

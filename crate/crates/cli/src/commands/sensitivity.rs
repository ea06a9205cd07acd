//! `sensitivity`: emit the fourteen-row normalized sensitivity table with
//! both computation routes and the anticipated signs.

use anyhow::{Context, Result};

use rabies_dyn_core::{
    sensitivity_table, SensitivityMethod, TABLE_EXPECTED_SIGNS, TABLE_PARAMETERS,
};

use crate::config::Scenario;
use crate::output::{csv_document, emit, fmt};

/// Header of `sensitivity.csv`.
pub(crate) const HEADER: [&str; 5] =
    ["parameter", "analytic_index", "fd_index", "expected_sign", "sign_match"];

pub fn run(scenario: &Scenario) -> Result<()> {
    let meta = super::meta(scenario);
    let p = &scenario.params;

    let analytic = sensitivity_table(p, SensitivityMethod::AnalyticClosedForm)
        .context("computing analytic sensitivity indices")?;
    let fd = sensitivity_table(p, SensitivityMethod::CentralFiniteDifference)
        .context("computing finite-difference sensitivity indices")?;

    let rows = TABLE_PARAMETERS.iter().enumerate().map(|(i, name)| {
        let a = analytic.entries[i].index;
        let f = fd.entries[i].index;
        let expected = TABLE_EXPECTED_SIGNS[i];
        // The flag reports whether both computed routes carry the
        // anticipated sign; it states the comparison, it does not enforce it.
        let matches = sign_of(a) == expected && sign_of(f) == expected;
        vec![
            (*name).to_owned(),
            fmt(a),
            fmt(f),
            format!("{expected:+}"),
            matches.to_string(),
        ]
    });
    let csv = csv_document(&meta, &HEADER, rows)?;
    emit(&scenario.output_dir, "sensitivity.csv", &csv)
}

fn sign_of(value: f64) -> i8 {
    if value > 0.0 {
        1
    } else if value < 0.0 {
        -1
    } else {
        0
    }
}

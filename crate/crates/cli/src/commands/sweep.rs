//! `sweep`: evaluate R0 over a cartesian parameter grid, optionally
//! integrating each grid point for peak and final infected sizes.
//!
//! Grid points are distributed across a worker pool; each worker computes
//! its rows independently and the rows are written in grid order at the
//! end, so parallelism never perturbs the artifact.

use anyhow::{bail, Context, Result};
use rayon::prelude::*;

use rabies_dyn_core::state::idx;
use rabies_dyn_core::next_generation_matrix;

use crate::config::Scenario;
use crate::output::{csv_document, emit, fmt};
use crate::SweepArgs;

/// One swept axis: a parameter name and its grid values.
struct Axis {
    name: String,
    values: Vec<f64>,
}

pub fn run(scenario: &Scenario, args: &SweepArgs) -> Result<()> {
    let meta = super::meta(scenario);
    let axes = parse_axes(scenario, args)?;

    let total: usize = axes.iter().map(|a| a.values.len()).product();
    // 12 numeric fields per row at most; 1e6 rows keeps the artifact and
    // the run both within reason.
    if total > 1_000_000 {
        bail!("sweep grid has {total} points; stay at or below 1,000,000");
    }

    let times = scenario.sample_times();
    let rows: Vec<Vec<String>> = (0..total)
        .into_par_iter()
        .map(|flat| grid_row(scenario, &axes, &times, flat, args.simulate))
        .collect::<Result<_>>()?;

    let mut header: Vec<&str> = axes.iter().map(|a| a.name.as_str()).collect();
    header.push("r0");
    if args.simulate {
        header.extend([
            "peak_I_H", "peak_I_F", "peak_I_D", "final_I_H", "final_I_F", "final_I_D",
        ]);
    }
    let csv = csv_document(&meta, &header, rows)?;
    emit(&scenario.output_dir, "sweep.csv", &csv)
}

fn parse_axes(scenario: &Scenario, args: &SweepArgs) -> Result<Vec<Axis>> {
    if args.params.len() != args.values.len() {
        bail!(
            "each --param needs a matching --values ({} --param vs {} --values)",
            args.params.len(),
            args.values.len()
        );
    }
    let mut axes = Vec::with_capacity(args.params.len());
    for (name, list) in args.params.iter().zip(&args.values) {
        if scenario.params.get(name).is_none() {
            bail!("unknown sweep parameter `{name}`");
        }
        if axes.iter().any(|a: &Axis| a.name == *name) {
            bail!("sweep parameter `{name}` given twice");
        }
        let values: Vec<f64> = list
            .split(',')
            .map(|v| {
                v.trim()
                    .parse::<f64>()
                    .with_context(|| format!("--values for `{name}`: `{v}` is not a number"))
            })
            .collect::<Result<_>>()?;
        if values.is_empty() {
            bail!("--values for `{name}` is empty");
        }
        axes.push(Axis { name: name.clone(), values });
    }
    Ok(axes)
}

/// Computes one grid row. `flat` indexes the cartesian product in
/// row-major order: the first `--param` varies slowest.
fn grid_row(
    scenario: &Scenario,
    axes: &[Axis],
    times: &[f64],
    flat: usize,
    simulate: bool,
) -> Result<Vec<String>> {
    let mut p = scenario.params;
    let mut row = Vec::with_capacity(axes.len() + 7);
    let mut remainder = flat;
    for axis in axes.iter().rev() {
        let value = axis.values[remainder % axis.values.len()];
        remainder /= axis.values.len();
        p.set(&axis.name, value)
            .with_context(|| format!("grid value for `{}`", axis.name))?;
    }
    for axis in axes {
        row.push(fmt(p.get(&axis.name).expect("axis names validated")));
    }
    p.validate().context("validating grid-point parameters")?;

    let r0 = next_generation_matrix(&p, scenario.mode)
        .context("assembling the next-generation matrix at a grid point")?
        .r0;
    row.push(fmt(r0));

    if simulate {
        let grid_scenario = Scenario { params: p, ..scenario.clone() };
        let traj = super::integrate_scenario(&grid_scenario, times)?;
        let last = traj.states.last().expect("trajectory is non-empty");
        for c in [idx::I_H, idx::I_F, idx::I_D] {
            let peak = traj
                .states
                .iter()
                .map(|y| y[c])
                .fold(f64::NEG_INFINITY, f64::max);
            row.push(fmt(peak));
        }
        for c in [idx::I_H, idx::I_F, idx::I_D] {
            row.push(fmt(last[c]));
        }
    }
    Ok(row)
}

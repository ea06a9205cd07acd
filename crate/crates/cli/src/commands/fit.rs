//! `fit`: nonlinear least-squares estimation against a synthetic dataset.
//!
//! Two sources are supported: `--generate` builds datasets from the
//! configured parameters (which then serve as the ground truth), and
//! `--dataset` loads an existing CSV, using its `<stem>_meta.toml` sidecar
//! for the truth, noise scales, and initial state when present.
//!
//! The generate path serializes each dataset and then fits what the
//! serialized form parses back to, so the written artifact and the fitted
//! data can never drift apart: `parse(write(x)) = x` is exercised on every
//! run, not just in tests.
//!
//! Replicates (`--replicates N`) fit seeds `seed, …, seed+N−1` across a
//! worker pool; all files are written in seed order after every replicate
//! has finished, so parallelism never reorders artifacts.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use rayon::prelude::*;

use rabies_dyn_core::{
    confidence_intervals, fit, generate_synthetic_with, integrate_at, rhs,
    FitOptions, NoiseMode, StateVector, SyntheticDataset, COMPARTMENT_LABELS,
};

use crate::config::Scenario;
use crate::output::{
    assemble_dataset, csv_document, dataset_csv, dataset_meta_toml, emit, fmt,
    observed_indices, parse_dataset_csv, parse_dataset_meta, DatasetMeta, Meta,
};
use crate::{FitArgs, NoiseModeArg};

/// Relative error at or below which a parameter counts as recovered.
const RECOVERY_TOLERANCE: f64 = 0.01;

/// Bounds for each free parameter: a factor of 10 around its base value.
const BOUNDS_SPAN: f64 = 10.0;

/// Header of `fit_estimates*.csv`. The truth column is empty when the
/// dataset has no recorded ground truth, the interval column when the fit
/// did not converge.
const ESTIMATES_HEADER: [&str; 4] = ["parameter", "estimate", "truth", "ci_half_width"];

pub fn run(scenario: &Scenario, args: &FitArgs) -> Result<()> {
    let free: Vec<String> = args
        .free
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_owned)
        .collect();
    if free.is_empty() {
        bail!("--free must list at least one parameter name");
    }
    for name in &free {
        if scenario.params.get(name).is_none() {
            bail!("unknown free parameter `{name}`");
        }
    }
    if !(args.init_factor.is_finite() && args.init_factor > 0.0) {
        bail!("--init-factor must be positive and finite");
    }

    match (&args.dataset, args.generate) {
        (Some(path), false) => run_dataset(scenario, args, &free, path),
        (None, true) => run_generate(scenario, args, &free),
        // clap's argument group enforces exactly one source.
        _ => unreachable!("argument parsing guarantees one dataset source"),
    }
}

/// One replicate's complete artifact set, pre-rendered by a worker.
struct Replicate {
    seed: u64,
    dataset_csv: String,
    sidecar_toml: String,
    outcome: FitOutcome,
}

/// Everything a finished fit contributes to files and the report.
struct FitOutcome {
    estimates_csv: String,
    curve_csv: String,
    converged: bool,
    iterations: usize,
    sse: f64,
    names: Vec<String>,
    estimates: Vec<f64>,
    /// Ground truth per free parameter, when the dataset records one.
    truths: Option<Vec<f64>>,
    /// 95% half-widths, present only for converged fits.
    ci: Option<Vec<f64>>,
}

fn run_generate(scenario: &Scenario, args: &FitArgs, free: &[String]) -> Result<()> {
    let labels: Vec<&str> = args
        .observed
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .collect();
    if labels.is_empty() {
        bail!("--observed must list at least one compartment label");
    }
    let observed = observed_indices(&labels)?;
    if !(args.noise_sd.is_finite() && args.noise_sd >= 0.0) {
        bail!("--noise-sd must be non-negative and finite");
    }
    if args.replicates == 0 {
        bail!("--replicates must be at least 1");
    }
    let noise_mode = match args.noise_mode {
        NoiseModeArg::Scaled => NoiseMode::Scaled,
        NoiseModeArg::Absolute => NoiseMode::Absolute,
    };
    let times = scenario.sample_times();

    let replicates: Vec<Replicate> = (0..args.replicates)
        .into_par_iter()
        .map(|k| {
            let seed = scenario.seed + k as u64;
            let rep_meta = Meta { seed, mode_label: scenario.mode_label };
            let data = generate_synthetic_with(
                &scenario.params,
                &scenario.y0,
                &times,
                args.noise_sd,
                noise_mode,
                &observed,
                seed,
            )
            .with_context(|| format!("generating dataset for seed {seed}"))?;

            let dataset_text = dataset_csv(&rep_meta, &data)?;
            let sidecar = DatasetMeta::from_dataset(&data, &scenario.y0);
            let sidecar_text = dataset_meta_toml(&rep_meta, &sidecar)?;

            // Fit the parsed-back form of what will be written, so the
            // artifact and the fitted data are provably the same content.
            let parsed = parse_dataset_csv(&dataset_text)?;
            let sidecar_back = parse_dataset_meta(&sidecar_text)?;
            let (data_back, y0_back) = assemble_dataset(&parsed, &sidecar_back)?;

            let outcome = fit_one(scenario, args, free, &data_back, &y0_back, true, &rep_meta)
                .with_context(|| format!("fitting replicate with seed {seed}"))?;
            Ok(Replicate { seed, dataset_csv: dataset_text, sidecar_toml: sidecar_text, outcome })
        })
        .collect::<Result<_>>()?;

    for rep in &replicates {
        let suffix = if args.replicates == 1 {
            String::new()
        } else {
            format!("_seed{}", rep.seed)
        };
        emit(&scenario.output_dir, &format!("dataset{suffix}.csv"), &rep.dataset_csv)?;
        emit(
            &scenario.output_dir,
            &format!("dataset{suffix}_meta.toml"),
            &rep.sidecar_toml,
        )?;
        emit(
            &scenario.output_dir,
            &format!("fitted_curve{suffix}.csv"),
            &rep.outcome.curve_csv,
        )?;
        emit(
            &scenario.output_dir,
            &format!("fit_estimates{suffix}.csv"),
            &rep.outcome.estimates_csv,
        )?;
    }

    let meta = super::meta(scenario);
    let mut report = crate::output::Report::new(&meta);
    report
        .line("command", "fit")
        .line("source", "generate")
        .line("free", free.join(","))
        .float("noise_sd", args.noise_sd)
        .line(
            "noise_mode",
            match noise_mode {
                NoiseMode::Scaled => "scaled",
                NoiseMode::Absolute => "absolute",
            },
        )
        .line(
            "observed",
            observed
                .iter()
                .map(|&c| COMPARTMENT_LABELS[c])
                .collect::<Vec<_>>()
                .join(","),
        )
        .float("init_factor", args.init_factor)
        .line("replicates", args.replicates);

    for rep in &replicates {
        report.blank();
        report.line("replicate.seed", rep.seed);
        render_outcome(&mut report, &rep.outcome);
    }

    if args.replicates > 1 {
        report.blank();
        for (i, name) in free.iter().enumerate() {
            let covered = replicates
                .iter()
                .filter(|rep| outcome_covers(&rep.outcome, i))
                .count();
            report.line(&format!("coverage.{name}"), format!("{covered}/{}", args.replicates));
        }
    }

    emit(&scenario.output_dir, "fit_report.txt", &report.into_string())
}

fn run_dataset(scenario: &Scenario, args: &FitArgs, free: &[String], path: &Path) -> Result<()> {
    if args.replicates != 1 {
        bail!("--replicates applies to --generate runs only");
    }
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading dataset {}", path.display()))?;
    let parsed = parse_dataset_csv(&text)
        .with_context(|| format!("parsing dataset {}", path.display()))?;

    let sidecar = sidecar_path(path);
    let (data, y0, truth_known) = if sidecar.exists() {
        let sidecar_text = std::fs::read_to_string(&sidecar)
            .with_context(|| format!("reading sidecar {}", sidecar.display()))?;
        let meta = parse_dataset_meta(&sidecar_text)
            .with_context(|| format!("parsing sidecar {}", sidecar.display()))?;
        let (data, y0) = assemble_dataset(&parsed, &meta)?;
        (data, y0, true)
    } else {
        eprintln!(
            "note: no sidecar {}; using scenario parameters as the fit baseline",
            sidecar.display()
        );
        let observed = observed_indices(
            &parsed.labels.iter().map(String::as_str).collect::<Vec<_>>(),
        )?;
        let observations = parsed
            .values
            .iter()
            .map(|row| {
                let mut y = StateVector::zeros();
                for (&c, &v) in observed.iter().zip(row) {
                    y[c] = v;
                }
                y
            })
            .collect();
        let data = SyntheticDataset {
            times: parsed.times.clone(),
            observations,
            observed,
            scales: [1.0; 12],
            noise_sd: 0.0,
            noise_mode: NoiseMode::Absolute,
            seed: scenario.seed,
            truth: scenario.params,
        };
        (data, scenario.y0, false)
    };

    let rep_meta = Meta { seed: data.seed, mode_label: scenario.mode_label };
    let outcome = fit_one(scenario, args, free, &data, &y0, truth_known, &rep_meta)?;

    emit(&scenario.output_dir, "fitted_curve.csv", &outcome.curve_csv)?;
    emit(&scenario.output_dir, "fit_estimates.csv", &outcome.estimates_csv)?;

    let mut report = crate::output::Report::new(&rep_meta);
    report
        .line("command", "fit")
        .line("source", "dataset")
        .line("dataset", path.display())
        .line("free", free.join(","))
        .float("init_factor", args.init_factor)
        .blank();
    render_outcome(&mut report, &outcome);
    emit(&scenario.output_dir, "fit_report.txt", &report.into_string())
}

/// `dataset.csv` → `dataset_meta.toml`, next to the dataset.
fn sidecar_path(dataset: &Path) -> PathBuf {
    let stem = dataset
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    dataset.with_file_name(format!("{stem}_meta.toml"))
}

/// Runs one fit end to end: initial guess, bounds, optimization,
/// confidence intervals, and the fitted-curve and estimates artifacts.
fn fit_one(
    scenario: &Scenario,
    args: &FitArgs,
    free: &[String],
    data: &SyntheticDataset,
    y0: &StateVector,
    truth_known: bool,
    rep_meta: &Meta,
) -> Result<FitOutcome> {
    // Base point for the initial guess and the bounds: the recorded truth
    // when the dataset carries one, the scenario parameters otherwise.
    let base = if truth_known { data.truth } else { scenario.params };
    let mut init = base;
    for name in free {
        let v = base.get(name).expect("free names validated");
        init.set(name, v * args.init_factor)
            .with_context(|| format!("initial guess for `{name}`"))?;
    }
    init.validate().context("validating the initial guess")?;
    let bounds: Vec<(f64, f64)> = free
        .iter()
        .map(|name| {
            let v = base.get(name).expect("free names validated");
            (v / BOUNDS_SPAN, v * BOUNDS_SPAN)
        })
        .collect();
    let free_refs: Vec<&str> = free.iter().map(String::as_str).collect();

    let result = fit(data, y0, &init, &free_refs, &bounds, &FitOptions::default())
        .context("nonlinear least-squares fit")?;
    let ci = if result.converged {
        Some(confidence_intervals(&result, data, y0).context("computing confidence intervals")?)
    } else {
        eprintln!("note: fit did not converge; confidence intervals skipped");
        None
    };

    let curve = integrate_at(
        |t, y| rhs(t, y, &result.estimate),
        y0,
        &data.times,
        &scenario.integrator,
    )
    .map_err(super::integration_error)
    .context("integrating the fitted curve")?;
    let curve_labels: Vec<&str> = data
        .observed
        .iter()
        .map(|&c| COMPARTMENT_LABELS[c])
        .collect();
    let mut curve_header: Vec<&str> = vec!["t"];
    curve_header.extend(&curve_labels);
    let curve_rows = curve.times.iter().zip(&curve.states).map(|(t, y)| {
        let mut row = Vec::with_capacity(curve_header.len());
        row.push(fmt(*t));
        for &c in &data.observed {
            row.push(fmt(y[c]));
        }
        row
    });
    let curve_csv = csv_document(rep_meta, &curve_header, curve_rows)?;

    let estimates: Vec<f64> = free
        .iter()
        .map(|name| result.estimate.get(name).expect("free names validated"))
        .collect();
    let truths: Option<Vec<f64>> = truth_known.then(|| {
        free.iter()
            .map(|name| data.truth.get(name).expect("free names validated"))
            .collect()
    });

    let estimate_rows = free.iter().enumerate().map(|(i, name)| {
        vec![
            name.clone(),
            fmt(estimates[i]),
            truths.as_ref().map_or(String::new(), |t| fmt(t[i])),
            ci.as_ref().map_or(String::new(), |c| fmt(c[i])),
        ]
    });
    let estimates_csv = csv_document(rep_meta, &ESTIMATES_HEADER, estimate_rows)?;

    Ok(FitOutcome {
        estimates_csv,
        curve_csv,
        converged: result.converged,
        iterations: result.iterations,
        sse: result.sse,
        names: free.to_vec(),
        estimates,
        truths,
        ci,
    })
}

/// Appends one fit's results to the report.
fn render_outcome(report: &mut crate::output::Report, outcome: &FitOutcome) {
    report
        .line("converged", outcome.converged)
        .line("iterations", outcome.iterations)
        .float("sse", outcome.sse);
    let mut all_recovered = outcome.truths.is_some();
    for (i, name) in outcome.names.iter().enumerate() {
        report.float(&format!("estimate.{name}"), outcome.estimates[i]);
        if let Some(truths) = &outcome.truths {
            let rel = (outcome.estimates[i] - truths[i]).abs() / truths[i];
            let recovered = rel <= RECOVERY_TOLERANCE;
            all_recovered &= recovered;
            report
                .float(&format!("truth.{name}"), truths[i])
                .float(&format!("rel_error.{name}"), rel)
                .line(&format!("recovered_within_1pct.{name}"), recovered);
        }
        if let Some(ci) = &outcome.ci {
            report.float(&format!("ci_half_width.{name}"), ci[i]);
            if outcome_covers(outcome, i) {
                report.line(&format!("covered.{name}"), true);
            } else if outcome.truths.is_some() {
                report.line(&format!("covered.{name}"), false);
            }
        }
    }
    if outcome.truths.is_some() {
        report.line("all_recovered_within_1pct", all_recovered);
    }
}

/// Whether the replicate's interval for parameter `i` covers the truth.
fn outcome_covers(outcome: &FitOutcome, i: usize) -> bool {
    match (&outcome.truths, &outcome.ci) {
        (Some(truths), Some(ci)) => (outcome.estimates[i] - truths[i]).abs() <= ci[i],
        _ => false,
    }
}

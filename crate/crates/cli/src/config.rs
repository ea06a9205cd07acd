//! Scenario configuration: TOML file parsing, command-line overrides, and
//! the fully resolved [`Scenario`] handed to each command.
//!
//! Precedence, lowest to highest: built-in defaults, the `--config` file,
//! then the command-line flags (`--set`, `--seed`, `--out`, `--mode`).
//! Unknown keys anywhere in the file are hard errors, as are unknown
//! parameter names in `[params]` or `--set`; with 33 scalar parameters a
//! silently ignored typo would corrupt results without a trace.

use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use serde::Deserialize;

use rabies_dyn_core::state::idx;
use rabies_dyn_core::{
    default_initial_state, ForcingConfig, IntegratorConfig, Params, R0Mode,
    StateVector, COMPARTMENT_LABELS, DEFAULT_PARAMS, FORCEABLE_RATES,
};

use crate::{Cli, ModeArg};

/// Default output directory when neither `--out` nor the configuration
/// file provides one.
const DEFAULT_OUTPUT_DIR: &str = "out";

/// Default simulated time span in years.
const DEFAULT_T_SPAN: [f64; 2] = [0.0, 100.0];

/// Default sampling interval in years.
const DEFAULT_SAMPLE_EVERY: f64 = 1.0;

/// Default forcing period in years when a `[forcing]` table omits one.
const DEFAULT_FORCING_PERIOD: f64 = 10.0;

/// A fully resolved, validated scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub params: Params,
    pub y0: StateVector,
    pub t_span: (f64, f64),
    pub sample_every: f64,
    pub forcing: Option<ForcingConfig>,
    pub integrator: IntegratorConfig,
    pub output_dir: PathBuf,
    pub seed: u64,
    pub mode: R0Mode,
    /// The `--mode` token, reproduced in every metadata line.
    pub mode_label: &'static str,
}

impl Scenario {
    /// The output-sample grid: `t0, t0 + Δ, t0 + 2Δ, …` up to `t1`, with
    /// `t1` itself appended when the grid does not land on it. Each time is
    /// computed directly as `t0 + i·Δ` (no running sum), so the grid is
    /// identical across runs and free of accumulated rounding.
    pub fn sample_times(&self) -> Vec<f64> {
        let (t0, t1) = self.t_span;
        let dt = self.sample_every;
        // The 1e-9 relative pad keeps an endpoint that rounding placed a few
        // ulps below the grid from generating a duplicate final sample.
        let n = ((t1 - t0) / dt * (1.0 + 1e-9)).floor() as usize;
        let mut times: Vec<f64> = (0..=n).map(|i| t0 + i as f64 * dt).collect();
        if let Some(&last) = times.last() {
            if t1 - last > 1e-9 * dt {
                times.push(t1);
            } else {
                // Snap the final grid point onto the requested endpoint.
                *times.last_mut().expect("grid is non-empty") = t1;
            }
        }
        times
    }
}

/// On-disk scenario document. Every key is optional; nested tables follow
/// the same strictness as the top level.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioToml {
    /// `[t0, t1]` in years.
    t_span: Option<[f64; 2]>,
    /// Output sampling interval in years.
    sample_every: Option<f64>,
    /// Random seed for dataset generation.
    seed: Option<u64>,
    /// Output directory for artifacts.
    output_dir: Option<PathBuf>,
    /// Parameter overrides by symbol name (for example `kappa1 = 6e-5`).
    #[serde(default)]
    params: BTreeMap<String, f64>,
    /// Initial-state overrides by compartment label.
    y0: Option<Y0Toml>,
    /// Adaptive-integrator tolerances and budgets.
    integrator: Option<IntegratorConfig>,
    /// Seasonal forcing of contact/shedding rates.
    forcing: Option<ForcingToml>,
}

/// Initial-state table keyed by compartment label; unlisted compartments
/// keep the built-in initial condition.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct Y0Toml {
    #[serde(rename = "S_H")]
    s_h: Option<f64>,
    #[serde(rename = "E_H")]
    e_h: Option<f64>,
    #[serde(rename = "I_H")]
    i_h: Option<f64>,
    #[serde(rename = "R_H")]
    r_h: Option<f64>,
    #[serde(rename = "S_F")]
    s_f: Option<f64>,
    #[serde(rename = "E_F")]
    e_f: Option<f64>,
    #[serde(rename = "I_F")]
    i_f: Option<f64>,
    #[serde(rename = "S_D")]
    s_d: Option<f64>,
    #[serde(rename = "E_D")]
    e_d: Option<f64>,
    #[serde(rename = "I_D")]
    i_d: Option<f64>,
    #[serde(rename = "R_D")]
    r_d: Option<f64>,
    #[serde(rename = "M")]
    m: Option<f64>,
}

impl Y0Toml {
    fn overrides(&self) -> [(usize, Option<f64>); 12] {
        [
            (idx::S_H, self.s_h),
            (idx::E_H, self.e_h),
            (idx::I_H, self.i_h),
            (idx::R_H, self.r_h),
            (idx::S_F, self.s_f),
            (idx::E_F, self.e_f),
            (idx::I_F, self.i_f),
            (idx::S_D, self.s_d),
            (idx::E_D, self.e_d),
            (idx::I_D, self.i_d),
            (idx::R_D, self.r_d),
            (idx::M, self.m),
        ]
    }
}

/// Forcing table. Omitted `period`/`phase`/`targets` fall back to a
/// ten-year cycle, zero phase, and all twelve forceable rates.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ForcingToml {
    amplitude: f64,
    #[serde(default = "default_forcing_period")]
    period: f64,
    #[serde(default)]
    phase: f64,
    targets: Option<Vec<String>>,
}

fn default_forcing_period() -> f64 {
    DEFAULT_FORCING_PERIOD
}

/// Loads, merges, and validates the scenario for one invocation.
pub fn resolve(cli: &Cli) -> Result<Scenario> {
    let file = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading configuration file {}", path.display()))?;
            toml::from_str::<ScenarioToml>(&text)
                .with_context(|| format!("parsing configuration file {}", path.display()))?
        }
        None => ScenarioToml::default(),
    };

    let mut params = DEFAULT_PARAMS;
    // BTreeMap iteration is sorted, keeping override application ordered
    // deterministically even though assignments commute anyway.
    for (name, value) in &file.params {
        params
            .set(name, *value)
            .with_context(|| format!("applying [params] override `{name}`"))?;
    }
    for assignment in &cli.set {
        let (name, value) = assignment.split_once('=').with_context(|| {
            format!("malformed --set `{assignment}`: expected NAME=VALUE")
        })?;
        let value: f64 = value
            .trim()
            .parse()
            .with_context(|| format!("malformed --set `{assignment}`: value is not a number"))?;
        params
            .set(name.trim(), value)
            .with_context(|| format!("applying --set `{assignment}`"))?;
    }
    params.validate().context("validating resolved parameters")?;

    let mut y0 = default_initial_state();
    if let Some(table) = &file.y0 {
        for (i, value) in table.overrides() {
            if let Some(v) = value {
                y0[i] = v;
            }
        }
    }
    for (i, label) in COMPARTMENT_LABELS.iter().enumerate() {
        if !y0[i].is_finite() || y0[i] < 0.0 {
            bail!("initial state {label} = {} must be finite and non-negative", y0[i]);
        }
    }

    let t_span = file.t_span.unwrap_or(DEFAULT_T_SPAN);
    if !(t_span[0].is_finite() && t_span[1].is_finite() && t_span[1] > t_span[0]) {
        bail!("t_span = [{}, {}] must be finite with t1 > t0", t_span[0], t_span[1]);
    }
    let sample_every = file.sample_every.unwrap_or(DEFAULT_SAMPLE_EVERY);
    if !(sample_every.is_finite() && sample_every > 0.0) {
        bail!("sample_every = {sample_every} must be positive and finite");
    }
    if (t_span[1] - t_span[0]) / sample_every > 5e6 {
        bail!("sample grid exceeds 5,000,000 points; increase sample_every");
    }

    let integrator = file.integrator.unwrap_or_default();
    validate_integrator(&integrator)?;

    let forcing = match &file.forcing {
        Some(raw) => Some(build_forcing(raw)?),
        None => None,
    };

    let output_dir = cli
        .out
        .clone()
        .or_else(|| file.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR));

    let seed = cli.seed.or(file.seed).unwrap_or(0);
    let mode = match cli.mode {
        ModeArg::PaperLiteral => R0Mode::PaperLiteral,
        ModeArg::Corrected => R0Mode::Corrected,
    };

    Ok(Scenario {
        params,
        y0,
        t_span: (t_span[0], t_span[1]),
        sample_every,
        forcing,
        integrator,
        output_dir,
        seed,
        mode,
        mode_label: cli.mode.label(),
    })
}

/// Mirrors the integrator's own invariants as recoverable errors instead of
/// assertion failures, so a bad configuration file cannot panic the process.
fn validate_integrator(cfg: &IntegratorConfig) -> Result<()> {
    if !(cfg.rtol.is_finite() && cfg.rtol > 0.0) {
        bail!("integrator rtol = {} must be positive and finite", cfg.rtol);
    }
    if !(cfg.atol.is_finite() && cfg.atol > 0.0) {
        bail!("integrator atol = {} must be positive and finite", cfg.atol);
    }
    if !(cfg.h_init.is_finite() && cfg.h_init > 0.0) {
        bail!("integrator h_init = {} must be positive and finite", cfg.h_init);
    }
    if !(cfg.h_max > 0.0) {
        bail!("integrator h_max = {} must be positive", cfg.h_max);
    }
    if cfg.max_steps == 0 {
        bail!("integrator max_steps must be positive");
    }
    Ok(())
}

fn build_forcing(raw: &ForcingToml) -> Result<ForcingConfig> {
    let cfg = match &raw.targets {
        Some(names) => {
            let targets: Vec<&str> = names.iter().map(String::as_str).collect();
            ForcingConfig::new(raw.amplitude, raw.period, raw.phase, &targets)
        }
        None => ForcingConfig::new(raw.amplitude, raw.period, raw.phase, &FORCEABLE_RATES),
    };
    cfg.context("building [forcing] configuration")
}

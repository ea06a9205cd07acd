//! Artifact serialization: metadata lines, lossless float formatting, CSV
//! writing and the matching readers, and the dataset sidecar format.
//!
//! Two properties carry every consistency guarantee the commands rely on:
//!
//! * **Lossless floats.** [`fmt`] prints 17 significant decimal digits,
//!   which round-trips every finite `f64` bit-for-bit through Rust's
//!   correctly rounded parser. Parsing an emitted CSV therefore
//!   reconstructs exactly the values that were written.
//! * **Self-describing files.** Every artifact begins with the metadata
//!   line `# rabies-dyn <version> seed=<s> mode=<m>`; CSV readers here
//!   treat `#` lines as comments, and the sidecar is TOML where `#` is a
//!   comment natively, so artifacts parse without stripping anything.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use rabies_dyn_core::{NoiseMode, Params, StateVector, SyntheticDataset, COMPARTMENT_LABELS};

/// Provenance stamped into every artifact.
#[derive(Debug, Clone, Copy)]
pub struct Meta {
    pub seed: u64,
    pub mode_label: &'static str,
}

impl Meta {
    /// The metadata header line (without trailing newline).
    pub fn line(&self) -> String {
        format!(
            "# rabies-dyn {} seed={} mode={}",
            env!("CARGO_PKG_VERSION"),
            self.seed,
            self.mode_label
        )
    }
}

/// Formats a float with 17 significant digits, enough for exact `f64`
/// round-trips through parsing.
pub fn fmt(value: f64) -> String {
    format!("{value:.16e}")
}

/// Writes `contents` to `output_dir/name`, creating the directory as
/// needed, and notes the write on the diagnostic stream.
pub fn emit(output_dir: &Path, name: &str, contents: &str) -> Result<()> {
    std::fs::create_dir_all(output_dir)
        .with_context(|| format!("creating output directory {}", output_dir.display()))?;
    let path = output_dir.join(name);
    std::fs::write(&path, contents)
        .with_context(|| format!("writing {}", path.display()))?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

/// Builds a CSV document: metadata line, header row, then `rows`, all
/// LF-terminated.
pub fn csv_document<R>(meta: &Meta, header: &[&str], rows: R) -> Result<String>
where
    R: IntoIterator<Item = Vec<String>>,
{
    let mut buf = Vec::new();
    buf.extend_from_slice(meta.line().as_bytes());
    buf.push(b'\n');
    let mut writer = csv::Writer::from_writer(buf);
    writer.write_record(header).context("writing CSV header")?;
    for row in rows {
        writer.write_record(&row).context("writing CSV row")?;
    }
    let buf = writer.into_inner().context("flushing CSV writer")?;
    String::from_utf8(buf).context("CSV output is UTF-8")
}

/// A `key = value` report builder with the metadata line on top.
#[derive(Debug)]
pub struct Report {
    text: String,
}

impl Report {
    pub fn new(meta: &Meta) -> Self {
        let mut text = meta.line();
        text.push('\n');
        Report { text }
    }

    /// Appends `key = value`.
    pub fn line(&mut self, key: &str, value: impl std::fmt::Display) -> &mut Self {
        writeln!(self.text, "{key} = {value}").expect("in-memory write");
        self
    }

    /// Appends `key = <float>` with lossless formatting.
    pub fn float(&mut self, key: &str, value: f64) -> &mut Self {
        self.line(key, fmt(value))
    }

    /// Appends a blank separator line.
    pub fn blank(&mut self) -> &mut Self {
        self.text.push('\n');
        self
    }

    pub fn into_string(self) -> String {
        self.text
    }
}

/// A dataset CSV parsed back into columns: sample times plus one value
/// column per observed compartment, labels in header order.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedDataset {
    pub labels: Vec<String>,
    pub times: Vec<f64>,
    /// `values[row][column]`, column-aligned with `labels`.
    pub values: Vec<Vec<f64>>,
}

/// Serializes a dataset to CSV: `t` plus one column per observed
/// compartment, rows in time order.
pub fn dataset_csv(meta: &Meta, data: &SyntheticDataset) -> Result<String> {
    let mut header: Vec<&str> = vec!["t"];
    for &c in &data.observed {
        header.push(COMPARTMENT_LABELS[c]);
    }
    let rows = data.times.iter().zip(&data.observations).map(|(t, y)| {
        let mut row = Vec::with_capacity(header.len());
        row.push(fmt(*t));
        for &c in &data.observed {
            row.push(fmt(y[c]));
        }
        row
    });
    csv_document(meta, &header, rows)
}

/// Parses a dataset CSV produced by [`dataset_csv`] (or any CSV with a `t`
/// column followed by compartment-label columns in ascending compartment
/// order).
pub fn parse_dataset_csv(text: &str) -> Result<ParsedDataset> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());

    let headers = reader.headers().context("reading dataset CSV header")?;
    let mut columns = headers.iter();
    match columns.next() {
        Some("t") => {}
        other => bail!(
            "dataset CSV must start with a `t` column, found {:?}",
            other.unwrap_or("<empty>")
        ),
    }
    let labels: Vec<String> = columns.map(str::to_owned).collect();
    if labels.is_empty() {
        bail!("dataset CSV has no observed-compartment columns");
    }
    let mut last_index: Option<usize> = None;
    for label in &labels {
        let index = compartment_index(label)?;
        if let Some(prev) = last_index {
            if index <= prev {
                bail!(
                    "dataset CSV columns must be distinct and in compartment order; `{label}` is out of place"
                );
            }
        }
        last_index = Some(index);
    }

    let mut times = Vec::new();
    let mut values = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.with_context(|| format!("reading dataset CSV row {}", i + 1))?;
        if record.len() != labels.len() + 1 {
            bail!(
                "dataset CSV row {} has {} fields, expected {}",
                i + 1,
                record.len(),
                labels.len() + 1
            );
        }
        let mut fields = record.iter();
        let t: f64 = parse_float(fields.next().expect("length checked"), i + 1)?;
        if let Some(&prev) = times.last() {
            if t <= prev {
                bail!("dataset CSV times must be strictly increasing (row {})", i + 1);
            }
        }
        times.push(t);
        let row: Vec<f64> = fields
            .map(|field| parse_float(field, i + 1))
            .collect::<Result<_>>()?;
        values.push(row);
    }
    if times.is_empty() {
        bail!("dataset CSV has no data rows");
    }
    Ok(ParsedDataset { labels, times, values })
}

fn parse_float(field: &str, row: usize) -> Result<f64> {
    field
        .parse::<f64>()
        .with_context(|| format!("dataset CSV row {row}: `{field}` is not a number"))
}

fn compartment_index(label: &str) -> Result<usize> {
    COMPARTMENT_LABELS
        .iter()
        .position(|&l| l == label)
        .with_context(|| format!("`{label}` is not a compartment label"))
}

/// Maps observed-compartment labels to ascending state indices, rejecting
/// unknown labels and duplicates.
pub fn observed_indices(labels: &[&str]) -> Result<Vec<usize>> {
    let mut indices = Vec::with_capacity(labels.len());
    for label in labels {
        indices.push(compartment_index(label)?);
    }
    indices.sort_unstable();
    if indices.windows(2).any(|w| w[0] == w[1]) {
        bail!("observed compartment labels contain a duplicate");
    }
    Ok(indices)
}

/// The dataset sidecar: everything needed to reproduce or refit the
/// dataset, stored as TOML next to the CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetMeta {
    pub seed: u64,
    pub noise_sd: f64,
    pub noise_mode: NoiseMode,
    /// Observed compartment labels, ascending in compartment order.
    pub observed: Vec<String>,
    /// Per-compartment noise scales (all twelve, index-aligned).
    pub scales: Vec<f64>,
    /// Initial state used to generate the dataset (all twelve, index-aligned).
    pub y0: Vec<f64>,
    /// Generating parameters (the fit's ground truth).
    pub truth: Params,
}

impl DatasetMeta {
    pub fn from_dataset(data: &SyntheticDataset, y0: &StateVector) -> Self {
        DatasetMeta {
            seed: data.seed,
            noise_sd: data.noise_sd,
            noise_mode: data.noise_mode,
            observed: data
                .observed
                .iter()
                .map(|&c| COMPARTMENT_LABELS[c].to_owned())
                .collect(),
            scales: data.scales.to_vec(),
            y0: y0.iter().copied().collect(),
            truth: data.truth,
        }
    }
}

/// Serializes the sidecar with the metadata line as a leading comment.
pub fn dataset_meta_toml(meta: &Meta, dataset_meta: &DatasetMeta) -> Result<String> {
    let body = toml::to_string(dataset_meta).context("serializing dataset sidecar")?;
    Ok(format!("{}\n{body}", meta.line()))
}

/// Parses a sidecar produced by [`dataset_meta_toml`].
pub fn parse_dataset_meta(text: &str) -> Result<DatasetMeta> {
    let meta: DatasetMeta = toml::from_str(text).context("parsing dataset sidecar")?;
    if meta.scales.len() != 12 {
        bail!("dataset sidecar must list exactly 12 scales, found {}", meta.scales.len());
    }
    if meta.y0.len() != 12 {
        bail!("dataset sidecar must list exactly 12 y0 entries, found {}", meta.y0.len());
    }
    meta.truth.validate().context("dataset sidecar truth parameters")?;
    Ok(meta)
}

/// Reassembles a [`SyntheticDataset`] from a parsed CSV and its sidecar.
/// Unobserved components of each observation are zero; the estimation
/// routines only ever read observed components.
pub fn assemble_dataset(
    parsed: &ParsedDataset,
    meta: &DatasetMeta,
) -> Result<(SyntheticDataset, StateVector)> {
    if parsed.labels != meta.observed {
        bail!(
            "dataset CSV columns {:?} do not match sidecar observed list {:?}",
            parsed.labels,
            meta.observed
        );
    }
    let observed = observed_indices(
        &parsed.labels.iter().map(String::as_str).collect::<Vec<_>>(),
    )?;
    let mut scales = [0.0; 12];
    scales.copy_from_slice(&meta.scales);
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
    let y0 = StateVector::from_iterator(meta.y0.iter().copied());
    Ok((
        SyntheticDataset {
            times: parsed.times.clone(),
            observations,
            observed,
            scales,
            noise_sd: meta.noise_sd,
            noise_mode: meta.noise_mode,
            seed: meta.seed,
            truth: meta.truth,
        },
        y0,
    ))
}

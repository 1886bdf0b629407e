//! Fingerprint data model: compounds, weighted fingerprints and datasets.
//!
//! Parsing lives in [`io`], the synthetic generator in [`synth`].

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub mod io;
pub mod synth;

pub use io::{
    parse_csv_pair, parse_json, read_dataset_dir, to_json, write_csv_pair, write_dataset_dir,
    DatasetFormat, ParseOptions,
};
pub use synth::{generate_synthetic_dataset, structure_labels, GroupSpec, StructureKind, SynthConfig};

/// Input weights must sum to one within this tolerance.
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;

/// One chemical compound: a mass spectrum plus two retention times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Compound {
    pub id: String,
    /// Retention time on the first (boiling point) column, seconds.
    pub rt_boiling: f64,
    /// Retention time on the second (polarity) column, seconds.
    pub rt_polarity: f64,
    pub spectrum: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Entry {
    pub compound_index: usize,
    pub weight: f64,
}

/// A sample: a weighted set of compounds with weights on the simplex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fingerprint {
    pub sample_id: String,
    #[serde(default)]
    pub label: Option<String>,
    pub entries: Vec<Entry>,
}

impl Fingerprint {
    pub fn weight_sum(&self) -> f64 {
        self.entries.iter().map(|e| e.weight).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub p: usize,
    pub compounds: Vec<Compound>,
    pub fingerprints: Vec<Fingerprint>,
}

impl Dataset {
    pub fn m(&self) -> usize {
        self.compounds.len()
    }

    pub fn spectra(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.compounds.iter().map(|c| c.spectrum.as_slice())
    }

    /// Validates and returns `self`, or the full report as an error.
    pub fn validated(self) -> Result<Self> {
        let report = validate_dataset(&self);
        if report.is_ok() {
            Ok(self)
        } else {
            Err(Error::Validation(report))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Issue {
    pub location: String,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub errors: Vec<Issue>,
    pub warnings: Vec<Issue>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.errors.is_empty()
    }

    fn error(&mut self, location: impl Into<String>, message: impl Into<String>) {
        self.errors.push(Issue {
            location: location.into(),
            message: message.into(),
        });
    }

    fn warn(&mut self, location: impl Into<String>, message: impl Into<String>) {
        self.warnings.push(Issue {
            location: location.into(),
            message: message.into(),
        });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for issue in &self.errors {
            writeln!(f, "error: {}: {}", issue.location, issue.message)?;
        }
        for issue in &self.warnings {
            writeln!(f, "warning: {}: {}", issue.location, issue.message)?;
        }
        Ok(())
    }
}

/// Rescales weights so they sum to one.
pub fn normalize_weights(fp: &Fingerprint) -> Result<Fingerprint> {
    if let Some(bad) = fp.entries.iter().find(|e| !(e.weight >= 0.0) || !e.weight.is_finite()) {
        return Err(Error::invalid(format!(
            "sample {}: weight {} of compound {} is negative or not finite",
            fp.sample_id, bad.weight, bad.compound_index
        )));
    }
    let sum = fp.weight_sum();
    if !(sum > 0.0) {
        return Err(Error::invalid(format!(
            "sample {}: all weights are zero",
            fp.sample_id
        )));
    }
    let mut out = fp.clone();
    for e in &mut out.entries {
        e.weight /= sum;
    }
    Ok(out)
}

/// Checks every dataset invariant and reports all violations.
pub fn validate_dataset(ds: &Dataset) -> ValidationReport {
    let mut report = ValidationReport::default();
    if ds.p == 0 {
        report.error("dataset", "spectrum dimension p must be at least 1");
    }
    if ds.compounds.is_empty() {
        report.error("dataset", "no compounds");
    }

    let mut ids = HashSet::new();
    for (i, c) in ds.compounds.iter().enumerate() {
        let loc = format!("compound {} (index {i})", c.id);
        if !ids.insert(c.id.as_str()) {
            report.error(&loc, "duplicate compound id");
        }
        if c.spectrum.len() != ds.p {
            report.error(
                &loc,
                format!("spectrum has {} entries, expected p = {}", c.spectrum.len(), ds.p),
            );
        }
        if let Some((k, v)) = c
            .spectrum
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || **v < 0.0)
        {
            report.error(&loc, format!("spectrum entry s_{k} = {v} is negative or not finite"));
        } else if !c.spectrum.iter().any(|v| *v > 0.0) {
            report.error(&loc, "spectrum has no positive entry");
        }
        for (name, rt) in [("rt_boiling", c.rt_boiling), ("rt_polarity", c.rt_polarity)] {
            if !rt.is_finite() || rt < 0.0 {
                report.error(&loc, format!("{name} = {rt} is negative or not finite"));
            }
        }
    }

    let mut samples = HashSet::new();
    for fp in &ds.fingerprints {
        let loc = format!("sample {}", fp.sample_id);
        if !samples.insert(fp.sample_id.as_str()) {
            report.error(&loc, "duplicate sample id");
        }
        if fp.entries.is_empty() {
            report.error(&loc, "fingerprint has no entries");
            continue;
        }
        if fp.label.is_none() {
            report.warn(&loc, "no label");
        }
        let mut seen = HashSet::new();
        let mut weights_ok = true;
        for e in &fp.entries {
            if e.compound_index >= ds.compounds.len() {
                report.error(
                    &loc,
                    format!(
                        "references compound index {} but the dataset has {} compounds",
                        e.compound_index,
                        ds.compounds.len()
                    ),
                );
            }
            if !seen.insert(e.compound_index) {
                report.error(&loc, format!("duplicate compound index {}", e.compound_index));
            }
            if !e.weight.is_finite() || !(0.0..=1.0).contains(&e.weight) {
                report.error(
                    &loc,
                    format!("weight {} of compound {} outside [0, 1]", e.weight, e.compound_index),
                );
                weights_ok = false;
            }
        }
        if weights_ok {
            let sum = fp.weight_sum();
            if (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
                report.error(
                    &loc,
                    format!("weights sum to {sum}, expected 1±{WEIGHT_SUM_TOLERANCE:e}"),
                );
            }
        }
        let zeros = fp.entries.iter().filter(|e| e.weight == 0.0).count();
        if zeros > 0 {
            report.warn(&loc, format!("{zeros} zero-weight entries"));
        }
    }
    report
}

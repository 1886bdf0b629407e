//! Dataset file formats.
//!
//! * csv-pair: `compounds.csv` (`id,rt_boiling,rt_polarity,s_0,...,s_{p-1}`)
//!   and `fingerprints.csv` (`sample_id,label,compound_id,weight`, one row per
//!   entry, `compound_id` referring to a compound `id`).
//! * single-json: `{ "p": .., "compounds": [..], "fingerprints": [..] }` with
//!   entries given as `{ "compound_index": .., "weight": .. }`.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Read;
use std::path::Path;

use super::{normalize_weights, Compound, Dataset, Entry, Fingerprint};
use crate::{Error, Result};

pub const COMPOUNDS_FILE: &str = "compounds.csv";
pub const FINGERPRINTS_FILE: &str = "fingerprints.csv";
pub const JSON_FILE: &str = "dataset.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetFormat {
    CsvPair,
    SingleJson,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ParseOptions {
    /// Rescale each fingerprint to unit mass instead of rejecting sums off by more than 1e-9.
    pub renormalize: bool,
}

/// Parses the csv-pair format and validates the result.
pub fn parse_csv_pair<C: Read, F: Read>(
    compounds: C,
    fingerprints: F,
    opts: ParseOptions,
) -> Result<Dataset> {
    finish(parse_csv_pair_raw(compounds, fingerprints)?, opts)
}

/// Parses the single-json format and validates the result.
pub fn parse_json<R: Read>(input: R, opts: ParseOptions) -> Result<Dataset> {
    finish(parse_json_raw(input)?, opts)
}

fn finish(mut ds: Dataset, opts: ParseOptions) -> Result<Dataset> {
    if opts.renormalize {
        for fp in &mut ds.fingerprints {
            *fp = normalize_weights(fp)?;
        }
    }
    ds.validated()
}

pub(crate) fn parse_json_raw<R: Read>(input: R) -> Result<Dataset> {
    serde_json::from_reader(input).map_err(|e| {
        Error::parse(
            format!("{JSON_FILE}:{}:{}", e.line(), e.column()),
            e.to_string(),
        )
    })
}

fn line_of(record: &csv::StringRecord) -> u64 {
    record.position().map_or(0, |p| p.line())
}

fn csv_error(file: &str, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    Error::parse(format!("{file}:{line}"), e.to_string())
}

fn field_f64(file: &str, record: &csv::StringRecord, idx: usize, name: &str) -> Result<f64> {
    let raw = record.get(idx).unwrap_or("");
    raw.trim().parse::<f64>().map_err(|_| {
        Error::parse(
            format!("{file}:{}", line_of(record)),
            format!("field {name}: cannot parse {raw:?} as a number"),
        )
    })
}

/// Structural parse of the csv pair. Invariants other than syntax and
/// reference resolution are left to [`super::validate_dataset`].
pub(crate) fn parse_csv_pair_raw<C: Read, F: Read>(compounds: C, fingerprints: F) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(compounds);
    let header = rdr
        .headers()
        .map_err(|e| csv_error(COMPOUNDS_FILE, e))?
        .clone();
    let fixed = ["id", "rt_boiling", "rt_polarity"];
    if header.len() < 4 || fixed.iter().zip(header.iter()).any(|(a, b)| *a != b.trim()) {
        return Err(Error::parse(
            format!("{COMPOUNDS_FILE}:1"),
            "header must be id,rt_boiling,rt_polarity,s_0,...,s_{p-1}",
        ));
    }
    let p = header.len() - 3;
    for (k, name) in header.iter().skip(3).enumerate() {
        if name.trim() != format!("s_{k}") {
            return Err(Error::parse(
                format!("{COMPOUNDS_FILE}:1"),
                format!("expected column s_{k}, found {name:?}"),
            ));
        }
    }

    let mut out = Vec::new();
    let mut index = HashMap::new();
    for record in rdr.records() {
        let record = record.map_err(|e| csv_error(COMPOUNDS_FILE, e))?;
        let id = record.get(0).unwrap_or("").trim().to_string();
        if id.is_empty() {
            return Err(Error::parse(
                format!("{COMPOUNDS_FILE}:{}", line_of(&record)),
                "empty compound id",
            ));
        }
        if index.insert(id.clone(), out.len()).is_some() {
            return Err(Error::parse(
                format!("{COMPOUNDS_FILE}:{}", line_of(&record)),
                format!("duplicate compound id {id:?}"),
            ));
        }
        let rt_boiling = field_f64(COMPOUNDS_FILE, &record, 1, "rt_boiling")?;
        let rt_polarity = field_f64(COMPOUNDS_FILE, &record, 2, "rt_polarity")?;
        let spectrum = (0..p)
            .map(|k| field_f64(COMPOUNDS_FILE, &record, 3 + k, &format!("s_{k}")))
            .collect::<Result<Vec<_>>>()?;
        out.push(Compound {
            id,
            rt_boiling,
            rt_polarity,
            spectrum,
        });
    }

    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(fingerprints);
    let header = rdr
        .headers()
        .map_err(|e| csv_error(FINGERPRINTS_FILE, e))?
        .clone();
    let expected = ["sample_id", "label", "compound_id", "weight"];
    if header.len() != 4 || expected.iter().zip(header.iter()).any(|(a, b)| *a != b.trim()) {
        return Err(Error::parse(
            format!("{FINGERPRINTS_FILE}:1"),
            "header must be sample_id,label,compound_id,weight",
        ));
    }
    let mut fps: Vec<Fingerprint> = Vec::new();
    let mut by_sample: HashMap<String, usize> = HashMap::new();
    for record in rdr.records() {
        let record = record.map_err(|e| csv_error(FINGERPRINTS_FILE, e))?;
        let loc = || format!("{FINGERPRINTS_FILE}:{}", line_of(&record));
        let sample_id = record.get(0).unwrap_or("").trim().to_string();
        if sample_id.is_empty() {
            return Err(Error::parse(loc(), "empty sample id"));
        }
        let label = Some(record.get(1).unwrap_or("").trim())
            .filter(|l| !l.is_empty())
            .map(str::to_string);
        let compound_id = record.get(2).unwrap_or("").trim();
        let compound_index = *index.get(compound_id).ok_or_else(|| {
            Error::parse(
                loc(),
                format!("sample {sample_id} references unknown compound {compound_id:?}"),
            )
        })?;
        let weight = field_f64(FINGERPRINTS_FILE, &record, 3, "weight")?;
        let slot = *by_sample.entry(sample_id.clone()).or_insert_with(|| {
            fps.push(Fingerprint {
                sample_id: sample_id.clone(),
                label: label.clone(),
                entries: Vec::new(),
            });
            fps.len() - 1
        });
        if fps[slot].label != label {
            return Err(Error::parse(
                loc(),
                format!("sample {sample_id} has conflicting labels"),
            ));
        }
        fps[slot].entries.push(Entry {
            compound_index,
            weight,
        });
    }

    Ok(Dataset {
        p,
        compounds: out,
        fingerprints: fps,
    })
}

/// Detects the format of a dataset directory.
pub fn detect_format(dir: &Path) -> Result<DatasetFormat> {
    if !dir.is_dir() {
        return Err(Error::io(
            dir,
            std::io::Error::new(std::io::ErrorKind::NotFound, "dataset directory not found"),
        ));
    }
    if dir.join(COMPOUNDS_FILE).is_file() && dir.join(FINGERPRINTS_FILE).is_file() {
        Ok(DatasetFormat::CsvPair)
    } else if dir.join(JSON_FILE).is_file() {
        Ok(DatasetFormat::SingleJson)
    } else {
        Err(Error::parse(
            dir.display().to_string(),
            format!("neither {COMPOUNDS_FILE}+{FINGERPRINTS_FILE} nor {JSON_FILE} found"),
        ))
    }
}

fn open(path: &Path) -> Result<fs::File> {
    fs::File::open(path).map_err(|e| Error::io(path, e))
}

/// Reads a dataset directory without enforcing invariants, for reporting.
pub fn read_dataset_dir_unvalidated(dir: &Path) -> Result<Dataset> {
    match detect_format(dir)? {
        DatasetFormat::CsvPair => parse_csv_pair_raw(
            open(&dir.join(COMPOUNDS_FILE))?,
            open(&dir.join(FINGERPRINTS_FILE))?,
        ),
        DatasetFormat::SingleJson => parse_json_raw(open(&dir.join(JSON_FILE))?),
    }
}

/// Reads and validates a dataset directory in either format.
pub fn read_dataset_dir(dir: &Path, opts: ParseOptions) -> Result<Dataset> {
    finish(read_dataset_dir_unvalidated(dir)?, opts)
}

/// Serializes to the csv pair. Floats use the shortest round-trip form.
pub fn write_csv_pair(ds: &Dataset) -> (String, String) {
    let mut compounds = String::from("id,rt_boiling,rt_polarity");
    for k in 0..ds.p {
        write!(compounds, ",s_{k}").unwrap();
    }
    compounds.push('\n');
    for c in &ds.compounds {
        write!(compounds, "{},{},{}", csv_field(&c.id), c.rt_boiling, c.rt_polarity).unwrap();
        for v in &c.spectrum {
            write!(compounds, ",{v}").unwrap();
        }
        compounds.push('\n');
    }

    let mut fingerprints = String::from("sample_id,label,compound_id,weight\n");
    for fp in &ds.fingerprints {
        let label = fp.label.as_deref().unwrap_or("");
        for e in &fp.entries {
            writeln!(
                fingerprints,
                "{},{},{},{}",
                csv_field(&fp.sample_id),
                csv_field(label),
                csv_field(&ds.compounds[e.compound_index].id),
                e.weight
            )
            .unwrap();
        }
    }
    (compounds, fingerprints)
}

pub fn to_json(ds: &Dataset) -> String {
    serde_json::to_string(ds).expect("dataset serializes")
}

/// Writes the dataset into `dir` in the requested format.
pub fn write_dataset_dir(ds: &Dataset, dir: &Path, format: DatasetFormat) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let write = |name: &str, body: &str| {
        let path = dir.join(name);
        fs::write(&path, body).map_err(|e| Error::io(&path, e))
    };
    match format {
        DatasetFormat::CsvPair => {
            let (c, f) = write_csv_pair(ds);
            write(COMPOUNDS_FILE, &c)?;
            write(FINGERPRINTS_FILE, &f)
        }
        DatasetFormat::SingleJson => write(JSON_FILE, &to_json(ds)),
    }
}

pub(crate) fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

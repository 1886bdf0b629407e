//! Stage helpers shared by the subcommands, and the end-to-end `run` pipeline.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::codebook::{diffusion_kmeans, sample_histograms, write_hist_csv, Codebook, SampleHistogram};
use crate::embed::{embed_samples, to_csv, to_svg};
use crate::geometry::{renormalize, AffinityMatrix, CosineDistances, DiffusionMap, Spectrum};
use crate::inference::{
    cross_validate, default_sigma_grid, two_sample_report, BinTestStrategy, BinaryLabels, CvResult,
    DEFAULT_LAMBDA_GRID,
};
use crate::ingest::{read_dataset_dir, Dataset, ParseOptions};
use crate::metrics::{emd_pairwise, gdd_pairwise, DistanceMatrix, GroundMatrix};
use crate::{Error, Result, Stage};

/// `auto` or an explicit value.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "NumOrText", into = "String", bound = "T: ChoiceValue")]
pub enum Choice<T> {
    #[default]
    Auto,
    Value(T),
}

#[derive(Deserialize)]
#[serde(untagged)]
enum NumOrText {
    Num(f64),
    Text(String),
}

pub trait ChoiceValue: Copy + fmt::Display + std::str::FromStr {
    fn from_f64(v: f64) -> Option<Self>;
}

impl ChoiceValue for f64 {
    fn from_f64(v: f64) -> Option<Self> {
        Some(v)
    }
}

impl ChoiceValue for usize {
    fn from_f64(v: f64) -> Option<Self> {
        (v >= 0.0 && v.fract() == 0.0).then_some(v as usize)
    }
}

impl<T: ChoiceValue> std::str::FromStr for Choice<T> {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s == "auto" {
            return Ok(Choice::Auto);
        }
        s.parse()
            .map(Choice::Value)
            .map_err(|_| format!("expected `auto` or a number, got {s:?}"))
    }
}

impl<T: ChoiceValue> TryFrom<NumOrText> for Choice<T> {
    type Error = String;

    fn try_from(raw: NumOrText) -> std::result::Result<Self, String> {
        match raw {
            NumOrText::Num(v) => T::from_f64(v)
                .map(Choice::Value)
                .ok_or_else(|| format!("invalid value {v}")),
            NumOrText::Text(s) => s.parse(),
        }
    }
}

impl<T: ChoiceValue> From<Choice<T>> for String {
    fn from(c: Choice<T>) -> String {
        c.to_string()
    }
}

impl<T: fmt::Display> fmt::Display for Choice<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Choice::Auto => f.write_str("auto"),
            Choice::Value(v) => v.fmt(f),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    #[default]
    Gdd,
    Emd,
}

/// Diffusion-map parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapParams {
    pub alpha: f64,
    pub eps: Choice<f64>,
    pub dim: Choice<usize>,
    pub t: u32,
    pub eigenvalue_scaling: bool,
}

/// A map together with the bandwidth and dimension actually used.
pub struct BuiltMap {
    pub map: DiffusionMap,
    pub eps: f64,
    pub d: usize,
}

pub fn build_map(ds: &Dataset, params: MapParams) -> Result<BuiltMap> {
    if !(params.alpha >= 0.0) || !params.alpha.is_finite() {
        return Err(Error::invalid(format!("alpha must be nonnegative, got {}", params.alpha)));
    }
    let distances = CosineDistances::compute(ds.spectra())?;
    let eps = match params.eps {
        Choice::Auto => distances.median_bandwidth()?,
        Choice::Value(e) => e,
    };
    let affinity = AffinityMatrix::from_distances(&distances, eps)?;
    let markov = renormalize(&affinity, params.alpha)?;
    let spectrum = Spectrum::of(&markov)?;
    let d = match params.dim {
        Choice::Auto => spectrum.auto_dimension(),
        Choice::Value(d) => d,
    };
    let t = if params.eigenvalue_scaling { params.t } else { 0 };
    let map = spectrum.embed(d, t)?;
    Ok(BuiltMap { map, eps, d })
}

/// Histograms for every fingerprint, after checking the codebook covers the dataset.
pub fn dataset_histograms(ds: &Dataset, cb: &Codebook) -> Result<Vec<SampleHistogram>> {
    if cb.assignment().len() != ds.m() {
        return Err(Error::invalid(format!(
            "codebook assigns {} compounds, dataset has {}",
            cb.assignment().len(),
            ds.m()
        )));
    }
    sample_histograms(&ds.fingerprints, cb)
}

pub fn distance_matrix(
    hists: &[SampleHistogram],
    cb: &Codebook,
    metric: Metric,
    ground: Option<GroundMatrix>,
) -> Result<DistanceMatrix> {
    let ids: Vec<String> = hists.iter().map(|h| h.sample_id.clone()).collect();
    let values: Vec<_> = hists.iter().map(|h| h.histogram.clone()).collect();
    match metric {
        Metric::Gdd => gdd_pairwise(ids, &values, cb),
        Metric::Emd => {
            let ground = ground.unwrap_or_else(|| GroundMatrix::from_codebook(cb));
            emd_pairwise(ids, &values, &ground)
        }
    }
}

/// Labels for every sample of `dist`, in row order.
pub fn align_labels(dist: &DistanceMatrix, labels: &BTreeMap<String, String>) -> Result<BinaryLabels> {
    let ordered = dist
        .ids()
        .iter()
        .map(|id| {
            labels
                .get(id)
                .filter(|l| !l.is_empty())
                .cloned()
                .ok_or_else(|| Error::invalid(format!("sample {id} has no label")))
        })
        .collect::<Result<Vec<_>>>()?;
    BinaryLabels::from_labels(&ordered)
}

/// Classifier cross-validation output.
#[derive(Debug, Clone, Serialize)]
pub struct ClassifyReport {
    pub classes: [String; 2],
    pub seed: u64,
    #[serde(flatten)]
    pub cv: CvResult,
}

pub fn classify(dist: &DistanceMatrix, labels: &BinaryLabels, folds: usize, seed: u64) -> Result<ClassifyReport> {
    let sigmas = default_sigma_grid(dist)?;
    let cv = cross_validate(dist, &labels.positive, folds, &sigmas, &DEFAULT_LAMBDA_GRID, seed)?;
    Ok(ClassifyReport {
        classes: labels.classes.clone(),
        seed,
        cv,
    })
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub(crate) fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

/// Everything `fp run` needs. Read from a flat TOML file; flags override.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub input: PathBuf,
    pub out_dir: PathBuf,
    pub renormalize: bool,
    pub eps: Choice<f64>,
    pub alpha: f64,
    pub dim: Choice<usize>,
    pub t: u32,
    pub eigenvalue_scaling: bool,
    pub k: usize,
    pub max_iter: usize,
    pub seed: u64,
    pub metric: Metric,
    pub folds: usize,
    pub n_perm: usize,
    pub q: f64,
    pub strategy: BinTestStrategy,
    pub dims: [usize; 2],
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            input: PathBuf::from("data"),
            out_dir: PathBuf::from("out"),
            renormalize: false,
            eps: Choice::Auto,
            alpha: 1.0,
            dim: Choice::Auto,
            t: 1,
            eigenvalue_scaling: true,
            k: crate::codebook::DEFAULT_K,
            max_iter: 300,
            seed: 0,
            metric: Metric::Gdd,
            folds: 5,
            n_perm: 999,
            q: 0.05,
            strategy: BinTestStrategy::default(),
            dims: [0, 1],
        }
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Usage(format!("config: {e}")))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Usage(m) => Error::Usage(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    fn map_params(&self) -> MapParams {
        MapParams {
            alpha: self.alpha,
            eps: self.eps,
            dim: self.dim,
            t: self.t,
            eigenvalue_scaling: self.eigenvalue_scaling,
        }
    }
}

/// Values the pipeline resolved from `auto` settings.
#[derive(Debug, Clone, Serialize)]
pub struct Resolved {
    pub eps: f64,
    pub d: usize,
    pub m: usize,
    pub samples: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub seed: u64,
    pub config: PipelineConfig,
    pub resolved: Resolved,
    /// Output file name to SHA-256 hex digest.
    pub outputs: BTreeMap<String, String>,
}

pub const MANIFEST_FILE: &str = "manifest.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Runs validate, map, codebook, hist, dist, classify, test and embed, writing
/// every artifact plus `manifest.json` into `config.out_dir`.
pub fn run_pipeline(config: &PipelineConfig) -> Result<Manifest> {
    let ds = read_dataset_dir(
        &config.input,
        ParseOptions {
            renormalize: config.renormalize,
        },
    )
    .map_err(|e| e.in_stage(Stage::Validate))?;
    let out = &config.out_dir;
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let mut outputs = BTreeMap::new();
    let mut emit = |name: &str, bytes: &[u8], stage: Stage| -> Result<()> {
        write_file(&out.join(name), bytes).map_err(|e| e.in_stage(stage))?;
        outputs.insert(name.to_string(), sha256_hex(bytes));
        Ok(())
    };

    let built = build_map(&ds, config.map_params()).map_err(|e| e.in_stage(Stage::Map))?;
    emit("map.bin", &built.map.to_bytes(), Stage::Map)?;

    let cb = diffusion_kmeans(&built.map, config.k, config.seed, config.max_iter)
        .map_err(|e| e.in_stage(Stage::Codebook))?;
    emit("cb.bin", &cb.to_bytes(), Stage::Codebook)?;

    let hists = dataset_histograms(&ds, &cb).map_err(|e| e.in_stage(Stage::Hist))?;
    emit("hist.csv", write_hist_csv(&hists).as_bytes(), Stage::Hist)?;

    let dist = distance_matrix(&hists, &cb, config.metric, None).map_err(|e| e.in_stage(Stage::Dist))?;
    emit("dist.csv", dist.to_csv().as_bytes(), Stage::Dist)?;

    let label_map: BTreeMap<String, String> = hists
        .iter()
        .filter_map(|h| h.label.clone().map(|l| (h.sample_id.clone(), l)))
        .collect();
    let labels = align_labels(&dist, &label_map).map_err(|e| e.in_stage(Stage::Classify))?;
    let cv = classify(&dist, &labels, config.folds, config.seed).map_err(|e| e.in_stage(Stage::Classify))?;
    emit("classify.json", to_json(&cv).as_bytes(), Stage::Classify)?;

    let hist_values: Vec<_> = hists.iter().map(|h| h.histogram.clone()).collect();
    let report = two_sample_report(
        &dist,
        &hist_values,
        &labels,
        config.n_perm,
        config.q,
        config.seed,
        config.strategy,
    )
    .map_err(|e| e.in_stage(Stage::Test))?;
    emit("report.json", report.to_json().as_bytes(), Stage::Test)?;

    let emb = embed_samples(&hists, &cb, (config.dims[0], config.dims[1])).map_err(|e| e.in_stage(Stage::Embed))?;
    emit("embed.csv", to_csv(&emb).as_bytes(), Stage::Embed)?;
    emit("embed.svg", to_svg(&emb).as_bytes(), Stage::Embed)?;

    let manifest = Manifest {
        tool: "fp".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        seed: config.seed,
        config: config.clone(),
        resolved: Resolved {
            eps: built.eps,
            d: built.d,
            m: ds.m(),
            samples: ds.fingerprints.len(),
        },
        outputs,
    };
    write_file(&out.join(MANIFEST_FILE), to_json(&manifest).as_bytes()).map_err(|e| e.in_stage(Stage::Manifest))?;
    Ok(manifest)
}

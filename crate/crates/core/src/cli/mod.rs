//! The `fp` command line.
//!
//! Every subcommand is a thin wrapper over the library; `fp run` chains them
//! and records a manifest. Exit codes: 0 success, 1 usage, 2 data error,
//! 3 numerical failure.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::codebook::{diffusion_kmeans, read_hist_csv, write_hist_csv, Codebook, DEFAULT_K};
use crate::embed::{embed_samples, to_csv, to_svg};
use crate::geometry::DiffusionMap;
use crate::inference::{two_sample_report, BinTestStrategy};
use crate::ingest::{
    generate_synthetic_dataset, io::read_dataset_dir_unvalidated, read_dataset_dir, validate_dataset,
    write_dataset_dir, DatasetFormat, ParseOptions, SynthConfig,
};
use crate::metrics::{convergence_curve, curve_to_csv, mmd_pairwise, DistanceMatrix, GroundMatrix};
use crate::{Error, Result};

mod pipeline;

pub use pipeline::{
    align_labels, build_map, classify, dataset_histograms, distance_matrix, run_pipeline, sha256_hex,
    BuiltMap, Choice, ClassifyReport, Manifest, MapParams, Metric, PipelineConfig, Resolved, MANIFEST_FILE,
};
use pipeline::{to_json, write_file};

#[derive(Debug, Parser)]
#[command(name = "fp", version, about = "Diffusion-geometry distances between chemical fingerprints")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset
    Synth(SynthArgs),
    /// Check a dataset directory and list every problem found
    Validate(ValidateArgs),
    /// Build the diffusion map of the compounds
    Map(MapArgs),
    /// Fit a diffusion K-means codebook
    Codebook(CodebookArgs),
    /// Bin every fingerprint into a histogram over code words
    Hist(HistArgs),
    /// Pairwise GDD or EMD between sample histograms
    Dist(DistArgs),
    /// Pairwise linear-kernel MMD in diffusion space
    Mmd(MmdArgs),
    /// Worst-pair gap between GDD and MMD as K grows
    Converge(ConvergeArgs),
    /// Cross-validated kernel logistic regression over a distance matrix
    Classify(ClassifyArgs),
    /// Global permutation test and per-bin tests between two labels
    Test(TestArgs),
    /// Project samples and code words onto two diffusion coordinates
    Embed(EmbedArgs),
    /// Run the whole pipeline and write a manifest
    Run(RunArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// TOML or JSON generator config; a two-group separable preset when omitted
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Write dataset.json instead of the csv pair
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    pub dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct DatasetOpts {
    /// Rescale fingerprint weights to sum to one instead of rejecting them
    #[arg(long)]
    pub renormalize: bool,
}

#[derive(Debug, Args)]
pub struct MapArgs {
    pub dir: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    /// Kernel bandwidth, or `auto` for the squared median distance
    #[arg(long, default_value = "auto")]
    pub eps: Choice<f64>,
    /// Embedding dimension, or `auto` for the largest spectral gap
    #[arg(long, default_value = "auto")]
    pub dim: Choice<usize>,
    #[arg(long, default_value_t = 1)]
    pub time: u32,
    /// Use the unscaled eigenvectors as coordinates
    #[arg(long)]
    pub no_eigenvalue_scaling: bool,
    #[command(flatten)]
    pub dataset: DatasetOpts,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CodebookArgs {
    pub map: PathBuf,
    #[arg(long, default_value_t = DEFAULT_K)]
    pub k: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 300)]
    pub max_iter: usize,
    #[arg(long, required_unless_present = "dump_members")]
    pub out: Option<PathBuf>,
    /// Print `bin,compound_index,compound_id` for an existing codebook
    /// (MAP is then read as cb.bin); ids come from --dataset
    #[arg(long)]
    pub dump_members: bool,
    #[arg(long, requires = "dump_members")]
    pub dataset: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct HistArgs {
    pub dir: PathBuf,
    pub map: PathBuf,
    pub codebook: PathBuf,
    #[command(flatten)]
    pub dataset: DatasetOpts,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DistArgs {
    pub hist: PathBuf,
    pub codebook: PathBuf,
    #[arg(long, value_enum, default_value_t = Metric::Gdd)]
    pub metric: Metric,
    /// K x K ground-distance CSV without header for EMD (default: centroid distances)
    #[arg(long)]
    pub ground: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MmdArgs {
    pub dir: PathBuf,
    pub map: PathBuf,
    #[command(flatten)]
    pub dataset: DatasetOpts,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ConvergeArgs {
    pub dir: PathBuf,
    pub map: PathBuf,
    /// Comma-separated K values; `all` means one bin per compound
    #[arg(long, default_value = "1,10,50,100,all")]
    pub k: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 300)]
    pub max_iter: usize,
    #[command(flatten)]
    pub dataset: DatasetOpts,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    pub dist: PathBuf,
    /// CSV with `sample_id` and `label` columns (hist.csv qualifies)
    pub labels: PathBuf,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TestArgs {
    pub dist: PathBuf,
    pub hist: PathBuf,
    /// CSV with `sample_id` and `label` columns (hist.csv qualifies)
    pub labels: PathBuf,
    #[arg(long, default_value_t = 999)]
    pub nperm: usize,
    #[arg(long, default_value_t = 0.05)]
    pub q: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Per-bin null distribution: hypergeometric or binomial
    #[arg(long, default_value = "hypergeometric")]
    pub strategy: BinTestStrategy,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EmbedArgs {
    pub hist: PathBuf,
    pub codebook: PathBuf,
    /// Two diffusion coordinates to plot
    #[arg(long, default_value = "0,1", value_parser = parse_dims)]
    pub dims: (usize, usize),
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Flat TOML config; flags below override its values
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub renormalize: bool,
    #[arg(long)]
    pub eps: Option<Choice<f64>>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub dim: Option<Choice<usize>>,
    #[arg(long)]
    pub time: Option<u32>,
    #[arg(long)]
    pub no_eigenvalue_scaling: bool,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub metric: Option<Metric>,
    #[arg(long)]
    pub folds: Option<usize>,
    #[arg(long)]
    pub nperm: Option<usize>,
    #[arg(long)]
    pub q: Option<f64>,
    #[arg(long)]
    pub strategy: Option<BinTestStrategy>,
    #[arg(long, value_parser = parse_dims)]
    pub dims: Option<(usize, usize)>,
}

fn parse_dims(s: &str) -> std::result::Result<(usize, usize), String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [a, b] => match (a.parse(), b.parse()) {
            (Ok(a), Ok(b)) => Ok((a, b)),
            _ => Err(format!("expected two indices like 0,1, got {s:?}")),
        },
        _ => Err(format!("expected two indices like 0,1, got {s:?}")),
    }
}

impl RunArgs {
    /// Config file values with flags applied on top.
    pub fn resolve(&self) -> Result<PipelineConfig> {
        let mut c = match &self.config {
            Some(path) => PipelineConfig::read(path)?,
            None => PipelineConfig::default(),
        };
        if let Some(v) = &self.input {
            c.input = v.clone();
        }
        if let Some(v) = &self.out {
            c.out_dir = v.clone();
        }
        c.renormalize |= self.renormalize;
        if let Some(v) = self.eps {
            c.eps = v;
        }
        if let Some(v) = self.alpha {
            c.alpha = v;
        }
        if let Some(v) = self.dim {
            c.dim = v;
        }
        if let Some(v) = self.time {
            c.t = v;
        }
        if self.no_eigenvalue_scaling {
            c.eigenvalue_scaling = false;
        }
        if let Some(v) = self.k {
            c.k = v;
        }
        if let Some(v) = self.max_iter {
            c.max_iter = v;
        }
        if let Some(v) = self.seed {
            c.seed = v;
        }
        if let Some(v) = self.metric {
            c.metric = v;
        }
        if let Some(v) = self.folds {
            c.folds = v;
        }
        if let Some(v) = self.nperm {
            c.n_perm = v;
        }
        if let Some(v) = self.q {
            c.q = v;
        }
        if let Some(v) = self.strategy {
            c.strategy = v;
        }
        if let Some((a, b)) = self.dims {
            c.dims = [a, b];
        }
        Ok(c)
    }
}

impl clap::builder::ValueParserFactory for BinTestStrategy {
    type Parser = clap::builder::ValueParser;

    fn value_parser() -> Self::Parser {
        clap::builder::ValueParser::new(|s: &str| s.parse::<BinTestStrategy>().map_err(|e| e.to_string()))
    }
}

/// Writes to `path`, or to stdout when no path is given.
fn emit(path: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match path {
        Some(p) => write_file(p, bytes),
        None => std::io::stdout()
            .write_all(bytes)
            .map_err(|e| Error::io("<stdout>", e)),
    }
}

fn open(path: &Path) -> Result<fs::File> {
    fs::File::open(path).map_err(|e| Error::io(path, e))
}

fn load_dataset(dir: &Path, opts: &DatasetOpts) -> Result<crate::ingest::Dataset> {
    read_dataset_dir(
        dir,
        ParseOptions {
            renormalize: opts.renormalize,
        },
    )
}

/// `sample_id -> label` from any CSV with those two columns.
pub fn read_labels(path: &Path) -> Result<BTreeMap<String, String>> {
    let name = path.display().to_string();
    let mut rdr = csv::Reader::from_reader(open(path)?);
    let header = rdr.headers().map_err(|e| Error::parse(&name, e.to_string()))?.clone();
    let col = |want: &str| {
        header
            .iter()
            .position(|h| h.trim() == want)
            .ok_or_else(|| Error::parse(format!("{name}:1"), format!("missing `{want}` column")))
    };
    let (id_col, label_col) = (col("sample_id")?, col("label")?);
    let mut out = BTreeMap::new();
    for record in rdr.records() {
        let record = record.map_err(|e| Error::parse(&name, e.to_string()))?;
        out.insert(record[id_col].trim().to_string(), record[label_col].trim().to_string());
    }
    Ok(out)
}

fn read_ground(path: &Path) -> Result<GroundMatrix> {
    let name = path.display().to_string();
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).from_reader(open(path)?);
    let mut values = Vec::new();
    let mut rows = 0;
    for record in rdr.records() {
        let record = record.map_err(|e| Error::parse(&name, e.to_string()))?;
        rows += 1;
        for field in record.iter() {
            values.push(
                field
                    .trim()
                    .parse::<f64>()
                    .map_err(|_| Error::parse(format!("{name}:{rows}"), format!("not a number: {field:?}")))?,
            );
        }
    }
    GroundMatrix::new(rows, values)
}

fn synth_config(path: Option<&Path>) -> Result<SynthConfig> {
    let Some(path) = path else {
        return Ok(SynthConfig::two_groups(
            3,
            100,
            20,
            20,
            vec![0.8, 0.1, 0.1],
            vec![0.1, 0.1, 0.8],
        ));
    };
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let parsed = if path.extension().is_some_and(|e| e == "json") {
        serde_json::from_str(&text).map_err(|e| e.to_string())
    } else {
        toml::from_str(&text).map_err(|e| e.to_string())
    };
    parsed.map_err(|e| Error::Usage(format!("{}: {e}", path.display())))
}

fn read_hist_file(path: &Path) -> Result<Vec<crate::codebook::SampleHistogram>> {
    read_hist_csv(open(path)?).map_err(|e| match e {
        Error::Parse { location, message } => Error::Parse {
            location: location.replacen("hist.csv", &path.display().to_string(), 1),
            message,
        },
        other => other,
    })
}

fn read_dist_file(path: &Path) -> Result<DistanceMatrix> {
    DistanceMatrix::from_csv(open(path)?)
}

fn parse_k_list(spec: &str, m: usize) -> Result<Vec<usize>> {
    let mut ks = Vec::new();
    for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let k = if part == "all" {
            m
        } else {
            part.parse::<usize>()
                .map_err(|_| Error::Usage(format!("--k: not a number: {part:?}")))?
        };
        if k == 0 {
            return Err(Error::Usage("--k values must be positive".into()));
        }
        if k > m {
            eprintln!("warning: skipping K = {k} > m = {m}");
            continue;
        }
        ks.push(k);
    }
    ks.sort_unstable();
    ks.dedup();
    if ks.is_empty() {
        return Err(Error::Usage("--k leaves no usable values".into()));
    }
    Ok(ks)
}

/// Executes one parsed command.
pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth(a) => {
            let cfg = synth_config(a.config.as_deref())?;
            let ds = generate_synthetic_dataset(&cfg, a.seed)?;
            let format = if a.json {
                DatasetFormat::SingleJson
            } else {
                DatasetFormat::CsvPair
            };
            write_dataset_dir(&ds, &a.out, format)?;
            eprintln!(
                "wrote {} compounds and {} samples to {}",
                ds.m(),
                ds.fingerprints.len(),
                a.out.display()
            );
            Ok(())
        }
        Command::Validate(a) => {
            let ds = read_dataset_dir_unvalidated(&a.dir)?;
            let report = validate_dataset(&ds);
            for w in &report.warnings {
                eprintln!("warning: {}: {}", w.location, w.message);
            }
            if !report.is_ok() {
                return Err(Error::Validation(report));
            }
            println!(
                "ok: {} compounds (p = {}), {} samples",
                ds.m(),
                ds.p,
                ds.fingerprints.len()
            );
            Ok(())
        }
        Command::Map(a) => {
            let ds = load_dataset(&a.dir, &a.dataset)?;
            let built = build_map(
                &ds,
                MapParams {
                    alpha: a.alpha,
                    eps: a.eps,
                    dim: a.dim,
                    t: a.time,
                    eigenvalue_scaling: !a.no_eigenvalue_scaling,
                },
            )?;
            built.map.write(&a.out)?;
            eprintln!("eps = {}, d = {}, t = {}", built.eps, built.d, built.map.t());
            Ok(())
        }
        Command::Codebook(a) => {
            if a.dump_members {
                let cb = Codebook::read(&a.map)?;
                let ids = match &a.dataset {
                    Some(dir) => Some(read_dataset_dir_unvalidated(dir)?),
                    None => None,
                };
                let mut out = String::from("bin,compound_index,compound_id\n");
                for (bin, members) in cb.members().iter().enumerate() {
                    for &i in members {
                        let id = ids
                            .as_ref()
                            .and_then(|ds| ds.compounds.get(i))
                            .map_or(String::new(), |c| crate::ingest::io::csv_field(&c.id));
                        out.push_str(&format!("{bin},{i},{id}\n"));
                    }
                }
                return emit(None, out.as_bytes());
            }
            let map = DiffusionMap::read(&a.map)?;
            let cb = diffusion_kmeans(&map, a.k, a.seed, a.max_iter)?;
            let out = a.out.expect("required by clap");
            cb.write(&out)?;
            eprintln!("k = {}, inertia = {}", cb.k(), cb.inertia());
            Ok(())
        }
        Command::Hist(a) => {
            let ds = load_dataset(&a.dir, &a.dataset)?;
            let map = DiffusionMap::read(&a.map)?;
            let cb = Codebook::read(&a.codebook)?;
            if map.m() != ds.m() || map.d() != cb.d() {
                return Err(Error::invalid(format!(
                    "map (m = {}, d = {}) does not match dataset (m = {}) and codebook (d = {})",
                    map.m(),
                    map.d(),
                    ds.m(),
                    cb.d()
                )));
            }
            let hists = dataset_histograms(&ds, &cb)?;
            emit(a.out.as_deref(), write_hist_csv(&hists).as_bytes())
        }
        Command::Dist(a) => {
            let hists = read_hist_file(&a.hist)?;
            let cb = Codebook::read(&a.codebook)?;
            let ground = a.ground.as_deref().map(read_ground).transpose()?;
            if ground.is_some() && a.metric != Metric::Emd {
                return Err(Error::Usage("--ground only applies to --metric emd".into()));
            }
            let dist = distance_matrix(&hists, &cb, a.metric, ground)?;
            emit(a.out.as_deref(), dist.to_csv().as_bytes())
        }
        Command::Mmd(a) => {
            let ds = load_dataset(&a.dir, &a.dataset)?;
            let map = DiffusionMap::read(&a.map)?;
            let dist = mmd_pairwise(&ds.fingerprints, &map)?;
            emit(a.out.as_deref(), dist.to_csv().as_bytes())
        }
        Command::Converge(a) => {
            let ds = load_dataset(&a.dir, &a.dataset)?;
            let map = DiffusionMap::read(&a.map)?;
            let ks = parse_k_list(&a.k, map.m())?;
            let curve = convergence_curve(&ds, &map, &ks, a.seed, a.max_iter)?;
            emit(a.out.as_deref(), curve_to_csv(&curve).as_bytes())
        }
        Command::Classify(a) => {
            let dist = read_dist_file(&a.dist)?;
            let labels = align_labels(&dist, &read_labels(&a.labels)?)?;
            let report = classify(&dist, &labels, a.folds, a.seed)?;
            let json = to_json(&report);
            eprintln!(
                "accuracy = {} (sigma = {}, lambda = {})",
                report.cv.accuracy, report.cv.sigma, report.cv.lambda
            );
            emit(a.out.as_deref(), json.as_bytes())
        }
        Command::Test(a) => {
            let dist = read_dist_file(&a.dist)?;
            let labels = align_labels(&dist, &read_labels(&a.labels)?)?;
            let hists = read_hist_file(&a.hist)?;
            let by_id: BTreeMap<&str, &crate::codebook::Histogram> =
                hists.iter().map(|h| (h.sample_id.as_str(), &h.histogram)).collect();
            let aligned = dist
                .ids()
                .iter()
                .map(|id| {
                    by_id
                        .get(id.as_str())
                        .map(|h| (*h).clone())
                        .ok_or_else(|| Error::invalid(format!("sample {id} missing from {}", a.hist.display())))
                })
                .collect::<Result<Vec<_>>>()?;
            let report = two_sample_report(&dist, &aligned, &labels, a.nperm, a.q, a.seed, a.strategy)?;
            eprintln!(
                "global p = {}, {} significant bin(s)",
                report.global_p,
                report.significant_bins.len()
            );
            emit(a.out.as_deref(), report.to_json().as_bytes())
        }
        Command::Embed(a) => {
            let hists = read_hist_file(&a.hist)?;
            let cb = Codebook::read(&a.codebook)?;
            let emb = embed_samples(&hists, &cb, a.dims)?;
            if let Some(svg) = &a.svg {
                write_file(svg, to_svg(&emb).as_bytes())?;
            }
            emit(a.out.as_deref(), to_csv(&emb).as_bytes())
        }
        Command::Run(a) => {
            let config = a.resolve()?;
            let manifest = run_pipeline(&config)?;
            eprintln!(
                "wrote {} artifacts and {MANIFEST_FILE} to {}",
                manifest.outputs.len(),
                config.out_dir.display()
            );
            Ok(())
        }
    }
}

/// Applies `FP_THREADS` (0 or unset = one worker per core) to the global pool.
fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var("FP_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| Error::Usage(format!("FP_THREADS must be a nonnegative integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Usage(format!("cannot configure {n} threads: {e}")))
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = configure_threads().and_then(|()| run(cli));
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn main() -> i32 {
    main_with(std::env::args_os())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn k_list_parsing() {
        assert_eq!(parse_k_list("1,10,all", 50).unwrap(), vec![1, 10, 50]);
        assert_eq!(parse_k_list("100, 3,3", 50).unwrap(), vec![3]);
        assert!(parse_k_list("0", 5).is_err());
        assert!(parse_k_list("x", 5).is_err());
    }

    #[test]
    fn dims_parsing() {
        assert_eq!(parse_dims("0,1").unwrap(), (0, 1));
        assert_eq!(parse_dims("2, 0").unwrap(), (2, 0));
        assert!(parse_dims("1").is_err());
    }

    #[test]
    fn flags_override_config() {
        let cli = Cli::try_parse_from(["fp", "run", "--k", "7", "--dims", "1,2", "--eps", "auto"]).unwrap();
        let Command::Run(args) = cli.command else {
            panic!("expected run")
        };
        let c = args.resolve().unwrap();
        assert_eq!(c.k, 7);
        assert_eq!(c.dims, [1, 2]);
        assert_eq!(c.eps, Choice::Auto);
        assert_eq!(c.alpha, 1.0);
    }

    #[test]
    fn help_exits_zero_and_unknown_flag_one() {
        assert_eq!(main_with(["fp", "--help"]), 0);
        assert_eq!(main_with(["fp", "map", "--help"]), 0);
        assert_eq!(main_with(["fp", "map", "--bogus"]), 1);
        assert_eq!(main_with(["fp", "frobnicate"]), 1);
    }

    #[test]
    fn clap_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}

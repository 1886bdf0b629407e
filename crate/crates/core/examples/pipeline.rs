//! The whole chain in one call: validate, map, codebook, hist, dist,
//! classify, test and embed, with a checksummed manifest.
//!
//! The same run from the command line:
//!
//!     fp synth --seed 3 --out data
//!     fp run --input data --out out --k 40 --seed 7
//!
//!     cargo run --release --example pipeline

use fpgdd::cli::{run_pipeline, sha256_hex, PipelineConfig};
use fpgdd::ingest::{generate_synthetic_dataset, write_dataset_dir, DatasetFormat, SynthConfig};

fn main() -> fpgdd::Result<()> {
    let root = std::env::temp_dir().join("fpgdd-pipeline-example");
    let config = SynthConfig::two_groups(3, 100, 20, 15, vec![0.6, 0.2, 0.2], vec![0.2, 0.2, 0.6]);
    write_dataset_dir(&generate_synthetic_dataset(&config, 3)?, &root.join("data"), DatasetFormat::CsvPair)?;

    let run = PipelineConfig::from_toml(&format!(
        "input = {:?}\nout_dir = {:?}\nk = 40\nseed = 7\n",
        root.join("data"),
        root.join("out")
    ))?;
    let manifest = run_pipeline(&run)?;
    println!(
        "eps = {:.5}, d = {}, {} compounds, {} samples",
        manifest.resolved.eps, manifest.resolved.d, manifest.resolved.m, manifest.resolved.samples
    );
    for (name, digest) in &manifest.outputs {
        let bytes = std::fs::read(run.out_dir.join(name)).expect("artifact exists");
        assert_eq!(&sha256_hex(&bytes), digest);
        println!("{name:<14} {digest}");
    }
    Ok(())
}

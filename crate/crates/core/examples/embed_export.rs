//! Samples as convex combinations of code words, exported as CSV and SVG.
//!
//!     cargo run --release --example embed_export

use fpgdd::cli::{build_map, dataset_histograms, Choice, MapParams};
use fpgdd::codebook::diffusion_kmeans;
use fpgdd::embed::{embed_samples, export_embedding, ExportFormat};
use fpgdd::ingest::{generate_synthetic_dataset, StructureKind, SynthConfig};

fn main() -> fpgdd::Result<()> {
    let mut config = SynthConfig::two_groups(5, 60, 30, 12, vec![0.4, 0.3, 0.1, 0.1, 0.1], vec![0.1, 0.1, 0.1, 0.3, 0.4]);
    config.kind = StructureKind::Mixed;
    let ds = generate_synthetic_dataset(&config, 8)?;
    let params = MapParams {
        alpha: 1.0,
        eps: Choice::Auto,
        dim: Choice::Value(4),
        t: 1,
        eigenvalue_scaling: true,
    };
    let map = build_map(&ds, params)?.map;
    let cb = diffusion_kmeans(&map, 50, 1, 100)?;
    let hists = dataset_histograms(&ds, &cb)?;
    let emb = embed_samples(&hists, &cb, (0, 1))?;

    let dir = std::env::temp_dir().join("fpgdd-embed-example");
    std::fs::create_dir_all(&dir).map_err(|e| fpgdd::Error::InvalidInput(e.to_string()))?;
    for (name, format) in [("embed.csv", ExportFormat::Csv), ("embed.svg", ExportFormat::Svg)] {
        let path = dir.join(name);
        std::fs::write(&path, export_embedding(&emb, format))
            .map_err(|e| fpgdd::Error::InvalidInput(e.to_string()))?;
        println!("wrote {}", path.display());
    }
    for (id, c) in emb.sample_ids.iter().zip(&emb.coords).take(4) {
        println!("{id}: ({:.4}, {:.4})", c[0], c[1]);
    }
    Ok(())
}

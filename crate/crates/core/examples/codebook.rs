//! Diffusion K-means codebook and per-sample histograms.
//!
//! With one code word per synthetic structure, each histogram recovers the
//! mixing proportions the generator used.
//!
//!     cargo run --release --example codebook

use fpgdd::cli::{build_map, Choice, MapParams};
use fpgdd::codebook::{diffusion_kmeans, histogram};
use fpgdd::ingest::{generate_synthetic_dataset, structure_labels, SynthConfig};

fn main() -> fpgdd::Result<()> {
    let mut config = SynthConfig::two_groups(3, 150, 20, 3, vec![0.8, 0.1, 0.1], vec![0.1, 0.1, 0.8]);
    config.concentration = None;
    let ds = generate_synthetic_dataset(&config, 5)?;
    let truth = structure_labels(&config);

    let params = MapParams {
        alpha: 1.0,
        eps: Choice::Auto,
        dim: Choice::Auto,
        t: 1,
        eigenvalue_scaling: true,
    };
    let built = build_map(&ds, params)?;
    let cb = diffusion_kmeans(&built.map, 3, 7, 100)?;
    let trace: Vec<String> = cb.inertia_trace().iter().map(|v| format!("{v:.5}")).collect();
    println!("Lloyd inertia per iteration: {}", trace.join(" -> "));

    // Each code word should collect exactly one structure.
    for (bin, members) in cb.members().iter().enumerate() {
        let mut counts = [0usize; 3];
        for &i in members {
            counts[truth[i]] += 1;
        }
        println!("bin {bin}: {} compounds, by structure {counts:?}", members.len());
    }

    for fp in &ds.fingerprints {
        let h = histogram(fp, &cb)?;
        let shown: Vec<String> = h.values().iter().map(|v| format!("{v:.3}")).collect();
        println!("{:<14} [{}]", fp.sample_id, shown.join(", "));
    }
    Ok(())
}

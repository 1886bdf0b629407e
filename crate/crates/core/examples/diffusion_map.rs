//! Diffusion map of compounds lying on three noisy arcs.
//!
//! Prints the leading eigenvalues, the dimension picked by the spectral gap,
//! and mean diffusion distances within and across arcs.
//!
//!     cargo run --release --example diffusion_map

use fpgdd::geometry::{
    diffusion_distance, renormalize, AffinityMatrix, CosineDistances, Spectrum,
};
use fpgdd::ingest::{generate_synthetic_dataset, structure_labels, StructureKind, SynthConfig};

fn main() -> fpgdd::Result<()> {
    let mut config = SynthConfig::two_groups(3, 80, 24, 4, vec![1.0; 3], vec![1.0; 3]);
    config.kind = StructureKind::Arcs;
    let ds = generate_synthetic_dataset(&config, 1)?;
    let arc = structure_labels(&config);

    let distances = CosineDistances::compute(ds.spectra())?;
    let eps = distances.median_bandwidth()?;
    let affinity = AffinityMatrix::from_distances(&distances, eps)?;
    let markov = renormalize(&affinity, 1.0)?;
    let spectrum = Spectrum::of(&markov)?;

    let lambdas: Vec<String> = spectrum.eigenvalues()[..8].iter().map(|l| format!("{l:.4}")).collect();
    println!("eps = {eps:.5}");
    println!("lambda_1.. = {}", lambdas.join(" "));
    let d = spectrum.auto_dimension();
    println!("largest spectral gap gives d = {d}");

    for t in [1, 4] {
        let map = spectrum.embed(d, t)?;
        let (mut within, mut nw, mut across, mut na) = (0.0, 0, 0.0, 0);
        for i in 0..map.m() {
            for j in i + 1..map.m() {
                let dist = diffusion_distance(i, j, &map)?;
                if arc[i] == arc[j] {
                    within += dist;
                    nw += 1;
                } else {
                    across += dist;
                    na += 1;
                }
            }
        }
        println!(
            "t = {t}: mean distance within arcs {:.4}, across arcs {:.4}",
            within / nw as f64,
            across / na as f64
        );
    }
    Ok(())
}

//! GDD against exact EMD and the linear-kernel MMD.
//!
//! Times both binned metrics on the same histogram pairs and traces the
//! worst-pair gap between GDD and MMD as the codebook grows.
//!
//!     cargo run --release --example distances

use std::time::Instant;

use fpgdd::cli::{build_map, Choice, MapParams};
use fpgdd::codebook::{diffusion_kmeans, histogram};
use fpgdd::ingest::{generate_synthetic_dataset, SynthConfig};
use fpgdd::metrics::{convergence_curve, emd, gdd, mmd, GroundMatrix};

fn main() -> fpgdd::Result<()> {
    let config = SynthConfig::two_groups(4, 60, 20, 5, vec![0.7, 0.1, 0.1, 0.1], vec![0.1, 0.1, 0.1, 0.7]);
    let ds = generate_synthetic_dataset(&config, 11)?;
    let params = MapParams {
        alpha: 1.0,
        eps: Choice::Auto,
        dim: Choice::Value(6),
        t: 1,
        eigenvalue_scaling: true,
    };
    let map = build_map(&ds, params)?.map;

    let cb = diffusion_kmeans(&map, 40, 3, 100)?;
    let ground = GroundMatrix::from_codebook(&cb);
    let (a, b) = (&ds.fingerprints[0], &ds.fingerprints[9]);
    let (ha, hb) = (histogram(a, &cb)?, histogram(b, &cb)?);
    println!("{} vs {} at K = 40:", a.sample_id, b.sample_id);
    println!("  gdd = {:.6}", gdd(&ha, &hb, &cb)?);
    println!("  emd = {:.6}", emd(&ha, &hb, &ground)?);
    println!("  mmd = {:.6}", mmd(a, b, &map)?);

    let reps = 200;
    let start = Instant::now();
    for _ in 0..reps {
        std::hint::black_box(gdd(&ha, &hb, &cb)?);
    }
    let t_gdd = start.elapsed() / reps;
    let start = Instant::now();
    for _ in 0..reps {
        std::hint::black_box(emd(&ha, &hb, &ground)?);
    }
    let t_emd = start.elapsed() / reps;
    println!("  time per pair: gdd {t_gdd:?}, emd {t_emd:?}");

    let ks = [1, 5, 20, 80, map.m()];
    println!("K, worst-pair |gdd - mmd|");
    for point in convergence_curve(&ds, &map, &ks, 3, 100)? {
        println!("{:>4}  {:.3e}", point.k, point.max_gap);
    }
    Ok(())
}

//! Generate a synthetic two-group dataset, write it in both file formats,
//! read it back and show what validation reports on a broken fingerprint.
//!
//!     cargo run --example synth_and_validate

use fpgdd::ingest::{
    generate_synthetic_dataset, read_dataset_dir, validate_dataset, write_dataset_dir, DatasetFormat,
    Entry, ParseOptions, SynthConfig,
};

fn main() -> fpgdd::Result<()> {
    let config = SynthConfig::two_groups(3, 50, 16, 8, vec![0.8, 0.1, 0.1], vec![0.1, 0.1, 0.8]);
    let ds = generate_synthetic_dataset(&config, 42)?;
    println!(
        "{} compounds with p = {}, {} samples",
        ds.m(),
        ds.p,
        ds.fingerprints.len()
    );

    let root = std::env::temp_dir().join("fpgdd-synth-example");
    for (name, format) in [("csv", DatasetFormat::CsvPair), ("json", DatasetFormat::SingleJson)] {
        let dir = root.join(name);
        write_dataset_dir(&ds, &dir, format)?;
        let back = read_dataset_dir(&dir, ParseOptions::default())?;
        assert_eq!(back.fingerprints.len(), ds.fingerprints.len());
        println!("{name}: round trip ok ({})", dir.display());
    }

    // Break one sample: weights no longer on the simplex, and a dangling compound.
    let mut broken = ds.clone();
    broken.fingerprints[0].entries[0].weight += 0.4;
    broken.fingerprints[1].entries.push(Entry {
        compound_index: 10_000,
        weight: 0.0,
    });
    let report = validate_dataset(&broken);
    println!("validation of the broken copy:\n{report}");
    Ok(())
}

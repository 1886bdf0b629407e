use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use fpgdd::cli::sha256_hex;

fn fp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fp"))
        .args(args)
        .env("FP_THREADS", "2")
        .output()
        .expect("fp runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn synth(dir: &Path) {
    let o = fp(&["synth", "--seed", "5", "--out", dir.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn every_subcommand_has_help() {
    for sub in [
        "synth", "validate", "map", "codebook", "hist", "dist", "mmd", "converge", "classify", "test", "embed", "run",
    ] {
        let o = fp(&[sub, "--help"]);
        assert_eq!(o.status.code(), Some(0), "{sub}");
        assert!(!o.stdout.is_empty());
        let o = fp(&[sub, "--no-such-flag"]);
        assert_eq!(o.status.code(), Some(1), "{sub}");
    }
    assert_eq!(fp(&["--version"]).status.code(), Some(0));
}

#[test]
fn missing_input_directory_is_named() {
    let o = fp(&["validate", "/definitely/not/here"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("/definitely/not/here"));
    let o = fp(&["run", "--input", "/definitely/not/here", "--out", "/tmp/unused-fp-out"]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("[validate]") && err.contains("/definitely/not/here"), "{err}");
}

#[test]
fn subcommands_chain_like_the_pipeline() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    synth(&data);
    let p = |name: &str| tmp.path().join(name).to_str().unwrap().to_string();
    let d = data.to_str().unwrap();
    let run = |args: &[&str]| {
        let o = fp(args);
        assert!(o.status.success(), "{args:?}: {}", stderr(&o));
        o
    };
    run(&["validate", d]);
    run(&["map", d, "--dim", "3", "--out", &p("map.bin")]);
    run(&["codebook", &p("map.bin"), "--k", "12", "--seed", "7", "--out", &p("cb.bin")]);
    run(&["hist", d, &p("map.bin"), &p("cb.bin"), "--out", &p("hist.csv")]);
    run(&["dist", &p("hist.csv"), &p("cb.bin"), "--metric", "gdd", "--out", &p("dist.csv")]);
    run(&["dist", &p("hist.csv"), &p("cb.bin"), "--metric", "emd", "--out", &p("emd.csv")]);
    run(&["mmd", d, &p("map.bin"), "--out", &p("mmd.csv")]);
    run(&["converge", d, &p("map.bin"), "--k", "1,12,all", "--seed", "7", "--out", &p("curve.csv")]);
    run(&["classify", &p("dist.csv"), &p("hist.csv"), "--folds", "5", "--seed", "7", "--out", &p("cv.json")]);
    run(&[
        "test", &p("dist.csv"), &p("hist.csv"), &p("hist.csv"), "--nperm", "199", "--seed", "7", "--out", &p("report.json"),
    ]);
    run(&["embed", &p("hist.csv"), &p("cb.bin"), "--dims", "0,1", "--out", &p("embed.csv"), "--svg", &p("embed.svg")]);

    let members = run(&["codebook", &p("cb.bin"), "--dump-members", "--dataset", d]);
    let listing = String::from_utf8(members.stdout).unwrap();
    assert_eq!(listing.lines().count(), 1 + 300);
    assert!(listing.lines().nth(1).unwrap().contains(",c"));

    let curve = fs::read_to_string(p("curve.csv")).unwrap();
    let last: f64 = curve.lines().last().unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert!(last <= 1e-8);

    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(p("report.json")).unwrap()).unwrap();
    for key in ["global_p", "statistic", "n_permutations", "per_bin", "significant_bins", "config"] {
        assert!(report.get(key).is_some(), "{key}");
    }
    assert_eq!(report["per_bin"].as_array().unwrap().len(), 12);
}

#[test]
fn corrupt_or_foreign_artifacts_are_refused() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    synth(&data);
    let map = tmp.path().join("map.bin");
    let o = fp(&["map", data.to_str().unwrap(), "--out", map.to_str().unwrap()]);
    assert!(o.status.success());
    let mut bytes = fs::read(&map).unwrap();
    bytes[4] = 9; // version
    fs::write(&map, &bytes).unwrap();
    let o = fp(&["codebook", map.to_str().unwrap(), "--k", "3", "--out", tmp.path().join("cb.bin").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("version"), "{}", stderr(&o));
}

#[test]
fn bad_weights_fail_validation_unless_renormalized() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    fs::write(dir.join("compounds.csv"), "id,rt_boiling,rt_polarity,s_0,s_1,s_2\na,1,1,1,0,0\nb,1,1,0,1,0\nc,1,1,0,0,1\n").unwrap();
    fs::write(dir.join("fingerprints.csv"), "sample_id,label,compound_id,weight\nx,air,a,0.7\nx,air,b,0.7\n").unwrap();
    let o = fp(&["validate", dir.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("weights sum to 1.4, expected 1±1e-9"), "{}", stderr(&o));
    let o = fp(&["map", dir.to_str().unwrap(), "--renormalize", "--dim", "2", "--out", dir.join("m.bin").to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn pipeline_writes_checksummed_manifest_and_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    synth(&data);
    let config = tmp.path().join("run.toml");
    fs::write(&config, format!("input = {:?}\nk = 20\nseed = 7\nn_perm = 199\n", data)).unwrap();
    let mut digests = Vec::new();
    for (i, threads) in ["1", "3"].iter().enumerate() {
        let out = tmp.path().join(format!("out{i}"));
        let o = Command::new(env!("CARGO_BIN_EXE_fp"))
            .args(["run", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()])
            .env("FP_THREADS", threads)
            .output()
            .unwrap();
        assert!(o.status.success(), "{}", stderr(&o));
        let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
        assert_eq!(manifest["config"]["k"], 20);
        assert_eq!(manifest["seed"], 7);
        let outputs = manifest["outputs"].as_object().unwrap();
        assert_eq!(outputs.len(), 8);
        for (name, digest) in outputs {
            assert_eq!(&sha256_hex(&fs::read(out.join(name)).unwrap()), digest.as_str().unwrap(), "{name}");
        }
        digests.push(manifest["outputs"].clone());
    }
    assert_eq!(digests[0], digests[1]);
}

#[test]
fn stage_failures_name_the_stage() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    synth(&data);
    let o = fp(&[
        "run", "--input", data.to_str().unwrap(), "--out", tmp.path().join("o").to_str().unwrap(), "--k", "5000",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("[codebook]"), "{}", stderr(&o));
}

#[test]
fn invalid_thread_setting_is_a_usage_error() {
    let o = Command::new(env!("CARGO_BIN_EXE_fp"))
        .args(["validate", "."])
        .env("FP_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
}

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bfsynth"))
}

fn tmpdir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("bfsynth-cli-{tag}-{}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn gen_factorization(dir: &Path, bits: usize) -> (PathBuf, PathBuf) {
    let spec = dir.join(format!("factorization{bits}.aag"));
    let status = bin()
        .args(["bench", "factorization", "--bits", &bits.to_string()])
        .arg("--out")
        .arg(&spec)
        .status()
        .unwrap();
    assert!(status.success());
    (spec.clone(), spec.with_extension("json"))
}

#[test]
fn bench_then_synth_roundtrip() {
    let dir = tmpdir("roundtrip");
    let (spec, manifest) = gen_factorization(&dir, 2);
    let spec_text = fs::read_to_string(&spec).unwrap();
    assert!(spec_text.starts_with("aag "));
    let manifest_text = fs::read_to_string(&manifest).unwrap();
    assert!(manifest_text.contains("\"a0\""));

    let stats = dir.join("stats.jsonl");
    let out = dir.join("result.aag");
    let output = bin()
        .arg("synth")
        .arg(&spec)
        .arg("--outputs")
        .arg(&manifest)
        .args(["--workers", "2", "--verify"])
        .arg("--dump-stats")
        .arg(&stats)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(
        output.status.success(),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("verification: ok"), "{stdout}");

    let result = fs::read_to_string(&out).unwrap();
    assert!(result.starts_with("aag "));
    // one function per output bit
    let header: Vec<&str> = result.lines().next().unwrap().split(' ').collect();
    assert_eq!(header[4], "4");
    assert!(out.with_extension("json").exists());

    let stats_text = fs::read_to_string(&stats).unwrap();
    let first: serde_json::Value =
        serde_json::from_str(stats_text.lines().next().unwrap()).unwrap();
    assert_eq!(first["workers"], 2);
    assert!(stats_text.lines().count() > 1);
}

#[test]
fn delta_extraction_and_root_only_refinement_also_verify() {
    let dir = tmpdir("variants");
    let (spec, manifest) = gen_factorization(&dir, 2);
    for extra in [
        vec!["--extract", "delta"],
        vec!["--cegar-timeout", "0"],
        vec!["--order", "given", "--cegar-variant", "adequate"],
    ] {
        let output = bin()
            .arg("synth")
            .arg(&spec)
            .arg("--outputs")
            .arg(&manifest)
            .args(["--workers", "2", "--verify"])
            .args(&extra)
            .output()
            .unwrap();
        assert!(
            output.status.success(),
            "{extra:?}: {}",
            String::from_utf8_lossy(&output.stderr)
        );
    }
}

#[test]
fn missing_spec_fails_cleanly() {
    let dir = tmpdir("missing");
    let output = bin()
        .arg("synth")
        .arg(dir.join("nope.aag"))
        .arg("--outputs")
        .arg(dir.join("nope.json"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&output.stderr).contains("error"));
}

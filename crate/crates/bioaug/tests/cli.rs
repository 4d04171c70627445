//! End-to-end checks of the `bioaug` binary: stage artifacts, determinism,
//! exit codes, and staged-versus-chained equivalence.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bioaug"))
}

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn run_ok(args: &[&str]) {
    let out = run(args);
    assert!(
        out.status.success(),
        "command {:?} failed:\n{}",
        args,
        String::from_utf8_lossy(&out.stderr)
    );
}

fn sentences_in(path: &Path) -> usize {
    let text = fs::read_to_string(path).unwrap();
    text.split("\n\n").filter(|b| !b.trim().is_empty()).count()
}

#[test]
fn pipeline_produces_all_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let config = fixtures().join("demo.toml");
    run_ok(&[
        "pipeline",
        "--config",
        config.to_str().unwrap(),
        "--output-dir",
        out.to_str().unwrap(),
    ]);
    for artifact in [
        "denoise/epoch_01.jsonl",
        "denoise/epoch_03.jsonl",
        "denoise/manifest.json",
        "train/backend_state.json",
        "train/manifest.json",
        "generate/records.jsonl",
        "merge/merged.conll",
        "metrics/metrics.json",
        "metrics/metrics.txt",
    ] {
        assert!(out.join(artifact).exists(), "missing {artifact}");
    }
    // 10 gold + 10 * n_aug=2 valid augmentations.
    assert_eq!(sentences_in(&out.join("merge/merged.conll")), 30);
    // The lock is released at exit.
    assert!(!out.join(".bioaug.lock").exists());
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let config = fixtures().join("demo.toml");
    let args = [
        "pipeline",
        "--config",
        config.to_str().unwrap(),
        "--output-dir",
        out.to_str().unwrap(),
    ];
    run_ok(&args);
    let read = |name: &str| fs::read(out.join(name)).unwrap();
    let first: Vec<(String, Vec<u8>)> = [
        "denoise/epoch_01.jsonl",
        "generate/records.jsonl",
        "merge/merged.conll",
        "metrics/metrics.json",
        "denoise/manifest.json",
    ]
    .iter()
    .map(|n| (n.to_string(), read(n)))
    .collect();
    run_ok(&args);
    for (name, bytes) in first {
        assert_eq!(read(&name), bytes, "{name} changed across reruns");
    }
}

#[test]
fn staged_invocations_match_the_chained_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let staged = dir.path().join("staged");
    let chained = dir.path().join("chained");
    let config = fixtures().join("demo.toml");
    let c = config.to_str().unwrap();
    for stage in ["build-denoise", "train", "generate", "merge", "metrics"] {
        run_ok(&[stage, "--config", c, "--output-dir", staged.to_str().unwrap()]);
    }
    run_ok(&["pipeline", "--config", c, "--output-dir", chained.to_str().unwrap()]);
    for name in [
        "generate/records.jsonl",
        "merge/merged.conll",
        "metrics/metrics.json",
    ] {
        assert_eq!(
            fs::read(staged.join(name)).unwrap(),
            fs::read(chained.join(name)).unwrap(),
            "{name} differs between staged and chained runs"
        );
    }
}

#[test]
fn sample_writes_subsets_and_id_manifests() {
    let dir = tempfile::tempdir().unwrap();
    let train = dir.path().join("train.conll");
    let dev = dir.path().join("dev.conll");
    let mut train_text = String::new();
    for i in 0..500 {
        train_text.push_str(&format!("tok{i}\tO\n\n"));
    }
    fs::write(&train, train_text).unwrap();
    let mut dev_text = String::new();
    for i in 0..100 {
        dev_text.push_str(&format!("dev{i}\tO\n\n"));
    }
    fs::write(&dev, dev_text).unwrap();
    let config = dir.path().join("config.toml");
    fs::write(
        &config,
        "seed = 11\noutput_dir = \"out\"\n[paths]\ntrain = \"train.conll\"\ndev = \"dev.conll\"\n[keywords]\nextractor = \"heuristic\"\n[sample]\nsize = 50\n",
    )
    .unwrap();
    run_ok(&["sample", "--config", config.to_str().unwrap()]);
    let out = dir.path().join("out");
    assert_eq!(sentences_in(&out.join("sample/train.conll")), 50);
    assert_eq!(sentences_in(&out.join("sample/dev.conll")), 10);
    let ids: Vec<String> =
        serde_json::from_str(&fs::read_to_string(out.join("sample/train_ids.json")).unwrap())
            .unwrap();
    assert_eq!(ids.len(), 50);
}

#[test]
fn eval_ner_averages_over_prediction_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let config = fixtures().join("demo.toml");
    let gold = fixtures().join("demo.conll");
    run_ok(&[
        "eval-ner",
        "--config",
        config.to_str().unwrap(),
        "--output-dir",
        out.to_str().unwrap(),
        "--gold",
        gold.to_str().unwrap(),
        "--pred",
        gold.to_str().unwrap(),
        "--pred",
        gold.to_str().unwrap(),
    ]);
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("eval/f1.json")).unwrap()).unwrap();
    assert_eq!(summary["runs"].as_array().unwrap().len(), 2);
    assert_eq!(summary["mean_micro_f1"].as_f64().unwrap(), 1.0);
}

#[test]
fn invalid_config_exits_two_with_field_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.toml");
    fs::write(&config, "seed = 1\n").unwrap();
    let out = run(&["pipeline", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("paths.train"), "stderr was: {stderr}");
}

#[test]
fn unknown_command_is_a_usage_error() {
    let out = run(&["frobnicate"]);
    assert!(!out.status.success());
}

#[test]
fn failed_stage_leaves_marker_and_partial_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let config = fixtures().join("demo.toml");
    // Generate without train state must fail and leave a FAILED marker.
    let result = run(&[
        "generate",
        "--config",
        config.to_str().unwrap(),
        "--output-dir",
        out.to_str().unwrap(),
    ]);
    assert_eq!(result.status.code(), Some(1));
    assert!(out.join("generate/FAILED").exists());
}

#[test]
fn lock_file_blocks_concurrent_runs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    fs::create_dir_all(&out).unwrap();
    fs::write(out.join(".bioaug.lock"), "").unwrap();
    let config = fixtures().join("demo.toml");
    let result = run(&[
        "build-denoise",
        "--config",
        config.to_str().unwrap(),
        "--output-dir",
        out.to_str().unwrap(),
    ]);
    assert_eq!(result.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&result.stderr);
    assert!(stderr.contains("lock"), "stderr was: {stderr}");
}

#[test]
fn baseline_augmenters_run_through_the_same_stages() {
    let dir = tempfile::tempdir().unwrap();
    let config = fixtures().join("demo.toml");
    for augmenter in ["entity-sub", "synonym"] {
        let out = dir.path().join(augmenter);
        run_ok(&[
            "pipeline",
            "--config",
            config.to_str().unwrap(),
            "--output-dir",
            out.to_str().unwrap(),
            "--augmenter",
            augmenter,
        ]);
        assert_eq!(sentences_in(&out.join("merge/merged.conll")), 30);
        let metrics: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(out.join("metrics/metrics.json")).unwrap())
                .unwrap();
        if augmenter == "entity-sub" {
            // Length-preserving by construction.
            assert_eq!(metrics["diversity_l"].as_f64().unwrap(), 0.0);
        }
    }
}

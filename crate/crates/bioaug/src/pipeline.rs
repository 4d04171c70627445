//! Stage orchestration: sample, build-denoise, train, generate, merge,
//! metrics, eval-ner, or the whole chain.
//!
//! Each stage writes its artifacts plus a `manifest.json` (config hash, seed,
//! input and output digests) into its own directory under the run's output
//! directory. A lock file gives one run exclusive ownership of the directory;
//! a failing stage leaves its partial artifacts behind a `FAILED` marker.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::augment::{
    merge_augmentations, read_denoise_jsonl, read_records_jsonl, write_denoise_jsonl,
    write_records_jsonl, AugmentError, Augmenter, KnowledgeFormat, MergePolicy,
};
use crate::backend::{
    AdapterBackend, Backend, BackendError, DenoisePair, MemorizingBackend, PerturbingBackend,
};
use crate::baselines::{
    baseline_augmentations, BaselineError, BaselineKind, SynonymTable,
};
use crate::config::{
    AugmenterKind, BackendKind, ConfigError, ExtractorKind, MergePolicySetting, PipelineConfig,
    ScorerKind,
};
use crate::corpus::{
    parse_conll_with, sample_low_resource, write_conll, Corpus, CorpusError, Sentence,
};
use crate::corrupt::{
    CorruptError, GazetteerExtractor, HeuristicExtractor, KeywordExtractor, RetentionConfig,
};
use crate::eval::{
    augmentation_report, mean_micro_f1, span_micro_f1, EvalError, F1Report, LmScorer,
    UniformScorer, UnigramScorer,
};
use crate::knowledge::{KnowledgeError, TripleStore};
use crate::linearize::check_reserved_tokens;
use crate::seed::derive_stage_seed;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Corrupt(#[from] CorruptError),
    #[error(transparent)]
    Knowledge(#[from] KnowledgeError),
    #[error(transparent)]
    Baseline(#[from] BaselineError),
    #[error(transparent)]
    Augment(#[from] AugmentError),
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("reserved token: {0}")]
    ReservedToken(#[from] crate::linearize::LinearizeError),
    #[error("output directory is owned by another run (lock file {0} exists)")]
    Locked(PathBuf),
    #[error("stage `{stage}` needs the `{missing}` artifact; run that stage first")]
    MissingArtifact { stage: &'static str, missing: String },
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

/// One runnable stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Sample,
    BuildDenoise,
    Train,
    Generate,
    Merge,
    Metrics,
    EvalNer,
}

impl Stage {
    pub fn dir_name(&self) -> &'static str {
        match self {
            Stage::Sample => "sample",
            Stage::BuildDenoise => "denoise",
            Stage::Train => "train",
            Stage::Generate => "generate",
            Stage::Merge => "merge",
            Stage::Metrics => "metrics",
            Stage::EvalNer => "eval",
        }
    }
}

#[derive(Serialize)]
struct Manifest {
    stage: &'static str,
    seed: u64,
    config_sha256: String,
    inputs: BTreeMap<String, String>,
    outputs: BTreeMap<String, String>,
}

/// Collects artifacts for one stage directory, then writes the manifest.
struct StageWriter {
    dir: PathBuf,
    manifest: Manifest,
}

impl StageWriter {
    fn new(config: &PipelineConfig, stage: Stage) -> Result<Self, PipelineError> {
        let dir = config.output_dir().join(stage.dir_name());
        fs::create_dir_all(&dir).map_err(|source| PipelineError::Io {
            path: dir.clone(),
            source,
        })?;
        // Clear a stale failure marker from a previous attempt.
        let failed = dir.join("FAILED");
        if failed.exists() {
            let _ = fs::remove_file(&failed);
        }
        Ok(StageWriter {
            dir,
            manifest: Manifest {
                stage: stage.dir_name(),
                seed: config.seed(),
                config_sha256: sha256_hex(config.canonical_toml().as_bytes()),
                inputs: BTreeMap::new(),
                outputs: BTreeMap::new(),
            },
        })
    }

    fn record_input(&mut self, path: &Path) -> Result<(), PipelineError> {
        let bytes = fs::read(path).map_err(|source| PipelineError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        self.manifest
            .inputs
            .insert(path.display().to_string(), sha256_hex(&bytes));
        Ok(())
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<PathBuf, PipelineError> {
        let path = self.dir.join(name);
        fs::write(&path, contents).map_err(|source| PipelineError::Io {
            path: path.clone(),
            source,
        })?;
        self.manifest
            .outputs
            .insert(name.to_string(), sha256_hex(contents.as_bytes()));
        Ok(path)
    }

    fn finish(mut self) -> Result<(), PipelineError> {
        let manifest =
            serde_json::to_string_pretty(&self.manifest).expect("manifest serializes");
        let path = self.dir.join("manifest.json");
        // The manifest lists every other artifact; it is not self-referential.
        fs::write(&path, &manifest).map_err(|source| PipelineError::Io {
            path: path.clone(),
            source,
        })?;
        self.manifest.outputs.clear();
        Ok(())
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Exclusive ownership of the output directory for the duration of a run.
struct DirLock {
    path: PathBuf,
}

impl DirLock {
    fn acquire(output_dir: &Path) -> Result<Self, PipelineError> {
        fs::create_dir_all(output_dir).map_err(|source| PipelineError::Io {
            path: output_dir.to_path_buf(),
            source,
        })?;
        let path = output_dir.join(".bioaug.lock");
        match fs::OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(_) => Ok(DirLock { path }),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                Err(PipelineError::Locked(path))
            }
            Err(source) => Err(PipelineError::Io { path, source }),
        }
    }
}

impl Drop for DirLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

/// Runs one stage (or the whole chain for [`Stage`] = all of them via
/// [`run_pipeline`]) under the output-directory lock, writing a FAILED
/// marker into the stage directory on error.
pub fn run_stage(config: &PipelineConfig, stage: Stage) -> Result<(), PipelineError> {
    config.validate()?;
    let _lock = DirLock::acquire(&config.output_dir())?;
    run_stage_locked(config, stage)
}

/// The full chain: sample (when configured), build-denoise, train, generate,
/// merge, metrics, and eval-ner (when prediction files are configured).
pub fn run_pipeline(config: &PipelineConfig) -> Result<(), PipelineError> {
    config.validate()?;
    let _lock = DirLock::acquire(&config.output_dir())?;
    if config.sample.is_some() {
        run_stage_locked(config, Stage::Sample)?;
    }
    run_stage_locked(config, Stage::BuildDenoise)?;
    run_stage_locked(config, Stage::Train)?;
    run_stage_locked(config, Stage::Generate)?;
    run_stage_locked(config, Stage::Merge)?;
    run_stage_locked(config, Stage::Metrics)?;
    if !config.eval.predictions.is_empty() {
        run_stage_locked(config, Stage::EvalNer)?;
    }
    Ok(())
}

fn run_stage_locked(config: &PipelineConfig, stage: Stage) -> Result<(), PipelineError> {
    let result = match stage {
        Stage::Sample => stage_sample(config),
        Stage::BuildDenoise => stage_build_denoise(config),
        Stage::Train => stage_train(config),
        Stage::Generate => stage_generate(config),
        Stage::Merge => stage_merge(config),
        Stage::Metrics => stage_metrics(config),
        Stage::EvalNer => stage_eval_ner(config),
    };
    if let Err(e) = &result {
        let dir = config.output_dir().join(stage.dir_name());
        if fs::create_dir_all(&dir).is_ok() {
            let _ = fs::write(dir.join("FAILED"), format!("{e}\n"));
        }
    }
    result
}

fn read_to_string(path: &Path) -> Result<String, PipelineError> {
    fs::read_to_string(path).map_err(|source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn load_corpus(config: &PipelineConfig, path: &Path) -> Result<Corpus, PipelineError> {
    let text = read_to_string(path)?;
    let corpus = parse_conll_with(&text, config.corpus.parse_options())?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let corpus = corpus.named(name);
    check_reserved_tokens(&corpus, &config.scheme)?;
    Ok(corpus)
}

/// The train corpus later stages should consume: the sampled subset when the
/// sample stage has run, otherwise the configured train file.
fn effective_train(config: &PipelineConfig) -> Result<(Corpus, PathBuf), PipelineError> {
    let sampled = config.output_dir().join("sample").join("train.conll");
    let path = if config.sample.is_some() && sampled.exists() {
        sampled
    } else {
        config.resolve(config.paths.train.as_deref().expect("validated"))
    };
    Ok((load_corpus(config, &path)?, path))
}

fn make_keyword_extractor(
    config: &PipelineConfig,
) -> Result<Box<dyn KeywordExtractor>, PipelineError> {
    match config.keywords.extractor {
        ExtractorKind::Gazetteer => {
            let path = config.resolve(config.paths.gazetteer.as_deref().expect("validated"));
            Ok(Box::new(GazetteerExtractor::from_file(path)?))
        }
        ExtractorKind::Heuristic => Ok(Box::new(HeuristicExtractor::default())),
    }
}

fn make_triple_store(config: &PipelineConfig) -> Result<TripleStore, PipelineError> {
    match &config.paths.triples {
        None => Ok(TripleStore::default()),
        Some(path) => Ok(TripleStore::from_file(config.resolve(path))?),
    }
}

fn make_augmenter(config: &PipelineConfig) -> Result<Augmenter, PipelineError> {
    let retention = RetentionConfig {
        mu: config.retention.mu,
        sigma_rule: config.retention.sigma_rule,
        seed: derive_stage_seed(config.seed(), "retention"),
    };
    Ok(Augmenter::new(
        config.scheme.clone(),
        retention,
        KnowledgeFormat {
            marker: config.knowledge.marker.clone(),
            separator: config.knowledge.separator.clone(),
        },
        make_keyword_extractor(config)?,
        Box::new(make_triple_store(config)?),
        derive_stage_seed(config.seed(), "generation"),
    ))
}

fn backend_state_path(config: &PipelineConfig) -> PathBuf {
    config.output_dir().join("train").join("backend_state.json")
}

fn make_backend(
    config: &PipelineConfig,
    for_generation: bool,
) -> Result<Box<dyn Backend>, PipelineError> {
    match config.backend.kind {
        BackendKind::Memorizing => {
            if for_generation {
                let path = backend_state_path(config);
                if !path.exists() {
                    return Err(PipelineError::MissingArtifact {
                        stage: "generate",
                        missing: path.display().to_string(),
                    });
                }
                let state = read_to_string(&path)?;
                Ok(Box::new(MemorizingBackend::from_state(
                    config.scheme.clone(),
                    &state,
                )?))
            } else {
                Ok(Box::new(MemorizingBackend::new(config.scheme.clone())))
            }
        }
        BackendKind::Perturbing => {
            if for_generation {
                let path = backend_state_path(config);
                if !path.exists() {
                    return Err(PipelineError::MissingArtifact {
                        stage: "generate",
                        missing: path.display().to_string(),
                    });
                }
                let state = read_to_string(&path)?;
                Ok(Box::new(PerturbingBackend::from_state(
                    config.scheme.clone(),
                    &state,
                )?))
            } else {
                Ok(Box::new(PerturbingBackend::new(config.scheme.clone())))
            }
        }
        BackendKind::Adapter => {
            let endpoint = config.backend.adapter_endpoint().expect("validated");
            let mut backend = AdapterBackend::connect(&endpoint)?;
            if for_generation {
                // Fit state lives in the adapter process; a train manifest
                // proves the fit happened in this run directory.
                let manifest = config.output_dir().join("train").join("manifest.json");
                if !manifest.exists() {
                    return Err(PipelineError::MissingArtifact {
                        stage: "generate",
                        missing: manifest.display().to_string(),
                    });
                }
                backend.assume_trained();
            }
            Ok(Box::new(backend))
        }
    }
}

fn stage_sample(config: &PipelineConfig) -> Result<(), PipelineError> {
    let sample = config.sample.as_ref().ok_or_else(|| {
        PipelineError::Config(ConfigError::Invalid(vec![crate::config::ConfigIssue {
            field: "sample".into(),
            message: "sample stage requires a [sample] section".into(),
        }]))
    })?;
    let mut writer = StageWriter::new(config, Stage::Sample)?;
    let train_path = config.resolve(config.paths.train.as_deref().expect("validated"));
    writer.record_input(&train_path)?;
    let train = load_corpus(config, &train_path)?;
    let dev = match &config.paths.dev {
        None => Corpus::new("dev", vec![])?,
        Some(path) => {
            let path = config.resolve(path);
            writer.record_input(&path)?;
            load_corpus(config, &path)?
        }
    };
    let seed = derive_stage_seed(config.seed(), "sample");
    let (train_subset, dev_subset) = sample_low_resource(&train, &dev, sample.size, seed)?;

    writer.write("train.conll", &write_conll(&train_subset))?;
    writer.write("dev.conll", &write_conll(&dev_subset))?;
    let train_ids: Vec<&str> = train_subset.iter().map(Sentence::id).collect();
    let dev_ids: Vec<&str> = dev_subset.iter().map(Sentence::id).collect();
    writer.write(
        "train_ids.json",
        &serde_json::to_string_pretty(&train_ids).expect("ids serialize"),
    )?;
    writer.write(
        "dev_ids.json",
        &serde_json::to_string_pretty(&dev_ids).expect("ids serialize"),
    )?;
    writer.finish()
}

fn epoch_file_name(epoch: u32) -> String {
    format!("epoch_{epoch:02}.jsonl")
}

fn stage_build_denoise(config: &PipelineConfig) -> Result<(), PipelineError> {
    let mut writer = StageWriter::new(config, Stage::BuildDenoise)?;
    let (train, train_path) = effective_train(config)?;
    writer.record_input(&train_path)?;
    let augmenter = make_augmenter(config)?;
    for epoch in 1..=config.training.epochs {
        let pairs = augmenter.build_epoch_dataset(&train, epoch)?;
        writer.write(&epoch_file_name(epoch), &write_denoise_jsonl(&pairs))?;
    }
    writer.finish()
}

fn load_denoise_epochs(config: &PipelineConfig) -> Result<Vec<Vec<DenoisePair>>, PipelineError> {
    let dir = config.output_dir().join(Stage::BuildDenoise.dir_name());
    let mut epochs = Vec::new();
    for epoch in 1..=config.training.epochs {
        let path = dir.join(epoch_file_name(epoch));
        if !path.exists() {
            return Err(PipelineError::MissingArtifact {
                stage: "train",
                missing: path.display().to_string(),
            });
        }
        epochs.push(read_denoise_jsonl(&read_to_string(&path)?)?);
    }
    Ok(epochs)
}

fn stage_train(config: &PipelineConfig) -> Result<(), PipelineError> {
    let mut writer = StageWriter::new(config, Stage::Train)?;
    if config.augmenter != AugmenterKind::Bioaug {
        // Baselines have nothing to fit.
        writer.write(
            "SKIPPED",
            &format!("augmenter `{}` needs no training\n", config.augmenter),
        )?;
        return writer.finish();
    }
    let epochs = load_denoise_epochs(config)?;
    let batch_size = config.training.batch_size;
    let mut batches = epochs
        .iter()
        .flat_map(|pairs| pairs.chunks(batch_size))
        .map(|chunk| chunk.to_vec());
    let training_config = config.training.training_config();
    match config.backend.kind {
        BackendKind::Memorizing => {
            let mut backend = MemorizingBackend::new(config.scheme.clone());
            backend.fit(&mut batches, &training_config)?;
            writer.write("backend_state.json", &backend.save_state())?;
        }
        BackendKind::Perturbing => {
            let mut backend = PerturbingBackend::new(config.scheme.clone());
            backend.fit(&mut batches, &training_config)?;
            writer.write("backend_state.json", &backend.save_state())?;
        }
        BackendKind::Adapter => {
            let endpoint = config.backend.adapter_endpoint().expect("validated");
            let mut backend = AdapterBackend::connect(&endpoint)?;
            backend.fit(&mut batches, &training_config)?;
        }
    }
    writer.finish()
}

fn stage_generate(config: &PipelineConfig) -> Result<(), PipelineError> {
    let mut writer = StageWriter::new(config, Stage::Generate)?;
    let (train, train_path) = effective_train(config)?;
    writer.record_input(&train_path)?;
    let params = config.generation_params();
    let records = match config.augmenter {
        AugmenterKind::Bioaug => {
            let augmenter = make_augmenter(config)?;
            let backend = make_backend(config, true)?;
            augmenter.generate_augmentations(&train, backend.as_ref(), &params)?
        }
        AugmenterKind::Synonym => {
            let path = config.resolve(config.paths.synonyms.as_deref().expect("validated"));
            writer.record_input(&path)?;
            let table = SynonymTable::from_file(&path)?;
            baseline_augmentations(
                &train,
                BaselineKind::Synonym,
                Some(&table),
                params.n_aug,
                derive_stage_seed(config.seed(), "baseline"),
            )
        }
        AugmenterKind::EntitySub => baseline_augmentations(
            &train,
            BaselineKind::EntitySub,
            None,
            params.n_aug,
            derive_stage_seed(config.seed(), "baseline"),
        ),
    };
    writer.write("records.jsonl", &write_records_jsonl(&records))?;
    writer.finish()
}

fn load_records(
    config: &PipelineConfig,
    consumer: &'static str,
) -> Result<Vec<crate::augment::AugmentationRecord>, PipelineError> {
    let path = config
        .output_dir()
        .join(Stage::Generate.dir_name())
        .join("records.jsonl");
    if !path.exists() {
        return Err(PipelineError::MissingArtifact {
            stage: consumer,
            missing: path.display().to_string(),
        });
    }
    Ok(read_records_jsonl(&read_to_string(&path)?)?)
}

fn stage_merge(config: &PipelineConfig) -> Result<(), PipelineError> {
    let mut writer = StageWriter::new(config, Stage::Merge)?;
    let (train, train_path) = effective_train(config)?;
    writer.record_input(&train_path)?;
    let mut records = load_records(config, "merge")?;
    let augmenter = make_augmenter(config)?;
    augmenter.rehydrate_records(&mut records, train.label_set());
    let policy = match config.merge.policy {
        MergePolicySetting::KeepValid => MergePolicy::KeepValid,
        MergePolicySetting::KeepValidDedup => MergePolicy::KeepValidDedup,
    };
    let merged = merge_augmentations(&train, &mut records, policy)?;
    writer.write("merged.conll", &write_conll(&merged))?;
    // Statuses may have been restamped by dedup.
    writer.write("records.jsonl", &write_records_jsonl(&records))?;
    writer.finish()
}

fn stage_metrics(config: &PipelineConfig) -> Result<(), PipelineError> {
    let mut writer = StageWriter::new(config, Stage::Metrics)?;
    let (train, train_path) = effective_train(config)?;
    writer.record_input(&train_path)?;
    let mut records = load_records(config, "metrics")?;
    let augmenter = make_augmenter(config)?;
    augmenter.rehydrate_records(&mut records, train.label_set());

    let scorer: Option<Box<dyn LmScorer>> = match config.metrics.scorer {
        ScorerKind::None => None,
        ScorerKind::Uniform => Some(Box::new(UniformScorer {
            vocab_size: config.metrics.vocab_size,
        })),
        ScorerKind::Unigram => {
            let reference = match &config.metrics.reference {
                Some(path) => read_to_string(&config.resolve(path))?,
                None => train
                    .iter()
                    .map(Sentence::text)
                    .collect::<Vec<_>>()
                    .join("\n"),
            };
            Some(Box::new(UnigramScorer::fit(&reference)))
        }
    };
    let report = augmentation_report(&train, &records, scorer.as_deref(), &config.scheme)?;
    writer.write(
        "metrics.json",
        &serde_json::to_string_pretty(&report).expect("report serializes"),
    )?;
    writer.write("metrics.txt", &report.to_table())?;
    writer.finish()
}

#[derive(Serialize)]
struct EvalRun {
    prediction: String,
    micro_f1: f64,
    report: F1Report,
}

#[derive(Serialize)]
struct EvalSummary {
    runs: Vec<EvalRun>,
    mean_micro_f1: f64,
}

fn stage_eval_ner(config: &PipelineConfig) -> Result<(), PipelineError> {
    let mut writer = StageWriter::new(config, Stage::EvalNer)?;
    let gold_path = config.resolve(config.eval.gold.as_deref().ok_or_else(|| {
        PipelineError::Config(ConfigError::Invalid(vec![crate::config::ConfigIssue {
            field: "eval.gold".into(),
            message: "required for eval-ner".into(),
        }]))
    })?);
    writer.record_input(&gold_path)?;
    let gold = load_corpus(config, &gold_path)?;
    if config.eval.predictions.is_empty() {
        return Err(PipelineError::Config(ConfigError::Invalid(vec![
            crate::config::ConfigIssue {
                field: "eval.predictions".into(),
                message: "at least one prediction file is required".into(),
            },
        ])));
    }
    let mut runs = Vec::new();
    let mut reports = Vec::new();
    let mut table = String::new();
    for path in &config.eval.predictions {
        let path = config.resolve(path);
        writer.record_input(&path)?;
        let pred = load_corpus(config, &path)?;
        let report = span_micro_f1(&gold, &pred)?;
        table.push_str(&format!("== {}\n{}\n", path.display(), report.to_table()));
        runs.push(EvalRun {
            prediction: path.display().to_string(),
            micro_f1: report.micro_f1(),
            report: report.clone(),
        });
        reports.push(report);
    }
    let mean = mean_micro_f1(&reports)?;
    table.push_str(&format!("mean micro-F1 over {} run(s): {mean:.4}\n", reports.len()));
    let summary = EvalSummary {
        runs,
        mean_micro_f1: mean,
    };
    writer.write(
        "f1.json",
        &serde_json::to_string_pretty(&summary).expect("summary serializes"),
    )?;
    writer.write("f1.txt", &table)?;
    writer.finish()
}

//! Declarative run configuration.
//!
//! One TOML file drives every stage; all randomness flows from its single
//! `seed` (no wall-clock defaults), so identical config plus identical
//! inputs reproduce identical artifacts. Validation reports every bad field
//! at once rather than stopping at the first.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backend::{AdapterEndpoint, GenerationParams, TrainingConfig};
use crate::corpus::{FieldSeparator, ParseOptions, RepairPolicy};
use crate::corrupt::SigmaRule;
use crate::linearize::LabelTokenScheme;

/// Environment variable overriding the adapter endpoint; the only ambient
/// input the toolkit reads.
pub const ADAPTER_ENDPOINT_ENV: &str = "BIOAUG_ADAPTER_ENDPOINT";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("failed to read config: {0}")]
    Io(#[from] std::io::Error),
    #[error("failed to parse config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid configuration:\n{}", .0.iter().map(|i| format!("  - {i}")).collect::<Vec<_>>().join("\n"))]
    Invalid(Vec<ConfigIssue>),
}

/// One field-level diagnostic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigIssue {
    pub field: String,
    pub message: String,
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AugmenterKind {
    #[default]
    Bioaug,
    Synonym,
    EntitySub,
}

impl fmt::Display for AugmenterKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AugmenterKind::Bioaug => write!(f, "bioaug"),
            AugmenterKind::Synonym => write!(f, "synonym"),
            AugmenterKind::EntitySub => write!(f, "entity-sub"),
        }
    }
}

impl std::str::FromStr for AugmenterKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "bioaug" => Ok(AugmenterKind::Bioaug),
            "synonym" => Ok(AugmenterKind::Synonym),
            "entity-sub" => Ok(AugmenterKind::EntitySub),
            other => Err(format!(
                "unknown augmenter `{other}` (expected bioaug, synonym or entity-sub)"
            )),
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathsSection {
    pub train: Option<PathBuf>,
    pub dev: Option<PathBuf>,
    pub gazetteer: Option<PathBuf>,
    pub triples: Option<PathBuf>,
    pub synonyms: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RepairSetting {
    Strict,
    #[default]
    TreatStrayIAsB,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeparatorSetting {
    #[default]
    Tab,
    Whitespace,
}

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusSection {
    #[serde(default)]
    pub repair: RepairSetting,
    #[serde(default)]
    pub separator: SeparatorSetting,
}

impl CorpusSection {
    pub fn parse_options(&self) -> ParseOptions {
        ParseOptions {
            repair: match self.repair {
                RepairSetting::Strict => RepairPolicy::Strict,
                RepairSetting::TreatStrayIAsB => RepairPolicy::TreatStrayIAsB,
            },
            separator: match self.separator {
                SeparatorSetting::Tab => FieldSeparator::Tab,
                SeparatorSetting::Whitespace => FieldSeparator::Whitespace,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtractorKind {
    #[default]
    Gazetteer,
    Heuristic,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KeywordsSection {
    #[serde(default)]
    pub extractor: ExtractorKind,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RetentionSection {
    #[serde(default = "default_mu")]
    pub mu: f64,
    #[serde(default)]
    pub sigma_rule: SigmaRule,
}

fn default_mu() -> f64 {
    0.5
}

impl Default for RetentionSection {
    fn default() -> Self {
        RetentionSection {
            mu: default_mu(),
            sigma_rule: SigmaRule::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KnowledgeSection {
    #[serde(default = "default_marker")]
    pub marker: String,
    #[serde(default = "default_separator")]
    pub separator: String,
}

fn default_marker() -> String {
    "<kg>".into()
}

fn default_separator() -> String {
    " ; ".into()
}

impl Default for KnowledgeSection {
    fn default() -> Self {
        KnowledgeSection {
            marker: default_marker(),
            separator: default_separator(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerationSection {
    #[serde(default = "default_top_k")]
    pub top_k: usize,
    #[serde(default = "default_beam_width")]
    pub beam_width: usize,
    #[serde(default = "default_n_aug")]
    pub n_aug: usize,
    #[serde(default = "default_max_length")]
    pub max_length: usize,
}

fn default_top_k() -> usize {
    50
}
fn default_beam_width() -> usize {
    5
}
fn default_n_aug() -> usize {
    1
}
fn default_max_length() -> usize {
    256
}

impl Default for GenerationSection {
    fn default() -> Self {
        GenerationSection {
            top_k: default_top_k(),
            beam_width: default_beam_width(),
            n_aug: default_n_aug(),
            max_length: default_max_length(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    #[default]
    Memorizing,
    Perturbing,
    Adapter,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackendSection {
    #[serde(default)]
    pub kind: BackendKind,
    /// Adapter process argv, exchanged with over standard streams.
    pub command: Option<Vec<String>>,
    /// Adapter TCP endpoint, `host:port`.
    pub endpoint: Option<String>,
}

impl BackendSection {
    /// Endpoint after applying the environment override.
    pub fn adapter_endpoint(&self) -> Option<AdapterEndpoint> {
        if let Ok(ep) = std::env::var(ADAPTER_ENDPOINT_ENV) {
            if !ep.is_empty() {
                return Some(AdapterEndpoint::Tcp(ep));
            }
        }
        if let Some(endpoint) = &self.endpoint {
            return Some(AdapterEndpoint::Tcp(endpoint.clone()));
        }
        self.command.clone().map(AdapterEndpoint::Command)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingSection {
    #[serde(default = "default_epochs")]
    pub epochs: u32,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    #[serde(default)]
    pub adapter_options: BTreeMap<String, String>,
}

fn default_epochs() -> u32 {
    10
}
fn default_batch_size() -> usize {
    16
}

impl Default for TrainingSection {
    fn default() -> Self {
        TrainingSection {
            epochs: default_epochs(),
            batch_size: default_batch_size(),
            adapter_options: BTreeMap::new(),
        }
    }
}

impl TrainingSection {
    pub fn training_config(&self) -> TrainingConfig {
        TrainingConfig {
            epochs: self.epochs,
            batch_size: self.batch_size,
            adapter_options: self.adapter_options.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleSection {
    pub size: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MergePolicySetting {
    #[default]
    KeepValid,
    KeepValidDedup,
}

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MergeSection {
    #[serde(default)]
    pub policy: MergePolicySetting,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScorerKind {
    #[default]
    None,
    Uniform,
    Unigram,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsSection {
    #[serde(default)]
    pub scorer: ScorerKind,
    #[serde(default = "default_vocab_size")]
    pub vocab_size: usize,
    /// Reference text for the unigram scorer; defaults to the train corpus.
    pub reference: Option<PathBuf>,
}

fn default_vocab_size() -> usize {
    50_000
}

impl Default for MetricsSection {
    fn default() -> Self {
        MetricsSection {
            scorer: ScorerKind::None,
            vocab_size: default_vocab_size(),
            reference: None,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalSection {
    pub gold: Option<PathBuf>,
    #[serde(default)]
    pub predictions: Vec<PathBuf>,
}

/// The whole run configuration. `seed` and the train path are mandatory;
/// everything else has documented defaults.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub name: Option<String>,
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub augmenter: AugmenterKind,
    #[serde(default)]
    pub paths: PathsSection,
    #[serde(default)]
    pub corpus: CorpusSection,
    #[serde(default)]
    pub scheme: LabelTokenScheme,
    #[serde(default)]
    pub keywords: KeywordsSection,
    #[serde(default)]
    pub retention: RetentionSection,
    #[serde(default)]
    pub knowledge: KnowledgeSection,
    #[serde(default)]
    pub generation: GenerationSection,
    #[serde(default)]
    pub backend: BackendSection,
    #[serde(default)]
    pub training: TrainingSection,
    pub sample: Option<SampleSection>,
    #[serde(default)]
    pub merge: MergeSection,
    #[serde(default)]
    pub metrics: MetricsSection,
    #[serde(default)]
    pub eval: EvalSection,
    /// Directory paths resolve against; set at load time.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl PipelineConfig {
    pub fn from_toml(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self, ConfigError> {
        let mut config: PipelineConfig = toml::from_str(text)?;
        config.base_dir = base_dir.into();
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let base = path.parent().unwrap_or_else(|| Path::new(".")).to_path_buf();
        Self::from_toml(&text, base)
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed.expect("validated")
    }

    pub fn output_dir(&self) -> PathBuf {
        self.resolve(self.output_dir.as_deref().expect("validated"))
    }

    pub fn generation_params(&self) -> GenerationParams {
        GenerationParams {
            top_k: self.generation.top_k,
            beam_width: self.generation.beam_width,
            n_aug: self.generation.n_aug,
            max_length: self.generation.max_length,
            seed: crate::seed::derive_stage_seed(self.seed(), "generation"),
        }
    }

    /// Canonical serialized form used for the manifest config hash.
    pub fn canonical_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Full validation with per-field diagnostics. Referenced files must
    /// exist now, not at stage time.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut issues: Vec<ConfigIssue> = Vec::new();
        fn issue_into(issues: &mut Vec<ConfigIssue>, field: &str, message: String) {
            issues.push(ConfigIssue {
                field: field.to_string(),
                message,
            });
        }
        macro_rules! issue {
            ($field:expr, $message:expr $(,)?) => {
                issue_into(&mut issues, $field, $message)
            };
        }

        if self.seed.is_none() {
            issue!("seed", "required; runs must not draw ambient entropy".into());
        }
        if self.output_dir.is_none() {
            issue!("output_dir", "required".into());
        }
        match &self.paths.train {
            None => issue!("paths.train", "required".into()),
            Some(p) => self.check_exists("paths.train", p, &mut issues),
        }
        for (field, path) in [
            ("paths.dev", &self.paths.dev),
            ("paths.gazetteer", &self.paths.gazetteer),
            ("paths.triples", &self.paths.triples),
            ("paths.synonyms", &self.paths.synonyms),
            ("metrics.reference", &self.metrics.reference),
            ("eval.gold", &self.eval.gold),
        ] {
            if let Some(p) = path {
                self.check_exists(field, p, &mut issues);
            }
        }
        for p in &self.eval.predictions {
            self.check_exists("eval.predictions", p, &mut issues);
        }

        if let Err(e) = self.scheme.validate() {
            issue!("scheme", e.to_string());
        }
        if !(0.0..=1.0).contains(&self.retention.mu) {
            issue!("retention.mu", format!("{} outside [0, 1]", self.retention.mu));
        }
        if self.generation.n_aug == 0 {
            issue!("generation.n_aug", "must be at least 1".into());
        }
        if self.generation.top_k == 0 {
            issue!("generation.top_k", "must be at least 1".into());
        }
        if self.generation.beam_width == 0 {
            issue!("generation.beam_width", "must be at least 1".into());
        }
        if self.training.epochs == 0 {
            issue!("training.epochs", "must be at least 1".into());
        }
        if self.training.batch_size == 0 {
            issue!("training.batch_size", "must be at least 1".into());
        }
        if let Some(sample) = &self.sample {
            if sample.size == 0 {
                issue!("sample.size", "must be at least 1".into());
            }
        }
        if self.keywords.extractor == ExtractorKind::Gazetteer && self.paths.gazetteer.is_none() {
            issue!(
                "paths.gazetteer",
                "required by keywords.extractor = \"gazetteer\"".into(),
            );
        }
        if self.augmenter == AugmenterKind::Synonym && self.paths.synonyms.is_none() {
            issue!(
                "paths.synonyms",
                "required by augmenter = \"synonym\"".into(),
            );
        }
        if self.backend.kind == BackendKind::Adapter && self.backend.adapter_endpoint().is_none() {
            issue!(
                "backend",
                format!(
                    "adapter backend needs `command`, `endpoint`, or ${ADAPTER_ENDPOINT_ENV}"
                ),
            );
        }
        if self.metrics.scorer == ScorerKind::Uniform && self.metrics.vocab_size == 0 {
            issue!("metrics.vocab_size", "must be at least 1".into());
        }
        if !self.eval.predictions.is_empty() && self.eval.gold.is_none() {
            issue!("eval.gold", "required when eval.predictions is set".into());
        }

        if issues.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid(issues))
        }
    }

    fn check_exists(&self, field: &str, path: &Path, issues: &mut Vec<ConfigIssue>) {
        let resolved = self.resolve(path);
        if !resolved.exists() {
            issues.push(ConfigIssue {
                field: field.to_string(),
                message: format!("file not found: {}", resolved.display()),
            });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_file(dir: &Path, name: &str, contents: &str) -> PathBuf {
        let path = dir.join(name);
        std::fs::write(&path, contents).unwrap();
        path
    }

    fn minimal_toml() -> &'static str {
        r#"
seed = 42
output_dir = "out"

[paths]
train = "train.conll"
gazetteer = "gazetteer.txt"
"#
    }

    #[test]
    fn minimal_config_validates() {
        let dir = tempfile::tempdir().unwrap();
        write_file(dir.path(), "train.conll", "a\tO\n");
        write_file(dir.path(), "gazetteer.txt", "term\n");
        let config = PipelineConfig::from_toml(minimal_toml(), dir.path()).unwrap();
        config.validate().unwrap();
        assert_eq!(config.seed(), 42);
        assert_eq!(config.generation.n_aug, 1);
        assert_eq!(config.training.epochs, 10);
        assert_eq!(config.training.batch_size, 16);
        assert_eq!(config.scheme.mask_token, "<mask>");
    }

    #[test]
    fn missing_fields_reported_together() {
        let dir = tempfile::tempdir().unwrap();
        let config = PipelineConfig::from_toml("", dir.path()).unwrap();
        let err = config.validate().unwrap_err();
        let text = err.to_string();
        assert!(text.contains("seed"));
        assert!(text.contains("output_dir"));
        assert!(text.contains("paths.train"));
    }

    #[test]
    fn missing_file_is_named() {
        let dir = tempfile::tempdir().unwrap();
        let config = PipelineConfig::from_toml(minimal_toml(), dir.path()).unwrap();
        let err = config.validate().unwrap_err();
        assert!(err.to_string().contains("train.conll"));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let err = PipelineConfig::from_toml("nonsense = 1\nseed = 2\n", dir.path());
        assert!(err.is_err());
    }

    #[test]
    fn env_var_overrides_adapter_endpoint() {
        let section = BackendSection {
            kind: BackendKind::Adapter,
            command: Some(vec!["adapter".into()]),
            endpoint: None,
        };
        // Without the env var the command wins.
        std::env::remove_var(ADAPTER_ENDPOINT_ENV);
        assert!(matches!(
            section.adapter_endpoint(),
            Some(AdapterEndpoint::Command(_))
        ));
        std::env::set_var(ADAPTER_ENDPOINT_ENV, "127.0.0.1:9");
        assert_eq!(
            section.adapter_endpoint(),
            Some(AdapterEndpoint::Tcp("127.0.0.1:9".into()))
        );
        std::env::remove_var(ADAPTER_ENDPOINT_ENV);
    }

    #[test]
    fn canonical_toml_is_stable() {
        let dir = tempfile::tempdir().unwrap();
        let config = PipelineConfig::from_toml(minimal_toml(), dir.path()).unwrap();
        assert_eq!(config.canonical_toml(), config.canonical_toml());
    }

    #[test]
    fn bad_numbers_are_diagnosed() {
        let dir = tempfile::tempdir().unwrap();
        write_file(dir.path(), "train.conll", "a\tO\n");
        write_file(dir.path(), "gazetteer.txt", "term\n");
        let toml = format!(
            "{}\n[retention]\nmu = 1.5\n\n[generation]\nn_aug = 0\n",
            minimal_toml()
        );
        let config = PipelineConfig::from_toml(&toml, dir.path()).unwrap();
        let err = config.validate().unwrap_err().to_string();
        assert!(err.contains("retention.mu"));
        assert!(err.contains("generation.n_aug"));
    }
}

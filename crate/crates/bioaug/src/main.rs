//! Thin command-line front end. All logic lives in the library; this binary
//! parses arguments, applies config overrides, and maps errors to exit codes.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use bioaug::config::{
    AugmenterKind, BackendKind, ConfigError, ExtractorKind, MergePolicySetting, PipelineConfig,
    RepairSetting, ScorerKind, SeparatorSetting,
};
use bioaug::corrupt::SigmaRule;
use bioaug::pipeline::{run_pipeline, run_stage, PipelineError, Stage};

#[derive(Parser)]
#[command(
    name = "bioaug",
    about = "Data augmentation for low-resource NER: selective masking, \
             linearization, knowledge-conditioned denoising, and evaluation",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a seeded low-resource train/dev subset
    Sample(StageArgs),
    /// Build per-epoch denoising pairs (corrupted source -> linearized target)
    BuildDenoise(StageArgs),
    /// Fit the configured backend on the denoising pairs
    Train(StageArgs),
    /// Generate augmentations from freshly corrupted sentences
    Generate(StageArgs),
    /// Fold valid augmentations into the gold corpus
    Merge(StageArgs),
    /// Score augmentation quality (diversity, length diversity, perplexity)
    Metrics(StageArgs),
    /// Score NER predictions against gold with span-level micro-F1
    EvalNer(StageArgs),
    /// Run every configured stage in order
    Pipeline(StageArgs),
}

#[derive(Args)]
struct StageArgs {
    /// Path to the TOML run configuration
    #[arg(short, long)]
    config: PathBuf,

    #[command(flatten)]
    overrides: Overrides,
}

/// Per-flag overrides mirroring config keys.
#[derive(Args)]
struct Overrides {
    /// Overrides `seed`
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `output_dir`
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Overrides `augmenter`: bioaug | synonym | entity-sub
    #[arg(long)]
    augmenter: Option<String>,
    /// Overrides `paths.train`
    #[arg(long)]
    train: Option<PathBuf>,
    /// Overrides `paths.dev`
    #[arg(long)]
    dev: Option<PathBuf>,
    /// Overrides `paths.gazetteer`
    #[arg(long)]
    gazetteer: Option<PathBuf>,
    /// Overrides `paths.triples`
    #[arg(long)]
    triples: Option<PathBuf>,
    /// Overrides `paths.synonyms`
    #[arg(long)]
    synonyms: Option<PathBuf>,
    /// Overrides `corpus.repair`: strict | treat_stray_i_as_b
    #[arg(long)]
    repair: Option<String>,
    /// Overrides `corpus.separator`: tab | whitespace
    #[arg(long)]
    separator: Option<String>,
    /// Overrides `keywords.extractor`: gazetteer | heuristic
    #[arg(long)]
    extractor: Option<String>,
    /// Overrides `retention.mu`
    #[arg(long)]
    mu: Option<f64>,
    /// Overrides `retention.sigma_rule`: std_dev | variance
    #[arg(long)]
    sigma_rule: Option<String>,
    /// Overrides `generation.n_aug`
    #[arg(long)]
    n_aug: Option<usize>,
    /// Overrides `generation.top_k`
    #[arg(long)]
    top_k: Option<usize>,
    /// Overrides `generation.beam_width`
    #[arg(long)]
    beam_width: Option<usize>,
    /// Overrides `generation.max_length`
    #[arg(long)]
    max_length: Option<usize>,
    /// Overrides `backend.kind`: memorizing | perturbing | adapter
    #[arg(long)]
    backend: Option<String>,
    /// Overrides `backend.endpoint`
    #[arg(long)]
    endpoint: Option<String>,
    /// Overrides `training.epochs`
    #[arg(long)]
    epochs: Option<u32>,
    /// Overrides `training.batch_size`
    #[arg(long)]
    batch_size: Option<usize>,
    /// Overrides `sample.size`
    #[arg(long)]
    size: Option<usize>,
    /// Overrides `merge.policy`: keep_valid | keep_valid_dedup
    #[arg(long)]
    merge_policy: Option<String>,
    /// Overrides `metrics.scorer`: none | uniform | unigram
    #[arg(long)]
    scorer: Option<String>,
    /// Overrides `metrics.vocab_size`
    #[arg(long)]
    vocab_size: Option<usize>,
    /// Overrides `eval.gold`
    #[arg(long)]
    gold: Option<PathBuf>,
    /// Overrides `eval.predictions` (repeatable)
    #[arg(long = "pred")]
    predictions: Vec<PathBuf>,
}

/// Paths from config files resolve against the config's directory; paths
/// from flags resolve against the invocation directory, as users expect.
fn from_cwd(path: &std::path::Path) -> PathBuf {
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        std::env::current_dir()
            .map(|cwd| cwd.join(path))
            .unwrap_or_else(|_| path.to_path_buf())
    }
}

impl Overrides {
    fn apply(&self, config: &mut PipelineConfig) -> Result<(), String> {
        if let Some(v) = self.seed {
            config.seed = Some(v);
        }
        if let Some(v) = &self.output_dir {
            config.output_dir = Some(from_cwd(v));
        }
        if let Some(v) = &self.augmenter {
            config.augmenter = v.parse::<AugmenterKind>().map_err(|e| format!("--augmenter: {e}"))?;
        }
        if let Some(v) = &self.train {
            config.paths.train = Some(from_cwd(v));
        }
        if let Some(v) = &self.dev {
            config.paths.dev = Some(from_cwd(v));
        }
        if let Some(v) = &self.gazetteer {
            config.paths.gazetteer = Some(from_cwd(v));
        }
        if let Some(v) = &self.triples {
            config.paths.triples = Some(from_cwd(v));
        }
        if let Some(v) = &self.synonyms {
            config.paths.synonyms = Some(from_cwd(v));
        }
        if let Some(v) = &self.repair {
            config.corpus.repair = match v.as_str() {
                "strict" => RepairSetting::Strict,
                "treat_stray_i_as_b" => RepairSetting::TreatStrayIAsB,
                other => return Err(format!("--repair: unknown value `{other}`")),
            };
        }
        if let Some(v) = &self.separator {
            config.corpus.separator = match v.as_str() {
                "tab" => SeparatorSetting::Tab,
                "whitespace" => SeparatorSetting::Whitespace,
                other => return Err(format!("--separator: unknown value `{other}`")),
            };
        }
        if let Some(v) = &self.extractor {
            config.keywords.extractor = match v.as_str() {
                "gazetteer" => ExtractorKind::Gazetteer,
                "heuristic" => ExtractorKind::Heuristic,
                other => return Err(format!("--extractor: unknown value `{other}`")),
            };
        }
        if let Some(v) = self.mu {
            config.retention.mu = v;
        }
        if let Some(v) = &self.sigma_rule {
            config.retention.sigma_rule = match v.as_str() {
                "std_dev" => SigmaRule::StdDev,
                "variance" => SigmaRule::Variance,
                other => return Err(format!("--sigma-rule: unknown value `{other}`")),
            };
        }
        if let Some(v) = self.n_aug {
            config.generation.n_aug = v;
        }
        if let Some(v) = self.top_k {
            config.generation.top_k = v;
        }
        if let Some(v) = self.beam_width {
            config.generation.beam_width = v;
        }
        if let Some(v) = self.max_length {
            config.generation.max_length = v;
        }
        if let Some(v) = &self.backend {
            config.backend.kind = match v.as_str() {
                "memorizing" => BackendKind::Memorizing,
                "perturbing" => BackendKind::Perturbing,
                "adapter" => BackendKind::Adapter,
                other => return Err(format!("--backend: unknown value `{other}`")),
            };
        }
        if let Some(v) = &self.endpoint {
            config.backend.endpoint = Some(v.clone());
        }
        if let Some(v) = self.epochs {
            config.training.epochs = v;
        }
        if let Some(v) = self.batch_size {
            config.training.batch_size = v;
        }
        if let Some(v) = self.size {
            config.sample = Some(bioaug::config::SampleSection { size: v });
        }
        if let Some(v) = &self.merge_policy {
            config.merge.policy = match v.as_str() {
                "keep_valid" => MergePolicySetting::KeepValid,
                "keep_valid_dedup" => MergePolicySetting::KeepValidDedup,
                other => return Err(format!("--merge-policy: unknown value `{other}`")),
            };
        }
        if let Some(v) = &self.scorer {
            config.metrics.scorer = match v.as_str() {
                "none" => ScorerKind::None,
                "uniform" => ScorerKind::Uniform,
                "unigram" => ScorerKind::Unigram,
                other => return Err(format!("--scorer: unknown value `{other}`")),
            };
        }
        if let Some(v) = self.vocab_size {
            config.metrics.vocab_size = v;
        }
        if let Some(v) = &self.gold {
            config.eval.gold = Some(from_cwd(v));
        }
        if !self.predictions.is_empty() {
            config.eval.predictions = self.predictions.iter().map(|p| from_cwd(p)).collect();
        }
        Ok(())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (args, stage) = match &cli.command {
        Command::Sample(a) => (a, Some(Stage::Sample)),
        Command::BuildDenoise(a) => (a, Some(Stage::BuildDenoise)),
        Command::Train(a) => (a, Some(Stage::Train)),
        Command::Generate(a) => (a, Some(Stage::Generate)),
        Command::Merge(a) => (a, Some(Stage::Merge)),
        Command::Metrics(a) => (a, Some(Stage::Metrics)),
        Command::EvalNer(a) => (a, Some(Stage::EvalNer)),
        Command::Pipeline(a) => (a, None),
    };

    let mut config = match PipelineConfig::load(&args.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if let Err(message) = args.overrides.apply(&mut config) {
        eprintln!("error: {message}");
        return ExitCode::from(2);
    }

    let result = match stage {
        Some(stage) => run_stage(&config, stage),
        None => run_pipeline(&config),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(PipelineError::Config(e @ ConfigError::Invalid(_))) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

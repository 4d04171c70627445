//! Denoising-pair construction, augmentation generation, and merging.
//!
//! The training path composes keyword extraction, retention sampling,
//! corruption, linearization, and knowledge attachment into [`DenoisePair`]s,
//! re-drawn per epoch. The generation path corrupts the same way but adds no
//! knowledge; every backend output is parsed back and recorded with a status,
//! never dropped.

use std::collections::{BTreeSet, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backend::{Backend, BackendError, DenoisePair, GenerationParams};
use crate::corpus::{BioTag, Corpus, CorpusError, Sentence, Token};
use crate::corrupt::{
    corrupt, extract_keywords, remove_ne_overlaps, render_corrupted, select_retained_keywords,
    CorruptError, KeywordExtractor, RetentionConfig,
};
use crate::knowledge::{
    attach_knowledge, extract_relations, filter_triples, KnowledgeError, RelationExtractor,
};
use crate::linearize::{delinearize, linearize, LabelTokenScheme, LinearizeError};

/// Epoch slot reserved for generation-path corruption; fitting epochs are
/// numbered from 1.
pub const GENERATION_EPOCH: u32 = 0;

#[derive(Debug, Error)]
pub enum AugmentError {
    #[error(transparent)]
    Corrupt(#[from] CorruptError),
    #[error(transparent)]
    Knowledge(#[from] KnowledgeError),
    #[error(transparent)]
    Linearize(#[from] LinearizeError),
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("record for `{origin}` claims to be valid but carries no sentence")]
    MissingSentence { origin: String },
    #[error("delinearize bug: label `{label}` from record `{origin}` is outside the gold label set")]
    LabelOutsideGold { label: String, origin: String },
    #[error("records file line {line}: {message}")]
    RecordsFile { line: usize, message: String },
}

/// Marker and separator for verbalized knowledge on the training source.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KnowledgeFormat {
    pub marker: String,
    pub separator: String,
}

impl Default for KnowledgeFormat {
    fn default() -> Self {
        KnowledgeFormat {
            marker: "<kg>".into(),
            separator: " ; ".into(),
        }
    }
}

/// Outcome of parsing one generated text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordStatus {
    Valid,
    ParseFailure,
    /// Set by dedup merging when a valid sentence repeats gold or an earlier
    /// augmentation.
    DuplicateOfGold,
}

/// One generated augmentation with provenance and parse outcome. The parsed
/// sentence is in-memory only; the JSONL export carries the other fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentationRecord {
    pub origin_id: String,
    pub raw_text: String,
    pub status: RecordStatus,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub failure_reason: Option<String>,
    #[serde(skip)]
    pub sentence: Option<Sentence>,
}

/// The corruption/linearization/knowledge stack, configured once and applied
/// per sentence and epoch. All methods are pure given (sentence, epoch).
pub struct Augmenter {
    scheme: LabelTokenScheme,
    retention: RetentionConfig,
    knowledge_format: KnowledgeFormat,
    keyword_extractor: Box<dyn KeywordExtractor>,
    relation_extractor: Box<dyn RelationExtractor>,
    /// Seed for generation-path corruption, independent of the retention
    /// seed used during fitting.
    generation_seed: u64,
}

impl Augmenter {
    pub fn new(
        scheme: LabelTokenScheme,
        retention: RetentionConfig,
        knowledge_format: KnowledgeFormat,
        keyword_extractor: Box<dyn KeywordExtractor>,
        relation_extractor: Box<dyn RelationExtractor>,
        generation_seed: u64,
    ) -> Self {
        Augmenter {
            scheme,
            retention,
            knowledge_format,
            keyword_extractor,
            relation_extractor,
            generation_seed,
        }
    }

    pub fn scheme(&self) -> &LabelTokenScheme {
        &self.scheme
    }

    /// Shared front half of both paths: extract keywords, drop entity
    /// overlaps, draw the retained subset for (sentence, epoch), corrupt,
    /// render. Returns the rendered source and the surfaces that survived.
    fn corrupt_and_render(
        &self,
        sentence: &Sentence,
        epoch: u32,
        seed: u64,
    ) -> Result<(String, Vec<String>, Vec<String>), AugmentError> {
        let keywords = extract_keywords(sentence, self.keyword_extractor.as_ref())?;
        let ne_spans = sentence.spans();
        let candidates = remove_ne_overlaps(keywords.clone(), &ne_spans);
        let retention = RetentionConfig {
            seed,
            ..self.retention.clone()
        };
        let retained =
            select_retained_keywords(sentence.id(), &candidates, keywords.len(), &retention, epoch);
        let corrupted = corrupt(sentence, &retained, epoch, seed)?;
        let rendered = render_corrupted(&corrupted, &self.scheme);

        let ne_surfaces: Vec<String> = ne_spans
            .iter()
            .map(|s| sentence.surface(s.start, s.end))
            .collect();
        let mut all_terms = ne_surfaces.clone();
        all_terms.extend(candidates.iter().map(|k| k.surface.clone()));
        let mut retained_terms = ne_surfaces;
        retained_terms.extend(retained.iter().map(|k| k.surface.clone()));
        Ok((rendered, all_terms, retained_terms))
    }

    /// Builds the training example for (sentence, epoch): corrupted source
    /// with surviving knowledge attached, fully linearized target.
    pub fn build_denoise_pair(
        &self,
        sentence: &Sentence,
        epoch: u32,
    ) -> Result<DenoisePair, AugmentError> {
        let (rendered, all_terms, retained_terms) =
            self.corrupt_and_render(sentence, epoch, self.retention.seed)?;
        let triples = extract_relations(&all_terms, self.relation_extractor.as_ref())?;
        let retained_set: BTreeSet<String> = retained_terms.into_iter().collect();
        let kept = filter_triples(&triples, &retained_set);
        let source = attach_knowledge(
            &rendered,
            &kept,
            &self.knowledge_format.marker,
            &self.knowledge_format.separator,
        );
        let target = linearize(sentence, &self.scheme)?;
        Ok(DenoisePair {
            source,
            target,
            origin_id: sentence.id().to_string(),
            epoch,
        })
    }

    /// One pair per sentence, in corpus order.
    pub fn build_epoch_dataset(
        &self,
        corpus: &Corpus,
        epoch: u32,
    ) -> Result<Vec<DenoisePair>, AugmentError> {
        corpus
            .iter()
            .map(|sentence| self.build_denoise_pair(sentence, epoch))
            .collect()
    }

    /// The conditioning text for generation: corrupted and linearized, with
    /// NO knowledge attached, drawn under the independent generation seed.
    pub fn generation_source(&self, sentence: &Sentence) -> Result<String, AugmentError> {
        let (rendered, _, _) =
            self.corrupt_and_render(sentence, GENERATION_EPOCH, self.generation_seed)?;
        debug_assert!(
            !rendered
                .split_whitespace()
                .any(|p| p == self.knowledge_format.marker),
            "knowledge marker in a generation-path source"
        );
        Ok(rendered)
    }

    /// Corrupts each sentence, asks the backend for `n_aug` generations, and
    /// parses every output back. Parse failures become records, not errors;
    /// exactly `|corpus| * n_aug` records come back.
    pub fn generate_augmentations(
        &self,
        corpus: &Corpus,
        backend: &dyn Backend,
        params: &GenerationParams,
    ) -> Result<Vec<AugmentationRecord>, AugmentError> {
        params.validate().map_err(AugmentError::Backend)?;
        let mut records = Vec::with_capacity(corpus.len() * params.n_aug);
        for sentence in corpus.iter() {
            let source = self.generation_source(sentence)?;
            assert!(
                !source
                    .split_whitespace()
                    .any(|p| p == self.knowledge_format.marker),
                "knowledge marker leaked into the generation path"
            );
            let output = backend.generate(&source, params)?;
            if output.texts.len() != params.n_aug {
                return Err(AugmentError::Backend(BackendError::Protocol {
                    adapter: backend.name().to_string(),
                    message: format!(
                        "expected {} generations, got {}",
                        params.n_aug,
                        output.texts.len()
                    ),
                }));
            }
            for (j, raw) in output.texts.iter().enumerate() {
                records.push(self.record_from_text(sentence.id(), j, raw, corpus.label_set()));
            }
        }
        Ok(records)
    }

    fn record_from_text(
        &self,
        origin_id: &str,
        index: usize,
        raw: &str,
        label_set: &BTreeSet<String>,
    ) -> AugmentationRecord {
        match delinearize(raw, &self.scheme, label_set) {
            Ok(sentence) => AugmentationRecord {
                origin_id: origin_id.to_string(),
                raw_text: raw.to_string(),
                status: RecordStatus::Valid,
                failure_reason: None,
                sentence: Some(sentence.with_id(format!("{origin_id}#aug{index}"))),
            },
            Err(failure) => AugmentationRecord {
                origin_id: origin_id.to_string(),
                raw_text: raw.to_string(),
                status: RecordStatus::ParseFailure,
                failure_reason: Some(failure.to_string()),
                sentence: None,
            },
        }
    }

    /// Reattaches parsed sentences to records read back from JSONL, assigning
    /// the same `{origin}#aug{j}` ids the generation pass used.
    pub fn rehydrate_records(
        &self,
        records: &mut [AugmentationRecord],
        label_set: &BTreeSet<String>,
    ) {
        let mut per_origin: std::collections::HashMap<String, usize> =
            std::collections::HashMap::new();
        for record in records.iter_mut() {
            let j = per_origin.entry(record.origin_id.clone()).or_insert(0);
            let index = *j;
            *j += 1;
            if record.status == RecordStatus::Valid && record.sentence.is_none() {
                if let Ok(sentence) = delinearize(&record.raw_text, &self.scheme, label_set) {
                    record.sentence =
                        Some(sentence.with_id(format!("{}#aug{index}", record.origin_id)));
                }
            }
        }
    }
}

/// What to keep when folding augmentations into the gold corpus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MergePolicy {
    /// Every valid record.
    KeepValid,
    /// Valid records, dropping exact duplicates of gold sentences and of
    /// earlier augmentations. Dropped records are restamped
    /// [`RecordStatus::DuplicateOfGold`].
    KeepValidDedup,
}

/// Appends valid augmented sentences to the gold corpus. A "valid" record
/// whose labels fall outside the gold label set aborts: it means the parser
/// and the generation harness disagree.
pub fn merge_augmentations(
    gold: &Corpus,
    records: &mut [AugmentationRecord],
    policy: MergePolicy,
) -> Result<Corpus, AugmentError> {
    let dedup = matches!(policy, MergePolicy::KeepValidDedup);
    let mut seen: HashSet<(Vec<Token>, Vec<BioTag>)> = HashSet::new();
    if dedup {
        for s in gold.iter() {
            seen.insert((s.tokens().to_vec(), s.tags().to_vec()));
        }
    }

    let mut sentences: Vec<Sentence> = gold.sentences().to_vec();
    for record in records.iter_mut() {
        if record.status != RecordStatus::Valid {
            continue;
        }
        let sentence = record
            .sentence
            .as_ref()
            .ok_or_else(|| AugmentError::MissingSentence {
                origin: record.origin_id.clone(),
            })?;
        for tag in sentence.tags() {
            if let Some(label) = tag.entity_type() {
                if !gold.label_set().contains(label) {
                    return Err(AugmentError::LabelOutsideGold {
                        label: label.to_string(),
                        origin: record.origin_id.clone(),
                    });
                }
            }
        }
        if dedup {
            let key = (sentence.tokens().to_vec(), sentence.tags().to_vec());
            if !seen.insert(key) {
                record.status = RecordStatus::DuplicateOfGold;
                continue;
            }
        }
        sentences.push(sentence.clone());
    }
    Ok(Corpus::new(gold.name(), sentences)?)
}

/// Serializes pairs as JSONL: `{"source","target","origin_id","epoch"}`.
pub fn write_denoise_jsonl(pairs: &[DenoisePair]) -> String {
    let mut out = String::new();
    for pair in pairs {
        out.push_str(&serde_json::to_string(pair).expect("plain fields"));
        out.push('\n');
    }
    out
}

pub fn read_denoise_jsonl(text: &str) -> Result<Vec<DenoisePair>, AugmentError> {
    text.lines()
        .enumerate()
        .filter(|(_, line)| !line.trim().is_empty())
        .map(|(i, line)| {
            serde_json::from_str(line).map_err(|e| AugmentError::RecordsFile {
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

/// Serializes records as JSONL: `{"origin_id","raw_text","status",
/// "failure_reason"?}`. The parsed sentence is deliberately not exported;
/// it is recomputed from `raw_text` on load.
pub fn write_records_jsonl(records: &[AugmentationRecord]) -> String {
    let mut out = String::new();
    for record in records {
        out.push_str(&serde_json::to_string(record).expect("plain fields"));
        out.push('\n');
    }
    out
}

pub fn read_records_jsonl(text: &str) -> Result<Vec<AugmentationRecord>, AugmentError> {
    text.lines()
        .enumerate()
        .filter(|(_, line)| !line.trim().is_empty())
        .map(|(i, line)| {
            serde_json::from_str(line).map_err(|e| AugmentError::RecordsFile {
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

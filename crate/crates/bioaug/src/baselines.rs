//! Reference augmenters used for comparison runs.
//!
//! [`synonym_replace`] swaps one matched concept for a synonym from a
//! file-backed table (any ontology export works). [`entity_token_substitute`]
//! replaces each entity with a same-label, same-token-count mention from the
//! corpus, so sentence length never changes.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::augment::{AugmentationRecord, RecordStatus};
use crate::corpus::{BioTag, Corpus, RepairPolicy, Sentence, Token};
use crate::seed::stable_hash;

#[derive(Debug, Error)]
pub enum BaselineError {
    #[error("synonym table: concept `{concept}` lists itself as a synonym")]
    SelfSynonym { concept: String },
    #[error("synonym table: concept `{concept}` has no synonyms")]
    EmptySynonyms { concept: String },
    #[error("synonym table: {0}")]
    Table(String),
    #[error("failed to read synonym table: {0}")]
    Io(#[from] std::io::Error),
}

/// Concept -> synonyms mapping with case-insensitive lookup. Loaded from a
/// JSON object file: `{"pain": ["ache", "soreness"], ...}`.
#[derive(Debug, Clone, Default)]
pub struct SynonymTable {
    by_concept: BTreeMap<String, Vec<String>>,
    max_concept_tokens: usize,
}

impl SynonymTable {
    pub fn new(entries: BTreeMap<String, Vec<String>>) -> Result<Self, BaselineError> {
        let mut by_concept = BTreeMap::new();
        let mut max_concept_tokens = 0;
        for (concept, synonyms) in entries {
            let key = concept.to_lowercase();
            if synonyms.is_empty() {
                return Err(BaselineError::EmptySynonyms { concept });
            }
            if synonyms.iter().any(|s| s.to_lowercase() == key) {
                return Err(BaselineError::SelfSynonym { concept });
            }
            max_concept_tokens = max_concept_tokens.max(key.split_whitespace().count());
            by_concept.insert(key, synonyms);
        }
        Ok(SynonymTable {
            by_concept,
            max_concept_tokens,
        })
    }

    pub fn from_json(text: &str) -> Result<Self, BaselineError> {
        let entries: BTreeMap<String, Vec<String>> =
            serde_json::from_str(text).map_err(|e| BaselineError::Table(e.to_string()))?;
        Self::new(entries)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, BaselineError> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn is_empty(&self) -> bool {
        self.by_concept.is_empty()
    }

    fn get(&self, concept_lower: &str) -> Option<&[String]> {
        self.by_concept.get(concept_lower).map(Vec::as_slice)
    }
}

/// A baseline result carrying the no-op flag.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineOutcome {
    pub sentence: Sentence,
    /// False when no concept matched and the input came back unchanged.
    pub applied: bool,
}

/// Matched concept occurrence: token range plus whether it lies inside an
/// entity span (straddling matches are excluded from candidates).
struct ConceptMatch {
    start: usize,
    end: usize,
}

/// Replaces exactly one matched concept (seeded uniform choice over matches,
/// then over synonyms). Concepts are found by longest match; a match must be
/// fully inside one entity span or fully outside all of them, so BIO tags
/// stay decodable. Inside an entity, tags re-normalize to the new token
/// count; outside, the new tokens are `O`.
pub fn synonym_replace(
    sentence: &Sentence,
    table: &SynonymTable,
    seed: u64,
) -> BaselineOutcome {
    let matches = find_concepts(sentence, table);
    if matches.is_empty() {
        return BaselineOutcome {
            sentence: sentence.clone(),
            applied: false,
        };
    }
    let mut rng = ChaCha8Rng::seed_from_u64(stable_hash(&[
        &seed.to_le_bytes(),
        sentence.id().as_bytes(),
    ]));
    let chosen = &matches[rng.gen_range(0..matches.len())];
    let concept = sentence.surface(chosen.start, chosen.end).to_lowercase();
    let synonyms = table.get(&concept).expect("match came from the table");
    let synonym = synonyms.choose(&mut rng).expect("validated non-empty");
    let replacement: Vec<Token> = synonym
        .split_whitespace()
        .map(|t| Token::new(t).expect("synonym tokens are whitespace-split"))
        .collect();
    if replacement.is_empty() {
        return BaselineOutcome {
            sentence: sentence.clone(),
            applied: false,
        };
    }

    let mut tokens: Vec<Token> = sentence.tokens()[..chosen.start].to_vec();
    let mut tags: Vec<BioTag> = sentence.tags()[..chosen.start].to_vec();
    let region_tags = &sentence.tags()[chosen.start..chosen.end];
    let entity_type = region_tags[0].entity_type().map(str::to_string);
    for (i, token) in replacement.iter().enumerate() {
        tokens.push(token.clone());
        match &entity_type {
            None => tags.push(BioTag::Outside),
            Some(label) => {
                // Keep the original opening prefix; continuations are I-.
                if i == 0 && matches!(region_tags[0], BioTag::Begin(_)) {
                    tags.push(BioTag::Begin(label.clone()));
                } else {
                    tags.push(BioTag::Inside(label.clone()));
                }
            }
        }
    }
    tokens.extend_from_slice(&sentence.tokens()[chosen.end..]);
    tags.extend_from_slice(&sentence.tags()[chosen.end..]);

    let replaced = Sentence::new(sentence.id(), tokens, tags, RepairPolicy::Strict)
        .expect("re-normalized tags form a valid sequence");
    BaselineOutcome {
        sentence: replaced,
        applied: true,
    }
}

fn find_concepts(sentence: &Sentence, table: &SynonymTable) -> Vec<ConceptMatch> {
    let lower: Vec<String> = sentence
        .tokens()
        .iter()
        .map(|t| t.text().to_lowercase())
        .collect();
    let spans = sentence.spans();
    let mut matches = Vec::new();
    let mut i = 0;
    while i < lower.len() {
        let mut advanced = false;
        for len in (1..=table.max_concept_tokens.min(lower.len() - i)).rev() {
            let candidate = lower[i..i + len].join(" ");
            if table.get(&candidate).is_some() && region_is_replaceable(&spans, i, i + len) {
                matches.push(ConceptMatch {
                    start: i,
                    end: i + len,
                });
                i += len;
                advanced = true;
                break;
            }
        }
        if !advanced {
            i += 1;
        }
    }
    matches
}

/// The region must not straddle an entity boundary: either fully inside one
/// span or disjoint from all spans.
fn region_is_replaceable(
    spans: &[crate::corpus::EntitySpan],
    start: usize,
    end: usize,
) -> bool {
    for span in spans {
        let overlaps = span.start < end && start < span.end;
        if overlaps {
            return start >= span.start && end <= span.end;
        }
    }
    true
}

/// Replaces each entity with a same-label, same-token-count mention drawn
/// (seeded uniform) from the corpus's distinct other mentions. Entities with
/// no candidate stay unchanged; the token count of the sentence never
/// changes, so this baseline contributes exactly zero length diversity.
pub fn entity_token_substitute(corpus: &Corpus, sentence: &Sentence, seed: u64) -> Sentence {
    let pool = mention_pool(corpus);
    let mut rng = ChaCha8Rng::seed_from_u64(stable_hash(&[
        &seed.to_le_bytes(),
        sentence.id().as_bytes(),
    ]));
    let mut tokens: Vec<Token> = sentence.tokens().to_vec();
    for span in sentence.spans() {
        let surface = sentence.surface(span.start, span.end);
        let key = (span.label.clone(), span.end - span.start);
        let Some(mentions) = pool.get(&key) else {
            continue;
        };
        let candidates: Vec<&Vec<String>> = mentions
            .iter()
            .filter(|m| m.join(" ").to_lowercase() != surface.to_lowercase())
            .collect();
        let Some(replacement) = candidates.choose(&mut rng) else {
            continue;
        };
        for (offset, text) in replacement.iter().enumerate() {
            tokens[span.start + offset] =
                Token::new(text.clone()).expect("mention tokens came from a corpus");
        }
    }
    Sentence::new(
        sentence.id(),
        tokens,
        sentence.tags().to_vec(),
        RepairPolicy::Strict,
    )
    .expect("tags unchanged")
}

/// Distinct mention token-sequences per (label, token count), in first-seen
/// order for deterministic choice.
fn mention_pool(corpus: &Corpus) -> BTreeMap<(String, usize), Vec<Vec<String>>> {
    let mut pool: BTreeMap<(String, usize), Vec<Vec<String>>> = BTreeMap::new();
    let mut seen: BTreeSet<(String, String)> = BTreeSet::new();
    for sentence in corpus.iter() {
        for span in sentence.spans() {
            let mention: Vec<String> = sentence.tokens()[span.token_range()]
                .iter()
                .map(|t| t.text().to_string())
                .collect();
            let dedup_key = (span.label.clone(), mention.join(" ").to_lowercase());
            if seen.insert(dedup_key) {
                pool.entry((span.label.clone(), mention.len()))
                    .or_default()
                    .push(mention);
            }
        }
    }
    pool
}

/// Which baseline to run corpus-wide.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineKind {
    Synonym,
    EntitySub,
}

/// Applies a baseline `n_aug` times per sentence, producing the same record
/// stream the generative path emits so merging and metrics are shared.
pub fn baseline_augmentations(
    corpus: &Corpus,
    kind: BaselineKind,
    table: Option<&SynonymTable>,
    n_aug: usize,
    seed: u64,
) -> Vec<AugmentationRecord> {
    let mut records = Vec::with_capacity(corpus.len() * n_aug);
    for sentence in corpus.iter() {
        for j in 0..n_aug {
            let variant_seed = stable_hash(&[&seed.to_le_bytes(), &(j as u64).to_le_bytes()]);
            let augmented = match kind {
                BaselineKind::Synonym => {
                    let table = table.expect("synonym baseline needs a table");
                    synonym_replace(sentence, table, variant_seed).sentence
                }
                BaselineKind::EntitySub => {
                    entity_token_substitute(corpus, sentence, variant_seed)
                }
            };
            records.push(AugmentationRecord {
                origin_id: sentence.id().to_string(),
                raw_text: augmented.text(),
                status: RecordStatus::Valid,
                failure_reason: None,
                sentence: Some(augmented.with_id(format!("{}#aug{j}", sentence.id()))),
            });
        }
    }
    records
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::parse_conll;

    fn table(json: &str) -> SynonymTable {
        SynonymTable::from_json(json).unwrap()
    }

    fn sentence(conll: &str) -> Sentence {
        parse_conll(conll, RepairPolicy::Strict).unwrap().sentences()[0].clone()
    }

    #[test]
    fn replaces_one_concept() {
        let s = sentence("severe\tO\npain\tO\n");
        let out = synonym_replace(&s, &table(r#"{"pain": ["ache"]}"#), 1);
        assert!(out.applied);
        assert_eq!(out.sentence.text(), "severe ache");
        assert_eq!(out.sentence.tags(), s.tags());
    }

    #[test]
    fn no_match_is_a_flagged_noop() {
        let s = sentence("no\tO\nconcepts\tO\n");
        let out = synonym_replace(&s, &table(r#"{"pain": ["ache"]}"#), 1);
        assert!(!out.applied);
        assert_eq!(out.sentence, s);
    }

    #[test]
    fn multi_token_synonym_renormalizes_entity_tags() {
        let s = sentence("HNPCC\tB-Disease\nhurts\tO\n");
        let out = synonym_replace(
            &s,
            &table(r#"{"hnpcc": ["lynch syndrome"]}"#),
            1,
        );
        assert!(out.applied);
        assert_eq!(out.sentence.text(), "lynch syndrome hurts");
        let tags: Vec<String> = out.sentence.tags().iter().map(|t| t.to_string()).collect();
        assert_eq!(tags, ["B-Disease", "I-Disease", "O"]);
    }

    #[test]
    fn replacement_inside_longer_entity_keeps_suffix_inside() {
        let s = sentence("Colorectal\tB-Disease\nCancer\tI-Disease\n");
        // Replace only the second entity token.
        let out = synonym_replace(&s, &table(r#"{"cancer": ["carcinoma"]}"#), 1);
        assert!(out.applied);
        let tags: Vec<String> = out.sentence.tags().iter().map(|t| t.to_string()).collect();
        assert_eq!(tags, ["B-Disease", "I-Disease"]);
        assert_eq!(out.sentence.text(), "Colorectal carcinoma");
    }

    #[test]
    fn straddling_matches_are_skipped() {
        // "severe pain" straddles the entity boundary: "pain" is inside,
        // "severe" is not. The single-token "pain" entry still matches.
        let s = sentence("severe\tO\npain\tB-Symptom\n");
        let out = synonym_replace(
            &s,
            &table(r#"{"severe pain": ["agony"], "pain": ["ache"]}"#),
            1,
        );
        assert!(out.applied);
        assert_eq!(out.sentence.text(), "severe ache");
        assert_eq!(out.sentence.tags()[1].to_string(), "B-Symptom");
    }

    #[test]
    fn lookup_is_case_insensitive() {
        let s = sentence("Pain\tO\n");
        let out = synonym_replace(&s, &table(r#"{"PAIN": ["ache"]}"#), 1);
        assert!(out.applied);
        assert_eq!(out.sentence.text(), "ache");
    }

    #[test]
    fn exactly_one_occurrence_changes() {
        let s = sentence("pain\tO\nand\tO\npain\tO\n");
        let out = synonym_replace(&s, &table(r#"{"pain": ["ache"]}"#), 7);
        let text = out.sentence.text();
        let ache_count = text.split_whitespace().filter(|t| *t == "ache").count();
        assert_eq!(ache_count, 1, "got `{text}`");
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let s = sentence("pain\tO\nand\tO\npain\tO\n");
        let t = table(r#"{"pain": ["ache", "soreness", "discomfort"]}"#);
        assert_eq!(synonym_replace(&s, &t, 5), synonym_replace(&s, &t, 5));
    }

    #[test]
    fn self_synonym_is_rejected() {
        assert!(matches!(
            SynonymTable::from_json(r#"{"pain": ["Pain"]}"#),
            Err(BaselineError::SelfSynonym { .. })
        ));
    }

    fn substitution_corpus() -> Corpus {
        parse_conll(
            "HNPCC\tB-Disease\nis\tO\nbad\tO\n\nasthma\tB-Disease\nis\tO\nworse\tO\n\nLynch\tB-Disease\nsyndrome\tI-Disease\nkills\tO\n",
            RepairPolicy::Strict,
        )
        .unwrap()
    }

    #[test]
    fn substitution_preserves_token_count() {
        let corpus = substitution_corpus();
        for s in corpus.iter() {
            for seed in 0..10 {
                let out = entity_token_substitute(&corpus, s, seed);
                assert_eq!(out.len(), s.len());
                assert_eq!(out.tags(), s.tags());
            }
        }
    }

    #[test]
    fn single_token_disease_swaps_with_the_other() {
        let corpus = substitution_corpus();
        let out = entity_token_substitute(&corpus, &corpus.sentences()[0], 1);
        assert_eq!(out.tokens()[0].text(), "asthma");
    }

    #[test]
    fn no_same_length_candidate_is_a_noop() {
        // The two-token mention has no other two-token Disease in the corpus.
        let corpus = substitution_corpus();
        let out = entity_token_substitute(&corpus, &corpus.sentences()[2], 1);
        assert_eq!(out.text(), corpus.sentences()[2].text());
    }

    #[test]
    fn baseline_records_have_pipeline_shape() {
        let corpus = substitution_corpus();
        let records =
            baseline_augmentations(&corpus, BaselineKind::EntitySub, None, 2, 11);
        assert_eq!(records.len(), 6);
        for record in &records {
            assert_eq!(record.status, RecordStatus::Valid);
            let s = record.sentence.as_ref().unwrap();
            let origin = corpus.get(&record.origin_id).unwrap();
            assert_eq!(s.len(), origin.len(), "length must be preserved");
        }
    }
}

//! External knowledge as relation triples among entities and keywords.
//!
//! Triples are consumed through the [`RelationExtractor`] contract; the
//! default implementation is a read-only JSONL-backed store matched by
//! case-insensitive surface form. Verbalized triples are appended to the
//! corrupted training source, never to the generation-path source.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum KnowledgeError {
    #[error("relation extractor `{extractor}` failed: {message}")]
    Extractor { extractor: String, message: String },
    #[error("triple file line {line}: {message}")]
    TripleFile { line: usize, message: String },
    #[error("invalid triple ({head}, {relation}, {tail}): {message}")]
    InvalidTriple {
        head: String,
        relation: String,
        tail: String,
        message: String,
    },
    #[error("failed to read triple file: {0}")]
    Io(#[from] std::io::Error),
}

/// A (head, relation, tail) fact with a confidence in [0, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnowledgeTriple {
    pub head: String,
    pub relation: String,
    pub tail: String,
    #[serde(default = "default_confidence")]
    pub confidence: f64,
}

fn default_confidence() -> f64 {
    1.0
}

impl KnowledgeTriple {
    pub fn new(
        head: impl Into<String>,
        relation: impl Into<String>,
        tail: impl Into<String>,
        confidence: f64,
    ) -> Result<Self, KnowledgeError> {
        let triple = KnowledgeTriple {
            head: head.into(),
            relation: relation.into(),
            tail: tail.into(),
            confidence,
        };
        triple.validate()?;
        Ok(triple)
    }

    fn validate(&self) -> Result<(), KnowledgeError> {
        let err = |message: &str| KnowledgeError::InvalidTriple {
            head: self.head.clone(),
            relation: self.relation.clone(),
            tail: self.tail.clone(),
            message: message.into(),
        };
        if self.head.to_lowercase() == self.tail.to_lowercase() {
            return Err(err("head equals tail"));
        }
        if self.relation.is_empty() {
            return Err(err("empty relation"));
        }
        if !(0.0..=1.0).contains(&self.confidence) || self.confidence.is_nan() {
            return Err(err("confidence outside [0, 1]"));
        }
        Ok(())
    }
}

/// Pluggable relation extraction over a term list.
pub trait RelationExtractor {
    fn name(&self) -> &str;

    /// Returns triples among the given surface forms. Heads and tails outside
    /// the term list are discarded by the harness.
    fn extract(&self, terms: &[String]) -> Result<Vec<KnowledgeTriple>, String>;
}

/// Read-only triple store loaded from JSONL (`{"head", "relation", "tail",
/// "confidence"}` per line), matched by case-insensitive surface pair.
#[derive(Debug, Default, Clone)]
pub struct TripleStore {
    by_pair: HashMap<(String, String), Vec<KnowledgeTriple>>,
}

impl TripleStore {
    pub fn new(triples: Vec<KnowledgeTriple>) -> Result<Self, KnowledgeError> {
        let mut by_pair: HashMap<(String, String), Vec<KnowledgeTriple>> = HashMap::new();
        for triple in triples {
            triple.validate()?;
            by_pair
                .entry(pair_key(&triple.head, &triple.tail))
                .or_default()
                .push(triple);
        }
        Ok(TripleStore { by_pair })
    }

    pub fn from_jsonl(text: &str) -> Result<Self, KnowledgeError> {
        let mut triples = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let triple: KnowledgeTriple =
                serde_json::from_str(line).map_err(|e| KnowledgeError::TripleFile {
                    line: i + 1,
                    message: e.to_string(),
                })?;
            triples.push(triple);
        }
        Self::new(triples)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, KnowledgeError> {
        Self::from_jsonl(&fs::read_to_string(path)?)
    }

    pub fn len(&self) -> usize {
        self.by_pair.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.by_pair.is_empty()
    }

    fn lookup(&self, a: &str, b: &str) -> &[KnowledgeTriple] {
        self.by_pair
            .get(&pair_key(a, b))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }
}

fn pair_key(a: &str, b: &str) -> (String, String) {
    let (a, b) = (a.to_lowercase(), b.to_lowercase());
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

impl RelationExtractor for TripleStore {
    fn name(&self) -> &str {
        "triple-store"
    }

    fn extract(&self, terms: &[String]) -> Result<Vec<KnowledgeTriple>, String> {
        let mut out = Vec::new();
        for (a, b) in candidate_pairs(terms) {
            out.extend(self.lookup(&a, &b).iter().cloned());
        }
        Ok(out)
    }
}

/// All unordered pairs over the distinct (case-insensitive) terms, in
/// first-occurrence order: exactly C(n, 2) pairs for n distinct terms.
pub fn candidate_pairs(terms: &[String]) -> Vec<(String, String)> {
    let distinct = distinct_terms(terms);
    let mut pairs = Vec::with_capacity(distinct.len() * distinct.len().saturating_sub(1) / 2);
    for i in 0..distinct.len() {
        for j in i + 1..distinct.len() {
            pairs.push((distinct[i].clone(), distinct[j].clone()));
        }
    }
    pairs
}

fn distinct_terms(terms: &[String]) -> Vec<String> {
    let mut seen = std::collections::BTreeSet::new();
    terms
        .iter()
        .filter(|t| seen.insert(t.to_lowercase()))
        .cloned()
        .collect()
}

/// Queries the extractor over the candidate pairs and normalizes the result:
/// both endpoints must be terms, and each unordered pair keeps exactly one
/// triple (highest confidence, ties broken by relation label). Output order
/// follows the candidate-pair enumeration.
pub fn extract_relations(
    terms: &[String],
    extractor: &dyn RelationExtractor,
) -> Result<Vec<KnowledgeTriple>, KnowledgeError> {
    let pairs = candidate_pairs(terms);
    if pairs.is_empty() {
        return Ok(Vec::new());
    }
    let distinct = distinct_terms(terms);
    let raw = extractor
        .extract(&distinct)
        .map_err(|message| KnowledgeError::Extractor {
            extractor: extractor.name().to_string(),
            message,
        })?;

    let term_set: std::collections::BTreeSet<String> =
        distinct.iter().map(|t| t.to_lowercase()).collect();
    let mut best: HashMap<(String, String), KnowledgeTriple> = HashMap::new();
    for triple in raw {
        if triple.validate().is_err() {
            continue;
        }
        let head = triple.head.to_lowercase();
        let tail = triple.tail.to_lowercase();
        if !term_set.contains(&head) || !term_set.contains(&tail) {
            continue;
        }
        let key = pair_key(&triple.head, &triple.tail);
        let replace = match best.get(&key) {
            None => true,
            // Highest confidence wins; ties break to the smaller relation label.
            Some(current) => {
                triple.confidence > current.confidence
                    || (triple.confidence == current.confidence
                        && triple.relation < current.relation)
            }
        };
        if replace {
            best.insert(key, triple);
        }
    }

    Ok(pairs
        .iter()
        .filter_map(|(a, b)| best.remove(&pair_key(a, b)))
        .collect())
}

/// Keeps exactly the triples whose head AND tail are retained surface forms
/// (case-insensitive), preserving order. Idempotent.
pub fn filter_triples(
    triples: &[KnowledgeTriple],
    retained_terms: &std::collections::BTreeSet<String>,
) -> Vec<KnowledgeTriple> {
    let retained: std::collections::BTreeSet<String> =
        retained_terms.iter().map(|t| t.to_lowercase()).collect();
    triples
        .iter()
        .filter(|t| {
            retained.contains(&t.head.to_lowercase()) && retained.contains(&t.tail.to_lowercase())
        })
        .cloned()
        .collect()
}

/// Renders a triple as plain text: underscores in the relation label become
/// spaces.
pub fn verbalize(triple: &KnowledgeTriple) -> String {
    format!(
        "{} {} {}",
        triple.head,
        triple.relation.replace('_', " "),
        triple.tail
    )
}

/// Appends verbalized triples to a source string behind a marker token.
/// With no triples the source is returned unchanged.
pub fn attach_knowledge(
    source: &str,
    triples: &[KnowledgeTriple],
    marker: &str,
    separator: &str,
) -> String {
    if triples.is_empty() {
        return source.to_string();
    }
    let verbalized: Vec<String> = triples.iter().map(verbalize).collect();
    format!("{source} {marker} {}", verbalized.join(separator))
}

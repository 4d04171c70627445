//! Selective sentence corruption.
//!
//! Keywords (non-entity domain terms) are extracted, a retention fraction is
//! drawn from a Gaussian per sentence and epoch, and everything outside the
//! entities and retained keywords is replaced by mask tokens, with adjacent
//! masks merged. The draw is re-seeded per (seed, sentence, epoch), so each
//! epoch sees a different corruption of the same sentence.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use rand::seq::index::sample as index_sample;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{EntitySpan, Sentence};
use crate::linearize::LabelTokenScheme;
use crate::seed::rng_for;

#[derive(Debug, Error)]
pub enum CorruptError {
    #[error("keyword extractor `{extractor}` failed: {message}")]
    Extractor { extractor: String, message: String },
    #[error("extractor `{extractor}` returned span {start}..{end} outside {len} tokens")]
    SpanOutOfBounds {
        extractor: String,
        start: usize,
        end: usize,
        len: usize,
    },
    #[error("retained keyword `{surface}` overlaps an entity span")]
    RetainedOverlapsEntity { surface: String },
    #[error("retained keyword spans overlap each other at token {index}")]
    RetainedOverlap { index: usize },
    #[error("failed to read gazetteer: {0}")]
    Gazetteer(#[from] std::io::Error),
}

/// A keyword span over token indices (end exclusive) with its surface form
/// and the extractor that produced it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeywordSpan {
    pub start: usize,
    pub end: usize,
    pub surface: String,
    pub source: String,
}

impl KeywordSpan {
    pub fn overlaps_range(&self, start: usize, end: usize) -> bool {
        self.start < end && start < self.end
    }
}

/// Pluggable keyword extraction. Implementations return token-index spans;
/// the harness resolves overlaps and drops entity collisions afterwards.
pub trait KeywordExtractor {
    fn name(&self) -> &str;

    fn extract(&self, sentence: &Sentence) -> Result<Vec<KeywordSpan>, String>;

    /// Whether concurrent calls are safe. The pipeline serializes calls to
    /// extractors that answer `false`.
    fn concurrency_safe(&self) -> bool {
        true
    }
}

/// Longest-match scan against a fixed term list, case-insensitive. Terms may
/// span several tokens; the scan is left-to-right and greedy, so overlapping
/// dictionary entries resolve to the longest match.
pub struct GazetteerExtractor {
    terms: BTreeSet<Vec<String>>,
    max_len: usize,
}

impl GazetteerExtractor {
    pub fn new<I, S>(terms: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let terms: BTreeSet<Vec<String>> = terms
            .into_iter()
            .filter_map(|t| {
                let toks: Vec<String> = t
                    .as_ref()
                    .split_whitespace()
                    .map(str::to_lowercase)
                    .collect();
                (!toks.is_empty()).then_some(toks)
            })
            .collect();
        let max_len = terms.iter().map(Vec::len).max().unwrap_or(0);
        GazetteerExtractor { terms, max_len }
    }

    /// One term per line, UTF-8, blank lines ignored.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, CorruptError> {
        let text = fs::read_to_string(path)?;
        Ok(Self::new(text.lines().filter(|l| !l.trim().is_empty())))
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
}

impl KeywordExtractor for GazetteerExtractor {
    fn name(&self) -> &str {
        "gazetteer"
    }

    fn extract(&self, sentence: &Sentence) -> Result<Vec<KeywordSpan>, String> {
        let lower: Vec<String> = sentence
            .tokens()
            .iter()
            .map(|t| t.text().to_lowercase())
            .collect();
        let mut spans = Vec::new();
        let mut i = 0;
        while i < lower.len() {
            let mut matched = 0;
            for len in (1..=self.max_len.min(lower.len() - i)).rev() {
                if self.terms.contains(&lower[i..i + len]) {
                    matched = len;
                    break;
                }
            }
            if matched > 0 {
                spans.push(KeywordSpan {
                    start: i,
                    end: i + matched,
                    surface: sentence.surface(i, i + matched),
                    source: self.name().to_string(),
                });
                i += matched;
            } else {
                i += 1;
            }
        }
        Ok(spans)
    }
}

const DEFAULT_STOPWORDS: &[&str] = &[
    "about", "above", "after", "again", "along", "also", "among", "because", "been", "before",
    "being", "below", "between", "both", "could", "does", "doing", "down", "during", "each",
    "from", "further", "have", "having", "here", "include", "including", "into", "itself",
    "more", "most", "other", "over", "same", "should", "some", "such", "than", "that", "their",
    "them", "then", "there", "these", "they", "this", "those", "through", "under", "until",
    "very", "were", "what", "when", "where", "which", "while", "with", "within", "without",
    "would",
];

/// Heuristic fallback: single alphabetic tokens of length >= 4 outside a
/// stopword list. Useful when no curated term list exists.
pub struct HeuristicExtractor {
    stopwords: BTreeSet<String>,
    min_len: usize,
}

impl Default for HeuristicExtractor {
    fn default() -> Self {
        HeuristicExtractor {
            stopwords: DEFAULT_STOPWORDS.iter().map(|s| s.to_string()).collect(),
            min_len: 4,
        }
    }
}

impl HeuristicExtractor {
    pub fn with_stopwords<I, S>(stopwords: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        HeuristicExtractor {
            stopwords: stopwords
                .into_iter()
                .map(|s| s.as_ref().to_lowercase())
                .collect(),
            min_len: 4,
        }
    }
}

impl KeywordExtractor for HeuristicExtractor {
    fn name(&self) -> &str {
        "heuristic"
    }

    fn extract(&self, sentence: &Sentence) -> Result<Vec<KeywordSpan>, String> {
        Ok(sentence
            .tokens()
            .iter()
            .enumerate()
            .filter(|(_, t)| {
                let text = t.text();
                text.chars().count() >= self.min_len
                    && text.chars().all(char::is_alphabetic)
                    && !self.stopwords.contains(&text.to_lowercase())
            })
            .map(|(i, t)| KeywordSpan {
                start: i,
                end: i + 1,
                surface: t.text().to_string(),
                source: self.name().to_string(),
            })
            .collect())
    }
}

/// Runs an extractor and normalizes its output: bounds-checked, duplicates
/// merged, overlaps resolved longest-first, sorted by start.
pub fn extract_keywords(
    sentence: &Sentence,
    extractor: &dyn KeywordExtractor,
) -> Result<Vec<KeywordSpan>, CorruptError> {
    let raw = extractor
        .extract(sentence)
        .map_err(|message| CorruptError::Extractor {
            extractor: extractor.name().to_string(),
            message,
        })?;
    for span in &raw {
        if span.start >= span.end || span.end > sentence.len() {
            return Err(CorruptError::SpanOutOfBounds {
                extractor: extractor.name().to_string(),
                start: span.start,
                end: span.end,
                len: sentence.len(),
            });
        }
    }
    // Longest span wins a conflict; ties go to the earlier span.
    let mut candidates = raw;
    candidates.sort_by_key(|s| (std::cmp::Reverse(s.end - s.start), s.start));
    let mut kept: Vec<KeywordSpan> = Vec::new();
    for span in candidates {
        if kept
            .iter()
            .all(|k| !k.overlaps_range(span.start, span.end))
        {
            kept.push(span);
        }
    }
    kept.sort_by_key(|s| s.start);
    kept.dedup_by(|a, b| a.start == b.start && a.end == b.end);
    Ok(kept)
}

/// Drops every keyword sharing at least one token index with an entity span.
pub fn remove_ne_overlaps(
    keywords: Vec<KeywordSpan>,
    ne_spans: &[EntitySpan],
) -> Vec<KeywordSpan> {
    keywords
        .into_iter()
        .filter(|k| {
            ne_spans
                .iter()
                .all(|ne| !k.overlaps_range(ne.start, ne.end))
        })
        .collect()
}

/// Reading of the `1/k` rule for the Gaussian spread.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaRule {
    /// Standard deviation = 1/k.
    #[default]
    StdDev,
    /// Variance = 1/k, i.e. standard deviation = 1/sqrt(k).
    Variance,
}

/// Retention distribution parameters: fraction of surviving keywords is
/// drawn from N(mu, sigma^2) with sigma tied to the extracted-keyword count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetentionConfig {
    pub mu: f64,
    pub sigma_rule: SigmaRule,
    pub seed: u64,
}

impl RetentionConfig {
    pub fn new(mu: f64, seed: u64) -> Self {
        RetentionConfig {
            mu,
            sigma_rule: SigmaRule::StdDev,
            seed,
        }
    }

    fn sigma(&self, k_total: usize) -> f64 {
        let k = k_total.max(1) as f64;
        match self.sigma_rule {
            SigmaRule::StdDev => 1.0 / k,
            SigmaRule::Variance => (1.0 / k).sqrt(),
        }
    }
}

/// Clamps a drawn fraction to [0, 1] and scales it to a keyword count,
/// round-half-up.
pub fn retention_count_from_fraction(e: f64, k_remaining: usize) -> usize {
    let e = e.clamp(0.0, 1.0);
    (e * k_remaining as f64).round() as usize
}

/// Draws the number of keywords to retain for (sentence, epoch). The RNG is
/// derived from (config.seed, sentence_id, epoch), so the draw is stable
/// per epoch and independent across epochs.
pub fn sample_retention_count(
    k_remaining: usize,
    k_total: usize,
    config: &RetentionConfig,
    sentence_id: &str,
    epoch: u32,
) -> usize {
    if k_remaining == 0 {
        return 0;
    }
    let mut rng = rng_for(config.seed, sentence_id, epoch);
    let e = draw_fraction(&mut rng, config, k_total);
    retention_count_from_fraction(e, k_remaining)
}

fn draw_fraction<R: Rng>(rng: &mut R, config: &RetentionConfig, k_total: usize) -> f64 {
    let sigma = config.sigma(k_total);
    match Normal::new(config.mu, sigma) {
        Ok(normal) => normal.sample(rng),
        Err(_) => config.mu,
    }
}

/// Draws the retained keyword subset for (sentence, epoch): a Gaussian
/// fraction scaled to a count, then a uniform choice without replacement
/// from the same derived RNG stream. Returned spans are sorted by start.
pub fn select_retained_keywords(
    sentence_id: &str,
    keywords: &[KeywordSpan],
    k_total: usize,
    config: &RetentionConfig,
    epoch: u32,
) -> Vec<KeywordSpan> {
    if keywords.is_empty() {
        return Vec::new();
    }
    let mut rng = rng_for(config.seed, sentence_id, epoch);
    let e = draw_fraction(&mut rng, config, k_total);
    let count = retention_count_from_fraction(e, keywords.len());
    if count == 0 {
        return Vec::new();
    }
    let mut picked = index_sample(&mut rng, keywords.len(), count.min(keywords.len())).into_vec();
    picked.sort_unstable();
    picked.into_iter().map(|i| keywords[i].clone()).collect()
}

/// One piece of a corrupted sentence: a merged mask or a run of surviving
/// tokens in original order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Segment {
    Mask,
    Literal(Vec<LiteralToken>),
}

/// A surviving token with its original position and tag.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LiteralToken {
    pub index: usize,
    pub text: String,
    pub tag: String,
}

/// A selectively masked sentence: alternating mask/literal segments plus the
/// bookkeeping needed to audit and re-render it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorruptedSentence {
    pub segments: Vec<Segment>,
    pub retained_keywords: Vec<KeywordSpan>,
    pub ne_spans: Vec<EntitySpan>,
    pub origin_id: String,
    pub epoch: u32,
    pub seed: u64,
}

impl CorruptedSentence {
    /// Texts of all surviving tokens in order.
    pub fn literal_texts(&self) -> Vec<&str> {
        self.segments
            .iter()
            .flat_map(|seg| match seg {
                Segment::Mask => [].iter(),
                Segment::Literal(run) => run.iter(),
            })
            .map(|t| t.text.as_str())
            .collect()
    }
}

/// Masks every token outside the entity spans and the retained keywords,
/// merging consecutive masks into one segment.
pub fn corrupt(
    sentence: &Sentence,
    retained: &[KeywordSpan],
    epoch: u32,
    seed: u64,
) -> Result<CorruptedSentence, CorruptError> {
    let ne_spans = sentence.spans();
    let mut keep = vec![false; sentence.len()];
    for span in &ne_spans {
        for flag in &mut keep[span.token_range()] {
            *flag = true;
        }
    }
    for keyword in retained {
        if ne_spans
            .iter()
            .any(|ne| keyword.overlaps_range(ne.start, ne.end))
        {
            return Err(CorruptError::RetainedOverlapsEntity {
                surface: keyword.surface.clone(),
            });
        }
        for (offset, flag) in keep[keyword.start..keyword.end].iter_mut().enumerate() {
            if *flag {
                return Err(CorruptError::RetainedOverlap {
                    index: keyword.start + offset,
                });
            }
            *flag = true;
        }
    }

    let mut segments: Vec<Segment> = Vec::new();
    for (i, (token, tag)) in sentence.tokens().iter().zip(sentence.tags()).enumerate() {
        if keep[i] {
            let literal = LiteralToken {
                index: i,
                text: token.text().to_string(),
                tag: tag.to_string(),
            };
            match segments.last_mut() {
                Some(Segment::Literal(run)) => run.push(literal),
                _ => segments.push(Segment::Literal(vec![literal])),
            }
        } else if !matches!(segments.last(), Some(Segment::Mask)) {
            segments.push(Segment::Mask);
        }
    }

    Ok(CorruptedSentence {
        segments,
        retained_keywords: retained.to_vec(),
        ne_spans,
        origin_id: sentence.id().to_string(),
        epoch,
        seed,
    })
}

/// Renders a corrupted sentence: masks become the scheme's mask token,
/// entity tokens are wrapped in their label tokens, all space-joined.
pub fn render_corrupted(corrupted: &CorruptedSentence, scheme: &LabelTokenScheme) -> String {
    let mut pieces: Vec<String> = Vec::new();
    for segment in &corrupted.segments {
        match segment {
            Segment::Mask => pieces.push(scheme.mask_token.clone()),
            Segment::Literal(run) => {
                for token in run {
                    if token.tag == "O" {
                        pieces.push(token.text.clone());
                    } else {
                        pieces.push(scheme.open(&token.tag));
                        pieces.push(token.text.clone());
                        pieces.push(scheme.close(&token.tag));
                    }
                }
            }
        }
    }
    pieces.join(" ")
}

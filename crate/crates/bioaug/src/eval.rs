//! Augmentation-quality and NER-prediction metrics.
//!
//! Diversity: mean percentage of augmentation token occurrences whose surface
//! form is absent from the original. Diversity-L: mean absolute token-count
//! difference. Perplexity: pooled exp of the mean negative log-likelihood
//! under a pluggable scorer. NER quality: exact-span micro-averaged F1.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::augment::{AugmentationRecord, RecordStatus};
use crate::corpus::{Corpus, EntitySpan, Sentence};
use crate::linearize::{strip_scheme_tokens, LabelTokenScheme};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("{0}")]
    Argument(String),
    #[error("sentence `{id}`: {message}")]
    Misaligned { id: String, message: String },
    #[error("no origin sentence `{0}` for an augmentation record")]
    UnknownOrigin(String),
}

/// Per-pair token metrics over (original, augmentation) sentences.
/// Pairs with an empty augmentation are skipped and tallied.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiversityStats {
    /// Mean percentage of new-token occurrences, in [0, 100].
    pub diversity_pct: f64,
    /// Mean absolute token-count difference.
    pub diversity_l: f64,
    pub n_scored: usize,
    pub n_skipped: usize,
}

fn pair_stats(pairs: &[(&Sentence, &Sentence)]) -> Result<DiversityStats, EvalError> {
    if pairs.is_empty() {
        return Err(EvalError::Argument("no pairs to score".into()));
    }
    let mut pct_sum = 0.0;
    let mut len_sum = 0.0;
    let mut scored = 0usize;
    let mut skipped = 0usize;
    for (original, augmented) in pairs {
        if augmented.is_empty() {
            skipped += 1;
            continue;
        }
        let original_types: HashSet<&str> =
            original.tokens().iter().map(|t| t.text()).collect();
        let new = augmented
            .tokens()
            .iter()
            .filter(|t| !original_types.contains(t.text()))
            .count();
        pct_sum += 100.0 * new as f64 / augmented.len() as f64;
        len_sum += (original.len() as f64 - augmented.len() as f64).abs();
        scored += 1;
    }
    if scored == 0 {
        return Err(EvalError::Argument("every pair was skipped".into()));
    }
    Ok(DiversityStats {
        diversity_pct: pct_sum / scored as f64,
        diversity_l: len_sum / scored as f64,
        n_scored: scored,
        n_skipped: skipped,
    })
}

/// Mean percentage of augmentation tokens (occurrences) not present in the
/// original sentence.
pub fn diversity(pairs: &[(&Sentence, &Sentence)]) -> Result<f64, EvalError> {
    Ok(pair_stats(pairs)?.diversity_pct)
}

/// Mean absolute token-length difference between originals and augmentations.
pub fn diversity_l(pairs: &[(&Sentence, &Sentence)]) -> Result<f64, EvalError> {
    Ok(pair_stats(pairs)?.diversity_l)
}

/// Per-token log-probability source. Implementations return natural-log
/// probabilities, one per token, conditioning on the preceding tokens of the
/// same text however they see fit.
pub trait LmScorer {
    fn name(&self) -> &str;

    fn log_probs(&self, tokens: &[&str]) -> Vec<f64>;
}

/// Assigns every token probability 1/V: its perplexity is exactly the
/// vocabulary size, which makes it the standard scorer oracle.
pub struct UniformScorer {
    pub vocab_size: usize,
}

impl LmScorer for UniformScorer {
    fn name(&self) -> &str {
        "uniform"
    }

    fn log_probs(&self, tokens: &[&str]) -> Vec<f64> {
        let lp = -(self.vocab_size as f64).ln();
        vec![lp; tokens.len()]
    }
}

/// Counts token frequencies in a reference text; unseen tokens get zero
/// probability, which surfaces as an infinite-perplexity sentinel.
pub struct UnigramScorer {
    counts: BTreeMap<String, usize>,
    total: usize,
}

impl UnigramScorer {
    pub fn fit(text: &str) -> Self {
        let mut counts: BTreeMap<String, usize> = BTreeMap::new();
        let mut total = 0;
        for token in text.split_whitespace() {
            *counts.entry(token.to_string()).or_default() += 1;
            total += 1;
        }
        UnigramScorer { counts, total }
    }
}

impl LmScorer for UnigramScorer {
    fn name(&self) -> &str {
        "unigram"
    }

    fn log_probs(&self, tokens: &[&str]) -> Vec<f64> {
        tokens
            .iter()
            .map(|t| match self.counts.get(*t) {
                Some(&c) if self.total > 0 => (c as f64 / self.total as f64).ln(),
                _ => f64::NEG_INFINITY,
            })
            .collect()
    }
}

/// Pooled perplexity, or the sentinel naming the first zero-probability token.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Perplexity {
    Finite { value: f64 },
    Infinite { offending_token: String },
}

impl Perplexity {
    pub fn value(&self) -> Option<f64> {
        match self {
            Perplexity::Finite { value } => Some(*value),
            Perplexity::Infinite { .. } => None,
        }
    }
}

/// exp(-(sum of log-probs) / (total tokens)) pooled over all texts. Scheme
/// tokens (masks and label wrappers) are stripped before scoring.
pub fn perplexity(
    texts: &[String],
    scorer: &dyn LmScorer,
    scheme: &LabelTokenScheme,
) -> Result<Perplexity, EvalError> {
    if texts.is_empty() {
        return Err(EvalError::Argument("no texts to score".into()));
    }
    let mut log_sum = 0.0;
    let mut count = 0usize;
    for text in texts {
        let stripped = strip_scheme_tokens(text, scheme);
        let tokens: Vec<&str> = stripped.split_whitespace().collect();
        let log_probs = scorer.log_probs(&tokens);
        for (token, lp) in tokens.iter().zip(log_probs) {
            if lp == f64::NEG_INFINITY {
                return Ok(Perplexity::Infinite {
                    offending_token: token.to_string(),
                });
            }
            log_sum += lp;
            count += 1;
        }
    }
    if count == 0 {
        return Err(EvalError::Argument(
            "texts contain no scoreable tokens".into(),
        ));
    }
    Ok(Perplexity::Finite {
        value: (-log_sum / count as f64).exp(),
    })
}

/// Quality summary over one augmentation run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub diversity_pct: f64,
    pub diversity_l: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub perplexity: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub perplexity_offending_token: Option<String>,
    /// (original, augmentation) pairs scored.
    pub n_pairs: usize,
    pub n_skipped: usize,
    pub parse_failure_rate: f64,
}

impl MetricsReport {
    /// Aligned plain-text rendering.
    pub fn to_table(&self) -> String {
        let perplexity = match (&self.perplexity, &self.perplexity_offending_token) {
            (Some(p), _) => format!("{p:.4}"),
            (None, Some(tok)) => format!("inf (zero probability for `{tok}`)"),
            (None, None) => "-".to_string(),
        };
        format!(
            "metric               value\n\
             -------------------  ----------\n\
             diversity (%)        {:<10.4}\n\
             diversity-l          {:<10.4}\n\
             perplexity           {perplexity}\n\
             pairs scored         {}\n\
             pairs skipped        {}\n\
             parse failure rate   {:.4}\n",
            self.diversity_pct, self.diversity_l, self.n_pairs, self.n_skipped,
            self.parse_failure_rate,
        )
    }
}

/// Scores a full record stream against its gold corpus. Valid records pair
/// with their origin sentence; parse failures only feed the failure rate.
pub fn augmentation_report(
    gold: &Corpus,
    records: &[AugmentationRecord],
    scorer: Option<&dyn LmScorer>,
    scheme: &LabelTokenScheme,
) -> Result<MetricsReport, EvalError> {
    let mut pairs: Vec<(&Sentence, &Sentence)> = Vec::new();
    let mut texts: Vec<String> = Vec::new();
    let mut failures = 0usize;
    for record in records {
        match record.status {
            RecordStatus::ParseFailure => failures += 1,
            RecordStatus::Valid | RecordStatus::DuplicateOfGold => {
                let origin = gold
                    .get(&record.origin_id)
                    .ok_or_else(|| EvalError::UnknownOrigin(record.origin_id.clone()))?;
                let sentence = record.sentence.as_ref().ok_or_else(|| {
                    EvalError::Misaligned {
                        id: record.origin_id.clone(),
                        message: "valid record without a parsed sentence".into(),
                    }
                })?;
                pairs.push((origin, sentence));
                texts.push(record.raw_text.clone());
            }
        }
    }
    if records.is_empty() {
        return Err(EvalError::Argument("no records to score".into()));
    }
    let stats = pair_stats(&pairs)?;
    let (ppl, offending) = match scorer {
        None => (None, None),
        Some(scorer) => match perplexity(&texts, scorer, scheme)? {
            Perplexity::Finite { value } => (Some(value), None),
            Perplexity::Infinite { offending_token } => (None, Some(offending_token)),
        },
    };
    Ok(MetricsReport {
        diversity_pct: stats.diversity_pct,
        diversity_l: stats.diversity_l,
        perplexity: ppl,
        perplexity_offending_token: offending,
        n_pairs: stats.n_scored,
        n_skipped: stats.n_skipped,
        parse_failure_rate: failures as f64 / records.len() as f64,
    })
}

/// Span counts and derived scores for one label (or pooled).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SpanCounts {
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
}

impl SpanCounts {
    pub fn precision(&self) -> f64 {
        ratio(self.true_positives, self.true_positives + self.false_positives)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.true_positives, self.true_positives + self.false_negatives)
    }

    pub fn f1(&self) -> f64 {
        let p = self.precision();
        let r = self.recall();
        if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        }
    }
}

fn ratio(num: usize, denom: usize) -> f64 {
    if denom == 0 {
        0.0
    } else {
        num as f64 / denom as f64
    }
}

/// Exact-span scores: micro average pools counts over all labels.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct F1Report {
    pub overall: SpanCounts,
    pub per_label: BTreeMap<String, SpanCounts>,
}

impl F1Report {
    pub fn micro_f1(&self) -> f64 {
        self.overall.f1()
    }

    pub fn to_table(&self) -> String {
        let mut out = String::from(
            "label                precision  recall     f1         tp     fp     fn\n\
             -------------------  ---------  ---------  ---------  -----  -----  -----\n",
        );
        for (label, counts) in &self.per_label {
            out.push_str(&format!(
                "{label:<20} {:<10.4} {:<10.4} {:<10.4} {:<6} {:<6} {:<6}\n",
                counts.precision(),
                counts.recall(),
                counts.f1(),
                counts.true_positives,
                counts.false_positives,
                counts.false_negatives,
            ));
        }
        out.push_str(&format!(
            "{:<20} {:<10.4} {:<10.4} {:<10.4} {:<6} {:<6} {:<6}\n",
            "micro",
            self.overall.precision(),
            self.overall.recall(),
            self.overall.f1(),
            self.overall.true_positives,
            self.overall.false_positives,
            self.overall.false_negatives,
        ));
        out
    }
}

/// Scores predictions against gold by exact (start, end, label) span match.
/// Corpora must align: same sentence count, ids, and token texts.
pub fn span_micro_f1(gold: &Corpus, pred: &Corpus) -> Result<F1Report, EvalError> {
    if gold.len() != pred.len() {
        return Err(EvalError::Argument(format!(
            "gold has {} sentences, predictions have {}",
            gold.len(),
            pred.len()
        )));
    }
    let mut overall = SpanCounts::default();
    let mut per_label: BTreeMap<String, SpanCounts> = BTreeMap::new();
    for (g, p) in gold.iter().zip(pred.iter()) {
        if g.id() != p.id() {
            return Err(EvalError::Misaligned {
                id: g.id().to_string(),
                message: format!("prediction id is `{}`", p.id()),
            });
        }
        if g.tokens() != p.tokens() {
            return Err(EvalError::Misaligned {
                id: g.id().to_string(),
                message: "tokenization differs between gold and prediction".into(),
            });
        }
        let gold_spans: HashSet<EntitySpan> = g.spans().into_iter().collect();
        let pred_spans: HashSet<EntitySpan> = p.spans().into_iter().collect();
        for span in &pred_spans {
            let entry = per_label.entry(span.label.clone()).or_default();
            if gold_spans.contains(span) {
                entry.true_positives += 1;
                overall.true_positives += 1;
            } else {
                entry.false_positives += 1;
                overall.false_positives += 1;
            }
        }
        for span in &gold_spans {
            if !pred_spans.contains(span) {
                per_label.entry(span.label.clone()).or_default().false_negatives += 1;
                overall.false_negatives += 1;
            }
        }
    }
    Ok(F1Report { overall, per_label })
}

/// CLI-level aggregation over several prediction runs: per-run micro-F1 plus
/// their mean.
pub fn mean_micro_f1(reports: &[F1Report]) -> Result<f64, EvalError> {
    if reports.is_empty() {
        return Err(EvalError::Argument("no runs to average".into()));
    }
    Ok(reports.iter().map(F1Report::micro_f1).sum::<f64>() / reports.len() as f64)
}

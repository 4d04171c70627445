//! Token-labelled corpora in CoNLL-style BIO format.
//!
//! A [`Corpus`] is an ordered list of [`Sentence`]s, each a parallel list of
//! tokens and IOB2 tags. Parsing is tolerant by default (stray `I-` tags are
//! repaired to `B-`); strict mode is available for CI-style validation.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample as index_sample;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("line {line}: expected `token{sep}tag`, found {found} field(s)", sep = if *.whitespace { "<SPACE>" } else { "<TAB>" })]
    Format {
        line: usize,
        found: usize,
        whitespace: bool,
    },
    #[error("line {line}: invalid tag `{tag}` (expected O, B-<type> or I-<type>)")]
    Tag { line: usize, tag: String },
    #[error("line {line}: stray `{tag}` starts no entity (strict mode)")]
    StraySequence { line: usize, tag: String },
    #[error("line {line}: token is empty or contains whitespace")]
    Token { line: usize },
    #[error("sentence `{id}`: {tokens} tokens vs {tags} tags")]
    LengthMismatch {
        id: String,
        tokens: usize,
        tags: usize,
    },
    #[error("sentence `{id}`: stray `{tag}` at position {position}")]
    InvalidSequence {
        id: String,
        tag: String,
        position: usize,
    },
    #[error("duplicate sentence id `{0}`")]
    DuplicateId(String),
    #[error("span {start}..{end} out of bounds for {len} tokens")]
    SpanOutOfBounds {
        start: usize,
        end: usize,
        len: usize,
    },
    #[error("spans {first} and {second} overlap")]
    OverlappingSpans { first: String, second: String },
    #[error("empty span label")]
    EmptyLabel,
    #[error("{0}")]
    Argument(String),
}

/// A single token: non-empty, no internal whitespace. Its position is its
/// index in the owning sentence.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Token(String);

impl Token {
    pub fn new(text: impl Into<String>) -> Result<Self, CorpusError> {
        let text = text.into();
        if text.is_empty() || text.chars().any(char::is_whitespace) {
            return Err(CorpusError::Token { line: 0 });
        }
        Ok(Token(text))
    }

    pub fn text(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// An IOB2 tag: `O`, `B-<type>` or `I-<type>`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum BioTag {
    Outside,
    Begin(String),
    Inside(String),
}

impl BioTag {
    pub fn entity_type(&self) -> Option<&str> {
        match self {
            BioTag::Outside => None,
            BioTag::Begin(t) | BioTag::Inside(t) => Some(t),
        }
    }

    pub fn is_outside(&self) -> bool {
        matches!(self, BioTag::Outside)
    }
}

impl fmt::Display for BioTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BioTag::Outside => f.write_str("O"),
            BioTag::Begin(t) => write!(f, "B-{t}"),
            BioTag::Inside(t) => write!(f, "I-{t}"),
        }
    }
}

#[derive(Debug, Error)]
#[error("invalid tag `{0}`")]
pub struct TagParseError(String);

impl FromStr for BioTag {
    type Err = TagParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "O" {
            return Ok(BioTag::Outside);
        }
        match s.split_once('-') {
            Some(("B", t)) if !t.is_empty() => Ok(BioTag::Begin(t.to_string())),
            Some(("I", t)) if !t.is_empty() => Ok(BioTag::Inside(t.to_string())),
            _ => Err(TagParseError(s.to_string())),
        }
    }
}

impl Serialize for BioTag {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BioTag {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A typed entity span over token indices, end exclusive.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EntitySpan {
    pub start: usize,
    pub end: usize,
    pub label: String,
}

impl EntitySpan {
    pub fn new(start: usize, end: usize, label: impl Into<String>) -> Self {
        EntitySpan {
            start,
            end,
            label: label.into(),
        }
    }

    pub fn token_range(&self) -> std::ops::Range<usize> {
        self.start..self.end
    }

    pub fn overlaps(&self, other: &EntitySpan) -> bool {
        self.start < other.end && other.start < self.end
    }
}

/// How to handle an `I-X` tag that does not continue a `B-X`/`I-X` run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RepairPolicy {
    /// Reject the input.
    Strict,
    /// Rewrite the stray `I-X` to `B-X`. Tolerant default for real-world files.
    #[default]
    TreatStrayIAsB,
}

/// Column separator accepted by the parser.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FieldSeparator {
    #[default]
    Tab,
    /// Any run of spaces/tabs; line must still hold exactly two fields.
    Whitespace,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ParseOptions {
    pub repair: RepairPolicy,
    pub separator: FieldSeparator,
}

/// One annotated sentence: parallel tokens and tags plus a stable id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    id: String,
    tokens: Vec<Token>,
    tags: Vec<BioTag>,
}

impl Sentence {
    /// Builds a sentence, validating lengths and IOB2 sequence under the
    /// given repair policy.
    pub fn new(
        id: impl Into<String>,
        tokens: Vec<Token>,
        tags: Vec<BioTag>,
        repair: RepairPolicy,
    ) -> Result<Self, CorpusError> {
        let id = id.into();
        if tokens.len() != tags.len() {
            return Err(CorpusError::LengthMismatch {
                id,
                tokens: tokens.len(),
                tags: tags.len(),
            });
        }
        let tags = repair_tags(tags, repair).map_err(|(position, tag)| {
            CorpusError::InvalidSequence {
                id: id.clone(),
                tag,
                position,
            }
        })?;
        Ok(Sentence { id, tokens, tags })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn tags(&self) -> &[BioTag] {
        &self.tags
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Entity spans decoded from the tag sequence.
    pub fn spans(&self) -> Vec<EntitySpan> {
        decode_spans(&self.tags)
    }

    /// Surface form of a token range, tokens joined by single spaces.
    pub fn surface(&self, start: usize, end: usize) -> String {
        self.tokens[start..end]
            .iter()
            .map(Token::text)
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// Plain text of the sentence, tokens joined by single spaces.
    pub fn text(&self) -> String {
        self.surface(0, self.tokens.len())
    }

    /// Same content under a different id.
    pub fn with_id(&self, id: impl Into<String>) -> Sentence {
        Sentence {
            id: id.into(),
            tokens: self.tokens.clone(),
            tags: self.tags.clone(),
        }
    }

    /// Token/tag equality, ignoring ids.
    pub fn same_content(&self, other: &Sentence) -> bool {
        self.tokens == other.tokens && self.tags == other.tags
    }
}

fn repair_tags(
    tags: Vec<BioTag>,
    repair: RepairPolicy,
) -> Result<Vec<BioTag>, (usize, String)> {
    let mut out = Vec::with_capacity(tags.len());
    for (i, tag) in tags.into_iter().enumerate() {
        let tag = match tag {
            BioTag::Inside(t) => {
                let continues = matches!(
                    out.last(),
                    Some(BioTag::Begin(prev) | BioTag::Inside(prev)) if *prev == t
                );
                if continues {
                    BioTag::Inside(t)
                } else {
                    match repair {
                        RepairPolicy::Strict => return Err((i, format!("I-{t}"))),
                        RepairPolicy::TreatStrayIAsB => BioTag::Begin(t),
                    }
                }
            }
            other => other,
        };
        out.push(tag);
    }
    Ok(out)
}

/// An ordered, immutable collection of sentences with a derived label set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    name: String,
    sentences: Vec<Sentence>,
    label_set: BTreeSet<String>,
}

impl Corpus {
    pub fn new(
        name: impl Into<String>,
        sentences: Vec<Sentence>,
    ) -> Result<Self, CorpusError> {
        let mut seen = BTreeSet::new();
        let mut label_set = BTreeSet::new();
        for s in &sentences {
            if !seen.insert(s.id().to_string()) {
                return Err(CorpusError::DuplicateId(s.id().to_string()));
            }
            for tag in s.tags() {
                if let Some(t) = tag.entity_type() {
                    label_set.insert(t.to_string());
                }
            }
        }
        Ok(Corpus {
            name: name.into(),
            sentences,
            label_set,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn named(mut self, name: impl Into<String>) -> Corpus {
        self.name = name.into();
        self
    }

    pub fn sentences(&self) -> &[Sentence] {
        &self.sentences
    }

    pub fn label_set(&self) -> &BTreeSet<String> {
        &self.label_set
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Sentence> {
        self.sentences.iter().find(|s| s.id() == id)
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Sentence> {
        self.sentences.iter()
    }
}

/// Parses CoNLL text (`token<TAB>tag` lines, blank-line sentence separators)
/// with the tab separator. Sentence ids are positional: `s0`, `s1`, ...
pub fn parse_conll(text: &str, repair: RepairPolicy) -> Result<Corpus, CorpusError> {
    parse_conll_with(
        text,
        ParseOptions {
            repair,
            separator: FieldSeparator::Tab,
        },
    )
}

/// Parser entry point with explicit options.
pub fn parse_conll_with(text: &str, opts: ParseOptions) -> Result<Corpus, CorpusError> {
    let mut sentences = Vec::new();
    let mut tokens: Vec<Token> = Vec::new();
    let mut tags: Vec<BioTag> = Vec::new();
    // Line numbers of the block, so sequence errors can point at the right line.
    let mut lines_in_block: Vec<usize> = Vec::new();

    let flush = |tokens: &mut Vec<Token>,
                     tags: &mut Vec<BioTag>,
                     lines: &mut Vec<usize>,
                     sentences: &mut Vec<Sentence>|
     -> Result<(), CorpusError> {
        if tokens.is_empty() {
            return Ok(());
        }
        let id = format!("s{}", sentences.len());
        let sentence = Sentence::new(
            id,
            std::mem::take(tokens),
            std::mem::take(tags),
            opts.repair,
        )
        .map_err(|e| match e {
            CorpusError::InvalidSequence { tag, position, .. } => CorpusError::StraySequence {
                line: lines[position],
                tag,
            },
            other => other,
        })?;
        lines.clear();
        sentences.push(sentence);
        Ok(())
    };

    for (lineno, raw) in text.lines().enumerate() {
        let lineno = lineno + 1;
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.trim().is_empty() {
            flush(&mut tokens, &mut tags, &mut lines_in_block, &mut sentences)?;
            continue;
        }
        let fields: Vec<&str> = match opts.separator {
            FieldSeparator::Tab => line.split('\t').collect(),
            FieldSeparator::Whitespace => line.split_whitespace().collect(),
        };
        if fields.len() != 2 {
            return Err(CorpusError::Format {
                line: lineno,
                found: fields.len(),
                whitespace: matches!(opts.separator, FieldSeparator::Whitespace),
            });
        }
        let token =
            Token::new(fields[0].trim()).map_err(|_| CorpusError::Token { line: lineno })?;
        let tag: BioTag = fields[1].trim().parse().map_err(|_| CorpusError::Tag {
            line: lineno,
            tag: fields[1].trim().to_string(),
        })?;
        tokens.push(token);
        tags.push(tag);
        lines_in_block.push(lineno);
    }
    flush(&mut tokens, &mut tags, &mut lines_in_block, &mut sentences)?;

    Corpus::new("", sentences)
}

/// Serializes a corpus back to CoNLL text. Inverse of [`parse_conll`] modulo
/// sentence ids, which are positional on re-parse.
pub fn write_conll(corpus: &Corpus) -> String {
    let mut out = String::new();
    for sentence in corpus.iter() {
        for (token, tag) in sentence.tokens().iter().zip(sentence.tags()) {
            out.push_str(token.text());
            out.push('\t');
            out.push_str(&tag.to_string());
            out.push('\n');
        }
        out.push('\n');
    }
    out
}

/// Decodes maximal `B-X (I-X)*` runs into sorted, non-overlapping spans.
pub fn decode_spans(tags: &[BioTag]) -> Vec<EntitySpan> {
    let mut spans = Vec::new();
    let mut open: Option<(usize, &str)> = None;
    for (i, tag) in tags.iter().enumerate() {
        match tag {
            BioTag::Begin(t) => {
                if let Some((start, label)) = open.take() {
                    spans.push(EntitySpan::new(start, i, label));
                }
                open = Some((i, t));
            }
            BioTag::Inside(t) => {
                // A continuing I-X extends the open run; a stray one (only
                // possible pre-repair) starts a fresh span.
                match open {
                    Some((_, label)) if label == t => {}
                    _ => {
                        if let Some((start, label)) = open.take() {
                            spans.push(EntitySpan::new(start, i, label));
                        }
                        open = Some((i, t));
                    }
                }
            }
            BioTag::Outside => {
                if let Some((start, label)) = open.take() {
                    spans.push(EntitySpan::new(start, i, label));
                }
            }
        }
    }
    if let Some((start, label)) = open {
        spans.push(EntitySpan::new(start, tags.len(), label));
    }
    spans
}

/// Encodes non-overlapping spans as an IOB2 tag sequence over `n_tokens`.
pub fn encode_spans(n_tokens: usize, spans: &[EntitySpan]) -> Result<Vec<BioTag>, CorpusError> {
    let mut sorted: Vec<&EntitySpan> = spans.iter().collect();
    sorted.sort();
    let mut tags = vec![BioTag::Outside; n_tokens];
    let mut prev: Option<&EntitySpan> = None;
    for span in sorted {
        if span.label.is_empty() {
            return Err(CorpusError::EmptyLabel);
        }
        if span.start >= span.end || span.end > n_tokens {
            return Err(CorpusError::SpanOutOfBounds {
                start: span.start,
                end: span.end,
                len: n_tokens,
            });
        }
        if let Some(p) = prev {
            if p.overlaps(span) {
                return Err(CorpusError::OverlappingSpans {
                    first: format!("{}..{}", p.start, p.end),
                    second: format!("{}..{}", span.start, span.end),
                });
            }
        }
        tags[span.start] = BioTag::Begin(span.label.clone());
        for tag in tags.iter_mut().take(span.end).skip(span.start + 1) {
            *tag = BioTag::Inside(span.label.clone());
        }
        prev = Some(span);
    }
    Ok(tags)
}

/// Draws a low-resource split: a uniform (seeded, without replacement)
/// train subset of exactly `size` sentences, and a dev subset downsampled
/// proportionately with round-half-up and a floor of one sentence.
/// Original sentence order is preserved within both subsets.
pub fn sample_low_resource(
    train: &Corpus,
    dev: &Corpus,
    size: usize,
    seed: u64,
) -> Result<(Corpus, Corpus), CorpusError> {
    if train.is_empty() {
        return Err(CorpusError::Argument(
            "cannot sample from an empty training corpus".into(),
        ));
    }
    if size > train.len() {
        return Err(CorpusError::Argument(format!(
            "requested {size} sentences but the training corpus has {}",
            train.len()
        )));
    }
    let dev_size = if dev.is_empty() {
        0
    } else {
        let proportional = (dev.len() as f64 * size as f64 / train.len() as f64).round() as usize;
        proportional.max(1).min(dev.len())
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let train_subset = take_sorted_sample(train, size, &mut rng)?;
    let dev_subset = take_sorted_sample(dev, dev_size, &mut rng)?;
    Ok((train_subset, dev_subset))
}

fn take_sorted_sample(
    corpus: &Corpus,
    size: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Corpus, CorpusError> {
    let mut indices = index_sample(rng, corpus.len(), size).into_vec();
    indices.sort_unstable();
    let sentences = indices
        .into_iter()
        .map(|i| corpus.sentences()[i].clone())
        .collect();
    Corpus::new(corpus.name(), sentences)
}

//! Sequence linearization: tagged sentences to/from plain strings.
//!
//! Every entity token is wrapped in label tokens carrying its full BIO tag
//! (`<B-Disease> HNPCC </B-Disease>`), so a text generator can emit labels
//! inline and the exact tag sequence can be recovered afterwards.
//! [`delinearize`] is total over arbitrary model output: malformed input
//! yields a [`ParseFailure`] value, never a panic.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{BioTag, Corpus, RepairPolicy, Sentence, Token};

/// Surface form of the label and mask tokens. Templates hold a single
/// `{tag}` slot; rendered tokens must be whitespace-free and distinct.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelTokenScheme {
    pub open_template: String,
    pub close_template: String,
    pub mask_token: String,
}

impl Default for LabelTokenScheme {
    fn default() -> Self {
        LabelTokenScheme {
            open_template: "<{tag}>".into(),
            close_template: "</{tag}>".into(),
            mask_token: "<mask>".into(),
        }
    }
}

#[derive(Debug, Error)]
pub enum SchemeError {
    #[error("template `{0}` must contain the `{{tag}}` slot exactly once")]
    BadTemplate(String),
    #[error("rendered scheme token `{0}` contains whitespace")]
    Whitespace(String),
    #[error("scheme tokens are not mutually distinct: `{0}`")]
    NotDistinct(String),
}

#[derive(Debug, Error)]
pub enum LinearizeError {
    #[error("token `{token}` at position {position} collides with a scheme token")]
    ReservedToken { token: String, position: usize },
    #[error("sentence `{id}` token `{token}` collides with a scheme token")]
    ReservedInCorpus { id: String, token: String },
}

impl LabelTokenScheme {
    pub fn new(
        open_template: impl Into<String>,
        close_template: impl Into<String>,
        mask_token: impl Into<String>,
    ) -> Result<Self, SchemeError> {
        let scheme = LabelTokenScheme {
            open_template: open_template.into(),
            close_template: close_template.into(),
            mask_token: mask_token.into(),
        };
        scheme.validate()?;
        Ok(scheme)
    }

    pub fn validate(&self) -> Result<(), SchemeError> {
        for template in [&self.open_template, &self.close_template] {
            if template.matches("{tag}").count() != 1 {
                return Err(SchemeError::BadTemplate(template.clone()));
            }
        }
        let probe_open = self.open("B-X");
        let probe_close = self.close("B-X");
        for rendered in [&probe_open, &probe_close, &self.mask_token] {
            if rendered.is_empty() || rendered.chars().any(char::is_whitespace) {
                return Err(SchemeError::Whitespace(rendered.clone()));
            }
        }
        if probe_open == probe_close
            || probe_open == self.mask_token
            || probe_close == self.mask_token
        {
            return Err(SchemeError::NotDistinct(probe_open));
        }
        Ok(())
    }

    pub fn open(&self, tag: &str) -> String {
        self.open_template.replace("{tag}", tag)
    }

    pub fn close(&self, tag: &str) -> String {
        self.close_template.replace("{tag}", tag)
    }

    fn template_parts(template: &str) -> (&str, &str) {
        // validate() guarantees exactly one slot.
        template.split_once("{tag}").unwrap_or((template, ""))
    }

    /// If `piece` renders from the open template, the tag inside it.
    pub fn parse_open(&self, piece: &str) -> Option<String> {
        Self::parse_with(&self.open_template, piece)
    }

    /// If `piece` renders from the close template, the tag inside it.
    pub fn parse_close(&self, piece: &str) -> Option<String> {
        Self::parse_with(&self.close_template, piece)
    }

    fn parse_with(template: &str, piece: &str) -> Option<String> {
        let (prefix, suffix) = Self::template_parts(template);
        let inner = piece.strip_prefix(prefix)?.strip_suffix(suffix)?;
        if inner.is_empty() {
            return None;
        }
        Some(inner.to_string())
    }

    /// True when a plain corpus token would be mistaken for a scheme token.
    /// Close is tried before open: with the default templates a close token
    /// also matches the open pattern.
    pub fn collides(&self, token: &str) -> bool {
        token == self.mask_token
            || self.parse_close(token).is_some()
            || self.parse_open(token).is_some()
    }
}

/// Rejects corpora holding tokens that collide with scheme tokens; run this
/// at load time so linearization cannot fail midway through a pipeline.
pub fn check_reserved_tokens(
    corpus: &Corpus,
    scheme: &LabelTokenScheme,
) -> Result<(), LinearizeError> {
    for sentence in corpus.iter() {
        for token in sentence.tokens() {
            if scheme.collides(token.text()) {
                return Err(LinearizeError::ReservedInCorpus {
                    id: sentence.id().to_string(),
                    token: token.text().to_string(),
                });
            }
        }
    }
    Ok(())
}

/// Renders a sentence as a space-joined string with each entity token
/// wrapped in label tokens carrying its full BIO tag.
pub fn linearize(sentence: &Sentence, scheme: &LabelTokenScheme) -> Result<String, LinearizeError> {
    let mut pieces = Vec::with_capacity(sentence.len());
    for (i, (token, tag)) in sentence.tokens().iter().zip(sentence.tags()).enumerate() {
        if scheme.collides(token.text()) {
            return Err(LinearizeError::ReservedToken {
                token: token.text().to_string(),
                position: i,
            });
        }
        match tag {
            BioTag::Outside => pieces.push(token.text().to_string()),
            tagged => {
                let tag_str = tagged.to_string();
                pieces.push(scheme.open(&tag_str));
                pieces.push(token.text().to_string());
                pieces.push(scheme.close(&tag_str));
            }
        }
    }
    Ok(pieces.join(" "))
}

/// Why a generated string failed to parse back into a sentence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum FailureReason {
    EmptyText,
    /// A mask token survived generation.
    MaskResidue,
    UnmatchedOpen { tag: String },
    UnmatchedClose { tag: String },
    MismatchedClose { open: String, close: String },
    /// An open token inside an already-open wrapper.
    CrossingOpen { outer: String, inner: String },
    EmptyWrapper { tag: String },
    /// Wrapper tag is not `B-X`/`I-X` or its type is outside the label set.
    UnknownLabel { inner: String },
    /// An `I-X` wrapper that continues nothing (strict mode only).
    StrayInside { tag: String },
}

impl fmt::Display for FailureReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FailureReason::EmptyText => write!(f, "empty_text"),
            FailureReason::MaskResidue => write!(f, "mask_residue"),
            FailureReason::UnmatchedOpen { tag } => write!(f, "unmatched_open({tag})"),
            FailureReason::UnmatchedClose { tag } => write!(f, "unmatched_close({tag})"),
            FailureReason::MismatchedClose { open, close } => {
                write!(f, "mismatched_close(open={open}, close={close})")
            }
            FailureReason::CrossingOpen { outer, inner } => {
                write!(f, "crossing_open(outer={outer}, inner={inner})")
            }
            FailureReason::EmptyWrapper { tag } => write!(f, "empty_wrapper({tag})"),
            FailureReason::UnknownLabel { inner } => write!(f, "unknown_label({inner})"),
            FailureReason::StrayInside { tag } => write!(f, "stray_inside({tag})"),
        }
    }
}

/// A diagnosed parse failure: reason plus the whitespace-piece index where
/// parsing stopped. A value, not an abort: generation harnesses count these.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Error)]
#[error("{reason} at piece {position}")]
pub struct ParseFailure {
    pub reason: FailureReason,
    pub position: usize,
}

impl ParseFailure {
    fn new(reason: FailureReason, position: usize) -> Self {
        ParseFailure { reason, position }
    }
}

/// Handling of malformed wrappers and stray `I` wrappers during parsing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DelinearizeMode {
    /// Any malformation is a [`ParseFailure`]. Default: silent repair would
    /// bias augmentation metrics.
    #[default]
    Strict,
    /// Drop malformed wrappers, keep their inner tokens as `O`, and promote
    /// stray `I-X` to `B-X`.
    Repair,
}

/// Parses a linearized string back into a sentence (empty id; callers stamp
/// provenance ids). Inverse of [`linearize`] on its image; total elsewhere.
pub fn delinearize(
    text: &str,
    scheme: &LabelTokenScheme,
    label_set: &std::collections::BTreeSet<String>,
) -> Result<Sentence, ParseFailure> {
    delinearize_with(text, scheme, label_set, DelinearizeMode::Strict)
}

pub fn delinearize_with(
    text: &str,
    scheme: &LabelTokenScheme,
    label_set: &std::collections::BTreeSet<String>,
    mode: DelinearizeMode,
) -> Result<Sentence, ParseFailure> {
    let pieces: Vec<&str> = text.split_whitespace().collect();
    if pieces.is_empty() {
        return Err(ParseFailure::new(FailureReason::EmptyText, 0));
    }

    enum Piece {
        Mask,
        Open(String),
        Close(String),
        Plain(String),
    }
    let classify = |piece: &str| -> Piece {
        if piece == scheme.mask_token {
            Piece::Mask
        } else if let Some(tag) = scheme.parse_close(piece) {
            Piece::Close(tag)
        } else if let Some(tag) = scheme.parse_open(piece) {
            Piece::Open(tag)
        } else {
            Piece::Plain(piece.to_string())
        }
    };

    let mut tokens: Vec<Token> = Vec::new();
    let mut tags: Vec<BioTag> = Vec::new();
    // (tag string, parsed tag, open position, wrapped token if seen)
    let mut open: Option<(String, BioTag, usize, Option<String>)> = None;
    let repair = matches!(mode, DelinearizeMode::Repair);

    for (i, piece) in pieces.iter().enumerate() {
        match classify(piece) {
            Piece::Mask => {
                if repair {
                    continue;
                }
                return Err(ParseFailure::new(FailureReason::MaskResidue, i));
            }
            Piece::Open(tag) => {
                if let Some((outer, _, pos, wrapped)) = open.take() {
                    if repair {
                        // Drop the dangling wrapper, keep its token as O.
                        if let Some(text) = wrapped {
                            tokens.push(Token::new(text).expect("piece has no whitespace"));
                            tags.push(BioTag::Outside);
                        }
                    } else {
                        return Err(ParseFailure::new(
                            if wrapped.is_some() {
                                FailureReason::UnmatchedOpen { tag: outer }
                            } else {
                                FailureReason::CrossingOpen {
                                    outer,
                                    inner: tag.clone(),
                                }
                            },
                            pos,
                        ));
                    }
                }
                match tag.parse::<BioTag>() {
                    Ok(parsed @ (BioTag::Begin(_) | BioTag::Inside(_)))
                        if label_set.contains(parsed.entity_type().unwrap_or_default()) =>
                    {
                        open = Some((tag, parsed, i, None));
                    }
                    _ => {
                        if repair {
                            continue;
                        }
                        return Err(ParseFailure::new(
                            FailureReason::UnknownLabel { inner: tag },
                            i,
                        ));
                    }
                }
            }
            Piece::Close(tag) => match open.take() {
                None => {
                    if repair {
                        continue;
                    }
                    return Err(ParseFailure::new(FailureReason::UnmatchedClose { tag }, i));
                }
                Some((open_tag, parsed, pos, wrapped)) => {
                    if open_tag != tag {
                        if repair {
                            if let Some(text) = wrapped {
                                tokens.push(Token::new(text).expect("piece has no whitespace"));
                                tags.push(BioTag::Outside);
                            }
                            continue;
                        }
                        return Err(ParseFailure::new(
                            FailureReason::MismatchedClose {
                                open: open_tag,
                                close: tag,
                            },
                            i,
                        ));
                    }
                    match wrapped {
                        None => {
                            if repair {
                                continue;
                            }
                            return Err(ParseFailure::new(
                                FailureReason::EmptyWrapper { tag },
                                pos,
                            ));
                        }
                        Some(text) => {
                            tokens.push(Token::new(text).expect("piece has no whitespace"));
                            tags.push(parsed);
                        }
                    }
                }
            },
            Piece::Plain(text) => match &mut open {
                None => {
                    tokens.push(Token::new(text).expect("piece has no whitespace"));
                    tags.push(BioTag::Outside);
                }
                Some((tag, _, pos, wrapped)) => {
                    if wrapped.is_some() {
                        // Two tokens inside one wrapper.
                        if repair {
                            let (_, _, _, prev) = open.take().unwrap();
                            if let Some(p) = prev {
                                tokens.push(Token::new(p).expect("piece has no whitespace"));
                                tags.push(BioTag::Outside);
                            }
                            tokens.push(Token::new(text).expect("piece has no whitespace"));
                            tags.push(BioTag::Outside);
                        } else {
                            return Err(ParseFailure::new(
                                FailureReason::UnmatchedOpen { tag: tag.clone() },
                                *pos,
                            ));
                        }
                    } else {
                        *wrapped = Some(text);
                    }
                }
            },
        }
    }

    if let Some((tag, _, pos, wrapped)) = open {
        if repair {
            if let Some(text) = wrapped {
                tokens.push(Token::new(text).expect("piece has no whitespace"));
                tags.push(BioTag::Outside);
            }
        } else {
            return Err(ParseFailure::new(FailureReason::UnmatchedOpen { tag }, pos));
        }
    }

    if tokens.is_empty() {
        return Err(ParseFailure::new(FailureReason::EmptyText, pieces.len()));
    }

    // Recovered tags must form a valid IOB2 sequence.
    let policy = if repair {
        RepairPolicy::TreatStrayIAsB
    } else {
        RepairPolicy::Strict
    };
    Sentence::new("", tokens, tags, policy).map_err(|e| match e {
        crate::corpus::CorpusError::InvalidSequence { tag, position, .. } => {
            ParseFailure::new(FailureReason::StrayInside { tag }, position)
        }
        _ => ParseFailure::new(FailureReason::EmptyText, 0),
    })
}

/// Removes scheme artifacts from a linearized string: mask tokens are
/// dropped, label tokens are unwrapped. Used before scoring text metrics.
pub fn strip_scheme_tokens(text: &str, scheme: &LabelTokenScheme) -> String {
    text.split_whitespace()
        .filter(|piece| {
            *piece != scheme.mask_token
                && scheme.parse_close(piece).is_none()
                && scheme.parse_open(piece).is_none()
        })
        .collect::<Vec<_>>()
        .join(" ")
}

//! Data augmentation for low-resource NER via selective masking and
//! knowledge-conditioned text reconstruction.
//!
//! The pipeline corrupts each gold sentence by masking everything except its
//! entities and a Gaussian-sampled subset of extracted keywords, linearizes
//! the annotation into inline label tokens, attaches verbalized relation
//! triples, and trains a sequence-to-sequence backend to reconstruct the full
//! linearized sentence. Generation conditions the trained backend on freshly
//! corrupted sentences (without knowledge) and parses the outputs back into
//! tagged sentences, which are merged into the training corpus.
//!
//! ```
//! use bioaug::corpus::{parse_conll, RepairPolicy};
//! use bioaug::linearize::{delinearize, linearize, LabelTokenScheme};
//!
//! let corpus = parse_conll("HNPCC\tB-Disease\ncauses\tO\npain\tO\n", RepairPolicy::Strict)?;
//! let scheme = LabelTokenScheme::default();
//! let text = linearize(&corpus.sentences()[0], &scheme)?;
//! assert_eq!(text, "<B-Disease> HNPCC </B-Disease> causes pain");
//! let back = delinearize(&text, &scheme, corpus.label_set()).unwrap();
//! assert!(back.same_content(&corpus.sentences()[0]));
//! # Ok::<(), Box<dyn std::error::Error>>(())
//! ```
//!
//! Modules:
//!
//! - [`corpus`] - CoNLL/BIO parsing, span codecs, low-resource subsampling
//! - [`linearize`] - label-token schemes and total, diagnosing delinearization
//! - [`corrupt`] - keyword extraction and dynamic selective masking
//! - [`knowledge`] - relation triples, filtering, verbalization
//! - [`backend`] - the seq2seq contract, reference backends, adapter protocol
//! - [`augment`] - denoising pairs, generation records, corpus merging
//! - [`baselines`] - synonym replacement and entity-token substitution
//! - [`eval`] - diversity, perplexity, and span-level micro-F1
//! - [`config`] / [`pipeline`] - declarative runs with manifested artifacts
//!
//! The `examples/` directory holds one runnable program per capability;
//! start with `cargo run -p bioaug --example generate_and_merge`.

pub mod augment;
pub mod backend;
pub mod baselines;
pub mod config;
pub mod corpus;
pub mod corrupt;
pub mod eval;
pub mod knowledge;
pub mod linearize;
pub mod pipeline;
pub mod seed;

pub use augment::{AugmentationRecord, Augmenter, MergePolicy, RecordStatus};
pub use backend::{Backend, DenoisePair, GenerationParams, MemorizingBackend};
pub use corpus::{Corpus, EntitySpan, Sentence};
pub use linearize::LabelTokenScheme;

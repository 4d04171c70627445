//! Sequence-to-sequence backends behind a uniform contract.
//!
//! The toolkit never decodes text itself; a [`Backend`] owns fitting and
//! generation. Two deterministic reference backends support full-pipeline
//! testing without any model training, and [`AdapterBackend`] speaks a
//! line-delimited JSON protocol to an external process or socket, so
//! GPU-hosted encoder-decoder models plug in without linking.
//!
//! Adapter protocol, one JSON object per line:
//!
//! ```text
//! -> {"cmd":"fit","pairs":[{"source":..,"target":..,"origin_id":..,"epoch":..}],"config":{..}}
//! <- {"ok":true}
//! -> {"cmd":"generate","source":"..","params":{"top_k":..,"beam_width":..,"n_aug":..,"max_length":..,"seed":..}}
//! <- {"ok":true,"result":{"texts":[".."],"truncated":false}}
//! <- {"ok":false,"error":"reason"}
//! ```

use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, BufReader, Write};
use std::net::TcpStream;
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use std::sync::Mutex;

use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::BioTag;
use crate::linearize::LabelTokenScheme;
use crate::seed::stable_hash;

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("{0}")]
    Argument(String),
    #[error("backend `{0}` has not been fitted")]
    NotTrained(String),
    #[error("cannot fit on an empty pair stream")]
    EmptyTraining,
    #[error("adapter `{adapter}` unreachable: {message}")]
    Connectivity { adapter: String, message: String },
    #[error("adapter `{adapter}` protocol error: {message}")]
    Protocol { adapter: String, message: String },
    #[error("adapter `{adapter}` reported: {message}")]
    Remote { adapter: String, message: String },
    #[error("backend state: {0}")]
    State(String),
}

/// One denoising training example: corrupted source in, fully linearized
/// original out.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DenoisePair {
    pub source: String,
    pub target: String,
    pub origin_id: String,
    pub epoch: u32,
}

/// Decoding knobs, passed through to the backend untouched.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationParams {
    pub top_k: usize,
    pub beam_width: usize,
    /// Augmentations per sentence.
    pub n_aug: usize,
    /// Output token budget; exceeding it truncates and flags the result.
    pub max_length: usize,
    pub seed: u64,
}

impl Default for GenerationParams {
    fn default() -> Self {
        GenerationParams {
            top_k: 50,
            beam_width: 5,
            n_aug: 1,
            max_length: 256,
            seed: 0,
        }
    }
}

impl GenerationParams {
    pub fn validate(&self) -> Result<(), BackendError> {
        if self.n_aug == 0 {
            return Err(BackendError::Argument("n_aug must be at least 1".into()));
        }
        if self.top_k == 0 || self.beam_width == 0 {
            return Err(BackendError::Argument(
                "top_k and beam_width must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Fitting hyperparameters. Options the toolkit does not interpret (for
/// example learning rates) ride along as opaque strings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingConfig {
    pub epochs: u32,
    pub batch_size: usize,
    #[serde(default)]
    pub adapter_options: BTreeMap<String, String>,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            epochs: 10,
            batch_size: 16,
            adapter_options: BTreeMap::new(),
        }
    }
}

/// Result of one generate call: exactly `n_aug` texts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationOutput {
    pub texts: Vec<String>,
    /// Set when the output hit the `max_length` budget.
    #[serde(default)]
    pub truncated: bool,
}

/// A trainable text-reconstruction model. Refitting replaces the previous
/// state: the last fit wins.
pub trait Backend {
    fn name(&self) -> &str;

    fn fit(
        &mut self,
        batches: &mut dyn Iterator<Item = Vec<DenoisePair>>,
        config: &TrainingConfig,
    ) -> Result<(), BackendError>;

    fn generate(
        &self,
        source: &str,
        params: &GenerationParams,
    ) -> Result<GenerationOutput, BackendError>;

    /// Whether concurrent generate calls are safe; the harness serializes
    /// calls to backends that answer `false`.
    fn concurrency_safe(&self) -> bool {
        false
    }
}

/// Deterministic reference backend. Stores every fitted source -> target
/// mapping exactly; on top of that it indexes targets by the wrapped-entity
/// skeleton of the source, so *any* corruption of a seen sentence (entities
/// are always preserved by the corruptor) reconstructs the full original.
/// Unseen sources fall back to the source with mask tokens deleted.
pub struct MemorizingBackend {
    scheme: LabelTokenScheme,
    seen: Vec<(String, String)>,
    exact: HashMap<String, String>,
    by_skeleton: HashMap<String, String>,
    trained: bool,
}

impl MemorizingBackend {
    pub fn new(scheme: LabelTokenScheme) -> Self {
        MemorizingBackend {
            scheme,
            seen: Vec::new(),
            exact: HashMap::new(),
            by_skeleton: HashMap::new(),
            trained: false,
        }
    }

    /// Label tokens and their wrapped tokens, in order; masks and plain
    /// context dropped. Empty for sources without entities.
    fn ne_skeleton(&self, source: &str) -> String {
        let mut pieces: Vec<&str> = Vec::new();
        let mut in_wrapper = false;
        for piece in source.split_whitespace() {
            if piece == self.scheme.mask_token {
                continue;
            }
            if let Some(tag) = self.scheme.parse_close(piece) {
                if is_entity_tag(&tag) {
                    pieces.push(piece);
                    in_wrapper = false;
                    continue;
                }
            }
            if let Some(tag) = self.scheme.parse_open(piece) {
                if is_entity_tag(&tag) {
                    pieces.push(piece);
                    in_wrapper = true;
                    continue;
                }
            }
            if in_wrapper {
                pieces.push(piece);
            }
        }
        pieces.join(" ")
    }

    fn insert(&mut self, source: String, target: String) {
        let skeleton = self.ne_skeleton(&source);
        if !skeleton.is_empty() {
            self.by_skeleton.insert(skeleton, target.clone());
        }
        self.exact.insert(source.clone(), target.clone());
        self.seen.push((source, target));
    }

    /// The single text this backend would emit for a source.
    pub fn reconstruct(&self, source: &str) -> String {
        if let Some(target) = self.exact.get(source) {
            return target.clone();
        }
        let skeleton = self.ne_skeleton(source);
        if !skeleton.is_empty() {
            if let Some(target) = self.by_skeleton.get(&skeleton) {
                return target.clone();
            }
        }
        // Unseen: delete the mask tokens, keep everything else.
        source
            .split_whitespace()
            .filter(|p| *p != self.scheme.mask_token)
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// Serializes the fitted pairs for a later [`MemorizingBackend::from_state`].
    pub fn save_state(&self) -> String {
        serde_json::to_string(&self.seen).expect("state is plain strings")
    }

    pub fn from_state(scheme: LabelTokenScheme, state: &str) -> Result<Self, BackendError> {
        let seen: Vec<(String, String)> =
            serde_json::from_str(state).map_err(|e| BackendError::State(e.to_string()))?;
        let mut backend = MemorizingBackend::new(scheme);
        for (source, target) in seen {
            backend.insert(source, target);
        }
        backend.trained = !backend.seen.is_empty();
        if !backend.trained {
            return Err(BackendError::State("empty state".into()));
        }
        Ok(backend)
    }
}

fn is_entity_tag(tag: &str) -> bool {
    matches!(
        tag.parse::<BioTag>(),
        Ok(BioTag::Begin(_) | BioTag::Inside(_))
    )
}

fn truncate_to_budget(text: String, max_length: usize) -> (String, bool) {
    let pieces: Vec<&str> = text.split_whitespace().collect();
    if pieces.len() <= max_length {
        (text, false)
    } else {
        (pieces[..max_length].join(" "), true)
    }
}

impl Backend for MemorizingBackend {
    fn name(&self) -> &str {
        "memorizing"
    }

    fn fit(
        &mut self,
        batches: &mut dyn Iterator<Item = Vec<DenoisePair>>,
        _config: &TrainingConfig,
    ) -> Result<(), BackendError> {
        // Last fit wins.
        self.seen.clear();
        self.exact.clear();
        self.by_skeleton.clear();
        self.trained = false;
        for batch in batches {
            for pair in batch {
                self.insert(pair.source, pair.target);
            }
        }
        if self.seen.is_empty() {
            return Err(BackendError::EmptyTraining);
        }
        self.trained = true;
        Ok(())
    }

    fn generate(
        &self,
        source: &str,
        params: &GenerationParams,
    ) -> Result<GenerationOutput, BackendError> {
        params.validate()?;
        if !self.trained {
            return Err(BackendError::NotTrained(self.name().into()));
        }
        let (text, truncated) = truncate_to_budget(self.reconstruct(source), params.max_length);
        Ok(GenerationOutput {
            texts: vec![text; params.n_aug],
            truncated,
        })
    }

    fn concurrency_safe(&self) -> bool {
        true
    }
}

/// Memorizing backend plus seeded length jitter: each generation duplicates
/// a few plain tokens, so augmentations stay parseable but differ in length.
/// Useful as a smoke backend for diversity metrics.
pub struct PerturbingBackend {
    inner: MemorizingBackend,
}

impl PerturbingBackend {
    pub fn new(scheme: LabelTokenScheme) -> Self {
        PerturbingBackend {
            inner: MemorizingBackend::new(scheme),
        }
    }

    pub fn from_state(scheme: LabelTokenScheme, state: &str) -> Result<Self, BackendError> {
        Ok(PerturbingBackend {
            inner: MemorizingBackend::from_state(scheme, state)?,
        })
    }

    pub fn save_state(&self) -> String {
        self.inner.save_state()
    }

    /// Duplicates `copies` tokens picked from the pieces outside wrappers.
    fn jitter(&self, text: &str, copies: usize, rng: &mut ChaCha8Rng) -> String {
        let pieces: Vec<&str> = text.split_whitespace().collect();
        let scheme = &self.inner.scheme;
        let mut safe: Vec<usize> = Vec::new();
        let mut in_wrapper = false;
        for (i, piece) in pieces.iter().enumerate() {
            if scheme
                .parse_close(piece)
                .as_deref()
                .is_some_and(is_entity_tag)
            {
                in_wrapper = false;
                continue;
            }
            if scheme
                .parse_open(piece)
                .as_deref()
                .is_some_and(is_entity_tag)
            {
                in_wrapper = true;
                continue;
            }
            if !in_wrapper && *piece != scheme.mask_token {
                safe.push(i);
            }
        }
        if safe.is_empty() {
            return text.to_string();
        }
        let mut targets: Vec<usize> = Vec::new();
        for _ in 0..copies {
            targets.push(*safe.choose(rng).expect("safe is non-empty"));
        }
        let mut out: Vec<&str> = Vec::with_capacity(pieces.len() + copies);
        for (i, piece) in pieces.iter().enumerate() {
            out.push(piece);
            for _ in targets.iter().filter(|t| **t == i) {
                out.push(piece);
            }
        }
        out.join(" ")
    }
}

impl Backend for PerturbingBackend {
    fn name(&self) -> &str {
        "perturbing"
    }

    fn fit(
        &mut self,
        batches: &mut dyn Iterator<Item = Vec<DenoisePair>>,
        config: &TrainingConfig,
    ) -> Result<(), BackendError> {
        self.inner.fit(batches, config)
    }

    fn generate(
        &self,
        source: &str,
        params: &GenerationParams,
    ) -> Result<GenerationOutput, BackendError> {
        params.validate()?;
        if !self.inner.trained {
            return Err(BackendError::NotTrained(self.name().into()));
        }
        let base = self.inner.reconstruct(source);
        let mut texts = Vec::with_capacity(params.n_aug);
        let mut truncated = false;
        for j in 0..params.n_aug {
            let mut rng = ChaCha8Rng::seed_from_u64(stable_hash(&[
                &params.seed.to_le_bytes(),
                source.as_bytes(),
                &(j as u64).to_le_bytes(),
            ]));
            let jittered = self.jitter(&base, j + 1, &mut rng);
            let (text, t) = truncate_to_budget(jittered, params.max_length);
            truncated |= t;
            texts.push(text);
        }
        Ok(GenerationOutput { texts, truncated })
    }

    fn concurrency_safe(&self) -> bool {
        true
    }
}

/// Where an adapter process listens.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdapterEndpoint {
    /// Spawn the command and exchange messages over its standard streams.
    Command(Vec<String>),
    /// Connect to `host:port` on the local machine.
    Tcp(String),
}

impl std::fmt::Display for AdapterEndpoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AdapterEndpoint::Command(argv) => write!(f, "command `{}`", argv.join(" ")),
            AdapterEndpoint::Tcp(addr) => write!(f, "tcp {addr}"),
        }
    }
}

enum AdapterTransport {
    Child {
        // Kept alive for the lifetime of the backend.
        _child: Child,
        stdin: ChildStdin,
        stdout: BufReader<ChildStdout>,
    },
    Tcp {
        writer: TcpStream,
        reader: BufReader<TcpStream>,
    },
}

/// Backend bridged to an external process over the line-delimited JSON
/// protocol described in the module docs.
pub struct AdapterBackend {
    label: String,
    transport: Mutex<AdapterTransport>,
    trained: bool,
}

#[derive(Serialize)]
#[serde(tag = "cmd", rename_all = "snake_case")]
enum AdapterRequest<'a> {
    Fit {
        pairs: &'a [DenoisePair],
        config: &'a TrainingConfig,
    },
    Generate {
        source: &'a str,
        params: &'a GenerationParams,
    },
}

#[derive(Deserialize)]
struct AdapterResponse {
    ok: bool,
    #[serde(default)]
    result: Option<serde_json::Value>,
    #[serde(default)]
    error: Option<String>,
}

impl AdapterBackend {
    pub fn connect(endpoint: &AdapterEndpoint) -> Result<Self, BackendError> {
        let label = endpoint.to_string();
        let connectivity = |message: String| BackendError::Connectivity {
            adapter: label.clone(),
            message,
        };
        let transport = match endpoint {
            AdapterEndpoint::Command(argv) => {
                let (program, args) = argv
                    .split_first()
                    .ok_or_else(|| connectivity("empty command".into()))?;
                let mut child = Command::new(program)
                    .args(args)
                    .stdin(Stdio::piped())
                    .stdout(Stdio::piped())
                    .spawn()
                    .map_err(|e| connectivity(e.to_string()))?;
                let stdin = child.stdin.take().ok_or_else(|| connectivity("no stdin".into()))?;
                let stdout = child
                    .stdout
                    .take()
                    .ok_or_else(|| connectivity("no stdout".into()))?;
                AdapterTransport::Child {
                    _child: child,
                    stdin,
                    stdout: BufReader::new(stdout),
                }
            }
            AdapterEndpoint::Tcp(addr) => {
                let stream = TcpStream::connect(addr).map_err(|e| connectivity(e.to_string()))?;
                let reader = stream
                    .try_clone()
                    .map_err(|e| connectivity(e.to_string()))?;
                AdapterTransport::Tcp {
                    writer: stream,
                    reader: BufReader::new(reader),
                }
            }
        };
        Ok(AdapterBackend {
            label,
            transport: Mutex::new(transport),
            trained: false,
        })
    }

    /// Marks the handle trained without fitting in this process. For staged
    /// runs where the adapter persisted its fit state across connections.
    pub fn assume_trained(&mut self) {
        self.trained = true;
    }

    fn round_trip(&self, request: &AdapterRequest<'_>) -> Result<AdapterResponse, BackendError> {
        let line = serde_json::to_string(request).map_err(|e| BackendError::Protocol {
            adapter: self.label.clone(),
            message: e.to_string(),
        })?;
        let mut transport = self.transport.lock().expect("adapter transport poisoned");
        let mut reply = String::new();
        {
            let (writer, reader): (&mut dyn Write, &mut dyn BufRead) = match &mut *transport {
                AdapterTransport::Child { stdin, stdout, .. } => (stdin, stdout),
                AdapterTransport::Tcp { writer, reader } => (writer, reader),
            };
            writer
                .write_all(line.as_bytes())
                .and_then(|()| writer.write_all(b"\n"))
                .and_then(|()| writer.flush())
                .map_err(|e| BackendError::Connectivity {
                    adapter: self.label.clone(),
                    message: e.to_string(),
                })?;
            reader
                .read_line(&mut reply)
                .map_err(|e| BackendError::Connectivity {
                    adapter: self.label.clone(),
                    message: e.to_string(),
                })?;
        }
        if reply.is_empty() {
            return Err(BackendError::Connectivity {
                adapter: self.label.clone(),
                message: "adapter closed the connection".into(),
            });
        }
        let response: AdapterResponse =
            serde_json::from_str(reply.trim_end()).map_err(|e| BackendError::Protocol {
                adapter: self.label.clone(),
                message: format!("bad response: {e}"),
            })?;
        if !response.ok {
            return Err(BackendError::Remote {
                adapter: self.label.clone(),
                message: response.error.unwrap_or_else(|| "unspecified error".into()),
            });
        }
        Ok(response)
    }
}

impl Backend for AdapterBackend {
    fn name(&self) -> &str {
        "adapter"
    }

    fn fit(
        &mut self,
        batches: &mut dyn Iterator<Item = Vec<DenoisePair>>,
        config: &TrainingConfig,
    ) -> Result<(), BackendError> {
        let pairs: Vec<DenoisePair> = batches.flatten().collect();
        if pairs.is_empty() {
            return Err(BackendError::EmptyTraining);
        }
        self.round_trip(&AdapterRequest::Fit {
            pairs: &pairs,
            config,
        })?;
        self.trained = true;
        Ok(())
    }

    fn generate(
        &self,
        source: &str,
        params: &GenerationParams,
    ) -> Result<GenerationOutput, BackendError> {
        params.validate()?;
        if !self.trained {
            return Err(BackendError::NotTrained(self.label.clone()));
        }
        let response = self.round_trip(&AdapterRequest::Generate { source, params })?;
        let result = response.result.ok_or_else(|| BackendError::Protocol {
            adapter: self.label.clone(),
            message: "generate returned no result".into(),
        })?;
        let output: GenerationOutput =
            serde_json::from_value(result).map_err(|e| BackendError::Protocol {
                adapter: self.label.clone(),
                message: format!("bad generate result: {e}"),
            })?;
        if output.texts.len() != params.n_aug {
            return Err(BackendError::Protocol {
                adapter: self.label.clone(),
                message: format!(
                    "expected {} generations, adapter sent {}",
                    params.n_aug,
                    output.texts.len()
                ),
            });
        }
        Ok(output)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(source: &str, target: &str) -> DenoisePair {
        DenoisePair {
            source: source.into(),
            target: target.into(),
            origin_id: "s0".into(),
            epoch: 1,
        }
    }

    fn fit_one(backend: &mut dyn Backend, pairs: Vec<DenoisePair>) {
        backend
            .fit(&mut std::iter::once(pairs), &TrainingConfig::default())
            .unwrap();
    }

    fn params(n_aug: usize) -> GenerationParams {
        GenerationParams {
            n_aug,
            ..GenerationParams::default()
        }
    }

    #[test]
    fn memorizer_returns_target_for_seen_source() {
        let mut backend = MemorizingBackend::new(LabelTokenScheme::default());
        fit_one(&mut backend, vec![pair("<mask> a", "the full a")]);
        let out = backend.generate("<mask> a", &params(2)).unwrap();
        assert_eq!(out.texts, vec!["the full a", "the full a"]);
        assert!(!out.truncated);
    }

    #[test]
    fn memorizer_strips_masks_for_unseen_source() {
        let mut backend = MemorizingBackend::new(LabelTokenScheme::default());
        fit_one(&mut backend, vec![pair("x", "y")]);
        let out = backend
            .generate("<mask> kept <mask> also", &params(1))
            .unwrap();
        assert_eq!(out.texts, vec!["kept also"]);
    }

    #[test]
    fn memorizer_matches_on_entity_skeleton() {
        // Two different corruptions of the same sentence share the wrapped
        // entity; both must reconstruct the full target.
        let mut backend = MemorizingBackend::new(LabelTokenScheme::default());
        let target = "The mutation frequency of <B-Disease> HNPCC </B-Disease> is high";
        fit_one(
            &mut backend,
            vec![pair(
                "<mask> mutation <mask> <B-Disease> HNPCC </B-Disease> <mask> <kg> HNPCC associated with mutation",
                target,
            )],
        );
        let other_corruption = "<mask> frequency <mask> <B-Disease> HNPCC </B-Disease> <mask>";
        let out = backend.generate(other_corruption, &params(1)).unwrap();
        assert_eq!(out.texts, vec![target]);
    }

    #[test]
    fn refitting_replaces_state() {
        let mut backend = MemorizingBackend::new(LabelTokenScheme::default());
        fit_one(&mut backend, vec![pair("a", "first")]);
        fit_one(&mut backend, vec![pair("a", "second")]);
        let out = backend.generate("a", &params(1)).unwrap();
        assert_eq!(out.texts, vec!["second"]);
    }

    #[test]
    fn empty_fit_is_an_error() {
        let mut backend = MemorizingBackend::new(LabelTokenScheme::default());
        let err = backend
            .fit(&mut std::iter::empty(), &TrainingConfig::default())
            .unwrap_err();
        assert!(matches!(err, BackendError::EmptyTraining));
    }

    #[test]
    fn zero_n_aug_is_an_error() {
        let mut backend = MemorizingBackend::new(LabelTokenScheme::default());
        fit_one(&mut backend, vec![pair("a", "b")]);
        assert!(matches!(
            backend.generate("a", &params(0)),
            Err(BackendError::Argument(_))
        ));
    }

    #[test]
    fn generate_before_fit_is_an_error() {
        let backend = MemorizingBackend::new(LabelTokenScheme::default());
        assert!(matches!(
            backend.generate("a", &params(1)),
            Err(BackendError::NotTrained(_))
        ));
    }

    #[test]
    fn budget_overflow_truncates_with_flag() {
        let mut backend = MemorizingBackend::new(LabelTokenScheme::default());
        fit_one(&mut backend, vec![pair("s", "one two three four five")]);
        let p = GenerationParams {
            max_length: 3,
            ..params(1)
        };
        let out = backend.generate("s", &p).unwrap();
        assert!(out.truncated);
        assert_eq!(out.texts, vec!["one two three"]);
    }

    #[test]
    fn state_round_trips() {
        let scheme = LabelTokenScheme::default();
        let mut backend = MemorizingBackend::new(scheme.clone());
        fit_one(&mut backend, vec![pair("<mask> x", "full x")]);
        let state = backend.save_state();
        let restored = MemorizingBackend::from_state(scheme, &state).unwrap();
        assert_eq!(restored.generate("<mask> x", &params(1)).unwrap().texts, vec!["full x"]);
    }

    #[test]
    fn perturbing_backend_changes_length_not_wrappers() {
        let mut backend = PerturbingBackend::new(LabelTokenScheme::default());
        let target = "The mutation frequency of <B-Disease> HNPCC </B-Disease> is high";
        fit_one(&mut backend, vec![pair("src", target)]);
        let out = backend.generate("src", &params(3)).unwrap();
        assert_eq!(out.texts.len(), 3);
        for (j, text) in out.texts.iter().enumerate() {
            let base_len = target.split_whitespace().count();
            assert_eq!(
                text.split_whitespace().count(),
                base_len + j + 1,
                "aug {j} should add {} tokens",
                j + 1
            );
            // The wrapped entity survives intact.
            assert!(text.contains("<B-Disease> HNPCC </B-Disease>"));
        }
        // Deterministic per seed.
        let again = backend.generate("src", &params(3)).unwrap();
        assert_eq!(out.texts, again.texts);
    }

    #[test]
    fn adapter_connect_failure_names_the_endpoint() {
        // Port 1 on localhost is never listening.
        let err = match AdapterBackend::connect(&AdapterEndpoint::Tcp("127.0.0.1:1".into())) {
            Ok(_) => panic!("connect to port 1 should fail"),
            Err(e) => e,
        };
        match err {
            BackendError::Connectivity { adapter, .. } => {
                assert!(adapter.contains("127.0.0.1:1"), "label was {adapter}");
            }
            other => panic!("unexpected error: {other}"),
        }
    }
}

//! Acceptance suite: one test per shipped guarantee, each printing a
//! `acceptance N PASS` line (run with `--nocapture` to see them).
//!
//! Numbers, tolerances, and fixture values are pinned here; loosening them
//! is a behavior change, not a test fix.

use std::collections::BTreeSet;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use bioaug::augment::{
    merge_augmentations, Augmenter, KnowledgeFormat, MergePolicy, RecordStatus,
};
use bioaug::backend::{
    Backend, GenerationParams, MemorizingBackend, PerturbingBackend, TrainingConfig,
};
use bioaug::baselines::entity_token_substitute;
use bioaug::corpus::{
    parse_conll, sample_low_resource, BioTag, Corpus, RepairPolicy, Sentence, Token,
};
use bioaug::corrupt::{
    corrupt, extract_keywords, remove_ne_overlaps, render_corrupted, sample_retention_count,
    select_retained_keywords, GazetteerExtractor, HeuristicExtractor, RetentionConfig,
};
use bioaug::knowledge::{candidate_pairs, filter_triples, KnowledgeTriple, TripleStore};
use bioaug::linearize::{delinearize, linearize, LabelTokenScheme};
use bioaug::eval::{
    diversity, diversity_l, perplexity, span_micro_f1, Perplexity, UniformScorer, UnigramScorer,
};

const LABELS: [&str; 4] = ["Disease", "Gene", "Chemical", "Protein"];

fn label_set() -> BTreeSet<String> {
    LABELS.iter().map(|s| s.to_string()).collect()
}

/// Random valid sentence: <= max_len alphanumeric tokens, entities over the
/// four-label set.
fn random_sentence(rng: &mut ChaCha8Rng, id: usize, max_len: usize) -> Sentence {
    let len = rng.gen_range(1..=max_len);
    let mut tokens = Vec::with_capacity(len);
    let mut tags = Vec::with_capacity(len);
    let mut prev: Option<&str> = None;
    for t in 0..len {
        let word_len = rng.gen_range(1..=10);
        let text: String = (0..word_len)
            .map(|_| {
                let alphabet = b"abcdefghijklmnopqrstuvwxyz0123456789";
                alphabet[rng.gen_range(0..alphabet.len())] as char
            })
            .collect();
        tokens.push(Token::new(format!("t{t}{text}")).unwrap());
        if rng.gen_bool(0.35) {
            let label = LABELS[rng.gen_range(0..LABELS.len())];
            let tag = match prev {
                Some(p) if p == label && rng.gen_bool(0.5) => BioTag::Inside(label.into()),
                _ => BioTag::Begin(label.into()),
            };
            prev = Some(label);
            tags.push(tag);
        } else {
            tags.push(BioTag::Outside);
            prev = None;
        }
    }
    Sentence::new(format!("r{id}"), tokens, tags, RepairPolicy::Strict).unwrap()
}

#[test]
fn acceptance_01_round_trip_thousand_sentences() {
    let scheme = LabelTokenScheme::default();
    let labels = label_set();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let started = Instant::now();
    for i in 0..1000 {
        let sentence = random_sentence(&mut rng, i, 40);
        let lin = linearize(&sentence, &scheme).unwrap();
        let back = delinearize(&lin, &scheme, &labels)
            .unwrap_or_else(|e| panic!("sentence {i} failed to round trip: {e}"));
        assert!(back.same_content(&sentence), "sentence {i} mutated");
    }
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs() < 10, "took {elapsed:?}, budget 10 s");
    println!("acceptance 01 PASS - 1000/1000 round trips in {elapsed:?}");
}

#[test]
fn acceptance_02_corruption_invariants_ten_thousand_draws() {
    let extractor = HeuristicExtractor::default();
    let config = RetentionConfig::new(0.5, 202);
    let scheme = LabelTokenScheme::default();
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let mut draws = 0;
    'outer: for i in 0.. {
        let sentence = random_sentence(&mut rng, i, 30);
        let keywords = extract_keywords(&sentence, &extractor).unwrap();
        let candidates = remove_ne_overlaps(keywords.clone(), &sentence.spans());
        for epoch in 1..=10 {
            let retained = select_retained_keywords(
                sentence.id(),
                &candidates,
                keywords.len(),
                &config,
                epoch,
            );
            // Retained keywords are a subset of the non-overlapping candidates.
            for k in &retained {
                assert!(
                    candidates.iter().any(|c| c.start == k.start && c.end == k.end),
                    "retained span outside candidates"
                );
            }
            let corrupted = corrupt(&sentence, &retained, epoch, config.seed).unwrap();
            // Every entity token survives, in original order.
            let literal_indices: Vec<usize> = corrupted
                .segments
                .iter()
                .flat_map(|seg| match seg {
                    bioaug::corrupt::Segment::Literal(run) => {
                        run.iter().map(|t| t.index).collect::<Vec<_>>()
                    }
                    bioaug::corrupt::Segment::Mask => vec![],
                })
                .collect();
            assert!(
                literal_indices.windows(2).all(|w| w[0] < w[1]),
                "literal order broken"
            );
            for span in sentence.spans() {
                for idx in span.token_range() {
                    assert!(
                        literal_indices.contains(&idx),
                        "entity token {idx} lost in sentence {i} epoch {epoch}"
                    );
                }
            }
            // Rendered output never holds two adjacent mask tokens.
            let rendered = render_corrupted(&corrupted, &scheme);
            let pieces: Vec<&str> = rendered.split_whitespace().collect();
            assert!(
                pieces
                    .windows(2)
                    .all(|w| !(w[0] == scheme.mask_token && w[1] == scheme.mask_token)),
                "adjacent masks in `{rendered}`"
            );
            draws += 1;
            if draws == 10_000 {
                break 'outer;
            }
        }
    }
    println!("acceptance 02 PASS - 10000 corruption draws, zero violations");
}

#[test]
fn acceptance_03_retention_mean_within_bounds() {
    let config = RetentionConfig::new(0.5, 404);
    let total: usize = (0..10_000)
        .map(|epoch| sample_retention_count(10, 10, &config, "retention-fixture", epoch))
        .sum();
    let mean = total as f64 / 10_000.0;
    assert!(
        (4.8..=5.2).contains(&mean),
        "mean retained count {mean} outside [4.8, 5.2]"
    );
    println!("acceptance 03 PASS - mean retained count {mean:.3} in [4.8, 5.2]");
}

#[test]
fn acceptance_04_corruption_is_dynamic_across_epochs() {
    let sentence = parse_conll(
        "alpha\tO\nbeta\tO\ngamma\tO\ndelta\tO\nXYZ\tB-Gene\n",
        RepairPolicy::Strict,
    )
    .unwrap()
    .sentences()[0]
        .clone();
    let gazetteer = GazetteerExtractor::new(["alpha", "beta", "gamma", "delta"]);
    let keywords = extract_keywords(&sentence, &gazetteer).unwrap();
    let candidates = remove_ne_overlaps(keywords.clone(), &sentence.spans());
    assert_eq!(candidates.len(), 4, "fixture needs k_remaining = 4");
    let config = RetentionConfig::new(0.5, 505);
    let scheme = LabelTokenScheme::default();
    let rendered: BTreeSet<String> = (1..=10)
        .map(|epoch| {
            let retained = select_retained_keywords(
                sentence.id(),
                &candidates,
                keywords.len(),
                &config,
                epoch,
            );
            let corrupted = corrupt(&sentence, &retained, epoch, config.seed).unwrap();
            render_corrupted(&corrupted, &scheme)
        })
        .collect();
    assert!(
        rendered.len() >= 2,
        "epochs 1..10 produced only {} distinct corruption(s)",
        rendered.len()
    );
    println!(
        "acceptance 04 PASS - {} distinct corruptions across 10 epochs",
        rendered.len()
    );
}

#[test]
fn acceptance_05_candidate_pairs_are_binomial_and_filtering_is_strict() {
    for (n, want) in [(0usize, 0usize), (1, 0), (2, 1), (3, 3), (5, 10), (10, 45)] {
        let terms: Vec<String> = (0..n).map(|i| format!("term{i}")).collect();
        assert_eq!(candidate_pairs(&terms).len(), want, "C({n}, 2)");
    }
    // No triple with a masked endpoint survives filtering.
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let all_terms: Vec<String> = (0..8).map(|i| format!("term{i}")).collect();
    let mut triples = Vec::new();
    for (a, b) in candidate_pairs(&all_terms) {
        triples.push(KnowledgeTriple::new(a, "related_to", b, 1.0).unwrap());
    }
    for _ in 0..200 {
        let keep = rng.gen_range(0..=all_terms.len());
        let retained: BTreeSet<String> = all_terms
            .choose_multiple(&mut rng, keep)
            .cloned()
            .collect();
        for kept in filter_triples(&triples, &retained) {
            assert!(retained.contains(&kept.head), "masked head survived");
            assert!(retained.contains(&kept.tail), "masked tail survived");
        }
    }
    println!("acceptance 05 PASS - pair counts exact, no masked endpoint kept");
}

/// Fifty sentences with distinct entities and heuristic-extractable keywords.
fn fixture_corpus_50() -> Corpus {
    fn word(prefix: &str, i: usize) -> String {
        let a = (b'a' + (i / 26) as u8) as char;
        let b = (b'a' + (i % 26) as u8) as char;
        format!("{prefix}{a}{b}")
    }
    let sentences = (0..50)
        .map(|i| {
            let tokens = vec![
                Token::new(word("context", i)).unwrap(),
                Token::new(word("marker", i)).unwrap(),
                Token::new(word("ent", i)).unwrap(),
                Token::new(word("signal", i)).unwrap(),
                Token::new("notes").unwrap(),
            ];
            let tags = vec![
                BioTag::Outside,
                BioTag::Outside,
                BioTag::Begin("Disease".into()),
                BioTag::Outside,
                BioTag::Outside,
            ];
            Sentence::new(format!("f{i}"), tokens, tags, RepairPolicy::Strict).unwrap()
        })
        .collect();
    Corpus::new("fixture50", sentences).unwrap()
}

fn fixture_augmenter(seed: u64) -> Augmenter {
    Augmenter::new(
        LabelTokenScheme::default(),
        RetentionConfig::new(0.5, seed),
        KnowledgeFormat::default(),
        Box::new(HeuristicExtractor::default()),
        Box::new(TripleStore::default()),
        bioaug::seed::derive_stage_seed(seed, "generation"),
    )
}

#[test]
fn acceptance_06_generation_path_never_carries_knowledge() {
    // A triple store covering every adjacent keyword pair guarantees the
    // training path would attach knowledge; the generation path must not.
    let corpus = fixture_corpus_50();
    let mut triples = Vec::new();
    for s in corpus.iter() {
        let toks: Vec<&str> = s.tokens().iter().map(Token::text).collect();
        triples.push(KnowledgeTriple::new(toks[0], "precedes", toks[1], 1.0).unwrap());
    }
    let augmenter = Augmenter::new(
        LabelTokenScheme::default(),
        RetentionConfig::new(0.9, 707),
        KnowledgeFormat::default(),
        Box::new(HeuristicExtractor::default()),
        Box::new(TripleStore::new(triples).unwrap()),
        bioaug::seed::derive_stage_seed(707, "generation"),
    );
    let mut training_attached = 0;
    for sentence in corpus.iter() {
        for epoch in 1..=3 {
            let pair = augmenter.build_denoise_pair(sentence, epoch).unwrap();
            if pair.source.split_whitespace().any(|p| p == "<kg>") {
                training_attached += 1;
            }
        }
        let source = augmenter.generation_source(sentence).unwrap();
        assert!(
            !source.split_whitespace().any(|p| p == "<kg>"),
            "knowledge marker leaked into generation source `{source}`"
        );
    }
    assert!(
        training_attached > 0,
        "fixture too weak: training path never attached knowledge"
    );
    println!(
        "acceptance 06 PASS - 0/50 generation sources carry the marker ({training_attached} training sources do)"
    );
}

#[test]
fn acceptance_07_memorizing_backend_is_the_identity_oracle() {
    let started = Instant::now();
    let corpus = fixture_corpus_50();
    let augmenter = fixture_augmenter(808);
    let mut backend = MemorizingBackend::new(LabelTokenScheme::default());
    let mut batches = (1..=3)
        .map(|epoch| augmenter.build_epoch_dataset(&corpus, epoch).unwrap())
        .collect::<Vec<_>>()
        .into_iter();
    backend.fit(&mut batches, &TrainingConfig::default()).unwrap();
    let params = GenerationParams {
        n_aug: 2,
        ..GenerationParams::default()
    };
    let mut records = augmenter
        .generate_augmentations(&corpus, &backend, &params)
        .unwrap();
    assert_eq!(records.len(), 100, "expected |corpus| * n_aug records");
    for record in &records {
        assert_eq!(record.status, RecordStatus::Valid, "{:?}", record.failure_reason);
        let origin = corpus.get(&record.origin_id).unwrap();
        assert!(
            record.sentence.as_ref().unwrap().same_content(origin),
            "augmentation of {} differs from its origin",
            record.origin_id
        );
    }
    let merged = merge_augmentations(&corpus, &mut records, MergePolicy::KeepValid).unwrap();
    assert_eq!(merged.len(), 150);
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs() < 60, "took {elapsed:?}, budget 60 s");
    println!(
        "acceptance 07 PASS - 100 valid identity records, merged 150, in {elapsed:?}"
    );
}

#[test]
fn acceptance_08_metric_oracles() {
    const TOL: f64 = 1e-9;
    let scheme = LabelTokenScheme::default();
    let plain = |id: &str, toks: &[&str]| {
        Sentence::new(
            id,
            toks.iter().map(|t| Token::new(*t).unwrap()).collect(),
            vec![BioTag::Outside; toks.len()],
            RepairPolicy::Strict,
        )
        .unwrap()
    };

    // Diversity: 2 new of 4 -> 50%.
    let orig = plain("o", &["A", "B", "C", "D"]);
    let aug = plain("a", &["A", "B", "X", "Y"]);
    assert!((diversity(&[(&orig, &aug)]).unwrap() - 50.0).abs() < TOL);
    // Diversity-L: |10-13| = 3 and mean(|4-6|, |4-4|) = 1.
    let o10 = plain("b", &["x"; 10]);
    let a13 = plain("c", &["y"; 13]);
    assert!((diversity_l(&[(&o10, &a13)]).unwrap() - 3.0).abs() < TOL);
    let o4 = plain("d", &["x"; 4]);
    let a6 = plain("e", &["y"; 6]);
    let a4 = plain("f", &["y"; 4]);
    assert!((diversity_l(&[(&o4, &a6), (&o4, &a4)]).unwrap() - 1.0).abs() < TOL);

    // Uniform scorer: perplexity is exactly the vocabulary size.
    for v in [2usize, 7, 50_000] {
        let got = perplexity(&["any text at all".into()], &UniformScorer { vocab_size: v }, &scheme)
            .unwrap();
        assert!((got.value().unwrap() - v as f64).abs() < TOL);
    }
    // Unigram fit on "a a b", scoring "a": exp(-ln(2/3)) = 1.5.
    let got = perplexity(&["a".into()], &UnigramScorer::fit("a a b"), &scheme).unwrap();
    assert!((got.value().unwrap() - 1.5).abs() < TOL);
    // Zero-probability tokens surface as the sentinel, not a crash.
    let inf = perplexity(&["zebra".into()], &UnigramScorer::fit("a a b"), &scheme).unwrap();
    assert!(matches!(inf, Perplexity::Infinite { .. }));

    // Span micro-F1: identical -> 1.0; one of two spans correct -> 0.5 across.
    let gold = parse_conll(
        "HNPCC\tB-Disease\nand\tO\nEGFR\tB-Gene\n",
        RepairPolicy::Strict,
    )
    .unwrap();
    let perfect = span_micro_f1(&gold, &gold).unwrap();
    assert!((perfect.micro_f1() - 1.0).abs() < TOL);
    let half = parse_conll(
        "HNPCC\tB-Disease\nand\tB-Gene\nEGFR\tO\n",
        RepairPolicy::Strict,
    )
    .unwrap();
    let report = span_micro_f1(&gold, &half).unwrap();
    assert!((report.overall.precision() - 0.5).abs() < TOL);
    assert!((report.overall.recall() - 0.5).abs() < TOL);
    assert!((report.micro_f1() - 0.5).abs() < TOL);

    println!("acceptance 08 PASS - all metric oracles within 1e-9");
}

#[test]
fn acceptance_09_length_diversity_separates_baseline_from_pipeline() {
    // Entity substitution alone: Diversity-L exactly 0.
    let corpus = parse_conll(
        "HNPCC\tB-Disease\nis\tO\nbad\tO\n\nasthma\tB-Disease\nis\tO\nworse\tO\n\nmigraine\tB-Disease\nhurts\tO\ntoo\tO\n",
        RepairPolicy::Strict,
    )
    .unwrap();
    let pairs: Vec<(Sentence, Sentence)> = corpus
        .iter()
        .enumerate()
        .map(|(i, s)| (s.clone(), entity_token_substitute(&corpus, s, i as u64)))
        .collect();
    let refs: Vec<(&Sentence, &Sentence)> = pairs.iter().map(|(a, b)| (a, b)).collect();
    let baseline_dl = diversity_l(&refs).unwrap();
    assert_eq!(baseline_dl, 0.0, "entity substitution must preserve length");

    // The pipeline with a perturbing backend on the same fixture: > 0.
    let fixture = fixture_corpus_50();
    let augmenter = fixture_augmenter(909);
    let mut backend = PerturbingBackend::new(LabelTokenScheme::default());
    let pairs_data = augmenter.build_epoch_dataset(&fixture, 1).unwrap();
    backend
        .fit(&mut std::iter::once(pairs_data), &TrainingConfig::default())
        .unwrap();
    let params = GenerationParams {
        n_aug: 2,
        ..GenerationParams::default()
    };
    let records = augmenter
        .generate_augmentations(&fixture, &backend, &params)
        .unwrap();
    let pipeline_pairs: Vec<(&Sentence, &Sentence)> = records
        .iter()
        .filter_map(|r| {
            r.sentence
                .as_ref()
                .map(|s| (fixture.get(&r.origin_id).unwrap(), s))
        })
        .collect();
    let pipeline_dl = diversity_l(&pipeline_pairs).unwrap();
    assert!(
        pipeline_dl > 0.0,
        "perturbing pipeline should change lengths, got {pipeline_dl}"
    );
    println!(
        "acceptance 09 PASS - baseline Diversity-L 0.0, pipeline Diversity-L {pipeline_dl:.3}"
    );
}

#[test]
fn acceptance_10_low_resource_sampler_sizes() {
    fn corpus(prefix: &str, n: usize) -> Corpus {
        let sentences = (0..n)
            .map(|i| {
                Sentence::new(
                    format!("{prefix}{i}"),
                    vec![Token::new(format!("w{i}")).unwrap()],
                    vec![BioTag::Outside],
                    RepairPolicy::Strict,
                )
                .unwrap()
            })
            .collect();
        Corpus::new(prefix, sentences).unwrap()
    }
    let train = corpus("t", 15_197);
    let dev = corpus("d", 3_061);
    for (size, expected_dev) in [(100usize, 20usize), (200, 40), (500, 101)] {
        let (t, d) = sample_low_resource(&train, &dev, size, 1010).unwrap();
        assert_eq!(t.len(), size);
        assert_eq!(d.len(), expected_dev, "dev size for train size {size}");
        let (t2, d2) = sample_low_resource(&train, &dev, size, 1010).unwrap();
        assert_eq!(t, t2, "train subset not deterministic");
        assert_eq!(d, d2, "dev subset not deterministic");
    }
    println!("acceptance 10 PASS - dev sizes 20/40/101 for 100/200/500, deterministic");
}

#[test]
fn acceptance_11_delinearize_survives_fuzzed_input() {
    let scheme = LabelTokenScheme::default();
    let labels = label_set();
    let mut rng = ChaCha8Rng::seed_from_u64(1111);
    // Seed pool: valid linearizations to mutate.
    let pool: Vec<String> = (0..100)
        .map(|i| {
            let s = random_sentence(&mut rng, i, 20);
            linearize(&s, &scheme).unwrap()
        })
        .collect();
    let junk = [
        "<mask>",
        "<B-Disease>",
        "</B-Disease>",
        "<I-Gene>",
        "</I-Gene>",
        "<B-Unknown>",
        "<kg>",
        "\u{1F9EC}",
        "<",
        ">",
        "raw",
    ];
    let mut parsed = 0usize;
    let mut failed = 0usize;
    for _ in 0..10_000 {
        let base = pool.choose(&mut rng).unwrap();
        let mut pieces: Vec<String> =
            base.split_whitespace().map(str::to_string).collect();
        for _ in 0..rng.gen_range(1..=3) {
            match rng.gen_range(0..5) {
                0 if !pieces.is_empty() => {
                    let i = rng.gen_range(0..pieces.len());
                    pieces.remove(i);
                }
                1 if !pieces.is_empty() => {
                    let i = rng.gen_range(0..pieces.len());
                    let piece = pieces[i].clone();
                    pieces.insert(i, piece);
                }
                2 if pieces.len() >= 2 => {
                    let i = rng.gen_range(0..pieces.len() - 1);
                    pieces.swap(i, i + 1);
                }
                3 => {
                    let i = rng.gen_range(0..=pieces.len());
                    pieces.insert(i, junk.choose(&mut rng).unwrap().to_string());
                }
                _ => {
                    let cut = rng.gen_range(0..=pieces.len());
                    pieces.truncate(cut);
                }
            }
        }
        let mutated = pieces.join(" ");
        // Totality: any outcome but a panic is acceptable, and failures must
        // carry a diagnosis.
        match delinearize(&mutated, &scheme, &labels) {
            Ok(_) => parsed += 1,
            Err(failure) => {
                let text = failure.to_string();
                assert!(!text.is_empty());
                failed += 1;
            }
        }
    }
    assert_eq!(parsed + failed, 10_000);
    println!("acceptance 11 PASS - 10000 fuzzed inputs: {parsed} parsed, {failed} diagnosed failures, 0 crashes");
}

//! The full augmentation loop with the deterministic memorizing backend:
//! fit on denoising pairs, generate from fresh corruptions, parse every
//! output, and merge the valid ones into the gold corpus.
//!
//! ```bash
//! cargo run -p bioaug --example generate_and_merge
//! ```

use bioaug::augment::{merge_augmentations, Augmenter, KnowledgeFormat, MergePolicy};
use bioaug::backend::{Backend, GenerationParams, MemorizingBackend, TrainingConfig};
use bioaug::corpus::{parse_conll, RepairPolicy};
use bioaug::corrupt::{GazetteerExtractor, RetentionConfig};
use bioaug::knowledge::TripleStore;
use bioaug::linearize::LabelTokenScheme;
use bioaug::seed::derive_stage_seed;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let fixtures = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures");
    let corpus = parse_conll(
        &std::fs::read_to_string(format!("{fixtures}/demo.conll"))?,
        RepairPolicy::TreatStrayIAsB,
    )?
    .named("demo");

    let seed = 42;
    let scheme = LabelTokenScheme::default();
    let augmenter = Augmenter::new(
        scheme.clone(),
        RetentionConfig::new(0.5, derive_stage_seed(seed, "retention")),
        KnowledgeFormat::default(),
        Box::new(GazetteerExtractor::from_file(format!("{fixtures}/gazetteer.txt"))?),
        Box::new(TripleStore::from_file(format!("{fixtures}/triples.jsonl"))?),
        derive_stage_seed(seed, "generation"),
    );

    // Fit on three epochs of re-drawn corruptions.
    let mut backend = MemorizingBackend::new(scheme);
    let mut batches = (1..=3)
        .map(|epoch| augmenter.build_epoch_dataset(&corpus, epoch))
        .collect::<Result<Vec<_>, _>>()?
        .into_iter();
    backend.fit(&mut batches, &TrainingConfig::default())?;

    let params = GenerationParams {
        n_aug: 2,
        seed: derive_stage_seed(seed, "generation"),
        ..GenerationParams::default()
    };
    let mut records = augmenter.generate_augmentations(&corpus, &backend, &params)?;
    let valid = records
        .iter()
        .filter(|r| r.sentence.is_some())
        .count();
    println!("records: {} total, {valid} valid", records.len());
    for record in records.iter().take(2) {
        println!("  [{}] {}", record.origin_id, record.raw_text);
    }

    let merged = merge_augmentations(&corpus, &mut records, MergePolicy::KeepValid)?;
    println!(
        "merged corpus: {} gold + {} augmentations = {} sentences",
        corpus.len(),
        merged.len() - corpus.len(),
        merged.len()
    );
    Ok(())
}

//! Build per-epoch denoising pairs (corrupted + knowledge source, fully
//! linearized target) ready for backend fitting or JSONL export.
//!
//! ```bash
//! cargo run -p bioaug --example build_denoise_dataset
//! ```

use bioaug::augment::{write_denoise_jsonl, Augmenter, KnowledgeFormat};
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
    )?;
    let seed = 42;
    let augmenter = Augmenter::new(
        LabelTokenScheme::default(),
        RetentionConfig::new(0.5, derive_stage_seed(seed, "retention")),
        KnowledgeFormat::default(),
        Box::new(GazetteerExtractor::from_file(format!("{fixtures}/gazetteer.txt"))?),
        Box::new(TripleStore::from_file(format!("{fixtures}/triples.jsonl"))?),
        derive_stage_seed(seed, "generation"),
    );

    for epoch in 1..=2 {
        let pairs = augmenter.build_epoch_dataset(&corpus, epoch)?;
        println!("== epoch {epoch}: {} pairs", pairs.len());
        for pair in pairs.iter().take(2) {
            println!("  source: {}", pair.source);
            println!("  target: {}\n", pair.target);
        }
    }

    let jsonl = write_denoise_jsonl(&augmenter.build_epoch_dataset(&corpus, 1)?);
    println!("JSONL head:\n{}", jsonl.lines().next().unwrap_or_default());
    Ok(())
}

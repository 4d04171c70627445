//! Dynamic selective masking: the same sentence corrupts differently at each
//! epoch while its entities always survive.
//!
//! ```bash
//! cargo run -p bioaug --example corrupt_epochs
//! ```

use bioaug::corpus::{parse_conll, RepairPolicy};
use bioaug::corrupt::{
    corrupt, extract_keywords, remove_ne_overlaps, render_corrupted, select_retained_keywords,
    GazetteerExtractor, RetentionConfig,
};
use bioaug::linearize::LabelTokenScheme;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let corpus = parse_conll(
        "The\tO\nmutation\tO\nfrequency\tO\nof\tO\nHNPCC\tB-Disease\nis\tO\nhigh\tO\n",
        RepairPolicy::Strict,
    )?;
    let sentence = &corpus.sentences()[0];
    let gazetteer = GazetteerExtractor::new(["mutation", "frequency", "high"]);

    let keywords = extract_keywords(sentence, &gazetteer)?;
    println!("sentence : {}", sentence.text());
    println!(
        "keywords : {:?}",
        keywords.iter().map(|k| k.surface.as_str()).collect::<Vec<_>>()
    );

    let candidates = remove_ne_overlaps(keywords.clone(), &sentence.spans());
    let config = RetentionConfig::new(0.5, 42);
    let scheme = LabelTokenScheme::default();
    for epoch in 1..=6 {
        let retained =
            select_retained_keywords(sentence.id(), &candidates, keywords.len(), &config, epoch);
        let corrupted = corrupt(sentence, &retained, epoch, config.seed)?;
        println!(
            "epoch {epoch}: {}   (retained {:?})",
            render_corrupted(&corrupted, &scheme),
            retained.iter().map(|k| k.surface.as_str()).collect::<Vec<_>>()
        );
    }
    Ok(())
}

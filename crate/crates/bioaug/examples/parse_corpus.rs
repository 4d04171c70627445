//! Parse a CoNLL/BIO corpus, inspect its entity spans, and write it back.
//!
//! ```bash
//! cargo run -p bioaug --example parse_corpus
//! ```

use bioaug::corpus::{parse_conll, write_conll, RepairPolicy};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/demo.conll");
    let text = std::fs::read_to_string(path)?;
    let corpus = parse_conll(&text, RepairPolicy::TreatStrayIAsB)?.named("demo");

    println!(
        "{}: {} sentences, labels {:?}",
        corpus.name(),
        corpus.len(),
        corpus.label_set()
    );
    for sentence in corpus.iter().take(3) {
        println!("\n[{}] {}", sentence.id(), sentence.text());
        for span in sentence.spans() {
            println!(
                "  {}..{} {} -> {}",
                span.start,
                span.end,
                span.label,
                sentence.surface(span.start, span.end)
            );
        }
    }

    let round_tripped = parse_conll(&write_conll(&corpus), RepairPolicy::Strict)?;
    println!(
        "\nwrite + re-parse preserves all {} sentences: {}",
        corpus.len(),
        round_tripped
            .iter()
            .zip(corpus.iter())
            .all(|(a, b)| a.same_content(b))
    );
    Ok(())
}

//! The two reference augmenters: synonym replacement from a file-backed
//! table, and length-preserving entity-token substitution.
//!
//! ```bash
//! cargo run -p bioaug --example baseline_augmenters
//! ```

use bioaug::baselines::{entity_token_substitute, synonym_replace, SynonymTable};
use bioaug::corpus::{parse_conll, RepairPolicy};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let fixtures = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures");
    let corpus = parse_conll(
        &std::fs::read_to_string(format!("{fixtures}/demo.conll"))?,
        RepairPolicy::TreatStrayIAsB,
    )?;
    let table = SynonymTable::from_file(format!("{fixtures}/synonyms.json"))?;

    println!("== synonym replacement (one concept per call)");
    for (i, sentence) in corpus.iter().take(3).enumerate() {
        let outcome = synonym_replace(sentence, &table, i as u64);
        println!(
            "  {} {}",
            if outcome.applied { "->" } else { "--" },
            outcome.sentence.text()
        );
    }

    println!("== entity substitution (same label, same token count)");
    for (i, sentence) in corpus.iter().take(3).enumerate() {
        let swapped = entity_token_substitute(&corpus, sentence, i as u64);
        println!(
            "  {} tokens before/after: {}/{}",
            swapped.text(),
            sentence.len(),
            swapped.len()
        );
    }
    Ok(())
}

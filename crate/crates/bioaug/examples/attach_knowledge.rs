//! Relation triples: candidate pairs over terms, filtering to surviving
//! endpoints, verbalization, and attachment to a corrupted source.
//!
//! ```bash
//! cargo run -p bioaug --example attach_knowledge
//! ```

use std::collections::BTreeSet;

use bioaug::knowledge::{
    attach_knowledge, candidate_pairs, extract_relations, filter_triples, verbalize, TripleStore,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/triples.jsonl");
    let store = TripleStore::from_file(path)?;

    let terms: Vec<String> = ["HNPCC", "mutation", "frequency"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    println!("terms           : {terms:?}");
    println!("candidate pairs : {} (C(3,2) = 3)", candidate_pairs(&terms).len());

    let triples = extract_relations(&terms, &store)?;
    for t in &triples {
        println!("extracted       : {} (confidence {})", verbalize(t), t.confidence);
    }

    // Only triples whose both endpoints survived masking are attached.
    let retained: BTreeSet<String> = ["HNPCC", "mutation"].iter().map(|s| s.to_string()).collect();
    let kept = filter_triples(&triples, &retained);
    let source = "<mask> mutation <mask> <B-Disease> HNPCC </B-Disease> <mask>";
    println!("training source : {}", attach_knowledge(source, &kept, "<kg>", " ; "));
    println!("no triples      : {}", attach_knowledge(source, &[], "<kg>", " ; "));
    Ok(())
}

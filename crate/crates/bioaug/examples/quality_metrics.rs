//! Augmentation quality: diversity, length diversity, and perplexity under
//! the bundled reference scorers.
//!
//! ```bash
//! cargo run -p bioaug --example quality_metrics
//! ```

use bioaug::corpus::{parse_conll, RepairPolicy, Sentence};
use bioaug::eval::{diversity, diversity_l, perplexity, UniformScorer, UnigramScorer};
use bioaug::linearize::LabelTokenScheme;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let originals = parse_conll(
        "the\tO\ndrug\tO\nreduced\tO\npain\tO\n\nthe\tO\ndose\tO\nwas\tO\nlow\tO\n",
        RepairPolicy::Strict,
    )?;
    let augmented = parse_conll(
        "the\tO\ndrug\tO\neased\tO\ndiscomfort\tO\n\na\tO\nminimal\tO\ndose\tO\nwas\tO\ngiven\tO\n",
        RepairPolicy::Strict,
    )?;
    let pairs: Vec<(&Sentence, &Sentence)> = originals
        .iter()
        .zip(augmented.iter())
        .collect();

    println!("diversity   : {:.2}% new tokens", diversity(&pairs)?);
    println!("diversity-l : {:.2} tokens of length drift", diversity_l(&pairs)?);

    let scheme = LabelTokenScheme::default();
    let texts: Vec<String> = augmented.iter().map(Sentence::text).collect();
    // Uniform scorer: perplexity equals the vocabulary size by construction.
    let uniform = perplexity(&texts, &UniformScorer { vocab_size: 5000 }, &scheme)?;
    println!("uniform ppl : {:?}", uniform.value());
    // Unigram scorer fit on the originals: unseen tokens yield the sentinel.
    let reference: Vec<String> = originals.iter().map(Sentence::text).collect();
    let unigram = UnigramScorer::fit(&reference.join("\n"));
    println!("unigram ppl : {:?}", perplexity(&texts, &unigram, &scheme)?);
    Ok(())
}

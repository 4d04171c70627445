//! Seeded low-resource subsetting: exact train sizes with proportionally
//! downsampled dev sets (round-half-up, floor of one).
//!
//! ```bash
//! cargo run -p bioaug --example low_resource_sample
//! ```

use bioaug::corpus::{sample_low_resource, Corpus, RepairPolicy, Sentence, Token};

fn synthetic(name: &str, n: usize) -> Corpus {
    let sentences = (0..n)
        .map(|i| {
            Sentence::new(
                format!("{name}{i}"),
                vec![Token::new(format!("tok{i}")).unwrap()],
                vec!["O".parse().unwrap()],
                RepairPolicy::Strict,
            )
            .unwrap()
        })
        .collect();
    Corpus::new(name, sentences).unwrap()
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // Shaped like a 15197-train / 3061-dev benchmark corpus.
    let train = synthetic("t", 15_197);
    let dev = synthetic("d", 3_061);

    for size in [100, 200, 500] {
        let (t, d) = sample_low_resource(&train, &dev, size, 7)?;
        println!(
            "size {size:>3}: train {} sentences, dev {} sentences",
            t.len(),
            d.len()
        );
    }

    let (a, _) = sample_low_resource(&train, &dev, 100, 7)?;
    let (b, _) = sample_low_resource(&train, &dev, 100, 7)?;
    println!("same seed, same subset: {}", a == b);
    let (c, _) = sample_low_resource(&train, &dev, 100, 8)?;
    println!("different seed, same subset: {}", a == c);
    Ok(())
}

//! Span-level micro-averaged F1 between a gold corpus and predictions.
//!
//! ```bash
//! cargo run -p bioaug --example score_predictions
//! ```

use bioaug::corpus::{parse_conll, RepairPolicy};
use bioaug::eval::span_micro_f1;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let gold = parse_conll(
        "HNPCC\tB-Disease\ncauses\tO\ncolorectal\tB-Disease\ncancer\tI-Disease\n\nEGFR\tB-Gene\nmutations\tO\nmatter\tO\n",
        RepairPolicy::Strict,
    )?;
    // One correct span, one boundary miss, one spurious span.
    let predicted = parse_conll(
        "HNPCC\tB-Disease\ncauses\tO\ncolorectal\tB-Disease\ncancer\tO\n\nEGFR\tO\nmutations\tB-Gene\nmatter\tO\n",
        RepairPolicy::Strict,
    )?;

    let report = span_micro_f1(&gold, &predicted)?;
    print!("{}", report.to_table());
    println!("\nmicro-F1: {:.4}", report.micro_f1());
    Ok(())
}

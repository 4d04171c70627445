//! Turn tagged sentences into label-token strings and back, including how
//! malformed model output is diagnosed instead of crashing.
//!
//! ```bash
//! cargo run -p bioaug --example linearize_roundtrip
//! ```

use bioaug::corpus::{parse_conll, RepairPolicy};
use bioaug::linearize::{delinearize, linearize, LabelTokenScheme};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let corpus = parse_conll(
        "Colorectal\tB-Disease\nCancer\tI-Disease\nshows\tO\nmicrosatellite\tO\ninstability\tO\n",
        RepairPolicy::Strict,
    )?;
    let sentence = &corpus.sentences()[0];
    let scheme = LabelTokenScheme::default();

    let text = linearize(sentence, &scheme)?;
    println!("linearized : {text}");
    let back = delinearize(&text, &scheme, corpus.label_set()).expect("round trip");
    println!("recovered  : {} (tags intact: {})", back.text(), back.same_content(sentence));

    // Anything a generator can emit gets a diagnosis, never a panic.
    for broken in [
        "<B-Disease> Colorectal",
        "<mask> left over",
        "<B-Virus> HIV </B-Virus>",
        "<B-Disease> x </I-Disease>",
        "",
    ] {
        match delinearize(broken, &scheme, corpus.label_set()) {
            Ok(s) => println!("parsed     : {broken:?} -> {}", s.text()),
            Err(failure) => println!("diagnosed  : {broken:?} -> {failure}"),
        }
    }
    Ok(())
}

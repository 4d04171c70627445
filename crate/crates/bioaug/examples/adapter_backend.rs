//! Drive an external model process over the line-delimited JSON adapter
//! protocol. Uses the bundled Python reference adapter; any process that
//! answers `fit` and `generate` messages can stand in for it.
//!
//! ```bash
//! cargo run -p bioaug --example adapter_backend
//! ```

use bioaug::backend::{
    AdapterBackend, AdapterEndpoint, Backend, DenoisePair, GenerationParams, TrainingConfig,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let script = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/mock_adapter.py");
    let endpoint = AdapterEndpoint::Command(vec!["python3".into(), script.into()]);
    println!("connecting to {endpoint}");
    let mut backend = AdapterBackend::connect(&endpoint)?;

    let pairs = vec![DenoisePair {
        source: "<mask> mutation <mask> <B-Disease> HNPCC </B-Disease> <mask>".into(),
        target: "The mutation frequency of <B-Disease> HNPCC </B-Disease> is high".into(),
        origin_id: "s0".into(),
        epoch: 1,
    }];
    backend.fit(&mut std::iter::once(pairs.clone()), &TrainingConfig::default())?;

    let params = GenerationParams {
        n_aug: 2,
        ..GenerationParams::default()
    };
    let seen = backend.generate(&pairs[0].source, &params)?;
    println!("seen source   -> {:?}", seen.texts);
    let unseen = backend.generate("<mask> unknown <mask> input", &params)?;
    println!("unseen source -> {:?}", unseen.texts);
    Ok(())
}

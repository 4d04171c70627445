//! Run every stage from a config file, exactly as the `bioaug pipeline`
//! command does, then read the produced artifacts.
//!
//! ```bash
//! cargo run -p bioaug --example full_pipeline
//! ```

use bioaug::config::PipelineConfig;
use bioaug::pipeline::run_pipeline;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config_path = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/demo.toml");
    let mut config = PipelineConfig::load(config_path)?;
    let out = std::env::temp_dir().join("bioaug-example-pipeline");
    // A run owns its output directory; clear leftovers from earlier runs.
    if out.exists() {
        std::fs::remove_dir_all(&out)?;
    }
    config.output_dir = Some(out.clone());

    run_pipeline(&config)?;

    println!("artifacts under {}:", out.display());
    for stage in ["denoise", "train", "generate", "merge", "metrics"] {
        for entry in std::fs::read_dir(out.join(stage))? {
            println!("  {stage}/{}", entry?.file_name().to_string_lossy());
        }
    }
    let metrics = std::fs::read_to_string(out.join("metrics/metrics.txt"))?;
    println!("\n{metrics}");
    Ok(())
}

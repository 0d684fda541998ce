//! Runs a full experiment offline against a scripted provider, twice, to
//! show the response cache at work.
//!
//! ```text
//! cargo run --example mock_evaluation [STRATEGY]
//! ```

use std::path::Path;

use dialex::llm::{Client, MockProvider, ResponseCache};
use dialex::{run_experiment, DatasetName, ExperimentConfig, StrategyName};

fn main() -> dialex::Result<()> {
    let strategy: StrategyName = std::env::args()
        .nth(1)
        .map_or(Ok(StrategyName::SelfExplanation), |s| s.parse())?;
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let work = tempfile::tempdir().map_err(|e| dialex::Error::io(Path::new("tempdir"), e))?;

    let mut config = ExperimentConfig::new(DatasetName::Multiwoz21, fixtures.join("multiwoz21"), strategy);
    config.out = Some(work.path().join("records.jsonl"));

    for pass in 1..=2 {
        let client = Client::new(MockProvider::from_file(&fixtures.join("mock/multiwoz21_test.json"))?)
            .with_cache(ResponseCache::open(work.path().join("cache"))?);
        let output = run_experiment(&config, &client)?;
        println!("pass {pass}: {} (provider calls: {})", output.report, client.provider_calls());
        if pass == 1 {
            for r in &output.records {
                println!("  {} correct={} {:?}", r.instance_id, r.correct, r.status);
            }
        }
    }
    Ok(())
}

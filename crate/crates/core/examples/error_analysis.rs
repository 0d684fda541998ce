//! Compares two offline runs and classifies the instances where they
//! disagree.
//!
//! ```text
//! cargo run --example error_analysis
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use dialex::llm::{prompt_digest, Client, MockProvider, MockReply};
use dialex::parsing::render_gold;
use dialex::{
    compare_runs, load_dataset, render_prompt, run_experiment, DatasetDescriptor, DatasetName, ExperimentConfig,
    PromptStrategy, Split, StrategyName,
};

fn main() -> dialex::Result<()> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/multiwoz21");

    // Baseline: the bundled script, which makes a time-slot and an omission mistake.
    let baseline_cfg = ExperimentConfig::new(DatasetName::Multiwoz21, &dir, StrategyName::Vanilla);
    let script = dir.parent().unwrap().join("mock/multiwoz21_test.json");
    let baseline = run_experiment(&baseline_cfg, &Client::new(MockProvider::from_file(&script)?))?;

    // Candidate: a provider that always replies with gold.
    let strategy = PromptStrategy::new(StrategyName::SelfExplanation);
    let (instances, _) = load_dataset(&DatasetDescriptor::new(DatasetName::Multiwoz21, Split::Test), &dir)?.task_instances();
    let mut gold = BTreeMap::new();
    for i in &instances {
        gold.insert(prompt_digest(&render_prompt(&strategy, i, &[])?), MockReply::from(render_gold(&i.gold)));
    }
    let candidate_cfg = ExperimentConfig::new(DatasetName::Multiwoz21, &dir, StrategyName::SelfExplanation);
    let candidate = run_experiment(&candidate_cfg, &Client::new(MockProvider::new(gold)))?;

    println!("baseline:  {}\ncandidate: {}\n", baseline.report, candidate.report);
    let comparison = compare_runs(&baseline.records, &candidate.records)?;
    for case in &comparison.won_by_b {
        println!("{} {}: baseline said {:?}", case.instance_id, case.error_type, case.baseline_answer);
    }
    println!();
    print!("{}", comparison.summary_markdown());
    Ok(())
}

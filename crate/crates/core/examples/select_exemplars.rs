//! Shows which training demonstrations a few-shot prompt would carry.
//!
//! ```text
//! cargo run --example select_exemplars [SEED] [BUDGET]
//! ```

use std::path::Path;

use dialex::datasets::whitespace_tokens;
use dialex::runner::DEFAULT_TOKEN_BUDGET;
use dialex::{load_dataset, select_exemplars, DatasetDescriptor, DatasetName, PromptStrategy, Split, StrategyName};

fn main() -> dialex::Result<()> {
    let mut args = std::env::args().skip(1);
    let seed: u64 = args.next().map_or(0, |s| s.parse().expect("seed must be an integer"));
    let budget: usize = args.next().map_or(DEFAULT_TOKEN_BUDGET, |s| s.parse().expect("budget must be an integer"));

    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/multiwoz21");
    let (test, _) = load_dataset(&DatasetDescriptor::new(DatasetName::Multiwoz21, Split::Test), &dir)?.task_instances();
    let (pool, _) = load_dataset(&DatasetDescriptor::new(DatasetName::Multiwoz21, Split::Train), &dir)?.task_instances();
    let strategy = PromptStrategy::new(StrategyName::VanillaFewshot);

    println!("pool: {} instances, seed {seed}, budget {budget} tokens", pool.len());
    for instance in &test {
        let chosen = select_exemplars(&pool, instance, strategy.shots, budget, seed, whitespace_tokens, &strategy);
        let ids: Vec<&str> = chosen.iter().map(|e| e.instance.instance_id.as_str()).collect();
        println!("{} [{}] -> {}", instance.instance_id, instance.domains.iter().cloned().collect::<Vec<_>>().join(","), ids.join(" "));
    }
    Ok(())
}

//! Loads every bundled fixture corpus and prints its statistics and the
//! number of task instances it yields.
//!
//! ```text
//! cargo run --example dataset_stats [DATA_ROOT]
//! ```
//!
//! `DATA_ROOT` must hold one directory per dataset id (`multiwoz21`,
//! `starv2`, `sgd`, `spokenwoz`, `meld`, `mutual`).

use std::path::PathBuf;

use dialex::datasets::{corpus_stats, whitespace_tokens};
use dialex::{load_dataset, DatasetDescriptor, DatasetName, Split};

fn main() -> dialex::Result<()> {
    let root = std::env::args()
        .nth(1)
        .map_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures"), PathBuf::from);
    println!("{:<14} {:>9} {:>6} {:>7} {:>10} {:>11} {:>9}", "dataset", "dialogues", "turns", "tokens", "turns/dlg", "tokens/dlg", "instances");
    for name in DatasetName::ALL {
        let loaded = load_dataset(&DatasetDescriptor::new(name, Split::Test), &root.join(name.id()))?;
        let stats = corpus_stats(&loaded.dialogues, whitespace_tokens)?;
        let (instances, _) = loaded.task_instances();
        println!(
            "{:<14} {:>9} {:>6} {:>7} {:>10.1} {:>11.1} {:>9}",
            name.title(),
            stats.dialogue_count,
            stats.total_turns,
            stats.total_tokens,
            stats.mean_turns_per_dialogue,
            stats.mean_tokens_per_dialogue,
            instances.len()
        );
    }
    Ok(())
}

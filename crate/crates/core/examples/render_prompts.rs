//! Prints the prompt every strategy produces for one fixture instance.
//!
//! ```text
//! cargo run --example render_prompts [INSTANCE_ID] [--write DIR]
//! ```
//!
//! With `--write DIR` each prompt is saved as `DIR/<strategy>.txt`.

use std::path::{Path, PathBuf};

use dialex::datasets::whitespace_tokens;
use dialex::runner::DEFAULT_TOKEN_BUDGET;
use dialex::{
    load_dataset, render_prompt, select_exemplars, DatasetDescriptor, DatasetName, PromptStrategy, Split,
    StrategyName,
};

fn main() -> dialex::Result<()> {
    let mut args = std::env::args().skip(1);
    let mut instance_id = "SNG0001:002".to_string();
    let mut out_dir: Option<PathBuf> = None;
    while let Some(a) = args.next() {
        if a == "--write" {
            out_dir = args.next().map(PathBuf::from);
        } else {
            instance_id = a;
        }
    }

    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/multiwoz21");
    let test = load_dataset(&DatasetDescriptor::new(DatasetName::Multiwoz21, Split::Test), &dir)?;
    let pool = load_dataset(&DatasetDescriptor::new(DatasetName::Multiwoz21, Split::Train), &dir)?;
    let (instances, _) = test.task_instances();
    let (pool, _) = pool.task_instances();
    let instance = instances
        .iter()
        .find(|i| i.instance_id == instance_id)
        .unwrap_or_else(|| panic!("no instance {instance_id}"));

    for name in StrategyName::ALL {
        let strategy = PromptStrategy::new(name);
        let exemplars = if name.is_few_shot() {
            select_exemplars(&pool, instance, strategy.shots, DEFAULT_TOKEN_BUDGET, 0, whitespace_tokens, &strategy)
        } else {
            Vec::new()
        };
        let prompt = render_prompt(&strategy, instance, &exemplars)?;
        match &out_dir {
            Some(d) => {
                std::fs::create_dir_all(d).expect("create output directory");
                std::fs::write(d.join(format!("{name}.txt")), &prompt).expect("write prompt");
            }
            None => println!("===== {} =====\n{prompt}\n", strategy.title()),
        }
    }
    Ok(())
}

//! Sends one rendered prompt to a chat-completions endpoint.
//!
//! ```text
//! DIALEX_API_KEY=... [DIALEX_BASE_URL=...] cargo run --example http_provider [MODEL]
//! ```

use std::path::Path;

use dialex::llm::{Client, CompletionRequest, HttpProvider, DEFAULT_MODEL};
use dialex::{load_dataset, render_prompt, DatasetDescriptor, DatasetName, PromptStrategy, Split, StrategyName};

fn main() -> dialex::Result<()> {
    let provider = match HttpProvider::from_env() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("{e}; set it to try a live request");
            return Ok(());
        }
    };
    let model = std::env::args().nth(1).unwrap_or_else(|| DEFAULT_MODEL.to_string());
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/multiwoz21");
    let (instances, _) = load_dataset(&DatasetDescriptor::new(DatasetName::Multiwoz21, Split::Test), &dir)?.task_instances();
    let prompt = render_prompt(&PromptStrategy::new(StrategyName::SelfExplanation), &instances[1], &[])?;

    println!("POST {}\n\n{prompt}\n", provider.endpoint());
    let response = Client::new(provider).complete(&CompletionRequest::new(model, prompt))?;
    println!("{}", response.text);
    if let Some(usage) = response.provider_token_usage {
        println!("\n{usage:?}");
    }
    Ok(())
}

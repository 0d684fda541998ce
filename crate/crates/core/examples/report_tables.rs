//! Renders the main comparison table and the trigger-sentence ablation
//! table from published scores.
//!
//! ```text
//! cargo run --example report_tables [md|csv]
//! ```

use dialex::metrics::parse_percent;
use dialex::{format_report, DatasetName, Layout, MetricReport, StrategyName, TableFormat};

const MAIN: [(StrategyName, &str, [&str; 6]); 6] = [
    (StrategyName::Vanilla, "gpt-3.5-turbo", ["35.93", "51.88", "18.96", "13.75", "59.14", "68.97"]),
    (StrategyName::VanillaFewshot, "gpt-3.5-turbo", ["41.60", "52.93", "17.34", "14.13", "55.09", "72.51"]),
    (StrategyName::ZeroShotCot, "gpt-3.5-turbo", ["27.64", "51.85", "19.69", "13.26", "61.48", "70.61"]),
    (StrategyName::PlanAndSolve, "gpt-3.5-turbo", ["39.19", "56.74", "21.11", "14.50", "58.38", "69.77"]),
    (StrategyName::SelfExplanation, "gpt-3.5-turbo", ["44.44", "63.66", "21.81", "14.89", "61.71", "71.58"]),
    (StrategyName::SelfExplanation, "gpt-4", ["50.97", "70.27", "25.75", "25.94", "63.51", "91.87"]),
];

const ABLATION: [(StrategyName, &str); 4] = [
    (StrategyName::Vanilla, "35.93"),
    (StrategyName::Understand, "36.52"),
    (StrategyName::Summary, "40.98"),
    (StrategyName::SelfExplanation, "44.44"),
];

fn main() -> dialex::Result<()> {
    let format: TableFormat = std::env::args().nth(1).map_or(Ok(TableFormat::Markdown), |s| s.parse())?;
    let mut main = Vec::new();
    for (strategy, model, scores) in MAIN {
        for (dataset, score) in DatasetName::ALL.into_iter().zip(scores) {
            let mut r = MetricReport::new(dataset, strategy, model, parse_percent(score)?);
            if strategy.is_few_shot() {
                r.shots = 4;
            }
            main.push(r);
        }
    }
    println!("{}", format_report(&main, Layout::Main, format));

    let ablation: Vec<MetricReport> = ABLATION
        .into_iter()
        .map(|(s, score)| Ok(MetricReport::new(DatasetName::Multiwoz21, s, "gpt-3.5-turbo", parse_percent(score)?)))
        .collect::<dialex::Result<_>>()?;
    print!("{}", format_report(&ablation, Layout::Ablation, format));
    Ok(())
}

//! Aggregated scores and the two result-table layouts.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num::BigRational;

use crate::datasets::DatasetName;
use crate::error::{Error, Result};
use crate::metrics::{compute, format_percent, metrics_for, MetricKind};
use crate::prompts::{StrategyName, Triggers};
use crate::types::{PredictionRecord, RecordStatus};

/// Score of one dataset x strategy x model run.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub dataset: DatasetName,
    pub strategy: StrategyName,
    pub shots: usize,
    pub model_id: String,
    /// Trigger sentence the run used.
    pub prompt: String,
    pub metric: MetricKind,
    pub score: BigRational,
    /// Additional metrics reported for the task, headline excluded.
    pub secondary: Vec<(MetricKind, BigRational)>,
    pub instances: usize,
    pub parse_failures: usize,
    pub provider_failures: usize,
}

impl MetricReport {
    /// A report carrying only a headline score.
    pub fn new(dataset: DatasetName, strategy: StrategyName, model_id: impl Into<String>, score: BigRational) -> Self {
        MetricReport {
            dataset,
            strategy,
            shots: if strategy.is_few_shot() { crate::prompts::DEFAULT_SHOTS } else { 0 },
            model_id: model_id.into(),
            prompt: Triggers::builtin().get(strategy).to_string(),
            metric: metrics_for(dataset.task_kind())[0],
            score,
            secondary: Vec::new(),
            instances: 0,
            parse_failures: 0,
            provider_failures: 0,
        }
    }

    pub fn title(&self) -> String {
        self.strategy.title(self.shots)
    }

    /// Aggregates records that all come from one run.
    pub fn from_records(records: &[PredictionRecord], prompt: &str) -> Result<Self> {
        let first = records.first().ok_or(Error::Empty("report"))?;
        if let Some(r) = records.iter().find(|r| {
            (&r.dataset, &r.strategy_name, &r.model_id, r.shots)
                != (&first.dataset, &first.strategy_name, &first.model_id, first.shots)
        }) {
            return Err(Error::Contract(format!(
                "record {} belongs to a different run than {}",
                r.instance_id, first.instance_id
            )));
        }
        let dataset = DatasetName::from_str(&first.dataset)?;
        let strategy = StrategyName::from_str(&first.strategy_name)?;
        let kinds = metrics_for(first.task_kind);
        let score = compute(kinds[0], records)?;
        let secondary = kinds[1..]
            .iter()
            .map(|&k| Ok((k, compute(k, records)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(MetricReport {
            dataset,
            strategy,
            shots: first.shots,
            model_id: first.model_id.clone(),
            prompt: prompt.to_string(),
            metric: kinds[0],
            score,
            secondary,
            instances: records.len(),
            parse_failures: records.iter().filter(|r| r.status == RecordStatus::ParseFailure).count(),
            provider_failures: records
                .iter()
                .filter(|r| matches!(r.status, RecordStatus::ProviderError(_)))
                .count(),
        })
    }

    /// Score for `metric`, headline or secondary.
    pub fn score_for(&self, metric: MetricKind) -> Option<&BigRational> {
        if metric == self.metric {
            return Some(&self.score);
        }
        self.secondary.iter().find(|(k, _)| *k == metric).map(|(_, s)| s)
    }
}

impl fmt::Display for MetricReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} / {} / {}: {} {}",
            self.dataset.title(),
            self.title(),
            self.model_id,
            self.metric,
            format_percent(&self.score)
        )?;
        for (k, s) in &self.secondary {
            write!(f, ", {k} {}", format_percent(s))?;
        }
        write!(
            f,
            " ({} instances, {} parse failures, {} provider failures)",
            self.instances, self.parse_failures, self.provider_failures
        )
    }
}

/// Groups mixed records into per-run reports, ordered by dataset, then
/// strategy, then model. Trigger text comes from `triggers`.
pub fn reports_from_records(records: &[PredictionRecord], triggers: &Triggers) -> Result<Vec<MetricReport>> {
    let mut groups: BTreeMap<(DatasetName, StrategyName, usize, String), Vec<PredictionRecord>> = BTreeMap::new();
    for r in records {
        let key = (
            DatasetName::from_str(&r.dataset)?,
            StrategyName::from_str(&r.strategy_name)?,
            r.shots,
            r.model_id.clone(),
        );
        groups.entry(key).or_default().push(r.clone());
    }
    groups
        .into_iter()
        .map(|((_, strategy, _, _), recs)| MetricReport::from_records(&recs, triggers.get(strategy)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layout {
    /// Strategies as rows, datasets as columns.
    Main,
    /// Method / prompt / score rows.
    Ablation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableFormat {
    Markdown,
    Csv,
}

impl FromStr for Layout {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "main" => Ok(Layout::Main),
            "ablation" => Ok(Layout::Ablation),
            _ => Err(Error::Config(format!("unknown layout {s:?}"))),
        }
    }
}

impl FromStr for TableFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "md" | "markdown" => Ok(TableFormat::Markdown),
            "csv" => Ok(TableFormat::Csv),
            _ => Err(Error::Config(format!("unknown table format {s:?}"))),
        }
    }
}

struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
    /// Cells to emphasise, as (row, column).
    best: Vec<(usize, usize)>,
}

impl Table {
    fn render(&self, format: TableFormat) -> String {
        match format {
            TableFormat::Markdown => {
                let line = |cells: &[String]| format!("| {} |\n", cells.join(" | "));
                let mut out = line(&self.header);
                out.push_str(&line(&vec!["---".to_string(); self.header.len()]));
                for (i, row) in self.rows.iter().enumerate() {
                    let cells: Vec<String> = row
                        .iter()
                        .enumerate()
                        .map(|(j, c)| if self.best.contains(&(i, j)) { format!("**{c}**") } else { c.replace('|', "\\|") })
                        .collect();
                    out.push_str(&line(&cells));
                }
                out
            }
            TableFormat::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(&self.header).expect("in-memory write");
                for row in &self.rows {
                    w.write_record(row).expect("in-memory write");
                }
                String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
            }
        }
    }
}

fn row_label(r: &MetricReport, primary_model: &str) -> String {
    if r.model_id == primary_model {
        r.title()
    } else {
        format!("{} + {}", r.title(), r.model_id)
    }
}

/// Rows are labelled by strategy; reports from a model other than the
/// first report's get a `+ <model>` suffix and take no part in best-cell
/// marking.
fn main_table(reports: &[MetricReport]) -> Table {
    let primary = reports[0].model_id.as_str();
    let datasets: Vec<DatasetName> = DatasetName::ALL
        .into_iter()
        .filter(|d| reports.iter().any(|r| r.dataset == *d))
        .collect();
    let mut labels: Vec<(String, bool)> = Vec::new();
    let mut scores: BTreeMap<(String, DatasetName), &BigRational> = BTreeMap::new();
    for r in reports {
        let label = row_label(r, primary);
        if !labels.iter().any(|(l, _)| *l == label) {
            labels.push((label.clone(), r.model_id == primary));
        }
        scores.insert((label, r.dataset), &r.score);
    }
    let mut best = Vec::new();
    for (j, d) in datasets.iter().enumerate() {
        let top = labels
            .iter()
            .filter(|(_, p)| *p)
            .filter_map(|(l, _)| scores.get(&(l.clone(), *d)))
            .max();
        for (i, (l, p)) in labels.iter().enumerate() {
            if *p && top.is_some() && scores.get(&(l.clone(), *d)) == top {
                best.push((i, j + 1));
            }
        }
    }
    let labels: Vec<String> = labels.into_iter().map(|(l, _)| l).collect();
    let mut header = vec!["Method".to_string()];
    header.extend(datasets.iter().map(|d| d.title().to_string()));
    let rows = labels
        .iter()
        .map(|l| {
            let mut row = vec![l.clone()];
            row.extend(
                datasets
                    .iter()
                    .map(|d| scores.get(&(l.clone(), *d)).map_or("-".to_string(), |s| format_percent(s))),
            );
            row
        })
        .collect();
    Table { header, rows, best }
}

fn ablation_table(reports: &[MetricReport]) -> Table {
    let mut columns: Vec<(DatasetName, MetricKind)> = Vec::new();
    for d in DatasetName::ALL {
        if let Some(r) = reports.iter().find(|r| r.dataset == d) {
            columns.push((d, r.metric));
        }
    }
    let mut keys: Vec<(String, String)> = Vec::new();
    let mut scores: BTreeMap<(String, String, DatasetName), &BigRational> = BTreeMap::new();
    for r in reports {
        let key = (r.strategy.ablation_title().to_string(), r.prompt.clone());
        if !keys.contains(&key) {
            keys.push(key.clone());
        }
        scores.insert((key.0, key.1, r.dataset), &r.score);
    }
    let mut header = vec!["Method".to_string(), "Prompt".to_string()];
    header.extend(columns.iter().map(|(d, m)| format!("{}({m})", d.title())));
    let rows = keys
        .iter()
        .map(|(method, prompt)| {
            let mut row = vec![method.clone(), prompt.clone()];
            row.extend(columns.iter().map(|(d, _)| {
                scores
                    .get(&(method.clone(), prompt.clone(), *d))
                    .map_or("-".to_string(), |s| format_percent(s))
            }));
            row
        })
        .collect();
    Table { header, rows, best: Vec::new() }
}

/// Renders reports as a table. In the main layout the best score of each
/// dataset column is bold in markdown; ties are all marked.
pub fn format_report(reports: &[MetricReport], layout: Layout, format: TableFormat) -> String {
    if reports.is_empty() {
        return String::new();
    }
    match layout {
        Layout::Main => main_table(reports),
        Layout::Ablation => ablation_table(reports),
    }
    .render(format)
}

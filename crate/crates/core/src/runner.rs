//! Experiment orchestration: load, render, complete, parse, score, record.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use crate::datasets::{load_dataset, whitespace_tokens, DatasetDescriptor, DatasetName, Split};
use crate::error::{Error, Result};
use crate::llm::{prompt_digest, Client, CompletionRequest, Provider, DEFAULT_CONCURRENCY, DEFAULT_MAX_OUTPUT_TOKENS, DEFAULT_MODEL};
use crate::metrics;
use crate::parsing::{AliasTable, AnswerParser};
use crate::prompts::{render_prompt, select_exemplars, PromptStrategy, StrategyName, Triggers, DEFAULT_SHOTS};
use crate::report::MetricReport;
use crate::types::{PredictionRecord, RecordStatus, TaskInstance};

/// Prompt budget for few-shot prompts, in whitespace tokens: a 4096-token
/// context window minus the default output bound.
pub const DEFAULT_TOKEN_BUDGET: usize = 3072;

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub dataset: DatasetName,
    pub split: Split,
    pub data_dir: PathBuf,
    pub strategy: StrategyName,
    pub shots: usize,
    pub model_id: String,
    /// Evaluate only the first `limit` instances (by instance id).
    pub limit: Option<usize>,
    pub seed: u64,
    pub token_budget: usize,
    pub cache_dir: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub concurrency: usize,
    pub temperature: f64,
    pub max_output_tokens: u32,
    /// Split the few-shot exemplar pool is drawn from.
    pub pool_split: Split,
    pub triggers: Triggers,
    pub aliases: Option<PathBuf>,
    pub strict_keys: bool,
}

impl ExperimentConfig {
    pub fn new(dataset: DatasetName, data_dir: impl Into<PathBuf>, strategy: StrategyName) -> Self {
        ExperimentConfig {
            dataset,
            split: Split::Test,
            data_dir: data_dir.into(),
            strategy,
            shots: if strategy.is_few_shot() { DEFAULT_SHOTS } else { 0 },
            model_id: DEFAULT_MODEL.to_string(),
            limit: None,
            seed: 0,
            token_budget: DEFAULT_TOKEN_BUDGET,
            cache_dir: None,
            out: None,
            concurrency: DEFAULT_CONCURRENCY,
            temperature: 0.0,
            max_output_tokens: DEFAULT_MAX_OUTPUT_TOKENS,
            pool_split: Split::Train,
            triggers: Triggers::builtin(),
            aliases: None,
            strict_keys: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.limit == Some(0) {
            return Err(Error::Config("limit must be at least 1".into()));
        }
        if self.shots > 0 && !self.strategy.is_few_shot() {
            return Err(Error::Config(format!("{} is zero-shot; --shots must be 0", self.strategy)));
        }
        if self.concurrency == 0 {
            return Err(Error::Config("concurrency must be at least 1".into()));
        }
        if self.model_id.trim().is_empty() {
            return Err(Error::Config("model id is empty".into()));
        }
        CompletionRequest {
            model_id: self.model_id.clone(),
            prompt: String::new(),
            temperature: self.temperature,
            max_output_tokens: self.max_output_tokens,
        }
        .validate()
    }

    pub fn prompt_strategy(&self) -> PromptStrategy {
        PromptStrategy {
            shots: self.shots,
            ..PromptStrategy::with_triggers(self.strategy, &self.triggers)
        }
    }

    pub fn parser(&self) -> Result<AnswerParser> {
        let aliases = match &self.aliases {
            Some(p) => AliasTable::from_file(p)?,
            None => AliasTable::builtin(),
        };
        Ok(AnswerParser::new(aliases).strict(self.strict_keys))
    }
}

#[derive(Debug)]
pub struct ExperimentOutput {
    pub records: Vec<PredictionRecord>,
    pub report: MetricReport,
    /// Source records or dialogues dropped while loading.
    pub skipped: usize,
}

impl ExperimentOutput {
    pub fn provider_failures(&self) -> usize {
        self.records
            .iter()
            .filter(|r| matches!(r.status, RecordStatus::ProviderError(_)))
            .count()
    }

    pub fn all_provider_failures(&self) -> bool {
        !self.records.is_empty() && self.provider_failures() == self.records.len()
    }
}

fn load_instances(config: &ExperimentConfig, split: Split) -> Result<(Vec<TaskInstance>, usize)> {
    let descriptor = DatasetDescriptor::new(config.dataset, split);
    let dataset = load_dataset(&descriptor, &config.data_dir)?;
    let (mut instances, errors) = dataset.task_instances();
    for e in &errors {
        log::warn!("skipped dialogue: {e}");
    }
    instances.sort_by(|a, b| a.instance_id.cmp(&b.instance_id));
    Ok((instances, dataset.skip_count() + errors.len()))
}

/// Builds a record from a raw response.
pub fn score_response(
    parser: &AnswerParser,
    instance: &TaskInstance,
    base: RecordBase<'_>,
    raw_text: std::result::Result<String, String>,
) -> Result<PredictionRecord> {
    let mut record = PredictionRecord {
        instance_id: instance.instance_id.clone(),
        dataset: base.dataset.id().to_string(),
        task_kind: instance.task_kind,
        strategy_name: base.strategy.to_string(),
        model_id: base.model_id.to_string(),
        seed: base.seed,
        shots: base.shots,
        prompt_digest: base.prompt_digest,
        raw_text: String::new(),
        parsed: None,
        gold: instance.gold.clone(),
        correct: false,
        status: RecordStatus::Ok,
        unknown_keys: 0,
        answer_space: instance.answer_space.clone(),
    };
    match raw_text {
        Ok(text) => {
            record.raw_text = text;
            reparse(parser, &mut record)?;
        }
        Err(message) => record.status = RecordStatus::ProviderError(message),
    }
    Ok(record)
}

pub struct RecordBase<'a> {
    pub dataset: DatasetName,
    pub strategy: StrategyName,
    pub model_id: &'a str,
    pub seed: u64,
    pub shots: usize,
    pub prompt_digest: String,
}

fn reparse(parser: &AnswerParser, record: &mut PredictionRecord) -> Result<()> {
    let parsed = parser.parse_answer(&record.raw_text, record.task_kind, &record.answer_space);
    record.parsed = parsed.answer;
    record.unknown_keys = parsed.unknown_keys;
    record.status = if parsed.parse_failure { RecordStatus::ParseFailure } else { RecordStatus::Ok };
    // A parse failure scores as incorrect even if the fallback answer matches.
    record.correct = !parsed.parse_failure && record.score()?;
    Ok(())
}

/// Re-parses stored responses with `parser`; provider failures stay failed.
pub fn rescore(records: &[PredictionRecord], parser: &AnswerParser) -> Result<Vec<PredictionRecord>> {
    records
        .iter()
        .map(|r| {
            let mut r = r.clone();
            if !matches!(r.status, RecordStatus::ProviderError(_)) {
                reparse(parser, &mut r)?;
            }
            Ok(r)
        })
        .collect()
}

/// Runs one dataset x strategy x model experiment.
pub fn run_experiment<P: Provider>(config: &ExperimentConfig, client: &Client<P>) -> Result<ExperimentOutput> {
    config.validate()?;
    let parser = config.parser()?;
    let strategy = config.prompt_strategy();

    let (mut instances, mut skipped) = load_instances(config, config.split)?;
    if let Some(limit) = config.limit {
        instances.truncate(limit);
    }
    if instances.is_empty() {
        return Err(Error::load(&config.data_dir, format!("no {} instances in the {} split", config.dataset, config.split.as_str())));
    }
    let pool = if config.strategy.is_few_shot() && config.shots > 0 {
        let (pool, pool_skipped) = load_instances(config, config.pool_split)?;
        skipped += pool_skipped;
        pool
    } else {
        Vec::new()
    };

    let slots: Vec<Mutex<Option<Result<PredictionRecord>>>> = instances.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let workers = config.concurrency.min(instances.len()).max(1);
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(instance) = instances.get(i) else { break };
                let result = evaluate_one(config, client, &parser, &strategy, &pool, instance);
                *slots[i].lock().unwrap() = Some(result);
            });
        }
    });

    let mut records = Vec::with_capacity(instances.len());
    for slot in slots {
        records.push(slot.into_inner().unwrap().expect("every instance evaluated")?);
    }
    if let Some(out) = &config.out {
        write_records(out, &records)?;
    }
    let report = MetricReport::from_records(&records, &strategy.trigger_text)?;
    Ok(ExperimentOutput { records, report, skipped })
}

fn evaluate_one<P: Provider>(
    config: &ExperimentConfig,
    client: &Client<P>,
    parser: &AnswerParser,
    strategy: &PromptStrategy,
    pool: &[TaskInstance],
    instance: &TaskInstance,
) -> Result<PredictionRecord> {
    let exemplars = if strategy.name.is_few_shot() {
        select_exemplars(pool, instance, config.shots, config.token_budget, config.seed, whitespace_tokens, strategy)
    } else {
        Vec::new()
    };
    let prompt = render_prompt(strategy, instance, &exemplars)?;
    let request = CompletionRequest {
        model_id: config.model_id.clone(),
        prompt,
        temperature: config.temperature,
        max_output_tokens: config.max_output_tokens,
    };
    let raw = match client.complete(&request) {
        Ok(resp) => Ok(resp.text),
        Err(e @ (Error::Provider { .. } | Error::Protocol(_))) => {
            log::warn!("{}: {e}", instance.instance_id);
            Err(e.to_string())
        }
        Err(e) => return Err(e),
    };
    let base = RecordBase {
        dataset: config.dataset,
        strategy: config.strategy,
        model_id: &config.model_id,
        seed: config.seed,
        shots: config.shots,
        prompt_digest: prompt_digest(&request.prompt),
    };
    score_response(parser, instance, base, raw)
}

pub fn write_records(path: &Path, records: &[PredictionRecord]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let mut buf = Vec::new();
    for r in records {
        serde_json::to_writer(&mut buf, r)?;
        buf.push(b'\n');
    }
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(&buf).map_err(|e| Error::io(path, e))
}

pub fn read_records(path: &Path) -> Result<Vec<PredictionRecord>> {
    let file = fs::File::open(path).map_err(|e| Error::load(path, e.to_string()))?;
    let mut out = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::load(path, format!("line {}: {e}", n + 1)))?);
    }
    Ok(out)
}

/// Groups records by (dataset, strategy, model) in sorted key order.
pub fn group_records(records: Vec<PredictionRecord>) -> BTreeMap<(String, String, String), Vec<PredictionRecord>> {
    let mut groups: BTreeMap<_, Vec<_>> = BTreeMap::new();
    for r in records {
        groups
            .entry((r.dataset.clone(), r.strategy_name.clone(), r.model_id.clone()))
            .or_default()
            .push(r);
    }
    groups
}

/// Headline metric of a record batch; convenience for callers that only
/// want the number.
pub fn headline_score(records: &[PredictionRecord]) -> Result<num::BigRational> {
    let kind = records.first().ok_or(Error::Empty("headline_score"))?.task_kind;
    metrics::compute(metrics::metrics_for(kind)[0], records)
}

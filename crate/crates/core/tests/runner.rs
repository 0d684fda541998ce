mod common;

use std::collections::BTreeMap;

use common::{fixture, fixtures};
use dialex::datasets::{load_dataset, DatasetDescriptor};
use dialex::llm::{prompt_digest, Client, MockProvider, MockReply, RetryPolicy};
use dialex::parsing::render_gold;
use dialex::runner::{read_records, write_records};
use dialex::types::RecordStatus;
use dialex::{
    format_percent, render_prompt, rescore, run_experiment, AnswerParser, DatasetName, Error, ExperimentConfig,
    PromptStrategy, Split, StrategyName, TaskInstance,
};
use num::{BigRational, One};

fn instances(dataset: DatasetName) -> Vec<TaskInstance> {
    let loaded = load_dataset(&DatasetDescriptor::new(dataset, Split::Test), &fixture(dataset.id())).unwrap();
    let (instances, errors) = loaded.task_instances();
    assert!(errors.is_empty(), "{errors:?}");
    instances
}

/// Replies with the gold answer for every zero-shot prompt of `strategy`.
fn gold_script(dataset: DatasetName, strategy: StrategyName) -> BTreeMap<String, MockReply> {
    let strategy = PromptStrategy::new(strategy);
    instances(dataset)
        .iter()
        .map(|i| {
            let prompt = render_prompt(&strategy, i, &[]).unwrap();
            (prompt_digest(&prompt), MockReply::from(render_gold(&i.gold)))
        })
        .collect()
}

fn config(dataset: DatasetName, strategy: StrategyName) -> ExperimentConfig {
    ExperimentConfig::new(dataset, fixture(dataset.id()), strategy)
}

fn quick_client(provider: MockProvider) -> Client<MockProvider> {
    Client::new(provider).with_retry(RetryPolicy::immediate(3))
}

#[test]
fn gold_replies_score_perfectly_on_every_dataset() {
    for dataset in DatasetName::ALL {
        let client = quick_client(MockProvider::new(gold_script(dataset, StrategyName::Vanilla)));
        let out = run_experiment(&config(dataset, StrategyName::Vanilla), &client).unwrap();
        assert_eq!(out.report.score, BigRational::one(), "{dataset:?}");
        assert_eq!(out.report.metric, dialex::metrics::metrics_for(dataset.task_kind())[0]);
        assert_eq!(out.records.len(), instances(dataset).len());
        assert_eq!(client.provider_calls(), out.records.len());
        assert!(out.records.iter().all(|r| r.correct && r.status == RecordStatus::Ok));
    }
}

#[test]
fn one_time_swap_in_three_gives_two_thirds() {
    let mut script = gold_script(DatasetName::Multiwoz21, StrategyName::Vanilla);
    let first = &instances(DatasetName::Multiwoz21)[..3];
    let target = first.iter().find(|i| i.instance_id == "SNG0001:002").unwrap();
    let prompt = render_prompt(&PromptStrategy::new(StrategyName::Vanilla), target, &[]).unwrap();
    script.insert(
        prompt_digest(&prompt),
        "taxi-destination: pizza hut fen ditton, taxi-departure: saint john's college, taxi-leaveat: 12:45".into(),
    );
    let mut cfg = config(DatasetName::Multiwoz21, StrategyName::Vanilla);
    cfg.limit = Some(3);
    let out = run_experiment(&cfg, &quick_client(MockProvider::new(script))).unwrap();
    assert_eq!(out.records.len(), 3);
    assert_eq!(format_percent(&out.report.score), "66.67");
    let wrong: Vec<_> = out.records.iter().filter(|r| !r.correct).map(|r| r.instance_id.as_str()).collect();
    assert_eq!(wrong, ["SNG0001:002"]);
}

#[test]
fn fixture_mock_script_runs_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let mut scores = Vec::new();
    let mut files = Vec::new();
    for (i, concurrency) in [1, 4].into_iter().enumerate() {
        let mut cfg = config(DatasetName::Multiwoz21, StrategyName::SelfExplanation);
        cfg.concurrency = concurrency;
        cfg.out = Some(dir.path().join(format!("run{i}.jsonl")));
        let provider = MockProvider::from_file(&fixture("mock/multiwoz21_test.json")).unwrap();
        let out = run_experiment(&cfg, &quick_client(provider)).unwrap();
        scores.push(format_percent(&out.report.score));
        files.push(std::fs::read(cfg.out.as_ref().unwrap()).unwrap());
    }
    assert_eq!(scores, ["66.67", "66.67"]);
    assert_eq!(files[0], files[1]);
}

#[test]
fn records_stay_in_instance_order() {
    let mut cfg = config(DatasetName::Multiwoz21, StrategyName::Vanilla);
    cfg.concurrency = 8;
    let client = quick_client(MockProvider::new(gold_script(DatasetName::Multiwoz21, StrategyName::Vanilla)));
    let ids: Vec<_> = run_experiment(&cfg, &client).unwrap().records.into_iter().map(|r| r.instance_id).collect();
    let mut sorted = ids.clone();
    sorted.sort();
    assert_eq!(ids, sorted);
}

#[test]
fn provider_failures_become_flagged_records() {
    let mut script = gold_script(DatasetName::Multiwoz21, StrategyName::Vanilla);
    let target = &instances(DatasetName::Multiwoz21)[0];
    let prompt = render_prompt(&PromptStrategy::new(StrategyName::Vanilla), target, &[]).unwrap();
    script.insert(prompt_digest(&prompt), serde_json::from_str(r#"{"fail": "transient"}"#).unwrap());
    let client = quick_client(MockProvider::new(script));
    let out = run_experiment(&config(DatasetName::Multiwoz21, StrategyName::Vanilla), &client).unwrap();
    assert_eq!(out.provider_failures(), 1);
    assert!(!out.all_provider_failures());
    let failed = &out.records[0];
    assert!(matches!(failed.status, RecordStatus::ProviderError(_)));
    assert!(!failed.correct);
    assert_eq!(out.report.provider_failures, 1);
    assert_eq!(format_percent(&out.report.score), "83.33");
    // 4 attempts for the failing instance, 1 for each of the other 5.
    assert_eq!(client.provider_calls(), 9);
}

#[test]
fn every_instance_failing_is_detected() {
    let client = quick_client(MockProvider::default());
    let out = run_experiment(&config(DatasetName::Meld, StrategyName::Vanilla), &client).unwrap();
    assert!(out.all_provider_failures());
    assert_eq!(out.report.score, BigRational::from_integer(0.into()));
}

#[test]
fn config_errors_precede_provider_calls() {
    let bad = |f: &dyn Fn(&mut ExperimentConfig)| {
        let mut cfg = config(DatasetName::Multiwoz21, StrategyName::Vanilla);
        f(&mut cfg);
        let client = quick_client(MockProvider::default());
        let err = run_experiment(&cfg, &client).unwrap_err();
        assert_eq!(client.provider_calls(), 0);
        err
    };
    assert!(matches!(bad(&|c| c.limit = Some(0)), Error::Config(_)));
    assert!(matches!(bad(&|c| c.shots = 2), Error::Config(_)));
    assert!(matches!(bad(&|c| c.concurrency = 0), Error::Config(_)));
    assert!(matches!(bad(&|c| c.model_id = " ".into()), Error::Config(_)));
    assert!(matches!(bad(&|c| c.temperature = f64::NAN), Error::Config(_)));
    let missing = bad(&|c| c.data_dir = fixtures().join("does-not-exist"));
    assert_eq!(missing.exit_code(), 2);
}

#[test]
fn few_shot_prompts_carry_demonstrations() {
    let mut cfg = config(DatasetName::Multiwoz21, StrategyName::VanillaFewshot);
    cfg.shots = 2;
    let client = quick_client(MockProvider::new(BTreeMap::from([(
        "Question:".to_string(),
        MockReply::from("taxi-leaveat: 10:00"),
    )])));
    let out = run_experiment(&cfg, &client).unwrap();
    assert!(out.records.iter().all(|r| r.shots == 2 && r.strategy_name == "vanilla_fewshot"));
    assert_eq!(out.report.shots, 2);
    assert_eq!(out.report.title(), "Vanilla + 2-shots");
    let zero_shot = PromptStrategy::new(StrategyName::Vanilla);
    for (record, instance) in out.records.iter().zip(instances(DatasetName::Multiwoz21)) {
        let bare = render_prompt(&zero_shot, &instance, &[]).unwrap();
        assert_ne!(record.prompt_digest, prompt_digest(&bare));
    }
}

#[test]
fn records_round_trip_and_rescore() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("records.jsonl");
    let provider = MockProvider::from_file(&fixture("mock/multiwoz21_test.json")).unwrap();
    let out = run_experiment(&config(DatasetName::Multiwoz21, StrategyName::Vanilla), &quick_client(provider)).unwrap();
    write_records(&path, &out.records).unwrap();
    let back = read_records(&path).unwrap();
    assert_eq!(back, out.records);

    let same = rescore(&back, &AnswerParser::default()).unwrap();
    assert_eq!(same, back);
    // Strict key matching rejects the near-miss key "train departure".
    let strict = rescore(&back, &AnswerParser::default().strict(true)).unwrap();
    let lost: Vec<_> = back
        .iter()
        .zip(&strict)
        .filter(|(a, b)| a.correct && !b.correct)
        .map(|(a, _)| a.instance_id.as_str())
        .collect();
    assert_eq!(lost, ["SNG0002:002"]);
}

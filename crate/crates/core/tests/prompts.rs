mod common;

use std::collections::BTreeSet;

use dialex::datasets::whitespace_tokens;
use dialex::types::{Answer, Utterance};
use dialex::{
    load_dataset, render_prompt, select_exemplars, BeliefState, DatasetDescriptor, DatasetName, Error, Exemplar,
    PromptStrategy, Speaker, Split, StrategyName, TaskInstance, TaskKind, Triggers,
};
use proptest::prelude::*;

use common::fixture;

fn fixture_instances(split: Split) -> Vec<TaskInstance> {
    let d = load_dataset(&DatasetDescriptor::new(DatasetName::Multiwoz21, split), &fixture("multiwoz21")).unwrap();
    d.task_instances().0
}

fn synthetic(id: usize, domains: &[&str], words: usize) -> TaskInstance {
    TaskInstance {
        instance_id: format!("x{id:03}:000"),
        dialogue_id: format!("x{id:03}"),
        task_kind: TaskKind::Dst,
        context: vec![Utterance::new(Speaker::User, 0, vec!["word"; words.max(1)].join(" "))],
        question: "state?".into(),
        gold: Answer::BeliefState(BeliefState::new()),
        domains: domains.iter().map(|d| d.to_string()).collect::<BTreeSet<_>>(),
        answer_space: vec![],
    }
}

#[test]
fn prompt_layout() {
    let test = fixture_instances(Split::Test);
    let p = render_prompt(&PromptStrategy::new(StrategyName::ZeroShotCot), &test[0], &[]).unwrap();
    let lines: Vec<&str> = p.lines().collect();
    assert_eq!(lines[0], "Context:");
    assert_eq!(lines[1], "USER: I need a taxi to pizza hut fen ditton.");
    assert!(lines[2].starts_with("Question: "));
    assert_eq!(*lines.last().unwrap(), "Answer: Let's think step by step");
    assert!(!p.ends_with('\n'));
}

#[test]
fn zero_shot_strategies_reject_exemplars() {
    let test = fixture_instances(Split::Test);
    let ex = Exemplar::new(fixture_instances(Split::Train)[0].clone());
    for name in StrategyName::ALL.into_iter().filter(|n| !n.is_few_shot()) {
        let err = render_prompt(&PromptStrategy::new(name), &test[0], std::slice::from_ref(&ex)).unwrap_err();
        assert!(matches!(err, Error::Contract(_)), "{name}");
    }
}

#[test]
fn exemplars_precede_the_instance() {
    let test = fixture_instances(Split::Test);
    let pool = fixture_instances(Split::Train);
    let strategy = PromptStrategy::new(StrategyName::VanillaFewshot);
    let target = test.iter().find(|i| i.instance_id == "SNG0001:002").unwrap();
    let ex = select_exemplars(&pool, target, 4, 100_000, 1, whitespace_tokens, &strategy);
    assert!(!ex.is_empty());
    let p = render_prompt(&strategy, target, &ex).unwrap();
    let blocks: Vec<&str> = p.split("\n\nContext:\n").collect();
    assert_eq!(blocks.len(), ex.len() + 1);
    assert!(blocks.last().unwrap().ends_with("Answer: Answer the questions based on the above dialogue"));
    for (block, e) in blocks.iter().zip(&ex) {
        assert!(block.ends_with(&format!("Answer: {}", e.gold_rendered)));
    }
}

#[test]
fn budget_drops_exemplars_from_the_tail() {
    let pool: Vec<_> = (0..10).map(|i| synthetic(i, &["hotel"], 50)).collect();
    let target = synthetic(99, &["hotel"], 5);
    let strategy = PromptStrategy::new(StrategyName::VanillaFewshot);
    let all = select_exemplars(&pool, &target, 4, 100_000, 3, whitespace_tokens, &strategy);
    assert_eq!(all.len(), 4);
    let some = select_exemplars(&pool, &target, 4, 130, 3, whitespace_tokens, &strategy);
    assert!(some.len() < 4);
    assert_eq!(some[..], all[..some.len()]);
    let prompt = render_prompt(&strategy, &target, &some).unwrap();
    assert!(whitespace_tokens(&prompt) <= 130);
    assert!(select_exemplars(&pool, &target, 4, 1, 3, whitespace_tokens, &strategy).is_empty());
}

#[test]
fn trigger_overrides() {
    let t = Triggers::from_toml_str("summary = \"Summarize first.\"").unwrap();
    assert_eq!(t.get(StrategyName::Summary), "Summarize first.");
    assert_eq!(t.get(StrategyName::Vanilla), Triggers::builtin().get(StrategyName::Vanilla));
    assert!(Triggers::from_toml_str("bogus = \"x\"").is_err());
    assert!(Triggers::from_toml_str("summary = \"a\\nb\"").is_err());
}

#[test]
fn strategy_names_and_titles() {
    for name in StrategyName::ALL {
        assert_eq!(name.id().parse::<StrategyName>().unwrap(), name);
    }
    assert_eq!("cot".parse::<StrategyName>().unwrap(), StrategyName::ZeroShotCot);
    assert_eq!(StrategyName::VanillaFewshot.title(4), "Vanilla + 4-shots");
    assert!("nope".parse::<StrategyName>().is_err());
}

proptest! {
    #[test]
    fn selection_invariants(
        domains in proptest::collection::vec(proptest::sample::subsequence(vec!["hotel", "taxi", "train", "bus"], 1..=2), 2..30),
        pick in any::<proptest::sample::Index>(),
        seed in any::<u64>(),
        k in 0usize..6,
    ) {
        let pool: Vec<_> = domains.iter().enumerate().map(|(i, d)| synthetic(i, d, 3)).collect();
        let target = &pool[pick.index(pool.len())];
        let strategy = PromptStrategy::new(StrategyName::VanillaFewshot);
        let chosen = select_exemplars(&pool, target, k, 100_000, seed, whitespace_tokens, &strategy);
        let eligible = pool
            .iter()
            .filter(|p| p.dialogue_id != target.dialogue_id && p.domains.iter().any(|d| target.domains.contains(d)))
            .count();
        prop_assert_eq!(chosen.len(), k.min(eligible));
        let ids: BTreeSet<_> = chosen.iter().map(|e| e.instance.instance_id.clone()).collect();
        prop_assert_eq!(ids.len(), chosen.len());
        for e in &chosen {
            prop_assert_ne!(&e.instance.instance_id, &target.instance_id);
            prop_assert!(e.instance.domains.iter().any(|d| target.domains.contains(d)));
        }
        prop_assert_eq!(select_exemplars(&pool, target, k, 100_000, seed, whitespace_tokens, &strategy), chosen);
    }
}

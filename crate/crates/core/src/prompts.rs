//! Prompt strategies and rendering.
//!
//! Every prompt has the same skeleton: the dialogue under `Context:`, the
//! task under `Question:`, and the strategy's trigger sentence after
//! `Answer:`. Few-shot prompts prepend complete demonstration blocks.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::parsing::render_gold;
use crate::types::{TaskInstance, Utterance};

const DEFAULT_TRIGGERS: &str = include_str!("../data/triggers.toml");

/// Number of demonstrations used by the few-shot baseline.
pub const DEFAULT_SHOTS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StrategyName {
    Vanilla,
    VanillaFewshot,
    ZeroShotCot,
    PlanAndSolve,
    Understand,
    Summary,
    SelfExplanation,
}

impl StrategyName {
    pub const ALL: [StrategyName; 7] = [
        StrategyName::Vanilla,
        StrategyName::VanillaFewshot,
        StrategyName::ZeroShotCot,
        StrategyName::PlanAndSolve,
        StrategyName::Understand,
        StrategyName::Summary,
        StrategyName::SelfExplanation,
    ];

    pub fn id(self) -> &'static str {
        match self {
            StrategyName::Vanilla => "vanilla",
            StrategyName::VanillaFewshot => "vanilla_fewshot",
            StrategyName::ZeroShotCot => "zero_shot_cot",
            StrategyName::PlanAndSolve => "plan_and_solve",
            StrategyName::Understand => "understand",
            StrategyName::Summary => "summary",
            StrategyName::SelfExplanation => "self_explanation",
        }
    }

    /// Row label in result tables.
    pub fn title(self, shots: usize) -> String {
        match self {
            StrategyName::Vanilla => "Vanilla".into(),
            StrategyName::VanillaFewshot => format!("Vanilla + {shots}-shots"),
            StrategyName::ZeroShotCot => "Chain-of-Thought".into(),
            StrategyName::PlanAndSolve => "Plan-and-Solve".into(),
            StrategyName::Understand => "Understand".into(),
            StrategyName::Summary => "Summary".into(),
            StrategyName::SelfExplanation => "Self-Explanation".into(),
        }
    }

    /// Short method name used in the trigger-sentence ablation table.
    pub fn ablation_title(self) -> &'static str {
        match self {
            StrategyName::SelfExplanation => "Explanation",
            StrategyName::Vanilla | StrategyName::VanillaFewshot => "Vanilla",
            StrategyName::ZeroShotCot => "Chain-of-Thought",
            StrategyName::PlanAndSolve => "Plan-and-Solve",
            StrategyName::Understand => "Understand",
            StrategyName::Summary => "Summary",
        }
    }

    pub fn is_few_shot(self) -> bool {
        self == StrategyName::VanillaFewshot
    }
}

impl fmt::Display for StrategyName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for StrategyName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.to_lowercase().replace(['-', ' '], "_");
        let alias = match norm.as_str() {
            "cot" | "chain_of_thought" => "zero_shot_cot",
            "fewshot" | "few_shot" | "vanilla_few_shot" => "vanilla_fewshot",
            "explanation" | "self_explain" => "self_explanation",
            other => other,
        };
        StrategyName::ALL
            .into_iter()
            .find(|n| n.id() == alias)
            .ok_or_else(|| Error::Config(format!("unknown strategy {s:?}")))
    }
}

/// Trigger sentence per strategy.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Triggers(BTreeMap<StrategyName, String>);

impl Triggers {
    pub fn builtin() -> Self {
        let mut t = Triggers(BTreeMap::new());
        t.merge_toml(DEFAULT_TRIGGERS).expect("shipped trigger file is valid");
        debug_assert_eq!(t.0.len(), StrategyName::ALL.len());
        t
    }

    /// Built-in triggers overridden by the keys present in `text`.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let mut t = Self::builtin();
        t.merge_toml(text)?;
        Ok(t)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    fn merge_toml(&mut self, text: &str) -> Result<()> {
        let table: BTreeMap<String, String> =
            toml::from_str(text).map_err(|e| Error::Config(format!("trigger file: {e}")))?;
        for (key, value) in table {
            let name: StrategyName = key.parse()?;
            if value.contains('\n') {
                return Err(Error::Config(format!("trigger for {key} must be a single line")));
            }
            self.0.insert(name, value);
        }
        Ok(())
    }

    pub fn get(&self, name: StrategyName) -> &str {
        &self.0[&name]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptStrategy {
    pub name: StrategyName,
    pub trigger_text: String,
    pub shots: usize,
}

impl PromptStrategy {
    pub fn new(name: StrategyName) -> Self {
        Self::with_triggers(name, &Triggers::builtin())
    }

    pub fn with_triggers(name: StrategyName, triggers: &Triggers) -> Self {
        PromptStrategy {
            name,
            trigger_text: triggers.get(name).to_string(),
            shots: if name.is_few_shot() { DEFAULT_SHOTS } else { 0 },
        }
    }

    pub fn title(&self) -> String {
        self.name.title(self.shots)
    }
}

/// A demonstration: an instance plus its gold answer in parser format.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Exemplar {
    pub instance: TaskInstance,
    pub gold_rendered: String,
}

impl Exemplar {
    pub fn new(instance: TaskInstance) -> Self {
        let gold_rendered = render_gold(&instance.gold);
        Exemplar { instance, gold_rendered }
    }
}

fn render_block(out: &mut String, context: &[Utterance], question: &str, answer: &str) {
    out.push_str("Context:\n");
    for u in context {
        out.push_str(u.display_speaker());
        out.push_str(": ");
        out.push_str(&u.text);
        out.push('\n');
    }
    out.push_str("Question: ");
    out.push_str(question);
    out.push_str("\nAnswer: ");
    out.push_str(answer);
}

/// Renders the final prompt. Exemplars are only allowed for few-shot
/// strategies.
pub fn render_prompt(strategy: &PromptStrategy, instance: &TaskInstance, exemplars: &[Exemplar]) -> Result<String> {
    if !exemplars.is_empty() && !strategy.name.is_few_shot() {
        return Err(Error::Contract(format!(
            "{} is zero-shot but {} exemplars were supplied",
            strategy.name,
            exemplars.len()
        )));
    }
    let mut out = String::new();
    for ex in exemplars {
        render_block(&mut out, &ex.instance.context, &ex.instance.question, &ex.gold_rendered);
        out.push_str("\n\n");
    }
    render_block(&mut out, &instance.context, &instance.question, &strategy.trigger_text);
    Ok(out)
}

fn instance_seed(seed: u64, instance_id: &str) -> u64 {
    let digest = Sha256::digest(instance_id.as_bytes());
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    seed ^ u64::from_le_bytes(bytes)
}

/// Draws up to `k` same-domain demonstrations for `instance`, then drops
/// them from the tail until the rendered prompt fits `token_budget`.
///
/// The draw is seeded by `seed` and the instance id, so a fixed seed gives
/// a fixed selection. Pool items from the instance's own dialogue are never
/// drawn.
pub fn select_exemplars(
    pool: &[TaskInstance],
    instance: &TaskInstance,
    k: usize,
    token_budget: usize,
    seed: u64,
    token_counter: impl Fn(&str) -> usize,
    strategy: &PromptStrategy,
) -> Vec<Exemplar> {
    let candidates: Vec<&TaskInstance> = pool
        .iter()
        .filter(|p| {
            p.instance_id != instance.instance_id
                && p.dialogue_id != instance.dialogue_id
                && p.task_kind == instance.task_kind
                && p.domains.iter().any(|d| instance.domains.contains(d))
        })
        .collect();
    let take = k.min(candidates.len());
    if take == 0 {
        return Vec::new();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(instance_seed(seed, &instance.instance_id));
    let mut chosen: Vec<Exemplar> = sample(&mut rng, candidates.len(), take)
        .into_iter()
        .map(|i| Exemplar::new(candidates[i].clone()))
        .collect();

    let few_shot = PromptStrategy {
        name: StrategyName::VanillaFewshot,
        ..strategy.clone()
    };
    while !chosen.is_empty() {
        let prompt = render_prompt(&few_shot, instance, &chosen).expect("few-shot strategy accepts exemplars");
        if token_counter(&prompt) <= token_budget {
            break;
        }
        chosen.pop();
    }
    chosen
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;

    use super::*;
    use crate::datasets::whitespace_tokens;
    use crate::types::{Answer, BeliefState, Speaker, TaskKind};

    fn instance(id: &str, domain: &str) -> TaskInstance {
        TaskInstance {
            instance_id: id.into(),
            dialogue_id: id.into(),
            task_kind: TaskKind::Dst,
            context: vec![Utterance::new(Speaker::User, 0, format!("I need a {domain} please"))],
            question: "What is the state?".into(),
            gold: Answer::BeliefState(BeliefState::new()),
            domains: BTreeSet::from([domain.to_string()]),
            answer_space: vec![],
        }
    }

    #[test]
    fn vanilla_prompt_layout() {
        let p = render_prompt(&PromptStrategy::new(StrategyName::Vanilla), &instance("a", "hotel"), &[]).unwrap();
        assert_eq!(
            p,
            "Context:\nUSER: I need a hotel please\nQuestion: What is the state?\nAnswer: Answer the questions based on the above dialogue"
        );
    }

    #[test]
    fn cot_prompt_ends_with_trigger() {
        let p = render_prompt(&PromptStrategy::new(StrategyName::ZeroShotCot), &instance("a", "hotel"), &[]).unwrap();
        assert!(p.ends_with("Answer: Let's think step by step"));
        let p = render_prompt(&PromptStrategy::new(StrategyName::SelfExplanation), &instance("a", "hotel"), &[]).unwrap();
        assert!(p.lines().last().unwrap().contains("give every utterance an explanation"));
    }

    #[test]
    fn zero_shot_rejects_exemplars() {
        let ex = Exemplar::new(instance("b", "hotel"));
        let err = render_prompt(&PromptStrategy::new(StrategyName::Summary), &instance("a", "hotel"), &[ex]);
        assert!(matches!(err, Err(Error::Contract(_))));
    }

    #[test]
    fn few_shot_blocks_precede_instance() {
        let ex = Exemplar::new(instance("b", "hotel"));
        let p = render_prompt(&PromptStrategy::new(StrategyName::VanillaFewshot), &instance("a", "hotel"), &[ex]).unwrap();
        let blocks: Vec<&str> = p.split("\n\n").collect();
        assert_eq!(blocks.len(), 2);
        assert!(blocks[0].ends_with("Answer: none"));
    }

    #[test]
    fn selector_filters_domain_and_respects_budget() {
        let mut pool: Vec<_> = (0..10).map(|i| instance(&format!("h{i}"), "hotel")).collect();
        pool.extend((0..10).map(|i| instance(&format!("t{i}"), "taxi")));
        let target = instance("h0", "hotel");
        let fs = PromptStrategy::new(StrategyName::VanillaFewshot);
        let got = select_exemplars(&pool, &target, 4, usize::MAX, 7, whitespace_tokens, &fs);
        assert_eq!(got.len(), 4);
        assert!(got.iter().all(|e| e.instance.domains.contains("hotel") && e.instance.instance_id != "h0"));
        let again = select_exemplars(&pool, &target, 4, usize::MAX, 7, whitespace_tokens, &fs);
        assert_eq!(got, again);

        let alone = render_prompt(&fs, &target, &[]).unwrap();
        let budget = whitespace_tokens(&alone) + 20;
        let trimmed = select_exemplars(&pool, &target, 4, budget, 7, whitespace_tokens, &fs);
        assert!(trimmed.len() < 4);
        assert_eq!(trimmed[..], got[..trimmed.len()]);
    }

    #[test]
    fn selector_returns_nothing_without_same_domain_items() {
        let pool: Vec<_> = (0..5).map(|i| instance(&format!("t{i}"), "taxi")).collect();
        let fs = PromptStrategy::new(StrategyName::VanillaFewshot);
        assert!(select_exemplars(&pool, &instance("x", "hotel"), 4, usize::MAX, 1, whitespace_tokens, &fs).is_empty());
    }

    #[test]
    fn trigger_overrides() {
        let t = Triggers::from_toml_str("summary = \"Summarize first.\"").unwrap();
        assert_eq!(t.get(StrategyName::Summary), "Summarize first.");
        assert_eq!(t.get(StrategyName::Vanilla), "Answer the questions based on the above dialogue");
        assert!(Triggers::from_toml_str("bogus = \"x\"").is_err());
        assert!(Triggers::from_toml_str("summary = \"a\\nb\"").is_err());
    }

    #[test]
    fn strategy_names_round_trip() {
        for n in StrategyName::ALL {
            assert_eq!(n.id().parse::<StrategyName>().unwrap(), n);
        }
        assert_eq!(PromptStrategy::new(StrategyName::VanillaFewshot).shots, 4);
        assert_eq!(PromptStrategy::new(StrategyName::Vanilla).shots, 0);
    }
}

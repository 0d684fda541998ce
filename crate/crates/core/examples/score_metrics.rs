//! Computes the three metrics exactly and prints them as percentages.
//!
//! ```text
//! cargo run --example score_metrics
//! ```

use dialex::metrics::weighted_f1_labels;
use dialex::{accuracy, format_percent, joint_goal_accuracy, Answer, BeliefState, PredictionRecord, RecordStatus, TaskKind};

fn record(id: &str, kind: TaskKind, gold: Answer, parsed: Answer) -> PredictionRecord {
    let mut r = PredictionRecord {
        instance_id: id.into(),
        dataset: "example".into(),
        task_kind: kind,
        strategy_name: "vanilla".into(),
        model_id: "example".into(),
        seed: 0,
        shots: 0,
        prompt_digest: String::new(),
        raw_text: String::new(),
        parsed: Some(parsed),
        gold,
        correct: false,
        status: RecordStatus::Ok,
        unknown_keys: 0,
        answer_space: vec!["hotel-area".into(), "hotel-day".into()],
    };
    r.correct = r.score().expect("answer kinds match");
    r
}

fn main() -> dialex::Result<()> {
    let gold: BeliefState = [("hotel-area", "east"), ("hotel-day", "monday")].into_iter().collect();
    let partial: BeliefState = [("hotel-area", "east")].into_iter().collect();
    let dst = [
        record("1", TaskKind::Dst, Answer::BeliefState(gold.clone()), Answer::BeliefState(gold.clone())),
        record("2", TaskKind::Dst, Answer::BeliefState(gold.clone()), Answer::BeliefState(partial)),
        record("3", TaskKind::Dst, Answer::BeliefState(gold.clone()), Answer::BeliefState(gold)),
    ];
    let jga = joint_goal_accuracy(&dst)?;
    println!("JGA {jga} = {}", format_percent(&jga));

    let emotion = |g: &str, p: &str| record(g, TaskKind::Erc, Answer::Emotion(g.into()), Answer::Emotion(p.into()));
    let erc = [emotion("joy", "joy"), emotion("anger", "joy"), emotion("neutral", "neutral")];
    let acc = accuracy(&erc)?;
    println!("accuracy {acc} = {}", format_percent(&acc));

    let labels: Vec<String> = ["a", "b", "c"].map(String::from).to_vec();
    let pairs: Vec<(String, Option<String>)> = [("a", Some("a")), ("a", Some("b")), ("b", Some("b")), ("c", None)]
        .into_iter()
        .map(|(g, p)| (g.to_string(), p.map(String::from)))
        .collect();
    let f1 = weighted_f1_labels(&pairs, &labels)?;
    println!("weighted F1 {f1} = {}", format_percent(&f1));
    Ok(())
}

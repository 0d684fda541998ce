//! Runs the answer parser over typical model outputs.
//!
//! ```text
//! cargo run --example parse_answers
//! ```

use dialex::types::TaskKind;
use dialex::AnswerParser;

fn main() {
    let parser = AnswerParser::default();
    let slots: Vec<String> = ["taxi-leaveat", "taxi-arriveby", "taxi-destination", "train-day", "train-departure"]
        .map(String::from)
        .to_vec();
    let dst = [
        "taxi-arriveby: 12.45, taxi-destination: Pizza Hut Fen Ditton",
        "The user explains the trip.\nAnswer: train-day: Sunday; train departure: Cambridge",
        "1. taxi-leaveat = quarter past 5\n2. train-day: none",
        "I am not sure what the user wants.",
    ];
    for raw in dst {
        let p = parser.parse_answer(raw, TaskKind::Dst, &slots);
        println!("{raw:?}\n  -> {:?} (parse failure: {}, unknown keys: {})", p.answer, p.parse_failure, p.unknown_keys);
    }

    let emotions: Vec<String> = ["anger", "joy", "neutral", "surprise"].map(String::from).to_vec();
    for raw in ["The speaker sounds Surprised.\nAnswer: surprise", "joy or anger", "calm"] {
        let p = parser.parse_answer(raw, TaskKind::Erc, &emotions);
        println!("{raw:?}\n  -> {:?}", p.answer);
    }

    let strict = AnswerParser::default().strict(true);
    let p = strict.parse_answer("train departure: cambridge", TaskKind::Dst, &slots);
    println!("strict keys: {:?} (unknown keys: {})", p.answer, p.unknown_keys);
}

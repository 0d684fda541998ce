//! Error taxonomy for belief-state disagreements between two runs.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::parsing::is_time_slot;
use crate::types::{split_slot_key, Answer, BeliefState, PredictionRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ErrorType {
    /// A time value attached to the wrong time slot of the same domain.
    TimeInvolved,
    /// Gold slots left out, nothing spurious added.
    MissingInfo,
    /// Extra slots beyond gold, such as system-offered information.
    TaskMisunderstanding,
    Other,
}

impl ErrorType {
    pub const ALL: [ErrorType; 4] = [
        ErrorType::TimeInvolved,
        ErrorType::MissingInfo,
        ErrorType::TaskMisunderstanding,
        ErrorType::Other,
    ];

    pub fn title(self) -> &'static str {
        match self {
            ErrorType::TimeInvolved => "Time involved",
            ErrorType::MissingInfo => "Missing info.",
            ErrorType::TaskMisunderstanding => "Task misunderstanding",
            ErrorType::Other => "Other",
        }
    }
}

impl fmt::Display for ErrorType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.title())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorCase {
    pub instance_id: String,
    pub error_type: ErrorType,
    pub baseline_answer: Option<Answer>,
    pub candidate_answer: Option<Answer>,
    pub gold: Answer,
}

/// Classifies a wrong belief state against gold. Rules are tried in order:
/// time confusion, missing slots, spurious slots, anything else.
pub fn classify_error(gold: &BeliefState, wrong: &BeliefState) -> Result<ErrorType> {
    if gold == wrong {
        return Err(Error::Contract("classify_error needs a wrong state that differs from gold".into()));
    }
    let time_swap = gold.iter().filter(|(k, _)| is_time_slot(k)).any(|(gk, gv)| {
        wrong.iter().filter(|(k, _)| is_time_slot(k)).any(|(wk, wv)| {
            gk != wk && gv == wv && split_slot_key(gk).map(|s| s.0) == split_slot_key(wk).map(|s| s.0)
        })
    });
    if time_swap {
        return Ok(ErrorType::TimeInvolved);
    }
    let gold_keys: BTreeSet<&str> = gold.keys().collect();
    let wrong_keys: BTreeSet<&str> = wrong.keys().collect();
    if !gold_keys.is_subset(&wrong_keys) && wrong.is_subset_of(gold) {
        return Ok(ErrorType::MissingInfo);
    }
    if gold.is_subset_of(wrong) {
        return Ok(ErrorType::TaskMisunderstanding);
    }
    Ok(ErrorType::Other)
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Comparison {
    /// Instances the candidate got right and the baseline got wrong,
    /// classified by the baseline's answer.
    pub won_by_b: Vec<ErrorCase>,
    /// The converse, classified by the candidate's answer.
    pub won_by_a: Vec<ErrorCase>,
    pub counts_b: BTreeMap<ErrorType, usize>,
    pub counts_a: BTreeMap<ErrorType, usize>,
}

fn classify_record(wrong: &PredictionRecord) -> ErrorType {
    match (wrong.parsed.as_ref().and_then(Answer::as_belief_state), wrong.gold.as_belief_state()) {
        (Some(w), Some(g)) => classify_error(g, w).unwrap_or(ErrorType::Other),
        _ => ErrorType::Other,
    }
}

/// Pairs two runs over the same instances and classifies every instance
/// that exactly one of them answered correctly.
pub fn compare_runs(records_a: &[PredictionRecord], records_b: &[PredictionRecord]) -> Result<Comparison> {
    let a: BTreeMap<&str, &PredictionRecord> = records_a.iter().map(|r| (r.instance_id.as_str(), r)).collect();
    let b: BTreeMap<&str, &PredictionRecord> = records_b.iter().map(|r| (r.instance_id.as_str(), r)).collect();
    let only_a: Vec<String> = a.keys().filter(|k| !b.contains_key(*k)).map(|k| k.to_string()).collect();
    let only_b: Vec<String> = b.keys().filter(|k| !a.contains_key(*k)).map(|k| k.to_string()).collect();
    if !only_a.is_empty() || !only_b.is_empty() {
        return Err(Error::InstanceMismatch { only_a, only_b });
    }
    let mut out = Comparison::default();
    for (id, ra) in &a {
        let rb = b[id];
        let case = |wrong: &PredictionRecord| ErrorCase {
            instance_id: id.to_string(),
            error_type: classify_record(wrong),
            baseline_answer: ra.parsed.clone(),
            candidate_answer: rb.parsed.clone(),
            gold: ra.gold.clone(),
        };
        match (ra.correct, rb.correct) {
            (false, true) => {
                let c = case(ra);
                *out.counts_b.entry(c.error_type).or_default() += 1;
                out.won_by_b.push(c);
            }
            (true, false) => {
                let c = case(rb);
                *out.counts_a.entry(c.error_type).or_default() += 1;
                out.won_by_a.push(c);
            }
            _ => {}
        }
    }
    Ok(out)
}

impl Comparison {
    /// Markdown table of case counts per error type.
    pub fn summary_markdown(&self) -> String {
        let mut out = String::from("| Error type | Won by candidate | Won by baseline |\n| --- | --- | --- |\n");
        for t in ErrorType::ALL {
            let b = self.counts_b.get(&t).copied().unwrap_or(0);
            let a = self.counts_a.get(&t).copied().unwrap_or(0);
            out.push_str(&format!("| {t} | {b} | {a} |\n"));
        }
        out.push_str(&format!("| Total | {} | {} |\n", self.won_by_b.len(), self.won_by_a.len()));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bs(pairs: &[(&str, &str)]) -> BeliefState {
        pairs.iter().copied().collect()
    }

    #[test]
    fn table_cases() {
        assert_eq!(
            classify_error(&bs(&[("taxi-arriveby", "12:45")]), &bs(&[("taxi-leaveat", "12:45")])).unwrap(),
            ErrorType::TimeInvolved
        );
        assert_eq!(
            classify_error(
                &bs(&[("train-departure", "cambridge"), ("train-day", "sunday")]),
                &bs(&[("train-day", "sunday")])
            )
            .unwrap(),
            ErrorType::MissingInfo
        );
        assert_eq!(
            classify_error(
                &bs(&[("attraction-name", "downing college")]),
                &bs(&[("attraction-name", "downing college"), ("attraction-area", "centre")])
            )
            .unwrap(),
            ErrorType::TaskMisunderstanding
        );
    }

    #[test]
    fn other_and_contract() {
        assert_eq!(
            classify_error(&bs(&[("hotel-area", "east")]), &bs(&[("hotel-area", "west")])).unwrap(),
            ErrorType::Other
        );
        // Time values in different domains are not a swap.
        assert_eq!(
            classify_error(&bs(&[("taxi-arriveby", "12:45")]), &bs(&[("train-leaveat", "12:45")])).unwrap(),
            ErrorType::Other
        );
        let s = bs(&[("hotel-area", "east")]);
        assert!(matches!(classify_error(&s, &s), Err(Error::Contract(_))));
    }

    #[test]
    fn empty_wrong_state_is_missing_info() {
        assert_eq!(classify_error(&bs(&[("hotel-area", "east")]), &bs(&[])).unwrap(), ErrorType::MissingInfo);
        assert_eq!(classify_error(&bs(&[]), &bs(&[("hotel-area", "east")])).unwrap(), ErrorType::TaskMisunderstanding);
    }
}

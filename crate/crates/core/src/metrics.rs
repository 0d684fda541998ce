//! Joint goal accuracy, weighted F1 and accuracy over prediction records.
//!
//! Scores are exact rationals; rounding happens only for display.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num::{BigInt, BigRational, One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{PredictionRecord, TaskKind};

/// Label assigned to predictions that matched nothing.
pub const NO_MATCH: &str = "NO_MATCH";

fn ratio(num: usize, den: usize) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

fn correct_fraction(records: &[PredictionRecord], what: &'static str) -> Result<BigRational> {
    if records.is_empty() {
        return Err(Error::Empty(what));
    }
    let mut hits = 0;
    for r in records {
        if r.score()? {
            hits += 1;
        }
    }
    Ok(ratio(hits, records.len()))
}

/// Fraction of DST records whose parsed state equals gold exactly.
pub fn joint_goal_accuracy(records: &[PredictionRecord]) -> Result<BigRational> {
    if let Some(r) = records.iter().find(|r| r.task_kind != TaskKind::Dst) {
        return Err(Error::Contract(format!("{} is a {} record, not DST", r.instance_id, r.task_kind)));
    }
    correct_fraction(records, "joint_goal_accuracy")
}

pub fn accuracy(records: &[PredictionRecord]) -> Result<BigRational> {
    correct_fraction(records, "accuracy")
}

/// Support-weighted mean of per-class F1 over single-label records.
/// Unrecovered predictions count as the distinct wrong label [`NO_MATCH`].
pub fn weighted_f1(records: &[PredictionRecord], label_set: &[String]) -> Result<BigRational> {
    let pairs = records
        .iter()
        .map(|r| {
            let gold = r
                .gold
                .label()
                .ok_or_else(|| Error::Contract(format!("{} has no single-label gold", r.instance_id)))?;
            let pred = r.parsed.as_ref().and_then(|p| p.label());
            Ok((gold, pred))
        })
        .collect::<Result<Vec<_>>>()?;
    weighted_f1_labels(&pairs, label_set)
}

/// [`weighted_f1`] over raw `(gold, predicted)` label pairs.
pub fn weighted_f1_labels(pairs: &[(String, Option<String>)], label_set: &[String]) -> Result<BigRational> {
    if pairs.is_empty() {
        return Err(Error::Empty("weighted_f1"));
    }
    let labels: BTreeSet<String> = label_set.iter().map(|l| l.to_lowercase()).collect();
    // (support, true positives, predicted count)
    let mut counts: BTreeMap<&str, (usize, usize, usize)> = BTreeMap::new();
    let mut owned = Vec::with_capacity(pairs.len());
    for (gold, pred) in pairs {
        let gold = gold.to_lowercase();
        if !labels.contains(&gold) {
            return Err(Error::UnknownLabel(gold));
        }
        let pred = pred.as_ref().map(|p| p.to_lowercase());
        if let Some(p) = &pred {
            if !labels.contains(p) {
                return Err(Error::UnknownLabel(p.clone()));
            }
        }
        owned.push((gold, pred));
    }
    for (gold, pred) in &owned {
        counts.entry(gold.as_str()).or_default().0 += 1;
        if let Some(p) = pred {
            counts.entry(p.as_str()).or_default().2 += 1;
            if p == gold {
                counts.get_mut(gold.as_str()).unwrap().1 += 1;
            }
        }
    }
    let mut total = BigRational::zero();
    for (support, tp, predicted) in counts.values() {
        if *support == 0 {
            continue;
        }
        // F1 = 2PR/(P+R) = 2tp / (support + predicted); zero when tp is zero.
        let f1 = if *tp == 0 { BigRational::zero() } else { ratio(2 * tp, support + predicted) };
        total += f1 * BigInt::from(*support);
    }
    Ok(total / BigInt::from(owned.len()))
}

/// Formats `score` (a fraction) as a percentage with two decimals,
/// rounding half-up.
pub fn format_percent(score: &BigRational) -> String {
    let scaled = score * BigInt::from(10_000);
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    let rounded = if scaled.is_negative() { -((-scaled) + half).floor() } else { (scaled + half).floor() };
    let n = rounded.to_integer();
    let sign = if n.is_negative() { "-" } else { "" };
    let n = n.abs();
    let whole = &n / BigInt::from(100);
    let frac = (&n % BigInt::from(100)).to_u32().unwrap_or(0);
    format!("{sign}{whole}.{frac:02}")
}

/// Parses a two-decimal percentage such as `"44.44"` into an exact fraction.
pub fn parse_percent(text: &str) -> Result<BigRational> {
    let bad = || Error::Config(format!("not a percentage: {text:?}"));
    let (whole, frac) = text.trim().split_once('.').unwrap_or((text.trim(), ""));
    if frac.len() > 6 || whole.is_empty() {
        return Err(bad());
    }
    let digits = format!("{whole}{frac}");
    let n: BigInt = digits.parse().map_err(|_| bad())?;
    let den = BigInt::from(100) * BigInt::from(10u64.pow(frac.len() as u32));
    Ok(BigRational::new(n, den))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    Jga,
    WeightedF1,
    Accuracy,
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MetricKind::Jga => "JGA",
            MetricKind::WeightedF1 => "Weighted F1",
            MetricKind::Accuracy => "Accuracy",
        })
    }
}

/// Metrics reported for a task: the headline metric first.
pub fn metrics_for(task_kind: TaskKind) -> &'static [MetricKind] {
    match task_kind {
        TaskKind::Dst => &[MetricKind::Jga],
        TaskKind::NextAction => &[MetricKind::WeightedF1, MetricKind::Accuracy],
        TaskKind::Erc | TaskKind::ResponseSelection => &[MetricKind::Accuracy, MetricKind::WeightedF1],
    }
}

/// Label set implied by a batch of records: their answer spaces plus gold labels.
pub fn record_label_set(records: &[PredictionRecord]) -> Vec<String> {
    let mut set = BTreeSet::new();
    for r in records {
        set.extend(r.answer_space.iter().map(|l| l.to_lowercase()));
        if let Some(l) = r.gold.label() {
            set.insert(l.to_lowercase());
        }
    }
    set.into_iter().collect()
}

pub fn compute(metric: MetricKind, records: &[PredictionRecord]) -> Result<BigRational> {
    match metric {
        MetricKind::Jga => joint_goal_accuracy(records),
        MetricKind::Accuracy => accuracy(records),
        MetricKind::WeightedF1 => weighted_f1(records, &record_label_set(records)),
    }
}

//! Free-text model output to structured answers.
//!
//! Self-explaining responses put per-utterance explanations before the
//! answer, so extraction first isolates the text after the last answer
//! marker and only then looks for `key: value` pairs or labels.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;
use std::sync::OnceLock;

use regex::Regex;

use crate::error::{Error, Result};
use crate::types::{candidate_letter, Answer, BeliefState, Schema, TaskKind};

const DEFAULT_ALIASES: &str = include_str!("../data/aliases.tsv");

/// Values that mean "slot not set".
const ABSENT_VALUES: &[&str] = &[
    "none",
    "not mentioned",
    "not specified",
    "not given",
    "null",
    "n/a",
    "unknown",
];

fn answer_marker() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"(?i)(?:final answer|answer|dialogue state|belief state|next action)\s*:").unwrap()
    })
}

fn time_pattern() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^(\d{1,2})(?:[:.](\d{2}))?\s*(a\.?m\.?|p\.?m\.?)?$").unwrap())
}

fn empty_cue() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"(?i)\b(?:none|nothing|no slots?|no values?|not mentioned|empty)\b|\{\s*\}").unwrap()
    })
}

/// Returns the trimmed text after the last answer marker, or the whole
/// trimmed text when there is none.
pub fn extract_answer_section(raw_text: &str) -> &str {
    match answer_marker().find_iter(raw_text).last() {
        Some(m) => raw_text[m.end()..].trim(),
        None => raw_text.trim(),
    }
}

fn is_edge_noise(c: char) -> bool {
    c.is_whitespace() || matches!(c, '"' | '\'' | '`' | '.' | ',' | ';' | '!' | '?')
}

/// Lowercase, strip surrounding quotes and punctuation, collapse whitespace.
fn base_normalize(value: &str) -> String {
    let lowered = value.to_lowercase();
    lowered
        .trim_matches(is_edge_noise)
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn is_time_slot(slot_key: &str) -> bool {
    let k = slot_key.to_lowercase();
    k.contains("leaveat") || k.contains("arriveby") || k.contains("time")
}

/// True when a (normalized) value stands for an unset slot.
pub fn is_absent_value(value: &str) -> bool {
    value.is_empty() || ABSENT_VALUES.contains(&value)
}

/// Parses clock expressions into zero-padded 24-hour `HH:MM`.
fn normalize_time(value: &str) -> Option<String> {
    let caps = time_pattern().captures(value)?;
    let hour: u32 = caps[1].parse().ok()?;
    let minute: u32 = caps.get(2).map_or(Some(0), |m| m.as_str().parse().ok())?;
    let meridiem = caps.get(3).map(|m| m.as_str().starts_with('p'));
    if caps.get(2).is_none() && meridiem.is_none() {
        return None;
    }
    if minute > 59 {
        return None;
    }
    let hour = match meridiem {
        Some(pm) => {
            if !(1..=12).contains(&hour) {
                return None;
            }
            hour % 12 + if pm { 12 } else { 0 }
        }
        None if hour <= 23 => hour,
        None => return None,
    };
    Some(format!("{hour:02}:{minute:02}"))
}

/// `alias -> canonical` value table.
#[derive(Debug, Clone, Default)]
pub struct AliasTable {
    map: BTreeMap<String, String>,
}

impl AliasTable {
    /// Parses `canonical<TAB>alias` lines. `#` starts a comment line.
    pub fn from_tsv(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let (canonical, alias) = line
                .split_once('\t')
                .ok_or_else(|| Error::Config(format!("alias table line {}: expected two tab-separated columns", n + 1)))?;
            let canonical_norm = base_normalize(canonical);
            let alias_norm = base_normalize(alias);
            if canonical_norm != canonical || canonical.is_empty() {
                return Err(Error::Config(format!(
                    "alias table line {}: canonical value {canonical:?} is not normalized",
                    n + 1
                )));
            }
            if normalize_time(&alias_norm).as_deref() == Some(alias_norm.as_str()) {
                return Err(Error::Config(format!("alias table line {}: clock times cannot be aliases", n + 1)));
            }
            if alias_norm.is_empty() || alias_norm == canonical {
                return Err(Error::Config(format!("alias table line {}: empty or self alias", n + 1)));
            }
            if let Some(prev) = map.insert(alias_norm.clone(), canonical.to_string()) {
                if prev != canonical {
                    return Err(Error::Config(format!("alias {alias_norm:?} maps to both {prev:?} and {canonical:?}")));
                }
            }
        }
        // A canonical value must not itself be rewritten.
        for canonical in map.values() {
            if map.contains_key(canonical) {
                return Err(Error::Config(format!("canonical value {canonical:?} is also an alias")));
            }
        }
        Ok(AliasTable { map })
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_tsv(&text)
    }

    pub fn builtin() -> Self {
        Self::from_tsv(DEFAULT_ALIASES).expect("shipped alias table is valid")
    }

    pub fn get(&self, normalized: &str) -> Option<&str> {
        self.map.get(normalized).map(String::as_str)
    }

    /// `(alias, canonical)` pairs in alias order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.map.iter().map(|(a, c)| (a.as_str(), c.as_str()))
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Canonical {
    pub value: String,
    /// Set when a time-typed slot carried a value that is not a clock time.
    pub unparsed_time: bool,
}

/// Result of [`AnswerParser::parse_belief_state`].
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BeliefParse {
    pub state: BeliefState,
    pub parse_failure: bool,
    /// Pairs whose key matched no schema slot.
    pub unknown_keys: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedAnswer {
    pub answer: Option<Answer>,
    pub parse_failure: bool,
    pub unknown_keys: usize,
}

/// Answer parser configured with an alias table and a key-matching mode.
#[derive(Debug, Clone)]
pub struct AnswerParser {
    aliases: AliasTable,
    strict_keys: bool,
}

impl Default for AnswerParser {
    fn default() -> Self {
        AnswerParser {
            aliases: AliasTable::builtin(),
            strict_keys: false,
        }
    }
}

fn fuzzy_key(key: &str) -> String {
    key.to_lowercase().chars().filter(|c| c.is_alphanumeric()).collect()
}

fn label_tokens(text: &str) -> Vec<String> {
    text.to_lowercase()
        .chars()
        .map(|c| if c.is_alphanumeric() { c } else { ' ' })
        .collect::<String>()
        .split_whitespace()
        .map(str::to_owned)
        .collect()
}

/// Splits one segment into a `(key, value)` candidate.
fn split_pair(segment: &str) -> Option<(&str, &str)> {
    let seg = segment.trim_start_matches(|c: char| c.is_whitespace() || matches!(c, '-' | '*' | '•' | '{' | '[' | '(' | '"' | '\''));
    let seg = seg.trim_end_matches(|c: char| c.is_whitespace() || matches!(c, '}' | ']' | ')'));
    let seg = strip_numbering(seg);
    let idx = seg.find([':', '='])?;
    let key = seg[..idx].trim().trim_matches(|c| matches!(c, '"' | '\'' | '`' | '*'));
    let value = seg[idx + 1..].trim();
    if key.is_empty() {
        return None;
    }
    Some((key, value))
}

/// Splits an answer into pair candidates on newlines, commas and
/// semicolons. A comma or semicolon piece without a `:` or `=` continues the
/// previous piece's value, so `hotel-name: a, b` stays one pair.
fn segments(text: &str) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for line in text.lines() {
        let line_start = out.len();
        let mut delim = "";
        let mut rest = line;
        loop {
            let (piece, next) = match rest.find([',', ';']) {
                Some(i) => (&rest[..i], Some((&rest[i..i + 1], &rest[i + 1..]))),
                None => (rest, None),
            };
            if out.len() > line_start && !piece.contains([':', '=']) {
                let cur = out.last_mut().expect("non-empty");
                cur.push_str(delim);
                cur.push_str(piece);
            } else {
                out.push(piece.to_string());
            }
            match next {
                Some((d, n)) => {
                    delim = d;
                    rest = n;
                }
                None => break,
            }
        }
    }
    out
}

fn strip_numbering(seg: &str) -> &str {
    let digits = seg.chars().take_while(char::is_ascii_digit).count();
    if digits > 0 {
        let rest = &seg[digits..];
        if let Some(r) = rest.strip_prefix(['.', ')']) {
            return r.trim_start();
        }
    }
    seg
}

impl AnswerParser {
    pub fn new(aliases: AliasTable) -> Self {
        AnswerParser {
            aliases,
            strict_keys: false,
        }
    }

    /// Strict mode requires keys to equal schema keys after lowercasing and trimming.
    pub fn strict(mut self, strict: bool) -> Self {
        self.strict_keys = strict;
        self
    }

    pub fn aliases(&self) -> &AliasTable {
        &self.aliases
    }

    pub fn canonicalize(&self, slot_key: &str, value: &str) -> Canonical {
        let mut v = base_normalize(value);
        if let Some(c) = self.aliases.get(&v) {
            v = c.to_string();
        }
        let mut unparsed_time = false;
        if is_time_slot(slot_key) && !is_absent_value(&v) && v != "dontcare" {
            match normalize_time(&v) {
                Some(t) => v = t,
                None => {
                    log::warn!("slot {slot_key}: {v:?} is not a clock time");
                    unparsed_time = true;
                }
            }
        }
        Canonical { value: v, unparsed_time }
    }

    pub fn parse_belief_state(&self, answer_text: &str, slot_keys: &[String]) -> BeliefParse {
        let lookup: HashMap<String, &String> = slot_keys
            .iter()
            .map(|k| {
                let norm = if self.strict_keys { k.to_lowercase() } else { fuzzy_key(k) };
                (norm, k)
            })
            .collect();

        let mut out = BeliefParse::default();
        let mut recognized = 0usize;
        for segment in segments(answer_text) {
            let Some((key, value)) = split_pair(&segment) else {
                continue;
            };
            let norm = if self.strict_keys { key.trim().to_lowercase() } else { fuzzy_key(key) };
            let Some(&schema_key) = lookup.get(&norm) else {
                out.unknown_keys += 1;
                continue;
            };
            recognized += 1;
            let canonical = self.canonicalize(schema_key, value);
            if is_absent_value(&canonical.value) {
                continue;
            }
            out.state
                .insert(schema_key.clone(), canonical.value)
                .expect("schema key and non-empty value");
        }
        out.parse_failure = recognized == 0 && !empty_cue().is_match(answer_text);
        out
    }

    /// Convenience wrapper taking a declarative schema.
    pub fn parse_belief_state_with_schema(&self, answer_text: &str, schema: &Schema) -> Result<BeliefParse> {
        match schema {
            Schema::Declarative { .. } => Ok(self.parse_belief_state(answer_text, &schema.slot_keys(None))),
            Schema::Procedural { .. } => Err(Error::Contract("belief-state parsing needs a declarative schema".into())),
        }
    }

    /// Full pipeline for one raw response: marker extraction, then the
    /// task's parser.
    pub fn parse_answer(&self, raw_text: &str, task_kind: TaskKind, answer_space: &[String]) -> ParsedAnswer {
        let section = extract_answer_section(raw_text);
        match task_kind {
            TaskKind::Dst => {
                let p = self.parse_belief_state(section, answer_space);
                ParsedAnswer {
                    answer: Some(Answer::BeliefState(p.state)),
                    parse_failure: p.parse_failure,
                    unknown_keys: p.unknown_keys,
                }
            }
            _ => {
                let label = if answer_space.is_empty() { None } else { parse_label(section, answer_space) };
                let answer = label.map(|l| match task_kind {
                    TaskKind::NextAction => Answer::Action(l),
                    TaskKind::Erc => Answer::Emotion(l),
                    TaskKind::ResponseSelection => {
                        let idx = answer_space.iter().position(|x| *x == l).expect("label drawn from set");
                        Answer::Candidate(idx)
                    }
                    TaskKind::Dst => unreachable!(),
                });
                ParsedAnswer {
                    parse_failure: answer.is_none(),
                    answer,
                    unknown_keys: 0,
                }
            }
        }
    }
}

fn default_parser() -> &'static AnswerParser {
    static P: OnceLock<AnswerParser> = OnceLock::new();
    P.get_or_init(AnswerParser::default)
}

/// Canonical form of a slot value under the shipped alias table.
pub fn canonicalize_value(slot_key: &str, value: &str) -> String {
    default_parser().canonicalize(slot_key, value).value
}

pub fn parse_belief_state(answer_text: &str, slot_keys: &[String]) -> BeliefParse {
    default_parser().parse_belief_state(answer_text, slot_keys)
}

/// Picks the label whose canonical token sequence starts earliest in the
/// answer; ties go to the longer label. `None` means no label occurs.
pub fn parse_label(answer_text: &str, label_set: &[String]) -> Option<String> {
    let text = label_tokens(answer_text);
    let mut best: Option<(usize, usize, usize, &String)> = None;
    for label in label_set {
        let toks = label_tokens(label);
        if toks.is_empty() || toks.len() > text.len() {
            continue;
        }
        let Some(start) = text.windows(toks.len()).position(|w| w == toks.as_slice()) else {
            continue;
        };
        let better = match best {
            None => true,
            Some((s, n, chars, _)) => {
                start < s || (start == s && (toks.len() > n || (toks.len() == n && label.len() > chars)))
            }
        };
        if better {
            best = Some((start, toks.len(), label.len(), label));
        }
    }
    best.map(|(_, _, _, l)| l.clone())
}

/// Serializes a gold answer in the format the parser reads back.
pub fn render_gold(answer: &Answer) -> String {
    match answer {
        Answer::BeliefState(state) => {
            if state.is_empty() {
                return "none".to_string();
            }
            let sep = if state.iter().any(|(_, v)| v.contains([',', ';'])) { "\n" } else { ", " };
            state.iter().map(|(k, v)| format!("{k}: {v}")).collect::<Vec<_>>().join(sep)
        }
        Answer::Action(l) | Answer::Emotion(l) => l.clone(),
        Answer::Candidate(i) => candidate_letter(*i),
    }
}

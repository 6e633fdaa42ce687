//! Rule-based grading of free-text model answers.

use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::{AnswerType, GroundTruth};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Correct,
    Hallucinated,
    Unparseable,
    TransportFailure,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Correct => "correct",
            Self::Hallucinated => "hallucinated",
            Self::Unparseable => "unparseable",
            Self::TransportFailure => "transport_failure",
        }
    }
}

static ANSWER_LINE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)^[\s>*#_`-]*answer[\s*_`]*:[\s*_`]*(.*)$").unwrap());

/// The text after the last `ANSWER:` line, or the last non-empty line when
/// no such line exists.
pub fn extract_answer(text: &str) -> Option<String> {
    let tagged = text
        .lines()
        .rev()
        .find_map(|l| ANSWER_LINE.captures(l).map(|c| c[1].to_string()));
    let raw = tagged.or_else(|| {
        text.lines()
            .rev()
            .find(|l| !l.trim().is_empty())
            .map(str::to_string)
    })?;
    let trimmed = raw.trim();
    (!trimmed.is_empty()).then(|| trimmed.to_string())
}

/// Lowercase, trimmed, with wrapping quotes, emphasis and a trailing period
/// removed; internal whitespace collapsed.
pub fn normalize(s: &str) -> String {
    let lower = s.trim().to_lowercase();
    let wrapper = |c: char| matches!(c, '"' | '\'' | '`' | '*' | '_') || c.is_whitespace();
    let mut stripped = lower.as_str();
    loop {
        let next = stripped.trim_matches(wrapper).trim_end_matches(['.', '!']);
        if next.len() == stripped.len() {
            break;
        }
        stripped = next;
    }
    stripped.split_whitespace().collect::<Vec<_>>().join(" ")
}

const ABSTAIN: [&str; 16] = [
    "can't determine",
    "cant determine",
    "cannot determine",
    "can not determine",
    "cannot_determine",
    "cannot be determined",
    "can't be determined",
    "unable to determine",
    "not enough information",
    "insufficient information",
    "not determinable",
    "undeterminable",
    "don't know",
    "do not know",
    "can't tell",
    "cannot tell",
];

pub fn is_abstention(norm: &str) -> bool {
    let norm = norm.replace('\u{2019}', "'");
    norm == "unknown" || ABSTAIN.iter().any(|p| norm.contains(p))
}

pub(crate) fn exact_yes_no(norm: &str) -> Option<bool> {
    match norm {
        "yes" | "true" | "y" => Some(true),
        "no" | "false" | "n" => Some(false),
        _ => None,
    }
}

/// Leading yes/no token: `yes, there is one` reads as yes.
pub(crate) fn parse_yes_no(norm: &str) -> Option<bool> {
    let first = norm
        .split(|c: char| !c.is_alphanumeric())
        .find(|t| !t.is_empty())?;
    exact_yes_no(first)
}

fn small_number(word: &str) -> Option<u64> {
    const UNITS: [&str; 20] = [
        "zero",
        "one",
        "two",
        "three",
        "four",
        "five",
        "six",
        "seven",
        "eight",
        "nine",
        "ten",
        "eleven",
        "twelve",
        "thirteen",
        "fourteen",
        "fifteen",
        "sixteen",
        "seventeen",
        "eighteen",
        "nineteen",
    ];
    const TENS: [&str; 8] = [
        "twenty", "thirty", "forty", "fifty", "sixty", "seventy", "eighty", "ninety",
    ];
    if let Some(i) = UNITS.iter().position(|u| *u == word) {
        return Some(i as u64);
    }
    TENS.iter()
        .position(|t| *t == word)
        .map(|i| 20 + 10 * i as u64)
}

/// Replace number words (up to 999) with digits.
pub(crate) fn digits_for_words(norm: &str) -> String {
    let mut out: Vec<String> = Vec::new();
    let mut acc: Option<u64> = None;
    let flush = |acc: &mut Option<u64>, out: &mut Vec<String>| {
        if let Some(n) = acc.take() {
            out.push(n.to_string());
        }
    };
    for tok in norm.split_whitespace() {
        let word = tok.trim_matches(|c: char| !c.is_alphanumeric() && c != '-');
        let parts: Vec<&str> = word.split('-').collect();
        let value = if parts.len() == 2 {
            match (small_number(parts[0]), small_number(parts[1])) {
                (Some(t), Some(u)) if t >= 20 && t % 10 == 0 && u < 10 => Some(t + u),
                _ => None,
            }
        } else {
            small_number(word)
        };
        match (value, word) {
            (Some(v), _) => {
                acc = Some(match acc {
                    Some(a) if a >= 20 && a % 10 == 0 && v < 10 => a + v,
                    Some(a) if a % 100 == 0 && a >= 100 && v < 100 => a + v,
                    Some(_) => {
                        flush(&mut acc, &mut out);
                        v
                    }
                    None => v,
                });
            }
            (None, "hundred") if acc.is_some_and(|a| (1..10).contains(&a)) => {
                acc = acc.map(|a| a * 100)
            }
            (None, "and") if acc.is_some_and(|a| a >= 100) => {}
            _ => {
                flush(&mut acc, &mut out);
                out.push(tok.to_string());
            }
        }
    }
    flush(&mut acc, &mut out);
    out.join(" ")
}

static INTEGER: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"-?\d+").unwrap());

pub(crate) fn parse_count(norm: &str) -> Option<u64> {
    let text = digits_for_words(norm);
    INTEGER.find(&text).and_then(|m| m.as_str().parse().ok())
}

static AHEAD: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r"(?:ahead|forward|steps_ahead)\W{0,3}(-?\d+)|(-?\d+)\s*(?:steps?\s*)?(?:ahead|forward)",
    )
    .unwrap()
});
static LATERAL: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"\b([lr])\s?(\d+)\b|(\d+)\s*(?:steps?\s*)?(?:to the\s*)?(left|right)|lateral\W{0,3}(-?\d+)").unwrap()
});

static CENTER_ZERO: LazyLock<Regex> = LazyLock::new(|| Regex::new(r",\s*0\b").unwrap());

/// `{"steps_ahead": 6, "lateral": 3}`, `ahead 6, R3`, `6 ahead, 3 right`,
/// `(6, 3)`. Lateral is negative to the left.
pub fn parse_location(s: &str) -> Option<(i64, i64)> {
    let norm = digits_for_words(&normalize(s));
    if let Some(start) = norm.find('{') {
        if let Some(end) = norm.rfind('}').filter(|&e| e > start) {
            if let Ok(v) = serde_json::from_str::<serde_json::Value>(&norm[start..=end]) {
                let a = v.get("steps_ahead").and_then(serde_json::Value::as_i64);
                let l = v.get("lateral").and_then(serde_json::Value::as_i64);
                if let (Some(a), Some(l)) = (a, l) {
                    return Some((a, l));
                }
            }
        }
    }
    let ahead = AHEAD
        .captures(&norm)
        .and_then(|c| c.get(1).or(c.get(2))?.as_str().parse::<i64>().ok());
    let lateral = LATERAL.captures(&norm).and_then(|c| {
        if let (Some(side), Some(n)) = (c.get(1), c.get(2)) {
            let n: i64 = n.as_str().parse().ok()?;
            Some(if side.as_str() == "l" { -n } else { n })
        } else if let (Some(n), Some(side)) = (c.get(3), c.get(4)) {
            let n: i64 = n.as_str().parse().ok()?;
            Some(if side.as_str() == "left" { -n } else { n })
        } else {
            c.get(5)?.as_str().parse().ok()
        }
    });
    match (ahead, lateral) {
        (Some(a), Some(l)) => Some((a, l)),
        (Some(a), None) if norm.contains("center") || norm.contains("straight") => Some((a, 0)),
        (Some(a), None) if CENTER_ZERO.is_match(&norm) => Some((a, 0)),
        _ => {
            let nums: Vec<i64> = INTEGER
                .find_iter(&norm)
                .filter_map(|m| m.as_str().parse().ok())
                .collect();
            match nums.as_slice() {
                [a, l] => Some((*a, *l)),
                _ => None,
            }
        }
    }
}

fn strip_article(s: &str) -> &str {
    for a in ["the ", "a ", "an "] {
        if let Some(rest) = s.strip_prefix(a) {
            return rest;
        }
    }
    s
}

/// Parse an answer into a value comparable with `like`.
pub fn parse_value(norm: &str, like: &GroundTruth) -> Option<GroundTruth> {
    match like {
        GroundTruth::YesNo(_) => parse_yes_no(norm).map(GroundTruth::YesNo),
        GroundTruth::Count(_) => parse_count(norm).map(GroundTruth::Count),
        GroundTruth::Attribute(_) => {
            let s = strip_article(norm);
            (!s.is_empty()).then(|| GroundTruth::Attribute(s.to_string()))
        }
        GroundTruth::Causal(_) => {
            let s = strip_article(norm);
            (!s.is_empty()).then(|| GroundTruth::Causal(s.to_string()))
        }
        GroundTruth::Location { .. } => {
            parse_location(norm).map(|(steps_ahead, lateral)| GroundTruth::Location {
                steps_ahead,
                lateral,
            })
        }
        GroundTruth::CannotDetermine => None,
    }
}

fn truth_key(truth: &GroundTruth) -> GroundTruth {
    match truth {
        GroundTruth::Attribute(s) => {
            GroundTruth::Attribute(strip_article(&normalize(s)).to_string())
        }
        GroundTruth::Causal(s) => GroundTruth::Causal(strip_article(&normalize(s)).to_string()),
        other => other.clone(),
    }
}

/// Grade a raw model response. Total: every input maps to a verdict.
///
/// Overclaiming on a `CANNOT_DETERMINE` truth and abstaining on a concrete
/// truth are both hallucinations; text with no readable value is
/// unparseable. The truth's variant decides how the answer is read.
pub fn grade(response: &str, truth: &GroundTruth, _answer_type: AnswerType) -> Verdict {
    let Some(answer) = extract_answer(response) else {
        return Verdict::Unparseable;
    };
    let norm = normalize(&answer);
    let abstained = is_abstention(&norm);
    if truth.is_cannot_determine() {
        return if abstained {
            Verdict::Correct
        } else {
            Verdict::Hallucinated
        };
    }
    if abstained {
        return Verdict::Hallucinated;
    }
    match parse_value(&norm, truth) {
        None => Verdict::Unparseable,
        Some(v) if v == truth_key(truth) => Verdict::Correct,
        Some(_) => Verdict::Hallucinated,
    }
}

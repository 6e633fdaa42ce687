//! Metrics over graded records. Every function here is pure.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{EvalRecord, Protocol};
use crate::probe::Verdict;
use crate::view::Serializer;

pub const BOOTSTRAP_DRAWS: usize = 10_000;
pub const BOOTSTRAP_SEED: u64 = 20_240_917;

#[derive(Debug, Error, PartialEq)]
pub enum MetricError {
    #[error("no graded records")]
    Empty,
    #[error("probe {probe_id} of {trajectory_id} (model {model}, {serializer}) lacks a paired {missing} record")]
    Unpaired {
        model: String,
        serializer: Serializer,
        trajectory_id: String,
        probe_id: String,
        missing: Protocol,
    },
    #[error("probe {probe_id} of {trajectory_id} has {count} {protocol} records for one model and serializer")]
    Duplicate {
        trajectory_id: String,
        probe_id: String,
        protocol: Protocol,
        count: usize,
    },
    #[error("records span {0} quintile(s); a slope needs at least two")]
    TooFewQuintiles(usize),
    #[error("rate table covers {found} models, fewer than the threshold of {needed}")]
    TooFewModels { found: usize, needed: usize },
    #[error("no world is shared by two or more serializers")]
    NoSharedWorld,
    #[error("unknown group key {0:?}")]
    UnknownKey(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupKey {
    Model,
    Category,
    Serializer,
    Level,
    Quintile,
    Protocol,
    ProbeType,
}

impl GroupKey {
    pub const ALL: [GroupKey; 7] = [
        Self::Model,
        Self::Category,
        Self::Serializer,
        Self::Level,
        Self::Quintile,
        Self::Protocol,
        Self::ProbeType,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Model => "model",
            Self::Category => "category",
            Self::Serializer => "serializer",
            Self::Level => "level",
            Self::Quintile => "quintile",
            Self::Protocol => "protocol",
            Self::ProbeType => "probe_type",
        }
    }

    pub fn parse(s: &str) -> Result<Self, MetricError> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s.trim())
            .ok_or_else(|| MetricError::UnknownKey(s.to_string()))
    }

    /// Comma-separated list, e.g. `category,serializer`.
    pub fn parse_list(s: &str) -> Result<Vec<Self>, MetricError> {
        s.split(',')
            .filter(|p| !p.trim().is_empty())
            .map(Self::parse)
            .collect()
    }

    pub fn value(self, r: &EvalRecord) -> String {
        match self {
            Self::Model => r.model.clone(),
            Self::Category => r.category.as_str().to_string(),
            Self::Serializer => r.serializer.as_str().to_string(),
            Self::Level => r.level.clone(),
            Self::Quintile => r.quintile.to_string(),
            Self::Protocol => r.protocol.as_str().to_string(),
            Self::ProbeType => r.probe_type.clone(),
        }
    }
}

fn key_of(r: &EvalRecord, keys: &[GroupKey]) -> Vec<String> {
    keys.iter().map(|k| k.value(r)).collect()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub hallucinated: usize,
    pub correct: usize,
    pub unparseable: usize,
    pub transport_failure: usize,
}

impl Tally {
    pub fn add(&mut self, v: Verdict) {
        match v {
            Verdict::Hallucinated => self.hallucinated += 1,
            Verdict::Correct => self.correct += 1,
            Verdict::Unparseable => self.unparseable += 1,
            Verdict::TransportFailure => self.transport_failure += 1,
        }
    }

    pub fn merge(&mut self, o: &Tally) {
        self.hallucinated += o.hallucinated;
        self.correct += o.correct;
        self.unparseable += o.unparseable;
        self.transport_failure += o.transport_failure;
    }

    pub fn graded(&self) -> usize {
        self.hallucinated + self.correct
    }

    /// Hallucinated over graded; `None` with nothing graded.
    pub fn rate(&self) -> Option<f64> {
        (self.graded() > 0).then(|| self.hallucinated as f64 / self.graded() as f64)
    }

    pub fn of<'a>(records: impl IntoIterator<Item = &'a EvalRecord>) -> Self {
        let mut t = Self::default();
        for r in records {
            t.add(r.verdict);
        }
        t
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub key: Vec<String>,
    pub tally: Tally,
    pub rate: f64,
}

/// Micro-averaged hallucination rate per group. Groups with no graded
/// answers are left out rather than reported as zero.
pub fn hallucination_rate(records: &[EvalRecord], group_by: &[GroupKey]) -> Vec<RateRow> {
    let mut groups: BTreeMap<Vec<String>, Tally> = BTreeMap::new();
    for r in records {
        groups
            .entry(key_of(r, group_by))
            .or_default()
            .add(r.verdict);
    }
    groups
        .into_iter()
        .filter_map(|(key, tally)| {
            Some(RateRow {
                key,
                rate: tally.rate()?,
                tally,
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NavEffect {
    pub key: Vec<String>,
    /// Rates in percentage points.
    pub in_nav: f64,
    pub ctrl_static: f64,
    pub naveff: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub episodes: usize,
}

impl NavEffect {
    pub fn significant(&self) -> bool {
        self.ci_low > 0.0 || self.ci_high < 0.0
    }
}

type PairKey = (String, Serializer, String, u64, String);

fn check_pairing(records: &[EvalRecord]) -> Result<(), MetricError> {
    let mut seen: BTreeMap<PairKey, [usize; 2]> = BTreeMap::new();
    for r in records {
        let k = (
            r.model.clone(),
            r.serializer,
            r.trajectory_id.clone(),
            r.seed,
            r.probe_id.clone(),
        );
        let slot = usize::from(r.protocol == Protocol::InNav);
        seen.entry(k).or_default()[slot] += 1;
    }
    for ((model, serializer, trajectory_id, _, probe_id), [cs, nav]) in seen {
        for (count, protocol, other) in
            [(cs, Protocol::CtrlStatic, nav), (nav, Protocol::InNav, cs)]
        {
            if count > 1 {
                return Err(MetricError::Duplicate {
                    trajectory_id,
                    probe_id,
                    protocol,
                    count,
                });
            }
            if count == 0 && other > 0 {
                return Err(MetricError::Unpaired {
                    model,
                    serializer,
                    trajectory_id,
                    probe_id,
                    missing: protocol,
                });
            }
        }
    }
    Ok(())
}

/// InNav minus CtrlStatic hallucination rate per group, in percentage
/// points, with a 95% percentile interval from a paired bootstrap that
/// resamples whole episodes.
pub fn nav_effect(
    records: &[EvalRecord],
    group_by: &[GroupKey],
) -> Result<Vec<NavEffect>, MetricError> {
    check_pairing(records)?;
    let keys: Vec<GroupKey> = group_by
        .iter()
        .copied()
        .filter(|k| *k != GroupKey::Protocol)
        .collect();
    // group -> episode -> [ctrl, nav]
    let mut groups: BTreeMap<Vec<String>, BTreeMap<(String, u64), [Tally; 2]>> = BTreeMap::new();
    for r in records {
        let slot = usize::from(r.protocol == Protocol::InNav);
        groups
            .entry(key_of(r, &keys))
            .or_default()
            .entry((r.trajectory_id.clone(), r.seed))
            .or_default()[slot]
            .add(r.verdict);
    }
    let mut out = Vec::new();
    for (key, episodes) in groups {
        let eps: Vec<[Tally; 2]> = episodes.into_values().collect();
        let Some((ctrl, nav)) = pooled_rates(eps.iter()) else {
            continue;
        };
        let diffs = bootstrap(&eps);
        out.push(NavEffect {
            key,
            in_nav: 100.0 * nav,
            ctrl_static: 100.0 * ctrl,
            naveff: 100.0 * (nav - ctrl),
            ci_low: percentile(&diffs, 0.025),
            ci_high: percentile(&diffs, 0.975),
            episodes: eps.len(),
        });
    }
    if out.is_empty() {
        return Err(MetricError::Empty);
    }
    Ok(out)
}

fn pooled_rates<'a>(eps: impl Iterator<Item = &'a [Tally; 2]>) -> Option<(f64, f64)> {
    let (mut c, mut n) = (Tally::default(), Tally::default());
    for [a, b] in eps {
        c.merge(a);
        n.merge(b);
    }
    Some((c.rate()?, n.rate()?))
}

fn bootstrap(eps: &[[Tally; 2]]) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(BOOTSTRAP_SEED);
    let mut diffs = Vec::with_capacity(BOOTSTRAP_DRAWS);
    for _ in 0..BOOTSTRAP_DRAWS {
        let draw = (0..eps.len()).map(|_| &eps[rng.random_range(0..eps.len())]);
        if let Some((c, n)) = pooled_rates(draw) {
            diffs.push(100.0 * (n - c));
        }
    }
    diffs.sort_by(f64::total_cmp);
    diffs
}

/// Linear-interpolated percentile of sorted data.
fn percentile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Ordinary least-squares slope of y on x.
pub fn ols_slope(points: &[(f64, f64)]) -> Option<f64> {
    let n = points.len() as f64;
    if points.len() < 2 {
        return None;
    }
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Percentage-point change in hallucination rate per quintile of depth.
pub fn depth_slope(records: &[EvalRecord]) -> Result<f64, MetricError> {
    let rows = hallucination_rate(records, &[GroupKey::Quintile]);
    let points: Vec<(f64, f64)> = rows
        .iter()
        .map(|r| {
            (
                r.key[0].parse::<f64>().expect("quintile is numeric"),
                100.0 * r.rate,
            )
        })
        .collect();
    ols_slope(&points).ok_or(MetricError::TooFewQuintiles(points.len()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateEntry {
    pub model: String,
    pub level: String,
    pub serializer: String,
    pub rate: f64,
}

/// One rate per (model, level, serializer).
pub fn rate_table(records: &[EvalRecord]) -> Vec<RateEntry> {
    hallucination_rate(
        records,
        &[GroupKey::Model, GroupKey::Level, GroupKey::Serializer],
    )
    .into_iter()
    .map(|r| {
        let mut k = r.key.into_iter();
        RateEntry {
            model: k.next().unwrap_or_default(),
            level: k.next().unwrap_or_default(),
            serializer: k.next().unwrap_or_default(),
            rate: r.rate,
        }
    })
    .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HardSubsetRule {
    pub model_threshold: usize,
    pub rate_threshold: f64,
}

impl Default for HardSubsetRule {
    fn default() -> Self {
        Self {
            model_threshold: 5,
            rate_threshold: 0.20,
        }
    }
}

/// (level, serializer) pairs on which at least `model_threshold` models
/// reach `rate_threshold`, sorted.
pub fn hard_subset(
    table: &[RateEntry],
    rule: HardSubsetRule,
) -> Result<Vec<(String, String)>, MetricError> {
    let models: BTreeSet<&str> = table.iter().map(|e| e.model.as_str()).collect();
    if models.len() < rule.model_threshold {
        return Err(MetricError::TooFewModels {
            found: models.len(),
            needed: rule.model_threshold,
        });
    }
    let mut failing: BTreeMap<(String, String), BTreeSet<&str>> = BTreeMap::new();
    for e in table {
        let slot = failing
            .entry((e.level.clone(), e.serializer.clone()))
            .or_default();
        if e.rate >= rule.rate_threshold {
            slot.insert(&e.model);
        }
    }
    Ok(failing
        .into_iter()
        .filter(|(_, m)| m.len() >= rule.model_threshold)
        .map(|(k, _)| k)
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorldComparison {
    pub model: String,
    pub level: String,
    /// World-level rate per serializer: the unweighted mean of its trace rates.
    pub rates: BTreeMap<Serializer, f64>,
    /// Serializer with the lowest rate.
    pub winner: Serializer,
    /// Runner-up rate minus winner rate.
    pub margin: f64,
    pub tie: bool,
}

/// Compare serializers per (model, world) with each episode weighted
/// equally: probe verdicts become one rate per episode, and episode rates
/// are averaged without regard to how many probes each had.
pub fn serializer_comparison(records: &[EvalRecord]) -> Result<Vec<WorldComparison>, MetricError> {
    type World = (String, String);
    let mut traces: BTreeMap<World, BTreeMap<Serializer, BTreeMap<(String, u64), Tally>>> =
        BTreeMap::new();
    for r in records {
        traces
            .entry((r.model.clone(), r.level.clone()))
            .or_default()
            .entry(r.serializer)
            .or_default()
            .entry((r.trajectory_id.clone(), r.seed))
            .or_default()
            .add(r.verdict);
    }
    let mut out = Vec::new();
    for ((model, level), by_ser) in traces {
        let rates: BTreeMap<Serializer, f64> = by_ser
            .into_iter()
            .filter_map(|(s, eps)| {
                let trace_rates: Vec<f64> = eps.values().filter_map(Tally::rate).collect();
                (!trace_rates.is_empty()).then(|| {
                    (
                        s,
                        trace_rates.iter().sum::<f64>() / trace_rates.len() as f64,
                    )
                })
            })
            .collect();
        if rates.len() < 2 {
            continue;
        }
        let mut ranked: Vec<(Serializer, f64)> = rates.iter().map(|(s, r)| (*s, *r)).collect();
        ranked.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        let margin = ranked[1].1 - ranked[0].1;
        out.push(WorldComparison {
            model,
            level,
            winner: ranked[0].0,
            margin,
            tie: margin.abs() < 1e-12,
            rates,
        });
    }
    if out.is_empty() {
        return Err(MetricError::NoSharedWorld);
    }
    Ok(out)
}

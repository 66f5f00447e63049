//! Event logs: multisets of traces and the statistics the miner derives from them.

mod csv_reader;
mod dfg;
mod xes;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rational::Rational;

pub use csv_reader::{parse_csv, CsvColumns};
pub use dfg::Dfg;
pub use xes::parse_xes;

#[derive(Debug, Error)]
pub enum LogError {
    #[error("malformed XML at line {line}, column {column}: {message}")]
    Xml {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("CSV error: {0}")]
    Csv(String),
    #[error("column `{0}` not found in CSV header")]
    MissingColumn(String),
    #[error("invalid JSON log: {0}")]
    Json(#[from] serde_json::Error),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("the event log is empty")]
    EmptyLog,
    #[error("coverage must lie in (0, 1], got {0}")]
    InvalidCoverage(String),
}

/// An activity name. Ordering is byte-wise on the underlying text.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ActivityLabel(String);

impl ActivityLabel {
    pub fn new(name: impl Into<String>) -> Self {
        Self(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ActivityLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for ActivityLabel {
    fn from(s: &str) -> Self {
        Self(s.to_owned())
    }
}

impl From<String> for ActivityLabel {
    fn from(s: String) -> Self {
        Self(s)
    }
}

/// A sequence of activity labels. Traces order lexicographically.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Trace(Vec<ActivityLabel>);

impl Trace {
    pub fn new(events: Vec<ActivityLabel>) -> Self {
        Self(events)
    }

    pub fn from_labels<S: AsRef<str>>(labels: &[S]) -> Self {
        Self(
            labels
                .iter()
                .map(|s| ActivityLabel::new(s.as_ref()))
                .collect(),
        )
    }

    pub fn events(&self) -> &[ActivityLabel] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn first(&self) -> Option<&ActivityLabel> {
        self.0.first()
    }

    pub fn last(&self) -> Option<&ActivityLabel> {
        self.0.last()
    }

    pub fn project(&self, keep: &BTreeSet<ActivityLabel>) -> Trace {
        Trace(
            self.0
                .iter()
                .filter(|a| keep.contains(*a))
                .cloned()
                .collect(),
        )
    }

    pub fn reversed(&self) -> Trace {
        Trace(self.0.iter().rev().cloned().collect())
    }
}

impl fmt::Display for Trace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("<")?;
        for (i, a) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{a}")?;
        }
        f.write_str(">")
    }
}

/// Multiset of traces, keyed by variant.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EventLog {
    variants: BTreeMap<Trace, u64>,
    activities: BTreeSet<ActivityLabel>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct VariantEntry {
    variant: Vec<ActivityLabel>,
    count: u64,
}

impl EventLog {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a log from `(labels, multiplicity)` pairs.
    pub fn from_variants<I, V, S>(variants: I) -> Self
    where
        I: IntoIterator<Item = (V, u64)>,
        V: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut log = EventLog::new();
        for (labels, count) in variants {
            let trace = Trace(
                labels
                    .into_iter()
                    .map(|s| ActivityLabel::new(s.as_ref()))
                    .collect(),
            );
            log.add_trace(trace, count);
        }
        log
    }

    /// Adds `count` copies of `trace`. A zero count is ignored.
    pub fn add_trace(&mut self, trace: Trace, count: u64) {
        if count == 0 {
            return;
        }
        self.activities.extend(trace.events().iter().cloned());
        *self.variants.entry(trace).or_insert(0) += count;
    }

    /// Variants with their multiplicities, in lexicographic trace order.
    pub fn variants(&self) -> impl Iterator<Item = (&Trace, u64)> + '_ {
        self.variants.iter().map(|(t, c)| (t, *c))
    }

    pub fn multiplicity(&self, trace: &Trace) -> u64 {
        self.variants.get(trace).copied().unwrap_or(0)
    }

    pub fn num_variants(&self) -> usize {
        self.variants.len()
    }

    pub fn num_traces(&self) -> u64 {
        self.variants.values().sum()
    }

    pub fn num_events(&self) -> u64 {
        self.variants.iter().map(|(t, c)| t.len() as u64 * c).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.variants.is_empty()
    }

    pub fn activities(&self) -> &BTreeSet<ActivityLabel> {
        &self.activities
    }

    /// Projects every trace onto `keep`, merging variants that collide.
    pub fn project(&self, keep: &BTreeSet<ActivityLabel>) -> EventLog {
        let mut out = EventLog::new();
        for (trace, count) in self.variants() {
            out.add_trace(trace.project(keep), count);
        }
        out
    }

    /// Keeps the most frequent variants until they cover `coverage` of all traces.
    ///
    /// Variants are taken by descending multiplicity, ties in lexicographic
    /// trace order.
    pub fn filter_variants(&self, coverage: Rational) -> Result<EventLog, LogError> {
        if self.is_empty() {
            return Err(LogError::EmptyLog);
        }
        if coverage <= Ratio::from_integer(0) || coverage > Ratio::from_integer(1) {
            return Err(LogError::InvalidCoverage(crate::rational::format_rational(
                &coverage,
            )));
        }
        let total = self.num_traces() as i128;
        let mut ranked: Vec<(&Trace, u64)> = self.variants().collect();
        // stable sort keeps lexicographic order among equal counts
        ranked.sort_by_key(|v| std::cmp::Reverse(v.1));
        let (num, den) = (*coverage.numer() as i128, *coverage.denom() as i128);
        let mut kept = EventLog::new();
        let mut covered: i128 = 0;
        for (trace, count) in ranked {
            if covered * den >= num * total {
                break;
            }
            kept.add_trace(trace.clone(), count);
            covered += count as i128;
        }
        Ok(kept)
    }

    /// #(a, L): occurrences of `a`, weighted by multiplicity.
    pub fn activity_count(&self, a: &ActivityLabel) -> u64 {
        self.variants()
            .map(|(t, c)| t.events().iter().filter(|x| *x == a).count() as u64 * c)
            .sum()
    }

    /// #(a, b, L): number of positions where `b` directly follows `a`.
    pub fn direct_succession(&self, a: &ActivityLabel, b: &ActivityLabel) -> u64 {
        self.variants()
            .map(|(t, c)| {
                t.events()
                    .windows(2)
                    .filter(|w| &w[0] == a && &w[1] == b)
                    .count() as u64
                    * c
            })
            .sum()
    }

    /// Strength of the causal relation from `a` to `b`, in (-1, 1).
    pub fn causal_strength(&self, a: &ActivityLabel, b: &ActivityLabel) -> Rational {
        let ab = self.direct_succession(a, b);
        if a == b {
            causal_from_counts(ab, ab, true)
        } else {
            causal_from_counts(ab, self.direct_succession(b, a), false)
        }
    }

    /// Activities of the log whose causal strength towards `a` reaches `threshold`.
    pub fn preceding_set(&self, a: &ActivityLabel, threshold: Rational) -> BTreeSet<ActivityLabel> {
        self.activities
            .iter()
            .filter(|x| self.causal_strength(x, a) >= threshold)
            .cloned()
            .collect()
    }

    /// Activities of the log that `a` causes with strength at least `threshold`.
    pub fn following_set(&self, a: &ActivityLabel, threshold: Rational) -> BTreeSet<ActivityLabel> {
        self.activities
            .iter()
            .filter(|x| self.causal_strength(a, x) >= threshold)
            .cloned()
            .collect()
    }

    /// The log with every trace reversed.
    pub fn reverse(&self) -> EventLog {
        let mut out = EventLog::new();
        for (trace, count) in self.variants() {
            out.add_trace(trace.reversed(), count);
        }
        out
    }

    /// Number of traces starting with each activity.
    pub fn start_activities(&self) -> BTreeMap<ActivityLabel, u64> {
        let mut out = BTreeMap::new();
        for (trace, count) in self.variants() {
            if let Some(a) = trace.first() {
                *out.entry(a.clone()).or_insert(0) += count;
            }
        }
        out
    }

    /// Number of traces ending with each activity.
    pub fn end_activities(&self) -> BTreeMap<ActivityLabel, u64> {
        let mut out = BTreeMap::new();
        for (trace, count) in self.variants() {
            if let Some(a) = trace.last() {
                *out.entry(a.clone()).or_insert(0) += count;
            }
        }
        out
    }

    pub fn build_dfg(&self) -> Dfg {
        Dfg::from_log(self)
    }

    /// Canonical JSON: an array of `{"variant": [...], "count": n}` objects.
    pub fn to_json(&self) -> String {
        let entries: Vec<VariantEntry> = self
            .variants()
            .map(|(t, c)| VariantEntry {
                variant: t.events().to_vec(),
                count: c,
            })
            .collect();
        serde_json::to_string_pretty(&entries).expect("log serialization cannot fail")
    }

    pub fn from_json(input: &str) -> Result<EventLog, LogError> {
        let entries: Vec<VariantEntry> = serde_json::from_str(input)?;
        let mut log = EventLog::new();
        for e in entries {
            log.add_trace(Trace(e.variant), e.count);
        }
        Ok(log)
    }
}

pub(crate) fn causal_from_counts(ab: u64, ba: u64, same: bool) -> Rational {
    if same {
        Ratio::new(ab as i64, ab as i64 + 1)
    } else {
        Ratio::new(ab as i64 - ba as i64, ab as i64 + ba as i64 + 1)
    }
}

/// Result of reading a log from an external format.
#[derive(Debug, Clone, Default)]
pub struct ParsedLog {
    pub log: EventLog,
    /// Events or rows dropped while reading (missing name, bad timestamp, ...).
    pub skipped: usize,
    pub warnings: Vec<String>,
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::EventLog;

    /// The ten-trace running example used throughout the ordering tests.
    pub fn running_example() -> EventLog {
        EventLog::from_variants(
            [
                "bcdefg", "becdfg", "becfgd", "becfdg", "bcedfg", "bcefgd", "bcefdg", "ebcdfg",
                "ebcfgd", "ebcfdg",
            ]
            .iter()
            .map(|s| (s.chars().map(|c| c.to_string()).collect::<Vec<_>>(), 1)),
        )
    }

    pub fn xyz_log() -> EventLog {
        EventLog::from_variants([(vec!["x", "y", "z"], 66), (vec!["x", "z"], 66)])
    }
}

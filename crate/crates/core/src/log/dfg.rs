use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::{causal_from_counts, ActivityLabel, EventLog};
use crate::rational::Rational;

/// Directly-follows graph with occurrence, start and end counts.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Dfg {
    pub nodes: BTreeSet<ActivityLabel>,
    pub arcs: BTreeMap<(ActivityLabel, ActivityLabel), u64>,
    pub start_counts: BTreeMap<ActivityLabel, u64>,
    pub end_counts: BTreeMap<ActivityLabel, u64>,
    pub activity_counts: BTreeMap<ActivityLabel, u64>,
}

impl Dfg {
    pub fn from_log(log: &EventLog) -> Dfg {
        let mut dfg = Dfg {
            nodes: log.activities().clone(),
            ..Dfg::default()
        };
        for (trace, count) in log.variants() {
            let events = trace.events();
            for a in events {
                *dfg.activity_counts.entry(a.clone()).or_insert(0) += count;
            }
            for w in events.windows(2) {
                *dfg.arcs.entry((w[0].clone(), w[1].clone())).or_insert(0) += count;
            }
            if let (Some(first), Some(last)) = (events.first(), events.last()) {
                *dfg.start_counts.entry(first.clone()).or_insert(0) += count;
                *dfg.end_counts.entry(last.clone()).or_insert(0) += count;
            }
        }
        dfg
    }

    pub fn weight(&self, a: &ActivityLabel, b: &ActivityLabel) -> u64 {
        self.arcs.get(&(a.clone(), b.clone())).copied().unwrap_or(0)
    }

    pub fn frequency(&self, a: &ActivityLabel) -> u64 {
        self.activity_counts.get(a).copied().unwrap_or(0)
    }

    pub fn start_count(&self, a: &ActivityLabel) -> u64 {
        self.start_counts.get(a).copied().unwrap_or(0)
    }

    /// Direct successors of `a` with their arc weights.
    pub fn successors<'a>(
        &'a self,
        a: &'a ActivityLabel,
    ) -> impl Iterator<Item = (&'a ActivityLabel, u64)> + 'a {
        self.arcs
            .range((a.clone(), ActivityLabel::new(""))..)
            .take_while(move |((x, _), _)| x == a)
            .map(|((_, b), w)| (b, *w))
    }

    pub fn causal_strength(&self, a: &ActivityLabel, b: &ActivityLabel) -> Rational {
        let ab = self.weight(a, b);
        if a == b {
            causal_from_counts(ab, ab, true)
        } else {
            causal_from_counts(ab, self.weight(b, a), false)
        }
    }

    pub fn preceding_set(&self, a: &ActivityLabel, threshold: Rational) -> BTreeSet<ActivityLabel> {
        self.nodes
            .iter()
            .filter(|x| self.causal_strength(x, a) >= threshold)
            .cloned()
            .collect()
    }

    pub fn following_set(&self, a: &ActivityLabel, threshold: Rational) -> BTreeSet<ActivityLabel> {
        self.nodes
            .iter()
            .filter(|x| self.causal_strength(a, x) >= threshold)
            .cloned()
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::log::fixtures::running_example;
    use proptest::prelude::*;

    fn l(s: &str) -> ActivityLabel {
        ActivityLabel::new(s)
    }

    #[test]
    fn running_example_arc() {
        let dfg = running_example().build_dfg();
        assert_eq!(dfg.weight(&l("b"), &l("c")), 7);
        let succ: Vec<_> = dfg
            .successors(&l("b"))
            .map(|(x, w)| (x.as_str().to_owned(), w))
            .collect();
        assert_eq!(succ, vec![("c".to_owned(), 7), ("e".to_owned(), 3)]);
    }

    #[test]
    fn empty_and_singleton() {
        let empty = EventLog::new().build_dfg();
        assert!(empty.nodes.is_empty() && empty.arcs.is_empty());
        let one = EventLog::from_variants([(vec!["a"], 1)]).build_dfg();
        assert_eq!(one.nodes.len(), 1);
        assert!(one.arcs.is_empty());
        assert_eq!(one.start_counts.get(&l("a")), Some(&1));
        assert_eq!(one.end_counts.get(&l("a")), Some(&1));
    }

    fn small_log() -> impl Strategy<Value = EventLog> {
        prop::collection::vec(
            (
                prop::collection::vec(prop::sample::select(vec!["a", "b", "c", "d"]), 0..6),
                1u64..4,
            ),
            0..6,
        )
        .prop_map(EventLog::from_variants)
    }

    proptest! {
        #[test]
        fn dfg_agrees_with_direct_counting(log in small_log()) {
            let dfg = log.build_dfg();
            for a in log.activities() {
                prop_assert_eq!(dfg.frequency(a), log.activity_count(a));
                for b in log.activities() {
                    prop_assert_eq!(dfg.weight(a, b), log.direct_succession(a, b));
                    prop_assert_eq!(dfg.causal_strength(a, b), log.causal_strength(a, b));
                }
            }
            prop_assert!(dfg.arcs.values().all(|w| *w >= 1));
        }

        #[test]
        fn statistics_invariants(log in small_log()) {
            let rev = log.reverse();
            for a in log.activities() {
                for b in log.activities() {
                    let ab = log.direct_succession(a, b);
                    prop_assert_eq!(ab, rev.direct_succession(b, a));
                    if a != b {
                        prop_assert!(ab <= log.activity_count(a));
                        prop_assert!(ab <= log.activity_count(b));
                        prop_assert_eq!(log.causal_strength(a, b), -log.causal_strength(b, a));
                    }
                }
            }
        }

        #[test]
        fn projection_is_idempotent_and_shrinking(log in small_log(), mask in 0u8..16) {
            let keep: BTreeSet<ActivityLabel> = ["a", "b", "c", "d"]
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, s)| l(s))
                .collect();
            let once = log.project(&keep);
            prop_assert_eq!(once.project(&keep), once.clone());
            prop_assert!(once.num_events() <= log.num_events());
            prop_assert_eq!(once.num_traces(), log.num_traces());
        }

        #[test]
        fn threshold_monotonicity(log in small_log(), lo in 0i64..10, hi in 0i64..10) {
            let (lo, hi) = (lo.min(hi), lo.max(hi));
            let (c1, c2) = (Rational::new(lo, 10), Rational::new(hi, 10));
            for a in log.activities() {
                prop_assert!(log.preceding_set(a, c2).is_subset(&log.preceding_set(a, c1)));
                prop_assert!(log.following_set(a, c2).is_subset(&log.following_set(a, c1)));
            }
        }
    }
}

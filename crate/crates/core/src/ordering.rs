//! Activity orderings: the sequence in which the miner inserts activities.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Serialize, Serializer};

use crate::log::{ActivityLabel, Dfg, EventLog};

/// Permutation of the activities of a log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ActivityOrder {
    pub activities: Vec<ActivityLabel>,
    /// Set when the directly-follows graph did not reach every activity and
    /// the remainder was appended by frequency.
    pub disconnected: bool,
}

impl ActivityOrder {
    pub fn len(&self) -> usize {
        self.activities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.activities.is_empty()
    }

    pub fn as_strs(&self) -> Vec<&str> {
        self.activities.iter().map(|a| a.as_str()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OrderingKind {
    Frequency,
    Bfs,
    Dfs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Start,
    End,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct OrderingStrategy {
    pub kind: OrderingKind,
    /// Ignored for [`OrderingKind::Frequency`].
    pub direction: Direction,
}

impl OrderingStrategy {
    pub const FREQUENCY: Self = Self::new(OrderingKind::Frequency, Direction::Start);
    pub const BFS_START: Self = Self::new(OrderingKind::Bfs, Direction::Start);
    pub const BFS_END: Self = Self::new(OrderingKind::Bfs, Direction::End);
    pub const DFS_START: Self = Self::new(OrderingKind::Dfs, Direction::Start);
    pub const DFS_END: Self = Self::new(OrderingKind::Dfs, Direction::End);

    pub const ALL: [Self; 5] = [
        Self::FREQUENCY,
        Self::BFS_START,
        Self::BFS_END,
        Self::DFS_START,
        Self::DFS_END,
    ];

    pub const fn new(kind: OrderingKind, direction: Direction) -> Self {
        Self { kind, direction }
    }

    pub fn name(&self) -> &'static str {
        match (self.kind, self.direction) {
            (OrderingKind::Frequency, _) => "freq",
            (OrderingKind::Bfs, Direction::Start) => "bfs-start",
            (OrderingKind::Bfs, Direction::End) => "bfs-end",
            (OrderingKind::Dfs, Direction::Start) => "dfs-start",
            (OrderingKind::Dfs, Direction::End) => "dfs-end",
        }
    }
}

impl Default for OrderingStrategy {
    fn default() -> Self {
        Self::FREQUENCY
    }
}

impl fmt::Display for OrderingStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Serialize for OrderingStrategy {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl FromStr for OrderingStrategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|o| o.name() == s)
            .or_else(|| (s == "frequency").then_some(Self::FREQUENCY))
            .ok_or_else(|| {
                format!(
                    "unknown ordering `{s}`; expected one of {}",
                    Self::ALL.map(|o| o.name()).join(", ")
                )
            })
    }
}

/// Activities directly following `a`, strongest first, ties alphabetical.
pub fn sort_dfa(a: &ActivityLabel, log: &EventLog) -> Vec<ActivityLabel> {
    sort_dfa_in(a, &log.build_dfg())
}

fn sort_dfa_in(a: &ActivityLabel, dfg: &Dfg) -> Vec<ActivityLabel> {
    let mut succ: Vec<(&ActivityLabel, u64)> = dfg.successors(a).collect();
    succ.sort_by(|x, y| y.1.cmp(&x.1).then_with(|| x.0.cmp(y.0)));
    succ.into_iter().map(|(b, _)| b.clone()).collect()
}

fn frequency_sorted(dfg: &Dfg) -> Vec<ActivityLabel> {
    let mut acts: Vec<&ActivityLabel> = dfg.nodes.iter().collect();
    acts.sort_by(|a, b| {
        dfg.frequency(b)
            .cmp(&dfg.frequency(a))
            .then_with(|| a.cmp(b))
    });
    acts.into_iter().cloned().collect()
}

/// Descending frequency, ties alphabetical.
pub fn order_frequency(log: &EventLog) -> ActivityOrder {
    ActivityOrder {
        activities: frequency_sorted(&log.build_dfg()),
        disconnected: false,
    }
}

/// Start activities, most often first; ties by overall frequency, then name.
fn ranked_start_activities(dfg: &Dfg) -> Vec<ActivityLabel> {
    let mut starts: Vec<&ActivityLabel> = dfg.start_counts.keys().collect();
    starts.sort_by(|a, b| {
        dfg.start_count(b)
            .cmp(&dfg.start_count(a))
            .then_with(|| dfg.frequency(b).cmp(&dfg.frequency(a)))
            .then_with(|| a.cmp(b))
    });
    starts.into_iter().cloned().collect()
}

/// Appends the unplaced activities by frequency. Returns whether any were missing.
fn complete(sigma: &mut Vec<ActivityLabel>, dfg: &Dfg) -> bool {
    let placed: BTreeSet<ActivityLabel> = sigma.iter().cloned().collect();
    let rest: Vec<ActivityLabel> = frequency_sorted(dfg)
        .into_iter()
        .filter(|a| !placed.contains(a))
        .collect();
    if rest.is_empty() {
        return false;
    }
    log::warn!(
        "the directly-follows graph does not reach {} activities; appending them by frequency",
        rest.len()
    );
    sigma.extend(rest);
    true
}

/// Breadth-first over the directly-follows graph from the start activities.
pub fn order_bfs(log: &EventLog) -> ActivityOrder {
    let dfg = log.build_dfg();
    let total = dfg.nodes.len();
    let mut sigma = ranked_start_activities(&dfg);
    let mut placed: BTreeSet<ActivityLabel> = sigma.iter().cloned().collect();
    let mut i = 0;
    while sigma.len() != total && i < sigma.len() {
        let next: Vec<ActivityLabel> = sort_dfa_in(&sigma[i], &dfg)
            .into_iter()
            .filter(|b| !placed.contains(b))
            .collect();
        placed.extend(next.iter().cloned());
        sigma.extend(next);
        i += 1;
    }
    let disconnected = complete(&mut sigma, &dfg);
    ActivityOrder {
        activities: sigma,
        disconnected,
    }
}

/// Depth-first over the directly-follows graph, backtracking through a stack
/// of discovered but unplaced activities.
pub fn order_dfs(log: &EventLog) -> ActivityOrder {
    let dfg = log.build_dfg();
    let total = dfg.nodes.len();
    let mut stack = ranked_start_activities(&dfg);
    let mut sigma: Vec<ActivityLabel> = Vec::new();
    if !stack.is_empty() {
        sigma.push(stack.remove(0));
    }
    let mut placed: BTreeSet<ActivityLabel> = sigma.iter().cloned().collect();
    while sigma.len() != total && !sigma.is_empty() {
        let last = sigma.last().expect("nonempty");
        let follow: Vec<ActivityLabel> = sort_dfa_in(last, &dfg)
            .into_iter()
            .filter(|b| !placed.contains(b))
            .collect();
        let chosen = match follow.first() {
            Some(f) => f.clone(),
            None => match stack.first() {
                Some(s) => s.clone(),
                None => break,
            },
        };
        placed.insert(chosen.clone());
        sigma.push(chosen);
        // new discoveries go on top, the old stack keeps its order below them
        let mut next: Vec<ActivityLabel> = follow
            .into_iter()
            .filter(|b| !placed.contains(b) && !stack.contains(b))
            .collect();
        next.extend(stack.into_iter().filter(|b| !placed.contains(b)));
        stack = next;
    }
    let disconnected = complete(&mut sigma, &dfg);
    ActivityOrder {
        activities: sigma,
        disconnected,
    }
}

/// Applies `strategy`; the end direction runs on the reversed log.
pub fn make_order(log: &EventLog, strategy: OrderingStrategy) -> ActivityOrder {
    match (strategy.kind, strategy.direction) {
        (OrderingKind::Frequency, _) => order_frequency(log),
        (OrderingKind::Bfs, Direction::Start) => order_bfs(log),
        (OrderingKind::Dfs, Direction::Start) => order_dfs(log),
        (OrderingKind::Bfs, Direction::End) => order_bfs(&log.reverse()),
        (OrderingKind::Dfs, Direction::End) => order_dfs(&log.reverse()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::log::fixtures::running_example;
    use proptest::prelude::*;

    fn strs(o: &ActivityOrder) -> String {
        o.activities.iter().map(|a| a.as_str()).collect()
    }

    #[test]
    fn running_example_orders() {
        let log = running_example();
        let got: Vec<String> = OrderingStrategy::ALL
            .iter()
            .map(|s| strs(&make_order(&log, *s)))
            .collect();
        assert_eq!(got, ["bcdefg", "becfdg", "gdfceb", "bcfgde", "gfcbed"]);
    }

    #[test]
    fn sort_dfa_examples() {
        let log = running_example();
        let s = |a: &str| -> String {
            sort_dfa(&a.into(), &log)
                .iter()
                .map(|x| x.as_str())
                .collect()
        };
        assert_eq!(s("b"), "ce");
        assert_eq!(s("c"), "fde");
        assert_eq!(s("z"), "");
    }

    #[test]
    fn small_logs() {
        let one = EventLog::from_variants([(vec!["a"], 1)]);
        assert_eq!(strs(&order_frequency(&one)), "a");
        let two = EventLog::from_variants([(vec!["b"], 2), (vec!["a"], 1)]);
        assert_eq!(strs(&order_frequency(&two)), "ba");
        let seq = EventLog::from_variants([(vec!["a", "b", "c"], 4)]);
        for s in [
            OrderingStrategy::FREQUENCY,
            OrderingStrategy::BFS_START,
            OrderingStrategy::DFS_START,
        ] {
            assert_eq!(strs(&make_order(&seq, s)), "abc");
        }
        assert!(order_bfs(&EventLog::new()).is_empty());
    }

    #[test]
    fn dfs_on_single_trace_is_first_occurrence_order() {
        let log = EventLog::from_variants([(vec!["d", "a", "d", "c", "b", "a"], 1)]);
        assert_eq!(strs(&order_dfs(&log)), "dacb");
    }

    #[test]
    fn unplaced_activities_are_appended_by_frequency() {
        let log = EventLog::from_variants([(vec!["a", "b"], 3), (vec!["c", "a"], 1)]);
        let bfs = order_bfs(&log);
        assert_eq!(strs(&bfs), "acb");
        assert!(!bfs.disconnected);
        let dfg = log.build_dfg();
        let mut sigma = vec![ActivityLabel::new("c")];
        assert!(complete(&mut sigma, &dfg));
        assert_eq!(sigma, ["c", "a", "b"].map(ActivityLabel::new));
        assert!(!complete(&mut sigma, &dfg));
    }

    #[test]
    fn strategy_names_round_trip() {
        for s in OrderingStrategy::ALL {
            assert_eq!(s.name().parse::<OrderingStrategy>().unwrap(), s);
        }
        assert!("sideways".parse::<OrderingStrategy>().is_err());
    }

    fn small_log() -> impl Strategy<Value = EventLog> {
        prop::collection::vec(
            (
                prop::collection::vec(prop::sample::select(vec!["a", "b", "c", "d", "e"]), 0..7),
                1u64..4,
            ),
            0..6,
        )
        .prop_map(EventLog::from_variants)
    }

    proptest! {
        #[test]
        fn every_order_is_a_permutation(log in small_log()) {
            for s in OrderingStrategy::ALL {
                let o = make_order(&log, s);
                let set: BTreeSet<_> = o.activities.iter().cloned().collect();
                prop_assert_eq!(set.len(), o.len());
                prop_assert_eq!(&set, log.activities());
                prop_assert_eq!(make_order(&log, s), o);
            }
        }

        #[test]
        fn bfs_starts_with_start_activities(log in small_log()) {
            let o = order_bfs(&log);
            let starts = log.start_activities();
            let k = starts.len();
            let prefix: BTreeSet<_> = o.activities.iter().take(k).cloned().collect();
            prop_assert_eq!(prefix, starts.keys().cloned().collect::<BTreeSet<_>>());
        }
    }
}

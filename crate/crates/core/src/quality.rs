//! Replay-based quality: token-replay fitness and escaping-edges precision.

use std::collections::{BTreeMap, BTreeSet, HashSet, VecDeque};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::log::{ActivityLabel, EventLog};
use crate::net::{Marking, NodeId, WorkflowNet};

pub const DEFAULT_LOOKAHEAD: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QualityScore {
    pub fitness: f64,
    pub precision: f64,
    pub f1: f64,
}

impl QualityScore {
    pub fn new(fitness: f64, precision: f64) -> Self {
        QualityScore {
            fitness,
            precision,
            f1: f1(fitness, precision),
        }
    }
}

/// Harmonic mean; zero when both inputs are zero.
pub fn f1(fitness: f64, precision: f64) -> f64 {
    if fitness + precision == 0.0 {
        0.0
    } else {
        2.0 * fitness * precision / (fitness + precision)
    }
}

fn big(n: u64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(0.0).clamp(0.0, 1.0)
}

/// Token counters of a replay.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct Tokens {
    produced: u64,
    consumed: u64,
    missing: u64,
}

/// Replay machinery for one net.
pub struct Replayer<'a> {
    wf: &'a WorkflowNet,
    silent: Vec<NodeId>,
    by_label: BTreeMap<&'a ActivityLabel, Vec<NodeId>>,
    lookahead: usize,
}

impl<'a> Replayer<'a> {
    pub fn new(wf: &'a WorkflowNet, lookahead: usize) -> Self {
        let net = &wf.net;
        let mut by_label: BTreeMap<&ActivityLabel, Vec<NodeId>> = BTreeMap::new();
        for t in net.transitions() {
            if let Some(l) = net.label(t) {
                by_label.entry(l).or_default().push(t);
            }
        }
        Replayer {
            wf,
            silent: net.transitions().filter(|t| net.is_silent(*t)).collect(),
            by_label,
            lookahead,
        }
    }

    fn enabled(&self, m: &Marking, t: NodeId) -> bool {
        self.wf.net.preset(t).iter().all(|p| m.get(*p) > 0)
    }

    fn fire(&self, m: &mut Marking, t: NodeId, tokens: &mut Tokens) {
        for p in self.wf.net.preset(t) {
            tokens.missing += u64::from(m.take(*p, 1));
            tokens.consumed += 1;
        }
        for p in self.wf.net.postset(t) {
            m.add(*p, 1);
            tokens.produced += 1;
        }
    }

    /// Shortest sequence of silent firings (at most `lookahead`) leading to a
    /// marking that satisfies `goal`. Ties go to the earliest created transitions.
    fn silent_path(&self, m: &Marking, goal: impl Fn(&Marking) -> bool) -> Option<Vec<NodeId>> {
        if goal(m) {
            return Some(Vec::new());
        }
        let mut seen: HashSet<Marking> = HashSet::from([m.clone()]);
        let mut queue: VecDeque<(Marking, Vec<NodeId>)> = VecDeque::from([(m.clone(), Vec::new())]);
        while let Some((cur, path)) = queue.pop_front() {
            if path.len() >= self.lookahead {
                continue;
            }
            for &t in &self.silent {
                if !self.enabled(&cur, t) {
                    continue;
                }
                let mut next = cur.clone();
                self.fire(&mut next, t, &mut Tokens::default());
                if !seen.insert(next.clone()) {
                    continue;
                }
                let mut p = path.clone();
                p.push(t);
                if goal(&next) {
                    return Some(p);
                }
                queue.push_back((next, p));
            }
        }
        None
    }

    /// Replays one event. Returns `false` if tokens had to be forced.
    fn step(&self, m: &mut Marking, a: &ActivityLabel, tokens: &mut Tokens) -> bool {
        let Some(candidates) = self.by_label.get(a) else {
            // no transition carries the label: one missing, one consumed token
            tokens.missing += 1;
            tokens.consumed += 1;
            return false;
        };
        if let Some(t) = candidates.iter().copied().find(|t| self.enabled(m, *t)) {
            self.fire(m, t, tokens);
            return true;
        }
        if let Some(path) = self.silent_path(m, |x| candidates.iter().any(|t| self.enabled(x, *t)))
        {
            for t in path {
                self.fire(m, t, tokens);
            }
            let t = candidates
                .iter()
                .copied()
                .find(|t| self.enabled(m, *t))
                .expect("lookahead goal");
            self.fire(m, t, tokens);
            return true;
        }
        // force the transition needing the fewest extra tokens
        let missing = |t: NodeId| {
            self.wf
                .net
                .preset(t)
                .iter()
                .filter(|p| m.get(**p) == 0)
                .count()
        };
        let t = candidates
            .iter()
            .copied()
            .min_by_key(|t| (missing(*t), *t))
            .expect("nonempty");
        self.fire(m, t, tokens);
        false
    }

    /// Moves silently to a marking of the sink if possible and consumes the final token.
    fn finish(&self, m: &mut Marking, tokens: &mut Tokens) {
        let sink = self.wf.sink;
        if let Some(path) = self.silent_path(m, |x| x.get(sink) > 0) {
            for t in path {
                self.fire(m, t, tokens);
            }
        }
        tokens.consumed += 1;
        tokens.missing += u64::from(m.take(sink, 1));
    }

    fn replay_trace(&self, trace: &[ActivityLabel]) -> (Tokens, u64) {
        let mut m = self.wf.initial_marking();
        let mut tokens = Tokens {
            produced: 1,
            ..Tokens::default()
        };
        for a in trace {
            self.step(&mut m, a, &mut tokens);
        }
        self.finish(&mut m, &mut tokens);
        (tokens, m.total())
    }

    /// Visible labels reachable through silent firings from `m`, plus whether the
    /// sink can be marked silently.
    fn enabled_labels(&self, m: &Marking) -> (BTreeSet<&'a ActivityLabel>, bool) {
        let mut labels = BTreeSet::new();
        let mut can_end = false;
        let mut seen: HashSet<Marking> = HashSet::from([m.clone()]);
        let mut queue: VecDeque<(Marking, usize)> = VecDeque::from([(m.clone(), 0)]);
        while let Some((cur, depth)) = queue.pop_front() {
            if cur.get(self.wf.sink) > 0 {
                can_end = true;
            }
            for (label, ts) in &self.by_label {
                if ts.iter().any(|t| self.enabled(&cur, *t)) {
                    labels.insert(*label);
                }
            }
            if depth >= self.lookahead {
                continue;
            }
            for &t in &self.silent {
                if self.enabled(&cur, t) {
                    let mut next = cur.clone();
                    self.fire(&mut next, t, &mut Tokens::default());
                    if seen.insert(next.clone()) {
                        queue.push_back((next, depth + 1));
                    }
                }
            }
        }
        (labels, can_end)
    }
}

/// Token-replay fitness `½(1 − m/c) + ½(1 − r/p)` over the whole log, weighted
/// by trace multiplicity.
pub fn replay_fitness(wf: &WorkflowNet, log: &EventLog, lookahead: usize) -> BigRational {
    let replayer = Replayer::new(wf, lookahead);
    let (mut m, mut c, mut r, mut p) = (0u64, 0u64, 0u64, 0u64);
    for (trace, n) in log.variants() {
        let (tokens, remaining) = replayer.replay_trace(trace.events());
        m += n * tokens.missing;
        c += n * tokens.consumed;
        r += n * remaining;
        p += n * tokens.produced;
    }
    if c == 0 || p == 0 {
        return BigRational::one();
    }
    let half = BigRational::new(BigInt::from(1), BigInt::from(2));
    let value = &half * (BigRational::one() - big(m) / big(c))
        + &half * (BigRational::one() - big(r) / big(p));
    value.max(BigRational::zero()).min(BigRational::one())
}

#[derive(Default)]
struct PrefixStats<'a> {
    weight: u64,
    next: BTreeSet<&'a ActivityLabel>,
    ends: bool,
}

/// Escaping-edges precision: one minus the weighted share of enabled but never
/// observed continuations over all replayable prefix states. Ending the trace
/// counts as a continuation.
pub fn precision(wf: &WorkflowNet, log: &EventLog, lookahead: usize) -> BigRational {
    let replayer = Replayer::new(wf, lookahead);
    let mut prefixes: BTreeMap<&[ActivityLabel], PrefixStats<'_>> = BTreeMap::new();
    for (trace, n) in log.variants() {
        let events = trace.events();
        for i in 0..=events.len() {
            let stats = prefixes.entry(&events[..i]).or_default();
            stats.weight += n;
            match events.get(i) {
                Some(a) => {
                    stats.next.insert(a);
                }
                None => stats.ends = true,
            }
        }
    }

    // markings of replayable prefixes; parents sort before their extensions
    let mut markings: BTreeMap<&[ActivityLabel], Marking> = BTreeMap::new();
    let mut escaping = BigRational::zero();
    let mut total = 0u64;
    for (prefix, stats) in &prefixes {
        let marking = match prefix.split_last() {
            None => Some(wf.initial_marking()),
            Some((last, parent)) => markings.get(parent).and_then(|m| {
                let mut m = m.clone();
                replayer
                    .step(&mut m, last, &mut Tokens::default())
                    .then_some(m)
            }),
        };
        let Some(marking) = marking else { continue };
        let (enabled, can_end) = replayer.enabled_labels(&marking);
        let en = enabled.len() + usize::from(can_end);
        if en > 0 {
            let unseen = enabled.iter().filter(|l| !stats.next.contains(*l)).count()
                + usize::from(can_end && !stats.ends);
            escaping +=
                big(stats.weight) * BigRational::new(BigInt::from(unseen), BigInt::from(en));
            total += stats.weight;
        }
        markings.insert(prefix, marking);
    }
    if total == 0 {
        return BigRational::one();
    }
    let value = BigRational::one() - escaping / big(total);
    value.max(BigRational::zero()).min(BigRational::one())
}

pub fn evaluate(wf: &WorkflowNet, log: &EventLog, lookahead: usize) -> QualityScore {
    let fit = replay_fitness(wf, log, lookahead);
    let prec = precision(wf, log, lookahead);
    QualityScore::new(to_f64(&fit), to_f64(&prec))
}

/// Exact scores, for tie-breaking without rounding.
pub fn evaluate_exact(
    wf: &WorkflowNet,
    log: &EventLog,
    lookahead: usize,
) -> (BigRational, BigRational, BigRational) {
    let fit = replay_fitness(wf, log, lookahead);
    let prec = precision(wf, log, lookahead);
    let sum = &fit + &prec;
    let f = if sum.is_zero() {
        BigRational::zero()
    } else {
        BigRational::from_integer(BigInt::from(2)) * &fit * &prec / sum
    };
    (fit, prec, f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::log::fixtures::xyz_log;
    use crate::net::build_workflow_net;

    fn sequence(labels: &[&str]) -> WorkflowNet {
        let mut places = vec!["i".to_owned()];
        let mut transitions = vec![("start".to_owned(), String::new())];
        let mut arcs = vec![("i".to_owned(), "start".to_owned())];
        let mut prev = "start".to_owned();
        for (k, l) in labels.iter().chain(std::iter::once(&"")).enumerate() {
            let p = format!("p{k}");
            let t = if l.is_empty() {
                "end".to_owned()
            } else {
                format!("t{k}")
            };
            places.push(p.clone());
            transitions.push((t.clone(), l.to_string()));
            arcs.push((prev.clone(), p.clone()));
            arcs.push((p, t.clone()));
            prev = t;
        }
        places.push("o".into());
        arcs.push(("end".into(), "o".into()));
        let ps: Vec<&str> = places.iter().map(String::as_str).collect();
        let ts: Vec<(&str, &str)> = transitions
            .iter()
            .map(|(a, b)| (a.as_str(), b.as_str()))
            .collect();
        let ar: Vec<(&str, &str)> = arcs.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
        build_workflow_net(&ps, &ts, &ar).unwrap()
    }

    /// x, then either y or a silent skip, then z.
    fn w3() -> WorkflowNet {
        build_workflow_net(
            &["i", "p1", "p2", "p3", "p4", "o"],
            &[
                ("start", ""),
                ("t1", "x"),
                ("t2", "z"),
                ("t3", "y"),
                ("t4", ""),
                ("end", ""),
            ],
            &[
                ("i", "start"),
                ("start", "p1"),
                ("p1", "t1"),
                ("t1", "p2"),
                ("p2", "t3"),
                ("t3", "p4"),
                ("p2", "t4"),
                ("t4", "p4"),
                ("p4", "t2"),
                ("t2", "p3"),
                ("p3", "end"),
                ("end", "o"),
            ],
        )
        .unwrap()
    }

    fn one() -> BigRational {
        BigRational::one()
    }

    #[test]
    fn f1_examples() {
        assert_eq!(f1(1.0, 1.0), 1.0);
        assert_eq!(f1(1.0, 0.0), 0.0);
        assert_eq!(f1(0.0, 0.0), 0.0);
        assert!((f1(0.990, 0.935) - 0.961).abs() < 0.001);
    }

    #[test]
    fn perfect_sequence() {
        let wf = sequence(&["a", "b", "c"]);
        let log = EventLog::from_variants([(vec!["a", "b", "c"], 4)]);
        assert_eq!(replay_fitness(&wf, &log, 5), one());
        assert_eq!(precision(&wf, &log, 5), one());
    }

    #[test]
    fn missing_label_lowers_fitness() {
        let wf = WorkflowNet::initial();
        let log = EventLog::from_variants([(vec!["a"], 1)]);
        // start and end fire silently: c = 1 + 1 + 1(missing a) + 1(sink) = 4, m = 1, p = 3, r = 0
        assert_eq!(
            replay_fitness(&wf, &log, 5),
            BigRational::new(BigInt::from(7), BigInt::from(8))
        );
    }

    #[test]
    fn xor_with_skip_on_xyz() {
        let wf = w3();
        assert_eq!(replay_fitness(&wf, &xyz_log(), 5), one());
        assert_eq!(precision(&wf, &xyz_log(), 5), one());
    }

    #[test]
    fn flower_is_imprecise() {
        let wf = build_workflow_net(
            &["i", "p1", "o"],
            &[("start", ""), ("a", "a"), ("b", "b"), ("end", "")],
            &[
                ("i", "start"),
                ("start", "p1"),
                ("p1", "a"),
                ("a", "p1"),
                ("p1", "b"),
                ("b", "p1"),
                ("p1", "end"),
                ("end", "o"),
            ],
        )
        .unwrap();
        let log = EventLog::from_variants([(vec!["a", "b"], 3)]);
        assert_eq!(replay_fitness(&wf, &log, 5), one());
        assert!(precision(&wf, &log, 5) < one());
    }

    #[test]
    fn wrong_order_is_penalised() {
        let wf = sequence(&["a", "b"]);
        let log = EventLog::from_variants([(vec!["b", "a"], 1)]);
        let fit = replay_fitness(&wf, &log, 5);
        assert!(fit < one() && fit > BigRational::zero());
    }

    #[test]
    fn exact_and_float_agree() {
        let wf = w3();
        let log = EventLog::from_variants([(vec!["x", "y", "z"], 2), (vec!["x", "z", "y"], 1)]);
        let (fit, prec, f) = evaluate_exact(&wf, &log, 5);
        let score = evaluate(&wf, &log, 5);
        assert!((score.fitness - fit.to_f64().unwrap()).abs() < 1e-12);
        assert!((score.precision - prec.to_f64().unwrap()).abs() < 1e-12);
        assert!((score.f1 - f.to_f64().unwrap()).abs() < 1e-12);
    }
}

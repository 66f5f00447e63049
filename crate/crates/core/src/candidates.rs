//! Candidate nets for inserting one activity, built from rule patterns that
//! stay inside the reduced search space.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Serialize, Serializer};

use crate::log::ActivityLabel;
use crate::net::{canonical_form, NodeId, Soundness, WorkflowNet};
use crate::reduction::NodeSet;
use crate::rules::{
    apply_abstraction, apply_dual_abstraction, apply_linear_place, apply_linear_transition,
    Applied, RuleApplication,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Pattern {
    /// The activity between a fully connected transition and place set.
    Sequence,
    /// An alternative to an existing transition.
    Choice,
    /// A concurrent branch through an implicit place.
    Parallel,
    /// A base candidate plus a silent bypass of the new transition.
    Skip,
    /// A self-loop on a place.
    Loop,
}

impl Pattern {
    pub const ALL: [Pattern; 5] = [
        Pattern::Sequence,
        Pattern::Choice,
        Pattern::Parallel,
        Pattern::Skip,
        Pattern::Loop,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Pattern::Sequence => "seq",
            Pattern::Choice => "choice",
            Pattern::Parallel => "par",
            Pattern::Skip => "skip",
            Pattern::Loop => "loop",
        }
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl Serialize for Pattern {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.tag())
    }
}

impl FromStr for Pattern {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Pattern::ALL
            .into_iter()
            .find(|p| p.tag() == s.trim())
            .ok_or_else(|| {
                format!("unknown pattern `{s}`; expected seq, choice, par, skip or loop")
            })
    }
}

/// Enabled patterns, parsed from a comma separated list of tags.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternSet(BTreeSet<Pattern>);

impl PatternSet {
    pub fn all() -> Self {
        PatternSet(Pattern::ALL.into_iter().collect())
    }

    pub fn contains(&self, p: Pattern) -> bool {
        self.0.contains(&p)
    }

    pub fn iter(&self) -> impl Iterator<Item = Pattern> + '_ {
        self.0.iter().copied()
    }
}

impl Default for PatternSet {
    fn default() -> Self {
        Self::all()
    }
}

impl FromIterator<Pattern> for PatternSet {
    fn from_iter<I: IntoIterator<Item = Pattern>>(iter: I) -> Self {
        PatternSet(iter.into_iter().collect())
    }
}

impl FromStr for PatternSet {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let set = s
            .split(',')
            .filter(|t| !t.trim().is_empty())
            .map(str::parse)
            .collect::<Result<BTreeSet<Pattern>, _>>()?;
        if !set.contains(&Pattern::Sequence) {
            // without plain insertion the first activity could never be placed
            return Err("the pattern set must include `seq`".to_owned());
        }
        Ok(PatternSet(set))
    }
}

impl fmt::Display for PatternSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tags: Vec<&str> = self.iter().map(Pattern::tag).collect();
        f.write_str(&tags.join(","))
    }
}

#[derive(Debug, Clone)]
pub struct CandidateConfig {
    /// Upper bound on `|R|` and `|S|` for the abstraction patterns.
    pub max_subset_size: usize,
    pub patterns: PatternSet,
    /// State budget for the soundness check made on every candidate in debug builds.
    pub soundness_budget: usize,
}

impl Default for CandidateConfig {
    fn default() -> Self {
        CandidateConfig {
            max_subset_size: 3,
            patterns: PatternSet::all(),
            soundness_budget: crate::net::DEFAULT_STATE_BUDGET,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CandidateNet {
    pub net: WorkflowNet,
    pub pattern: Pattern,
    pub applications: Vec<RuleApplication>,
    /// Canonical form relative to the net the candidate was built from.
    pub key: String,
}

struct Collector<'a> {
    base: &'a WorkflowNet,
    seen: HashSet<String>,
    out: Vec<CandidateNet>,
    config: &'a CandidateConfig,
}

impl Collector<'_> {
    fn push(&mut self, net: WorkflowNet, pattern: Pattern, applications: Vec<RuleApplication>) {
        let key = canonical_form(&net, self.base.net.len());
        if !self.seen.insert(key.clone()) {
            return;
        }
        debug_assert!(net.is_free_choice());
        if cfg!(debug_assertions) {
            let verdict = net.soundness(self.config.soundness_budget);
            debug_assert!(
                !matches!(verdict, Soundness::Unsound(_)),
                "candidate from {applications:?} is {verdict}"
            );
        }
        self.out.push(CandidateNet {
            net,
            pattern,
            applications,
            key,
        });
    }

    /// Adds `applied` and, when enabled, its variant with a silent bypass of `t`.
    fn push_with_skip(
        &mut self,
        applied: Applied,
        t: NodeId,
        pattern: Pattern,
        mut prefix: Vec<RuleApplication>,
    ) {
        prefix.push(applied.application.clone());
        if self.config.patterns.contains(Pattern::Skip) {
            let net = &applied.net;
            let pre = net.net.preset(t).to_vec();
            let post = net.net.postset(t).to_vec();
            if let Ok(skip) = apply_linear_transition(net, &pre, &post, None) {
                let mut apps = prefix.clone();
                apps.push(skip.application);
                self.push(applied.net.clone(), pattern, prefix);
                self.push(skip.net, Pattern::Skip, apps);
                return;
            }
        }
        self.push(applied.net, pattern, prefix);
    }
}

/// Nonempty subsets of `items` with at most `max` elements whose members share
/// a nonempty `common` set, paired with that set.
fn subsets_sharing(
    items: &[NodeId],
    max: usize,
    common_of: &dyn Fn(NodeId) -> BTreeSet<NodeId>,
) -> Vec<(Vec<NodeId>, BTreeSet<NodeId>)> {
    fn go(
        items: &[NodeId],
        start: usize,
        max: usize,
        current: &mut Vec<NodeId>,
        common: &BTreeSet<NodeId>,
        common_of: &dyn Fn(NodeId) -> BTreeSet<NodeId>,
        out: &mut Vec<(Vec<NodeId>, BTreeSet<NodeId>)>,
    ) {
        for k in start..items.len() {
            let next: BTreeSet<NodeId> = if current.is_empty() {
                common_of(items[k])
            } else {
                common.intersection(&common_of(items[k])).copied().collect()
            };
            if next.is_empty() {
                continue;
            }
            current.push(items[k]);
            out.push((current.clone(), next.clone()));
            if current.len() < max {
                go(items, k + 1, max, current, &next, common_of, out);
            }
            current.pop();
        }
    }
    let mut out = Vec::new();
    go(
        items,
        0,
        max,
        &mut Vec::new(),
        &BTreeSet::new(),
        common_of,
        &mut out,
    );
    out
}

/// Nonempty subsets of `items` of size at most `max`, in lexicographic order.
fn subsets(items: &[NodeId], max: usize) -> Vec<Vec<NodeId>> {
    let mut out = Vec::new();
    fn go(
        items: &[NodeId],
        start: usize,
        max: usize,
        current: &mut Vec<NodeId>,
        out: &mut Vec<Vec<NodeId>>,
    ) {
        for k in start..items.len() {
            current.push(items[k]);
            out.push(current.clone());
            if current.len() < max {
                go(items, k + 1, max, current, out);
            }
            current.pop();
        }
    }
    go(items, 0, max, &mut Vec::new(), &mut out);
    out
}

/// All pattern instances for inserting `a` into `wf` within `v`, deduplicated
/// by canonical form and in a fixed order.
pub fn generate_candidates(
    wf: &WorkflowNet,
    v: &NodeSet,
    a: &ActivityLabel,
    config: &CandidateConfig,
) -> Vec<CandidateNet> {
    let net = &wf.net;
    let k = config.max_subset_size.max(1);
    let label = Some(a.clone());
    let in_v = |n: &NodeId| v.contains(*n);
    let transitions: Vec<NodeId> = net.transitions().filter(in_v).collect();
    let places: Vec<NodeId> = net.places().filter(in_v).collect();
    let mut col = Collector {
        base: wf,
        seen: HashSet::new(),
        out: Vec::new(),
        config,
    };

    if config.patterns.contains(Pattern::Sequence) {
        let postset_in_v = |n: NodeId| -> BTreeSet<NodeId> {
            net.postset(n).iter().copied().filter(in_v).collect()
        };
        for (r, common) in subsets_sharing(&transitions, k, &postset_in_v) {
            let common: Vec<NodeId> = common.into_iter().collect();
            for s in subsets(&common, k) {
                if let Ok(applied) = apply_abstraction(wf, &r, &s, label.clone()) {
                    let t = applied.added[1];
                    col.push_with_skip(applied, t, Pattern::Sequence, Vec::new());
                }
            }
        }
        for (s, common) in subsets_sharing(&places, k, &postset_in_v) {
            let common: Vec<NodeId> = common.into_iter().collect();
            for r in subsets(&common, k) {
                if let Ok(applied) = apply_dual_abstraction(wf, &s, &r, label.clone()) {
                    let t = applied.added[0];
                    col.push_with_skip(applied, t, Pattern::Sequence, Vec::new());
                }
            }
        }
    }

    if config.patterns.contains(Pattern::Choice) {
        for &t in &transitions {
            let (pre, post) = (net.preset(t), net.postset(t));
            if pre.iter().chain(post).all(in_v) {
                if let Ok(applied) = apply_linear_transition(wf, pre, post, label.clone()) {
                    col.push(applied.net, Pattern::Choice, vec![applied.application]);
                }
            }
        }
    }

    if config.patterns.contains(Pattern::Loop) {
        for &p in &places {
            if let Ok(applied) = apply_linear_transition(wf, &[p], &[p], label.clone()) {
                col.push(applied.net, Pattern::Loop, vec![applied.application]);
            }
        }
    }

    if config.patterns.contains(Pattern::Parallel) {
        // clusters whose transitions all lie in V, each listed once
        let mut clusters: Vec<Vec<NodeId>> = Vec::new();
        for &t in &transitions {
            let cluster: Vec<NodeId> = net.cluster_transitions(t).into_iter().collect();
            if cluster.iter().all(in_v) && !clusters.contains(&cluster) {
                clusters.push(cluster);
            }
        }
        for r in subsets(&transitions, k) {
            for w in &clusters {
                let Ok(place) = apply_linear_place(wf, &r, w) else {
                    continue;
                };
                let q = place.added[0];
                if let Ok(applied) = apply_abstraction(&place.net, &r, &[q], label.clone()) {
                    let t = applied.added[1];
                    col.push_with_skip(
                        applied,
                        t,
                        Pattern::Parallel,
                        vec![place.application.clone()],
                    );
                }
            }
        }
    }

    col.out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::{build_workflow_net, PathMode};
    use crate::rational::Rational;
    use crate::reduction::reduce;

    fn all_nodes(wf: &WorkflowNet) -> NodeSet {
        NodeSet::everything(wf)
    }

    #[test]
    fn initial_net_has_the_plain_insertion() {
        let wf = WorkflowNet::initial();
        let cands = generate_candidates(
            &wf,
            &all_nodes(&wf),
            &"a".into(),
            &CandidateConfig::default(),
        );
        assert!(!cands.is_empty());
        let seq = cands
            .iter()
            .find(|c| {
                c.applications
                    == [RuleApplication::Abstraction {
                        transitions: vec!["start".into()],
                        places: vec!["p1".into()],
                        label: Some("a".into()),
                    }]
            })
            .expect("abstraction on start and p1");
        assert!(seq.net.net.find("p2").is_some() && seq.net.net.find("t1").is_some());
        for c in &cands {
            assert!(c.net.is_free_choice());
            assert!(c.net.is_sound());
            assert_eq!(c.net.visible_labels(), [&ActivityLabel::new("a")]);
        }
    }

    #[test]
    fn candidates_are_unique_and_confined() {
        let wf = build_workflow_net(
            &["i", "p1", "p2", "p3", "o"],
            &[("start", ""), ("t1", "x"), ("t2", "z"), ("end", "")],
            &[
                ("i", "start"),
                ("start", "p1"),
                ("p1", "t1"),
                ("t1", "p2"),
                ("p2", "t2"),
                ("t2", "p3"),
                ("p3", "end"),
                ("end", "o"),
            ],
        )
        .unwrap();
        let log = crate::log::fixtures::xyz_log();
        let v = reduce(
            &"y".into(),
            &log,
            &wf,
            Rational::new(9, 10),
            PathMode::default(),
        );
        let cands = generate_candidates(&wf, &v, &"y".into(), &CandidateConfig::default());
        let keys: HashSet<&String> = cands.iter().map(|c| &c.key).collect();
        assert_eq!(keys.len(), cands.len());
        let allowed: BTreeSet<String> =
            v.nodes.iter().map(|n| wf.net.name(*n).to_owned()).collect();
        for c in &cands {
            // only nodes of V, or nodes created by the candidate itself, may be touched
            for (x, y) in c.net.net.arcs() {
                let old = |n: NodeId| n.0 < wf.net.len();
                if old(x) && old(y) {
                    assert!(wf.net.has_arc(x, y), "new arc between old nodes");
                }
                for n in [x, y] {
                    if old(n) && (!old(x) || !old(y)) {
                        assert!(
                            allowed.contains(wf.net.name(n)),
                            "{} outside V",
                            wf.net.name(n)
                        );
                    }
                }
            }
        }
        // the xor of y with a silent bypass on p2 is among them
        assert!(cands.iter().any(|c| c.pattern == Pattern::Skip));
    }

    #[test]
    fn pattern_sets_parse() {
        let p: PatternSet = "seq,par".parse().unwrap();
        assert!(p.contains(Pattern::Parallel) && !p.contains(Pattern::Loop));
        assert_eq!(p.to_string(), "seq,par");
        assert!("choice".parse::<PatternSet>().is_err());
        assert!("seq,bogus".parse::<PatternSet>().is_err());
    }

    #[test]
    fn sequence_only_config_limits_output() {
        let wf = WorkflowNet::initial();
        let cfg = CandidateConfig {
            patterns: "seq".parse().unwrap(),
            ..CandidateConfig::default()
        };
        let cands = generate_candidates(&wf, &all_nodes(&wf), &"a".into(), &cfg);
        assert!(cands.iter().all(|c| c.pattern == Pattern::Sequence));
        // one abstraction on start and p1, one dual abstraction on p1 and end
        assert_eq!(cands.len(), 2);
    }

    #[test]
    fn subset_enumeration() {
        let ids: Vec<NodeId> = (0..4).map(NodeId).collect();
        assert_eq!(subsets(&ids, 2).len(), 4 + 6);
        assert_eq!(subsets(&ids, 4).len(), 15);
    }
}

//! The four synthesis rules as checked net-to-net transformations.
//!
//! Every rule returns a new net; the input is never modified. The dependence
//! tests run on the short-circuited incidence matrix, i.e. with an extra
//! transition that moves a token from the sink back to the source.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{is_linear_combination, nonnegative_combination};
use crate::log::ActivityLabel;
use crate::net::{NodeId, NodeKind, WorkflowNet};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RuleError {
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("node `{0}` is not a {1}")]
    WrongKind(String, &'static str),
    #[error("parameter set `{0}` is empty")]
    Empty(&'static str),
    #[error("the parameter sets are not fully connected: arc {0} -> {1} is missing")]
    NotConnected(String, String),
    #[error("the new node is not linearly dependent on the existing ones")]
    NotLinearlyDependent,
    #[error("the new place has no nonnegative witness among the existing places")]
    NotImplicit,
    #[error("the new place would be a self-loop on transition `{0}`")]
    SelfLoop(String),
    #[error("the result would not be free-choice")]
    NotFreeChoice,
    #[error("the result would break the workflow structure: {0}")]
    Workflow(String),
}

/// A rule application in terms of node names, for audit trails and replay.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum RuleApplication {
    Abstraction {
        transitions: Vec<String>,
        places: Vec<String>,
        label: Option<ActivityLabel>,
    },
    LinearTransition {
        pre: Vec<String>,
        post: Vec<String>,
        label: Option<ActivityLabel>,
    },
    LinearPlace {
        pre: Vec<String>,
        post: Vec<String>,
    },
    DualAbstraction {
        places: Vec<String>,
        transitions: Vec<String>,
        label: Option<ActivityLabel>,
    },
}

impl RuleApplication {
    pub fn rule_name(&self) -> &'static str {
        match self {
            RuleApplication::Abstraction { .. } => "abstraction",
            RuleApplication::LinearTransition { .. } => "linear_transition",
            RuleApplication::LinearPlace { .. } => "linear_place",
            RuleApplication::DualAbstraction { .. } => "dual_abstraction",
        }
    }
}

/// Result of a successful rule application.
#[derive(Debug, Clone)]
pub struct Applied {
    pub net: WorkflowNet,
    pub application: RuleApplication,
    /// New nodes in creation order.
    pub added: Vec<NodeId>,
}

fn names(wf: &WorkflowNet, ids: &BTreeSet<NodeId>) -> Vec<String> {
    ids.iter().map(|n| wf.net.name(*n).to_owned()).collect()
}

fn collect(
    wf: &WorkflowNet,
    ids: &[NodeId],
    kind: NodeKind,
    what: &'static str,
) -> Result<BTreeSet<NodeId>, RuleError> {
    let set: BTreeSet<NodeId> = ids.iter().copied().collect();
    if set.is_empty() {
        return Err(RuleError::Empty(what));
    }
    for n in &set {
        if n.0 >= wf.net.len() {
            return Err(RuleError::UnknownNode(format!("#{}", n.0)));
        }
        if wf.net.kind(*n) != kind {
            let k = match kind {
                NodeKind::Place => "place",
                NodeKind::Transition => "transition",
            };
            return Err(RuleError::WrongKind(wf.net.name(*n).to_owned(), k));
        }
    }
    Ok(set)
}

fn finish(
    net: WorkflowNet,
    application: RuleApplication,
    added: Vec<NodeId>,
) -> Result<Applied, RuleError> {
    net.validate()
        .map_err(|e| RuleError::Workflow(e.to_string()))?;
    if !net.is_free_choice() {
        return Err(RuleError::NotFreeChoice);
    }
    Ok(Applied {
        net,
        application,
        added,
    })
}

/// ψ_A: replaces the arcs `R × S` by `R -> p -> t -> S` with a new place `p`
/// and a new transition `t`.
pub fn apply_abstraction(
    wf: &WorkflowNet,
    r: &[NodeId],
    s: &[NodeId],
    label: Option<ActivityLabel>,
) -> Result<Applied, RuleError> {
    let r = collect(wf, r, NodeKind::Transition, "R")?;
    let s = collect(wf, s, NodeKind::Place, "S")?;
    for (a, b) in r.iter().flat_map(|a| s.iter().map(move |b| (*a, *b))) {
        if !wf.net.has_arc(a, b) {
            return Err(RuleError::NotConnected(
                wf.net.name(a).into(),
                wf.net.name(b).into(),
            ));
        }
    }
    // the sink may only be fed by the end transition
    if s.contains(&wf.sink) {
        return Err(RuleError::Workflow("S contains the sink place".into()));
    }
    let mut out = wf.clone();
    for a in &r {
        for b in &s {
            out.net.remove_arc(*a, *b);
        }
    }
    let p = out.add_fresh_place();
    let t = out.add_fresh_transition(label.clone());
    for a in &r {
        out.net.add_arc(*a, p).expect("bipartite");
    }
    out.net.add_arc(p, t).expect("bipartite");
    for b in &s {
        out.net.add_arc(t, *b).expect("bipartite");
    }
    let application = RuleApplication::Abstraction {
        transitions: names(wf, &r),
        places: names(wf, &s),
        label,
    };
    finish(out, application, vec![p, t])
}

/// ψ_D: replaces the arcs `S × R` by `S -> t -> p -> R`.
pub fn apply_dual_abstraction(
    wf: &WorkflowNet,
    s: &[NodeId],
    r: &[NodeId],
    label: Option<ActivityLabel>,
) -> Result<Applied, RuleError> {
    let s = collect(wf, s, NodeKind::Place, "S")?;
    let r = collect(wf, r, NodeKind::Transition, "R")?;
    for (a, b) in s.iter().flat_map(|a| r.iter().map(move |b| (*a, *b))) {
        if !wf.net.has_arc(a, b) {
            return Err(RuleError::NotConnected(
                wf.net.name(a).into(),
                wf.net.name(b).into(),
            ));
        }
    }
    // the source may only be consumed by the start transition
    if s.contains(&wf.source) {
        return Err(RuleError::Workflow("S contains the source place".into()));
    }
    let mut out = wf.clone();
    for a in &s {
        for b in &r {
            out.net.remove_arc(*a, *b);
        }
    }
    let t = out.add_fresh_transition(label.clone());
    let p = out.add_fresh_place();
    for a in &s {
        out.net.add_arc(*a, t).expect("bipartite");
    }
    out.net.add_arc(t, p).expect("bipartite");
    for b in &r {
        out.net.add_arc(p, *b).expect("bipartite");
    }
    let application = RuleApplication::DualAbstraction {
        places: names(wf, &s),
        transitions: names(wf, &r),
        label,
    };
    finish(out, application, vec![t, p])
}

/// Short-circuited incidence matrix as columns (one per transition, then the
/// short-circuit) and the place order of the rows.
fn short_circuited_columns(wf: &WorkflowNet) -> (Vec<NodeId>, Vec<Vec<i64>>) {
    let m = wf.incidence_matrix();
    let rows = m.short_circuited(wf.source, wf.sink);
    let ncols = m.transitions.len() + 1;
    let cols = (0..ncols)
        .map(|c| rows.iter().map(|r| r[c]).collect())
        .collect();
    (m.places, cols)
}

/// ψ_T: adds a transition whose incidence column is a rational combination
/// of the existing columns.
pub fn apply_linear_transition(
    wf: &WorkflowNet,
    pre: &[NodeId],
    post: &[NodeId],
    label: Option<ActivityLabel>,
) -> Result<Applied, RuleError> {
    let pre = collect(wf, pre, NodeKind::Place, "pre")?;
    let post = collect(wf, post, NodeKind::Place, "post")?;
    if pre.iter().chain(&post).any(|p| wf.is_boundary_place(*p)) {
        return Err(RuleError::Workflow(
            "the source and sink places are reserved".into(),
        ));
    }
    let (places, columns) = short_circuited_columns(wf);
    let target: Vec<i64> = places
        .iter()
        .map(|p| i64::from(post.contains(p)) - i64::from(pre.contains(p)))
        .collect();
    if !is_linear_combination(&columns, &target) {
        return Err(RuleError::NotLinearlyDependent);
    }
    let mut out = wf.clone();
    let t = out.add_fresh_transition(label.clone());
    for p in &pre {
        out.net.add_arc(*p, t).expect("bipartite");
    }
    for p in &post {
        out.net.add_arc(t, *p).expect("bipartite");
    }
    let application = RuleApplication::LinearTransition {
        pre: names(wf, &pre),
        post: names(wf, &post),
        label,
    };
    finish(out, application, vec![t])
}

/// ψ_P: adds an unmarked place whose incidence row is a combination of the
/// existing rows.
///
/// Rational dependence alone admits places that block their consumers, so
/// the row must in addition be a nonnegative combination of places other
/// than the source. Such a place always holds at least one token whenever a
/// consumer is otherwise enabled, so behaviour is unchanged.
pub fn apply_linear_place(
    wf: &WorkflowNet,
    pre: &[NodeId],
    post: &[NodeId],
) -> Result<Applied, RuleError> {
    let pre = collect(wf, pre, NodeKind::Transition, "pre")?;
    let post = collect(wf, post, NodeKind::Transition, "post")?;
    if let Some(t) = pre.intersection(&post).next() {
        return Err(RuleError::SelfLoop(wf.net.name(*t).to_owned()));
    }
    if pre.contains(&wf.end) {
        return Err(RuleError::Workflow(
            "the end transition may only produce into the sink".into(),
        ));
    }
    if post.contains(&wf.start) {
        return Err(RuleError::Workflow(
            "the start transition may only consume from the source".into(),
        ));
    }
    let m = wf.incidence_matrix();
    let rows = m.short_circuited(wf.source, wf.sink);
    let mut target: Vec<i64> = m
        .transitions
        .iter()
        .map(|t| i64::from(pre.contains(t)) - i64::from(post.contains(t)))
        .collect();
    target.push(0);
    if !is_linear_combination(&rows, &target) {
        return Err(RuleError::NotLinearlyDependent);
    }
    let candidates: Vec<Vec<i64>> = m
        .places
        .iter()
        .zip(&rows)
        .filter(|(p, _)| **p != wf.source)
        .map(|(_, r)| r.clone())
        .collect();
    if nonnegative_combination(&candidates, &target).is_none() {
        return Err(RuleError::NotImplicit);
    }
    let mut out = wf.clone();
    let q = out.add_fresh_place();
    for t in &pre {
        out.net.add_arc(*t, q).expect("bipartite");
    }
    for t in &post {
        out.net.add_arc(q, *t).expect("bipartite");
    }
    let application = RuleApplication::LinearPlace {
        pre: names(wf, &pre),
        post: names(wf, &post),
    };
    finish(out, application, vec![q])
}

/// Replays an application recorded by name.
pub fn apply(wf: &WorkflowNet, application: &RuleApplication) -> Result<Applied, RuleError> {
    let ids = |list: &[String]| -> Result<Vec<NodeId>, RuleError> {
        list.iter()
            .map(|n| {
                wf.net
                    .find(n)
                    .ok_or_else(|| RuleError::UnknownNode(n.clone()))
            })
            .collect()
    };
    match application {
        RuleApplication::Abstraction {
            transitions,
            places,
            label,
        } => apply_abstraction(wf, &ids(transitions)?, &ids(places)?, label.clone()),
        RuleApplication::LinearTransition { pre, post, label } => {
            apply_linear_transition(wf, &ids(pre)?, &ids(post)?, label.clone())
        }
        RuleApplication::LinearPlace { pre, post } => {
            apply_linear_place(wf, &ids(pre)?, &ids(post)?)
        }
        RuleApplication::DualAbstraction {
            places,
            transitions,
            label,
        } => apply_dual_abstraction(wf, &ids(places)?, &ids(transitions)?, label.clone()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn id(wf: &WorkflowNet, name: &str) -> NodeId {
        wf.net.find(name).unwrap()
    }

    /// The four steps of the worked rule example, in order.
    fn sequence() -> Vec<WorkflowNet> {
        let w0 = WorkflowNet::initial();
        let w1 = apply_abstraction(&w0, &[w0.start], &[id(&w0, "p1")], Some("a".into()))
            .unwrap()
            .net;
        let t1 = id(&w1, "t1");
        let w2 =
            apply_linear_transition(&w1, w1.net.preset(t1), w1.net.postset(t1), Some("b".into()))
                .unwrap()
                .net;
        let w3 = apply_linear_place(&w2, &[w2.start], &[w2.end]).unwrap().net;
        let w4 = apply_dual_abstraction(
            &w3,
            &[id(&w3, "p1"), id(&w3, "p3")],
            &[w3.end],
            Some("c".into()),
        )
        .unwrap()
        .net;
        vec![w0, w1, w2, w3, w4]
    }

    #[test]
    fn worked_example_names_and_shapes() {
        let nets = sequence();
        let w1 = &nets[1];
        assert!(w1.net.find("p2").is_some() && w1.net.find("t1").is_some());
        let w2 = &nets[2];
        let m = w2.incidence_matrix();
        assert_eq!(m.column(id(w2, "t2")), m.column(id(w2, "t1")));
        let w3 = &nets[3];
        let p3 = id(w3, "p3");
        assert_eq!(w3.net.preset(p3), [w3.start]);
        assert_eq!(w3.net.postset(p3), [w3.end]);
        let m = w3.incidence_matrix();
        let sum: Vec<i64> = m
            .row(id(w3, "p1"))
            .unwrap()
            .iter()
            .zip(m.row(id(w3, "p2")).unwrap())
            .map(|(a, b)| a + b)
            .collect();
        assert_eq!(m.row(p3).unwrap(), sum.as_slice());
        let w4 = &nets[4];
        let (t3, p4) = (id(w4, "t3"), id(w4, "p4"));
        assert_eq!(w4.net.preset(t3), [id(w4, "p1"), id(w4, "p3")]);
        assert_eq!(w4.net.postset(p4), [w4.end]);
        for w in &nets {
            assert!(w.is_free_choice());
            assert!(w.is_sound(), "{w}");
        }
    }

    #[test]
    fn abstraction_requires_full_connection() {
        let w = &sequence()[1];
        let err = apply_abstraction(w, &[w.start], &[id(w, "p1")], None).unwrap_err();
        assert!(matches!(err, RuleError::NotConnected(..)));
        assert!(matches!(
            apply_abstraction(w, &[], &[id(w, "p1")], None),
            Err(RuleError::Empty(_))
        ));
    }

    #[test]
    fn dual_abstraction_requires_full_connection() {
        let w = WorkflowNet::initial();
        let err = apply_dual_abstraction(&w, &[id(&w, "p1")], &[w.start], None).unwrap_err();
        assert!(matches!(err, RuleError::NotConnected(..)));
    }

    #[test]
    fn arc_deltas() {
        let nets = sequence();
        let d = |a: &WorkflowNet, b: &WorkflowNet| {
            (
                b.net.num_places() as i64 - a.net.num_places() as i64,
                b.net.num_transitions() as i64 - a.net.num_transitions() as i64,
                b.net.num_arcs() as i64 - a.net.num_arcs() as i64,
            )
        };
        assert_eq!(d(&nets[0], &nets[1]), (1, 1, 2));
        assert_eq!(d(&nets[1], &nets[2]), (0, 1, 2));
        assert_eq!(d(&nets[2], &nets[3]), (1, 0, 2));
        // |S|=2, |R|=1: -2 + 2 + 1 + the p->t arc
        assert_eq!(d(&nets[3], &nets[4]), (1, 1, 2));
    }

    #[test]
    fn fresh_place_on_new_pattern_is_rejected() {
        // a transition that only feeds a brand-new, arc-free place is independent
        let mut w = WorkflowNet::initial();
        let lonely = w.add_fresh_place();
        let p1 = id(&w, "p1");
        assert_eq!(
            apply_linear_transition(&w, &[p1], &[lonely], None).unwrap_err(),
            RuleError::NotLinearlyDependent
        );
    }

    #[test]
    fn self_loop_transition_is_dependent() {
        let w = WorkflowNet::initial();
        let p1 = id(&w, "p1");
        let out = apply_linear_transition(&w, &[p1], &[p1], Some("x".into())).unwrap();
        assert!(out.net.is_sound());
    }

    #[test]
    fn dependent_but_blocking_place_is_rejected() {
        // start -> p2 -> a -> p1 -> b -> p3 -> end; a place from b to a has
        // row -row(p1), which is dependent but would deadlock
        let w0 = WorkflowNet::initial();
        let w1 = apply_abstraction(&w0, &[w0.start], &[id(&w0, "p1")], Some("a".into()))
            .unwrap()
            .net;
        let w2 = apply_dual_abstraction(&w1, &[id(&w1, "p1")], &[w1.end], Some("b".into()))
            .unwrap()
            .net;
        let (a, b) = (id(&w2, "t1"), id(&w2, "t2"));
        assert_eq!(
            apply_linear_place(&w2, &[b], &[a]).unwrap_err(),
            RuleError::NotImplicit
        );
        // the same place in the forward direction is fine
        let ok = apply_linear_place(&w2, &[a], &[b]).unwrap();
        assert!(ok.net.is_sound());
    }

    #[test]
    fn orthogonal_place_is_rejected() {
        let w = &sequence()[1];
        // a place fed by ⊤ and never consumed is not in the row space
        let t1 = id(w, "t1");
        let err = apply_linear_place(w, &[w.start], &[t1, w.end]);
        assert!(err.is_err());
    }

    #[test]
    fn boundary_guards() {
        let w = WorkflowNet::initial();
        assert!(matches!(
            apply_abstraction(&w, &[w.end], &[w.sink], None),
            Err(RuleError::Workflow(_))
        ));
        assert!(matches!(
            apply_dual_abstraction(&w, &[w.source], &[w.start], None),
            Err(RuleError::Workflow(_))
        ));
        assert!(matches!(
            apply_linear_transition(&w, &[w.source], &[id(&w, "p1")], None),
            Err(RuleError::Workflow(_))
        ));
    }

    #[test]
    fn replay_by_name() {
        let nets = sequence();
        let w = WorkflowNet::initial();
        let applied = apply_abstraction(&w, &[w.start], &[id(&w, "p1")], Some("a".into())).unwrap();
        let json = serde_json::to_string(&applied.application).unwrap();
        let back: RuleApplication = serde_json::from_str(&json).unwrap();
        assert_eq!(apply(&w, &back).unwrap().net, nets[1]);
    }

    #[test]
    fn abstraction_inverse_round_trip() {
        let w = WorkflowNet::initial();
        let p1 = id(&w, "p1");
        let applied = apply_abstraction(&w, &[w.start], &[p1], None).unwrap();
        let mut back = applied.net.clone();
        for n in applied.added.iter().rev() {
            back.net.remove_node(*n).unwrap();
        }
        back.net.add_arc(w.start, p1).unwrap();
        assert_eq!(back, w);
    }
}

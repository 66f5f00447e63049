//! Search-space reduction: the part of the net where a new activity may go.

use std::collections::BTreeSet;

use serde::Serialize;
use thiserror::Error;

use crate::log::{ActivityLabel, EventLog};
use crate::net::{path_nodes, NodeId, PathMode, Provenance, WorkflowNet};
use crate::rational::Rational;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ReductionError {
    #[error("the net has no nodes besides source and sink")]
    DegenerateNet,
}

/// Nodes of the current net that candidate rules may touch.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NodeSet {
    pub nodes: BTreeSet<NodeId>,
    pub provenance: Provenance,
    pub t_pre: BTreeSet<NodeId>,
    pub t_fol: BTreeSet<NodeId>,
}

impl NodeSet {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn contains(&self, n: NodeId) -> bool {
        self.nodes.contains(&n)
    }

    /// Every node except source and sink, flagged as a fallback.
    pub fn everything(wf: &WorkflowNet) -> NodeSet {
        NodeSet {
            nodes: wf
                .net
                .node_ids()
                .filter(|n| !wf.is_boundary_place(*n))
                .collect(),
            provenance: Provenance::Fallback,
            t_pre: BTreeSet::from([wf.start]),
            t_fol: BTreeSet::from([wf.end]),
        }
    }
}

/// Transitions labeled by one of `labels`, or `default` when `labels` is empty.
/// `None` means labels were given but none occurs in the net.
fn labeled_or(
    wf: &WorkflowNet,
    labels: &BTreeSet<ActivityLabel>,
    default: NodeId,
) -> Option<BTreeSet<NodeId>> {
    if labels.is_empty() {
        return Some(BTreeSet::from([default]));
    }
    let found: BTreeSet<NodeId> = wf
        .net
        .transitions()
        .filter(|t| wf.net.label(*t).is_some_and(|l| labels.contains(l)))
        .collect();
    (!found.is_empty()).then_some(found)
}

/// Nodes on elementary paths from the transitions of `a`'s causal
/// predecessors to those of its causal successors.
///
/// `a` itself is left out of its own predecessor and successor sets since it
/// has no transition yet. When the two transition sets are not connected the
/// whole net (minus source and sink) is returned with `Fallback` provenance.
pub fn reduce(
    a: &ActivityLabel,
    log: &EventLog,
    wf: &WorkflowNet,
    c: Rational,
    mode: PathMode,
) -> NodeSet {
    let mut pre = log.preceding_set(a, c);
    let mut fol = log.following_set(a, c);
    pre.remove(a);
    fol.remove(a);
    let (Some(t_pre), Some(t_fol)) = (labeled_or(wf, &pre, wf.start), labeled_or(wf, &fol, wf.end))
    else {
        log::debug!("causal neighbours of {a} have no transitions; using the whole net");
        return NodeSet::everything(wf);
    };
    let from: Vec<NodeId> = t_pre.iter().copied().collect();
    let to: Vec<NodeId> = t_fol.iter().copied().collect();
    let found = path_nodes(&wf.net, &from, &to, mode);
    debug_assert!(!found.nodes.contains(&wf.source) && !found.nodes.contains(&wf.sink));
    if found.nodes.is_empty() {
        log::debug!("no path between the causal neighbours of {a}; using the whole net");
        return NodeSet::everything(wf);
    }
    NodeSet {
        nodes: found.nodes,
        provenance: found.provenance,
        t_pre,
        t_fol,
    }
}

/// `|V| / (|P ∪ T| − 2)`, the share of the net (without source and sink) kept.
pub fn search_space_ratio(v: &NodeSet, wf: &WorkflowNet) -> Result<Rational, ReductionError> {
    let total = wf.net.len();
    if total <= 2 {
        return Err(ReductionError::DegenerateNet);
    }
    Ok(Rational::new(v.len() as i64, (total - 2) as i64))
}

//! Labeled Petri nets and workflow nets.
//!
//! Nodes live in a single arena indexed by [`NodeId`]; the index is the
//! creation order, which every query and serializer iterates in. Arcs are
//! simple (weight one) and always connect a place with a transition.

mod canonical;
mod dot;
mod incidence;
mod paths;
mod pnml;
mod semantics;
mod soundness;

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::log::ActivityLabel;

pub use canonical::canonical_form;
pub use dot::{parse_dot, to_dot};
pub use incidence::IncidenceMatrix;
pub use paths::{
    path_nodes, reachable_from, reaching_to, PathMode, PathNodes, Provenance, DEFAULT_PATH_BUDGET,
};
pub use pnml::{parse_pnml, to_pnml};
pub use semantics::Marking;
pub use soundness::{check_soundness, Soundness, DEFAULT_STATE_BUDGET};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum NetError {
    #[error("unknown node {0}")]
    UnknownNode(String),
    #[error("arc {0} -> {1} would connect two nodes of the same kind")]
    NotBipartite(String, String),
    #[error("duplicate node name `{0}`")]
    DuplicateName(String),
    #[error("transition {0} is not enabled")]
    NotEnabled(String),
    #[error("not a workflow net: {0}")]
    NotWorkflowNet(String),
    #[error("malformed PNML: {0}")]
    Pnml(String),
    #[error("malformed DOT: {0}")]
    Dot(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct NodeId(pub usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Place,
    Transition,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Node {
    pub name: String,
    pub kind: NodeKind,
    /// `None` on a transition means τ (silent). Always `None` for places.
    pub label: Option<ActivityLabel>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct PetriNet {
    nodes: Vec<Node>,
    pre: Vec<Vec<NodeId>>,
    post: Vec<Vec<NodeId>>,
}

impl PetriNet {
    pub fn new() -> Self {
        Self::default()
    }

    fn push(&mut self, node: Node) -> Result<NodeId, NetError> {
        if self.find(&node.name).is_some() {
            return Err(NetError::DuplicateName(node.name));
        }
        self.nodes.push(node);
        self.pre.push(Vec::new());
        self.post.push(Vec::new());
        Ok(NodeId(self.nodes.len() - 1))
    }

    pub fn add_place(&mut self, name: impl Into<String>) -> Result<NodeId, NetError> {
        self.push(Node {
            name: name.into(),
            kind: NodeKind::Place,
            label: None,
        })
    }

    pub fn add_transition(
        &mut self,
        name: impl Into<String>,
        label: Option<ActivityLabel>,
    ) -> Result<NodeId, NetError> {
        self.push(Node {
            name: name.into(),
            kind: NodeKind::Transition,
            label,
        })
    }

    /// Adds the arc `from -> to`. Returns `false` if it already existed.
    pub fn add_arc(&mut self, from: NodeId, to: NodeId) -> Result<bool, NetError> {
        let (a, b) = (self.try_node(from)?, self.try_node(to)?);
        if a.kind == b.kind {
            return Err(NetError::NotBipartite(a.name.clone(), b.name.clone()));
        }
        let post = &mut self.post[from.0];
        match post.binary_search(&to) {
            Ok(_) => Ok(false),
            Err(pos) => {
                post.insert(pos, to);
                let pre = &mut self.pre[to.0];
                let pos = pre.binary_search(&from).unwrap_err();
                pre.insert(pos, from);
                Ok(true)
            }
        }
    }

    pub fn remove_arc(&mut self, from: NodeId, to: NodeId) -> bool {
        if from.0 >= self.nodes.len() || to.0 >= self.nodes.len() {
            return false;
        }
        match self.post[from.0].binary_search(&to) {
            Ok(pos) => {
                self.post[from.0].remove(pos);
                let pos = self.pre[to.0]
                    .binary_search(&from)
                    .expect("adjacency out of sync");
                self.pre[to.0].remove(pos);
                true
            }
            Err(_) => false,
        }
    }

    /// Removes a node and its arcs; later ids shift down by one.
    pub fn remove_node(&mut self, id: NodeId) -> Result<Node, NetError> {
        self.try_node(id)?;
        for p in self.pre[id.0].clone() {
            self.remove_arc(p, id);
        }
        for s in self.post[id.0].clone() {
            self.remove_arc(id, s);
        }
        let node = self.nodes.remove(id.0);
        self.pre.remove(id.0);
        self.post.remove(id.0);
        let shift = |n: &mut NodeId| {
            if n.0 > id.0 {
                n.0 -= 1;
            }
        };
        for list in self.pre.iter_mut().chain(self.post.iter_mut()) {
            list.iter_mut().for_each(shift);
        }
        Ok(node)
    }

    pub fn has_arc(&self, from: NodeId, to: NodeId) -> bool {
        self.post
            .get(from.0)
            .map(|p| p.binary_search(&to).is_ok())
            .unwrap_or(false)
    }

    fn try_node(&self, id: NodeId) -> Result<&Node, NetError> {
        self.nodes
            .get(id.0)
            .ok_or_else(|| NetError::UnknownNode(format!("#{}", id.0)))
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.0]
    }

    pub fn name(&self, id: NodeId) -> &str {
        &self.nodes[id.0].name
    }

    pub fn kind(&self, id: NodeId) -> NodeKind {
        self.nodes[id.0].kind
    }

    pub fn is_place(&self, id: NodeId) -> bool {
        self.kind(id) == NodeKind::Place
    }

    pub fn is_transition(&self, id: NodeId) -> bool {
        self.kind(id) == NodeKind::Transition
    }

    pub fn label(&self, id: NodeId) -> Option<&ActivityLabel> {
        self.nodes[id.0].label.as_ref()
    }

    pub fn is_silent(&self, id: NodeId) -> bool {
        self.is_transition(id) && self.nodes[id.0].label.is_none()
    }

    pub fn find(&self, name: &str) -> Option<NodeId> {
        self.nodes.iter().position(|n| n.name == name).map(NodeId)
    }

    pub fn preset(&self, id: NodeId) -> &[NodeId] {
        &self.pre[id.0]
    }

    pub fn postset(&self, id: NodeId) -> &[NodeId] {
        &self.post[id.0]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.nodes.len()).map(NodeId)
    }

    pub fn places(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.node_ids().filter(|n| self.is_place(*n))
    }

    pub fn transitions(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.node_ids().filter(|n| self.is_transition(*n))
    }

    pub fn num_places(&self) -> usize {
        self.places().count()
    }

    pub fn num_transitions(&self) -> usize {
        self.transitions().count()
    }

    /// Arcs ordered by source, then target, in creation order.
    pub fn arcs(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.post
            .iter()
            .enumerate()
            .flat_map(|(i, succ)| succ.iter().map(move |s| (NodeId(i), *s)))
    }

    pub fn num_arcs(&self) -> usize {
        self.post.iter().map(Vec::len).sum()
    }

    /// Free-choice: any two transitions sharing an input place have equal presets.
    pub fn is_free_choice(&self) -> bool {
        self.places().all(|p| {
            let consumers = self.postset(p);
            consumers
                .windows(2)
                .all(|w| self.preset(w[0]) == self.preset(w[1]))
        })
    }

    /// Transitions of the cluster of `t`: every transition consuming from `t`'s preset.
    pub fn cluster_transitions(&self, t: NodeId) -> BTreeSet<NodeId> {
        let mut out: BTreeSet<NodeId> = self
            .preset(t)
            .iter()
            .flat_map(|p| self.postset(*p).iter().copied())
            .collect();
        out.insert(t);
        out
    }

    pub fn display_name(&self, id: NodeId) -> String {
        match self.label(id) {
            Some(l) => format!("{}({})", self.name(id), l),
            None => self.name(id).to_owned(),
        }
    }
}

/// Petri net with source place `i`, sink place `o`, and silent start/end
/// transitions `⊤` (the only consumer of `i`) and `⊥` (the only producer of `o`).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct WorkflowNet {
    pub net: PetriNet,
    pub source: NodeId,
    pub sink: NodeId,
    pub start: NodeId,
    pub end: NodeId,
}

pub const SOURCE_NAME: &str = "i";
pub const SINK_NAME: &str = "o";
pub const START_NAME: &str = "start";
pub const END_NAME: &str = "end";

impl WorkflowNet {
    /// `i -> ⊤ -> p1 -> ⊥ -> o`, with silent `⊤` and `⊥`.
    pub fn initial() -> Self {
        let mut net = PetriNet::new();
        let source = net.add_place(SOURCE_NAME).unwrap();
        let start = net.add_transition(START_NAME, None).unwrap();
        let p1 = net.add_place("p1").unwrap();
        let end = net.add_transition(END_NAME, None).unwrap();
        let sink = net.add_place(SINK_NAME).unwrap();
        for (a, b) in [(source, start), (start, p1), (p1, end), (end, sink)] {
            net.add_arc(a, b).unwrap();
        }
        WorkflowNet {
            net,
            source,
            sink,
            start,
            end,
        }
    }

    /// Identifies source, sink, start and end structurally and validates the result.
    pub fn from_net(net: PetriNet) -> Result<Self, NetError> {
        let sources: Vec<_> = net.places().filter(|p| net.preset(*p).is_empty()).collect();
        let sinks: Vec<_> = net
            .places()
            .filter(|p| net.postset(*p).is_empty())
            .collect();
        let (source, sink) = match (sources.as_slice(), sinks.as_slice()) {
            ([s], [o]) => (*s, *o),
            _ => {
                return Err(NetError::NotWorkflowNet(format!(
                    "expected one source and one sink place, found {} and {}",
                    sources.len(),
                    sinks.len()
                )))
            }
        };
        let start = match net.postset(source) {
            [t] => *t,
            _ => {
                return Err(NetError::NotWorkflowNet(
                    "the source place needs exactly one consumer".into(),
                ))
            }
        };
        let end = match net.preset(sink) {
            [t] => *t,
            _ => {
                return Err(NetError::NotWorkflowNet(
                    "the sink place needs exactly one producer".into(),
                ))
            }
        };
        let wf = WorkflowNet {
            net,
            source,
            sink,
            start,
            end,
        };
        wf.validate()?;
        Ok(wf)
    }

    /// Checks the workflow-net conditions.
    pub fn validate(&self) -> Result<(), NetError> {
        let n = &self.net;
        let bad = |m: &str| Err(NetError::NotWorkflowNet(m.to_owned()));
        if !n.is_place(self.source) || !n.is_place(self.sink) {
            return bad("source and sink must be places");
        }
        if !n.is_transition(self.start) || !n.is_transition(self.end) {
            return bad("start and end must be transitions");
        }
        if !n.preset(self.source).is_empty() {
            return bad("the source place has incoming arcs");
        }
        if !n.postset(self.sink).is_empty() {
            return bad("the sink place has outgoing arcs");
        }
        if n.preset(self.start) != [self.source] || n.postset(self.source) != [self.start] {
            return bad("the start transition must be the only consumer of the source, consuming nothing else");
        }
        if n.postset(self.end) != [self.sink] || n.preset(self.sink) != [self.end] {
            return bad(
                "the end transition must be the only producer of the sink, producing nothing else",
            );
        }
        let forward = reachable_from(n, &[self.source]);
        let backward = reaching_to(n, &[self.sink]);
        if let Some(x) = n
            .node_ids()
            .find(|x| !forward.contains(x) || !backward.contains(x))
        {
            return Err(NetError::NotWorkflowNet(format!(
                "node {} is not on a path from source to sink",
                n.name(x)
            )));
        }
        Ok(())
    }

    pub fn is_free_choice(&self) -> bool {
        self.net.is_free_choice()
    }

    pub fn soundness(&self, budget: usize) -> Soundness {
        check_soundness(self, budget)
    }

    pub fn is_sound(&self) -> bool {
        self.soundness(DEFAULT_STATE_BUDGET) == Soundness::Sound
    }

    /// Visible labels of all transitions, in creation order (with repetition).
    pub fn visible_labels(&self) -> Vec<&ActivityLabel> {
        self.net
            .transitions()
            .filter_map(|t| self.net.label(t))
            .collect()
    }

    pub fn transitions_labeled<'a>(
        &'a self,
        label: &'a ActivityLabel,
    ) -> impl Iterator<Item = NodeId> + 'a {
        self.net
            .transitions()
            .filter(move |t| self.net.label(*t) == Some(label))
    }

    /// Whether `id` is one of the two boundary places.
    pub fn is_boundary_place(&self, id: NodeId) -> bool {
        id == self.source || id == self.sink
    }

    pub fn initial_marking(&self) -> Marking {
        Marking::single(self.source)
    }

    pub fn final_marking(&self) -> Marking {
        Marking::single(self.sink)
    }

    fn fresh_name(&self, prefix: char, taken_hint: usize) -> String {
        let mut k = taken_hint.max(1);
        loop {
            let candidate = format!("{prefix}{k}");
            if self.net.find(&candidate).is_none() {
                return candidate;
            }
            k += 1;
        }
    }

    /// Next unused place name `p<k>`.
    pub fn fresh_place_name(&self) -> String {
        self.fresh_name('p', self.net.num_places().saturating_sub(1))
    }

    /// Next unused transition name `t<k>`.
    pub fn fresh_transition_name(&self) -> String {
        self.fresh_name('t', self.net.num_transitions().saturating_sub(1))
    }

    /// Adds a new place, named by the place counter.
    pub fn add_fresh_place(&mut self) -> NodeId {
        let name = self.fresh_place_name();
        self.net.add_place(name).expect("fresh names are unique")
    }

    pub fn add_fresh_transition(&mut self, label: Option<ActivityLabel>) -> NodeId {
        let name = self.fresh_transition_name();
        self.net
            .add_transition(name, label)
            .expect("fresh names are unique")
    }

    pub fn incidence_matrix(&self) -> IncidenceMatrix {
        IncidenceMatrix::of(&self.net)
    }

    pub fn enabled(&self, marking: &Marking) -> Vec<NodeId> {
        semantics::enabled(&self.net, marking)
    }

    pub fn fire(&self, marking: &Marking, t: NodeId) -> Result<Marking, NetError> {
        semantics::fire(&self.net, marking, t)
    }
}

impl fmt::Display for WorkflowNet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (a, b) in self.net.arcs() {
            writeln!(
                f,
                "{} -> {}",
                self.net.display_name(a),
                self.net.display_name(b)
            )?;
        }
        Ok(())
    }
}

/// Builds a workflow net from `(place, transition)` style arc lists. Test helper
/// for hand-drawn nets: `transitions` are `(name, label)` with `""` for τ.
#[doc(hidden)]
pub fn build_workflow_net(
    places: &[&str],
    transitions: &[(&str, &str)],
    arcs: &[(&str, &str)],
) -> Result<WorkflowNet, NetError> {
    let mut net = PetriNet::new();
    for p in places {
        net.add_place(*p)?;
    }
    for (t, l) in transitions {
        let label = (!l.is_empty()).then(|| ActivityLabel::new(*l));
        net.add_transition(*t, label)?;
    }
    for (a, b) in arcs {
        let a = net
            .find(a)
            .ok_or_else(|| NetError::UnknownNode((*a).to_owned()))?;
        let b = net
            .find(b)
            .ok_or_else(|| NetError::UnknownNode((*b).to_owned()))?;
        net.add_arc(a, b)?;
    }
    WorkflowNet::from_net(net)
}

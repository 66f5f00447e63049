use std::collections::BTreeSet;

use serde::Serialize;

use super::{NodeId, PetriNet};

pub const DEFAULT_PATH_BUDGET: usize = 50_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathMode {
    /// Elementary-path enumeration, falling back to `Approx` after `budget` expansions.
    Exact {
        budget: usize,
    },
    Approx,
}

impl Default for PathMode {
    fn default() -> Self {
        PathMode::Exact {
            budget: DEFAULT_PATH_BUDGET,
        }
    }
}

/// How a node set was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Exact,
    Approximated,
    Fallback,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::Exact => "exact",
            Provenance::Approximated => "approximated",
            Provenance::Fallback => "fallback",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathNodes {
    pub nodes: BTreeSet<NodeId>,
    pub provenance: Provenance,
}

pub fn reachable_from(net: &PetriNet, from: &[NodeId]) -> BTreeSet<NodeId> {
    closure(from, |n| net.postset(n))
}

pub fn reaching_to(net: &PetriNet, to: &[NodeId]) -> BTreeSet<NodeId> {
    closure(to, |n| net.preset(n))
}

fn closure<'a>(seeds: &[NodeId], next: impl Fn(NodeId) -> &'a [NodeId]) -> BTreeSet<NodeId> {
    let mut seen: BTreeSet<NodeId> = seeds.iter().copied().collect();
    let mut stack: Vec<NodeId> = seeds.to_vec();
    while let Some(n) = stack.pop() {
        for m in next(n) {
            if seen.insert(*m) {
                stack.push(*m);
            }
        }
    }
    seen
}

/// Nodes lying on some elementary path from a node of `from` to a node of `to`.
///
/// A single node in both sets is a path of length zero.
pub fn path_nodes(net: &PetriNet, from: &[NodeId], to: &[NodeId], mode: PathMode) -> PathNodes {
    let forward = reachable_from(net, from);
    let backward = reaching_to(net, to);
    let approx: BTreeSet<NodeId> = forward.intersection(&backward).copied().collect();
    let budget = match mode {
        PathMode::Approx => {
            return PathNodes {
                nodes: approx,
                provenance: Provenance::Approximated,
            }
        }
        PathMode::Exact { budget } => budget,
    };

    let targets: BTreeSet<NodeId> = to.iter().copied().collect();
    let mut search = Search {
        net,
        targets: &targets,
        relevant: &approx,
        on_path: vec![false; net.len()],
        path: Vec::new(),
        found: BTreeSet::new(),
        expansions: 0,
        budget,
    };
    let starts: BTreeSet<NodeId> = from
        .iter()
        .copied()
        .filter(|x| approx.contains(x))
        .collect();
    for x in starts {
        if search.found.len() == approx.len() {
            break;
        }
        if search.dfs(x).is_err() {
            log::debug!("elementary path search exceeded {budget} expansions; using reachability");
            return PathNodes {
                nodes: approx,
                provenance: Provenance::Approximated,
            };
        }
    }
    PathNodes {
        nodes: search.found,
        provenance: Provenance::Exact,
    }
}

struct Search<'a> {
    net: &'a PetriNet,
    targets: &'a BTreeSet<NodeId>,
    relevant: &'a BTreeSet<NodeId>,
    on_path: Vec<bool>,
    path: Vec<NodeId>,
    found: BTreeSet<NodeId>,
    expansions: usize,
    budget: usize,
}

struct BudgetExceeded;

impl Search<'_> {
    fn dfs(&mut self, x: NodeId) -> Result<(), BudgetExceeded> {
        self.expansions += 1;
        if self.expansions > self.budget {
            return Err(BudgetExceeded);
        }
        self.on_path[x.0] = true;
        self.path.push(x);
        if self.targets.contains(&x) {
            self.found.extend(self.path.iter().copied());
        }
        let mut result = Ok(());
        // once everything relevant is known to be on a path there is nothing left to find
        if self.found.len() < self.relevant.len() {
            for &y in self.net.postset(x) {
                if !self.on_path[y.0] && self.relevant.contains(&y) {
                    result = self.dfs(y);
                    if result.is_err() {
                        break;
                    }
                }
            }
        }
        self.path.pop();
        self.on_path[x.0] = false;
        result
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::build_workflow_net;

    fn ids(net: &PetriNet, names: &[&str]) -> Vec<NodeId> {
        names.iter().map(|n| net.find(n).unwrap()).collect()
    }

    #[test]
    fn singleton_path() {
        let wf = crate::net::WorkflowNet::initial();
        let x = ids(&wf.net, &["p1"]);
        let got = path_nodes(&wf.net, &x, &x, PathMode::default());
        assert_eq!(got.nodes, x.into_iter().collect());
        assert_eq!(got.provenance, Provenance::Exact);
    }

    #[test]
    fn exact_excludes_nodes_only_reachable_through_cycles() {
        // a -> p -> b, with a loop p -> c -> q -> d -> p hanging off p;
        // from {a} to {b}, the loop is on no elementary path, yet reachability admits it
        let wf = build_workflow_net(
            &["i", "p0", "p", "q", "p2", "o"],
            &[
                ("start", ""),
                ("a", "a"),
                ("b", "b"),
                ("c", "c"),
                ("d", "d"),
                ("end", ""),
            ],
            &[
                ("i", "start"),
                ("start", "p0"),
                ("p0", "a"),
                ("a", "p"),
                ("p", "b"),
                ("p", "c"),
                ("c", "q"),
                ("q", "d"),
                ("d", "p"),
                ("b", "p2"),
                ("p2", "end"),
                ("end", "o"),
            ],
        )
        .unwrap();
        let n = &wf.net;
        let exact = path_nodes(n, &ids(n, &["a"]), &ids(n, &["b"]), PathMode::default());
        assert_eq!(exact.nodes, ids(n, &["a", "p", "b"]).into_iter().collect());
        let approx = path_nodes(n, &ids(n, &["a"]), &ids(n, &["b"]), PathMode::Approx);
        assert_eq!(
            approx.nodes,
            ids(n, &["a", "p", "b", "c", "q", "d"])
                .into_iter()
                .collect()
        );
    }

    #[test]
    fn budget_falls_back_to_approximation() {
        let wf = crate::net::WorkflowNet::initial();
        let n = &wf.net;
        let got = path_nodes(n, &[wf.source], &[wf.sink], PathMode::Exact { budget: 2 });
        assert_eq!(got.provenance, Provenance::Approximated);
        assert_eq!(got.nodes.len(), 5);
    }
}

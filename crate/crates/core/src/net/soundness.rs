use std::collections::{HashMap, VecDeque};
use std::fmt;

use serde::Serialize;

use super::semantics::{enabled, fire_unchecked};
use super::{Marking, WorkflowNet};

pub const DEFAULT_STATE_BUDGET: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "status", content = "detail", rename_all = "snake_case")]
pub enum Soundness {
    Sound,
    Unsound(String),
    /// The state space exceeded the budget before a verdict was reached.
    Indeterminate {
        explored: usize,
    },
}

impl Soundness {
    pub fn is_sound(&self) -> bool {
        matches!(self, Soundness::Sound)
    }
}

impl fmt::Display for Soundness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Soundness::Sound => write!(f, "sound"),
            Soundness::Unsound(why) => write!(f, "unsound: {why}"),
            Soundness::Indeterminate { explored } => {
                write!(f, "indeterminate after {explored} markings")
            }
        }
    }
}

/// Explores the reachability graph from `[i]`.
///
/// A marking that strictly covers one of its ancestors means the net is
/// unbounded, which already rules out soundness.
pub fn check_soundness(wf: &WorkflowNet, budget: usize) -> Soundness {
    if let Err(e) = wf.validate() {
        return Soundness::Unsound(e.to_string());
    }
    let net = &wf.net;
    let sink = wf.sink;
    let final_marking = wf.final_marking();

    let mut index: HashMap<Marking, usize> = HashMap::new();
    let mut states: Vec<Marking> = Vec::new();
    let mut parent: Vec<Option<usize>> = Vec::new();
    let mut edges: Vec<Vec<usize>> = Vec::new();
    let mut fired = vec![false; net.len()];
    let mut queue = VecDeque::new();

    let m0 = wf.initial_marking();
    index.insert(m0.clone(), 0);
    states.push(m0);
    parent.push(None);
    edges.push(Vec::new());
    queue.push_back(0usize);

    while let Some(s) = queue.pop_front() {
        let m = states[s].clone();
        if m.get(sink) > 0 && m != final_marking {
            return Soundness::Unsound(format!("improper completion in marking {m}"));
        }
        for t in enabled(net, &m) {
            fired[t.0] = true;
            let next = fire_unchecked(net, &m, t);
            let target = match index.get(&next) {
                Some(&k) => k,
                None => {
                    let mut anc = Some(s);
                    while let Some(a) = anc {
                        if next != states[a] && next.covers(&states[a]) {
                            return Soundness::Unsound(format!(
                                "unbounded: {next} strictly covers {}",
                                states[a]
                            ));
                        }
                        anc = parent[a];
                    }
                    if states.len() >= budget {
                        return Soundness::Indeterminate {
                            explored: states.len(),
                        };
                    }
                    let k = states.len();
                    index.insert(next.clone(), k);
                    states.push(next);
                    parent.push(Some(s));
                    edges.push(Vec::new());
                    queue.push_back(k);
                    k
                }
            };
            edges[s].push(target);
        }
    }

    if let Some(t) = net.transitions().find(|t| !fired[t.0]) {
        return Soundness::Unsound(format!("transition {} is dead", net.name(t)));
    }

    // option to complete: every state reaches [o]
    let Some(&goal) = index.get(&final_marking) else {
        return Soundness::Unsound("the final marking is unreachable".to_owned());
    };
    let mut reverse: Vec<Vec<usize>> = vec![Vec::new(); states.len()];
    for (s, succ) in edges.iter().enumerate() {
        for t in succ {
            reverse[*t].push(s);
        }
    }
    let mut can_finish = vec![false; states.len()];
    can_finish[goal] = true;
    let mut stack = vec![goal];
    while let Some(s) = stack.pop() {
        for p in &reverse[s] {
            if !can_finish[*p] {
                can_finish[*p] = true;
                stack.push(*p);
            }
        }
    }
    if let Some(s) = can_finish.iter().position(|ok| !ok) {
        return Soundness::Unsound(format!(
            "marking {} cannot reach the final marking",
            states[s]
        ));
    }
    Soundness::Sound
}

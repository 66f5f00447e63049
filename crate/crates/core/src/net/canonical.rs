use std::collections::BTreeMap;
use std::fmt::Write;

use super::{NodeKind, WorkflowNet};

/// Name-independent text form of a net, for deduplication and tie-breaking.
///
/// Nodes with index below `base_len` keep their names. Younger nodes are
/// renamed by iterated neighbourhood signatures, so two nets that differ only
/// in how their new nodes happen to be named produce the same string.
pub fn canonical_form(wf: &WorkflowNet, base_len: usize) -> String {
    let net = &wf.net;
    let base_len = base_len.min(net.len());
    let kind_tag = |k: NodeKind| match k {
        NodeKind::Place => 'P',
        NodeKind::Transition => 'T',
    };
    let mut names: Vec<String> = net
        .node_ids()
        .map(|n| {
            let node = net.node(n);
            if n.0 < base_len {
                node.name.clone()
            } else {
                let label = node.label.as_ref().map(|l| l.as_str()).unwrap_or("");
                format!("{}<{}>", kind_tag(node.kind), label)
            }
        })
        .collect();

    // refine signatures of the new nodes until the partition stops changing
    let fresh: Vec<_> = net.node_ids().filter(|n| n.0 >= base_len).collect();
    let mut classes = count_classes(&names, &fresh);
    for _ in 0..fresh.len() {
        let next: Vec<String> = net
            .node_ids()
            .map(|n| {
                if n.0 < base_len {
                    return names[n.0].clone();
                }
                let mut pre: Vec<&str> =
                    net.preset(n).iter().map(|m| names[m.0].as_str()).collect();
                let mut post: Vec<&str> =
                    net.postset(n).iter().map(|m| names[m.0].as_str()).collect();
                pre.sort_unstable();
                post.sort_unstable();
                format!("{}[{}|{}]", names[n.0], pre.join(","), post.join(","))
            })
            .collect();
        let next_classes = count_classes(&next, &fresh);
        names = next;
        if next_classes == classes {
            break;
        }
        classes = next_classes;
    }

    // compress the long signatures into short stable ids
    let mut order: Vec<&String> = fresh.iter().map(|n| &names[n.0]).collect();
    order.sort();
    order.dedup();
    let short: BTreeMap<&String, String> = order
        .into_iter()
        .enumerate()
        .map(|(k, s)| (s, format!("#{k}")))
        .collect();
    let display: Vec<String> = net
        .node_ids()
        .map(|n| {
            if n.0 < base_len {
                names[n.0].clone()
            } else {
                short[&names[n.0]].clone()
            }
        })
        .collect();

    let mut nodes: Vec<String> = net
        .node_ids()
        .map(|n| {
            let node = net.node(n);
            let label = node.label.as_ref().map(|l| l.as_str()).unwrap_or("");
            format!("{} {} {}", kind_tag(node.kind), display[n.0], label)
        })
        .collect();
    nodes.sort();
    let mut arcs: Vec<String> = net
        .arcs()
        .map(|(a, b)| format!("{}>{}", display[a.0], display[b.0]))
        .collect();
    arcs.sort();
    let mut out = String::new();
    for n in nodes {
        let _ = writeln!(out, "{n}");
    }
    for a in arcs {
        let _ = writeln!(out, "{a}");
    }
    out
}

fn count_classes(names: &[String], fresh: &[super::NodeId]) -> usize {
    let mut v: Vec<&String> = fresh.iter().map(|n| &names[n.0]).collect();
    v.sort();
    v.dedup();
    v.len()
}

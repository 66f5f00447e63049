//! GraphViz output, plus a reader for exactly the subset written here.

use std::collections::BTreeMap;
use std::fmt::Write;

use super::{NetError, NodeKind, PetriNet, WorkflowNet};
use crate::log::ActivityLabel;

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

pub fn to_dot(wf: &WorkflowNet) -> String {
    let net = &wf.net;
    let mut out = String::from("digraph wfnet {\n  rankdir=LR;\n");
    for n in net.node_ids() {
        let id = quote(net.name(n));
        match net.kind(n) {
            NodeKind::Place => {
                let _ = writeln!(out, "  {id} [shape=circle, label={}];", quote(net.name(n)));
            }
            NodeKind::Transition => match net.label(n) {
                Some(l) => {
                    let _ = writeln!(out, "  {id} [shape=box, label={}];", quote(l.as_str()));
                }
                None => {
                    let shown = if n == wf.start {
                        "⊤"
                    } else if n == wf.end {
                        "⊥"
                    } else {
                        "τ"
                    };
                    let _ = writeln!(
                        out,
                        "  {id} [shape=box, style=filled, fillcolor=black, fontcolor=white, label={}];",
                        quote(shown)
                    );
                }
            },
        }
    }
    for (a, b) in net.arcs() {
        let _ = writeln!(out, "  {} -> {};", quote(net.name(a)), quote(net.name(b)));
    }
    out.push_str("}\n");
    out
}

/// Reads DOT as produced by [`to_dot`]: one node or edge statement per line.
pub fn parse_dot(text: &str) -> Result<WorkflowNet, NetError> {
    let mut net = PetriNet::new();
    let mut edges = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim().trim_end_matches(';').trim();
        let bad = |m: &str| NetError::Dot(format!("line {}: {m}", lineno + 1));
        if line.is_empty()
            || line.starts_with("digraph")
            || line == "}"
            || line.starts_with("rankdir")
            || line.starts_with("//")
        {
            continue;
        }
        let (first, rest) = take_id(line).ok_or_else(|| bad("expected a quoted id"))?;
        let rest = rest.trim_start();
        if let Some(rest) = rest.strip_prefix("->") {
            let (second, tail) =
                take_id(rest.trim_start()).ok_or_else(|| bad("expected a quoted edge target"))?;
            if !tail.trim().is_empty() {
                return Err(bad("trailing text after edge"));
            }
            edges.push((first, second));
        } else if rest.starts_with('[') && rest.ends_with(']') {
            let attrs =
                parse_attrs(&rest[1..rest.len() - 1]).ok_or_else(|| bad("bad attribute list"))?;
            match attrs.get("shape").map(String::as_str) {
                Some("circle") => {
                    net.add_place(first)?;
                }
                Some("box") => {
                    let silent = attrs.get("style").map(String::as_str) == Some("filled");
                    let label = if silent {
                        None
                    } else {
                        attrs.get("label").map(|l| ActivityLabel::new(l.as_str()))
                    };
                    net.add_transition(first, label)?;
                }
                _ => return Err(bad("node without circle or box shape")),
            }
        } else {
            return Err(bad("unrecognised statement"));
        }
    }
    for (a, b) in edges {
        let from = net
            .find(&a)
            .ok_or_else(|| NetError::UnknownNode(a.clone()))?;
        let to = net
            .find(&b)
            .ok_or_else(|| NetError::UnknownNode(b.clone()))?;
        net.add_arc(from, to)?;
    }
    WorkflowNet::from_net(net)
}

/// Splits a leading quoted string off `s`.
fn take_id(s: &str) -> Option<(String, &str)> {
    let mut chars = s.char_indices();
    if chars.next()?.1 != '"' {
        return None;
    }
    let mut out = String::new();
    let mut escaped = false;
    for (i, c) in chars {
        if escaped {
            out.push(if c == 'n' { '\n' } else { c });
            escaped = false;
        } else if c == '\\' {
            escaped = true;
        } else if c == '"' {
            return Some((out, &s[i + 1..]));
        } else {
            out.push(c);
        }
    }
    None
}

fn parse_attrs(s: &str) -> Option<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    let mut rest = s.trim();
    while !rest.is_empty() {
        let eq = rest.find('=')?;
        let key = rest[..eq].trim().to_owned();
        let after = rest[eq + 1..].trim_start();
        let (value, tail) = if after.starts_with('"') {
            take_id(after)?
        } else {
            let end = after.find(',').unwrap_or(after.len());
            (after[..end].trim().to_owned(), &after[end..])
        };
        out.insert(key, value);
        rest = tail.trim_start().trim_start_matches(',').trim_start();
    }
    Some(out)
}

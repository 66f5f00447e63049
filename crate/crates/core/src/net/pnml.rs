//! PNML (place/transition net) reading and writing.
//!
//! Node ids are the node names. Silent transitions carry an empty name and
//! the `$invisible$` tool-specific marker understood by ProM.

use std::fmt::Write;

use quick_xml::escape::escape;
use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;

use super::{NetError, NodeKind, PetriNet, WorkflowNet};
use crate::log::ActivityLabel;

const INVISIBLE: &str = "$invisible$";

pub fn to_pnml(wf: &WorkflowNet) -> String {
    let net = &wf.net;
    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    out.push_str("<pnml>\n");
    out.push_str("  <net id=\"net1\" type=\"http://www.pnml.org/version-2009/grammar/ptnet\">\n");
    out.push_str("    <page id=\"page1\">\n");
    for n in net.node_ids() {
        let id = escape(net.name(n));
        match net.kind(n) {
            NodeKind::Place => {
                let _ = write!(
                    out,
                    "      <place id=\"{id}\">\n        <name><text>{id}</text></name>\n"
                );
                if n == wf.source {
                    out.push_str("        <initialMarking><text>1</text></initialMarking>\n");
                }
                out.push_str("      </place>\n");
            }
            NodeKind::Transition => {
                let _ = writeln!(out, "      <transition id=\"{id}\">");
                match net.label(n) {
                    Some(l) => {
                        let _ = writeln!(
                            out,
                            "        <name><text>{}</text></name>",
                            escape(l.as_str())
                        );
                    }
                    None => {
                        out.push_str("        <name><text></text></name>\n");
                        let _ = writeln!(
                            out,
                            "        <toolspecific tool=\"ProM\" version=\"6.4\" activity=\"{INVISIBLE}\"/>"
                        );
                    }
                }
                out.push_str("      </transition>\n");
            }
        }
    }
    for (k, (a, b)) in net.arcs().enumerate() {
        let _ = writeln!(
            out,
            "      <arc id=\"arc{k}\" source=\"{}\" target=\"{}\"/>",
            escape(net.name(a)),
            escape(net.name(b))
        );
    }
    out.push_str("    </page>\n");
    out.push_str("    <finalmarkings>\n      <marking>\n");
    let _ = writeln!(
        out,
        "        <place idref=\"{}\"><text>1</text></place>",
        escape(net.name(wf.sink))
    );
    out.push_str("      </marking>\n    </finalmarkings>\n");
    out.push_str("  </net>\n</pnml>\n");
    out
}

#[derive(Default)]
struct PendingTransition {
    id: String,
    name: Option<String>,
    invisible: bool,
}

/// Parses a PNML net and identifies its workflow structure.
pub fn parse_pnml(text: &str) -> Result<WorkflowNet, NetError> {
    let mut reader = Reader::from_str(text);
    reader.config_mut().trim_text(true);
    let err = |e: String| NetError::Pnml(e);

    let mut net = PetriNet::new();
    let mut arcs: Vec<(String, String)> = Vec::new();
    let mut stack: Vec<Vec<u8>> = Vec::new();
    let mut transition: Option<PendingTransition> = None;

    loop {
        let event = reader.read_event().map_err(|e| err(e.to_string()))?;
        match event {
            Event::Start(ref s) | Event::Empty(ref s) => {
                let empty = matches!(event, Event::Empty(_));
                let name = s.local_name().as_ref().to_vec();
                let in_final = stack.iter().any(|n| n.as_slice() == b"finalmarkings");
                match name.as_slice() {
                    b"place" if !in_final => {
                        let id = attr(s, b"id")?.ok_or_else(|| err("place without id".into()))?;
                        net.add_place(id)?;
                    }
                    b"transition" => {
                        let id =
                            attr(s, b"id")?.ok_or_else(|| err("transition without id".into()))?;
                        transition = Some(PendingTransition {
                            id,
                            ..Default::default()
                        });
                    }
                    b"toolspecific" => {
                        if let Some(t) = transition.as_mut() {
                            if attr(s, b"activity")?.as_deref() == Some(INVISIBLE) {
                                t.invisible = true;
                            }
                        }
                    }
                    b"arc" => {
                        let src =
                            attr(s, b"source")?.ok_or_else(|| err("arc without source".into()))?;
                        let dst =
                            attr(s, b"target")?.ok_or_else(|| err("arc without target".into()))?;
                        arcs.push((src, dst));
                    }
                    _ => {}
                }
                if empty {
                    if name.as_slice() == b"transition" {
                        finish_transition(&mut net, transition.take())?;
                    }
                } else {
                    stack.push(name);
                }
            }
            Event::Text(t) => {
                let depth = stack.len();
                if depth >= 3
                    && stack[depth - 1] == b"text"
                    && stack[depth - 2] == b"name"
                    && stack[depth - 3] == b"transition"
                {
                    if let Some(tr) = transition.as_mut() {
                        let text = t.unescape().map_err(|e| err(e.to_string()))?;
                        tr.name = Some(text.into_owned());
                    }
                }
            }
            Event::End(e) => {
                if e.local_name().as_ref() == b"transition" {
                    finish_transition(&mut net, transition.take())?;
                }
                stack.pop();
            }
            Event::Eof => break,
            _ => {}
        }
    }
    for (a, b) in arcs {
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

fn finish_transition(net: &mut PetriNet, t: Option<PendingTransition>) -> Result<(), NetError> {
    if let Some(t) = t {
        let label = match t.name {
            Some(n) if !n.is_empty() && !t.invisible => Some(ActivityLabel::new(n)),
            _ => None,
        };
        net.add_transition(t.id, label)?;
    }
    Ok(())
}

fn attr(s: &BytesStart<'_>, key: &[u8]) -> Result<Option<String>, NetError> {
    for a in s.attributes() {
        let a = a.map_err(|e| NetError::Pnml(e.to_string()))?;
        if a.key.local_name().as_ref() == key {
            let v = a
                .unescape_value()
                .map_err(|e| NetError::Pnml(e.to_string()))?;
            return Ok(Some(v.into_owned()));
        }
    }
    Ok(None)
}

//! Minimal XES reader: `<trace>`, `<event>` and the event's `concept:name`.
//!
//! Lifecycle transitions and every other attribute are ignored.

use std::io::Read;

use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;

use super::{ActivityLabel, LogError, ParsedLog, Trace};

const NAME_KEY: &str = "concept:name";

pub fn parse_xes<R: Read>(mut input: R) -> Result<ParsedLog, LogError> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    parse_bytes(&bytes)
}

fn parse_bytes(bytes: &[u8]) -> Result<ParsedLog, LogError> {
    let mut reader = Reader::from_reader(bytes);
    reader.config_mut().trim_text(true);
    reader.config_mut().check_end_names = true;

    let mut out = ParsedLog::default();
    let mut stack: Vec<Vec<u8>> = Vec::new();
    let mut current_trace: Option<Vec<ActivityLabel>> = None;
    let mut current_event: Option<Option<ActivityLabel>> = None;
    let mut traces_seen = 0usize;
    let mut buf = Vec::new();

    loop {
        let event = match reader.read_event_into(&mut buf) {
            Ok(ev) => ev,
            Err(err) => {
                return Err(xml_error(
                    bytes,
                    reader.error_position() as usize,
                    err.to_string(),
                ));
            }
        };
        match event {
            Event::Start(start) => {
                let name = start.local_name().as_ref().to_vec();
                open_element(
                    &name,
                    &start,
                    &stack,
                    &mut current_trace,
                    &mut current_event,
                    bytes,
                    &reader,
                )?;
                stack.push(name);
            }
            Event::Empty(start) => {
                let name = start.local_name().as_ref().to_vec();
                open_element(
                    &name,
                    &start,
                    &stack,
                    &mut current_trace,
                    &mut current_event,
                    bytes,
                    &reader,
                )?;
                close_element(
                    &name,
                    &mut current_trace,
                    &mut current_event,
                    &mut out,
                    &mut traces_seen,
                );
            }
            Event::End(end) => {
                let name = end.local_name().as_ref().to_vec();
                stack.pop();
                close_element(
                    &name,
                    &mut current_trace,
                    &mut current_event,
                    &mut out,
                    &mut traces_seen,
                );
            }
            Event::Eof => {
                if !stack.is_empty() {
                    let open = String::from_utf8_lossy(stack.last().unwrap()).into_owned();
                    return Err(xml_error(
                        bytes,
                        bytes.len(),
                        format!("unexpected end of document, <{open}> is not closed"),
                    ));
                }
                break;
            }
            _ => {}
        }
        buf.clear();
    }

    if traces_seen == 0 {
        log::warn!("XES input contains no traces");
        out.warnings.push("the log contains no traces".to_owned());
    }
    if out.skipped > 0 {
        log::warn!("{} events without concept:name were skipped", out.skipped);
        out.warnings.push(format!(
            "{} events without concept:name were skipped",
            out.skipped
        ));
    }
    Ok(out)
}

fn open_element(
    name: &[u8],
    start: &BytesStart<'_>,
    stack: &[Vec<u8>],
    current_trace: &mut Option<Vec<ActivityLabel>>,
    current_event: &mut Option<Option<ActivityLabel>>,
    bytes: &[u8],
    reader: &Reader<&[u8]>,
) -> Result<(), LogError> {
    match name {
        b"trace" => *current_trace = Some(Vec::new()),
        b"event" if current_trace.is_some() => *current_event = Some(None),
        _ => {
            // only attributes that are direct children of <event> name it
            let parent_is_event = stack
                .last()
                .map(|p| p.as_slice() == b"event")
                .unwrap_or(false);
            if parent_is_event && name == b"string" {
                if let Some(slot) = current_event.as_mut() {
                    let mut key = None;
                    let mut value = None;
                    for attr in start.attributes() {
                        let attr = attr.map_err(|e| {
                            xml_error(bytes, reader.buffer_position() as usize, e.to_string())
                        })?;
                        let text = attr
                            .unescape_value()
                            .map_err(|e| {
                                xml_error(bytes, reader.buffer_position() as usize, e.to_string())
                            })?
                            .into_owned();
                        match attr.key.local_name().as_ref() {
                            b"key" => key = Some(text),
                            b"value" => value = Some(text),
                            _ => {}
                        }
                    }
                    if key.as_deref() == Some(NAME_KEY) {
                        if let Some(v) = value {
                            *slot = Some(ActivityLabel::new(v));
                        }
                    }
                }
            }
        }
    }
    Ok(())
}

fn close_element(
    name: &[u8],
    current_trace: &mut Option<Vec<ActivityLabel>>,
    current_event: &mut Option<Option<ActivityLabel>>,
    out: &mut ParsedLog,
    traces_seen: &mut usize,
) {
    match name {
        b"event" => {
            if let Some(ev) = current_event.take() {
                match (ev, current_trace.as_mut()) {
                    (Some(label), Some(trace)) if !label.as_str().is_empty() => trace.push(label),
                    _ => out.skipped += 1,
                }
            }
        }
        b"trace" => {
            if let Some(events) = current_trace.take() {
                out.log.add_trace(Trace::new(events), 1);
                *traces_seen += 1;
            }
        }
        _ => {}
    }
}

fn xml_error(bytes: &[u8], offset: usize, message: String) -> LogError {
    let (line, column) = line_column(bytes, offset);
    LogError::Xml {
        line,
        column,
        message,
    }
}

/// 1-based line and column of a byte offset.
pub(crate) fn line_column(bytes: &[u8], offset: usize) -> (usize, usize) {
    let offset = offset.min(bytes.len());
    let before = &bytes[..offset];
    let line = before.iter().filter(|b| **b == b'\n').count() + 1;
    let column = match before.iter().rposition(|b| *b == b'\n') {
        Some(pos) => offset - pos,
        None => offset + 1,
    };
    (line, column)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::log::EventLog;

    fn xes(body: &str) -> String {
        format!(
            r#"<?xml version="1.0" encoding="UTF-8"?>
<log xes.version="1.0">
  <string key="concept:name" value="demo"/>
{body}
</log>"#
        )
    }

    #[test]
    fn single_trace() {
        let doc = xes(r#"<trace>
    <string key="concept:name" value="case 1"/>
    <event><string key="concept:name" value="a"/><date key="time:timestamp" value="2020-01-01T00:00:00"/></event>
    <event><string key="lifecycle:transition" value="complete"/><string key="concept:name" value="b"/></event>
  </trace>"#);
        let parsed = parse_xes(doc.as_bytes()).unwrap();
        assert_eq!(parsed.log, EventLog::from_variants([(vec!["a", "b"], 1)]));
        assert_eq!(parsed.skipped, 0);
    }

    #[test]
    fn no_traces_is_a_warning() {
        let parsed = parse_xes(xes("").as_bytes()).unwrap();
        assert!(parsed.log.is_empty());
        assert_eq!(parsed.warnings.len(), 1);
    }

    #[test]
    fn multiplicities_are_counted() {
        let ev = |a: &str| format!(r#"<event><string key="concept:name" value="{a}"/></event>"#);
        let trace = |acts: &[&str]| {
            format!(
                "<trace>{}</trace>",
                acts.iter().map(|a| ev(a)).collect::<String>()
            )
        };
        let doc = xes(&[trace(&["a", "b"]), trace(&["a", "c"]), trace(&["a", "b"])].concat());
        let parsed = parse_xes(doc.as_bytes()).unwrap();
        let mut counts: Vec<u64> = parsed.log.variants().map(|(_, c)| c).collect();
        counts.sort();
        assert_eq!(counts, vec![1, 2]);
        assert_eq!(parsed.log.num_traces(), 3);
    }

    #[test]
    fn events_without_name_are_skipped() {
        let doc = xes(
            r#"<trace><event><string key="org:resource" value="r"/></event><event><string key="concept:name" value="a"/></event></trace>"#,
        );
        let parsed = parse_xes(doc.as_bytes()).unwrap();
        assert_eq!(parsed.skipped, 1);
        assert_eq!(parsed.log, EventLog::from_variants([(vec!["a"], 1)]));
    }

    #[test]
    fn nested_concept_name_does_not_rename_event() {
        let doc = xes(
            r#"<trace><event><string key="concept:name" value="a"/><list key="x"><string key="concept:name" value="inner"/></list></event></trace>"#,
        );
        let parsed = parse_xes(doc.as_bytes()).unwrap();
        assert_eq!(parsed.log, EventLog::from_variants([(vec!["a"], 1)]));
    }

    #[test]
    fn malformed_xml_reports_position() {
        let doc = "<log>\n  <trace>\n    <event></trace>\n</log>";
        match parse_xes(doc.as_bytes()) {
            Err(LogError::Xml { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected XML error, got {other:?}"),
        }
        assert!(matches!(
            parse_xes("<log><trace>".as_bytes()),
            Err(LogError::Xml { .. })
        ));
    }

    #[test]
    fn line_column_math() {
        let text = b"ab\ncd";
        assert_eq!(line_column(text, 0), (1, 1));
        assert_eq!(line_column(text, 4), (2, 2));
    }
}

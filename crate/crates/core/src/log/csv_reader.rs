use std::collections::HashMap;
use std::io::Read;

use chrono::{DateTime, NaiveDate, NaiveDateTime};

use super::{ActivityLabel, LogError, ParsedLog, Trace};

/// Column mapping for CSV event logs.
#[derive(Debug, Clone)]
pub struct CsvColumns {
    pub case: String,
    pub activity: String,
    pub time: Option<String>,
}

impl CsvColumns {
    pub fn new(case: impl Into<String>, activity: impl Into<String>, time: Option<String>) -> Self {
        Self {
            case: case.into(),
            activity: activity.into(),
            time,
        }
    }
}

struct Row {
    order: usize,
    time: Option<i128>,
    label: ActivityLabel,
}

/// Reads a CSV log: rows are grouped by case id in order of first appearance.
///
/// With a time column, events of a case are sorted by timestamp and ties keep
/// file order. Rows whose timestamp cannot be parsed are rejected and counted.
pub fn parse_csv<R: Read>(input: R, columns: &CsvColumns) -> Result<ParsedLog, LogError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(input);
    let headers = reader
        .headers()
        .map_err(|e| LogError::Csv(e.to_string()))?
        .clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| LogError::MissingColumn(name.to_owned()))
    };
    let case_idx = find(&columns.case)?;
    let act_idx = find(&columns.activity)?;
    let time_idx = columns.time.as_deref().map(find).transpose()?;

    let mut out = ParsedLog::default();
    let mut case_order: Vec<String> = Vec::new();
    let mut cases: HashMap<String, Vec<Row>> = HashMap::new();

    for (order, record) in reader.records().enumerate() {
        let record = record.map_err(|e| LogError::Csv(e.to_string()))?;
        let (Some(case), Some(activity)) = (record.get(case_idx), record.get(act_idx)) else {
            out.skipped += 1;
            continue;
        };
        let activity = activity.trim();
        if activity.is_empty() {
            out.skipped += 1;
            continue;
        }
        let time = match time_idx {
            Some(idx) => match record.get(idx).and_then(parse_timestamp) {
                Some(t) => Some(t),
                None => {
                    out.skipped += 1;
                    continue;
                }
            },
            None => None,
        };
        let case = case.trim().to_owned();
        let rows = cases.entry(case.clone()).or_insert_with(|| {
            case_order.push(case);
            Vec::new()
        });
        rows.push(Row {
            order,
            time,
            label: ActivityLabel::new(activity),
        });
    }

    for case in case_order {
        let mut rows = cases.remove(&case).unwrap_or_default();
        if time_idx.is_some() {
            rows.sort_by_key(|r| (r.time, r.order));
        }
        out.log
            .add_trace(Trace::new(rows.into_iter().map(|r| r.label).collect()), 1);
    }
    if out.skipped > 0 {
        log::warn!("{} CSV rows were rejected", out.skipped);
        out.warnings.push(format!("{} rows rejected", out.skipped));
    }
    if out.log.is_empty() {
        out.warnings.push("the log contains no traces".to_owned());
    }
    Ok(out)
}

/// Timestamp as nanoseconds since the epoch; plain numbers are taken as seconds.
fn parse_timestamp(text: &str) -> Option<i128> {
    let text = text.trim();
    if text.is_empty() {
        return None;
    }
    if let Ok(dt) = DateTime::parse_from_rfc3339(text) {
        return dt.timestamp_nanos_opt().map(i128::from);
    }
    const NAIVE: [&str; 4] = [
        "%Y-%m-%d %H:%M:%S%.f",
        "%Y-%m-%dT%H:%M:%S%.f",
        "%Y/%m/%d %H:%M:%S%.f",
        "%d-%m-%Y %H:%M:%S%.f",
    ];
    for fmt in NAIVE {
        if let Ok(dt) = NaiveDateTime::parse_from_str(text, fmt) {
            return dt.and_utc().timestamp_nanos_opt().map(i128::from);
        }
    }
    if let Ok(d) = NaiveDate::parse_from_str(text, "%Y-%m-%d") {
        return d
            .and_hms_opt(0, 0, 0)
            .and_then(|dt| dt.and_utc().timestamp_nanos_opt())
            .map(i128::from);
    }
    if let Ok(n) = text.parse::<i64>() {
        return Some(i128::from(n) * 1_000_000_000);
    }
    text.parse::<f64>()
        .ok()
        .filter(|f| f.is_finite())
        .map(|f| (f * 1e9) as i128)
}

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::Trace;
use crate::translation::xml_escape;

#[derive(Debug, Error)]
pub enum LogError {
    #[error("variant enumeration exceeded {0} traces")]
    Truncated(usize),
    #[error("line {line}: {message}")]
    Malformed { line: u64, message: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Case {
    pub id: String,
    pub trace: Trace,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct EventLog {
    pub cases: Vec<Case>,
}

impl EventLog {
    pub fn from_traces(traces: impl IntoIterator<Item = Trace>) -> Self {
        let cases = traces
            .into_iter()
            .enumerate()
            .map(|(i, trace)| Case { id: format!("c{}", i + 1), trace })
            .collect();
        EventLog { cases }
    }

    pub fn len(&self) -> usize {
        self.cases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cases.is_empty()
    }

    /// Distinct traces with their multiplicities.
    pub fn variants(&self) -> BTreeMap<&Trace, usize> {
        let mut m = BTreeMap::new();
        for c in &self.cases {
            *m.entry(&c.trace).or_default() += 1;
        }
        m
    }
}

/// CSV with columns `case_id, activity, event_index`. A case with an empty
/// trace is one row with empty activity and empty index.
pub fn write_log(log: &EventLog) -> Result<String, LogError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["case_id", "activity", "event_index"])?;
    for c in &log.cases {
        if c.trace.is_empty() {
            w.write_record([c.id.as_str(), "", ""])?;
        }
        for (i, a) in c.trace.iter().enumerate() {
            w.write_record([c.id.as_str(), a.as_str(), i.to_string().as_str()])?;
        }
    }
    let bytes = w.into_inner().map_err(|e| csv::Error::from(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv writer emits the UTF-8 it was given"))
}

type RawEvent = (Option<usize>, String, u64);

/// Reads the CSV written by [`write_log`]. Rows of a case may appear in any
/// order; indices must form 0..n.
pub fn read_log(doc: &str) -> Result<EventLog, LogError> {
    let mut r = csv::Reader::from_reader(doc.as_bytes());
    let headers = r.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["case_id", "activity", "event_index"] {
        return Err(LogError::Malformed { line: 1, message: "expected header case_id,activity,event_index".into() });
    }
    let mut order: Vec<String> = Vec::new();
    let mut events: HashMap<String, Vec<RawEvent>> = HashMap::new();
    for rec in r.records() {
        let rec = rec?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let [case_id, activity, index] = [0, 1, 2].map(|i| rec.get(i).unwrap_or("").to_string());
        if case_id.is_empty() {
            return Err(LogError::Malformed { line, message: "empty case_id".into() });
        }
        let index = if index.trim().is_empty() {
            None
        } else {
            Some(index.trim().parse::<usize>().map_err(|_| LogError::Malformed {
                line,
                message: format!("event_index '{index}' is not a non-negative integer"),
            })?)
        };
        events
            .entry(case_id.clone())
            .or_insert_with(|| {
                order.push(case_id);
                Vec::new()
            })
            .push((index, activity, line));
    }
    let mut cases = Vec::with_capacity(order.len());
    for id in order {
        let mut rows = events.remove(&id).unwrap_or_default();
        if let [(None, a, _)] = rows.as_slice() {
            if a.is_empty() {
                cases.push(Case { id, trace: Vec::new() });
                continue;
            }
        }
        rows.sort_by_key(|r| r.0);
        let mut trace = Vec::with_capacity(rows.len());
        for (k, (idx, a, line)) in rows.into_iter().enumerate() {
            if idx != Some(k) {
                return Err(LogError::Malformed {
                    line,
                    message: format!("case {id}: event indices must run 0..n without gaps"),
                });
            }
            if a.trim().is_empty() {
                return Err(LogError::Malformed { line, message: format!("case {id}: empty activity") });
            }
            trace.push(a);
        }
        cases.push(Case { id, trace });
    }
    Ok(EventLog { cases })
}

/// XES subset: traces and events carrying `concept:name` only.
pub fn write_xes(log: &EventLog) -> String {
    let mut s = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    s.push_str("<log xes.version=\"1.0\" xmlns=\"http://www.xes-standard.org/\">\n");
    s.push_str("  <extension name=\"Concept\" prefix=\"concept\" uri=\"http://www.xes-standard.org/concept.xesext\"/>\n");
    for c in &log.cases {
        let _ = writeln!(s, "  <trace>\n    <string key=\"concept:name\" value=\"{}\"/>", xml_escape(&c.id));
        for a in &c.trace {
            let _ = writeln!(s, "    <event><string key=\"concept:name\" value=\"{}\"/></event>", xml_escape(a));
        }
        s.push_str("  </trace>\n");
    }
    s.push_str("</log>\n");
    s
}

//! Line-delimited JSON event logs.
//!
//! Each event is one line. Keys always appear in this order:
//!
//! ```text
//! {"schema_version":1,"t":3,"user_id":7,"kind":"organic","product_id":2}
//! {"schema_version":1,"t":4,"user_id":7,"kind":"bandit","recommended_id":5,"clicked":true}
//! {"schema_version":1,"t":4,"user_id":7,"kind":"conversion","product_id":2}
//! ```
//!
//! Consecutive lines with the same `user_id` form one timeline.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::env::{Event, EventKind, Timeline};

pub const LOG_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum LogError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: schema_version {found} is not supported (this build reads version {LOG_SCHEMA_VERSION})")]
    Version { line: usize, found: u64 },
}

impl LogError {
    fn at(path: &Path, source: io::Error) -> Self {
        LogError::Io { path: path.to_path_buf(), source }
    }
}

/// One serialized event. Field order is the on-disk key order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogRecord {
    pub schema_version: u32,
    pub t: u32,
    pub user_id: u64,
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub product_id: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recommended_id: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clicked: Option<bool>,
}

impl From<&Event> for LogRecord {
    fn from(e: &Event) -> Self {
        let (kind, product_id, recommended_id, clicked) = match e.kind {
            EventKind::Organic { product } => ("organic", Some(product), None, None),
            EventKind::Bandit { recommended, clicked } => ("bandit", None, Some(recommended), Some(clicked)),
            EventKind::Conversion { product } => ("conversion", Some(product), None, None),
        };
        LogRecord {
            schema_version: LOG_SCHEMA_VERSION,
            t: e.t,
            user_id: e.user_id,
            kind: kind.to_string(),
            product_id,
            recommended_id,
            clicked,
        }
    }
}

impl LogRecord {
    pub fn to_event(&self) -> Result<Event, String> {
        let kind = match (self.kind.as_str(), self.product_id, self.recommended_id, self.clicked) {
            ("organic", Some(product), None, None) => EventKind::Organic { product },
            ("conversion", Some(product), None, None) => EventKind::Conversion { product },
            ("bandit", None, Some(recommended), Some(clicked)) => EventKind::Bandit { recommended, clicked },
            ("organic" | "conversion", ..) => {
                return Err(format!("{} records carry exactly product_id", self.kind));
            }
            ("bandit", ..) => return Err("bandit records carry exactly recommended_id and clicked".into()),
            (other, ..) => return Err(format!("unknown kind {other:?}")),
        };
        Ok(Event { t: self.t, user_id: self.user_id, kind })
    }
}

pub fn write_log_to<W: Write>(timelines: &[Timeline], mut out: W) -> io::Result<()> {
    for event in timelines.iter().flat_map(|t| &t.events) {
        serde_json::to_writer(&mut out, &LogRecord::from(event))?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

pub fn write_log(timelines: &[Timeline], path: &Path) -> Result<(), LogError> {
    let file = File::create(path).map_err(|e| LogError::at(path, e))?;
    write_log_to(timelines, BufWriter::new(file)).map_err(|e| LogError::at(path, e))
}

fn parse_line(line: &str, number: usize) -> Result<Event, LogError> {
    let malformed = |message: String| LogError::Malformed { line: number, message };
    let value: serde_json::Value = serde_json::from_str(line).map_err(|e| malformed(e.to_string()))?;
    // Check the version before the field set, which may legitimately differ
    // in newer versions.
    match value.get("schema_version").and_then(serde_json::Value::as_u64) {
        Some(v) if v == LOG_SCHEMA_VERSION as u64 => {}
        Some(found) => return Err(LogError::Version { line: number, found }),
        None => return Err(malformed("missing or non-integer schema_version".into())),
    }
    let record: LogRecord = serde_json::from_value(value).map_err(|e| malformed(e.to_string()))?;
    record.to_event().map_err(malformed)
}

/// Reads records, starting a new timeline whenever `user_id` changes.
/// Line numbers in errors are 1-based. Blank lines are not allowed.
pub fn read_log_from<R: BufRead>(input: R) -> Result<Vec<Timeline>, LogError> {
    let mut timelines: Vec<Timeline> = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let number = i + 1;
        let line = line.map_err(|e| LogError::Malformed { line: number, message: e.to_string() })?;
        let event = parse_line(&line, number)?;
        match timelines.last_mut() {
            Some(t) if t.user_id == event.user_id => {
                if t.events.last().is_some_and(|prev| prev.t > event.t) {
                    return Err(LogError::Malformed {
                        line: number,
                        message: "step goes backwards within a timeline".into(),
                    });
                }
                t.events.push(event);
            }
            _ => {
                let mut t = Timeline::new(event.user_id);
                t.events.push(event);
                timelines.push(t);
            }
        }
    }
    Ok(timelines)
}

pub fn read_log(path: &Path) -> Result<Vec<Timeline>, LogError> {
    let file = File::open(path).map_err(|e| LogError::at(path, e))?;
    read_log_from(BufReader::new(file))
}

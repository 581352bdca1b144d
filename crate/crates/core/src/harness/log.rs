use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Seed,
    Step,
    Rewire,
    Checkpoint,
    Final,
}

/// One line of `events.jsonl`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    /// Strictly increasing within a run, starting at 0.
    pub seq: u64,
    /// Milliseconds since the run started. The only non-deterministic field.
    pub wall_ms: u64,
    pub kind: EventKind,
    pub payload: Value,
}

/// Append-only JSONL sink, flushed after every record.
pub struct EventLog {
    path: PathBuf,
    file: File,
    next_seq: u64,
    started: Instant,
    wall_offset: u64,
}

impl EventLog {
    /// Creates (or truncates) the log at `path`.
    pub fn create(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
        Ok(EventLog {
            path,
            file,
            next_seq: 0,
            started: Instant::now(),
            wall_offset: 0,
        })
    }

    /// Keeps the records with `seq <= last_seq` and reopens the log for
    /// appending after them.
    pub fn truncate_after(path: impl AsRef<Path>, last_seq: u64) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let records = read_events(&path)?;
        let kept: Vec<&EventRecord> = records.iter().take_while(|r| r.seq <= last_seq).collect();
        let tail = kept
            .last()
            .filter(|r| r.seq == last_seq)
            .ok_or_else(|| Error::SchemaViolation(format!("log has no record {last_seq}")))?;
        let wall_offset = tail.wall_ms;
        let mut text = String::new();
        for r in &kept {
            text.push_str(&serde_json::to_string(r).expect("records serialize"));
            text.push('\n');
        }
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        let file = OpenOptions::new()
            .append(true)
            .open(&path)
            .map_err(|e| Error::io(&path, e))?;
        Ok(EventLog {
            path,
            file,
            next_seq: last_seq + 1,
            started: Instant::now(),
            wall_offset,
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn elapsed_ms(&self) -> u64 {
        self.wall_offset + self.started.elapsed().as_millis() as u64
    }

    /// Appends one record and flushes it. Returns its `seq`.
    pub fn log(&mut self, kind: EventKind, payload: impl Serialize) -> Result<u64> {
        let record = EventRecord {
            seq: self.next_seq,
            wall_ms: self.elapsed_ms(),
            kind,
            payload: serde_json::to_value(payload)
                .map_err(|e| Error::SchemaViolation(e.to_string()))?,
        };
        log_event(&mut self.file, &record).map_err(|e| Error::io(&self.path, e))?;
        self.next_seq += 1;
        Ok(record.seq)
    }
}

/// Writes `record` as one line and flushes.
pub fn log_event(sink: &mut impl Write, record: &EventRecord) -> std::io::Result<()> {
    let line = serde_json::to_string(record).map_err(std::io::Error::other)?;
    sink.write_all(line.as_bytes())?;
    sink.write_all(b"\n")?;
    sink.flush()
}

/// Parses every line of a JSONL log. A torn final line (from a killed
/// run) is ignored.
pub fn read_events(path: impl AsRef<Path>) -> Result<Vec<EventRecord>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let lines: Vec<String> = BufReader::new(file)
        .lines()
        .collect::<std::io::Result<_>>()
        .map_err(|e| Error::io(path, e))?;
    let mut out = Vec::with_capacity(lines.len());
    for (i, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<EventRecord>(line) {
            Ok(r) => out.push(r),
            Err(_) if i + 1 == lines.len() => break,
            Err(e) => {
                return Err(Error::SchemaViolation(format!(
                    "{}:{}: {e}",
                    path.display(),
                    i + 1
                )))
            }
        }
    }
    if out.windows(2).any(|w| w[0].seq >= w[1].seq) {
        return Err(Error::SchemaViolation(format!(
            "{}: seq is not strictly increasing",
            path.display()
        )));
    }
    Ok(out)
}

/// The log text with every `wall_ms` field removed, for byte comparison.
pub fn strip_wall_clock(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for line in text.lines() {
        let mut v: Value = match serde_json::from_str(line) {
            Ok(v) => v,
            Err(_) => {
                out.push_str(line);
                out.push('\n');
                continue;
            }
        };
        strip(&mut v);
        out.push_str(&v.to_string());
        out.push('\n');
    }
    out
}

fn strip(v: &mut Value) {
    match v {
        Value::Object(map) => {
            map.remove("wall_ms");
            map.values_mut().for_each(strip);
        }
        Value::Array(items) => items.iter_mut().for_each(strip),
        _ => {}
    }
}

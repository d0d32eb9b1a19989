//! JSON Lines transcripts: one ledger event per line.
//!
//! Lines are compact JSON with fields in the order
//! `height, kind, emitter, payload`, payload keys sorted and every integer
//! written as a decimal string. Reading re-serializes each parsed line and
//! rejects anything that is not byte-identical to that canonical form.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use fedpp_core::chainsim::{audit, AuditReport, EventKind, LedgerEvent};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};
use crate::store::DirStore;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Line {
    height: String,
    kind: String,
    emitter: String,
    payload: BTreeMap<String, String>,
}

pub fn event_to_line(ev: &LedgerEvent) -> String {
    let line = Line {
        height: ev.height.to_string(),
        kind: ev.kind.as_str().to_string(),
        emitter: ev.emitter.as_str().to_string(),
        payload: ev.payload.clone(),
    };
    serde_json::to_string(&line).expect("string maps always serialize")
}

pub fn to_jsonl(events: &[LedgerEvent]) -> String {
    let mut out = String::new();
    for ev in events {
        out.push_str(&event_to_line(ev));
        out.push('\n');
    }
    out
}

pub fn parse_line(text: &str, line_no: usize) -> Result<LedgerEvent> {
    let err = |reason: String| HarnessError::Parse {
        line: line_no,
        reason,
    };
    let line: Line = serde_json::from_str(text).map_err(|e| err(e.to_string()))?;
    let height = &line.height;
    if height.is_empty()
        || !height.bytes().all(|b| b.is_ascii_digit())
        || (height.len() > 1 && height.starts_with('0'))
    {
        return Err(err(format!("height {height:?} is not a canonical decimal")));
    }
    let ev = LedgerEvent {
        height: height.parse().map_err(|_| err(format!("height {height:?} out of range")))?,
        kind: line
            .kind
            .parse::<EventKind>()
            .map_err(|_| err(format!("unknown kind {:?}", line.kind)))?,
        emitter: line
            .emitter
            .parse()
            .map_err(|_| err(format!("bad emitter {:?}", line.emitter)))?,
        payload: line.payload,
    };
    if event_to_line(&ev) != text {
        return Err(err("line is not in canonical form".into()));
    }
    Ok(ev)
}

pub fn parse_jsonl(text: &str) -> Result<Vec<LedgerEvent>> {
    let body = text.strip_suffix('\n').ok_or_else(|| HarnessError::Parse {
        line: text.lines().count().max(1),
        reason: "missing trailing newline".into(),
    })?;
    if body.is_empty() {
        return Ok(Vec::new());
    }
    body.split('\n')
        .enumerate()
        .map(|(i, l)| parse_line(l, i + 1))
        .collect()
}

pub fn write_transcript(path: &Path, events: &[LedgerEvent]) -> Result<()> {
    fs::write(path, to_jsonl(events)).map_err(|e| HarnessError::io(path, e))
}

pub fn read_transcript(path: &Path) -> Result<Vec<LedgerEvent>> {
    let bytes = fs::read(path).map_err(|e| HarnessError::io(path, e))?;
    let text = String::from_utf8(bytes).map_err(|e| HarnessError::Parse {
        line: 0,
        reason: e.to_string(),
    })?;
    parse_jsonl(&text)
}

/// The `cas` directory next to a transcript file.
pub fn cas_dir_for(transcript: &Path) -> PathBuf {
    transcript
        .parent()
        .map_or_else(|| PathBuf::from("cas"), |d| d.join("cas"))
}

/// Audits a transcript file against the blobs in its sibling `cas` directory.
pub fn verify_transcript(path: &Path, disclosed_secret: &[u8; 32]) -> Result<AuditReport> {
    let events = read_transcript(path)?;
    let store = DirStore::open(cas_dir_for(path));
    Ok(audit(&events, &store, disclosed_secret))
}

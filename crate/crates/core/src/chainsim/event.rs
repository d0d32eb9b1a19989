use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use thiserror::Error;

use crate::id::ClientId;
use crate::mechanism::{SignMatrix, TaskSplit};
use crate::randbeacon::PairingAssignment;

/// Emitter string used for contract-originated events. `@` cannot occur in a
/// [`ClientId`].
pub const CONTRACT_EMITTER: &str = "@contract";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EventError {
    #[error("unknown event kind {0:?}")]
    UnknownKind(String),
    #[error("invalid emitter {0:?}")]
    BadEmitter(String),
    #[error("payload missing key {0:?}")]
    MissingKey(&'static str),
    #[error("payload key {key:?} has malformed value {value:?}")]
    BadValue { key: &'static str, value: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EventKind {
    Genesis,
    Register,
    OpenCommit,
    Commit,
    Pairing,
    Reveal,
    Tick,
    ScoringRule,
    Award,
    SettleAccount,
    Settled,
    SeedDisclosure,
}

impl EventKind {
    pub const ALL: [EventKind; 12] = [
        EventKind::Genesis,
        EventKind::Register,
        EventKind::OpenCommit,
        EventKind::Commit,
        EventKind::Pairing,
        EventKind::Reveal,
        EventKind::Tick,
        EventKind::ScoringRule,
        EventKind::Award,
        EventKind::SettleAccount,
        EventKind::Settled,
        EventKind::SeedDisclosure,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Genesis => "genesis",
            EventKind::Register => "register",
            EventKind::OpenCommit => "open_commit",
            EventKind::Commit => "commit",
            EventKind::Pairing => "pairing",
            EventKind::Reveal => "reveal",
            EventKind::Tick => "tick",
            EventKind::ScoringRule => "scoring_rule",
            EventKind::Award => "award",
            EventKind::SettleAccount => "settle_account",
            EventKind::Settled => "settled",
            EventKind::SeedDisclosure => "seed_disclosure",
        }
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EventKind {
    type Err = EventError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        EventKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| EventError::UnknownKind(s.into()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Emitter {
    Contract,
    Client(ClientId),
}

impl Emitter {
    pub fn as_str(&self) -> &str {
        match self {
            Emitter::Contract => CONTRACT_EMITTER,
            Emitter::Client(id) => id.as_str(),
        }
    }
}

impl FromStr for Emitter {
    type Err = EventError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == CONTRACT_EMITTER {
            return Ok(Emitter::Contract);
        }
        ClientId::new(s)
            .map(Emitter::Client)
            .map_err(|_| EventError::BadEmitter(s.into()))
    }
}

/// Canonical key/value record; every value is a string so integers travel
/// as decimal text.
pub type Payload = BTreeMap<String, String>;

/// One entry of the append-only ledger.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LedgerEvent {
    pub height: u64,
    pub kind: EventKind,
    pub emitter: Emitter,
    pub payload: Payload,
}

impl LedgerEvent {
    pub fn str(&self, key: &'static str) -> Result<&str, EventError> {
        self.payload
            .get(key)
            .map(String::as_str)
            .ok_or(EventError::MissingKey(key))
    }

    pub fn parse<T: FromStr>(&self, key: &'static str) -> Result<T, EventError> {
        let raw = self.str(key)?;
        // Reject forms the parser would accept but the encoder never emits.
        if raw.starts_with('+') || (raw.len() > 1 && raw.starts_with('0') && raw.bytes().all(|b| b.is_ascii_digit())) {
            return Err(bad(key, raw));
        }
        raw.parse().map_err(|_| bad(key, raw))
    }

    pub fn hex32(&self, key: &'static str) -> Result<[u8; 32], EventError> {
        let raw = self.str(key)?;
        let mut out = [0u8; 32];
        if raw.bytes().any(|b| b.is_ascii_uppercase()) {
            return Err(bad(key, raw));
        }
        hex::decode_to_slice(raw, &mut out).map_err(|_| bad(key, raw))?;
        Ok(out)
    }

    pub fn client(&self, key: &'static str) -> Result<ClientId, EventError> {
        let raw = self.str(key)?;
        ClientId::new(raw).map_err(|_| bad(key, raw))
    }

    pub fn emitter_client(&self) -> Result<ClientId, EventError> {
        match &self.emitter {
            Emitter::Client(id) => Ok(id.clone()),
            Emitter::Contract => Err(EventError::BadEmitter(CONTRACT_EMITTER.into())),
        }
    }
}

pub(crate) fn bad(key: &'static str, value: &str) -> EventError {
    EventError::BadValue {
        key,
        value: value.into(),
    }
}

/// Builder for payload maps.
#[derive(Default)]
pub(crate) struct PayloadBuilder(Payload);

impl PayloadBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn put(mut self, key: &str, value: impl fmt::Display) -> Self {
        self.0.insert(key.into(), value.to_string());
        self
    }

    pub fn build(self) -> Payload {
        self.0
    }
}

pub(crate) fn join_indices(v: &[usize]) -> String {
    let parts: Vec<String> = v.iter().map(|i| i.to_string()).collect();
    parts.join(",")
}

pub(crate) fn parse_indices(key: &'static str, s: &str) -> Result<Vec<usize>, EventError> {
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|p| {
            if p.len() > 1 && p.starts_with('0') || p.starts_with('+') {
                return Err(bad(key, s));
            }
            p.parse().map_err(|_| bad(key, s))
        })
        .collect()
}

pub(crate) fn encode_sign(s: &SignMatrix) -> String {
    let rows: Vec<String> = s
        .rows()
        .iter()
        .map(|r| {
            let cells: Vec<String> = r.iter().map(|c| c.to_string()).collect();
            cells.join(",")
        })
        .collect();
    rows.join(";")
}

pub(crate) fn decode_sign(key: &'static str, s: &str) -> Result<SignMatrix, EventError> {
    let rows: Vec<Vec<u8>> = s
        .split(';')
        .map(|r| {
            r.split(',')
                .map(|c| match c {
                    "0" => Ok(0u8),
                    "1" => Ok(1u8),
                    _ => Err(bad(key, s)),
                })
                .collect::<Result<Vec<u8>, _>>()
        })
        .collect::<Result<_, _>>()?;
    SignMatrix::from_rows(&rows).map_err(|_| bad(key, s))
}

pub(crate) fn encode_split(split: &TaskSplit) -> [(&'static str, String); 3] {
    [
        ("bonus", join_indices(&split.bonus)),
        ("penalty_1", join_indices(&split.penalty_1)),
        ("penalty_2", join_indices(&split.penalty_2)),
    ]
}

pub(crate) fn decode_split(ev: &LedgerEvent) -> Result<TaskSplit, EventError> {
    Ok(TaskSplit {
        bonus: parse_indices("bonus", ev.str("bonus")?)?,
        penalty_1: parse_indices("penalty_1", ev.str("penalty_1")?)?,
        penalty_2: parse_indices("penalty_2", ev.str("penalty_2")?)?,
    })
}

pub(crate) fn encode_pairs(p: &PairingAssignment) -> (String, String) {
    let pairs: Vec<String> = p.pairs.iter().map(|(a, b)| format!("{a}:{b}")).collect();
    let odd = p
        .odd
        .as_ref()
        .map(|(o, partner)| format!("{o}:{partner}"))
        .unwrap_or_default();
    (pairs.join(";"), odd)
}

pub(crate) fn encode_clients(ids: &[ClientId]) -> String {
    let parts: Vec<&str> = ids.iter().map(ClientId::as_str).collect();
    parts.join(",")
}

pub(crate) fn decode_clients(key: &'static str, s: &str) -> Result<Vec<ClientId>, EventError> {
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|p| ClientId::new(p).map_err(|_| bad(key, s)))
        .collect()
}

pub(crate) fn encode_allocations(a: &[(ClientId, u64)]) -> String {
    let parts: Vec<String> = a.iter().map(|(id, v)| format!("{id}={v}")).collect();
    parts.join(",")
}

pub(crate) fn decode_allocations(key: &'static str, s: &str) -> Result<Vec<(ClientId, u64)>, EventError> {
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|p| {
            let (id, v) = p.split_once('=').ok_or_else(|| bad(key, s))?;
            let id = ClientId::new(id).map_err(|_| bad(key, s))?;
            if v.starts_with('+') || (v.len() > 1 && v.starts_with('0')) {
                return Err(bad(key, s));
            }
            Ok((id, v.parse().map_err(|_| bad(key, s))?))
        })
        .collect()
}

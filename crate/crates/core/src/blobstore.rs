//! Content-addressed blobs, the canonical report encoding and salted
//! commitments over content pointers.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::mechanism::{Signal, SignalReport};

/// Version octet of the canonical report encoding.
pub const REPORT_VERSION: u8 = 0x01;
const REPORT_HEADER: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BlobError {
    #[error("blob is empty")]
    EmptyBlob,
    #[error("no blob stored under {0}")]
    NotFound(ContentPointer),
    #[error("malformed report blob: {0}")]
    MalformedBlob(&'static str),
    #[error("signal {signal} out of range for alphabet of size {k}")]
    SignalOutOfRange { signal: Signal, k: usize },
    #[error("salt must be 32 octets, got {0}")]
    BadSaltLength(usize),
    #[error("hex decoding failed")]
    BadHex,
    #[error("storage backend: {0}")]
    Backend(String),
}

pub type Result<T> = core::result::Result<T, BlobError>;

fn sha256(parts: &[&[u8]]) -> [u8; 32] {
    let mut h = Sha256::new();
    for p in parts {
        h.update(p);
    }
    h.finalize().into()
}

fn decode_hex32(s: &str) -> Result<[u8; 32]> {
    let mut out = [0u8; 32];
    hex::decode_to_slice(s, &mut out).map_err(|_| BlobError::BadHex)?;
    Ok(out)
}

/// Non-empty opaque bytes.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Blob(Vec<u8>);

impl Blob {
    pub fn new(bytes: Vec<u8>) -> Result<Self> {
        if bytes.is_empty() {
            return Err(BlobError::EmptyBlob);
        }
        Ok(Self(bytes))
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.0
    }

    pub fn pointer(&self) -> ContentPointer {
        ContentPointer(sha256(&[&self.0]))
    }
}

impl fmt::Debug for Blob {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Blob({} bytes)", self.0.len())
    }
}

/// SHA-256 of a blob's bytes.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ContentPointer(pub [u8; 32]);

impl ContentPointer {
    pub fn as_bytes(&self) -> &[u8; 32] {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn from_hex(s: &str) -> Result<Self> {
        decode_hex32(s).map(Self)
    }
}

impl fmt::Display for ContentPointer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl fmt::Debug for ContentPointer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ContentPointer({})", &self.to_hex()[..16])
    }
}

/// 32 random octets mixed into a commitment.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Salt(pub [u8; 32]);

impl Salt {
    pub fn from_slice(bytes: &[u8]) -> Result<Self> {
        let arr: [u8; 32] = bytes
            .try_into()
            .map_err(|_| BlobError::BadSaltLength(bytes.len()))?;
        Ok(Self(arr))
    }

    pub fn as_bytes(&self) -> &[u8; 32] {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn from_hex(s: &str) -> Result<Self> {
        decode_hex32(s).map(Self)
    }
}

impl fmt::Debug for Salt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Salt({})", hex::encode(&self.0[..8]))
    }
}

/// `SHA-256(pointer ‖ salt)`.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Commitment(pub [u8; 32]);

impl Commitment {
    pub fn as_bytes(&self) -> &[u8; 32] {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn from_hex(s: &str) -> Result<Self> {
        decode_hex32(s).map(Self)
    }
}

impl fmt::Debug for Commitment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Commitment({})", hex::encode(&self.0[..8]))
    }
}

/// Commits to a content pointer. `salt` must be exactly 32 octets.
pub fn make_commitment(pointer: &ContentPointer, salt: &[u8]) -> Result<Commitment> {
    let salt = Salt::from_slice(salt)?;
    Ok(Commitment(sha256(&[pointer.as_bytes(), salt.as_bytes()])))
}

pub fn verify_commitment(c: &Commitment, pointer: &ContentPointer, salt: &[u8]) -> bool {
    match make_commitment(pointer, salt) {
        Ok(recomputed) => recomputed == *c,
        Err(_) => false,
    }
}

/// Canonical report bytes: `version ‖ m (u32 BE) ‖ m signal octets`.
pub fn encode_report(report: &SignalReport, k: usize) -> Result<Blob> {
    let m = u32::try_from(report.len()).map_err(|_| BlobError::MalformedBlob("too many tasks"))?;
    if m == 0 {
        return Err(BlobError::EmptyBlob);
    }
    let mut bytes = Vec::with_capacity(REPORT_HEADER + report.len());
    bytes.push(REPORT_VERSION);
    bytes.extend_from_slice(&m.to_be_bytes());
    for &s in report.as_slice() {
        if s as usize >= k {
            return Err(BlobError::SignalOutOfRange { signal: s, k });
        }
        bytes.push(s);
    }
    Blob::new(bytes)
}

pub fn decode_report(blob: &Blob, k: usize) -> Result<SignalReport> {
    let bytes = blob.as_bytes();
    if bytes.len() < REPORT_HEADER {
        return Err(BlobError::MalformedBlob("truncated header"));
    }
    if bytes[0] != REPORT_VERSION {
        return Err(BlobError::MalformedBlob("unknown version"));
    }
    let m = u32::from_be_bytes([bytes[1], bytes[2], bytes[3], bytes[4]]) as usize;
    let body = &bytes[REPORT_HEADER..];
    if body.len() != m {
        return Err(BlobError::MalformedBlob("length does not match task count"));
    }
    if let Some(&s) = body.iter().find(|&&s| s as usize >= k) {
        return Err(BlobError::SignalOutOfRange { signal: s, k });
    }
    Ok(SignalReport(body.to_vec()))
}

/// Storage addressed by [`ContentPointer`].
pub trait ContentStore {
    fn put(&mut self, blob: Blob) -> Result<ContentPointer>;
    fn get(&self, pointer: &ContentPointer) -> Result<Blob>;

    fn contains(&self, pointer: &ContentPointer) -> bool {
        self.get(pointer).is_ok()
    }
}

/// In-memory content-addressed store.
#[derive(Debug, Default, Clone)]
pub struct MemoryStore {
    blobs: BTreeMap<ContentPointer, Blob>,
}

impl MemoryStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.blobs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blobs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&ContentPointer, &Blob)> {
        self.blobs.iter()
    }
}

impl ContentStore for MemoryStore {
    fn put(&mut self, blob: Blob) -> Result<ContentPointer> {
        let p = blob.pointer();
        self.blobs.entry(p).or_insert(blob);
        Ok(p)
    }

    fn get(&self, pointer: &ContentPointer) -> Result<Blob> {
        self.blobs
            .get(pointer)
            .cloned()
            .ok_or(BlobError::NotFound(*pointer))
    }

    fn contains(&self, pointer: &ContentPointer) -> bool {
        self.blobs.contains_key(pointer)
    }
}

impl<S: ContentStore + ?Sized> ContentStore for &mut S {
    fn put(&mut self, blob: Blob) -> Result<ContentPointer> {
        (**self).put(blob)
    }

    fn get(&self, pointer: &ContentPointer) -> Result<Blob> {
        (**self).get(pointer)
    }
}

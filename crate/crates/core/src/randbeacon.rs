//! Keyed-hash randomness beacon with commit-at-genesis, disclose-at-audit
//! verification, plus the seeded pairing and task-split procedures.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::id::ClientId;
use crate::mechanism::TaskSplit;
use crate::rng;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BeaconError {
    #[error("pairing needs at least 2 clients, got {0}")]
    TooFewClients(usize),
    #[error("client {0} listed twice")]
    DuplicateClient(ClientId),
    #[error("split of {bonus} bonus + 2x{penalty} penalty tasks exceeds {tasks} tasks")]
    SplitTooLarge {
        bonus: usize,
        penalty: usize,
        tasks: usize,
    },
    #[error("bonus and penalty set sizes must be at least 1")]
    EmptySet,
    #[error("unknown seed purpose {0:?}")]
    UnknownPurpose(String),
}

pub type Result<T> = core::result::Result<T, BeaconError>;

/// What a seed is used for; seeds for different purposes are independent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Purpose {
    Pairing,
    TaskSplit,
    Sampling,
}

impl Purpose {
    pub const ALL: [Purpose; 3] = [Purpose::Pairing, Purpose::TaskSplit, Purpose::Sampling];

    pub fn tag(self) -> &'static str {
        match self {
            Purpose::Pairing => "pairing",
            Purpose::TaskSplit => "task_split",
            Purpose::Sampling => "sampling",
        }
    }
}

impl fmt::Display for Purpose {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Purpose {
    type Err = BeaconError;

    fn from_str(s: &str) -> Result<Self> {
        Purpose::ALL
            .into_iter()
            .find(|p| p.tag() == s)
            .ok_or_else(|| BeaconError::UnknownPurpose(s.into()))
    }
}

/// Beacon secret and its public commitment `SHA-256(secret)`.
#[derive(Clone, PartialEq, Eq)]
pub struct BeaconKey {
    secret: [u8; 32],
    public_commitment: [u8; 32],
}

impl BeaconKey {
    pub fn from_secret(secret: [u8; 32]) -> Self {
        Self {
            secret,
            public_commitment: Sha256::digest(secret).into(),
        }
    }

    pub fn secret(&self) -> &[u8; 32] {
        &self.secret
    }

    pub fn public_commitment(&self) -> &[u8; 32] {
        &self.public_commitment
    }
}

impl fmt::Debug for BeaconKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "BeaconKey {{ public_commitment: {} }}",
            hex::encode(self.public_commitment)
        )
    }
}

/// A per-round, per-purpose seed. `proof` carries the beacon secret once it
/// has been disclosed at audit time.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeedBundle {
    pub round: u64,
    pub purpose: Purpose,
    pub seed: [u8; 32],
    pub proof: Option<[u8; 32]>,
}

impl SeedBundle {
    pub fn with_proof(mut self, secret: [u8; 32]) -> Self {
        self.proof = Some(secret);
        self
    }
}

fn compute_seed(secret: &[u8; 32], round: u64, purpose: Purpose) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(secret);
    h.update(round.to_be_bytes());
    h.update(purpose.tag().as_bytes());
    h.finalize().into()
}

/// `seed = SHA-256(secret ‖ round_be64 ‖ purpose_tag)`.
pub fn derive_seed(key: &BeaconKey, round: u64, purpose: Purpose) -> SeedBundle {
    SeedBundle {
        round,
        purpose,
        seed: compute_seed(&key.secret, round, purpose),
        proof: None,
    }
}

/// Accepts iff the disclosed secret opens the public commitment and
/// reproduces the bundle's seed. A bundle proof, when present, must equal
/// the disclosed secret.
pub fn verify_seed(
    public_commitment: &[u8; 32],
    bundle: &SeedBundle,
    disclosed_secret: &[u8; 32],
) -> bool {
    let opened: [u8; 32] = Sha256::digest(disclosed_secret).into();
    if opened != *public_commitment {
        return false;
    }
    if let Some(proof) = bundle.proof {
        if proof != *disclosed_secret {
            return false;
        }
    }
    compute_seed(disclosed_secret, bundle.round, bundle.purpose) == bundle.seed
}

/// Matched pairs plus, for odd cohorts, `(odd_client, scoring_partner)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairingAssignment {
    pub pairs: Vec<(ClientId, ClientId)>,
    pub odd: Option<(ClientId, ClientId)>,
}

impl PairingAssignment {
    /// Every client occupying a pair slot, plus the odd client.
    pub fn members(&self) -> Vec<&ClientId> {
        let mut out: Vec<&ClientId> = self.pairs.iter().flat_map(|(a, b)| [a, b]).collect();
        if let Some((odd, _)) = &self.odd {
            out.push(odd);
        }
        out
    }

    /// Number of scored pairings, counting the one-directional odd extra.
    pub fn scored_pairs(&self) -> usize {
        self.pairs.len() + self.odd.is_some() as usize
    }

    /// Perfect matching over `clients`, odd client once more as an extra.
    pub fn is_valid_over(&self, clients: &[ClientId]) -> bool {
        let mut members: Vec<&ClientId> = self.members();
        members.sort();
        let mut expected: Vec<&ClientId> = clients.iter().collect();
        expected.sort();
        if members != expected {
            return false;
        }
        match &self.odd {
            None => clients.len().is_multiple_of(2),
            Some((odd, partner)) => {
                clients.len() % 2 == 1
                    && odd != partner
                    && self.pairs.iter().any(|(a, b)| a == partner || b == partner)
            }
        }
    }
}

fn sorted_unique(clients: &[ClientId]) -> Result<Vec<ClientId>> {
    let mut v = clients.to_vec();
    v.sort();
    for w in v.windows(2) {
        if w[0] == w[1] {
            return Err(BeaconError::DuplicateClient(w[0].clone()));
        }
    }
    Ok(v)
}

/// Seeded Fisher–Yates over the sorted client list; adjacent entries pair.
/// With an odd count the last client gets a partner drawn uniformly from the
/// already-paired clients.
pub fn pair_clients(seed: &[u8; 32], committed: &[ClientId]) -> Result<PairingAssignment> {
    if committed.len() < 2 {
        return Err(BeaconError::TooFewClients(committed.len()));
    }
    let mut order = sorted_unique(committed)?;
    let mut g = rng::seeded(*seed);
    rng::shuffle(&mut g, &mut order);

    let odd = if order.len() % 2 == 1 {
        let last = order.pop().expect("len >= 3");
        let partner = order[rng::below(&mut g, order.len() as u64) as usize].clone();
        Some((last, partner))
    } else {
        None
    };
    let pairs = order
        .chunks_exact(2)
        .map(|c| (c[0].clone(), c[1].clone()))
        .collect();
    Ok(PairingAssignment { pairs, odd })
}

/// Draws `b + 2p` distinct task indices without replacement (partial
/// Fisher–Yates); the first `b` are bonus tasks, then `p` for each penalty set.
pub fn split_tasks(seed: &[u8; 32], m: usize, b: usize, p: usize) -> Result<TaskSplit> {
    if b == 0 || p == 0 {
        return Err(BeaconError::EmptySet);
    }
    let need = b
        .checked_add(p.saturating_mul(2))
        .filter(|&n| n <= m)
        .ok_or(BeaconError::SplitTooLarge {
            bonus: b,
            penalty: p,
            tasks: m,
        })?;
    let mut g = rng::seeded(*seed);
    let mut idx: Vec<usize> = (0..m).collect();
    for i in 0..need {
        let j = i + rng::below(&mut g, (m - i) as u64) as usize;
        idx.swap(i, j);
    }
    Ok(TaskSplit {
        bonus: idx[..b].to_vec(),
        penalty_1: idx[b..b + p].to_vec(),
        penalty_2: idx[b + p..need].to_vec(),
    })
}

/// Seeded uniform choice of one committed client, e.g. as the off-chain
/// aggregator for a round.
pub fn select_validator(seed: &[u8; 32], committed: &[ClientId]) -> Result<ClientId> {
    if committed.is_empty() {
        return Err(BeaconError::TooFewClients(0));
    }
    let order = sorted_unique(committed)?;
    let mut g = rng::seeded(*seed);
    Ok(order[rng::below(&mut g, order.len() as u64) as usize].clone())
}

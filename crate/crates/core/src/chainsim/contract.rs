use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use sha2::{Digest, Sha256};
use thiserror::Error;

use super::event::{
    encode_allocations, encode_clients, encode_pairs, encode_sign, encode_split, Emitter,
    EventKind, LedgerEvent, Payload, PayloadBuilder,
};
use crate::blobstore::{decode_report, verify_commitment, Commitment, ContentPointer, ContentStore, Salt};
use crate::id::ClientId;
use crate::mechanism::{
    ca_pair_payment, delta_matrix, sign_matrix, to_currency, JointDistribution, MechanismError,
    PairPayment, SignMatrix, SignalReport, TaskSplit,
};
use crate::randbeacon::{self, BeaconError, PairingAssignment, Purpose, SeedBundle};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ContractError {
    #[error("operation requires phase {expected}, contract is in {actual}")]
    WrongPhase { expected: Phase, actual: Phase },
    #[error("stake {offered} below minimum {min}")]
    InsufficientStake { offered: u64, min: u64 },
    #[error("balance {balance} cannot cover stake {stake}")]
    InsufficientBalance { balance: u64, stake: u64 },
    #[error("client {0} already registered")]
    DuplicateRegistration(ClientId),
    #[error("client {0} is not on the allowlist")]
    NotAllowed(ClientId),
    #[error("client {0} is not registered")]
    NotRegistered(ClientId),
    #[error("client {0} already committed this round")]
    DuplicateCommit(ClientId),
    #[error("{have} commitments, quorum is {need}")]
    QuorumNotReached { have: usize, need: usize },
    #[error("seed bundle is for {purpose} round {round}, expected {expected_purpose} round {expected_round}")]
    SeedMismatch {
        purpose: Purpose,
        round: u64,
        expected_purpose: Purpose,
        expected_round: u64,
    },
    #[error("client {0} has no commitment this round")]
    NoPriorCommit(ClientId),
    #[error("client {0} already revealed")]
    DuplicateReveal(ClientId),
    #[error("{0} committed clients have not revealed and the deadline has not passed")]
    RevealsPending(usize),
    #[error("task split does not match the beacon-derived split")]
    SplitMismatch,
    #[error("sign matrix does not match the configured scoring rule")]
    SignMatrixMismatch,
    #[error("reward pool {have} cannot cover payments of {need}")]
    InsufficientPool { need: u128, have: u64 },
    #[error("disclosed beacon secret does not verify")]
    BadDisclosure,
    #[error("invalid contract config: {0}")]
    InvalidConfig(&'static str),
    #[error("arithmetic overflow")]
    Overflow,
    #[error(transparent)]
    Beacon(#[from] BeaconError),
    #[error(transparent)]
    Mechanism(#[from] MechanismError),
}

pub type Result<T> = core::result::Result<T, ContractError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Phase {
    Register,
    Commit,
    PairingRequested,
    Reveal,
    Score,
    Settle,
    Audit,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Register => "register",
            Phase::Commit => "commit",
            Phase::PairingRequested => "pairing_requested",
            Phase::Reveal => "reveal",
            Phase::Score => "score",
            Phase::Settle => "settle",
            Phase::Audit => "audit",
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Where the round's sign matrix comes from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScoringMode {
    /// Fixed at deployment from an analytic signal model.
    KnownPrior(SignMatrix),
    /// Computed once from all accepted reveals of the round.
    Empirical,
}

impl ScoringMode {
    pub fn tag(&self) -> &'static str {
        match self {
            ScoringMode::KnownPrior(_) => "known_prior",
            ScoringMode::Empirical => "empirical",
        }
    }
}

/// Genesis parameters of a round.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContractConfig {
    pub round: u64,
    /// Signal alphabet size.
    pub k: usize,
    /// Public task count `m`.
    pub task_count: usize,
    pub bonus_size: usize,
    pub penalty_size: usize,
    pub min_stake: u64,
    pub quorum: usize,
    pub reward_pool: u64,
    /// Currency minor units per scaled score unit.
    pub alpha: u64,
    /// Paid to an honest member whose partner was slashed.
    pub default_payment: u64,
    /// Height from which missing reveals may be slashed and scoring proceed.
    pub reveal_deadline: u64,
    pub beacon_commitment: [u8; 32],
    pub scoring: ScoringMode,
    pub allowlist: Option<Vec<ClientId>>,
    /// Genesis balances.
    pub allocations: Vec<(ClientId, u64)>,
}

impl ContractConfig {
    /// `alpha·|M_b|·|M_1|·|M_2| / 2`, the midpoint of the payment range.
    pub fn midpoint_default_payment(alpha: u64, bonus: usize, penalty: usize) -> u64 {
        alpha
            .saturating_mul(bonus as u64)
            .saturating_mul((penalty as u64).saturating_mul(penalty as u64))
            / 2
    }

    pub fn validate(&self) -> Result<()> {
        if !(2..=crate::mechanism::MAX_ALPHABET).contains(&self.k) {
            return Err(ContractError::InvalidConfig("k must be in 2..=256"));
        }
        if self.bonus_size == 0 || self.penalty_size == 0 {
            return Err(ContractError::InvalidConfig("bonus and penalty sizes must be positive"));
        }
        let need = self
            .bonus_size
            .checked_add(self.penalty_size.saturating_mul(2))
            .ok_or(ContractError::InvalidConfig("split size overflows"))?;
        if need > self.task_count {
            return Err(ContractError::InvalidConfig("b + 2p exceeds task count"));
        }
        if self.quorum < 2 {
            return Err(ContractError::InvalidConfig("quorum must be at least 2"));
        }
        if let ScoringMode::KnownPrior(s) = &self.scoring {
            if s.k() != self.k {
                return Err(ContractError::InvalidConfig("sign matrix size differs from k"));
            }
        }
        let mut ids: Vec<&ClientId> = self.allocations.iter().map(|(id, _)| id).collect();
        ids.sort();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(ContractError::InvalidConfig("duplicate allocation"));
        }
        let mut total = self.reward_pool as u128;
        for (_, v) in &self.allocations {
            total += *v as u128;
        }
        if total > u64::MAX as u128 {
            return Err(ContractError::InvalidConfig("total supply exceeds u64"));
        }
        Ok(())
    }

    fn genesis_payload(&self) -> Payload {
        let mut b = PayloadBuilder::new()
            .put("round", self.round)
            .put("k", self.k)
            .put("task_count", self.task_count)
            .put("bonus_size", self.bonus_size)
            .put("penalty_size", self.penalty_size)
            .put("min_stake", self.min_stake)
            .put("quorum", self.quorum)
            .put("reward_pool", self.reward_pool)
            .put("alpha", self.alpha)
            .put("default_payment", self.default_payment)
            .put("reveal_deadline", self.reveal_deadline)
            .put("beacon_commitment", hex::encode(self.beacon_commitment))
            .put("delta_mode", self.scoring.tag())
            .put("allocations", encode_allocations(&self.allocations));
        if let ScoringMode::KnownPrior(s) = &self.scoring {
            b = b.put("sign_matrix", encode_sign(s));
        }
        if let Some(list) = &self.allowlist {
            b = b.put("allowlist", encode_clients(list));
        }
        b.build()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Account {
    pub balance: u64,
    pub stake: u64,
    pub registered: bool,
    pub slashed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SlashReason {
    CommitMismatch,
    UnresolvablePointer,
    MalformedReport,
    MissingReveal,
}

impl SlashReason {
    pub fn as_str(self) -> &'static str {
        match self {
            SlashReason::CommitMismatch => "commit_mismatch",
            SlashReason::UnresolvablePointer => "unresolvable_pointer",
            SlashReason::MalformedReport => "malformed_report",
            SlashReason::MissingReveal => "missing_reveal",
        }
    }
}

/// Result of an in-phase reveal. A failed check is not an error: the stake is
/// forfeited and the outcome says why.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RevealOutcome {
    Accepted,
    Slashed(SlashReason),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RevealStatus {
    Accepted(ContentPointer),
    Slashed(SlashReason),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Award {
    Scored(PairPayment),
    /// Honest member of a pair whose partner was slashed.
    Default,
    Forfeit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AwardRole {
    Pair,
    /// One-directional extra for the odd client of an odd cohort.
    OddExtra,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AwardEntry {
    pub client: ClientId,
    pub partner: ClientId,
    pub role: AwardRole,
    pub award: Award,
}

/// On-chain resource usage.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CostMeter {
    /// Sign-matrix lookups performed while scoring.
    pub compute_units: u64,
    /// Bytes written to contract state by commitments and reveals.
    pub storage_bytes: u64,
    /// Hash evaluations performed to check reveals.
    pub hash_ops: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContractState {
    pub config: ContractConfig,
    pub phase: Phase,
    pub accounts: BTreeMap<ClientId, Account>,
    pub reward_pool: u64,
    pub commitments: BTreeMap<ClientId, Commitment>,
    pub reveals: BTreeMap<ClientId, RevealStatus>,
    pub reports: BTreeMap<ClientId, SignalReport>,
    pub pairing: Option<PairingAssignment>,
    pub seeds: Vec<SeedBundle>,
    pub split: Option<TaskSplit>,
    pub sign: Option<SignMatrix>,
    pub awards: Vec<AwardEntry>,
    pub payouts: BTreeMap<ClientId, i128>,
    pub meter: CostMeter,
}

/// The coordination contract plus its event log.
#[derive(Debug, Clone)]
pub struct Contract {
    state: ContractState,
    events: Vec<LedgerEvent>,
}

impl Contract {
    pub fn deploy(config: ContractConfig) -> Result<Self> {
        config.validate()?;
        let accounts = config
            .allocations
            .iter()
            .map(|(id, v)| {
                (
                    id.clone(),
                    Account {
                        balance: *v,
                        ..Account::default()
                    },
                )
            })
            .collect();
        let payload = config.genesis_payload();
        let mut c = Self {
            state: ContractState {
                reward_pool: config.reward_pool,
                config,
                phase: Phase::Register,
                accounts,
                commitments: BTreeMap::new(),
                reveals: BTreeMap::new(),
                reports: BTreeMap::new(),
                pairing: None,
                seeds: Vec::new(),
                split: None,
                sign: None,
                awards: Vec::new(),
                payouts: BTreeMap::new(),
                meter: CostMeter::default(),
            },
            events: Vec::new(),
        };
        c.emit(EventKind::Genesis, Emitter::Contract, payload);
        Ok(c)
    }

    pub fn state(&self) -> &ContractState {
        &self.state
    }

    pub fn config(&self) -> &ContractConfig {
        &self.state.config
    }

    pub fn events(&self) -> &[LedgerEvent] {
        &self.events
    }

    pub fn into_events(self) -> Vec<LedgerEvent> {
        self.events
    }

    pub fn phase(&self) -> Phase {
        self.state.phase
    }

    /// Height the next event will receive.
    pub fn height(&self) -> u64 {
        self.events.len() as u64
    }

    pub fn meter(&self) -> CostMeter {
        self.state.meter
    }

    pub fn account(&self, id: &ClientId) -> Option<&Account> {
        self.state.accounts.get(id)
    }

    pub fn committed(&self) -> Vec<ClientId> {
        self.state.commitments.keys().cloned().collect()
    }

    /// `Σ balances + Σ stakes + reward_pool`.
    pub fn total_value(&self) -> u128 {
        self.state
            .accounts
            .values()
            .map(|a| a.balance as u128 + a.stake as u128)
            .sum::<u128>()
            + self.state.reward_pool as u128
    }

    fn emit(&mut self, kind: EventKind, emitter: Emitter, payload: Payload) {
        let height = self.height();
        self.events.push(LedgerEvent {
            height,
            kind,
            emitter,
            payload,
        });
    }

    fn expect_phase(&self, expected: Phase) -> Result<()> {
        if self.state.phase == expected {
            Ok(())
        } else {
            Err(ContractError::WrongPhase {
                expected,
                actual: self.state.phase,
            })
        }
    }

    fn check_seed(&self, bundle: &SeedBundle, purpose: Purpose) -> Result<()> {
        if bundle.purpose != purpose || bundle.round != self.state.config.round {
            return Err(ContractError::SeedMismatch {
                purpose: bundle.purpose,
                round: bundle.round,
                expected_purpose: purpose,
                expected_round: self.state.config.round,
            });
        }
        Ok(())
    }

    /// Escrows `stake` from the client's balance.
    pub fn register(&mut self, client: &ClientId, stake: u64) -> Result<()> {
        self.expect_phase(Phase::Register)?;
        let cfg = &self.state.config;
        if let Some(list) = &cfg.allowlist {
            if !list.contains(client) {
                return Err(ContractError::NotAllowed(client.clone()));
            }
        }
        if stake < cfg.min_stake {
            return Err(ContractError::InsufficientStake {
                offered: stake,
                min: cfg.min_stake,
            });
        }
        let existing = self.state.accounts.get(client).cloned().unwrap_or_default();
        if existing.registered {
            return Err(ContractError::DuplicateRegistration(client.clone()));
        }
        if existing.balance < stake {
            return Err(ContractError::InsufficientBalance {
                balance: existing.balance,
                stake,
            });
        }
        let acct = self.state.accounts.entry(client.clone()).or_default();
        acct.balance -= stake;
        acct.stake += stake;
        acct.registered = true;
        let payload = PayloadBuilder::new().put("stake", stake).build();
        self.emit(EventKind::Register, Emitter::Client(client.clone()), payload);
        Ok(())
    }

    pub fn open_commit(&mut self) -> Result<()> {
        self.expect_phase(Phase::Register)?;
        self.state.phase = Phase::Commit;
        let payload = PayloadBuilder::new().put("phase", Phase::Commit).build();
        self.emit(EventKind::OpenCommit, Emitter::Contract, payload);
        Ok(())
    }

    pub fn commit(&mut self, client: &ClientId, c: Commitment) -> Result<()> {
        self.expect_phase(Phase::Commit)?;
        match self.state.accounts.get(client) {
            Some(a) if a.registered => {}
            _ => return Err(ContractError::NotRegistered(client.clone())),
        }
        if self.state.commitments.contains_key(client) {
            return Err(ContractError::DuplicateCommit(client.clone()));
        }
        self.state.commitments.insert(client.clone(), c);
        self.state.meter.storage_bytes += 32;
        let payload = PayloadBuilder::new().put("commitment", c.to_hex()).build();
        self.emit(EventKind::Commit, Emitter::Client(client.clone()), payload);
        Ok(())
    }

    /// Pairs the committed clients from the beacon seed and opens reveals.
    pub fn request_pairing(&mut self, bundle: &SeedBundle) -> Result<PairingAssignment> {
        self.expect_phase(Phase::Commit)?;
        self.check_seed(bundle, Purpose::Pairing)?;
        let committed = self.committed();
        let need = self.state.config.quorum;
        if committed.len() < need {
            return Err(ContractError::QuorumNotReached {
                have: committed.len(),
                need,
            });
        }
        let pairing = randbeacon::pair_clients(&bundle.seed, &committed)?;
        self.state.phase = Phase::PairingRequested;
        let (pairs, odd) = encode_pairs(&pairing);
        let payload = PayloadBuilder::new()
            .put("round", bundle.round)
            .put("purpose", bundle.purpose)
            .put("seed_hex", hex::encode(bundle.seed))
            .put("pairs", pairs)
            .put("odd", odd)
            .put("phase", Phase::Reveal)
            .build();
        self.state.pairing = Some(pairing.clone());
        self.state.seeds.push(SeedBundle {
            proof: None,
            ..bundle.clone()
        });
        self.state.phase = Phase::Reveal;
        self.emit(EventKind::Pairing, Emitter::Contract, payload);
        Ok(pairing)
    }

    fn slash(&mut self, client: &ClientId, reason: SlashReason) -> u64 {
        let acct = self.state.accounts.get_mut(client).expect("committed clients have accounts");
        let forfeited = acct.stake;
        acct.stake = 0;
        acct.slashed = true;
        self.state.reward_pool += forfeited;
        self.state.reveals.insert(client.clone(), RevealStatus::Slashed(reason));
        forfeited
    }

    /// Opens a commitment. Mismatching, unresolvable or malformed reveals
    /// forfeit the client's stake to the reward pool.
    pub fn reveal<S: ContentStore + ?Sized>(
        &mut self,
        client: &ClientId,
        pointer: &ContentPointer,
        salt: &Salt,
        store: &S,
    ) -> Result<RevealOutcome> {
        self.expect_phase(Phase::Reveal)?;
        let commitment = *self
            .state
            .commitments
            .get(client)
            .ok_or_else(|| ContractError::NoPriorCommit(client.clone()))?;
        if self.state.reveals.contains_key(client) {
            return Err(ContractError::DuplicateReveal(client.clone()));
        }
        self.state.meter.hash_ops += 1;
        let cfg = &self.state.config;
        let check = if !verify_commitment(&commitment, pointer, salt.as_bytes()) {
            Err(SlashReason::CommitMismatch)
        } else {
            match store.get(pointer) {
                Err(_) => Err(SlashReason::UnresolvablePointer),
                Ok(blob) => match decode_report(&blob, cfg.k) {
                    Ok(r) if r.len() == cfg.task_count => Ok(r),
                    _ => Err(SlashReason::MalformedReport),
                },
            }
        };
        let mut payload = PayloadBuilder::new()
            .put("pointer", pointer.to_hex())
            .put("salt", salt.to_hex());
        let outcome = match check {
            Ok(report) => {
                self.state.meter.storage_bytes += 32;
                self.state
                    .reveals
                    .insert(client.clone(), RevealStatus::Accepted(*pointer));
                self.state.reports.insert(client.clone(), report);
                payload = payload.put("outcome", "accepted").put("forfeited", 0);
                RevealOutcome::Accepted
            }
            Err(reason) => {
                let forfeited = self.slash(client, reason);
                payload = payload.put("outcome", reason.as_str()).put("forfeited", forfeited);
                RevealOutcome::Slashed(reason)
            }
        };
        self.emit(EventKind::Reveal, Emitter::Client(client.clone()), payload.build());
        Ok(outcome)
    }

    /// An empty block; advances the height.
    pub fn tick(&mut self) {
        self.emit(EventKind::Tick, Emitter::Contract, Payload::new());
    }

    fn pair_list(&self) -> Vec<(ClientId, ClientId, AwardRole)> {
        let Some(p) = &self.state.pairing else {
            return Vec::new();
        };
        let mut out: Vec<_> = p
            .pairs
            .iter()
            .map(|(a, b)| (a.clone(), b.clone(), AwardRole::Pair))
            .collect();
        if let Some((o, partner)) = &p.odd {
            out.push((o.clone(), partner.clone(), AwardRole::OddExtra));
        }
        out
    }

    /// Sign matrix from the symmetrized joint of all accepted report pairs;
    /// the zero matrix when no pair has two accepted reports.
    pub fn empirical_sign_matrix(&self) -> Result<SignMatrix> {
        let reports = &self.state.reports;
        let pairs: Vec<(&SignalReport, &SignalReport)> = self
            .pair_list()
            .iter()
            .filter_map(|(a, b, _)| Some((reports.get(a)?, reports.get(b)?)))
            .collect();
        if pairs.is_empty() {
            return Ok(SignMatrix::zeros(self.state.config.k)?);
        }
        let joint = JointDistribution::from_paired_reports(self.state.config.k, pairs)?;
        Ok(sign_matrix(&delta_matrix(&joint)))
    }

    /// Scores every pairing with the Correlated Agreement rule.
    ///
    /// Requires every committed client to have revealed, or the reveal
    /// deadline to have passed, in which case missing reveals are slashed.
    pub fn score_round(
        &mut self,
        s: &SignMatrix,
        split: &TaskSplit,
        split_seed: &SeedBundle,
    ) -> Result<Vec<AwardEntry>> {
        self.expect_phase(Phase::Reveal)?;
        let missing: Vec<ClientId> = self
            .state
            .commitments
            .keys()
            .filter(|c| !self.state.reveals.contains_key(*c))
            .cloned()
            .collect();
        let cfg = &self.state.config;
        if !missing.is_empty() && self.height() < cfg.reveal_deadline {
            return Err(ContractError::RevealsPending(missing.len()));
        }
        self.check_seed(split_seed, Purpose::TaskSplit)?;
        let derived = randbeacon::split_tasks(
            &split_seed.seed,
            cfg.task_count,
            cfg.bonus_size,
            cfg.penalty_size,
        )?;
        if derived != *split {
            return Err(ContractError::SplitMismatch);
        }
        let expected = match &cfg.scoring {
            ScoringMode::KnownPrior(m) => m.clone(),
            ScoringMode::Empirical => self.empirical_sign_matrix()?,
        };
        if expected != *s {
            return Err(ContractError::SignMatrixMismatch);
        }
        // Validation done; precompute all pair payments before mutating.
        let mut awards = Vec::new();
        let mut lookups = 0u64;
        for (a, b, role) in self.pair_list() {
            let ra = self.state.reports.get(&a);
            let rb = self.state.reports.get(&b);
            let (aw_a, aw_b) = match (ra, rb) {
                (Some(ra), Some(rb)) => {
                    let (pa, pb) = ca_pair_payment(ra, rb, split, s)?;
                    lookups += split.lookups_per_pair();
                    (Award::Scored(pa), Award::Scored(pb))
                }
                (Some(_), None) => (Award::Default, Award::Forfeit),
                (None, Some(_)) => (Award::Forfeit, Award::Default),
                (None, None) => continue,
            };
            awards.push(AwardEntry {
                client: a.clone(),
                partner: b.clone(),
                role,
                award: aw_a,
            });
            if role == AwardRole::Pair {
                awards.push(AwardEntry {
                    client: b,
                    partner: a,
                    role,
                    award: aw_b,
                });
            }
        }

        for c in &missing {
            self.slash(c, SlashReason::MissingReveal);
        }
        let mut payload = PayloadBuilder::new()
            .put("sign_matrix", encode_sign(s))
            .put("round", split_seed.round)
            .put("purpose", split_seed.purpose)
            .put("seed_hex", hex::encode(split_seed.seed))
            .put("missing", encode_clients(&missing))
            .put("phase", Phase::Score);
        for (k, v) in encode_split(split) {
            payload = payload.put(k, v);
        }
        self.emit(EventKind::ScoringRule, Emitter::Contract, payload.build());
        for entry in &awards {
            let (outcome, scaled, denom) = match entry.award {
                Award::Scored(p) => ("scored", p.scaled_score, p.scale_denominator),
                Award::Default => ("default", 0, split.scale_denominator()),
                Award::Forfeit => ("forfeit", 0, split.scale_denominator()),
            };
            let payload = PayloadBuilder::new()
                .put("client", &entry.client)
                .put("partner", &entry.partner)
                .put(
                    "role",
                    match entry.role {
                        AwardRole::Pair => "pair",
                        AwardRole::OddExtra => "odd_extra",
                    },
                )
                .put("outcome", outcome)
                .put("scaled_score", scaled)
                .put("scale_denominator", denom)
                .build();
            self.emit(EventKind::Award, Emitter::Contract, payload);
        }
        self.state.meter.compute_units += lookups;
        self.state.seeds.push(SeedBundle {
            proof: None,
            ..split_seed.clone()
        });
        self.state.split = Some(split.clone());
        self.state.sign = Some(s.clone());
        self.state.awards = awards.clone();
        self.state.phase = Phase::Score;
        Ok(awards)
    }

    fn currency_of(&self, award: &Award) -> Result<i128> {
        match award {
            Award::Scored(p) => Ok(to_currency(p, self.state.config.alpha)?),
            Award::Default => Ok(self.state.config.default_payment as i128),
            Award::Forfeit => Ok(0),
        }
    }

    /// Transfers payments atomically: positive amounts from the pool,
    /// negative amounts from stake (clamped at zero), then releases the
    /// remaining stakes of unslashed clients.
    pub fn settle(&mut self) -> Result<BTreeMap<ClientId, i128>> {
        self.expect_phase(Phase::Score)?;
        let mut payments: BTreeMap<ClientId, i128> = BTreeMap::new();
        for entry in &self.state.awards {
            let v = self.currency_of(&entry.award)?;
            let slot = payments.entry(entry.client.clone()).or_insert(0);
            *slot = slot.checked_add(v).ok_or(ContractError::Overflow)?;
        }
        let need: u128 = payments.values().filter(|v| **v > 0).map(|v| *v as u128).sum();
        if need > self.state.reward_pool as u128 {
            return Err(ContractError::InsufficientPool {
                need,
                have: self.state.reward_pool,
            });
        }

        let ids: Vec<ClientId> = self
            .state
            .accounts
            .iter()
            .filter(|(_, a)| a.registered)
            .map(|(id, _)| id.clone())
            .collect();
        for id in ids {
            let payment = payments.get(&id).copied().unwrap_or(0);
            let acct = self.state.accounts.get_mut(&id).expect("listed above");
            let mut credited = 0u64;
            let mut deducted = 0u64;
            if payment > 0 {
                credited = payment as u64;
                self.state.reward_pool -= credited;
                acct.balance += credited;
            } else if payment < 0 {
                deducted = u64::try_from(payment.unsigned_abs()).unwrap_or(u64::MAX).min(acct.stake);
                acct.stake -= deducted;
                self.state.reward_pool += deducted;
            }
            let released = if acct.slashed { 0 } else { acct.stake };
            acct.stake -= released;
            acct.balance += released;
            let balance = acct.balance;
            let payload = PayloadBuilder::new()
                .put("client", &id)
                .put("payment", payment)
                .put("credited", credited)
                .put("stake_deducted", deducted)
                .put("stake_released", released)
                .put("balance", balance)
                .build();
            self.emit(EventKind::SettleAccount, Emitter::Contract, payload);
        }
        self.state.payouts = payments.clone();
        self.state.phase = Phase::Settle;
        let payload = PayloadBuilder::new()
            .put("reward_pool", self.state.reward_pool)
            .put("total_value", self.total_value())
            .put("compute_units", self.state.meter.compute_units)
            .put("storage_bytes", self.state.meter.storage_bytes)
            .put("state_digest", hex::encode(self.state_digest()))
            .put("phase", Phase::Settle)
            .build();
        self.emit(EventKind::Settled, Emitter::Contract, payload);
        Ok(payments)
    }

    /// Publishes the beacon secret and every seed it produced this round.
    pub fn disclose(&mut self, secret: &[u8; 32]) -> Result<()> {
        self.expect_phase(Phase::Settle)?;
        let commitment = &self.state.config.beacon_commitment;
        if !self
            .state
            .seeds
            .iter()
            .all(|b| randbeacon::verify_seed(commitment, b, secret))
            || <[u8; 32]>::from(Sha256::digest(secret)) != *commitment
        {
            return Err(ContractError::BadDisclosure);
        }
        let seeds = self.state.seeds.clone();
        for b in &seeds {
            let payload = PayloadBuilder::new()
                .put("round", b.round)
                .put("purpose", b.purpose)
                .put("seed_hex", hex::encode(b.seed))
                .put("secret_hex", hex::encode(secret))
                .build();
            self.emit(EventKind::SeedDisclosure, Emitter::Contract, payload);
        }
        for b in &mut self.state.seeds {
            b.proof = Some(*secret);
        }
        self.state.phase = Phase::Audit;
        Ok(())
    }

    /// SHA-256 over a canonical encoding of the contract state.
    pub fn state_digest(&self) -> [u8; 32] {
        let s = &self.state;
        let mut h = Sha256::new();
        let mut put = |bytes: &[u8]| {
            h.update((bytes.len() as u64).to_be_bytes());
            h.update(bytes);
        };
        put(s.phase.as_str().as_bytes());
        put(&s.config.round.to_be_bytes());
        put(&s.reward_pool.to_be_bytes());
        for (id, a) in &s.accounts {
            put(id.as_str().as_bytes());
            put(&a.balance.to_be_bytes());
            put(&a.stake.to_be_bytes());
            put(&[a.registered as u8, a.slashed as u8]);
        }
        for (id, c) in &s.commitments {
            put(id.as_str().as_bytes());
            put(c.as_bytes());
        }
        for (id, r) in &s.reveals {
            put(id.as_str().as_bytes());
            match r {
                RevealStatus::Accepted(p) => put(p.as_bytes()),
                RevealStatus::Slashed(reason) => put(reason.as_str().as_bytes()),
            }
        }
        for (id, v) in &s.payouts {
            put(id.as_str().as_bytes());
            put(&v.to_be_bytes());
        }
        put(&s.meter.compute_units.to_be_bytes());
        put(&s.meter.storage_bytes.to_be_bytes());
        put(&s.meter.hash_ops.to_be_bytes());
        h.finalize().into()
    }
}

impl FromStr for Phase {
    type Err = ();

    fn from_str(s: &str) -> core::result::Result<Self, ()> {
        [
            Phase::Register,
            Phase::Commit,
            Phase::PairingRequested,
            Phase::Reveal,
            Phase::Score,
            Phase::Settle,
            Phase::Audit,
        ]
        .into_iter()
        .find(|p| p.as_str() == s)
        .ok_or(())
    }
}

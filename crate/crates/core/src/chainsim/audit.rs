use alloc::format;
use alloc::string::{String, ToString};

use sha2::{Digest, Sha256};

use super::contract::{Contract, ContractConfig, Phase, ScoringMode};
use super::event::{
    decode_allocations, decode_clients, decode_sign, decode_split, EventError, EventKind,
    LedgerEvent,
};
use crate::blobstore::{ContentPointer, ContentStore, Salt};
use crate::randbeacon::{verify_seed, Purpose, SeedBundle};

/// First point where a transcript and its replay disagree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Divergence {
    pub height: u64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuditReport {
    pub passed: bool,
    pub divergence: Option<Divergence>,
    /// Phase reached by the replay.
    pub final_phase: Option<Phase>,
}

impl AuditReport {
    fn fail(height: u64, reason: impl Into<String>, phase: Option<Phase>) -> Self {
        Self {
            passed: false,
            divergence: Some(Divergence {
                height,
                reason: reason.into(),
            }),
            final_phase: phase,
        }
    }
}

fn config_from_genesis(ev: &LedgerEvent) -> Result<ContractConfig, EventError> {
    let scoring = match ev.str("delta_mode")? {
        "known_prior" => ScoringMode::KnownPrior(decode_sign("sign_matrix", ev.str("sign_matrix")?)?),
        "empirical" => ScoringMode::Empirical,
        other => {
            return Err(EventError::BadValue {
                key: "delta_mode",
                value: other.into(),
            })
        }
    };
    let allowlist = match ev.payload.get("allowlist") {
        Some(list) => Some(decode_clients("allowlist", list)?),
        None => None,
    };
    Ok(ContractConfig {
        round: ev.parse("round")?,
        k: ev.parse("k")?,
        task_count: ev.parse("task_count")?,
        bonus_size: ev.parse("bonus_size")?,
        penalty_size: ev.parse("penalty_size")?,
        min_stake: ev.parse("min_stake")?,
        quorum: ev.parse("quorum")?,
        reward_pool: ev.parse("reward_pool")?,
        alpha: ev.parse("alpha")?,
        default_payment: ev.parse("default_payment")?,
        reveal_deadline: ev.parse("reveal_deadline")?,
        beacon_commitment: ev.hex32("beacon_commitment")?,
        scoring,
        allowlist,
        allocations: decode_allocations("allocations", ev.str("allocations")?)?,
    })
}

fn bundle_from(ev: &LedgerEvent) -> Result<SeedBundle, EventError> {
    let purpose: Purpose = ev.str("purpose")?.parse().map_err(|_| EventError::BadValue {
        key: "purpose",
        value: ev.str("purpose").unwrap_or_default().into(),
    })?;
    Ok(SeedBundle {
        round: ev.parse("round")?,
        purpose,
        seed: ev.hex32("seed_hex")?,
        proof: None,
    })
}

/// Replays `events` on a fresh contract, re-verifying every commitment, seed
/// bundle, pairing and payment against the disclosed beacon secret.
///
/// Passes iff every replayed event equals the recorded one and the replay
/// reaches settlement.
pub fn audit<S: ContentStore + ?Sized>(
    events: &[LedgerEvent],
    store: &S,
    disclosed_secret: &[u8; 32],
) -> AuditReport {
    let Some(genesis) = events.first() else {
        return AuditReport::fail(0, "empty transcript", None);
    };
    if genesis.kind != EventKind::Genesis {
        return AuditReport::fail(0, "first event is not genesis", None);
    }
    let config = match config_from_genesis(genesis) {
        Ok(c) => c,
        Err(e) => return AuditReport::fail(0, e.to_string(), None),
    };
    let opened: [u8; 32] = Sha256::digest(disclosed_secret).into();
    if opened != config.beacon_commitment {
        return AuditReport::fail(0, "disclosed secret does not open the beacon commitment", None);
    }
    let commitment = config.beacon_commitment;
    let mut contract = match Contract::deploy(config) {
        Ok(c) => c,
        Err(e) => return AuditReport::fail(0, e.to_string(), None),
    };

    let mut checked = 0usize;
    loop {
        while checked < contract.events().len() {
            let Some(recorded) = events.get(checked) else {
                return AuditReport::fail(
                    checked as u64,
                    "transcript ends before replay",
                    Some(contract.phase()),
                );
            };
            if *recorded != contract.events()[checked] {
                return AuditReport::fail(
                    checked as u64,
                    format!("recorded {} event differs from replay", recorded.kind),
                    Some(contract.phase()),
                );
            }
            checked += 1;
        }
        let Some(ev) = events.get(checked) else { break };
        if ev.height != checked as u64 {
            return AuditReport::fail(checked as u64, "height out of sequence", Some(contract.phase()));
        }
        if let Err(reason) = apply(&mut contract, ev, store, &commitment, disclosed_secret) {
            return AuditReport::fail(checked as u64, reason, Some(contract.phase()));
        }
    }

    let phase = contract.phase();
    if phase < Phase::Settle {
        return AuditReport::fail(
            events.len() as u64,
            format!("transcript ends in phase {phase} before settlement"),
            Some(phase),
        );
    }
    AuditReport {
        passed: true,
        divergence: None,
        final_phase: Some(phase),
    }
}

fn apply<S: ContentStore + ?Sized>(
    contract: &mut Contract,
    ev: &LedgerEvent,
    store: &S,
    beacon_commitment: &[u8; 32],
    secret: &[u8; 32],
) -> Result<(), String> {
    let e = |err: EventError| err.to_string();
    match ev.kind {
        EventKind::Register => {
            let client = ev.emitter_client().map_err(e)?;
            contract
                .register(&client, ev.parse("stake").map_err(e)?)
                .map_err(|x| x.to_string())
        }
        EventKind::OpenCommit => contract.open_commit().map_err(|x| x.to_string()),
        EventKind::Commit => {
            let client = ev.emitter_client().map_err(e)?;
            let c = crate::blobstore::Commitment(ev.hex32("commitment").map_err(e)?);
            contract.commit(&client, c).map_err(|x| x.to_string())
        }
        EventKind::Pairing => {
            let bundle = bundle_from(ev).map_err(e)?;
            if !verify_seed(beacon_commitment, &bundle, secret) {
                return Err("pairing seed does not verify against the beacon".into());
            }
            contract
                .request_pairing(&bundle)
                .map(|_| ())
                .map_err(|x| x.to_string())
        }
        EventKind::Reveal => {
            let client = ev.emitter_client().map_err(e)?;
            let pointer = ContentPointer(ev.hex32("pointer").map_err(e)?);
            let salt = Salt(ev.hex32("salt").map_err(e)?);
            contract
                .reveal(&client, &pointer, &salt, store)
                .map(|_| ())
                .map_err(|x| x.to_string())
        }
        EventKind::Tick => {
            contract.tick();
            Ok(())
        }
        EventKind::ScoringRule => {
            let bundle = bundle_from(ev).map_err(e)?;
            if !verify_seed(beacon_commitment, &bundle, secret) {
                return Err("task split seed does not verify against the beacon".into());
            }
            let s = decode_sign("sign_matrix", ev.str("sign_matrix").map_err(e)?).map_err(e)?;
            let split = decode_split(ev).map_err(e)?;
            contract
                .score_round(&s, &split, &bundle)
                .map(|_| ())
                .map_err(|x| x.to_string())
        }
        EventKind::SettleAccount | EventKind::Settled => {
            contract.settle().map(|_| ()).map_err(|x| x.to_string())
        }
        EventKind::SeedDisclosure => {
            let recorded = ev.hex32("secret_hex").map_err(e)?;
            if recorded != *secret {
                return Err("disclosed secret differs from the audit secret".into());
            }
            contract.disclose(&recorded).map_err(|x| x.to_string())
        }
        EventKind::Genesis | EventKind::Award => {
            Err(format!("{} event cannot start an operation", ev.kind))
        }
    }
}

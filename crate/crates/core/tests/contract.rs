use fedpp_core::blobstore::{encode_report, make_commitment};
use fedpp_core::chainsim::{
    audit, Award, ContractError, EventKind, Phase, RevealOutcome, ScoringMode, SlashReason,
};
use fedpp_core::randbeacon::{derive_seed, split_tasks};
use fedpp_core::{
    BeaconKey, ClientId, Contract, ContractConfig, ContentPointer, ContentStore, MemoryStore,
    Purpose, Salt, SignMatrix, SignalReport,
};

const SECRET: [u8; 32] = [7; 32];

fn id(s: &str) -> ClientId {
    ClientId::new(s).unwrap()
}

fn ids(n: usize) -> Vec<ClientId> {
    (0..n).map(|i| id(&format!("c{i}"))).collect()
}

fn config(clients: &[ClientId]) -> ContractConfig {
    let key = BeaconKey::from_secret(SECRET);
    ContractConfig {
        round: 1,
        k: 2,
        task_count: 8,
        bonus_size: 2,
        penalty_size: 2,
        min_stake: 100,
        quorum: 2,
        reward_pool: 10_000,
        alpha: 10,
        default_payment: ContractConfig::midpoint_default_payment(10, 2, 2),
        reveal_deadline: 40,
        beacon_commitment: *key.public_commitment(),
        scoring: ScoringMode::KnownPrior(SignMatrix::identity(2).unwrap()),
        allowlist: None,
        allocations: clients.iter().map(|c| (c.clone(), 1_000)).collect(),
    }
}

struct Prepared {
    pointer: ContentPointer,
    salt: Salt,
}

fn prepare(store: &mut MemoryStore, report: &[u8], salt_byte: u8) -> Prepared {
    let blob = encode_report(&SignalReport(report.to_vec()), 2).unwrap();
    Prepared {
        pointer: store.put(blob).unwrap(),
        salt: Salt([salt_byte; 32]),
    }
}

/// Registers and commits every client, then requests pairing.
fn to_reveal(clients: &[ClientId], store: &mut MemoryStore, reports: &[Vec<u8>]) -> (Contract, Vec<Prepared>) {
    let mut c = Contract::deploy(config(clients)).unwrap();
    for cl in clients {
        c.register(cl, 100).unwrap();
    }
    c.open_commit().unwrap();
    let mut prepared = Vec::new();
    for (i, (cl, r)) in clients.iter().zip(reports).enumerate() {
        let p = prepare(store, r, i as u8 + 1);
        c.commit(cl, make_commitment(&p.pointer, p.salt.as_bytes()).unwrap())
            .unwrap();
        prepared.push(p);
    }
    let key = BeaconKey::from_secret(SECRET);
    c.request_pairing(&derive_seed(&key, 1, Purpose::Pairing)).unwrap();
    (c, prepared)
}

fn score(c: &mut Contract) -> Result<Vec<fedpp_core::chainsim::AwardEntry>, ContractError> {
    let key = BeaconKey::from_secret(SECRET);
    let bundle = derive_seed(&key, 1, Purpose::TaskSplit);
    let split = split_tasks(&bundle.seed, 8, 2, 2).unwrap();
    let s = SignMatrix::identity(2).unwrap();
    c.score_round(&s, &split, &bundle)
}

fn full_round(clients: &[ClientId], reports: &[Vec<u8>]) -> (Contract, MemoryStore) {
    let mut store = MemoryStore::new();
    let (mut c, prepared) = to_reveal(clients, &mut store, reports);
    for (cl, p) in clients.iter().zip(&prepared) {
        assert_eq!(c.reveal(cl, &p.pointer, &p.salt, &store).unwrap(), RevealOutcome::Accepted);
    }
    score(&mut c).unwrap();
    c.settle().unwrap();
    c.disclose(&SECRET).unwrap();
    (c, store)
}

#[test]
fn register_examples() {
    let cs = ids(2);
    let mut c = Contract::deploy(config(&cs)).unwrap();
    c.register(&cs[0], 100).unwrap();
    assert!(c.account(&cs[0]).unwrap().registered);
    assert_eq!(
        c.register(&cs[0], 100),
        Err(ContractError::DuplicateRegistration(cs[0].clone()))
    );
    assert_eq!(
        c.register(&cs[1], 99),
        Err(ContractError::InsufficientStake { offered: 99, min: 100 })
    );
}

#[test]
fn commit_examples() {
    let cs = ids(3);
    let mut c = Contract::deploy(config(&cs[..2])).unwrap();
    c.register(&cs[0], 100).unwrap();
    c.register(&cs[1], 100).unwrap();
    let commitment = make_commitment(&ContentPointer([1; 32]), &[2; 32]).unwrap();
    assert!(matches!(c.commit(&cs[0], commitment), Err(ContractError::WrongPhase { .. })));
    c.open_commit().unwrap();
    c.commit(&cs[0], commitment).unwrap();
    assert_eq!(c.meter().storage_bytes, 32);
    assert_eq!(c.commit(&cs[0], commitment), Err(ContractError::DuplicateCommit(cs[0].clone())));
    assert_eq!(c.commit(&cs[2], commitment), Err(ContractError::NotRegistered(cs[2].clone())));
}

#[test]
fn pairing_uses_committed_clients_only() {
    let cs = ids(5);
    let mut cfg = config(&cs);
    cfg.quorum = 4;
    let mut c = Contract::deploy(cfg).unwrap();
    for cl in &cs {
        c.register(cl, 100).unwrap();
    }
    c.open_commit().unwrap();
    for cl in &cs[..4] {
        c.commit(cl, make_commitment(&ContentPointer([1; 32]), &[2; 32]).unwrap())
            .unwrap();
    }
    let key = BeaconKey::from_secret(SECRET);
    let p = c.request_pairing(&derive_seed(&key, 1, Purpose::Pairing)).unwrap();
    assert!(p.is_valid_over(&cs[..4]));
    assert_eq!(c.phase(), Phase::Reveal);
}

#[test]
fn quorum_not_reached() {
    let cs = ids(2);
    let mut c = Contract::deploy(config(&cs)).unwrap();
    c.register(&cs[0], 100).unwrap();
    c.open_commit().unwrap();
    c.commit(&cs[0], make_commitment(&ContentPointer([1; 32]), &[2; 32]).unwrap())
        .unwrap();
    let key = BeaconKey::from_secret(SECRET);
    assert_eq!(
        c.request_pairing(&derive_seed(&key, 1, Purpose::Pairing)),
        Err(ContractError::QuorumNotReached { have: 1, need: 2 })
    );
}

#[test]
fn reveal_examples() {
    let cs = ids(4);
    let reports = vec![vec![0, 1, 0, 1, 0, 1, 0, 1]; 4];
    let mut store = MemoryStore::new();
    let (mut c, prepared) = to_reveal(&cs, &mut store, &reports);
    let before = c.total_value();

    assert_eq!(
        c.reveal(&cs[0], &prepared[0].pointer, &prepared[0].salt, &store).unwrap(),
        RevealOutcome::Accepted
    );
    let altered = Salt([0xee; 32]);
    assert_eq!(
        c.reveal(&cs[1], &prepared[1].pointer, &altered, &store).unwrap(),
        RevealOutcome::Slashed(SlashReason::CommitMismatch)
    );
    assert_eq!(c.account(&cs[1]).unwrap().stake, 0);

    // Commit to a pointer that was never stored.
    let cs2 = ids(2);
    let mut store2 = MemoryStore::new();
    let mut c2 = Contract::deploy(config(&cs2)).unwrap();
    for cl in &cs2 {
        c2.register(cl, 100).unwrap();
    }
    c2.open_commit().unwrap();
    let ghost = ContentPointer([0xab; 32]);
    c2.commit(&cs2[0], make_commitment(&ghost, &[1; 32]).unwrap()).unwrap();
    let p = prepare(&mut store2, &reports[0], 2);
    c2.commit(&cs2[1], make_commitment(&p.pointer, p.salt.as_bytes()).unwrap())
        .unwrap();
    let key = BeaconKey::from_secret(SECRET);
    c2.request_pairing(&derive_seed(&key, 1, Purpose::Pairing)).unwrap();
    assert_eq!(
        c2.reveal(&cs2[0], &ghost, &Salt([1; 32]), &store2).unwrap(),
        RevealOutcome::Slashed(SlashReason::UnresolvablePointer)
    );
    assert_eq!(c.total_value(), before);
}

#[test]
fn malformed_report_is_slashed() {
    let cs = ids(2);
    let mut store = MemoryStore::new();
    // Wrong task count: 3 signals for an 8-task round.
    let short = prepare(&mut store, &[0, 1, 0], 9);
    let mut c = Contract::deploy(config(&cs)).unwrap();
    for cl in &cs {
        c.register(cl, 100).unwrap();
    }
    c.open_commit().unwrap();
    for cl in &cs {
        c.commit(cl, make_commitment(&short.pointer, short.salt.as_bytes()).unwrap())
            .unwrap();
    }
    let key = BeaconKey::from_secret(SECRET);
    c.request_pairing(&derive_seed(&key, 1, Purpose::Pairing)).unwrap();
    assert_eq!(
        c.reveal(&cs[0], &short.pointer, &short.salt, &store).unwrap(),
        RevealOutcome::Slashed(SlashReason::MalformedReport)
    );
}

#[test]
fn score_examples() {
    let cs = ids(2);
    let (c, _) = full_round(&cs, &[vec![0, 1, 0, 1, 0, 1, 0, 1], vec![0, 1, 0, 1, 0, 1, 0, 1]]);
    let awards = &c.state().awards;
    assert_eq!(awards.len(), 2);
    assert_eq!(awards[0].award, awards[1].award);
    // 2 bonus + 2·2 penalty lookups for the only pair.
    assert_eq!(c.meter().compute_units, 6);
    assert_eq!(c.meter().storage_bytes, 4 * 32);
}

#[test]
fn slashed_partner_gives_default_payment() {
    let cs = ids(2);
    let reports = vec![vec![0, 1, 0, 1, 0, 1, 0, 1]; 2];
    let mut store = MemoryStore::new();
    let (mut c, prepared) = to_reveal(&cs, &mut store, &reports);
    c.reveal(&cs[0], &prepared[0].pointer, &prepared[0].salt, &store).unwrap();
    c.reveal(&cs[1], &prepared[1].pointer, &Salt([0; 32]), &store).unwrap();
    let awards = score(&mut c).unwrap();
    let of = |cl: &ClientId| awards.iter().find(|a| &a.client == cl).unwrap().award;
    assert_eq!(of(&cs[0]), Award::Default);
    assert_eq!(of(&cs[1]), Award::Forfeit);
    let pay = c.settle().unwrap();
    assert_eq!(pay[&cs[0]], 10 * 2 * 2 * 2 / 2);
    assert_eq!(pay[&cs[1]], 0);
}

#[test]
fn no_reveals_gives_empty_payment_list() {
    let cs = ids(2);
    let reports = vec![vec![0; 8]; 2];
    let mut store = MemoryStore::new();
    let (mut c, _) = to_reveal(&cs, &mut store, &reports);
    assert_eq!(score(&mut c), Err(ContractError::RevealsPending(2)));
    while c.height() < c.config().reveal_deadline {
        c.tick();
    }
    assert!(score(&mut c).unwrap().is_empty());
    assert!(c.account(&cs[0]).unwrap().slashed);
    assert_eq!(c.meter().compute_units, 0);
}

#[test]
fn settle_examples() {
    let cs = ids(2);
    // Disagreeing on bonus tasks, agreeing on penalty tasks: negative score.
    let (c, _) = full_round(&cs, &[vec![0; 8], vec![0; 8]]);
    assert_eq!(c.state().payouts[&cs[0]], 0);
    let total = c.total_value();
    assert_eq!(total, 10_000 + 2 * 1_000);
}

/// Reports that agree on bonus tasks iff `agree`, and always agree on penalty pairs iff `!agree`.
fn crafted(agree: bool) -> (Vec<u8>, Vec<u8>) {
    let key = BeaconKey::from_secret(SECRET);
    let split = split_tasks(&derive_seed(&key, 1, Purpose::TaskSplit).seed, 8, 2, 2).unwrap();
    let mut a = vec![0u8; 8];
    let mut b = vec![0u8; 8];
    for &t in &split.bonus {
        b[t] = u8::from(!agree);
    }
    for &t in &split.penalty_1 {
        a[t] = 1;
    }
    for &t in &split.penalty_2 {
        b[t] = u8::from(!agree);
    }
    (a, b)
}

fn scored_contract(cfg: ContractConfig, a: &[u8], b: &[u8]) -> (Contract, Vec<ClientId>) {
    let cs = ids(2);
    let key = BeaconKey::from_secret(SECRET);
    let mut store = MemoryStore::new();
    let mut c = Contract::deploy(cfg).unwrap();
    for cl in &cs {
        c.register(cl, 100).unwrap();
    }
    c.open_commit().unwrap();
    let pa = prepare(&mut store, a, 1);
    let pb = prepare(&mut store, b, 2);
    c.commit(&cs[0], make_commitment(&pa.pointer, pa.salt.as_bytes()).unwrap()).unwrap();
    c.commit(&cs[1], make_commitment(&pb.pointer, pb.salt.as_bytes()).unwrap()).unwrap();
    c.request_pairing(&derive_seed(&key, 1, Purpose::Pairing)).unwrap();
    c.reveal(&cs[0], &pa.pointer, &pa.salt, &store).unwrap();
    c.reveal(&cs[1], &pb.pointer, &pb.salt, &store).unwrap();
    score(&mut c).unwrap();
    (c, cs)
}

#[test]
fn negative_payment_is_clamped_to_stake() {
    let mut cfg = config(&ids(2));
    cfg.alpha = 1_000;
    let (a, b) = crafted(false);
    let (mut c, cs) = scored_contract(cfg, &a, &b);
    let before = c.total_value();
    let pay = c.settle().unwrap();
    // 0 bonus agreements, 4 of 4 penalty agreements: 0·4 − 2·4.
    assert_eq!(pay[&cs[0]], -8_000);
    assert_eq!(c.account(&cs[0]).unwrap().stake, 0);
    assert_eq!(c.account(&cs[0]).unwrap().balance, 900);
    assert_eq!(c.state().reward_pool, 10_000 + 200);
    assert_eq!(c.total_value(), before);
}

#[test]
fn positive_payment_moves_from_pool() {
    let (a, b) = crafted(true);
    let (mut c, cs) = scored_contract(config(&ids(2)), &a, &b);
    let pay = c.settle().unwrap();
    assert_eq!(pay[&cs[0]], 10 * 8);
    assert_eq!(c.account(&cs[0]).unwrap().balance, 1_000 + 80);
    assert_eq!(c.state().reward_pool, 10_000 - 160);
}

#[test]
fn insufficient_pool_is_atomic() {
    let mut cfg = config(&ids(2));
    cfg.reward_pool = 1;
    let (a, b) = crafted(true);
    let (mut c, _) = scored_contract(cfg, &a, &b);
    let state = c.state().clone();
    let len = c.events().len();
    assert_eq!(
        c.settle(),
        Err(ContractError::InsufficientPool { need: 160, have: 1 })
    );
    assert_eq!(c.state(), &state);
    assert_eq!(c.events().len(), len);
}

#[test]
fn phase_safety_leaves_state_untouched() {
    let cs = ids(2);
    let mut store = MemoryStore::new();
    let reports = vec![vec![0; 8]; 2];
    let (mut c, prepared) = to_reveal(&cs, &mut store, &reports);
    let state = c.state().clone();
    let len = c.events().len();
    assert!(c.register(&cs[0], 100).is_err());
    assert!(c.open_commit().is_err());
    assert!(c.commit(&cs[0], make_commitment(&prepared[0].pointer, &[0; 32]).unwrap()).is_err());
    assert!(c.settle().is_err());
    assert!(c.disclose(&SECRET).is_err());
    let key = BeaconKey::from_secret(SECRET);
    assert!(c.request_pairing(&derive_seed(&key, 1, Purpose::Pairing)).is_err());
    assert_eq!(c.state(), &state);
    assert_eq!(c.events().len(), len);
}

#[test]
fn audit_examples() {
    let cs = ids(4);
    let reports: Vec<Vec<u8>> = (0..4).map(|i| (0..8).map(|t| ((t + i) % 2) as u8).collect()).collect();
    let (c, store) = full_round(&cs, &reports);
    let events = c.events().to_vec();
    assert!(audit(&events, &store, &SECRET).passed);

    // Edited payment.
    let mut tampered = events.clone();
    let h = tampered.iter().position(|e| e.kind == EventKind::SettleAccount).unwrap();
    let v: i128 = tampered[h].payload["payment"].parse().unwrap();
    tampered[h].payload.insert("payment".into(), (v + 1).to_string());
    let r = audit(&tampered, &store, &SECRET);
    assert!(!r.passed);
    assert_eq!(r.divergence.unwrap().height, h as u64);

    // Replaced seed at the pairing event.
    let mut tampered = events.clone();
    let h = tampered.iter().position(|e| e.kind == EventKind::Pairing).unwrap();
    tampered[h].payload.insert("seed_hex".into(), "00".repeat(32));
    let r = audit(&tampered, &store, &SECRET);
    assert!(!r.passed);
    assert_eq!(r.divergence.unwrap().height, h as u64);

    // Wrong secret.
    assert!(!audit(&events, &store, &[8; 32]).passed);
}

#[test]
fn audit_requires_settlement() {
    let cs = ids(2);
    let mut store = MemoryStore::new();
    let (c, _) = to_reveal(&cs, &mut store, &[vec![0; 8], vec![0; 8]]);
    let r = audit(c.events(), &store, &SECRET);
    assert!(!r.passed);
    assert_eq!(r.final_phase, Some(Phase::Reveal));
}

#[test]
fn odd_cohort_scores_extra_pair() {
    let cs = ids(3);
    let reports: Vec<Vec<u8>> = vec![vec![0, 1, 0, 1, 0, 1, 0, 1]; 3];
    let (c, store) = full_round(&cs, &reports);
    assert_eq!(c.state().awards.len(), 3);
    assert_eq!(c.meter().compute_units, 2 * 6);
    assert!(audit(c.events(), &store, &SECRET).passed);
}

#[test]
fn replay_is_deterministic() {
    let cs = ids(4);
    let reports: Vec<Vec<u8>> = (0..4).map(|i| (0..8).map(|t| ((t * i) % 2) as u8).collect()).collect();
    let (a, _) = full_round(&cs, &reports);
    let (b, _) = full_round(&cs, &reports);
    assert_eq!(a.events(), b.events());
    assert_eq!(a.state_digest(), b.state_digest());
}

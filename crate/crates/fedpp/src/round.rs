//! One full protocol round driven from a scenario and a seed.

use fedpp_core::blobstore::{encode_report, make_commitment};
use fedpp_core::chainsim::{audit, Award, ContractError, CostMeter, RevealOutcome, ScoringMode};
use fedpp_core::fltoy::{
    apply_strategy, draw_signals, fedavg, infer_labels, local_train, ClientModel, LinearModelParams,
    SyntheticTask, World,
};
use fedpp_core::randbeacon::{derive_seed, select_validator, split_tasks};
use fedpp_core::rng::child_seed;
use fedpp_core::{
    BeaconKey, ClientId, ContentPointer, ContentStore, Contract, ContractConfig, LedgerEvent,
    MemoryStore, PairingAssignment, Purpose, Salt, SignMatrix, SignalReport, TaskSplit,
};
use num_rational::Ratio;
use sha2::{Digest, Sha256};

use crate::error::{HarnessError, Result};
use crate::scenario::{Behavior, DeltaMode, Rational, ScenarioConfig, SignalModel};

/// `SHA-256(master_seed ‖ index)`, both big-endian `u64`.
pub fn trial_seed(master_seed: u64, index: u64) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(master_seed.to_be_bytes());
    h.update(index.to_be_bytes());
    h.finalize().into()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClientOutcome {
    pub id: ClientId,
    /// Strategy label, with the behavior appended when not honest.
    pub group: String,
    pub effort: Rational,
    pub behavior: Behavior,
    /// Currency payment awarded at settlement, before stake clamping.
    pub payment: i128,
    /// `payment / (alpha·b·p²)`.
    pub normalized_payment: f64,
    /// Net change of the client's holdings, minus the effort cost.
    pub utility: f64,
    pub slashed: bool,
    /// `None` for clients that were never paired.
    pub award: Option<Award>,
}

#[derive(Debug, Clone)]
pub struct RoundResult {
    pub seed: [u8; 32],
    /// Roster order.
    pub clients: Vec<ClientOutcome>,
    pub meter: CostMeter,
    pub sign_matrix: SignMatrix,
    pub split: TaskSplit,
    pub pairing: PairingAssignment,
    pub events: Vec<LedgerEvent>,
    pub beacon_secret: [u8; 32],
    /// Operations the contract refused to copycat clients.
    pub copycat_rejections: Vec<(ClientId, ContractError)>,
    /// Off-chain aggregator drawn with the sampling seed.
    pub validator: ClientId,
    /// Accuracy of the FedAvg model on the public set (logistic model only).
    pub global_accuracy: Option<f64>,
    pub total_value: u128,
}

impl RoundResult {
    pub fn client(&self, id: &ClientId) -> Option<&ClientOutcome> {
        self.clients.iter().find(|c| &c.id == id)
    }
}

pub fn contract_config(cfg: &ScenarioConfig, beacon: &BeaconKey) -> Result<ContractConfig> {
    let scoring = match cfg.delta_mode {
        DeltaMode::KnownPrior => ScoringMode::KnownPrior(cfg.known_prior_sign_matrix()?),
        DeltaMode::Empirical => ScoringMode::Empirical,
    };
    let n = cfg.roster.len() as u64;
    Ok(ContractConfig {
        round: cfg.round,
        k: cfg.k,
        task_count: cfg.m,
        bonus_size: cfg.b,
        penalty_size: cfg.p,
        min_stake: cfg.min_stake,
        quorum: cfg.quorum,
        reward_pool: cfg.reward_pool,
        alpha: cfg.alpha,
        default_payment: cfg.default_payment(),
        // Genesis, n registrations, the commit window, n commits, pairing, n reveals.
        reveal_deadline: 3 * n + 3,
        beacon_commitment: *beacon.public_commitment(),
        scoring,
        allowlist: None,
        allocations: cfg.roster.iter().map(|r| (r.id.clone(), r.stake)).collect(),
    })
}

struct Signals {
    reports: Vec<Option<SignalReport>>,
    models: Vec<Option<LinearModelParams>>,
    public: Vec<Vec<f64>>,
}

fn draw_all(cfg: &ScenarioConfig, world: &World, seed: &[u8; 32]) -> Result<Signals> {
    let effort_model = cfg.effort_model();
    let n = cfg.roster.len();
    let mut out = Signals {
        reports: vec![None; n],
        models: vec![None; n],
        public: Vec::new(),
    };
    let task = match cfg.signal_model {
        SignalModel::Confusion => None,
        SignalModel::Logistic => {
            let l = cfg.logistic();
            let task = SyntheticTask::generate(cfg.k, l.dim, l.noise, child_seed(seed, b"task", 0))?;
            out.public = task
                .featurize(world.ground_truth(), child_seed(seed, b"public", 0))
                .features;
            Some((task, l))
        }
    };
    for (i, r) in cfg.roster.iter().enumerate() {
        if r.behavior == Behavior::Copycat {
            continue;
        }
        let model = ClientModel {
            id: r.id.clone(),
            effort: r.effort.0,
            strategy: r.strategy.0.clone(),
        };
        let signals = match &task {
            None => draw_signals(
                world,
                model.accuracy(&effort_model, cfg.k)?,
                child_seed(seed, b"signals", i as u64),
            )?,
            Some((task, l)) => {
                let data = task.sample(&cfg.prior(), l.local_samples, child_seed(seed, b"local", i as u64))?;
                let epochs = (model.effective_effort() * Ratio::from_integer(l.max_epochs as u64)).to_integer();
                let step = l.step.unwrap_or_else(|| 1.0 / data.max_sq_norm());
                let init = LinearModelParams::zeros(cfg.k * task.feature_dim(), l.local_samples as u64);
                let params = local_train(&data, &init, epochs as u32, cfg.k, step)?;
                let labels = infer_labels(&params, &out.public, cfg.k)?;
                out.models[i] = Some(params);
                labels
            }
        };
        let report = apply_strategy(&model.strategy, &signals, cfg.k, child_seed(seed, b"strategy", i as u64))?;
        out.reports[i] = Some(report);
    }
    Ok(out)
}

/// A report differing from `r` in every entry.
fn equivocation(r: &SignalReport, k: usize) -> SignalReport {
    SignalReport(r.as_slice().iter().map(|&s| ((s as usize + 1) % k) as u8).collect())
}

/// Runs register → draw/train → infer → encode+put → commit → pairing →
/// reveal → score → settle → disclose → audit.
pub fn run_round<S: ContentStore>(cfg: &ScenarioConfig, seed: [u8; 32], store: &mut S) -> Result<RoundResult> {
    cfg.validate()?;
    let secret = child_seed(&seed, b"beacon", 0);
    let beacon = BeaconKey::from_secret(secret);
    let mut contract = Contract::deploy(contract_config(cfg, &beacon)?)?;

    for r in &cfg.roster {
        contract.register(&r.id, r.stake)?;
    }
    contract.open_commit()?;

    let world = World::generate(cfg.k, cfg.m, &cfg.prior(), child_seed(&seed, b"world", 0))?;
    let signals = draw_all(cfg, &world, &seed)?;

    let mut openings: Vec<Option<(ContentPointer, Salt)>> = vec![None; cfg.roster.len()];
    for (i, r) in cfg.roster.iter().enumerate() {
        let Some(report) = &signals.reports[i] else {
            continue;
        };
        let pointer = store.put(encode_report(report, cfg.k)?)?;
        let salt = Salt(child_seed(&seed, b"salt", i as u64));
        contract.commit(&r.id, make_commitment(&pointer, salt.as_bytes())?)?;
        let revealed = match r.behavior {
            Behavior::Equivocate => store.put(encode_report(&equivocation(report, cfg.k), cfg.k)?)?,
            _ => pointer,
        };
        openings[i] = Some((revealed, salt));
    }

    let pairing = contract.request_pairing(&derive_seed(&beacon, cfg.round, Purpose::Pairing))?;

    let mut first_public: Option<(ContentPointer, Salt)> = None;
    for (i, r) in cfg.roster.iter().enumerate() {
        let Some((pointer, salt)) = &openings[i] else {
            continue;
        };
        if r.behavior == Behavior::NoReveal {
            continue;
        }
        if contract.reveal(&r.id, pointer, salt, store)? == RevealOutcome::Accepted && first_public.is_none() {
            first_public = Some((*pointer, *salt));
        }
    }

    // Copycats now try to reuse a revealed report.
    let mut copycat_rejections = Vec::new();
    for r in cfg.roster.iter().filter(|r| r.behavior == Behavior::Copycat) {
        let (pointer, _) = first_public.unwrap_or((ContentPointer([0; 32]), Salt([0; 32])));
        let own_salt = Salt(child_seed(&seed, b"copycat", 0));
        if let Err(e) = contract.commit(&r.id, make_commitment(&pointer, own_salt.as_bytes())?) {
            copycat_rejections.push((r.id.clone(), e));
        }
        if let Err(e) = contract.reveal(&r.id, &pointer, &own_salt, store) {
            copycat_rejections.push((r.id.clone(), e));
        }
    }

    let pending = contract
        .state()
        .commitments
        .keys()
        .any(|c| !contract.state().reveals.contains_key(c));
    if pending {
        while contract.height() < contract.config().reveal_deadline {
            contract.tick();
        }
    }

    let split_seed = derive_seed(&beacon, cfg.round, Purpose::TaskSplit);
    let split = split_tasks(&split_seed.seed, cfg.m, cfg.b, cfg.p)?;
    let s = match &contract.config().scoring {
        ScoringMode::KnownPrior(s) => s.clone(),
        ScoringMode::Empirical => contract.empirical_sign_matrix()?,
    };
    let awards = contract.score_round(&s, &split, &split_seed)?;
    let payments = contract.settle()?;
    contract.disclose(&secret)?;

    let report = audit(contract.events(), &*store, &secret);
    if let Some(d) = report.divergence {
        return Err(HarnessError::AuditFailed {
            height: d.height,
            reason: d.reason,
        });
    }

    let committed = contract.committed();
    let validator = select_validator(&derive_seed(&beacon, cfg.round, Purpose::Sampling).seed, &committed)?;
    let global_accuracy = match cfg.signal_model {
        SignalModel::Confusion => None,
        SignalModel::Logistic => {
            let updates: Vec<LinearModelParams> = signals.models.iter().flatten().cloned().collect();
            let global = fedavg(&updates)?;
            let predicted = infer_labels(&global, &signals.public, cfg.k)?;
            let hits = predicted
                .as_slice()
                .iter()
                .zip(world.ground_truth())
                .filter(|(a, b)| a == b)
                .count();
            Some(hits as f64 / cfg.m as f64)
        }
    };

    let scale = cfg.payment_scale() as f64;
    let clients = cfg
        .roster
        .iter()
        .map(|r| {
            let acct = contract.account(&r.id).cloned().unwrap_or_default();
            let payment = payments.get(&r.id).copied().unwrap_or(0);
            let net = (acct.balance as i128 + acct.stake as i128) - r.stake as i128;
            let effort_cost = cfg.cost_per_effort as f64 * r.effort.to_f64();
            ClientOutcome {
                id: r.id.clone(),
                group: r.group_label(),
                effort: r.effort,
                behavior: r.behavior,
                payment,
                normalized_payment: payment as f64 / scale,
                utility: net as f64 - effort_cost,
                slashed: acct.slashed,
                award: awards.iter().find(|a| a.client == r.id).map(|a| a.award),
            }
        })
        .collect();

    Ok(RoundResult {
        seed,
        clients,
        meter: contract.meter(),
        sign_matrix: s,
        split,
        pairing,
        total_value: contract.total_value(),
        events: contract.into_events(),
        beacon_secret: secret,
        copycat_rejections,
        validator,
        global_accuracy,
    })
}

/// [`run_round`] against a fresh in-memory store.
pub fn run_round_in_memory(cfg: &ScenarioConfig, seed: [u8; 32]) -> Result<(RoundResult, MemoryStore)> {
    let mut store = MemoryStore::new();
    let r = run_round(cfg, seed, &mut store)?;
    Ok((r, store))
}


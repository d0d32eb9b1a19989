//! Simulated ledger hosting the federated-learning coordination contract.
//!
//! The contract walks one round through
//! `Register → Commit → PairingRequested → Reveal → Score → Settle → Audit`.
//! Every accepted operation appends [`LedgerEvent`]s; rejected operations
//! leave state and log untouched. [`audit`] replays a log against a fresh
//! contract and reports the first height where it diverges.

mod audit;
mod contract;
mod event;

pub use crate::id::{ClientId, InvalidClientId};
pub use audit::{audit, AuditReport, Divergence};
pub use contract::{
    Account, Award, AwardEntry, AwardRole, Contract, ContractConfig, ContractError, ContractState,
    CostMeter, Phase, RevealOutcome, RevealStatus, ScoringMode, SlashReason,
};
pub use event::{Emitter, EventError, EventKind, LedgerEvent, Payload, CONTRACT_EMITTER};

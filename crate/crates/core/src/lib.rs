//! Core of a desk-scale simulator for blockchain-coordinated federated learning
//! incentivized with multi-task peer prediction.
//!
//! Everything in this crate is deterministic and IO-free so it builds for
//! `no_std` targets with an allocator:
//!
//! - [`mechanism`]: the Correlated Agreement scoring rule with integer-exact payments.
//! - [`blobstore`]: content pointers, the canonical report encoding and salted commitments.
//! - [`randbeacon`]: a keyed-hash randomness beacon, client pairing and task splits.
//! - [`chainsim`]: the coordination contract, its event log, cost meter and audit replay.
//! - [`fltoy`]: synthetic world, signal models, client strategies and exact FedAvg.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod blobstore;
pub mod id;
pub mod chainsim;
pub mod fltoy;
pub mod mechanism;
pub mod randbeacon;
pub mod rng;

pub use blobstore::{Blob, Commitment, ContentPointer, ContentStore, MemoryStore, Salt};
pub use chainsim::{Contract, ContractConfig, LedgerEvent};
pub use id::ClientId;
pub use mechanism::{
    DeltaMatrix, JointDistribution, PairPayment, Signal, SignMatrix, SignalReport, TaskSplit,
};
pub use randbeacon::{BeaconKey, PairingAssignment, Purpose, SeedBundle};

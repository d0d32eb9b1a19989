//! Scenario harness for the fedpp simulator: full-round orchestration,
//! Monte Carlo sweeps, on-disk content store, JSON Lines transcripts and
//! result tables. The `fedpp` binary wraps these behind a CLI.

pub mod error;
pub mod montecarlo;
pub mod report;
pub mod round;
pub mod scenario;
pub mod store;
pub mod transcript;

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

pub use error::{HarnessError, Result};
pub use montecarlo::{monte_carlo, monte_carlo_with_threads, summarize, Metric, Summary, TrialOutcome};
pub use report::{emit_report, Format};
pub use round::{run_round, run_round_in_memory, trial_seed, ClientOutcome, RoundResult};
pub use scenario::{Behavior, DeltaMode, Rational, RosterEntry, ScenarioConfig, SignalModel};
pub use store::DirStore;
pub use transcript::{read_transcript, verify_transcript, write_transcript};

use fedpp_core::chainsim::EventKind;

/// One beacon seed opened at audit time.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AuditRecord {
    pub round: String,
    pub purpose: String,
    pub seed_hex: String,
    pub secret_hex: String,
}

impl AuditRecord {
    pub fn from_events(r: &RoundResult) -> Vec<AuditRecord> {
        r.events
            .iter()
            .filter(|e| e.kind == EventKind::SeedDisclosure)
            .map(|e| AuditRecord {
                round: e.payload["round"].clone(),
                purpose: e.payload["purpose"].clone(),
                seed_hex: e.payload["seed_hex"].clone(),
                secret_hex: e.payload["secret_hex"].clone(),
            })
            .collect()
    }
}

/// Files written by [`run_to_dir`].
#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub transcript: PathBuf,
    pub cas: PathBuf,
    pub audit: PathBuf,
    pub reports: Vec<PathBuf>,
}

/// Runs one round with blobs under `<out>/cas`, then writes the transcript,
/// the audit records and the result tables.
pub fn run_to_dir(cfg: &ScenarioConfig, seed: u64, out: &Path, format: Format) -> Result<(RoundResult, RunArtifacts)> {
    let cas = out.join("cas");
    let mut store = DirStore::create(&cas).map_err(|e| HarnessError::io(&cas, e))?;
    let result = run_round(cfg, trial_seed(seed, 0), &mut store)?;

    let transcript = out.join("transcript.jsonl");
    write_transcript(&transcript, &result.events)?;
    let audit = out.join("audit.json");
    let records = AuditRecord::from_events(&result);
    let text = serde_json::to_string_pretty(&records).map_err(|source| HarnessError::Json {
        path: audit.clone(),
        source,
    })?;
    fs::write(&audit, text + "\n").map_err(|e| HarnessError::io(&audit, e))?;

    let summary = summarize(&[TrialOutcome::from_round(0, &result)]);
    let reports = emit_report(&summary, cfg, format, out)?;
    Ok((
        result,
        RunArtifacts {
            transcript,
            cas,
            audit,
            reports,
        },
    ))
}

/// Empirical delta and sign matrices over every pair of canonical report
/// blobs in `dir`. `k` defaults to one more than the largest signal seen.
pub fn delta_from_reports(
    dir: &Path,
    k: Option<usize>,
) -> Result<(fedpp_core::DeltaMatrix, fedpp_core::SignMatrix, usize)> {
    use fedpp_core::blobstore::{decode_report, Blob};
    use fedpp_core::mechanism::{delta_matrix, sign_matrix, MAX_ALPHABET};
    use fedpp_core::JointDistribution;

    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| HarnessError::io(dir, e))?
        .map(|e| e.map(|e| e.path()).map_err(|err| HarnessError::io(dir, err)))
        .collect::<Result<_>>()?;
    paths.retain(|p| {
        p.is_file() && !p.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.starts_with('.'))
    });
    paths.sort();
    let mut reports = Vec::with_capacity(paths.len());
    for p in &paths {
        let bytes = fs::read(p).map_err(|e| HarnessError::io(p, e))?;
        reports.push(decode_report(&Blob::new(bytes)?, MAX_ALPHABET)?);
    }
    if reports.len() < 2 {
        return Err(HarnessError::Config(format!(
            "{}: need at least two reports, found {}",
            dir.display(),
            reports.len()
        )));
    }
    let seen = reports
        .iter()
        .flat_map(|r| r.as_slice().iter().copied())
        .max()
        .map_or(2, |s| (s as usize + 1).max(2));
    let k = k.unwrap_or(seen);
    if k < seen {
        return Err(HarnessError::Config(format!("signal {} does not fit k = {k}", seen - 1)));
    }
    let pairs = (0..reports.len())
        .flat_map(|i| (i + 1..reports.len()).map(move |j| (i, j)))
        .map(|(i, j)| (&reports[i], &reports[j]));
    let joint = JointDistribution::from_paired_reports(k, pairs)?;
    let delta = delta_matrix(&joint);
    let s = sign_matrix(&delta);
    Ok((delta, s, reports.len()))
}

//! Independent trials of a scenario, merged by trial index.

use rayon::prelude::*;
use rayon::ThreadPoolBuilder;
use serde::Serialize;

use crate::error::{HarnessError, Result};
use crate::round::{run_round_in_memory, trial_seed, ClientOutcome, RoundResult};
use crate::scenario::{Rational, ScenarioConfig};

/// The per-client slice of a round kept for aggregation.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub index: u64,
    pub clients: Vec<ClientOutcome>,
    pub compute_units: u64,
    pub storage_bytes: u64,
}

impl TrialOutcome {
    pub fn from_round(index: u64, r: &RoundResult) -> Self {
        Self {
            index,
            clients: r.clients.clone(),
            compute_units: r.meter.compute_units,
            storage_bytes: r.meter.storage_bytes,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupStats {
    pub strategy: String,
    pub effort: Rational,
    pub members: usize,
    pub mean_payment: f64,
    /// `None` with fewer than two trials.
    pub se_payment: Option<f64>,
    pub mean_utility: f64,
    pub se_utility: Option<f64>,
    pub slash_rate: f64,
    /// Group average per trial.
    #[serde(skip)]
    pub payments: Vec<f64>,
    #[serde(skip)]
    pub utilities: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClientStats {
    pub client: String,
    pub strategy: String,
    pub effort: Rational,
    pub mean_payment: f64,
    pub mean_utility: f64,
    pub slash_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub trials: u64,
    pub groups: Vec<GroupStats>,
    pub clients: Vec<ClientStats>,
    pub mean_compute_units: f64,
    pub mean_storage_bytes: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Payment,
    Utility,
}

/// Mean and standard error of a sample; the error is `None` below two points.
pub fn mean_se(xs: &[f64]) -> (f64, Option<f64>) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, None);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, None);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, Some((var / n).sqrt()))
}

impl Summary {
    pub fn group(&self, strategy: &str, effort: Rational) -> Option<&GroupStats> {
        self.groups
            .iter()
            .find(|g| g.strategy == strategy && g.effort == effort)
    }

    /// Mean and standard error of the per-trial difference `a − b`.
    pub fn gap(&self, a: &GroupStats, b: &GroupStats, metric: Metric) -> (f64, Option<f64>) {
        let (xa, xb) = match metric {
            Metric::Payment => (&a.payments, &b.payments),
            Metric::Utility => (&a.utilities, &b.utilities),
        };
        let diffs: Vec<f64> = xa.iter().zip(xb).map(|(x, y)| x - y).collect();
        mean_se(&diffs)
    }
}

/// Folds trial outcomes in index order.
pub fn summarize(trials: &[TrialOutcome]) -> Summary {
    let mut groups: Vec<GroupStats> = Vec::new();
    let mut slashed_counts: Vec<usize> = Vec::new();
    let Some(first) = trials.first() else {
        return Summary {
            trials: 0,
            groups,
            clients: Vec::new(),
            mean_compute_units: f64::NAN,
            mean_storage_bytes: f64::NAN,
        };
    };
    let key_of = |c: &ClientOutcome| (c.group.clone(), c.effort);
    for c in &first.clients {
        let key = key_of(c);
        match groups.iter_mut().find(|g| (g.strategy.clone(), g.effort) == key) {
            Some(g) => g.members += 1,
            None => {
                groups.push(GroupStats {
                    strategy: key.0,
                    effort: key.1,
                    members: 1,
                    mean_payment: 0.0,
                    se_payment: None,
                    mean_utility: 0.0,
                    se_utility: None,
                    slash_rate: 0.0,
                    payments: Vec::with_capacity(trials.len()),
                    utilities: Vec::with_capacity(trials.len()),
                });
                slashed_counts.push(0);
            }
        }
    }
    let group_of: Vec<usize> = first
        .clients
        .iter()
        .map(|c| {
            let key = key_of(c);
            groups
                .iter()
                .position(|g| (g.strategy.clone(), g.effort) == key)
                .expect("every client has a group")
        })
        .collect();

    let n_clients = first.clients.len();
    let mut client_pay = vec![0.0; n_clients];
    let mut client_util = vec![0.0; n_clients];
    let mut client_slash = vec![0usize; n_clients];
    for t in trials {
        let mut pay = vec![0.0; groups.len()];
        let mut util = vec![0.0; groups.len()];
        for (i, c) in t.clients.iter().enumerate() {
            let g = group_of[i];
            pay[g] += c.normalized_payment;
            util[g] += c.utility;
            slashed_counts[g] += c.slashed as usize;
            client_pay[i] += c.normalized_payment;
            client_util[i] += c.utility;
            client_slash[i] += c.slashed as usize;
        }
        for (g, stats) in groups.iter_mut().enumerate() {
            stats.payments.push(pay[g] / stats.members as f64);
            stats.utilities.push(util[g] / stats.members as f64);
        }
    }
    let n = trials.len() as f64;
    for (g, stats) in groups.iter_mut().enumerate() {
        (stats.mean_payment, stats.se_payment) = mean_se(&stats.payments);
        (stats.mean_utility, stats.se_utility) = mean_se(&stats.utilities);
        stats.slash_rate = slashed_counts[g] as f64 / (n * stats.members as f64);
    }
    let clients = first
        .clients
        .iter()
        .enumerate()
        .map(|(i, c)| ClientStats {
            client: c.id.to_string(),
            strategy: c.group.clone(),
            effort: c.effort,
            mean_payment: client_pay[i] / n,
            mean_utility: client_util[i] / n,
            slash_rate: client_slash[i] as f64 / n,
        })
        .collect();
    Summary {
        trials: trials.len() as u64,
        groups,
        clients,
        mean_compute_units: trials.iter().map(|t| t.compute_units as f64).sum::<f64>() / n,
        mean_storage_bytes: trials.iter().map(|t| t.storage_bytes as f64).sum::<f64>() / n,
    }
}

fn run_trials(cfg: &ScenarioConfig, trials: u64) -> Result<Vec<TrialOutcome>> {
    (0..trials)
        .into_par_iter()
        .map(|i| {
            let (r, _) = run_round_in_memory(cfg, trial_seed(cfg.master_seed, i))?;
            Ok(TrialOutcome::from_round(i, &r))
        })
        .collect()
}

/// Runs `trials` rounds with seeds derived from `master_seed` on the global pool.
pub fn monte_carlo(cfg: &ScenarioConfig, trials: u64) -> Result<Summary> {
    if trials == 0 {
        return Err(HarnessError::Config("trials must be at least 1".into()));
    }
    cfg.validate()?;
    Ok(summarize(&run_trials(cfg, trials)?))
}

/// [`monte_carlo`] on a dedicated pool of `threads` workers.
pub fn monte_carlo_with_threads(cfg: &ScenarioConfig, trials: u64, threads: usize) -> Result<Summary> {
    let pool = ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| HarnessError::Config(e.to_string()))?;
    pool.install(|| monte_carlo(cfg, trials))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_se_examples() {
        assert_eq!(mean_se(&[2.0]), (2.0, None));
        let (m, se) = mean_se(&[1.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((se.unwrap() - 1.0).abs() < 1e-12);
        assert!(mean_se(&[]).0.is_nan());
    }
}

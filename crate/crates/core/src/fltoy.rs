//! Desk-scale federated-learning world.
//!
//! Two fidelity levels share the same types: a confusion-model path where a
//! client's signal equals the hidden ground truth with an effort-dependent
//! accuracy, and a multinomial logistic path (local training, exact FedAvg,
//! argmax inference on the public set).

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{ToPrimitive, Zero};
use rand_core::RngCore;
use thiserror::Error;

use crate::id::ClientId;
use crate::mechanism::{Accuracy, Signal, SignalReport, MAX_ALPHABET};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FlError {
    #[error("alphabet size {0} outside 2..=256")]
    InvalidAlphabet(usize),
    #[error("prior must have k entries with a positive sum")]
    InvalidPrior,
    #[error("effort {0} outside [0, 1]")]
    InvalidEffort(Ratio<u64>),
    #[error("accuracy {0} outside [1/k, 1]")]
    InvalidAccuracy(Ratio<u64>),
    #[error("permutation must be a bijection on 0..{0}")]
    InvalidPermutation(usize),
    #[error("constant label {signal} out of range for alphabet of size {k}")]
    SignalOutOfRange { signal: Signal, k: usize },
    #[error("no model updates to aggregate")]
    EmptyUpdateList,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("local data set is empty")]
    EmptyLocalData,
    #[error("sample count must be positive")]
    ZeroSampleCount,
    #[error("non-finite model weight")]
    NonFinite,
}

pub type Result<T> = core::result::Result<T, FlError>;

fn check_alphabet(k: usize) -> Result<()> {
    if (2..=MAX_ALPHABET).contains(&k) {
        Ok(())
    } else {
        Err(FlError::InvalidAlphabet(k))
    }
}

/// Shared public task set with hidden ground truth.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct World {
    pub k: usize,
    pub prior: Vec<u64>,
    ground_truth: Vec<Signal>,
}

impl World {
    /// Draws `m` ground-truth labels i.i.d. from `prior` (integer weights).
    pub fn generate(k: usize, m: usize, prior: &[u64], seed: [u8; 32]) -> Result<Self> {
        check_alphabet(k)?;
        if prior.len() != k {
            return Err(FlError::InvalidPrior);
        }
        let total: u64 = prior.iter().sum();
        if total == 0 {
            return Err(FlError::InvalidPrior);
        }
        let mut g = rng::seeded(seed);
        let ground_truth = (0..m)
            .map(|_| {
                let mut u = rng::below(&mut g, total);
                let mut label = 0;
                for (i, &w) in prior.iter().enumerate() {
                    if u < w {
                        label = i;
                        break;
                    }
                    u -= w;
                }
                label as Signal
            })
            .collect();
        Ok(Self {
            k,
            prior: prior.to_vec(),
            ground_truth,
        })
    }

    pub fn from_ground_truth(k: usize, prior: &[u64], ground_truth: Vec<Signal>) -> Result<Self> {
        check_alphabet(k)?;
        if prior.len() != k || prior.iter().sum::<u64>() == 0 {
            return Err(FlError::InvalidPrior);
        }
        if let Some(&s) = ground_truth.iter().find(|&&s| s as usize >= k) {
            return Err(FlError::SignalOutOfRange { signal: s, k });
        }
        Ok(Self {
            k,
            prior: prior.to_vec(),
            ground_truth,
        })
    }

    pub fn task_count(&self) -> usize {
        self.ground_truth.len()
    }

    /// Hidden labels. Only the harness uses these, for off-chain metrics.
    pub fn ground_truth(&self) -> &[Signal] {
        &self.ground_truth
    }
}

/// How a client maps its signals to the report it submits.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Strategy {
    Truthful,
    Constant(Signal),
    UniformRandom,
    /// Informed but untruthful relabeling `π`.
    Permuted(Vec<Signal>),
    /// Reports truthfully but draws its signals at zero effort.
    LowEffortTruthful,
}

impl Strategy {
    pub fn label(&self) -> String {
        match self {
            Strategy::Truthful => "truthful".into(),
            Strategy::Constant(c) => format!("constant({c})"),
            Strategy::UniformRandom => "uniform_random".into(),
            Strategy::Permuted(p) => {
                let parts: Vec<String> = p.iter().map(|s| format!("{s}")).collect();
                format!("permuted({})", parts.join(","))
            }
            Strategy::LowEffortTruthful => "low_effort_truthful".into(),
        }
    }

    /// Informed strategies let the report depend on the signal.
    pub fn is_informed(&self) -> bool {
        matches!(
            self,
            Strategy::Truthful | Strategy::Permuted(_) | Strategy::LowEffortTruthful
        )
    }

    pub fn validate(&self, k: usize) -> Result<()> {
        match self {
            Strategy::Constant(c) if *c as usize >= k => {
                Err(FlError::SignalOutOfRange { signal: *c, k })
            }
            Strategy::Permuted(p) => {
                let mut seen = vec![false; k];
                if p.len() != k {
                    return Err(FlError::InvalidPermutation(k));
                }
                for &s in p {
                    if s as usize >= k || seen[s as usize] {
                        return Err(FlError::InvalidPermutation(k));
                    }
                    seen[s as usize] = true;
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

/// Affine effort-to-accuracy map `a(e) = a_min + e·(a_max − a_min)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EffortModel {
    pub a_min: Accuracy,
    pub a_max: Accuracy,
}

impl EffortModel {
    /// `a_min = 1/k`, `a_max = 9/10`.
    pub fn default_for(k: usize) -> Self {
        Self {
            a_min: Ratio::new(1, k as u64),
            a_max: Ratio::new(9, 10),
        }
    }

    pub fn accuracy(&self, effort: Ratio<u64>, k: usize) -> Result<Accuracy> {
        if effort > Ratio::from_integer(1) {
            return Err(FlError::InvalidEffort(effort));
        }
        let a = if self.a_max >= self.a_min {
            self.a_min + effort * (self.a_max - self.a_min)
        } else {
            self.a_min - effort * (self.a_min - self.a_max)
        };
        if a < Ratio::new(1, k as u64) || a > Ratio::from_integer(1) {
            return Err(FlError::InvalidAccuracy(a));
        }
        Ok(a)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClientModel {
    pub id: ClientId,
    pub effort: Ratio<u64>,
    pub strategy: Strategy,
}

impl ClientModel {
    /// Effort actually exerted when drawing signals.
    pub fn effective_effort(&self) -> Ratio<u64> {
        match self.strategy {
            Strategy::LowEffortTruthful => Ratio::zero(),
            _ => self.effort,
        }
    }

    pub fn accuracy(&self, model: &EffortModel, k: usize) -> Result<Accuracy> {
        model.accuracy(self.effective_effort(), k)
    }
}

/// Per task: the ground truth with probability `a`, otherwise uniform over
/// the other `k − 1` labels.
pub fn draw_signals(world: &World, accuracy: Accuracy, seed: [u8; 32]) -> Result<SignalReport> {
    let k = world.k;
    if accuracy < Ratio::new(1, k as u64) || accuracy > Ratio::from_integer(1) {
        return Err(FlError::InvalidAccuracy(accuracy));
    }
    let (num, den) = (*accuracy.numer(), *accuracy.denom());
    let mut g = rng::seeded(seed);
    let signals = world
        .ground_truth
        .iter()
        .map(|&truth| {
            if rng::bernoulli(&mut g, num, den) {
                truth
            } else {
                let j = rng::below(&mut g, k as u64 - 1) as Signal;
                if j >= truth {
                    j + 1
                } else {
                    j
                }
            }
        })
        .collect();
    Ok(SignalReport(signals))
}

/// Maps signals to a report according to `strategy`.
pub fn apply_strategy(
    strategy: &Strategy,
    signals: &SignalReport,
    k: usize,
    seed: [u8; 32],
) -> Result<SignalReport> {
    check_alphabet(k)?;
    strategy.validate(k)?;
    let out = match strategy {
        Strategy::Truthful | Strategy::LowEffortTruthful => signals.clone(),
        Strategy::Constant(c) => SignalReport(vec![*c; signals.len()]),
        Strategy::UniformRandom => {
            let mut g = rng::seeded(seed);
            SignalReport(
                (0..signals.len())
                    .map(|_| rng::below(&mut g, k as u64) as Signal)
                    .collect(),
            )
        }
        Strategy::Permuted(p) => SignalReport(signals.as_slice().iter().map(|&s| p[s as usize]).collect()),
    };
    Ok(out)
}

/// Flattened `k × d` weights (class-major) and the local sample count `|S_i|`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearModelParams {
    pub weights: Vec<BigRational>,
    pub sample_count: u64,
}

impl LinearModelParams {
    pub fn zeros(len: usize, sample_count: u64) -> Self {
        Self {
            weights: vec![BigRational::zero(); len],
            sample_count,
        }
    }

    /// Exact conversion; every finite `f64` is a dyadic rational.
    pub fn from_f64(weights: &[f64], sample_count: u64) -> Result<Self> {
        let weights = weights
            .iter()
            .map(|&w| BigRational::from_float(w).ok_or(FlError::NonFinite))
            .collect::<Result<_>>()?;
        Ok(Self {
            weights,
            sample_count,
        })
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.weights
            .iter()
            .map(|w| w.to_f64().unwrap_or(f64::NAN))
            .collect()
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }
}

/// `Σ_i (|S_i| / |S|)·w_i` in exact rational arithmetic, `|S| = Σ_i |S_i|`.
pub fn fedavg(updates: &[LinearModelParams]) -> Result<LinearModelParams> {
    let first = updates.first().ok_or(FlError::EmptyUpdateList)?;
    let dim = first.dim();
    let mut total: u64 = 0;
    for u in updates {
        if u.dim() != dim {
            return Err(FlError::DimensionMismatch {
                expected: dim,
                found: u.dim(),
            });
        }
        if u.sample_count == 0 {
            return Err(FlError::ZeroSampleCount);
        }
        total = total.checked_add(u.sample_count).ok_or(FlError::ZeroSampleCount)?;
    }
    let mut acc = vec![BigRational::zero(); dim];
    for u in updates {
        let n = BigInt::from(u.sample_count);
        for (a, w) in acc.iter_mut().zip(&u.weights) {
            *a += w * &n;
        }
    }
    let denom = BigRational::from_integer(BigInt::from(total));
    Ok(LinearModelParams {
        weights: acc.into_iter().map(|a| a / &denom).collect(),
        sample_count: total,
    })
}

/// Labeled feature vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSet {
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<Signal>,
}

impl LabeledSet {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.first().map_or(0, Vec::len)
    }

    /// Largest squared feature norm.
    pub fn max_sq_norm(&self) -> f64 {
        self.features
            .iter()
            .map(|x| x.iter().map(|v| v * v).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

fn class_scores(weights: &[f64], x: &[f64], k: usize) -> Vec<f64> {
    let d = x.len();
    (0..k)
        .map(|c| {
            weights[c * d..(c + 1) * d]
                .iter()
                .zip(x)
                .map(|(w, v)| w * v)
                .sum()
        })
        .collect()
}

fn softmax_in_place(z: &mut [f64]) {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in z.iter_mut() {
        *v = libm::exp(*v - max);
        sum += *v;
    }
    for v in z.iter_mut() {
        *v /= sum;
    }
}

/// Mean multinomial cross-entropy of `weights` (flattened `k × d`) on `data`.
pub fn logistic_loss(data: &LabeledSet, weights: &[f64], k: usize) -> f64 {
    if data.is_empty() {
        return 0.0;
    }
    let mut total = 0.0;
    for (x, &y) in data.features.iter().zip(&data.labels) {
        let z = class_scores(weights, x, k);
        let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + libm::log(z.iter().map(|v| libm::exp(v - max)).sum::<f64>());
        total += lse - z[y as usize];
    }
    total / data.len() as f64
}

/// Full-batch gradient descent on mean multinomial cross-entropy.
///
/// The loss is non-increasing whenever `step ≤ 2 / max‖x‖²`.
pub fn local_train(
    data: &LabeledSet,
    init: &LinearModelParams,
    epochs: u32,
    k: usize,
    step: f64,
) -> Result<LinearModelParams> {
    if data.is_empty() {
        return Err(FlError::EmptyLocalData);
    }
    check_alphabet(k)?;
    let d = data.dim();
    if init.dim() != k * d {
        return Err(FlError::DimensionMismatch {
            expected: k * d,
            found: init.dim(),
        });
    }
    if let Some(&y) = data.labels.iter().find(|&&y| y as usize >= k) {
        return Err(FlError::SignalOutOfRange { signal: y, k });
    }
    if epochs == 0 {
        return Ok(init.clone());
    }
    let mut w = init.to_f64();
    let n = data.len() as f64;
    let mut grad = vec![0.0; w.len()];
    for _ in 0..epochs {
        grad.iter_mut().for_each(|g| *g = 0.0);
        for (x, &y) in data.features.iter().zip(&data.labels) {
            let mut p = class_scores(&w, x, k);
            softmax_in_place(&mut p);
            p[y as usize] -= 1.0;
            for c in 0..k {
                for (j, &v) in x.iter().enumerate() {
                    grad[c * d + j] += p[c] * v;
                }
            }
        }
        for (wi, gi) in w.iter_mut().zip(&grad) {
            *wi -= step * gi / n;
        }
    }
    LinearModelParams::from_f64(&w, data.len() as u64)
}

/// Argmax class per point; ties go to the lowest class index.
pub fn infer_labels(params: &LinearModelParams, public: &[Vec<f64>], k: usize) -> Result<SignalReport> {
    check_alphabet(k)?;
    let w = params.to_f64();
    let mut out = Vec::with_capacity(public.len());
    for x in public {
        if x.len() * k != w.len() {
            return Err(FlError::DimensionMismatch {
                expected: w.len(),
                found: x.len() * k,
            });
        }
        let z = class_scores(&w, x, k);
        let mut best = 0;
        for c in 1..k {
            if z[c] > z[best] {
                best = c;
            }
        }
        out.push(best as Signal);
    }
    Ok(SignalReport(out))
}

/// Gaussian-free synthetic classification task: class centroids plus uniform
/// noise, with a constant bias feature appended.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticTask {
    pub k: usize,
    pub centroids: Vec<Vec<f64>>,
    pub noise: f64,
}

fn unit<R: RngCore>(g: &mut R) -> f64 {
    (g.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

impl SyntheticTask {
    /// Centroids uniform in `[-1, 1]^dim`.
    pub fn generate(k: usize, dim: usize, noise: f64, seed: [u8; 32]) -> Result<Self> {
        check_alphabet(k)?;
        let mut g = rng::seeded(seed);
        let centroids = (0..k)
            .map(|_| (0..dim).map(|_| 2.0 * unit(&mut g) - 1.0).collect())
            .collect();
        Ok(Self { k, centroids, noise })
    }

    /// Feature dimension including the bias term.
    pub fn feature_dim(&self) -> usize {
        self.centroids.first().map_or(0, Vec::len) + 1
    }

    pub fn featurize(&self, labels: &[Signal], seed: [u8; 32]) -> LabeledSet {
        let mut g = rng::seeded(seed);
        let features = labels
            .iter()
            .map(|&y| {
                let mut x: Vec<f64> = self.centroids[y as usize]
                    .iter()
                    .map(|c| c + self.noise * (2.0 * unit(&mut g) - 1.0))
                    .collect();
                x.push(1.0);
                x
            })
            .collect();
        LabeledSet {
            features,
            labels: labels.to_vec(),
        }
    }

    /// `n` points with labels drawn from `prior`.
    pub fn sample(&self, prior: &[u64], n: usize, seed: [u8; 32]) -> Result<LabeledSet> {
        let labels = World::generate(self.k, n, prior, rng::child_seed(&seed, b"labels", 0))?;
        Ok(self.featurize(labels.ground_truth(), rng::child_seed(&seed, b"features", 0)))
    }
}

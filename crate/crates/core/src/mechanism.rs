//! Correlated Agreement multi-task peer prediction.
//!
//! Signals are small integers `0..k`. The scoring rule is derived from the
//! delta matrix `Δ(x, y) = P(x, y) − P(x)·P(y)` of a pair's signal joint and
//! thresholded into a 0/1 sign matrix. Payments compare agreement on shared
//! bonus tasks against agreement across two disjoint penalty task sets, and
//! are kept as integers over an explicit denominator `|M_1|·|M_2|`.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_rational::Ratio;
use thiserror::Error;

/// A single discrete signal (a predicted label).
pub type Signal = u8;

/// Largest alphabet representable with one-octet signals.
pub const MAX_ALPHABET: usize = 256;

/// Joint totals above this bound are rejected so that every delta numerator
/// fits in an `i128` without overflow.
pub const MAX_JOINT_TOTAL: u64 = 1 << 62;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MechanismError {
    #[error("joint counts sum to zero")]
    AllZeroCounts,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("alphabet size {0} outside 2..=256")]
    InvalidAlphabet(usize),
    #[error("accuracy {num}/{den} outside [1/k, 1]")]
    InvalidAccuracy { num: u64, den: u64 },
    #[error("prior must have k non-negative entries with a positive sum")]
    InvalidPrior,
    #[error("report has no entry for task {0}")]
    MissingReportEntry(usize),
    #[error("signal {signal} out of range for alphabet of size {k}")]
    SignalOutOfRange { signal: Signal, k: usize },
    #[error("invalid task split: {0}")]
    InvalidSplit(&'static str),
    #[error("arithmetic overflow")]
    Overflow,
}

pub type Result<T> = core::result::Result<T, MechanismError>;

/// Exact accuracy (probability that a signal equals the ground truth).
pub type Accuracy = Ratio<u64>;

fn check_alphabet(k: usize) -> Result<()> {
    if (2..=MAX_ALPHABET).contains(&k) {
        Ok(())
    } else {
        Err(MechanismError::InvalidAlphabet(k))
    }
}

/// A client's signals (or reports) over the shared public task set.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SignalReport(pub Vec<Signal>);

impl SignalReport {
    pub fn new(signals: Vec<Signal>) -> Self {
        Self(signals)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[Signal] {
        &self.0
    }

    pub fn get(&self, task: usize) -> Result<Signal> {
        self.0
            .get(task)
            .copied()
            .ok_or(MechanismError::MissingReportEntry(task))
    }
}

impl From<Vec<Signal>> for SignalReport {
    fn from(v: Vec<Signal>) -> Self {
        Self(v)
    }
}

/// Co-occurrence counts of paired signals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JointDistribution {
    k: usize,
    counts: Vec<u64>,
    total: u64,
}

impl JointDistribution {
    /// Validates a square matrix of non-negative counts.
    pub fn from_counts(rows: &[Vec<u64>]) -> Result<Self> {
        let k = rows.len();
        for row in rows {
            if row.len() != k {
                return Err(MechanismError::DimensionMismatch {
                    expected: k,
                    found: row.len(),
                });
            }
        }
        check_alphabet(k)?;
        let counts: Vec<u64> = rows.iter().flatten().copied().collect();
        Self::from_flat(k, counts)
    }

    fn from_flat(k: usize, counts: Vec<u64>) -> Result<Self> {
        let mut total: u64 = 0;
        for &c in &counts {
            total = total.checked_add(c).ok_or(MechanismError::Overflow)?;
        }
        if total == 0 {
            return Err(MechanismError::AllZeroCounts);
        }
        if total > MAX_JOINT_TOTAL {
            return Err(MechanismError::Overflow);
        }
        Ok(Self { k, counts, total })
    }

    /// Analytic joint of two confusion-model clients observing the same
    /// ground truth drawn from `prior`.
    ///
    /// `Γ(g, x) = a` when `x = g` and `(1 − a)/(k − 1)` otherwise. Counts are
    /// the exact joint over a common denominator, reduced by their gcd.
    pub fn from_model(prior: &[u64], accuracy_a: Accuracy, accuracy_b: Accuracy) -> Result<Self> {
        let k = prior.len();
        check_alphabet(k)?;
        if prior.iter().all(|&p| p == 0) {
            return Err(MechanismError::InvalidPrior);
        }
        let ga = confusion_numerators(k, accuracy_a)?;
        let gb = confusion_numerators(k, accuracy_b)?;
        let mut wide = vec![0u128; k * k];
        for (g, &pg) in prior.iter().enumerate() {
            for x in 0..k {
                let gax = if x == g { ga.0 } else { ga.1 };
                for y in 0..k {
                    let gby = if y == g { gb.0 } else { gb.1 };
                    let term = (pg as u128)
                        .checked_mul(gax)
                        .and_then(|v| v.checked_mul(gby))
                        .ok_or(MechanismError::Overflow)?;
                    wide[x * k + y] = wide[x * k + y]
                        .checked_add(term)
                        .ok_or(MechanismError::Overflow)?;
                }
            }
        }
        let g = wide.iter().fold(0u128, |acc, &v| gcd(acc, v));
        let counts = wide
            .into_iter()
            .map(|v| u64::try_from(v / g.max(1)).map_err(|_| MechanismError::Overflow))
            .collect::<Result<Vec<_>>>()?;
        Self::from_flat(k, counts)
    }

    /// Symmetrized empirical joint over paired reports: every task position
    /// contributes `(r_a(t), r_b(t))` and its transpose.
    pub fn from_paired_reports<'a, I>(k: usize, pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a SignalReport, &'a SignalReport)>,
    {
        check_alphabet(k)?;
        let mut counts = vec![0u64; k * k];
        for (a, b) in pairs {
            if a.len() != b.len() {
                return Err(MechanismError::DimensionMismatch {
                    expected: a.len(),
                    found: b.len(),
                });
            }
            for (&x, &y) in a.as_slice().iter().zip(b.as_slice()) {
                for s in [x, y] {
                    if s as usize >= k {
                        return Err(MechanismError::SignalOutOfRange { signal: s, k });
                    }
                }
                counts[x as usize * k + y as usize] += 1;
                counts[y as usize * k + x as usize] += 1;
            }
        }
        Self::from_flat(k, counts)
    }

    /// `counts + countsᵀ`.
    pub fn symmetrized(&self) -> Result<Self> {
        let k = self.k;
        let mut counts = vec![0u64; k * k];
        for x in 0..k {
            for y in 0..k {
                counts[x * k + y] = self
                    .count(x, y)
                    .checked_add(self.count(y, x))
                    .ok_or(MechanismError::Overflow)?;
            }
        }
        Self::from_flat(k, counts)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn count(&self, x: usize, y: usize) -> u64 {
        self.counts[x * self.k + y]
    }

    pub fn row_sum(&self, x: usize) -> u64 {
        (0..self.k).map(|y| self.count(x, y)).sum()
    }

    pub fn col_sum(&self, y: usize) -> u64 {
        (0..self.k).map(|x| self.count(x, y)).sum()
    }

    /// `P(x)` for the first member as an exact ratio.
    pub fn row_marginal(&self, x: usize) -> Ratio<u64> {
        Ratio::new(self.row_sum(x), self.total)
    }

    pub fn col_marginal(&self, y: usize) -> Ratio<u64> {
        Ratio::new(self.col_sum(y), self.total)
    }

    pub fn rows(&self) -> Vec<Vec<u64>> {
        self.counts.chunks(self.k).map(|r| r.to_vec()).collect()
    }
}

/// Free-function form of [`JointDistribution::from_counts`].
pub fn build_joint_from_counts(rows: &[Vec<u64>]) -> Result<JointDistribution> {
    JointDistribution::from_counts(rows)
}

/// Free-function form of [`JointDistribution::from_model`].
pub fn build_joint_from_model(
    prior: &[u64],
    accuracy_a: Accuracy,
    accuracy_b: Accuracy,
) -> Result<JointDistribution> {
    JointDistribution::from_model(prior, accuracy_a, accuracy_b)
}

// (match, mismatch) numerators of Γ over the common denominator den·(k−1).
fn confusion_numerators(k: usize, a: Accuracy) -> Result<(u128, u128)> {
    let (n, d) = (*a.numer(), *a.denom());
    let invalid = MechanismError::InvalidAccuracy { num: n, den: d };
    if d == 0 || n > d || (n as u128) * (k as u128) < d as u128 {
        return Err(invalid);
    }
    Ok((n as u128 * (k as u128 - 1), (d - n) as u128))
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// `Δ` as integer numerators over `total²`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeltaMatrix {
    k: usize,
    numerators: Vec<i128>,
    denominator: u128,
}

impl DeltaMatrix {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn numerator(&self, x: usize, y: usize) -> i128 {
        self.numerators[x * self.k + y]
    }

    pub fn denominator(&self) -> u128 {
        self.denominator
    }

    pub fn rows(&self) -> Vec<Vec<i128>> {
        self.numerators.chunks(self.k).map(|r| r.to_vec()).collect()
    }
}

/// `numerators[x][y] = total·counts[x][y] − row_sum[x]·col_sum[y]`,
/// `denominator = total²`.
pub fn delta_matrix(joint: &JointDistribution) -> DeltaMatrix {
    let k = joint.k;
    let total = joint.total as i128;
    let rows: Vec<i128> = (0..k).map(|x| joint.row_sum(x) as i128).collect();
    let cols: Vec<i128> = (0..k).map(|y| joint.col_sum(y) as i128).collect();
    let mut numerators = vec![0i128; k * k];
    for x in 0..k {
        for y in 0..k {
            numerators[x * k + y] = total * joint.count(x, y) as i128 - rows[x] * cols[y];
        }
    }
    DeltaMatrix {
        k,
        numerators,
        denominator: (joint.total as u128) * (joint.total as u128),
    }
}

/// The Correlated Agreement scoring rule `s(x, y) = 1{Δ(x, y) > 0}`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct SignMatrix {
    k: usize,
    cells: Vec<bool>,
}

impl SignMatrix {
    pub fn from_fn(k: usize, f: impl Fn(usize, usize) -> bool) -> Result<Self> {
        check_alphabet(k)?;
        let mut cells = Vec::with_capacity(k * k);
        for x in 0..k {
            for y in 0..k {
                cells.push(f(x, y));
            }
        }
        Ok(Self { k, cells })
    }

    pub fn from_rows(rows: &[Vec<u8>]) -> Result<Self> {
        let k = rows.len();
        for row in rows {
            if row.len() != k {
                return Err(MechanismError::DimensionMismatch {
                    expected: k,
                    found: row.len(),
                });
            }
        }
        Self::from_fn(k, |x, y| rows[x][y] != 0)
    }

    pub fn identity(k: usize) -> Result<Self> {
        Self::from_fn(k, |x, y| x == y)
    }

    pub fn zeros(k: usize) -> Result<Self> {
        Self::from_fn(k, |_, _| false)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn get(&self, x: Signal, y: Signal) -> bool {
        self.cells[x as usize * self.k + y as usize]
    }

    pub fn is_zero(&self) -> bool {
        self.cells.iter().all(|c| !c)
    }

    pub fn transpose(&self) -> Self {
        let k = self.k;
        let mut cells = vec![false; k * k];
        for x in 0..k {
            for y in 0..k {
                cells[y * k + x] = self.cells[x * k + y];
            }
        }
        Self { k, cells }
    }

    /// Conjugation by a relabeling: `s'(π(x), π(y)) = s(x, y)`.
    pub fn relabeled(&self, perm: &[Signal]) -> Result<Self> {
        let k = self.k;
        if perm.len() != k {
            return Err(MechanismError::DimensionMismatch {
                expected: k,
                found: perm.len(),
            });
        }
        let mut cells = vec![false; k * k];
        for x in 0..k {
            for y in 0..k {
                cells[perm[x] as usize * k + perm[y] as usize] = self.cells[x * k + y];
            }
        }
        Ok(Self { k, cells })
    }

    pub fn rows(&self) -> Vec<Vec<u8>> {
        self.cells
            .chunks(self.k)
            .map(|r| r.iter().map(|&c| c as u8).collect())
            .collect()
    }
}

impl fmt::Debug for SignMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.rows()).finish()
    }
}

/// Strict positivity: zero deltas score zero.
pub fn sign_matrix(delta: &DeltaMatrix) -> SignMatrix {
    SignMatrix {
        k: delta.k,
        cells: delta.numerators.iter().map(|&n| n > 0).collect(),
    }
}

/// Bonus tasks `M_b` and two penalty sets `M_1`, `M_2` over task indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TaskSplit {
    pub bonus: Vec<usize>,
    pub penalty_1: Vec<usize>,
    pub penalty_2: Vec<usize>,
}

impl TaskSplit {
    pub fn new(bonus: Vec<usize>, penalty_1: Vec<usize>, penalty_2: Vec<usize>) -> Self {
        Self {
            bonus,
            penalty_1,
            penalty_2,
        }
    }

    /// Checks non-emptiness, index range, set semantics and `M_1 ∩ M_2 = ∅`.
    pub fn validate(&self, task_count: usize) -> Result<()> {
        for set in [&self.bonus, &self.penalty_1, &self.penalty_2] {
            if set.is_empty() {
                return Err(MechanismError::InvalidSplit("empty task set"));
            }
            if set.iter().any(|&t| t >= task_count) {
                return Err(MechanismError::InvalidSplit("task index out of range"));
            }
            for (i, t) in set.iter().enumerate() {
                if set[..i].contains(t) {
                    return Err(MechanismError::InvalidSplit("duplicate task index"));
                }
            }
        }
        if self.penalty_1.iter().any(|t| self.penalty_2.contains(t)) {
            return Err(MechanismError::InvalidSplit("penalty sets overlap"));
        }
        Ok(())
    }

    /// `|M_1|·|M_2|`.
    pub fn scale_denominator(&self) -> u64 {
        (self.penalty_1.len() as u64) * (self.penalty_2.len() as u64)
    }

    /// `|M_b|·|M_1|·|M_2|`, the largest attainable `|scaled_score|`.
    pub fn max_scaled_score(&self) -> u64 {
        self.bonus.len() as u64 * self.scale_denominator()
    }

    /// Sign-matrix lookups performed by one pair evaluation.
    pub fn lookups_per_pair(&self) -> u64 {
        self.bonus.len() as u64 + self.scale_denominator()
    }
}

/// A pair member's score, `scaled_score / scale_denominator` in score units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PairPayment {
    pub scaled_score: i128,
    pub scale_denominator: u64,
    /// `|M_b|`, kept so the score can be normalized to `[-1, 1]`.
    pub bonus_tasks: u64,
}

impl PairPayment {
    /// `scaled_score / (|M_b|·|M_1|·|M_2|)`, in `[-1, 1]`.
    pub fn normalized(&self) -> f64 {
        let max = self.bonus_tasks as f64 * self.scale_denominator as f64;
        if max == 0.0 {
            0.0
        } else {
            self.scaled_score as f64 / max
        }
    }
}

/// Correlated Agreement payment for both members of a pair.
///
/// `scaled = |M_1|·|M_2| · Σ_{t∈M_b} s(r_a(t), r_b(t))
///         − |M_b| · Σ_{u∈M_1, v∈M_2} s(r_a(u), r_b(v))`.
///
/// The second member is scored with `sᵀ` over the same index pairs, which
/// yields the same value, so both entries are always equal.
pub fn ca_pair_payment(
    report_a: &SignalReport,
    report_b: &SignalReport,
    split: &TaskSplit,
    s: &SignMatrix,
) -> Result<(PairPayment, PairPayment)> {
    let k = s.k();
    let fetch = |r: &SignalReport, t: usize| -> Result<Signal> {
        let sig = r.get(t)?;
        if sig as usize >= k {
            return Err(MechanismError::SignalOutOfRange { signal: sig, k });
        }
        Ok(sig)
    };

    let mut bonus: i128 = 0;
    for &t in &split.bonus {
        bonus += s.get(fetch(report_a, t)?, fetch(report_b, t)?) as i128;
    }
    let b_side: Vec<Signal> = split
        .penalty_2
        .iter()
        .map(|&v| fetch(report_b, v))
        .collect::<Result<_>>()?;
    let mut penalty: i128 = 0;
    for &u in &split.penalty_1 {
        let x = fetch(report_a, u)?;
        for &y in &b_side {
            penalty += s.get(x, y) as i128;
        }
    }

    let denom = split.scale_denominator();
    let scaled = denom as i128 * bonus - split.bonus.len() as i128 * penalty;
    let payment = PairPayment {
        scaled_score: scaled,
        scale_denominator: denom,
        bonus_tasks: split.bonus.len() as u64,
    };
    Ok((payment, payment))
}

/// `alpha · scaled_score` in currency minor units.
pub fn to_currency(p: &PairPayment, alpha: u64) -> Result<i128> {
    p.scaled_score
        .checked_mul(alpha as i128)
        .ok_or(MechanismError::Overflow)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn r(v: &[u8]) -> SignalReport {
        SignalReport(v.to_vec())
    }

    #[test]
    fn joint_from_counts_examples() {
        let j = build_joint_from_counts(&[vec![1, 0], vec![0, 1]]).unwrap();
        assert_eq!(j.total(), 2);
        assert_eq!(j.row_marginal(0), Ratio::new(1, 2));
        assert_eq!(j.col_marginal(1), Ratio::new(1, 2));
        assert_eq!(
            build_joint_from_counts(&[vec![0, 0], vec![0, 0]]),
            Err(MechanismError::AllZeroCounts)
        );
        assert_eq!(
            build_joint_from_counts(&[vec![3, 1], vec![1, 3]])
                .unwrap()
                .total(),
            8
        );
    }

    #[test]
    fn joint_from_counts_rejects_ragged() {
        assert!(matches!(
            build_joint_from_counts(&[vec![1, 0, 0], vec![0, 1]]),
            Err(MechanismError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn joint_from_model_examples() {
        let half = Ratio::new(1, 2);
        let one = Ratio::new(1, 1);
        let j = build_joint_from_model(&[1, 1], one, one).unwrap();
        assert_eq!(j.rows(), vec![vec![1, 0], vec![0, 1]]);
        let j = build_joint_from_model(&[1, 1], one, half).unwrap();
        assert_eq!(j.rows(), vec![vec![1, 1], vec![1, 1]]);
        // Hand enumeration for a = 3/4: P(0,0) = ½(9/16) + ½(1/16) = 5/16,
        // P(0,1) = ½(3/16) + ½(3/16) = 3/16.
        let tq = Ratio::new(3, 4);
        let j = build_joint_from_model(&[1, 1], tq, tq).unwrap();
        assert_eq!(j.rows(), vec![vec![5, 3], vec![3, 5]]);
    }

    #[test]
    fn joint_from_model_rejects_bad_accuracy() {
        let below_chance = Ratio::new(1, 4);
        assert!(matches!(
            build_joint_from_model(&[1, 1, 1], below_chance, Ratio::new(1, 1)),
            Err(MechanismError::InvalidAccuracy { .. })
        ));
        assert!(matches!(
            build_joint_from_model(&[1, 1], Ratio::new(5, 4), Ratio::new(1, 1)),
            Err(MechanismError::InvalidAccuracy { .. })
        ));
        assert_eq!(
            build_joint_from_model(&[0, 0], Ratio::new(1, 1), Ratio::new(1, 1)),
            Err(MechanismError::InvalidPrior)
        );
    }

    #[test]
    fn delta_examples() {
        let d = delta_matrix(&build_joint_from_counts(&[vec![1, 1], vec![1, 1]]).unwrap());
        assert!(d.rows().iter().flatten().all(|&n| n == 0));

        let d = delta_matrix(&build_joint_from_counts(&[vec![1, 0], vec![0, 1]]).unwrap());
        assert_eq!(d.rows(), vec![vec![1, -1], vec![-1, 1]]);
        assert_eq!(d.denominator(), 4);

        let d = delta_matrix(&build_joint_from_counts(&[vec![5, 3], vec![3, 5]]).unwrap());
        assert_eq!(d.rows(), vec![vec![16, -16], vec![-16, 16]]);
        assert_eq!(d.denominator(), 256);
    }

    #[test]
    fn sign_examples() {
        let id = SignMatrix::identity(2).unwrap();
        let d = delta_matrix(&build_joint_from_counts(&[vec![1, 0], vec![0, 1]]).unwrap());
        assert_eq!(sign_matrix(&d), id);
        let d = delta_matrix(&build_joint_from_counts(&[vec![1, 1], vec![1, 1]]).unwrap());
        assert_eq!(sign_matrix(&d), SignMatrix::zeros(2).unwrap());
        let d = delta_matrix(&build_joint_from_counts(&[vec![5, 3], vec![3, 5]]).unwrap());
        assert_eq!(sign_matrix(&d), id);
    }

    #[test]
    fn pair_payment_examples() {
        let s = SignMatrix::identity(2).unwrap();
        let split = TaskSplit::new(vec![0, 1], vec![2], vec![3]);
        let (pa, pb) = ca_pair_payment(&r(&[0, 1, 0, 1]), &r(&[0, 0, 1, 1]), &split, &s).unwrap();
        assert_eq!(pa.scaled_score, 1);
        assert_eq!(pa.scale_denominator, 1);
        assert_eq!(pa, pb);

        let (pa, _) = ca_pair_payment(&r(&[1, 1, 1, 1]), &r(&[1, 1, 1, 1]), &split, &s).unwrap();
        assert_eq!(pa.scaled_score, 0);

        let split = TaskSplit::new(vec![0, 1], vec![2, 3], vec![4, 5]);
        let (pa, _) = ca_pair_payment(
            &r(&[1, 0, 0, 0, 1, 1]),
            &r(&[1, 0, 1, 1, 1, 1]),
            &split,
            &s,
        )
        .unwrap();
        assert_eq!(pa.scaled_score, split.max_scaled_score() as i128);
    }

    #[test]
    fn pair_payment_missing_entry() {
        let s = SignMatrix::identity(2).unwrap();
        let split = TaskSplit::new(vec![0], vec![1], vec![5]);
        assert_eq!(
            ca_pair_payment(&r(&[0, 1, 0]), &r(&[0, 1, 0]), &split, &s),
            Err(MechanismError::MissingReportEntry(5))
        );
        let split = TaskSplit::new(vec![0], vec![1], vec![2]);
        assert!(matches!(
            ca_pair_payment(&r(&[0, 1, 0]), &r(&[0, 1, 7]), &split, &s),
            Err(MechanismError::SignalOutOfRange { signal: 7, .. })
        ));
    }

    #[test]
    fn currency_examples() {
        let p = |v| PairPayment {
            scaled_score: v,
            scale_denominator: 1,
            bonus_tasks: 1,
        };
        assert_eq!(to_currency(&p(0), 10), Ok(0));
        assert_eq!(to_currency(&p(1), 10), Ok(10));
        assert_eq!(to_currency(&p(-3), 5), Ok(-15));
        assert_eq!(to_currency(&p(i128::MAX), 2), Err(MechanismError::Overflow));
    }

    #[test]
    fn split_validation() {
        assert!(TaskSplit::new(vec![0], vec![1], vec![2]).validate(3).is_ok());
        assert!(TaskSplit::new(vec![0], vec![1], vec![1]).validate(3).is_err());
        assert!(TaskSplit::new(vec![], vec![1], vec![2]).validate(3).is_err());
        assert!(TaskSplit::new(vec![0], vec![1], vec![3]).validate(3).is_err());
        assert!(TaskSplit::new(vec![0, 0], vec![1], vec![2]).validate(3).is_err());
        // bonus may share indices with a penalty set
        assert!(TaskSplit::new(vec![1], vec![1], vec![2]).validate(3).is_ok());
    }

    #[test]
    fn empirical_joint_is_symmetric() {
        let a = r(&[0, 1, 2, 2]);
        let b = r(&[1, 1, 0, 2]);
        let j = JointDistribution::from_paired_reports(3, [(&a, &b)]).unwrap();
        assert_eq!(j.total(), 8);
        for x in 0..3 {
            for y in 0..3 {
                assert_eq!(j.count(x, y), j.count(y, x));
            }
        }
        let doubled = j.symmetrized().unwrap();
        assert_eq!(doubled.total(), 2 * j.total());
        assert_eq!(doubled.count(0, 1), 2 * j.count(0, 1));
    }

    #[test]
    fn relabel_roundtrip() {
        let s = SignMatrix::from_rows(&[vec![1, 0, 1], vec![0, 0, 1], vec![1, 0, 0]]).unwrap();
        let perm = [2u8, 0, 1];
        let inv = [1u8, 2, 0];
        assert_eq!(s.relabeled(&perm).unwrap().relabeled(&inv).unwrap(), s);
    }
}

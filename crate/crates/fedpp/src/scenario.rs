//! Scenario files: the full description of an experiment.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use fedpp_core::fltoy::{EffortModel, Strategy};
use fedpp_core::mechanism::{build_joint_from_model, delta_matrix, sign_matrix, Accuracy};
use fedpp_core::{ClientId, SignMatrix};
use num_rational::Ratio;
use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{HarnessError, Result};

/// Exact non-negative rational written as `"a/b"`, `"0.85"` or an integer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rational(pub Ratio<u64>);

impl Rational {
    pub fn integer(n: u64) -> Self {
        Rational(Ratio::from_integer(n))
    }

    pub fn new(num: u64, den: u64) -> Self {
        Rational(Ratio::new(num, den))
    }

    pub fn to_f64(self) -> f64 {
        *self.0.numer() as f64 / *self.0.denom() as f64
    }
}

impl FromStr for Rational {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let bad = || format!("not a non-negative rational: {s:?}");
        let digits = |t: &str| !t.is_empty() && t.bytes().all(|b| b.is_ascii_digit());
        if let Some((n, d)) = s.split_once('/') {
            if !digits(n) || !digits(d) {
                return Err(bad());
            }
            let (n, d): (u64, u64) = (n.parse().map_err(|_| bad())?, d.parse().map_err(|_| bad())?);
            if d == 0 {
                return Err(bad());
            }
            return Ok(Rational(Ratio::new(n, d)));
        }
        if let Some((w, f)) = s.split_once('.') {
            if !digits(w) || !digits(f) || f.len() > 18 {
                return Err(bad());
            }
            let den = 10u64.pow(f.len() as u32);
            let w: u64 = w.parse().map_err(|_| bad())?;
            let f: u64 = f.parse().map_err(|_| bad())?;
            let num = w.checked_mul(den).and_then(|v| v.checked_add(f)).ok_or_else(bad)?;
            return Ok(Rational(Ratio::new(num, den)));
        }
        if !digits(s) {
            return Err(bad());
        }
        Ok(Rational::integer(s.parse().map_err(|_| bad())?))
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl Serialize for Rational {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Rational {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(u64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Int(n) => Ok(Rational::integer(n)),
            Raw::Str(s) => s.parse().map_err(de::Error::custom),
        }
    }
}

/// Client strategy in its textual form, e.g. `constant(0)` or `permuted(1,0,2)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct StrategySpec(pub Strategy);

impl FromStr for StrategySpec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let bad = || format!("unknown strategy {s:?}");
        let args = |prefix: &str| -> Option<&str> { s.strip_prefix(prefix)?.strip_suffix(')') };
        let strategy = match s {
            "truthful" => Strategy::Truthful,
            "uniform_random" => Strategy::UniformRandom,
            "low_effort_truthful" => Strategy::LowEffortTruthful,
            _ => {
                if let Some(c) = args("constant(") {
                    Strategy::Constant(c.parse().map_err(|_| bad())?)
                } else if let Some(list) = args("permuted(") {
                    let perm = list
                        .split(',')
                        .map(|v| v.trim().parse::<u8>())
                        .collect::<std::result::Result<Vec<_>, _>>()
                        .map_err(|_| bad())?;
                    Strategy::Permuted(perm)
                } else {
                    return Err(bad());
                }
            }
        };
        Ok(StrategySpec(strategy))
    }
}

impl Serialize for StrategySpec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.0.label())
    }
}

impl<'de> Deserialize<'de> for StrategySpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(de::Error::custom)
    }
}

/// How a client follows the commit-reveal protocol.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Behavior {
    #[default]
    Honest,
    /// Skips the commit phase and tries to commit once reveals are public.
    Copycat,
    /// Reveals a report other than the one it committed to.
    Equivocate,
    /// Commits and never reveals.
    NoReveal,
}

impl Behavior {
    pub fn as_str(self) -> &'static str {
        match self {
            Behavior::Honest => "honest",
            Behavior::Copycat => "copycat",
            Behavior::Equivocate => "equivocate",
            Behavior::NoReveal => "no_reveal",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeltaMode {
    #[default]
    KnownPrior,
    Empirical,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignalModel {
    /// Signals equal the ground truth with probability `a(e)`.
    #[default]
    Confusion,
    /// Signals are predictions of a locally trained linear classifier.
    Logistic,
}

mod client_id {
    use fedpp_core::ClientId;
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(id: &ClientId, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(id.as_str())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<ClientId, D::Error> {
        ClientId::new(String::deserialize(d)?).map_err(de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RosterEntry {
    #[serde(with = "client_id")]
    pub id: ClientId,
    pub strategy: StrategySpec,
    pub effort: Rational,
    pub stake: u64,
    #[serde(default)]
    pub behavior: Behavior,
}

impl RosterEntry {
    pub fn new(id: &str, strategy: Strategy, effort: Rational, stake: u64) -> Self {
        Self {
            id: ClientId::new(id).expect("valid client id"),
            strategy: StrategySpec(strategy),
            effort,
            stake,
            behavior: Behavior::Honest,
        }
    }

    pub fn with_behavior(mut self, behavior: Behavior) -> Self {
        self.behavior = behavior;
        self
    }

    /// Aggregation key: the strategy label, suffixed with the behavior when not honest.
    pub fn group_label(&self) -> String {
        match self.behavior {
            Behavior::Honest => self.strategy.0.label(),
            b => format!("{}/{}", self.strategy.0.label(), b.as_str()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogisticConfig {
    /// Feature dimension before the bias term.
    pub dim: usize,
    /// Half-width of the uniform noise around each class centroid.
    pub noise: f64,
    pub local_samples: usize,
    /// Epochs trained at effort 1; effort `e` trains `⌊e·max_epochs⌋`.
    pub max_epochs: u32,
    /// Defaults to `1 / max‖x‖²` of each client's local data.
    #[serde(default)]
    pub step: Option<f64>,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        Self {
            dim: 4,
            noise: 0.6,
            local_samples: 40,
            max_epochs: 60,
            step: None,
        }
    }
}

fn default_round() -> u64 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Alphabet size.
    pub k: usize,
    /// Public task count.
    pub m: usize,
    /// Bonus set size `|M_b|`.
    pub b: usize,
    /// Penalty set size `|M_1| = |M_2|`.
    pub p: usize,
    pub roster: Vec<RosterEntry>,
    pub min_stake: u64,
    pub quorum: usize,
    pub reward_pool: u64,
    pub alpha: u64,
    pub delta_mode: DeltaMode,
    /// Defaults to the midpoint `alpha·b·p²/2`.
    #[serde(default)]
    pub default_payment: Option<u64>,
    pub master_seed: u64,
    pub trials: u64,
    #[serde(default = "default_round")]
    pub round: u64,
    /// Integer class weights; uniform when absent.
    #[serde(default)]
    pub prior: Option<Vec<u64>>,
    /// Defaults to `1/k`.
    #[serde(default)]
    pub a_min: Option<Rational>,
    /// Defaults to `9/10`.
    #[serde(default)]
    pub a_max: Option<Rational>,
    /// Currency units charged per unit of effort, off-chain.
    #[serde(default)]
    pub cost_per_effort: u64,
    #[serde(default)]
    pub signal_model: SignalModel,
    #[serde(default)]
    pub logistic: Option<LogisticConfig>,
}

impl ScenarioConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        let cfg: ScenarioConfig = serde_json::from_str(&text).map_err(|source| HarnessError::Json {
            path: path.into(),
            source,
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(HarnessError::Config(m));
        if !(2..=256).contains(&self.k) {
            return fail(format!("k = {} outside 2..=256", self.k));
        }
        if self.b == 0 || self.p == 0 {
            return fail("b and p must be positive".into());
        }
        if self.b + 2 * self.p > self.m {
            return fail(format!("b + 2p = {} exceeds m = {}", self.b + 2 * self.p, self.m));
        }
        if self.quorum > self.roster.len() {
            return fail(format!("quorum {} exceeds roster size {}", self.quorum, self.roster.len()));
        }
        if self.alpha == 0 {
            return fail("alpha must be positive".into());
        }
        if self.trials == 0 {
            return fail("trials must be at least 1".into());
        }
        let mut ids: Vec<&ClientId> = self.roster.iter().map(|r| &r.id).collect();
        ids.sort();
        if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
            return fail(format!("duplicate client id {}", w[0]));
        }
        let prior = self.prior();
        if prior.len() != self.k || prior.iter().all(|&w| w == 0) {
            return fail("prior must have k entries with a positive sum".into());
        }
        let model = self.effort_model();
        for r in &self.roster {
            r.strategy
                .0
                .validate(self.k)
                .map_err(|e| HarnessError::Config(format!("{}: {e}", r.id)))?;
            if r.effort.0 > Ratio::from_integer(1) {
                return fail(format!("{}: effort {} outside [0, 1]", r.id, r.effort));
            }
            model
                .accuracy(r.effort.0, self.k)
                .map_err(|e| HarnessError::Config(format!("{}: {e}", r.id)))?;
        }
        if let Some(l) = &self.logistic {
            if l.local_samples == 0 || !(l.noise.is_finite() && l.noise >= 0.0) {
                return fail("logistic: local_samples must be positive and noise finite".into());
            }
        }
        Ok(())
    }

    pub fn prior(&self) -> Vec<u64> {
        self.prior.clone().unwrap_or_else(|| vec![1; self.k])
    }

    pub fn effort_model(&self) -> EffortModel {
        let d = EffortModel::default_for(self.k);
        EffortModel {
            a_min: self.a_min.map_or(d.a_min, |r| r.0),
            a_max: self.a_max.map_or(d.a_max, |r| r.0),
        }
    }

    /// Accuracy of a full-effort client, used for the known-prior joint.
    pub fn reference_accuracy(&self) -> Accuracy {
        self.effort_model().a_max
    }

    pub fn default_payment(&self) -> u64 {
        self.default_payment.unwrap_or_else(|| {
            fedpp_core::ContractConfig::midpoint_default_payment(self.alpha, self.b, self.p)
        })
    }

    /// Sign matrix of the analytic joint of two full-effort truthful clients.
    pub fn known_prior_sign_matrix(&self) -> Result<SignMatrix> {
        let a = self.reference_accuracy();
        let joint = build_joint_from_model(&self.prior(), a, a)?;
        Ok(sign_matrix(&delta_matrix(&joint)))
    }

    pub fn logistic(&self) -> LogisticConfig {
        self.logistic.clone().unwrap_or_default()
    }

    /// `alpha·b·p²`, the largest possible currency payment of one pair.
    pub fn payment_scale(&self) -> u64 {
        self.alpha * (self.b * self.p * self.p) as u64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rationals_parse() {
        assert_eq!("3/4".parse::<Rational>().unwrap(), Rational::new(3, 4));
        assert_eq!("0.85".parse::<Rational>().unwrap(), Rational::new(17, 20));
        assert_eq!("1".parse::<Rational>().unwrap(), Rational::integer(1));
        for bad in ["", "-1", "1/0", "a", "1.", ".5", "1/2/3", "+1"] {
            assert!(bad.parse::<Rational>().is_err(), "{bad}");
        }
    }

    #[test]
    fn strategies_parse_and_print() {
        for s in ["truthful", "constant(2)", "uniform_random", "permuted(1,0,2)", "low_effort_truthful"] {
            let spec: StrategySpec = s.parse().unwrap();
            assert_eq!(spec.0.label(), s);
        }
        assert!("constant()".parse::<StrategySpec>().is_err());
        assert!("honest".parse::<StrategySpec>().is_err());
    }

    #[test]
    fn unknown_fields_rejected() {
        let text = r#"{"k":2,"m":4,"b":1,"p":1,"roster":[],"min_stake":0,"quorum":0,
            "reward_pool":0,"alpha":1,"delta_mode":"empirical","master_seed":0,"trials":1,"bogus":1}"#;
        assert!(serde_json::from_str::<ScenarioConfig>(text).is_err());
    }
}

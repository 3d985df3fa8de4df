use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};

/// Privacy budget of a simulation cell, either literal or a schedule in `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EpsilonSpec {
    Fixed(f64),
    Schedule(EpsilonSchedule),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EpsilonSchedule {
    /// `log n / n^{1/4}`
    #[serde(rename = "logn_q", alias = "logn_over_n_quarter")]
    LognQuarter,
    /// `log n / n^{1/2}`
    #[serde(rename = "logn_h", alias = "logn_over_n_half")]
    LognHalf,
}

impl EpsilonSpec {
    pub fn value(&self, n: usize) -> f64 {
        let ln = (n as f64).ln();
        match self {
            EpsilonSpec::Fixed(e) => *e,
            EpsilonSpec::Schedule(EpsilonSchedule::LognQuarter) => ln / (n as f64).powf(0.25),
            EpsilonSpec::Schedule(EpsilonSchedule::LognHalf) => ln / (n as f64).sqrt(),
        }
    }

    pub fn label(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for EpsilonSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EpsilonSpec::Fixed(e) => write!(f, "{e}"),
            EpsilonSpec::Schedule(EpsilonSchedule::LognQuarter) => f.write_str("logn_q"),
            EpsilonSpec::Schedule(EpsilonSchedule::LognHalf) => f.write_str("logn_h"),
        }
    }
}

impl FromStr for EpsilonSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "logn_q" | "logn_over_n_quarter" => Ok(EpsilonSpec::Schedule(EpsilonSchedule::LognQuarter)),
            "logn_h" | "logn_over_n_half" => Ok(EpsilonSpec::Schedule(EpsilonSchedule::LognHalf)),
            other => {
                let e: f64 = other
                    .parse()
                    .map_err(|_| Error::domain(format!("epsilon must be a number, logn_q or logn_h, got {other:?}")))?;
                if !(e > 0.0) || !e.is_finite() {
                    return Err(Error::domain(format!("epsilon must be positive and finite, got {e}")));
                }
                Ok(EpsilonSpec::Fixed(e))
            }
        }
    }
}

/// Spread `L` of the linear parameter design.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LSpec {
    Fixed(f64),
    Schedule(LSchedule),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LSchedule {
    Zero,
    LoglogN,
    SqrtLogN,
    LogN,
}

impl LSpec {
    pub fn value(&self, n: usize) -> f64 {
        let ln = (n as f64).ln();
        match self {
            LSpec::Fixed(l) => *l,
            LSpec::Schedule(LSchedule::Zero) => 0.0,
            LSpec::Schedule(LSchedule::LoglogN) => ln.ln(),
            LSpec::Schedule(LSchedule::SqrtLogN) => ln.sqrt(),
            LSpec::Schedule(LSchedule::LogN) => ln,
        }
    }
}

impl fmt::Display for LSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LSpec::Fixed(l) => write!(f, "{l}"),
            LSpec::Schedule(LSchedule::Zero) => f.write_str("zero"),
            LSpec::Schedule(LSchedule::LoglogN) => f.write_str("loglog_n"),
            LSpec::Schedule(LSchedule::SqrtLogN) => f.write_str("sqrt_log_n"),
            LSpec::Schedule(LSchedule::LogN) => f.write_str("log_n"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mechanism {
    Laplace,
    DenoisedLaplace,
    EdgeFlip,
}

impl Mechanism {
    pub const ALL: [Mechanism; 3] = [Mechanism::Laplace, Mechanism::DenoisedLaplace, Mechanism::EdgeFlip];

    pub fn as_str(&self) -> &'static str {
        match self {
            Mechanism::Laplace => "laplace",
            Mechanism::DenoisedLaplace => "denoised_laplace",
            Mechanism::EdgeFlip => "edge_flip",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Campaign {
    Distance,
    Qq,
    Variance,
}

fn one_or_many<'de, T, D>(d: D) -> std::result::Result<Vec<T>, D::Error>
where
    T: Deserialize<'de>,
    D: Deserializer<'de>,
{
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany<T> {
        One(T),
        Many(Vec<T>),
    }
    Ok(match OneOrMany::deserialize(d)? {
        OneOrMany::One(x) => vec![x],
        OneOrMany::Many(v) => v,
    })
}

fn default_mechanisms() -> Vec<Mechanism> {
    Mechanism::ALL.to_vec()
}

fn default_campaigns() -> Vec<Campaign> {
    vec![Campaign::Distance]
}

/// A Monte Carlo campaign description, read from JSON.
///
/// `epsilon_spec` and `l_spec` accept a single value or a list; the
/// campaign runs their full cross product with `n_values`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub n_values: Vec<usize>,
    #[serde(deserialize_with = "one_or_many")]
    pub epsilon_spec: Vec<EpsilonSpec>,
    #[serde(deserialize_with = "one_or_many", alias = "L_spec")]
    pub l_spec: Vec<LSpec>,
    pub repetitions: usize,
    pub base_seed: u64,
    #[serde(default = "default_mechanisms")]
    pub mechanisms: Vec<Mechanism>,
    #[serde(default = "default_campaigns")]
    pub campaigns: Vec<Campaign>,
}

impl SimConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: SimConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.repetitions == 0 {
            return Err(Error::domain("repetitions must be at least 1"));
        }
        if self.n_values.is_empty() || self.n_values.iter().any(|&n| n < 2) {
            return Err(Error::domain("n_values must be non-empty with every n >= 2"));
        }
        if self.epsilon_spec.is_empty() || self.l_spec.is_empty() {
            return Err(Error::domain("epsilon_spec and l_spec must be non-empty"));
        }
        for e in &self.epsilon_spec {
            if let EpsilonSpec::Fixed(v) = e {
                if !(*v > 0.0) || !v.is_finite() {
                    return Err(Error::domain(format!("epsilon must be positive and finite, got {v}")));
                }
            }
        }
        for l in &self.l_spec {
            if let LSpec::Fixed(v) = l {
                if !(*v >= 0.0) || !v.is_finite() {
                    return Err(Error::domain(format!("L must be nonnegative and finite, got {v}")));
                }
            }
        }
        if self.mechanisms.is_empty() {
            return Err(Error::domain("mechanisms must be non-empty"));
        }
        Ok(())
    }
}

use std::fmt;
use std::str::FromStr;

use rand::Rng as _;

use super::GanError;
use crate::rng::Rng;

/// Latent intention distribution p(i).
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum IntentionPrior {
    /// Uniform over `k` classes, encoded one-hot.
    Categorical { k: usize },
    /// Uniform on [−1, 1], encoded as the raw scalar.
    Uniform,
}

/// A drawn intention value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Intention {
    Class(usize),
    Value(f64),
}

impl Intention {
    /// Scalar view for logs and CSV output.
    pub fn as_f64(self) -> f64 {
        match self {
            Intention::Class(c) => c as f64,
            Intention::Value(v) => v,
        }
    }

    pub fn class(self) -> Option<usize> {
        match self {
            Intention::Class(c) => Some(c),
            Intention::Value(_) => None,
        }
    }
}

impl IntentionPrior {
    pub fn categorical(k: usize) -> Result<Self, GanError> {
        if k == 0 {
            return Err(GanError::InvalidConfig("categorical prior needs k >= 1".into()));
        }
        Ok(IntentionPrior::Categorical { k })
    }

    pub fn sample(&self, rng: &mut Rng) -> Intention {
        match *self {
            IntentionPrior::Categorical { k } => Intention::Class(rng.gen_range(0..k)),
            IntentionPrior::Uniform => Intention::Value(rng.gen_range(-1.0..=1.0)),
        }
    }

    /// Class probabilities (categorical only).
    pub fn probabilities(&self) -> Option<Vec<f64>> {
        match *self {
            IntentionPrior::Categorical { k } => Some(vec![1.0 / k as f64; k]),
            IntentionPrior::Uniform => None,
        }
    }

    /// Number of distinct values (categorical only).
    pub fn num_classes(&self) -> Option<usize> {
        match *self {
            IntentionPrior::Categorical { k } => Some(k),
            IntentionPrior::Uniform => None,
        }
    }

    pub fn encoding_dim(&self) -> usize {
        match *self {
            IntentionPrior::Categorical { k } => k,
            IntentionPrior::Uniform => 1,
        }
    }

    /// Appends the encoding of `i` to `out`.
    pub fn encode_into(&self, i: Intention, out: &mut Vec<f64>) {
        match (*self, i) {
            (IntentionPrior::Categorical { k }, Intention::Class(c)) => {
                out.extend((0..k).map(|j| if j == c { 1.0 } else { 0.0 }))
            }
            (IntentionPrior::Uniform, Intention::Value(v)) => out.push(v),
            (prior, i) => panic!("intention {i:?} does not belong to prior {prior:?}"),
        }
    }

    pub fn contains(&self, i: Intention) -> bool {
        match (*self, i) {
            (IntentionPrior::Categorical { k }, Intention::Class(c)) => c < k,
            (IntentionPrior::Uniform, Intention::Value(v)) => (-1.0..=1.0).contains(&v),
            _ => false,
        }
    }

    /// Log of the prior entropy H(i) (differential for the uniform case).
    pub fn entropy(&self) -> f64 {
        match *self {
            IntentionPrior::Categorical { k } => (k as f64).ln(),
            IntentionPrior::Uniform => 2f64.ln(),
        }
    }
}

impl fmt::Display for IntentionPrior {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IntentionPrior::Categorical { k } => write!(f, "categorical:{k}"),
            IntentionPrior::Uniform => f.write_str("continuous"),
        }
    }
}

impl FromStr for IntentionPrior {
    type Err = GanError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s == "continuous" || s == "uniform" {
            return Ok(IntentionPrior::Uniform);
        }
        if let Some(k) = s.strip_prefix("categorical:") {
            let k = k
                .parse::<usize>()
                .map_err(|_| GanError::InvalidConfig(format!("bad class count in `{s}`")))?;
            return IntentionPrior::categorical(k);
        }
        Err(GanError::InvalidConfig(format!("unknown prior `{s}`")))
    }
}

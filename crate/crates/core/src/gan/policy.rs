use rand_distr::{Distribution, StandardNormal};
use sha2::{Digest, Sha256};

use super::{GanError, Intention, IntentionPrior};
use crate::diffnet::{Activation, MlpNet, OutputHead, Tape};
use crate::rng::Rng;

pub(crate) const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

/// Log density of a diagonal Gaussian.
pub fn gaussian_log_prob(mean: &[f64], log_std: &[f64], x: &[f64]) -> f64 {
    mean.iter()
        .zip(log_std)
        .zip(x)
        .map(|((m, ls), x)| {
            let z = (x - m) * (-ls).exp();
            -0.5 * z * z - ls - HALF_LN_2PI
        })
        .sum()
}

/// log Σ exp(v).
pub fn log_sum_exp(v: &[f64]) -> f64 {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + v.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// Intention-conditioned diagonal-Gaussian policy π(a | s, i).
///
/// The network maps `state ‖ encode(i)` to the action mean; the standard
/// deviation is a learned per-dimension scalar independent of the input.
#[derive(Clone, Debug, PartialEq)]
pub struct Policy {
    pub net: MlpNet,
    pub log_std: Vec<f64>,
    pub prior: IntentionPrior,
    pub state_dim: usize,
}

impl Policy {
    pub fn new(
        state_dim: usize,
        action_dim: usize,
        prior: IntentionPrior,
        hidden: &[usize],
        activation: Activation,
        init_log_std: f64,
        rng: &mut Rng,
    ) -> Result<Self, GanError> {
        let mut sizes = vec![state_dim + prior.encoding_dim()];
        sizes.extend_from_slice(hidden);
        sizes.push(action_dim);
        let mut net = MlpNet::new(&sizes, activation, OutputHead::GaussianMean, rng)?;
        net.scale_output_layer(0.01);
        Ok(Policy {
            net,
            log_std: vec![init_log_std; action_dim],
            prior,
            state_dim,
        })
    }

    /// Rebuilds a policy from stored parts, checking consistency.
    pub fn from_parts(net: MlpNet, log_std: Vec<f64>, prior: IntentionPrior) -> Result<Self, GanError> {
        let enc = prior.encoding_dim();
        if net.input_dim() <= enc || net.output_dim() != log_std.len() {
            return Err(GanError::DimMismatch(format!(
                "policy net {:?} inconsistent with prior {prior} and {} log-std entries",
                net.layer_sizes(),
                log_std.len()
            )));
        }
        let state_dim = net.input_dim() - enc;
        Ok(Policy {
            net,
            log_std,
            prior,
            state_dim,
        })
    }

    pub fn action_dim(&self) -> usize {
        self.log_std.len()
    }

    pub fn std(&self) -> Vec<f64> {
        self.log_std.iter().map(|l| l.exp()).collect()
    }

    pub(crate) fn input_into(&self, state: &[f64], i: Intention, buf: &mut Vec<f64>) -> Result<(), GanError> {
        if state.len() != self.state_dim {
            return Err(GanError::DimMismatch(format!(
                "state has {} components, policy expects {}",
                state.len(),
                self.state_dim
            )));
        }
        if !self.prior.contains(i) {
            return Err(GanError::DimMismatch(format!("intention {i:?} not in prior {}", self.prior)));
        }
        buf.clear();
        buf.extend_from_slice(state);
        self.prior.encode_into(i, buf);
        Ok(())
    }

    /// Action mean for `(state, i)`, recording the forward pass in `tape`.
    pub fn mean_tape<'t>(
        &self,
        state: &[f64],
        i: Intention,
        tape: &'t mut Tape,
        buf: &mut Vec<f64>,
    ) -> Result<&'t [f64], GanError> {
        self.input_into(state, i, buf)?;
        let m = self.net.forward_tape(buf, tape)?;
        if m.iter().any(|v| !v.is_finite()) {
            return Err(GanError::Diverged("non-finite policy mean".into()));
        }
        Ok(m)
    }

    pub fn mean(&self, state: &[f64], i: Intention) -> Result<Vec<f64>, GanError> {
        let mut tape = Tape::new();
        let mut buf = Vec::new();
        Ok(self.mean_tape(state, i, &mut tape, &mut buf)?.to_vec())
    }

    /// Draws `a = mean + σ·ξ` and returns it with its exact log density.
    pub fn sample(&self, state: &[f64], i: Intention, rng: &mut Rng) -> Result<(Vec<f64>, f64), GanError> {
        let mean = self.mean(state, i)?;
        let action: Vec<f64> = mean
            .iter()
            .zip(&self.log_std)
            .map(|(m, ls)| {
                let xi: f64 = StandardNormal.sample(rng);
                m + ls.exp() * xi
            })
            .collect();
        let lp = gaussian_log_prob(&mean, &self.log_std, &action);
        Ok((action, lp))
    }

    pub fn log_prob(&self, state: &[f64], i: Intention, action: &[f64]) -> Result<f64, GanError> {
        if action.len() != self.action_dim() {
            return Err(GanError::DimMismatch(format!(
                "action has {} components, policy emits {}",
                action.len(),
                self.action_dim()
            )));
        }
        let mean = self.mean(state, i)?;
        Ok(gaussian_log_prob(&mean, &self.log_std, action))
    }

    /// Mixture components `(intention, log weight)` used to evaluate the
    /// intention-marginal policy: all classes for a categorical prior, `m`
    /// Monte-Carlo draws for the uniform prior.
    pub fn marginal_components(&self, rng: &mut Rng, m: usize) -> Vec<(Intention, f64)> {
        match self.prior {
            IntentionPrior::Categorical { k } => {
                let lw = -(k as f64).ln();
                (0..k).map(|c| (Intention::Class(c), lw)).collect()
            }
            IntentionPrior::Uniform => {
                let m = m.max(1);
                let lw = -(m as f64).ln();
                (0..m).map(|_| (self.prior.sample(rng), lw)).collect()
            }
        }
    }

    /// log π(a | s) = log Σ_i p(i) π(a | s, i); exact for categorical priors,
    /// a Monte-Carlo estimate over `m` draws for the uniform prior.
    pub fn marginal_log_prob(&self, state: &[f64], action: &[f64], rng: &mut Rng, m: usize) -> Result<f64, GanError> {
        let terms = self
            .marginal_components(rng, m)
            .into_iter()
            .map(|(i, lw)| Ok(lw + self.log_prob(state, i, action)?))
            .collect::<Result<Vec<f64>, GanError>>()?;
        Ok(log_sum_exp(&terms))
    }

    /// Hex SHA-256 over the policy's parameters.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        for v in self.net.params().iter().chain(&self.log_std) {
            h.update(v.to_le_bytes());
        }
        h.update(self.prior.to_string().as_bytes());
        format!("{:x}", h.finalize())
    }
}

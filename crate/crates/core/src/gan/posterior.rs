use super::policy::HALF_LN_2PI;
use super::{GanError, Intention, IntentionPrior, PROB_FLOOR};
use crate::diffnet::{Activation, GradBuffer, MlpNet, OutputHead, Tape};
use crate::rng::Rng;

/// Default fixed standard deviation of the continuous-intention posterior.
pub const DEFAULT_SIGMA_Q: f64 = 0.1;

/// q(i | s, a): softmax over classes, or a Gaussian with learned mean and
/// fixed standard deviation `sigma_q` for the uniform prior.
#[derive(Clone, Debug, PartialEq)]
pub struct IntentionPosterior {
    pub net: MlpNet,
    pub prior: IntentionPrior,
    pub sigma_q: f64,
}

impl IntentionPosterior {
    pub fn new(
        input_dim: usize,
        prior: IntentionPrior,
        hidden: &[usize],
        activation: Activation,
        sigma_q: f64,
        rng: &mut Rng,
    ) -> Result<Self, GanError> {
        if !(sigma_q > 0.0) {
            return Err(GanError::InvalidConfig("sigma_q must be positive".into()));
        }
        let mut sizes = vec![input_dim];
        sizes.extend_from_slice(hidden);
        let head = match prior {
            IntentionPrior::Categorical { k } => {
                sizes.push(k);
                OutputHead::Softmax
            }
            IntentionPrior::Uniform => {
                sizes.push(1);
                OutputHead::GaussianMean
            }
        };
        Ok(IntentionPosterior {
            net: MlpNet::new(&sizes, activation, head, rng)?,
            prior,
            sigma_q,
        })
    }

    /// Exact ln q(i | s, a) given a forward output.
    fn log_q_from_output(&self, out: &[f64], i: Intention) -> Result<f64, GanError> {
        match (self.prior, i) {
            (IntentionPrior::Categorical { k }, Intention::Class(c)) if c < k => Ok(out[c].ln()),
            (IntentionPrior::Uniform, Intention::Value(v)) => {
                let z = (v - out[0]) / self.sigma_q;
                Ok(-0.5 * z * z - self.sigma_q.ln() - HALF_LN_2PI)
            }
            (prior, i) => Err(GanError::DimMismatch(format!("intention {i:?} not in prior {prior}"))),
        }
    }

    pub fn log_q(&self, sa: &[f64], i: Intention) -> Result<f64, GanError> {
        let out = self.net.forward(sa)?;
        self.log_q_from_output(&out, i)
    }

    /// ln q floored at ln 1e-6, as used inside the generator reward.
    pub fn log_q_floored(&self, sa: &[f64], i: Intention) -> Result<f64, GanError> {
        Ok(self.log_q(sa, i)?.max(PROB_FLOOR.ln()))
    }

    /// Class probabilities (categorical) or the predicted mean (uniform).
    pub fn predict(&self, sa: &[f64]) -> Result<Vec<f64>, GanError> {
        Ok(self.net.forward(sa)?)
    }
}

#[derive(Clone, Debug)]
pub struct PosteriorLoss {
    /// −mean ln q(i | s, a), to be minimized.
    pub loss: f64,
    pub grads: GradBuffer,
}

/// Cross-entropy (categorical) or Gaussian negative log-likelihood
/// (uniform) of the true intentions under the posterior.
pub fn posterior_loss(post: &IntentionPosterior, batch: &[(Vec<f64>, Intention)]) -> Result<PosteriorLoss, GanError> {
    if batch.is_empty() {
        return Err(GanError::EmptyBatch);
    }
    let n = batch.len() as f64;
    let mut grads = post.net.grad_buffer();
    let mut tape = Tape::new();
    let mut loss = 0.0;
    let mut up = vec![0.0; post.net.output_dim()];
    for (sa, i) in batch {
        let out = post.net.forward_tape(sa, &mut tape)?;
        loss -= post.log_q_from_output(out, *i)? / n;
        match *i {
            Intention::Class(c) => {
                // d(−ln p_c)/d logits = p − onehot(c)
                for (j, u) in up.iter_mut().enumerate() {
                    *u = (out[j] - if j == c { 1.0 } else { 0.0 }) / n;
                }
            }
            Intention::Value(v) => {
                up[0] = -(v - out[0]) / (post.sigma_q * post.sigma_q) / n;
            }
        }
        post.net.accumulate_backward_logits(&tape, &up, &mut grads)?;
    }
    Ok(PosteriorLoss { loss, grads })
}

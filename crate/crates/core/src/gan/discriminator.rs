use rand_distr::{Distribution, Normal};

use super::GanError;
use crate::diffnet::{Activation, GradBuffer, MlpNet, OutputHead, Tape};
use crate::rng::Rng;

/// Floor applied to D (and q) inside generator-reward logarithms.
pub const PROB_FLOOR: f64 = 1e-6;

/// ln σ(z), computed without overflow.
pub fn log_sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        -(-z).exp().ln_1p()
    } else {
        z - z.exp().ln_1p()
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// D_w(s, a) = σ(net(s ‖ a)): probability that a pair came from the experts.
#[derive(Clone, Debug, PartialEq)]
pub struct Discriminator {
    pub net: MlpNet,
}

impl Discriminator {
    pub fn new(input_dim: usize, hidden: &[usize], activation: Activation, rng: &mut Rng) -> Result<Self, GanError> {
        let mut sizes = vec![input_dim];
        sizes.extend_from_slice(hidden);
        sizes.push(1);
        Ok(Discriminator {
            net: MlpNet::new(&sizes, activation, OutputHead::Linear, rng)?,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.net.input_dim()
    }

    pub fn logit(&self, sa: &[f64]) -> Result<f64, GanError> {
        Ok(self.net.forward(sa)?[0])
    }

    pub fn prob(&self, sa: &[f64]) -> Result<f64, GanError> {
        Ok(sigmoid(self.logit(sa)?))
    }

    /// ln max(D, 1e-6).
    pub fn log_prob_floored(&self, sa: &[f64]) -> Result<f64, GanError> {
        Ok(log_sigmoid(self.logit(sa)?).max(PROB_FLOOR.ln()))
    }
}

/// Result of one discriminator loss evaluation.
#[derive(Clone, Debug)]
pub struct DiscriminatorLoss {
    /// mean_gen[ln D] + mean_expert[ln(1 − D)]. Equals −2 ln 2 at D ≡ 0.5
    /// and falls without bound as D separates the batches.
    pub loss: f64,
    /// −mean_expert[ln D] − mean_gen[ln(1 − D)], the bounded objective that
    /// `grads` descends (experts labeled 1, generator 0).
    pub cross_entropy: f64,
    /// Fraction of pairs on the correct side of 0.5 (experts above).
    pub accuracy: f64,
    pub mean_d_expert: f64,
    pub mean_d_gen: f64,
    pub grads: GradBuffer,
}

/// Discriminator objective on one minibatch of concatenated `s ‖ a` inputs.
///
/// Gaussian instance noise of standard deviation `noise_sigma` is added
/// independently to every input component of both batches.
pub fn discriminator_loss(
    disc: &Discriminator,
    expert: &[Vec<f64>],
    generated: &[Vec<f64>],
    noise_sigma: f64,
    rng: &mut Rng,
) -> Result<DiscriminatorLoss, GanError> {
    if expert.is_empty() || generated.is_empty() {
        return Err(GanError::EmptyBatch);
    }
    let dim = disc.input_dim();
    if let Some(bad) = expert.iter().chain(generated).find(|x| x.len() != dim) {
        return Err(GanError::DimMismatch(format!(
            "discriminator input has {} components, expected {dim}",
            bad.len()
        )));
    }
    let noise = if noise_sigma > 0.0 {
        Some(Normal::new(0.0, noise_sigma).map_err(|e| GanError::InvalidConfig(e.to_string()))?)
    } else {
        None
    };
    let mut grads = disc.net.grad_buffer();
    let mut tape = Tape::new();
    let mut buf = vec![0.0; dim];
    let mut loss = 0.0;
    let mut ce = 0.0;
    let mut correct = 0usize;
    let mut sums = [0.0, 0.0];
    for (is_expert, batch) in [(false, generated), (true, expert)] {
        let n = batch.len() as f64;
        for x in batch {
            buf.copy_from_slice(x);
            if let Some(nd) = &noise {
                for v in buf.iter_mut() {
                    *v += nd.sample(rng);
                }
            }
            let z = disc.net.forward_tape(&buf, &mut tape)?[0];
            let d = sigmoid(z);
            let dz = if is_expert {
                // ln(1 − σ(z)) = ln σ(−z)
                loss += log_sigmoid(-z) / n;
                ce -= log_sigmoid(z) / n;
                sums[1] += d / n;
                correct += usize::from(d > 0.5);
                (d - 1.0) / n
            } else {
                loss += log_sigmoid(z) / n;
                ce -= log_sigmoid(-z) / n;
                sums[0] += d / n;
                correct += usize::from(d < 0.5);
                d / n
            };
            disc.net.accumulate_backward(&tape, &[dz], &mut grads)?;
        }
    }
    Ok(DiscriminatorLoss {
        loss,
        cross_entropy: ce,
        accuracy: correct as f64 / (expert.len() + generated.len()) as f64,
        mean_d_expert: sums[1],
        mean_d_gen: sums[0],
        grads,
    })
}

/// Accuracy above which the discriminator is considered to overpower the
/// generator.
pub const DISC_ACCURACY_ALARM: f64 = 0.95;

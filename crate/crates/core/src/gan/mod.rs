//! Latent-intention adversarial imitation.
//!
//! A policy π(a | s, i) conditioned on a latent intention `i ~ p(i)` is
//! trained against a discriminator D(s, a) that separates expert pairs
//! (label 1) from generated pairs (label 0), while an intention posterior
//! q(i | s, a) learns to recover `i` from the generated behaviour. The
//! generator's per-step reward is
//!
//! ```text
//! r(s, a, i) = ln D(s, a) + λ_I ln q(i | s, a)
//! ```
//!
//! plus a λ_H' bonus on the entropy of the intention-marginal policy.

mod checkpoint;
mod discriminator;
mod pg;
mod policy;
mod posterior;
mod prior;
mod rollout;
mod toy;
mod train;

pub use checkpoint::{load_checkpoint, load_policy, save_checkpoint, Manifest, CHECKPOINT_FORMAT};
pub use discriminator::{
    discriminator_loss, log_sigmoid, sigmoid, Discriminator, DiscriminatorLoss, DISC_ACCURACY_ALARM, PROB_FLOOR,
};
pub use pg::{policy_gradient, policy_gradient_step, Baseline, PgSettings, PgStats, PolicyOptimizer};
pub use policy::{gaussian_log_prob, log_sum_exp, Policy};
pub use posterior::{posterior_loss, IntentionPosterior, PosteriorLoss, DEFAULT_SIGMA_Q};
pub use prior::{Intention, IntentionPrior};
pub use rollout::{
    attach_action_baselines, collect_rollouts, discounted_returns, generator_reward, RewardModel, RewardTerms, RolloutBatch, Trajectory,
    Transition,
};
pub use toy::{entropy_decomposition_check, mi_lower_bound_check, DiscreteToy, EntropyDecomposition, MiBound};
pub use train::{
    discriminator_alarm, posterior_alarm, train, train_from, train_until, Diagnostic, LogRow, NoiseSchedule, TrainConfig,
    TrainError, TrainLog, TrainOutcome, TrainState, POSTERIOR_WINDOW,
};

use thiserror::Error;

use crate::diffnet::NetError;
use crate::envs::EnvError;

#[derive(Debug, Error)]
pub enum GanError {
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),
    #[error("empty batch")]
    EmptyBatch,
    #[error("diverged: {0}")]
    Diverged(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("distribution not normalized: {0}")]
    NotNormalized(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("training log line {line}: {msg}")]
    LogParse { line: usize, msg: String },
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl GanError {
    pub fn is_divergence(&self) -> bool {
        matches!(self, GanError::Diverged(_) | GanError::Net(NetError::Diverged { .. }))
    }
}

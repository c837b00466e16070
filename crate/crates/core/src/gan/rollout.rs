use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};

use super::{Discriminator, GanError, Intention, IntentionPosterior, Policy};
use crate::diffnet::Tape;
use crate::envs::{EnvSpec, EnvState};
use crate::rng;

/// Per-step generator reward split into its two terms.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RewardTerms {
    /// ln max(D(s, a), 1e-6).
    pub log_d: f64,
    /// ln max(q(i | s, a), 1e-6).
    pub log_q: f64,
    /// log_d + λ_I · log_q.
    pub total: f64,
}

/// Generator reward `ln D(s, a) + λ_I ln q(i | s, a)` on frozen networks.
/// No instance noise is involved here.
pub fn generator_reward(
    disc: &Discriminator,
    post: &IntentionPosterior,
    sa: &[f64],
    intention: Intention,
    lambda_i: f64,
) -> Result<RewardTerms, GanError> {
    let log_d = disc.log_prob_floored(sa)?;
    let log_q = post.log_q_floored(sa, intention)?;
    Ok(RewardTerms {
        log_d,
        log_q,
        total: log_d + lambda_i * log_q,
    })
}

/// Frozen reward networks used while collecting rollouts.
#[derive(Clone, Copy)]
pub struct RewardModel<'a> {
    pub disc: &'a Discriminator,
    pub post: &'a IntentionPosterior,
    pub lambda_i: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Transition {
    pub t: usize,
    pub state: Vec<f64>,
    pub action: Vec<f64>,
    pub intention: Intention,
    /// Standard-normal draw that produced the action: a = mean + σ·noise.
    pub noise: Vec<f64>,
    pub reward: RewardTerms,
    /// Discounted return-to-go.
    pub ret: f64,
    /// Mean reward of fresh actions drawn at this state (0 unless
    /// [`attach_action_baselines`] ran).
    pub action_baseline: f64,
    pub task_rewards: Vec<f64>,
}

impl Transition {
    pub fn state_action(&self) -> Vec<f64> {
        let mut v = self.state.clone();
        v.extend_from_slice(&self.action);
        v
    }
}

/// One episode under a single intention draw.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub intention: Intention,
    pub env_seed: u64,
    pub steps: Vec<Transition>,
    pub final_state: EnvState,
}

impl Trajectory {
    /// Mean per-step ground-truth reward of each skill.
    pub fn mean_task_rewards(&self) -> Vec<f64> {
        let n = self.steps.len().max(1) as f64;
        let k = self.steps.first().map_or(0, |s| s.task_rewards.len());
        let mut out = vec![0.0; k];
        for s in &self.steps {
            for (o, r) in out.iter_mut().zip(&s.task_rewards) {
                *o += r / n;
            }
        }
        out
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RolloutBatch {
    pub trajectories: Vec<Trajectory>,
}

impl RolloutBatch {
    pub fn transitions(&self) -> impl Iterator<Item = &Transition> {
        self.trajectories.iter().flat_map(|t| t.steps.iter())
    }

    pub fn num_steps(&self) -> usize {
        self.trajectories.iter().map(|t| t.steps.len()).sum()
    }
}

/// G_t = r_t + γ G_{t+1}, with G past the end equal to zero.
pub fn discounted_returns(rewards: &[f64], gamma: f64) -> Vec<f64> {
    let mut out = vec![0.0; rewards.len()];
    let mut acc = 0.0;
    for (o, r) in out.iter_mut().zip(rewards).rev() {
        acc = r + gamma * acc;
        *o = acc;
    }
    out
}

/// Rolls out `episodes` episodes. Episode `e` draws its intention and its
/// initial state from the stream `(seed, "episode", e)`, so results do not
/// depend on the order episodes are run in.
pub fn collect_rollouts(
    policy: &Policy,
    env: &EnvSpec,
    reward: &RewardModel<'_>,
    episodes: usize,
    gamma: f64,
    seed: u64,
) -> Result<RolloutBatch, GanError> {
    if policy.state_dim != env.state_dim() || policy.action_dim() != env.action_dim() {
        return Err(GanError::DimMismatch(format!(
            "policy {}→{} does not fit env {} ({}→{})",
            policy.state_dim,
            policy.action_dim(),
            env.name(),
            env.state_dim(),
            env.action_dim()
        )));
    }
    let std = policy.std();
    let mut tape = Tape::new();
    let mut buf = Vec::new();
    let mut trajectories = Vec::with_capacity(episodes);
    for e in 0..episodes {
        let mut r = rng::stream(seed, "episode", &[e as u64]);
        let intention = policy.prior.sample(&mut r);
        let env_seed: u64 = r.gen();
        let mut state = env.reset(env_seed);
        let mut steps = Vec::with_capacity(env.horizon);
        loop {
            let mean = policy.mean_tape(&state.values, intention, &mut tape, &mut buf)?;
            let noise: Vec<f64> = (0..mean.len()).map(|_| StandardNormal.sample(&mut r)).collect();
            let action: Vec<f64> = mean.iter().zip(&std).zip(&noise).map(|((m, s), x)| m + s * x).collect();
            let mut sa = state.values.clone();
            sa.extend_from_slice(&action);
            let terms = generator_reward(reward.disc, reward.post, &sa, intention, reward.lambda_i)?;
            let step = env.step(&state, &action)?;
            steps.push(Transition {
                t: state.t,
                state: std::mem::take(&mut state.values),
                action,
                intention,
                noise,
                reward: terms,
                ret: 0.0,
                action_baseline: 0.0,
                task_rewards: step.task_rewards,
            });
            state = step.next_state;
            if step.done {
                break;
            }
        }
        let rewards: Vec<f64> = steps.iter().map(|s| s.reward.total).collect();
        for (s, g) in steps.iter_mut().zip(discounted_returns(&rewards, gamma)) {
            s.ret = g;
        }
        trajectories.push(Trajectory {
            intention,
            env_seed,
            steps,
            final_state: state,
        });
    }
    Ok(RolloutBatch { trajectories })
}

/// Estimates `E_{a'~π(·|s,i)} r(s, a')` at every visited state with
/// `samples` fresh action draws and stores it in `action_baseline`.
pub fn attach_action_baselines(
    batch: &mut RolloutBatch,
    policy: &Policy,
    reward: &RewardModel<'_>,
    samples: usize,
    seed: u64,
) -> Result<(), GanError> {
    if samples == 0 {
        return Ok(());
    }
    let std = policy.std();
    let mut tape = Tape::new();
    let mut buf = Vec::new();
    for (e, tr) in batch.trajectories.iter_mut().enumerate() {
        let mut r = rng::stream(seed, "action-baseline", &[e as u64]);
        for step in tr.steps.iter_mut() {
            let mean = policy.mean_tape(&step.state, step.intention, &mut tape, &mut buf)?.to_vec();
            let mut sa = step.state.clone();
            let base = sa.len();
            sa.extend_from_slice(&mean);
            let mut acc = 0.0;
            for _ in 0..samples {
                for (d, (m, s)) in mean.iter().zip(&std).enumerate() {
                    let x: f64 = StandardNormal.sample(&mut r);
                    sa[base + d] = m + s * x;
                }
                acc += generator_reward(reward.disc, reward.post, &sa, step.intention, reward.lambda_i)?.total;
            }
            step.action_baseline = acc / samples as f64;
        }
    }
    Ok(())
}

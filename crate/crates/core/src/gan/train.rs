//! Alternating discriminator / posterior / policy training.

use std::fmt::Write as _;

use rand::Rng as _;

use super::pg::{apply_policy_update, policy_gradient, Baseline, PgSettings, PolicyOptimizer};
use super::{
    attach_action_baselines, collect_rollouts, discriminator_loss, posterior_loss, Discriminator, GanError, Intention, IntentionPosterior,
    IntentionPrior, Policy, RewardModel, RolloutBatch, DISC_ACCURACY_ALARM,
};
use crate::diffnet::{Activation, AdamState};
use crate::envs::EnvSpec;
use crate::experts::DemoSet;
use crate::rng;

/// Linearly annealed instance-noise standard deviation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseSchedule {
    pub sigma0: f64,
    pub total_iters: usize,
}

impl NoiseSchedule {
    /// σ(t) = σ0 · max(0, 1 − t / (N − 1)) for a run of N iterations, so the
    /// last iteration trains without noise (a one-iteration run has none).
    pub fn sigma(&self, t: usize) -> f64 {
        if self.total_iters <= 1 {
            return 0.0;
        }
        let span = (self.total_iters - 1) as f64;
        self.sigma0 * (1.0 - t as f64 / span).max(0.0)
    }
}

/// Every hyperparameter of a training run.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub prior: IntentionPrior,
    /// Weight of the latent intention reward term (λ_I).
    pub lambda_i: f64,
    /// Weight of the marginal-entropy bonus (λ_H').
    pub lambda_h: f64,
    pub gamma: f64,
    pub iterations: usize,
    pub episodes_per_iter: usize,
    pub batch_size: usize,
    pub disc_steps: usize,
    pub post_steps: usize,
    pub policy_lr: f64,
    /// Decay the policy learning rate linearly towards zero over the run.
    pub policy_lr_anneal: bool,
    pub disc_lr: f64,
    pub post_lr: f64,
    pub baseline_decay: f64,
    pub noise_sigma0: f64,
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub init_log_std: f64,
    pub sigma_q: f64,
    pub entropy_samples: usize,
    pub normalize_advantages: bool,
    /// Fresh action draws per visited state for the state-dependent part of
    /// the baseline; 0 keeps the per-time-index average alone.
    pub baseline_action_samples: usize,
    pub seed: u64,
    /// Test hook: poison the policy gradient at this iteration.
    pub inject_nan_at: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            prior: IntentionPrior::Categorical { k: 2 },
            lambda_i: 1.0,
            lambda_h: 1e-3,
            gamma: 0.99,
            iterations: 500,
            episodes_per_iter: 8,
            batch_size: 256,
            disc_steps: 2,
            post_steps: 2,
            policy_lr: 3e-4,
            policy_lr_anneal: false,
            disc_lr: 1e-3,
            post_lr: 1e-3,
            baseline_decay: 0.95,
            noise_sigma0: 0.3,
            hidden: vec![64, 64],
            activation: Activation::Tanh,
            init_log_std: -0.5,
            sigma_q: super::DEFAULT_SIGMA_Q,
            entropy_samples: 8,
            normalize_advantages: true,
            baseline_action_samples: 0,
            seed: 0,
            inject_nan_at: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), GanError> {
        let bad = |m: String| Err(GanError::InvalidConfig(m));
        if !(self.lambda_i >= 0.0) || !(self.lambda_h >= 0.0) {
            return bad("lambda_i and lambda_h must be non-negative".into());
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return bad(format!("gamma must lie in [0, 1), got {}", self.gamma));
        }
        if self.episodes_per_iter == 0 || self.batch_size == 0 {
            return bad("episodes_per_iter and batch_size must be positive".into());
        }
        for (name, v) in [
            ("policy_lr", self.policy_lr),
            ("disc_lr", self.disc_lr),
            ("post_lr", self.post_lr),
            ("sigma_q", self.sigma_q),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive"));
            }
        }
        if !(0.0..1.0).contains(&self.baseline_decay) {
            return bad("baseline_decay must lie in [0, 1)".into());
        }
        if !(self.noise_sigma0 >= 0.0) {
            return bad("noise_sigma0 must be non-negative".into());
        }
        if self.hidden.iter().any(|&h| h == 0) {
            return bad("hidden layer sizes must be positive".into());
        }
        Ok(())
    }

    pub fn pg_settings(&self) -> PgSettings {
        PgSettings {
            lambda_h: self.lambda_h,
            entropy_samples: self.entropy_samples,
            normalize_advantages: self.normalize_advantages,
            ..PgSettings::default()
        }
    }

    pub fn noise(&self) -> NoiseSchedule {
        NoiseSchedule {
            sigma0: self.noise_sigma0,
            total_iters: self.iterations,
        }
    }
}

/// Everything needed to continue a run: networks, optimizers, baseline.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainState {
    pub policy: Policy,
    pub disc: Discriminator,
    pub post: IntentionPosterior,
    pub policy_opt: PolicyOptimizer,
    pub disc_opt: AdamState,
    pub post_opt: AdamState,
    pub baseline: Baseline,
    /// Number of completed iterations.
    pub iteration: usize,
}

impl TrainState {
    /// Fresh networks drawn from the `init` stream of the master seed.
    pub fn init(cfg: &TrainConfig, env: &EnvSpec) -> Result<Self, GanError> {
        let mut r = rng::stream(cfg.seed, "init", &[]);
        let sa = env.state_dim() + env.action_dim();
        let policy = Policy::new(
            env.state_dim(),
            env.action_dim(),
            cfg.prior,
            &cfg.hidden,
            cfg.activation,
            cfg.init_log_std,
            &mut r,
        )?;
        let disc = Discriminator::new(sa, &cfg.hidden, cfg.activation, &mut r)?;
        let post = IntentionPosterior::new(sa, cfg.prior, &cfg.hidden, cfg.activation, cfg.sigma_q, &mut r)?;
        Ok(TrainState {
            policy_opt: PolicyOptimizer::new(&policy, cfg.policy_lr),
            disc_opt: AdamState::for_net(&disc.net, cfg.disc_lr),
            post_opt: AdamState::for_net(&post.net, cfg.post_lr),
            baseline: Baseline::new(cfg.baseline_decay),
            policy,
            disc,
            post,
            iteration: 0,
        })
    }
}

/// One row of the training log.
#[derive(Clone, Debug, PartialEq)]
pub struct LogRow {
    pub iter: usize,
    pub disc_loss: f64,
    pub disc_acc: f64,
    pub post_loss: f64,
    pub gen_reward_mean: f64,
    /// Mean of the ln D term of the generator reward.
    pub reward_log_d_mean: f64,
    /// Mean of the λ_I · ln q term of the generator reward.
    pub reward_intention_mean: f64,
    /// Per intention (a single entry for the uniform prior): mean over its
    /// episodes of the best skill's mean per-step ground-truth reward.
    pub task_rewards: Vec<f64>,
    pub noise_sigma: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Diagnostic {
    /// Discriminator accuracy crossed the alarm threshold.
    DiscriminatorDominant { iter: usize, accuracy: f64 },
    /// Posterior loss trended upward over the last 50 iterations.
    PosteriorLossRising { iter: usize, slope: f64 },
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Diagnostic::DiscriminatorDominant { iter, accuracy } => write!(
                f,
                "WARN iter {iter}: discriminator accuracy {accuracy:.3} > {DISC_ACCURACY_ALARM}; generator reward is flattening"
            ),
            Diagnostic::PosteriorLossRising { iter, slope } => write!(
                f,
                "WARN iter {iter}: intention posterior loss rising (slope {slope:.2e}/iter over {POSTERIOR_WINDOW} iters); policy may be collapsing to one mode"
            ),
        }
    }
}

/// Window of the posterior-loss trend diagnostic.
pub const POSTERIOR_WINDOW: usize = 50;

/// Fires when `accuracy` exceeds the alarm threshold.
pub fn discriminator_alarm(iter: usize, accuracy: f64) -> Option<Diagnostic> {
    (accuracy > DISC_ACCURACY_ALARM).then_some(Diagnostic::DiscriminatorDominant { iter, accuracy })
}

/// Fires when the least-squares slope of the last [`POSTERIOR_WINDOW`]
/// losses is positive.
pub fn posterior_alarm(iter: usize, losses: &[f64]) -> Option<Diagnostic> {
    if losses.len() < POSTERIOR_WINDOW {
        return None;
    }
    let w = &losses[losses.len() - POSTERIOR_WINDOW..];
    let n = w.len() as f64;
    let xm = (n - 1.0) / 2.0;
    let ym = w.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (x, y) in w.iter().enumerate() {
        let dx = x as f64 - xm;
        sxy += dx * (y - ym);
        sxx += dx * dx;
    }
    let slope = sxy / sxx;
    (slope > 0.0).then_some(Diagnostic::PosteriorLossRising { iter, slope })
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainLog {
    pub seed: u64,
    pub n_intention_columns: usize,
    pub rows: Vec<LogRow>,
    pub diagnostics: Vec<Diagnostic>,
}

impl TrainLog {
    pub fn header(&self) -> String {
        let mut h = String::from("iter,disc_loss,disc_acc,post_loss,gen_reward_mean");
        for j in 0..self.n_intention_columns {
            let _ = write!(h, ",task_reward_i{j}");
        }
        h.push_str(",noise_sigma");
        h
    }

    /// CSV text, optionally preceded by a `#` comment line.
    pub fn to_csv(&self, comment: Option<&str>) -> String {
        let mut s = String::new();
        if let Some(c) = comment {
            let _ = writeln!(s, "# {c}");
        }
        s.push_str(&self.header());
        s.push('\n');
        for r in &self.rows {
            let _ = write!(
                s,
                "{},{:?},{:?},{:?},{:?}",
                r.iter, r.disc_loss, r.disc_acc, r.post_loss, r.gen_reward_mean
            );
            for v in &r.task_rewards {
                let _ = write!(s, ",{v:?}");
            }
            let _ = writeln!(s, ",{:?}", r.noise_sigma);
        }
        s
    }
}

impl TrainLog {
    /// Parses CSV written by [`TrainLog::to_csv`]. Comment lines are
    /// skipped; the reward decomposition columns are not stored in the file
    /// and come back as NaN.
    pub fn from_csv(text: &str) -> Result<TrainLog, GanError> {
        let err = |line: usize, msg: String| GanError::LogParse { line, msg };
        let mut log = TrainLog::default();
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(n, l)| (n + 1, l))
            .filter(|(_, l)| !l.trim().is_empty());
        let mut header = None;
        for (n, l) in lines.by_ref() {
            if let Some(c) = l.strip_prefix('#') {
                if let Some(seed) = c.split_whitespace().find_map(|w| w.strip_prefix("seed=")) {
                    log.seed = seed.parse().map_err(|_| err(n, format!("bad seed `{seed}`")))?;
                }
                continue;
            }
            header = Some((n, l));
            break;
        }
        let Some((hn, header)) = header else {
            return Ok(log);
        };
        let cols: Vec<&str> = header.split(',').collect();
        let fixed = ["iter", "disc_loss", "disc_acc", "post_loss", "gen_reward_mean"];
        if cols.len() < fixed.len() + 1 || cols[..fixed.len()] != fixed || cols[cols.len() - 1] != "noise_sigma" {
            return Err(err(hn, format!("unexpected header `{header}`")));
        }
        let k = cols.len() - fixed.len() - 1;
        for (j, c) in cols[fixed.len()..cols.len() - 1].iter().enumerate() {
            if *c != format!("task_reward_i{j}") {
                return Err(err(hn, format!("unexpected column `{c}`")));
            }
        }
        log.n_intention_columns = k;
        for (n, l) in lines {
            if l.starts_with('#') {
                continue;
            }
            let f: Vec<&str> = l.split(',').collect();
            if f.len() != cols.len() {
                return Err(err(n, format!("expected {} fields, got {}", cols.len(), f.len())));
            }
            let num = |i: usize| -> Result<f64, GanError> {
                f[i].trim()
                    .parse::<f64>()
                    .map_err(|_| err(n, format!("column `{}`: not a number: `{}`", cols[i], f[i])))
            };
            let iter = f[0]
                .trim()
                .parse::<usize>()
                .map_err(|_| err(n, format!("column `iter`: not an integer: `{}`", f[0])))?;
            log.rows.push(LogRow {
                iter,
                disc_loss: num(1)?,
                disc_acc: num(2)?,
                post_loss: num(3)?,
                gen_reward_mean: num(4)?,
                reward_log_d_mean: f64::NAN,
                reward_intention_mean: f64::NAN,
                task_rewards: (0..k).map(|j| num(5 + j)).collect::<Result<_, _>>()?,
                noise_sigma: num(cols.len() - 1)?,
            });
        }
        Ok(log)
    }
}

#[derive(Debug)]
pub struct TrainOutcome {
    pub state: TrainState,
    pub log: TrainLog,
}

/// Training failure; divergence carries the last good state for
/// checkpointing.
#[derive(Debug)]
pub enum TrainError {
    Diverged {
        iter: usize,
        reason: String,
        last_good: Box<TrainState>,
        log: TrainLog,
    },
    Other(GanError),
}

impl std::fmt::Display for TrainError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TrainError::Diverged { iter, reason, .. } => write!(f, "training diverged at iteration {iter}: {reason}"),
            TrainError::Other(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for TrainError {}

impl From<GanError> for TrainError {
    fn from(e: GanError) -> Self {
        TrainError::Other(e)
    }
}

fn check_demos(demos: &DemoSet, env: &EnvSpec) -> Result<(), GanError> {
    if demos.state_dim != env.state_dim() || demos.action_dim != env.action_dim() {
        return Err(GanError::DimMismatch(format!(
            "demos are {}+{} dimensional, env {} needs {}+{}",
            demos.state_dim,
            demos.action_dim,
            env.name(),
            env.state_dim(),
            env.action_dim()
        )));
    }
    if demos.is_empty() {
        return Err(GanError::EmptyBatch);
    }
    Ok(())
}

/// Trains from scratch for `cfg.iterations` iterations.
pub fn train(cfg: &TrainConfig, demos: &DemoSet, env: &EnvSpec) -> Result<TrainOutcome, TrainError> {
    cfg.validate()?;
    let state = TrainState::init(cfg, env)?;
    train_from(state, cfg, demos, env, TrainLog::default())
}

/// Continues `state` until `cfg.iterations` iterations have completed.
/// Every random draw is addressed by (seed, iteration), so a resumed run
/// reproduces an uninterrupted one.
pub fn train_from(
    state: TrainState,
    cfg: &TrainConfig,
    demos: &DemoSet,
    env: &EnvSpec,
    log: TrainLog,
) -> Result<TrainOutcome, TrainError> {
    train_until(state, cfg, demos, env, log, cfg.iterations)
}

/// Like [`train_from`] but stops after iteration `until` (capped at
/// `cfg.iterations`); the noise schedule still spans `cfg.iterations`.
pub fn train_until(
    mut state: TrainState,
    cfg: &TrainConfig,
    demos: &DemoSet,
    env: &EnvSpec,
    mut log: TrainLog,
    until: usize,
) -> Result<TrainOutcome, TrainError> {
    let until = until.min(cfg.iterations);
    cfg.validate()?;
    env.validate().map_err(GanError::from)?;
    log.seed = cfg.seed;
    log.n_intention_columns = cfg.prior.num_classes().unwrap_or(1);
    if until > state.iteration {
        check_demos(demos, env)?;
    }
    let expert_pairs: Vec<Vec<f64>> = demos
        .records
        .iter()
        .map(|r| {
            let mut v = r.state.clone();
            v.extend_from_slice(&r.action);
            v
        })
        .collect();
    let mut post_losses: Vec<f64> = log.rows.iter().map(|r| r.post_loss).collect();
    let mut disc_alarm_on = false;
    while state.iteration < until {
        let iter = state.iteration;
        let snapshot = state.clone();
        match run_iteration(&mut state, cfg, &expert_pairs, env, iter) {
            Ok(row) => {
                if let Some(d) = discriminator_alarm(iter, row.disc_acc) {
                    if !disc_alarm_on {
                        log.diagnostics.push(d);
                    }
                    disc_alarm_on = true;
                } else {
                    disc_alarm_on = false;
                }
                post_losses.push(row.post_loss);
                if (iter + 1) % POSTERIOR_WINDOW == 0 {
                    if let Some(d) = posterior_alarm(iter, &post_losses) {
                        log.diagnostics.push(d);
                    }
                }
                log.rows.push(row);
                state.iteration += 1;
            }
            Err(e) if e.is_divergence() => {
                return Err(TrainError::Diverged {
                    iter,
                    reason: e.to_string(),
                    last_good: Box::new(snapshot),
                    log,
                })
            }
            Err(e) => return Err(TrainError::Other(e)),
        }
    }
    Ok(TrainOutcome { state, log })
}

fn run_iteration(
    state: &mut TrainState,
    cfg: &TrainConfig,
    expert_pairs: &[Vec<f64>],
    env: &EnvSpec,
    iter: usize,
) -> Result<LogRow, GanError> {
    let it = iter as u64;
    let batch = {
        let reward = RewardModel {
            disc: &state.disc,
            post: &state.post,
            lambda_i: cfg.lambda_i,
        };
        let mut batch = collect_rollouts(
            &state.policy,
            env,
            &reward,
            cfg.episodes_per_iter,
            cfg.gamma,
            rng::derive_seed(cfg.seed, "rollout", &[it]),
        )?;
        attach_action_baselines(
            &mut batch,
            &state.policy,
            &reward,
            cfg.baseline_action_samples,
            rng::derive_seed(cfg.seed, "baseline", &[it]),
        )?;
        batch
    };
    let gen_pairs: Vec<(Vec<f64>, Intention)> = batch.transitions().map(|t| (t.state_action(), t.intention)).collect();
    let sigma = cfg.noise().sigma(iter);

    let (mut disc_loss, mut disc_acc) = (0.0, 0.0);
    for k in 0..cfg.disc_steps {
        let mut r = rng::stream(cfg.seed, "disc", &[it, k as u64]);
        let e: Vec<Vec<f64>> = (0..cfg.batch_size)
            .map(|_| expert_pairs[r.gen_range(0..expert_pairs.len())].clone())
            .collect();
        let g: Vec<Vec<f64>> = (0..cfg.batch_size)
            .map(|_| gen_pairs[r.gen_range(0..gen_pairs.len())].0.clone())
            .collect();
        let out = discriminator_loss(&state.disc, &e, &g, sigma, &mut r)?;
        disc_loss += out.loss / cfg.disc_steps as f64;
        disc_acc += out.accuracy / cfg.disc_steps as f64;
        state.disc_opt.step_net(&mut state.disc.net, &out.grads)?;
    }

    let mut post_loss = 0.0;
    for k in 0..cfg.post_steps {
        let mut r = rng::stream(cfg.seed, "post", &[it, k as u64]);
        let b: Vec<(Vec<f64>, Intention)> = (0..cfg.batch_size)
            .map(|_| gen_pairs[r.gen_range(0..gen_pairs.len())].clone())
            .collect();
        let out = posterior_loss(&state.post, &b)?;
        post_loss += out.loss / cfg.post_steps as f64;
        state.post_opt.step_net(&mut state.post.net, &out.grads)?;
    }

    let settings = cfg.pg_settings();
    if cfg.policy_lr_anneal {
        let lr = cfg.policy_lr * (1.0 - iter as f64 / cfg.iterations.max(1) as f64);
        state.policy_opt.net.lr = lr;
        state.policy_opt.log_std.lr = lr;
    }
    let mut r = rng::stream(cfg.seed, "entropy", &[it]);
    let (mut g_net, g_ls, _, _) = policy_gradient(&state.policy, &batch, &state.baseline, &settings, &mut r)?;
    if cfg.inject_nan_at == Some(iter) {
        g_net.data[0] = f64::NAN;
    }
    apply_policy_update(&mut state.policy, &mut state.policy_opt, &g_net, &g_ls, &settings)?;
    state.baseline.update(&batch);

    let n = batch.num_steps().max(1) as f64;
    let gen_reward_mean = batch.transitions().map(|t| t.reward.total).sum::<f64>() / n;
    let reward_log_d_mean = batch.transitions().map(|t| t.reward.log_d).sum::<f64>() / n;
    let reward_intention_mean = batch.transitions().map(|t| cfg.lambda_i * t.reward.log_q).sum::<f64>() / n;
    Ok(LogRow {
        iter,
        disc_loss,
        disc_acc,
        post_loss,
        gen_reward_mean,
        reward_log_d_mean,
        reward_intention_mean,
        task_rewards: per_intention_task_reward(&batch, cfg.prior),
        noise_sigma: sigma,
    })
}

fn per_intention_task_reward(batch: &RolloutBatch, prior: IntentionPrior) -> Vec<f64> {
    let cols = prior.num_classes().unwrap_or(1);
    let mut sums = vec![(0.0, 0usize); cols];
    for tr in &batch.trajectories {
        let col = tr.intention.class().unwrap_or(0);
        let best = tr.mean_task_rewards().into_iter().fold(f64::NEG_INFINITY, f64::max);
        sums[col].0 += best;
        sums[col].1 += 1;
    }
    sums.into_iter()
        .map(|(s, n)| if n == 0 { f64::NAN } else { s / n as f64 })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noise_schedule_reaches_zero() {
        let s = NoiseSchedule {
            sigma0: 0.3,
            total_iters: 11,
        };
        assert_eq!(s.sigma(0), 0.3);
        assert!((s.sigma(5) - 0.15).abs() < 1e-15);
        assert_eq!(s.sigma(10), 0.0);
        let mut prev = f64::INFINITY;
        for t in 0..20 {
            assert!(s.sigma(t) <= prev && s.sigma(t) >= 0.0);
            prev = s.sigma(t);
        }
    }

    #[test]
    fn posterior_alarm_needs_full_window() {
        let rising: Vec<f64> = (0..60).map(|i| i as f64 * 0.01).collect();
        assert!(posterior_alarm(59, &rising).is_some());
        assert!(posterior_alarm(10, &rising[..10]).is_none());
        let falling: Vec<f64> = rising.iter().rev().copied().collect();
        assert!(posterior_alarm(59, &falling).is_none());
    }

    #[test]
    fn accuracy_alarm_threshold() {
        assert!(discriminator_alarm(0, 0.96).is_some());
        assert!(discriminator_alarm(0, 0.95).is_none());
    }
}

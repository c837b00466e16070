//! Likelihood-ratio policy gradient with a moving-average baseline and a
//! marginal-entropy bonus.

use super::policy::gaussian_log_prob;
use super::{log_sum_exp, GanError, Policy, RolloutBatch};
use crate::diffnet::{AdamState, GradBuffer, Tape};
use crate::rng::Rng;

/// Exponential moving average of returns, kept separately per time index.
/// When transitions carry an action baseline the average is taken over
/// `ret − action_baseline` and the action baseline is added back per state.
#[derive(Clone, Debug, PartialEq)]
pub struct Baseline {
    pub decay: f64,
    /// `None` until the first batch reaching that time index.
    pub values: Vec<Option<f64>>,
}

impl Baseline {
    pub fn new(decay: f64) -> Self {
        Baseline {
            decay,
            values: Vec::new(),
        }
    }

    pub fn value(&self, t: usize) -> Option<f64> {
        self.values.get(t).copied().flatten()
    }

    /// Folds the batch-mean return at each time index into the average.
    pub fn update(&mut self, batch: &RolloutBatch) {
        let mut sums: Vec<(f64, usize)> = Vec::new();
        for tr in batch.transitions() {
            if sums.len() <= tr.t {
                sums.resize(tr.t + 1, (0.0, 0));
            }
            sums[tr.t].0 += tr.ret - tr.action_baseline;
            sums[tr.t].1 += 1;
        }
        if self.values.len() < sums.len() {
            self.values.resize(sums.len(), None);
        }
        for (t, (s, n)) in sums.into_iter().enumerate() {
            if n == 0 {
                continue;
            }
            let mean = s / n as f64;
            self.values[t] = Some(match self.values[t] {
                Some(b) => self.decay * b + (1.0 - self.decay) * mean,
                None => mean,
            });
        }
    }
}

/// Adaptive-moment state for the policy network and its log-std vector.
#[derive(Clone, Debug, PartialEq)]
pub struct PolicyOptimizer {
    pub net: AdamState,
    pub log_std: AdamState,
}

impl PolicyOptimizer {
    pub fn new(policy: &Policy, lr: f64) -> Self {
        PolicyOptimizer {
            net: AdamState::for_net(&policy.net, lr),
            log_std: AdamState::new(policy.log_std.len(), lr),
        }
    }
}

/// Knobs of one policy-gradient step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PgSettings {
    /// Weight of the marginal-entropy bonus (λ_H').
    pub lambda_h: f64,
    /// Monte-Carlo draws for the marginal under a uniform prior.
    pub entropy_samples: usize,
    /// Standardize advantages across the batch.
    pub normalize_advantages: bool,
    /// Bounds applied to log σ after the update.
    pub log_std_range: (f64, f64),
}

impl Default for PgSettings {
    fn default() -> Self {
        PgSettings {
            lambda_h: 1e-3,
            entropy_samples: 8,
            normalize_advantages: true,
            log_std_range: (-5.0, 2.0),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PgStats {
    /// Sample estimate of the marginal policy entropy, −mean ln π(a | s).
    pub entropy: f64,
    pub mean_advantage: f64,
    pub mean_return: f64,
}

/// Gradients of the surrogate loss
///
/// `L = −mean_t[ln π(a_t | s_t, i) · A_t] − λ_H' · Ĥ`,  `Ĥ = −mean_t ln π(a_t | s_t)`
///
/// where `A_t = G_t − b_t` and the entropy term is differentiated along the
/// reparameterized action `a_t = μ(s_t, i) + σ ξ_t`. Returns gradients for
/// the network and for log σ, plus the advantages used.
pub fn policy_gradient(
    policy: &Policy,
    batch: &RolloutBatch,
    baseline: &Baseline,
    settings: &PgSettings,
    rng: &mut Rng,
) -> Result<(GradBuffer, Vec<f64>, Vec<f64>, PgStats), GanError> {
    let n = batch.num_steps();
    let adim = policy.action_dim();
    let mut g_net = policy.net.grad_buffer();
    let mut g_ls = vec![0.0; adim];
    if n == 0 {
        let stats = PgStats {
            entropy: 0.0,
            mean_advantage: 0.0,
            mean_return: 0.0,
        };
        return Ok((g_net, g_ls, Vec::new(), stats));
    }
    let nf = n as f64;
    let mut adv: Vec<f64> = batch
        .transitions()
        .map(|tr| tr.ret - tr.action_baseline - baseline.value(tr.t).unwrap_or(0.0))
        .collect();
    let mean_return = batch.transitions().map(|t| t.ret).sum::<f64>() / nf;
    let mean_residual = batch.transitions().map(|t| t.ret - t.action_baseline).sum::<f64>() / nf;
    let first_batch = batch.transitions().all(|tr| baseline.value(tr.t).is_none());
    if first_batch {
        // no history yet: centre on this batch
        for (a, tr) in adv.iter_mut().zip(batch.transitions()) {
            *a = tr.ret - tr.action_baseline - mean_residual;
        }
    }
    let mean_adv = adv.iter().sum::<f64>() / nf;
    if settings.normalize_advantages && n > 1 {
        let var = adv.iter().map(|a| (a - mean_adv).powi(2)).sum::<f64>() / nf;
        let sd = var.sqrt();
        for a in adv.iter_mut() {
            *a = if sd > 1e-12 { (*a - mean_adv) / sd } else { 0.0 };
        }
    }
    let sigma = policy.std();
    let inv_var: Vec<f64> = sigma.iter().map(|s| 1.0 / (s * s)).collect();
    let mut tape = Tape::new();
    let mut buf = Vec::new();
    let mut up = vec![0.0; adim];
    let use_entropy = settings.lambda_h != 0.0;
    let c_ent = settings.lambda_h / nf;
    let mut comp_tapes: Vec<Tape> = Vec::new();
    let mut entropy = 0.0;
    for (tr, &a_t) in batch.transitions().zip(&adv) {
        let mean = policy.mean_tape(&tr.state, tr.intention, &mut tape, &mut buf)?.to_vec();
        for d in 0..adim {
            let diff = tr.action[d] - mean[d];
            up[d] = -a_t / nf * diff * inv_var[d];
            g_ls[d] -= a_t / nf * (diff * diff * inv_var[d] - 1.0);
        }
        if use_entropy {
            let comps = policy.marginal_components(rng, settings.entropy_samples);
            if comp_tapes.len() < comps.len() {
                comp_tapes.resize_with(comps.len(), Tape::new);
            }
            let mut means = Vec::with_capacity(comps.len());
            let mut logits = Vec::with_capacity(comps.len());
            for ((i, lw), ct) in comps.iter().zip(comp_tapes.iter_mut()) {
                let m = policy.mean_tape(&tr.state, *i, ct, &mut buf)?.to_vec();
                logits.push(lw + gaussian_log_prob(&m, &policy.log_std, &tr.action));
                means.push(m);
            }
            let lse = log_sum_exp(&logits);
            entropy -= lse / nf;
            let resp: Vec<f64> = logits.iter().map(|l| (l - lse).exp()).collect();
            // ∂ℓ/∂a, where ℓ = ln π(a | s)
            let mut g_a = vec![0.0; adim];
            for (r, m) in resp.iter().zip(&means) {
                for d in 0..adim {
                    g_a[d] -= r * (tr.action[d] - m[d]) * inv_var[d];
                }
            }
            for d in 0..adim {
                up[d] += c_ent * g_a[d];
                let mut direct = 0.0;
                for (r, m) in resp.iter().zip(&means) {
                    let z2 = (tr.action[d] - m[d]).powi(2) * inv_var[d];
                    direct += r * (z2 - 1.0);
                }
                g_ls[d] += c_ent * (direct + g_a[d] * sigma[d] * tr.noise[d]);
            }
            for ((r, m), ct) in resp.iter().zip(&means).zip(&comp_tapes) {
                let cu: Vec<f64> = (0..adim)
                    .map(|d| c_ent * r * (tr.action[d] - m[d]) * inv_var[d])
                    .collect();
                policy.net.accumulate_backward(ct, &cu, &mut g_net)?;
            }
        }
        policy.net.accumulate_backward(&tape, &up, &mut g_net)?;
    }
    let stats = PgStats {
        entropy,
        mean_advantage: mean_adv,
        mean_return,
    };
    Ok((g_net, g_ls, adv, stats))
}

/// Computes the policy gradient on `batch`, applies one optimizer step,
/// then folds the batch into the baseline.
pub fn policy_gradient_step(
    policy: &mut Policy,
    opt: &mut PolicyOptimizer,
    batch: &RolloutBatch,
    baseline: &mut Baseline,
    settings: &PgSettings,
    rng: &mut Rng,
) -> Result<PgStats, GanError> {
    let (g_net, g_ls, _, stats) = policy_gradient(policy, batch, baseline, settings, rng)?;
    apply_policy_update(policy, opt, &g_net, &g_ls, settings)?;
    baseline.update(batch);
    Ok(stats)
}

pub(crate) fn apply_policy_update(
    policy: &mut Policy,
    opt: &mut PolicyOptimizer,
    g_net: &GradBuffer,
    g_ls: &[f64],
    settings: &PgSettings,
) -> Result<(), GanError> {
    if !g_net.is_finite() || g_ls.iter().any(|g| !g.is_finite()) {
        return Err(GanError::Diverged("non-finite policy gradient".into()));
    }
    opt.net.step_net(&mut policy.net, g_net)?;
    opt.log_std.apply(&mut policy.log_std, g_ls)?;
    let (lo, hi) = settings.log_std_range;
    for l in policy.log_std.iter_mut() {
        *l = l.clamp(lo, hi);
    }
    Ok(())
}

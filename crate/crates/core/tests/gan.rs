use mmil::diffnet::Activation;
use mmil::envs::{EnvKind, EnvSpec};
use mmil::experts::{generate_demos, ExpertSpec};
use mmil::gan::*;
use mmil::rng;
use proptest::prelude::*;

fn toy_policy(state_dim: usize, prior: IntentionPrior, seed: u64) -> Policy {
    let mut r = rng::stream(seed, "test-policy", &[]);
    Policy::new(state_dim, 1, prior, &[8], Activation::Tanh, -0.3, &mut r).unwrap()
}

#[test]
fn categorical_and_uniform_priors() {
    let mut r = rng::stream(1, "prior", &[]);
    let k4 = IntentionPrior::categorical(4).unwrap();
    assert_eq!(k4.probabilities().unwrap(), vec![0.25; 4]);
    let one = IntentionPrior::categorical(1).unwrap();
    for _ in 0..100 {
        assert_eq!(one.sample(&mut r), Intention::Class(0));
    }
    let n = 100_000;
    let mut sum = 0.0;
    for _ in 0..n {
        let v = IntentionPrior::Uniform.sample(&mut r).as_f64();
        assert!((-1.0..=1.0).contains(&v));
        sum += v;
    }
    assert!((sum / n as f64).abs() < 0.01);
    assert!(IntentionPrior::categorical(0).is_err());
}

#[test]
fn gaussian_log_density_examples() {
    let lp = gaussian_log_prob(&[0.0], &[0.0], &[0.0]);
    assert!((lp + 0.918_938_533_204_672_7).abs() < 1e-12);
    let sigma: f64 = 0.3;
    let lp = gaussian_log_prob(&[0.7, -0.2], &[sigma.ln(), sigma.ln()], &[0.7, -0.2]);
    let per_dim = -0.5 * (2.0 * std::f64::consts::PI * sigma * sigma).ln();
    assert!((lp - 2.0 * per_dim).abs() < 1e-12);
}

#[test]
fn sampled_log_prob_matches_binned_density() {
    let policy = toy_policy(1, IntentionPrior::categorical(2).unwrap(), 3);
    let state = [0.4];
    let i = Intention::Class(1);
    let mut r = rng::stream(3, "quad", &[]);
    let (a, lp) = policy.sample(&state, i, &mut r).unwrap();
    assert!((lp - policy.log_prob(&state, i, &a).unwrap()).abs() < 1e-12);
    // probability mass of a small bin around the sample, by Simpson's rule
    let h = 0.02 * policy.std()[0];
    let n = 200;
    let step = 2.0 * h / n as f64;
    let mut mass = 0.0;
    for j in 0..=n {
        let x = a[0] - h + j as f64 * step;
        let w = if j == 0 || j == n { 1.0 } else if j % 2 == 1 { 4.0 } else { 2.0 };
        mass += w * policy.log_prob(&state, i, &[x]).unwrap().exp();
    }
    mass *= step / 3.0;
    let approx = mass / (2.0 * h);
    assert!((approx / lp.exp() - 1.0).abs() < 0.02);
}

#[test]
fn marginal_log_prob_equals_direct_sum() {
    let prior = IntentionPrior::categorical(3).unwrap();
    let policy = toy_policy(1, prior, 5);
    let mut r = rng::stream(5, "marg", &[]);
    for s in [-0.8, 0.0, 0.3, 1.1] {
        for a in [-1.0, 0.05, 0.9] {
            let direct: f64 = (0..3)
                .map(|c| policy.log_prob(&[s], Intention::Class(c), &[a]).unwrap().exp() / 3.0)
                .sum();
            let m = policy.marginal_log_prob(&[s], &[a], &mut r, 8).unwrap();
            assert!((m - direct.ln()).abs() < 1e-12);
        }
    }
}

#[test]
fn mixture_edge_cases() {
    let prior = IntentionPrior::categorical(2).unwrap();
    let mut policy = toy_policy(1, prior, 6);
    let mut r = rng::stream(6, "mix", &[]);
    // identical components: zero the intention inputs of the first layer
    let p0 = policy.log_prob(&[0.2], Intention::Class(0), &[0.1]).unwrap();
    let p1 = policy.log_prob(&[0.2], Intention::Class(1), &[0.1]).unwrap();
    let m = policy.marginal_log_prob(&[0.2], &[0.1], &mut r, 1).unwrap();
    let expect = ((p0.exp() + p1.exp()) / 2.0).ln();
    assert!((m - expect).abs() < 1e-12);

    policy.log_std = vec![(0.01f64).ln()];
    let mu0 = policy.mean(&[0.2], Intention::Class(0)).unwrap();
    let mu1 = policy.mean(&[0.2], Intention::Class(1)).unwrap();
    if (mu0[0] - mu1[0]).abs() > 0.2 {
        let m = policy.marginal_log_prob(&[0.2], &mu0, &mut r, 1).unwrap();
        let c0 = policy.log_prob(&[0.2], Intention::Class(0), &mu0).unwrap();
        assert!((m - (c0 + 0.5f64.ln())).abs() < 1e-6);
    }
}

#[test]
fn discriminator_constant_half_and_dims() {
    let mut r = rng::stream(7, "disc", &[]);
    let mut d = Discriminator::new(2, &[4], Activation::Tanh, &mut r).unwrap();
    d.net.params_mut().fill(0.0);
    let e = vec![vec![0.1, 0.2]; 5];
    let g = vec![vec![-0.4, 0.9]; 7];
    let out = discriminator_loss(&d, &e, &g, 0.0, &mut r).unwrap();
    assert!((out.loss + 1.386_294_361_119_890_6).abs() < 1e-12);
    assert!(discriminator_loss(&d, &[vec![0.0; 3]], &g, 0.0, &mut r).is_err());
    assert!(discriminator_loss(&d, &[], &g, 0.0, &mut r).is_err());
}

fn train_disc(expert: &[Vec<f64>], gen: &[Vec<f64>], steps: usize) -> (DiscriminatorLoss, Discriminator) {
    let mut r = rng::stream(8, "disc-train", &[]);
    let mut d = Discriminator::new(1, &[16], Activation::Tanh, &mut r).unwrap();
    let mut opt = mmil::diffnet::AdamState::for_net(&d.net, 1e-2);
    for _ in 0..steps {
        let out = discriminator_loss(&d, expert, gen, 0.0, &mut r).unwrap();
        opt.step_net(&mut d.net, &out.grads).unwrap();
    }
    (discriminator_loss(&d, expert, gen, 0.0, &mut r).unwrap(), d)
}

#[test]
fn discriminator_identical_batches_stay_at_half() {
    let mut r = rng::stream(9, "gauss", &[]);
    let xs: Vec<Vec<f64>> = (0..256)
        .map(|_| vec![rand_distr::Distribution::<f64>::sample(&rand_distr::StandardNormal, &mut r)])
        .collect();
    let (out, _) = train_disc(&xs, &xs, 300);
    assert!((out.loss + 2.0 * 2f64.ln()).abs() < 0.05, "{}", out.loss);
}

#[test]
fn discriminator_label_convention_and_alarm() {
    let expert: Vec<Vec<f64>> = (0..64).map(|j| vec![2.0 + j as f64 / 64.0]).collect();
    let gen: Vec<Vec<f64>> = (0..64).map(|j| vec![-2.0 - j as f64 / 64.0]).collect();
    let (out, d) = train_disc(&expert, &gen, 300);
    assert!(out.accuracy > 0.95);
    assert!(out.loss < -4.0);
    assert!(out.mean_d_expert > out.mean_d_gen);
    assert!(d.prob(&[2.5]).unwrap() > d.prob(&[-2.5]).unwrap());
    assert!(discriminator_alarm(0, out.accuracy).is_some());
}

#[test]
fn posterior_loss_examples() {
    let mut r = rng::stream(10, "post", &[]);
    let prior = IntentionPrior::categorical(2).unwrap();
    let mut q = IntentionPosterior::new(2, prior, &[4], Activation::Tanh, 0.1, &mut r).unwrap();
    q.net.params_mut().fill(0.0);
    let batch = vec![(vec![0.3, -0.1], Intention::Class(0)), (vec![1.0, 0.5], Intention::Class(1))];
    assert!((posterior_loss(&q, &batch).unwrap().loss - 2f64.ln()).abs() < 1e-12);

    let mut c = IntentionPosterior::new(2, IntentionPrior::Uniform, &[4], Activation::Tanh, 0.1, &mut r).unwrap();
    c.net.params_mut().fill(0.0);
    let at_mean = vec![(vec![0.3, -0.1], Intention::Value(0.0))];
    let loss = posterior_loss(&c, &at_mean).unwrap().loss;
    assert!((loss + 1.383_646_559_789_37).abs() < 1e-9, "{loss}");
}

#[test]
fn posterior_learns_separable_labels() {
    let mut r = rng::stream(11, "post-fit", &[]);
    let prior = IntentionPrior::categorical(2).unwrap();
    let mut q = IntentionPosterior::new(1, prior, &[8], Activation::Tanh, 0.1, &mut r).unwrap();
    let mut opt = mmil::diffnet::AdamState::for_net(&q.net, 1e-2);
    let batch: Vec<(Vec<f64>, Intention)> = (0..40)
        .map(|j| {
            let c = j % 2;
            (vec![if c == 0 { -1.0 } else { 1.0 }], Intention::Class(c))
        })
        .collect();
    for _ in 0..500 {
        let out = posterior_loss(&q, &batch).unwrap();
        opt.step_net(&mut q.net, &out.grads).unwrap();
    }
    assert!(posterior_loss(&q, &batch).unwrap().loss < 0.01);
}

#[test]
fn generator_reward_arithmetic() {
    let mut r = rng::stream(12, "reward", &[]);
    let prior = IntentionPrior::categorical(2).unwrap();
    let mut d = Discriminator::new(2, &[4], Activation::Tanh, &mut r).unwrap();
    let mut q = IntentionPosterior::new(2, prior, &[4], Activation::Tanh, 0.1, &mut r).unwrap();
    d.net.params_mut().fill(0.0);
    q.net.params_mut().fill(0.0);
    let t = generator_reward(&d, &q, &[0.1, 0.2], Intention::Class(1), 1.0).unwrap();
    assert!((t.total + 1.386_294_361_119_890_6).abs() < 1e-12);
    // ln 0.9 + 0.5 ln 0.9 by setting the output biases
    let last = d.net.num_layers() - 1;
    d.net.layer_mut(last).1[0] = 9f64.ln();
    let last = q.net.num_layers() - 1;
    q.net.layer_mut(last).1[1] = 9f64.ln();
    let t = generator_reward(&d, &q, &[0.1, 0.2], Intention::Class(1), 0.5).unwrap();
    assert!((t.total - 1.5 * 0.9f64.ln()).abs() < 1e-12, "{}", t.total);
    let t0 = generator_reward(&d, &q, &[0.1, 0.2], Intention::Class(1), 0.0).unwrap();
    assert_eq!(t0.total, t0.log_d);
    assert!((t0.log_d - d.prob(&[0.1, 0.2]).unwrap().ln()).abs() < 1e-12);
}

proptest! {
    #[test]
    fn returns_match_direct_sums(rewards in prop::collection::vec(-5.0f64..5.0, 0..40), gamma in 0.0f64..1.0) {
        let g = discounted_returns(&rewards, gamma);
        for t in 0..rewards.len() {
            let direct: f64 = rewards[t..].iter().enumerate().map(|(j, r)| gamma.powi(j as i32) * r).sum();
            prop_assert!((g[t] - direct).abs() < 1e-9);
        }
    }

    #[test]
    fn noise_is_non_increasing(sigma0 in 0.0f64..1.0, total in 1usize..500) {
        let s = NoiseSchedule { sigma0, total_iters: total };
        let mut prev = f64::INFINITY;
        for t in 0..total + 5 {
            let v = s.sigma(t);
            prop_assert!(v >= 0.0 && v <= prev);
            prev = v;
        }
        prop_assert_eq!(s.sigma(total - 1), 0.0);
    }
}

fn point_env() -> (EnvSpec, mmil::experts::DemoSet) {
    let env = EnvSpec::new(EnvKind::ReacherPoint, 2);
    let demos = generate_demos(&env, &ExpertSpec::defaults_for(&env), 4, 1).unwrap();
    (env, demos)
}

fn small_cfg() -> TrainConfig {
    TrainConfig {
        iterations: 6,
        episodes_per_iter: 2,
        batch_size: 32,
        hidden: vec![16],
        seed: 4,
        ..TrainConfig::default()
    }
}

fn frozen_rollouts(cfg: &TrainConfig, env: &EnvSpec, lambda_i: f64) -> (TrainState, RolloutBatch) {
    let state = TrainState::init(cfg, env).unwrap();
    let reward = RewardModel {
        disc: &state.disc,
        post: &state.post,
        lambda_i,
    };
    let batch = collect_rollouts(&state.policy, env, &reward, 4, cfg.gamma, 9).unwrap();
    (state, batch)
}

#[test]
fn rollouts_hold_intention_and_returns() {
    let (env, _) = point_env();
    let cfg = small_cfg();
    let (_, batch) = frozen_rollouts(&cfg, &env, 1.0);
    for tr in &batch.trajectories {
        assert!(tr.steps.iter().all(|s| s.intention == tr.intention));
        let rewards: Vec<f64> = tr.steps.iter().map(|s| s.reward.total).collect();
        let g = discounted_returns(&rewards, cfg.gamma);
        for (s, g) in tr.steps.iter().zip(g) {
            assert_eq!(s.ret, g);
        }
    }
    let zero = {
        let state = TrainState::init(&cfg, &env).unwrap();
        let reward = RewardModel {
            disc: &state.disc,
            post: &state.post,
            lambda_i: 1.0,
        };
        collect_rollouts(&state.policy, &env, &reward, 2, 0.0, 9).unwrap()
    };
    for s in zero.transitions() {
        assert_eq!(s.ret, s.reward.total);
    }
}

#[test]
fn zero_lambda_i_is_plain_adversarial_reward() {
    let (env, _) = point_env();
    let (_, batch) = frozen_rollouts(&small_cfg(), &env, 0.0);
    for s in batch.transitions() {
        assert_eq!(s.reward.total, s.reward.log_d);
        assert!(s.reward.log_q.is_finite());
    }
}

fn single_step_batch(policy: &Policy, action: f64, ret: f64) -> RolloutBatch {
    let i = Intention::Class(0);
    let mean = policy.mean(&[0.5], i).unwrap();
    let noise = vec![(action - mean[0]) / policy.std()[0]];
    let tr = Transition {
        t: 0,
        state: vec![0.5],
        action: vec![action],
        intention: i,
        noise,
        reward: RewardTerms {
            log_d: ret,
            log_q: 0.0,
            total: ret,
        },
        ret,
        action_baseline: 0.0,
        task_rewards: vec![],
    };
    RolloutBatch {
        trajectories: vec![Trajectory {
            intention: i,
            env_seed: 0,
            steps: vec![tr],
            final_state: mmil::envs::EnvState { values: vec![0.5], t: 1 },
        }],
    }
}

#[test]
fn positive_advantage_pulls_the_mean() {
    let prior = IntentionPrior::categorical(1).unwrap();
    let mut policy = toy_policy(1, prior, 13);
    let mut opt = PolicyOptimizer::new(&policy, 1e-2);
    let before = policy.mean(&[0.5], Intention::Class(0)).unwrap()[0];
    let target = before + 0.4;
    let mut baseline = Baseline::new(0.95);
    baseline.values = vec![Some(0.0)];
    let settings = PgSettings {
        lambda_h: 0.0,
        normalize_advantages: false,
        ..PgSettings::default()
    };
    let batch = single_step_batch(&policy, target, 1.0);
    let mut r = rng::stream(13, "pg", &[]);
    policy_gradient_step(&mut policy, &mut opt, &batch, &mut baseline, &settings, &mut r).unwrap();
    let after = policy.mean(&[0.5], Intention::Class(0)).unwrap()[0];
    assert!((after - before) * (target - before) > 0.0);
}

#[test]
fn zero_advantage_and_entropy_only() {
    let prior = IntentionPrior::categorical(1).unwrap();
    let mut policy = toy_policy(1, prior, 14);
    let start = policy.clone();
    let mut opt = PolicyOptimizer::new(&policy, 1e-2);
    let mut baseline = Baseline::new(0.95);
    baseline.values = vec![Some(1.0)];
    let batch = single_step_batch(&policy, 0.3, 1.0);
    let mut r = rng::stream(14, "pg", &[]);
    let none = PgSettings {
        lambda_h: 0.0,
        normalize_advantages: false,
        ..PgSettings::default()
    };
    policy_gradient_step(&mut policy, &mut opt, &batch, &mut baseline.clone(), &none, &mut r).unwrap();
    assert_eq!(policy, start);

    let ent = PgSettings {
        lambda_h: 1.0,
        normalize_advantages: false,
        ..PgSettings::default()
    };
    policy_gradient_step(&mut policy, &mut opt, &batch, &mut baseline, &ent, &mut r).unwrap();
    assert!(policy.log_std[0] > start.log_std[0]);
}

#[test]
fn zero_iterations_return_the_initial_policy() {
    let (env, demos) = point_env();
    let cfg = TrainConfig {
        iterations: 0,
        ..small_cfg()
    };
    let out = train(&cfg, &demos, &env).unwrap();
    assert!(out.log.rows.is_empty());
    assert_eq!(out.state, TrainState::init(&cfg, &env).unwrap());
}

#[test]
fn training_is_deterministic_and_resumable() {
    let (env, demos) = point_env();
    let cfg = small_cfg();
    let a = train(&cfg, &demos, &env).unwrap();
    let b = train(&cfg, &demos, &env).unwrap();
    assert_eq!(a.log.to_csv(None), b.log.to_csv(None));
    assert_eq!(a.state.policy.digest(), b.state.policy.digest());

    let half = train_until(TrainState::init(&cfg, &env).unwrap(), &cfg, &demos, &env, TrainLog::default(), 3).unwrap();
    let dir = tempfile::tempdir().unwrap();
    save_checkpoint(dir.path(), &half.state, &Manifest::default()).unwrap();
    let (loaded, _) = load_checkpoint(dir.path()).unwrap();
    let log = TrainLog::from_csv(&half.log.to_csv(None)).unwrap();
    let resumed = train_from(loaded, &cfg, &demos, &env, log).unwrap();
    assert_eq!(resumed.state.policy.digest(), a.state.policy.digest());
    assert_eq!(resumed.log.to_csv(None), a.log.to_csv(None));
}

#[test]
fn log_columns_and_noise_end_at_zero() {
    let (env, demos) = point_env();
    let cfg = small_cfg();
    let out = train(&cfg, &demos, &env).unwrap();
    let csv = out.log.to_csv(Some("seed=4"));
    let header = csv.lines().find(|l| !l.starts_with('#')).unwrap();
    assert_eq!(
        header,
        "iter,disc_loss,disc_acc,post_loss,gen_reward_mean,task_reward_i0,task_reward_i1,noise_sigma"
    );
    assert_eq!(out.log.rows.len(), 6);
    assert_eq!(out.log.rows.last().unwrap().noise_sigma, 0.0);
    let parsed = TrainLog::from_csv(&csv).unwrap();
    assert_eq!(parsed.rows.len(), 6);
    assert_eq!(parsed.seed, 4);
}

#[test]
fn injected_nan_reports_divergence_with_last_good_state() {
    let (env, demos) = point_env();
    let cfg = TrainConfig {
        inject_nan_at: Some(2),
        ..small_cfg()
    };
    match train(&cfg, &demos, &env) {
        Err(TrainError::Diverged { iter, last_good, log, .. }) => {
            assert_eq!(iter, 2);
            assert_eq!(last_good.iteration, 2);
            assert_eq!(log.rows.len(), 2);
            assert!(last_good.policy.net.params().iter().all(|p| p.is_finite()));
        }
        other => panic!("expected divergence, got {other:?}"),
    }
}

#[test]
fn mismatched_demos_are_rejected() {
    let (_, demos) = point_env();
    let env4 = EnvSpec::new(EnvKind::ReacherPoint, 4);
    assert!(train(&small_cfg(), &demos, &env4).is_err());
}

fn random_toy(r: &mut mmil::rng::Rng, ns: usize, ni: usize, na: usize) -> DiscreteToy {
    use rand::Rng as _;
    let mut dist = |n: usize| {
        let v: Vec<f64> = (0..n).map(|_| r.gen::<f64>() + 1e-3).collect();
        let s: f64 = v.iter().sum();
        v.into_iter().map(|x| x / s).collect::<Vec<f64>>()
    };
    let p_state = dist(ns);
    let p_intention = dist(ni);
    let policy = (0..ns).map(|_| (0..ni).map(|_| dist(na)).collect()).collect();
    DiscreteToy {
        p_state,
        p_intention,
        policy,
    }
}

#[test]
fn entropy_identity_on_random_toys() {
    let mut r = rng::stream(15, "toys", &[]);
    for j in 0..50 {
        let toy = random_toy(&mut r, 1 + j % 4, 1 + (j / 4) % 4, 2 + j % 7);
        let out = entropy_decomposition_check(&toy).unwrap();
        assert!(out.violation() < 1e-10, "{j}: {}", out.violation());
    }
}

#[test]
fn entropy_identity_special_cases() {
    let independent = DiscreteToy {
        p_state: vec![1.0],
        p_intention: vec![0.5, 0.5],
        policy: vec![vec![vec![0.2, 0.8], vec![0.2, 0.8]]],
    };
    let out = entropy_decomposition_check(&independent).unwrap();
    assert!(out.violation() < 1e-12);
    let h = -(0.2f64 * 0.2f64.ln() + 0.8 * 0.8f64.ln());
    assert!((out.lhs - h).abs() < 1e-12);

    let deterministic = DiscreteToy {
        p_state: vec![0.5, 0.5],
        p_intention: vec![0.5, 0.5],
        policy: vec![vec![vec![1.0, 0.0], vec![0.0, 1.0]]; 2],
    };
    let out = entropy_decomposition_check(&deterministic).unwrap();
    assert!(out.lhs.abs() < 1e-12);
    assert!(out.violation() < 1e-12);

    let bad = DiscreteToy {
        p_state: vec![0.7],
        p_intention: vec![1.0],
        policy: vec![vec![vec![1.0]]],
    };
    assert!(entropy_decomposition_check(&bad).is_err());
}

#[test]
fn variational_bound_on_random_pairs() {
    use rand::Rng as _;
    let mut r = rng::stream(16, "bound", &[]);
    for j in 0..100 {
        let (ns, ni, na) = (1 + j % 4, 2 + j % 3, 2 + j % 6);
        let toy = random_toy(&mut r, ns, ni, na);
        let q: Vec<Vec<Vec<f64>>> = (0..ns)
            .map(|_| {
                (0..na)
                    .map(|_| {
                        let v: Vec<f64> = (0..ni).map(|_| r.gen::<f64>() + 1e-3).collect();
                        let s: f64 = v.iter().sum();
                        v.into_iter().map(|x| x / s).collect()
                    })
                    .collect()
            })
            .collect();
        let b = mi_lower_bound_check(&toy, &q).unwrap();
        assert!(b.holds(1e-10), "{j}: gap {}", b.gap());
        let tight = mi_lower_bound_check(&toy, &toy.true_posterior_table()).unwrap();
        assert!(tight.gap().abs() < 1e-10);
    }
}

#[test]
fn uniform_q_bound_is_slack() {
    let toy = DiscreteToy {
        p_state: vec![1.0],
        p_intention: vec![0.5, 0.5],
        policy: vec![vec![vec![0.9, 0.1], vec![0.1, 0.9]]],
    };
    let q = vec![vec![vec![0.5, 0.5]; 2]];
    let b = mi_lower_bound_check(&toy, &q).unwrap();
    assert!(b.bound.abs() < 1e-12);
    assert!(b.holds(0.0) && b.gap() > 0.0);
}

#[test]
fn annealed_policy_learning_rate() {
    let (env, demos) = point_env();
    let cfg = TrainConfig {
        iterations: 4,
        policy_lr: 1e-3,
        policy_lr_anneal: true,
        ..small_cfg()
    };
    let out = train(&cfg, &demos, &env).unwrap();
    assert!((out.state.policy_opt.net.lr - 2.5e-4).abs() < 1e-15);
    assert_eq!(out.state.policy_opt.log_std.lr, out.state.policy_opt.net.lr);
    let fixed = train(&small_cfg(), &demos, &env).unwrap();
    assert_eq!(fixed.state.policy_opt.net.lr, small_cfg().policy_lr);
}

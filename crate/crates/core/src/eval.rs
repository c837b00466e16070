//! Segmentation and imitation metrics for trained policies.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::envs::{dist, EnvError, EnvKind, EnvSpec, EnvState};
use crate::experts::{expert_action, DemoError, ExpertSpec};
use crate::gan::{GanError, Intention, IntentionPrior, Policy};
use crate::rng;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("usage error: {0}")]
    Usage(String),
    #[error("empty input")]
    Empty,
    #[error("report parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Gan(#[from] GanError),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Demo(#[from] DemoError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Anything that picks an action from a state and an intention.
pub trait Controller {
    fn act(&self, env: &EnvSpec, state: &EnvState, intention: Intention, rng: Option<&mut rng::Rng>)
        -> Result<Vec<f64>, EvalError>;
}

impl Controller for Policy {
    /// Mean action, or a Gaussian sample when an rng is supplied.
    fn act(
        &self,
        _env: &EnvSpec,
        state: &EnvState,
        intention: Intention,
        rng: Option<&mut rng::Rng>,
    ) -> Result<Vec<f64>, EvalError> {
        let mut a = self.mean(&state.values, intention)?;
        if let Some(r) = rng {
            for (v, ls) in a.iter_mut().zip(&self.log_std) {
                let xi: f64 = StandardNormal.sample(r);
                *v += ls.exp() * xi;
            }
        }
        Ok(a)
    }
}

/// Scripted experts addressed by intention class.
pub struct ExpertBank(pub Vec<ExpertSpec>);

impl Controller for ExpertBank {
    fn act(
        &self,
        env: &EnvSpec,
        state: &EnvState,
        intention: Intention,
        _rng: Option<&mut rng::Rng>,
    ) -> Result<Vec<f64>, EvalError> {
        let c = intention
            .class()
            .filter(|&c| c < self.0.len())
            .ok_or_else(|| EvalError::Usage(format!("no expert for intention {intention:?}")))?;
        Ok(expert_action(&self.0[c], env, state)?)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalSettings {
    pub episodes_per_intention: usize,
    pub success_radius: f64,
    pub seed: u64,
    /// Sample actions instead of using the policy mean.
    pub stochastic: bool,
}

impl EvalSettings {
    pub fn new(env: &EnvSpec, episodes: usize, seed: u64) -> Self {
        EvalSettings {
            episodes_per_intention: episodes,
            success_radius: env.success_radius,
            seed,
            stochastic: false,
        }
    }
}

/// Result of one evaluation episode.
#[derive(Clone, Debug, PartialEq)]
pub struct Episode {
    pub final_state: EnvState,
    /// Effector positions after every step (empty without an effector).
    pub path: Vec<[f64; 2]>,
    pub mean_task_rewards: Vec<f64>,
}

/// Evaluation seed of episode `e`; shared by every intention.
pub fn eval_env_seed(seed: u64, e: usize) -> u64 {
    rng::derive_seed(seed, "eval-episode", &[e as u64])
}

/// Runs one episode from `initial` with a fixed intention.
pub fn run_episode<C: Controller + ?Sized>(
    ctrl: &C,
    env: &EnvSpec,
    initial: EnvState,
    intention: Intention,
    mut action_rng: Option<rng::Rng>,
) -> Result<Episode, EvalError> {
    let mut state = initial;
    let mut path = Vec::with_capacity(env.horizon);
    let mut sums = vec![0.0; env.n_skills()];
    let mut steps = 0usize;
    loop {
        let a = ctrl.act(env, &state, intention, action_rng.as_mut())?;
        let r = env.step(&state, &a)?;
        for (s, v) in sums.iter_mut().zip(&r.task_rewards) {
            *s += v;
        }
        steps += 1;
        state = r.next_state;
        if let Ok(e) = env.effector(&state) {
            path.push(e);
        }
        if r.done {
            break;
        }
    }
    Ok(Episode {
        final_state: state,
        path,
        mean_task_rewards: sums.into_iter().map(|s| s / steps as f64).collect(),
    })
}

/// Outcome statistics for one intention value.
#[derive(Clone, Debug, PartialEq)]
pub struct IntentionOutcome {
    pub intention: f64,
    /// Episodes whose outcome was each target/skill.
    pub counts: Vec<usize>,
    /// Most frequent outcome (ties go to the lowest index).
    pub dominant: usize,
    pub success_rate: f64,
    /// Mean per-step ground-truth reward of every skill.
    pub task_rewards: Vec<f64>,
    /// Argmax over skills of `task_rewards − expert_reference`.
    pub reward_argmax: usize,
    pub finals: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub env: String,
    pub prior: String,
    pub seed: u64,
    pub config_digest: String,
    pub intentions: Vec<IntentionOutcome>,
    pub mode_coverage: usize,
    pub mi_estimate: f64,
    /// Each skill's expert mean per-step reward on its own skill.
    pub expert_reference: Vec<f64>,
    /// Continuous sweeps: number of ε-clusters of final positions.
    pub cluster_count: Option<usize>,
    pub heatmaps: Vec<Heatmap>,
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

fn argmax_count(v: &[usize]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

/// Mean own-skill per-step reward of the default scripted experts.
pub fn expert_reference(env: &EnvSpec, episodes: usize, seed: u64) -> Result<Vec<f64>, EvalError> {
    let experts = ExpertSpec::defaults_for(env);
    let bank = ExpertBank(experts.clone());
    let mut out = vec![0.0; env.n_skills()];
    for (c, x) in experts.iter().enumerate() {
        for e in 0..episodes {
            let init = x.initial_state(env, rng::derive_seed(seed, "expert-ref", &[c as u64, e as u64]));
            let ep = run_episode(&bank, env, init, Intention::Class(c), None)?;
            out[x.skill] += ep.mean_task_rewards[x.skill] / episodes as f64;
        }
    }
    Ok(out)
}

/// Outcome index of one episode: nearest target for reachers, otherwise the
/// skill with the best reward relative to its expert.
fn episode_outcome(env: &EnvSpec, ep: &Episode, reference: &[f64]) -> Result<usize, EvalError> {
    if env.kind.is_reacher() {
        let e = env.effector(&ep.final_state)?;
        let d: Vec<f64> = (0..env.n_targets)
            .map(|j| Ok(-dist(e, env.target(&ep.final_state, j)?)))
            .collect::<Result<_, EnvError>>()?;
        Ok(argmax(&d))
    } else {
        let rel: Vec<f64> = ep.mean_task_rewards.iter().zip(reference).map(|(r, b)| r - b).collect();
        Ok(argmax(&rel))
    }
}

fn episode_success(env: &EnvSpec, ep: &Episode, target: usize, outcome: usize, eps: f64) -> Result<bool, EvalError> {
    if env.kind.is_reacher() {
        Ok(env.success(&ep.final_state, target, eps)?)
    } else {
        Ok(outcome == target)
    }
}

fn finals_of(env: &EnvSpec, ep: &Episode) -> Vec<f64> {
    match env.effector(&ep.final_state) {
        Ok(e) => e.to_vec(),
        Err(_) => ep.final_state.values.clone(),
    }
}

fn evaluate_values<C: Controller + ?Sized>(
    ctrl: &C,
    env: &EnvSpec,
    values: &[Intention],
    settings: &EvalSettings,
    reference: &[f64],
) -> Result<(Vec<IntentionOutcome>, Vec<(usize, usize)>), EvalError> {
    let n_out = env.n_skills();
    let mut outcomes = Vec::with_capacity(values.len());
    let mut pairs = Vec::new();
    for (vi, &iv) in values.iter().enumerate() {
        let mut counts = vec![0usize; n_out];
        let mut eps_list = Vec::with_capacity(settings.episodes_per_intention);
        for e in 0..settings.episodes_per_intention {
            let init = env.reset(eval_env_seed(settings.seed, e));
            let arng = settings
                .stochastic
                .then(|| rng::stream(settings.seed, "eval-action", &[vi as u64, e as u64]));
            let ep = run_episode(ctrl, env, init, iv, arng)?;
            let o = episode_outcome(env, &ep, reference)?;
            counts[o] += 1;
            pairs.push((vi, o));
            eps_list.push((ep, o));
        }
        let dominant = argmax_count(&counts);
        let n = eps_list.len().max(1) as f64;
        let mut success = 0usize;
        let mut rewards = vec![0.0; n_out];
        for (ep, o) in &eps_list {
            success += usize::from(episode_success(env, ep, dominant, *o, settings.success_radius)?);
            for (r, v) in rewards.iter_mut().zip(&ep.mean_task_rewards) {
                *r += v / n;
            }
        }
        let rel: Vec<f64> = rewards.iter().zip(reference).map(|(r, b)| r - b).collect();
        outcomes.push(IntentionOutcome {
            intention: iv.as_f64(),
            counts,
            dominant,
            success_rate: success as f64 / n,
            reward_argmax: argmax(&rel),
            task_rewards: rewards,
            finals: eps_list.iter().map(|(ep, _)| finals_of(env, ep)).collect(),
        });
    }
    Ok((outcomes, pairs))
}

/// Number of distinct dominant outcomes.
pub fn mode_coverage(outcomes: &[IntentionOutcome]) -> usize {
    let mut d: Vec<usize> = outcomes.iter().map(|o| o.dominant).collect();
    d.sort_unstable();
    d.dedup();
    d.len()
}

/// Evaluates every intention value of a categorical policy (or the
/// eleven-point sweep of a continuous one) on shared evaluation seeds.
pub fn eval_policy(policy: &Policy, env: &EnvSpec, settings: &EvalSettings) -> Result<EvalReport, EvalError> {
    let values: Vec<Intention> = match policy.prior {
        IntentionPrior::Categorical { k } => (0..k).map(Intention::Class).collect(),
        IntentionPrior::Uniform => sweep_values().into_iter().map(Intention::Value).collect(),
    };
    let reference = expert_reference(env, settings.episodes_per_intention.max(1), settings.seed)?;
    let (intentions, pairs) = evaluate_values(policy, env, &values, settings, &reference)?;
    let cluster_count = match policy.prior {
        IntentionPrior::Uniform => Some(cluster_count(
            &intentions.iter().map(|o| o.finals.clone()).collect::<Vec<_>>(),
            2.0 * settings.success_radius,
        )),
        IntentionPrior::Categorical { .. } => None,
    };
    Ok(EvalReport {
        env: env.name().to_string(),
        prior: policy.prior.to_string(),
        seed: settings.seed,
        config_digest: String::new(),
        mode_coverage: mode_coverage(&intentions),
        mi_estimate: if pairs.is_empty() { 0.0 } else { mi_estimate(&pairs)? },
        intentions,
        expert_reference: reference,
        cluster_count,
        heatmaps: Vec::new(),
    })
}

/// −1.0, −0.8, …, 1.0.
pub fn sweep_values() -> Vec<f64> {
    (0..11).map(|j| (2 * j as i32 - 10) as f64 / 10.0).collect()
}

/// Final effector positions of a continuous-intention policy for each of
/// the eleven sweep values, on shared evaluation seeds.
pub fn continuous_sweep(
    policy: &Policy,
    env: &EnvSpec,
    episodes: usize,
    seed: u64,
) -> Result<Vec<(f64, Vec<[f64; 2]>)>, EvalError> {
    if policy.prior != IntentionPrior::Uniform {
        return Err(EvalError::Usage("continuous_sweep needs a continuous-intention policy".into()));
    }
    sweep_values()
        .into_iter()
        .map(|v| {
            let finals = (0..episodes)
                .map(|e| {
                    let ep = run_episode(policy, env, env.reset(eval_env_seed(seed, e)), Intention::Value(v), None)?;
                    Ok(env.effector(&ep.final_state)?)
                })
                .collect::<Result<Vec<_>, EvalError>>()?;
            Ok((v, finals))
        })
        .collect()
}

/// Single-linkage clustering of per-value outcome vectors: two values join
/// when the mean distance between their per-episode final positions is
/// below `radius`. Returns the number of clusters.
pub fn cluster_count(finals: &[Vec<Vec<f64>>], radius: f64) -> usize {
    let n = finals.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for i in 0..n {
        for j in i + 1..n {
            let m = finals[i].len().min(finals[j].len());
            if m == 0 {
                continue;
            }
            let d: f64 = finals[i]
                .iter()
                .zip(&finals[j])
                .map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt())
                .sum::<f64>()
                / m as f64;
            if d < radius {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a] = b;
            }
        }
    }
    (0..n).filter(|&i| find(&mut parent, i) == i).count()
}

/// Plug-in mutual information (nats) of the empirical joint of
/// `(intention, outcome)` pairs, clamped at zero.
pub fn mi_estimate(pairs: &[(usize, usize)]) -> Result<f64, EvalError> {
    if pairs.is_empty() {
        return Err(EvalError::Empty);
    }
    let n = pairs.len() as f64;
    let mut joint: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    let mut pa: BTreeMap<usize, f64> = BTreeMap::new();
    let mut pb: BTreeMap<usize, f64> = BTreeMap::new();
    for &(a, b) in pairs {
        *joint.entry((a, b)).or_default() += 1.0;
        *pa.entry(a).or_default() += 1.0;
        *pb.entry(b).or_default() += 1.0;
    }
    let mi: f64 = joint
        .iter()
        .map(|(&(a, b), &c)| {
            let p = c / n;
            p * (p / ((pa[&a] / n) * (pb[&b] / n))).ln()
        })
        .sum();
    Ok(mi.max(0.0))
}

/// Visit counts of the effector over a square grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Heatmap {
    pub label: String,
    pub n: usize,
    /// Half-width of the square covered by the grid.
    pub extent: f64,
    /// Row-major counts, row index along y.
    pub counts: Vec<u64>,
}

impl Heatmap {
    pub fn new(label: impl Into<String>, n: usize, extent: f64) -> Self {
        Heatmap {
            label: label.into(),
            n,
            extent,
            counts: vec![0; n * n],
        }
    }

    /// Adds one visit; positions outside the grid land in the border cell.
    pub fn add(&mut self, p: [f64; 2]) {
        let cell = |v: f64| -> usize {
            let f = ((v + self.extent) / (2.0 * self.extent) * self.n as f64).floor();
            f.clamp(0.0, (self.n - 1) as f64) as usize
        };
        let (cx, cy) = (cell(p[0]), cell(p[1]));
        self.counts[cy * self.n + cx] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// L1 distance between visit frequencies.
    pub fn l1_distance(&self, other: &Heatmap) -> f64 {
        let (ta, tb) = (self.total().max(1) as f64, other.total().max(1) as f64);
        self.counts
            .iter()
            .zip(&other.counts)
            .map(|(&a, &b)| (a as f64 / ta - b as f64 / tb).abs())
            .sum()
    }
}

/// Half-width of the square that contains every reachable effector position.
pub fn workspace_extent(env: &EnvSpec) -> f64 {
    match env.kind {
        EnvKind::ReacherArm2 => env.link_lengths[0] + env.link_lengths[1],
        _ => env.workspace_radius,
    }
}

/// Accumulates effector visits over `episodes` evaluation episodes with a
/// fixed intention on an `n × n` grid.
#[allow(clippy::too_many_arguments)]
pub fn occupancy_heatmap<C: Controller + ?Sized>(
    ctrl: &C,
    env: &EnvSpec,
    intention: Intention,
    episodes: usize,
    seed: u64,
    action_seed: Option<u64>,
    n: usize,
) -> Result<Heatmap, EvalError> {
    env.effector(&env.reset(0))?;
    let mut h = Heatmap::new(format!("{}", intention.as_f64()), n, workspace_extent(env));
    for e in 0..episodes {
        let arng = action_seed.map(|s| rng::stream(s, "heatmap-action", &[e as u64]));
        let ep = run_episode(ctrl, env, env.reset(eval_env_seed(seed, e)), intention, arng)?;
        for p in ep.path {
            h.add(p);
        }
    }
    Ok(h)
}

/// Intention switch points `(step, intention)`.
#[derive(Clone, Debug, PartialEq)]
pub struct IntentionSchedule {
    switches: Vec<(usize, Intention)>,
}

impl IntentionSchedule {
    pub fn new(switches: Vec<(usize, Intention)>) -> Result<Self, EvalError> {
        if switches.first().map(|s| s.0) != Some(0) {
            return Err(EvalError::Usage("schedule must start at step 0".into()));
        }
        if switches.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(EvalError::Usage("schedule steps must be strictly increasing".into()));
        }
        Ok(IntentionSchedule { switches })
    }

    pub fn at(&self, t: usize) -> Intention {
        self.switches
            .iter()
            .take_while(|(s, _)| *s <= t)
            .last()
            .expect("first switch is at 0")
            .1
    }
}

/// How intentions change during a scheduled rollout.
#[derive(Clone, Debug, PartialEq)]
pub enum Switching {
    Steps(IntentionSchedule),
    /// `reach` until the object is first touched, `carry` afterwards.
    OnTouch { reach: Intention, carry: Intention },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScheduledRollout {
    pub intentions: Vec<Intention>,
    pub path: Vec<[f64; 2]>,
    pub reached_object: bool,
    pub delivered: bool,
    pub final_state: EnvState,
}

/// Executes a sequential-reacher episode while switching intentions.
pub fn rollout_with_schedule<C: Controller + ?Sized>(
    ctrl: &C,
    env: &EnvSpec,
    initial: EnvState,
    switching: &Switching,
) -> Result<ScheduledRollout, EvalError> {
    if env.kind != EnvKind::SequentialReacher {
        return Err(EvalError::Usage("scheduled rollouts need the sequential reacher".into()));
    }
    let mut state = initial;
    let mut out = ScheduledRollout {
        intentions: Vec::new(),
        path: Vec::new(),
        reached_object: state.values[6] == 1.0,
        delivered: false,
        final_state: state.clone(),
    };
    loop {
        let i = match switching {
            Switching::Steps(s) => s.at(state.t),
            Switching::OnTouch { reach, carry } => {
                if state.values[6] == 1.0 {
                    *carry
                } else {
                    *reach
                }
            }
        };
        out.intentions.push(i);
        let a = ctrl.act(env, &state, i, None)?;
        let r = env.step(&state, &a)?;
        state = r.next_state;
        out.path.push(env.effector(&state)?);
        out.reached_object |= state.values[6] == 1.0;
        if r.done {
            break;
        }
    }
    out.delivered = env.delivered(&state);
    out.final_state = state;
    Ok(out)
}

/// Fraction of phase-0 episodes completed reach-then-deliver under
/// switch-on-touch.
pub fn composite_success_rate<C: Controller + ?Sized>(
    ctrl: &C,
    env: &EnvSpec,
    reach: Intention,
    carry: Intention,
    episodes: usize,
    seed: u64,
) -> Result<f64, EvalError> {
    let sw = Switching::OnTouch { reach, carry };
    let mut ok = 0;
    for e in 0..episodes {
        let init = env.reset_in_phase(eval_env_seed(seed, e), 0);
        let r = rollout_with_schedule(ctrl, env, init, &sw)?;
        ok += usize::from(r.reached_object && r.delivered);
    }
    Ok(ok as f64 / episodes.max(1) as f64)
}

impl EvalReport {
    /// `(metric, intention, value)` rows of `report.csv`.
    pub fn metric_rows(&self) -> Vec<(String, String, String)> {
        let mut rows = vec![
            ("env".to_string(), String::new(), self.env.clone()),
            ("prior".to_string(), String::new(), self.prior.clone()),
            ("mode_coverage".to_string(), String::new(), self.mode_coverage.to_string()),
            ("mi_estimate".to_string(), String::new(), format!("{:?}", self.mi_estimate)),
        ];
        if let Some(c) = self.cluster_count {
            rows.push(("cluster_count".into(), String::new(), c.to_string()));
        }
        for (s, r) in self.expert_reference.iter().enumerate() {
            rows.push((format!("expert_reward_s{s}"), String::new(), format!("{r:?}")));
        }
        for o in &self.intentions {
            let i = format!("{:?}", o.intention);
            rows.push(("dominant".into(), i.clone(), o.dominant.to_string()));
            rows.push(("success_rate".into(), i.clone(), format!("{:?}", o.success_rate)));
            rows.push(("reward_argmax".into(), i.clone(), o.reward_argmax.to_string()));
            for (t, c) in o.counts.iter().enumerate() {
                rows.push((format!("count_t{t}"), i.clone(), c.to_string()));
            }
            for (s, r) in o.task_rewards.iter().enumerate() {
                rows.push((format!("task_reward_s{s}"), i.clone(), format!("{r:?}")));
            }
        }
        rows
    }

    pub fn comment(&self) -> String {
        format!("seed={} config={}", self.seed, self.config_digest)
    }

    pub fn report_csv(&self) -> String {
        let mut s = format!("# {}\nmetric,intention,value\n", self.comment());
        for (m, i, v) in self.metric_rows() {
            let _ = writeln!(s, "{m},{i},{v}");
        }
        s
    }
}

/// Parses the rows of a `report.csv`.
pub fn parse_report_csv(text: &str) -> Result<Vec<(String, String, String)>, EvalError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.starts_with('#'));
    match lines.next() {
        Some((_, "metric,intention,value")) => {}
        Some((n, _)) => {
            return Err(EvalError::Parse {
                line: n + 1,
                msg: "expected header `metric,intention,value`".into(),
            })
        }
        None => {
            return Err(EvalError::Parse {
                line: 1,
                msg: "missing header".into(),
            })
        }
    }
    lines
        .map(|(n, l)| {
            let f: Vec<&str> = l.split(',').collect();
            if f.len() != 3 {
                return Err(EvalError::Parse {
                    line: n + 1,
                    msg: format!("expected 3 fields, got {}", f.len()),
                });
            }
            Ok((f[0].to_string(), f[1].to_string(), f[2].to_string()))
        })
        .collect()
}

/// Writes `report.csv`, `heatmap_i{n}.csv` and `finals_i{n}.csv` into `dir`.
pub fn emit_report(report: &EvalReport, dir: impl AsRef<Path>) -> Result<(), EvalError> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let comment = report.comment();
    std::fs::write(dir.join("report.csv"), report.report_csv())?;
    for (n, h) in report.heatmaps.iter().enumerate() {
        let mut s = format!("# {comment} intention={} extent={:?}\nrow", h.label, h.extent);
        for c in 0..h.n {
            let _ = write!(s, ",c{c}");
        }
        s.push('\n');
        for r in 0..h.n {
            let _ = write!(s, "{r}");
            for c in 0..h.n {
                let _ = write!(s, ",{}", h.counts[r * h.n + c]);
            }
            s.push('\n');
        }
        std::fs::write(dir.join(format!("heatmap_i{n}.csv")), s)?;
    }
    for (n, o) in report.intentions.iter().enumerate() {
        let width = o.finals.first().map_or(2, |f| f.len());
        let mut s = format!("# {comment} intention={:?}\nepisode", o.intention);
        for d in 0..width {
            let _ = write!(s, ",f{d}");
        }
        s.push('\n');
        for (e, f) in o.finals.iter().enumerate() {
            let _ = write!(s, "{e}");
            for v in f {
                let _ = write!(s, ",{v:?}");
            }
            s.push('\n');
        }
        std::fs::write(dir.join(format!("finals_i{n}.csv")), s)?;
    }
    Ok(())
}

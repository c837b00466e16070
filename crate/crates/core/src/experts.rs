//! Scripted per-skill controllers and unlabeled demonstration datasets.

use std::f64::consts::FRAC_PI_4;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use rand::seq::{index, SliceRandom};
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::envs::{dist, wrap_angle, EnvError, EnvKind, EnvSpec, EnvState};
use crate::rng;

#[derive(Debug, Error)]
pub enum DemoError {
    #[error("no experts given")]
    NoExperts,
    #[error("episodes per skill must be >= 1")]
    NoEpisodes,
    #[error("infeasible target at distance {distance:.4} (reachable annulus {min:.4}..{max:.4})")]
    InfeasibleTarget { distance: f64, min: f64, max: f64 },
    #[error("expert `{expert}` does not apply to env `{env}`")]
    WrongEnv { expert: String, env: &'static str },
    #[error("unknown expert `{0}`")]
    UnknownExpert(String),
    #[error("expert gain must be positive, got {0}")]
    BadGain(f64),
    #[error("execution noise must be a non-negative finite std, got {0}")]
    BadNoise(f64),
    #[error("subsample fraction must lie in (0, 1], got {0}")]
    BadFraction(f64),
    #[error("demo CSV header: {0}")]
    Header(String),
    #[error("demo CSV row {row}: {msg}")]
    Row { row: usize, msg: String },
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Which branch of the two-link inverse kinematics an arm expert aims for.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Elbow {
    Up,
    Down,
}

/// Behaviour of a scripted expert.
#[derive(Clone, Debug, PartialEq)]
pub enum ExpertMode {
    /// Point reacher: proportional control toward `target`, with the
    /// command rotated by `approach_angle` (0 = straight line; ±π/4 gives
    /// counter-clockwise / clockwise spiral approaches).
    Reach { target: usize, approach_angle: f64 },
    /// Arm reacher: joint-space proportional control toward the closed-form
    /// inverse-kinematics solution on the given elbow branch.
    ArmReach { target: usize, elbow: Elbow },
    /// Locomotor: saturated high-gain control toward a reference velocity.
    Velocity { v_ref: f64 },
    /// Sequential reacher: move to the object. Complete once touched.
    SeqReach,
    /// Sequential reacher: carry the object to the goal.
    SeqCarry,
}

/// One scripted expert.
#[derive(Clone, Debug, PartialEq)]
pub struct ExpertSpec {
    /// Ground-truth skill id; only used for provenance accounting.
    pub skill: usize,
    pub kp: f64,
    pub mode: ExpertMode,
}

impl ExpertSpec {
    /// Parses an expert token for `env` with gain `kp`:
    ///
    /// * reachers: `target:<j>`, plus `:cw`/`:ccw` (point) or `:up`/`:down` (arm)
    /// * locomotor: `forward`, `backward`, `balance`
    /// * sequential reacher: `reach`, `carry`
    pub fn parse(token: &str, env: &EnvSpec, kp: f64) -> Result<Self, DemoError> {
        if !(kp > 0.0 && kp.is_finite()) {
            return Err(DemoError::BadGain(kp));
        }
        let wrong = || DemoError::WrongEnv {
            expert: token.to_string(),
            env: env.name(),
        };
        let unknown = || DemoError::UnknownExpert(token.to_string());
        let parts: Vec<&str> = token.trim().split(':').collect();
        let (skill, mode) = match (env.kind, parts.as_slice()) {
            (EnvKind::ReacherPoint | EnvKind::ReacherArm2, ["target", j, rest @ ..]) => {
                let target = usize::from_str(j).map_err(|_| unknown())?;
                if target >= env.n_targets {
                    return Err(DemoError::Env(EnvError::TargetIndex {
                        index: target,
                        n: env.n_targets,
                    }));
                }
                let mode = match (env.kind, rest) {
                    (EnvKind::ReacherPoint, []) => ExpertMode::Reach { target, approach_angle: 0.0 },
                    (EnvKind::ReacherPoint, ["ccw"]) => ExpertMode::Reach {
                        target,
                        approach_angle: FRAC_PI_4,
                    },
                    (EnvKind::ReacherPoint, ["cw"]) => ExpertMode::Reach {
                        target,
                        approach_angle: -FRAC_PI_4,
                    },
                    (EnvKind::ReacherArm2, [] | ["up"]) => ExpertMode::ArmReach { target, elbow: Elbow::Up },
                    (EnvKind::ReacherArm2, ["down"]) => ExpertMode::ArmReach {
                        target,
                        elbow: Elbow::Down,
                    },
                    _ => return Err(unknown()),
                };
                (target, mode)
            }
            (EnvKind::Locomotor1d, ["forward"]) => (0, ExpertMode::Velocity { v_ref: crate::envs::LOCOMOTOR_SPEED }),
            (EnvKind::Locomotor1d, ["backward"]) => (1, ExpertMode::Velocity { v_ref: -crate::envs::LOCOMOTOR_SPEED }),
            (EnvKind::Locomotor1d, ["balance"]) => (2, ExpertMode::Velocity { v_ref: 0.0 }),
            (EnvKind::SequentialReacher, ["reach"]) => (0, ExpertMode::SeqReach),
            (EnvKind::SequentialReacher, ["carry"]) => (1, ExpertMode::SeqCarry),
            (_, ["target", ..] | ["forward"] | ["backward"] | ["balance"] | ["reach"] | ["carry"]) => {
                return Err(wrong())
            }
            _ => return Err(unknown()),
        };
        Ok(ExpertSpec { skill, kp, mode })
    }

    /// One expert per ground-truth skill of `env`, with the default gain.
    pub fn defaults_for(env: &EnvSpec) -> Vec<ExpertSpec> {
        let kp = default_gain(env.kind);
        let tokens: Vec<String> = match env.kind {
            EnvKind::ReacherPoint | EnvKind::ReacherArm2 => {
                (0..env.n_targets).map(|j| format!("target:{j}")).collect()
            }
            EnvKind::Locomotor1d => vec!["forward".into(), "backward".into(), "balance".into()],
            EnvKind::SequentialReacher => vec!["reach".into(), "carry".into()],
        };
        tokens
            .iter()
            .map(|t| ExpertSpec::parse(t, env, kp).expect("default tokens are valid"))
            .collect()
    }

    pub fn label(&self) -> String {
        match &self.mode {
            ExpertMode::Reach { target, approach_angle } => {
                if *approach_angle > 0.0 {
                    format!("target:{target}:ccw")
                } else if *approach_angle < 0.0 {
                    format!("target:{target}:cw")
                } else {
                    format!("target:{target}")
                }
            }
            ExpertMode::ArmReach { target, elbow } => match elbow {
                Elbow::Up => format!("target:{target}:up"),
                Elbow::Down => format!("target:{target}:down"),
            },
            ExpertMode::Velocity { v_ref } if *v_ref > 0.0 => "forward".into(),
            ExpertMode::Velocity { v_ref } if *v_ref < 0.0 => "backward".into(),
            ExpertMode::Velocity { .. } => "balance".into(),
            ExpertMode::SeqReach => "reach".into(),
            ExpertMode::SeqCarry => "carry".into(),
        }
    }

    /// Whether this expert's skill has been accomplished in `state`.
    /// Only the sequential reach skill ends before the horizon.
    pub fn is_complete(&self, state: &EnvState) -> bool {
        matches!(self.mode, ExpertMode::SeqReach) && state.values[6] == 1.0
    }

    /// Whether a finished episode counts as a success for this expert.
    pub fn succeeded(&self, env: &EnvSpec, last: &EnvState) -> Result<bool, EnvError> {
        let eps = env.success_radius;
        Ok(match &self.mode {
            ExpertMode::Reach { target, .. } | ExpertMode::ArmReach { target, .. } => {
                env.success(last, *target, eps)?
            }
            ExpertMode::Velocity { v_ref } => (last.values[1] - v_ref).abs() < 0.1,
            ExpertMode::SeqReach => last.values[6] == 1.0,
            ExpertMode::SeqCarry => env.delivered(last),
        })
    }

    /// Initial state for one demonstration episode of this expert.
    pub fn initial_state(&self, env: &EnvSpec, seed: u64) -> EnvState {
        match self.mode {
            ExpertMode::SeqReach => env.reset_in_phase(seed, 0),
            ExpertMode::SeqCarry => env.reset_in_phase(seed, 1),
            _ => env.reset(seed),
        }
    }
}

/// Gain used when a config does not override it.
pub fn default_gain(kind: EnvKind) -> f64 {
    match kind {
        EnvKind::Locomotor1d => 20.0,
        _ => 5.0,
    }
}

fn clip(v: f64, b: f64) -> f64 {
    v.clamp(-b, b)
}

/// Closed-form joint angles reaching `target` on the requested branch.
pub fn inverse_kinematics(target: [f64; 2], links: [f64; 2], elbow: Elbow) -> Result<[f64; 2], DemoError> {
    let [l1, l2] = links;
    let r = dist(target, [0.0, 0.0]);
    let (min, max) = ((l1 - l2).abs(), l1 + l2);
    if r < min || r > max {
        return Err(DemoError::InfeasibleTarget { distance: r, min, max });
    }
    let c2 = ((r * r - l1 * l1 - l2 * l2) / (2.0 * l1 * l2)).clamp(-1.0, 1.0);
    let q2 = match elbow {
        Elbow::Up => c2.acos(),
        Elbow::Down => -c2.acos(),
    };
    let q1 = target[1].atan2(target[0]) - (l2 * q2.sin()).atan2(l1 + l2 * q2.cos());
    Ok([wrap_angle(q1), q2])
}

/// The expert's action in `state`.
pub fn expert_action(spec: &ExpertSpec, env: &EnvSpec, state: &EnvState) -> Result<Vec<f64>, DemoError> {
    let b = env.action_bound;
    let s = &state.values;
    let kp = spec.kp;
    let action = match &spec.mode {
        ExpertMode::Reach { target, approach_angle } => {
            let t = env.target(state, *target)?;
            let (dx, dy) = (t[0] - s[0], t[1] - s[1]);
            let (c, sn) = (approach_angle.cos(), approach_angle.sin());
            vec![clip(kp * (c * dx - sn * dy), b), clip(kp * (sn * dx + c * dy), b)]
        }
        ExpertMode::ArmReach { target, elbow } => {
            let t = env.target(state, *target)?;
            let q = inverse_kinematics(t, env.link_lengths, *elbow)?;
            vec![
                clip(kp * wrap_angle(q[0] - s[0]), b),
                clip(kp * wrap_angle(q[1] - s[1]), b),
            ]
        }
        ExpertMode::Velocity { v_ref } => vec![clip(kp * (v_ref - s[1]), b)],
        ExpertMode::SeqReach => vec![clip(kp * (s[2] - s[0]), b), clip(kp * (s[3] - s[1]), b)],
        ExpertMode::SeqCarry => vec![clip(kp * (s[4] - s[2]), b), clip(kp * (s[5] - s[3]), b)],
    };
    Ok(action)
}

/// One state-action pair. Deliberately carries no skill, time or episode
/// information.
#[derive(Clone, Debug, PartialEq)]
pub struct Record {
    pub state: Vec<f64>,
    pub action: Vec<f64>,
}

/// An unordered, unlabeled multiset of state-action pairs.
#[derive(Clone, Debug, PartialEq)]
pub struct DemoSet {
    pub env_name: String,
    pub state_dim: usize,
    pub action_dim: usize,
    pub records: Vec<Record>,
    pub provenance: String,
}

impl DemoSet {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Same records in a different order.
    pub fn reshuffled(&self, seed: u64) -> DemoSet {
        let mut out = self.clone();
        out.records.shuffle(&mut rng::stream(seed, "demo-shuffle", &[]));
        out
    }

    /// CSV text: an optional `#` provenance line, the header
    /// `s0..s{n-1},a0..a{m-1}`, then one row per record.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        if !self.provenance.is_empty() {
            let _ = writeln!(out, "# {}", self.provenance.replace('\n', " "));
        }
        let header: Vec<String> = (0..self.state_dim)
            .map(|i| format!("s{i}"))
            .chain((0..self.action_dim).map(|i| format!("a{i}")))
            .collect();
        out.push_str(&header.join(","));
        out.push('\n');
        for r in &self.records {
            let row: Vec<String> = r.state.iter().chain(&r.action).map(|v| format!("{v:?}")).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<DemoSet, DemoError> {
        let provenance = text
            .lines()
            .take_while(|l| l.starts_with('#'))
            .map(|l| l.trim_start_matches('#').trim())
            .collect::<Vec<_>>()
            .join(" ");
        let env_name = provenance
            .split_whitespace()
            .find_map(|t| t.strip_prefix("env="))
            .unwrap_or("unknown")
            .to_string();
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let header = rdr.headers()?.clone();
        if header.is_empty() || (header.len() == 1 && header[0].is_empty()) {
            return Err(DemoError::Header("missing header row".into()));
        }
        let state_dim = header.iter().take_while(|h| h.starts_with('s')).count();
        let action_dim = header.len() - state_dim;
        for (i, h) in header.iter().enumerate() {
            let want = if i < state_dim {
                format!("s{i}")
            } else {
                format!("a{}", i - state_dim)
            };
            if h != want {
                return Err(DemoError::Header(format!("column {i} is `{h}`, expected `{want}`")));
            }
        }
        let mut records = Vec::new();
        for (k, row) in rdr.records().enumerate() {
            let row_no = k + 1;
            let row = row.map_err(|e| DemoError::Row {
                row: row_no,
                msg: e.to_string(),
            })?;
            if row.len() != header.len() {
                return Err(DemoError::Row {
                    row: row_no,
                    msg: format!("{} columns, expected {}", row.len(), header.len()),
                });
            }
            let vals: Vec<f64> = row
                .iter()
                .map(|c| match c.parse::<f64>() {
                    Ok(v) if v.is_finite() => Ok(v),
                    _ => Err(DemoError::Row {
                        row: row_no,
                        msg: format!("non-numeric or non-finite cell `{c}`"),
                    }),
                })
                .collect::<Result<_, _>>()?;
            records.push(Record {
                state: vals[..state_dim].to_vec(),
                action: vals[state_dim..].to_vec(),
            });
        }
        Ok(DemoSet {
            env_name,
            state_dim,
            action_dim,
            records,
            provenance,
        })
    }
}

pub fn save_demos(demos: &DemoSet, path: impl AsRef<Path>) -> Result<(), DemoError> {
    std::fs::write(path, demos.to_csv())?;
    Ok(())
}

pub fn load_demos(path: impl AsRef<Path>) -> Result<DemoSet, DemoError> {
    DemoSet::from_csv(&std::fs::read_to_string(path)?)
}

/// Rolls out every expert for `episodes` episodes, pools all state-action
/// pairs and shuffles them with `seed`.
pub fn generate_demos(
    env: &EnvSpec,
    experts: &[ExpertSpec],
    episodes: usize,
    seed: u64,
) -> Result<DemoSet, DemoError> {
    generate_demos_noisy(env, experts, episodes, seed, 0.0)
}

/// Like [`generate_demos`], but the executed action is the expert action
/// plus Gaussian noise of std `noise` (clipped to the action bound). The
/// recorded action stays the clean expert action, so the demonstrations
/// also cover the corrections the expert makes off its nominal path.
pub fn generate_demos_noisy(
    env: &EnvSpec,
    experts: &[ExpertSpec],
    episodes: usize,
    seed: u64,
    noise: f64,
) -> Result<DemoSet, DemoError> {
    if !(noise >= 0.0 && noise.is_finite()) {
        return Err(DemoError::BadNoise(noise));
    }
    if experts.is_empty() {
        return Err(DemoError::NoExperts);
    }
    if episodes == 0 {
        return Err(DemoError::NoEpisodes);
    }
    env.validate()?;
    let mut records = Vec::new();
    let mut counts = Vec::with_capacity(experts.len());
    let mut warnings = Vec::new();
    for (e, expert) in experts.iter().enumerate() {
        let before = records.len();
        let mut failures = 0;
        for ep in 0..episodes {
            let ep_seed = rng::derive_seed(seed, "demo-episode", &[e as u64, ep as u64]);
            let mut state = expert.initial_state(env, ep_seed);
            let mut jitter = rng::stream(seed, "demo-noise", &[e as u64, ep as u64]);
            loop {
                if expert.is_complete(&state) {
                    break;
                }
                let action = expert_action(expert, env, &state)?;
                let step = if noise > 0.0 {
                    let executed: Vec<f64> = action
                        .iter()
                        .map(|a| {
                            let xi: f64 = StandardNormal.sample(&mut jitter);
                            a + noise * xi
                        })
                        .collect();
                    env.step(&state, &executed)?
                } else {
                    env.step(&state, &action)?
                };
                records.push(Record {
                    state: std::mem::take(&mut state.values),
                    action,
                });
                state = step.next_state;
                if step.done {
                    break;
                }
            }
            if !expert.succeeded(env, &state)? {
                failures += 1;
            }
        }
        counts.push(records.len() - before);
        if 2 * failures > episodes {
            warnings.push(format!(
                "WARN expert {} failed {failures}/{episodes} episodes",
                expert.label()
            ));
        }
    }
    records.shuffle(&mut rng::stream(seed, "demo-shuffle", &[]));
    let total = records.len().max(1) as f64;
    let mut prov = format!("env={} seed={seed} episodes_per_skill={episodes} mix=", env.name());
    if noise > 0.0 {
        prov = format!("env={} seed={seed} episodes_per_skill={episodes} noise={noise} mix=", env.name());
    }
    let mix: Vec<String> = experts
        .iter()
        .zip(&counts)
        .map(|(x, &c)| format!("{}:{:.4}", x.label(), c as f64 / total))
        .collect();
    prov.push_str(&mix.join(","));
    for w in warnings {
        prov.push(' ');
        prov.push_str(&w);
    }
    Ok(DemoSet {
        env_name: env.name().to_string(),
        state_dim: env.state_dim(),
        action_dim: env.action_dim(),
        records,
        provenance: prov,
    })
}

/// Uniform subset of `round(fraction · N)` records, without replacement.
pub fn subsample(demos: &DemoSet, fraction: f64, seed: u64) -> Result<DemoSet, DemoError> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(DemoError::BadFraction(fraction));
    }
    let n = demos.len();
    let m = (fraction * n as f64).round() as usize;
    let mut picked = index::sample(&mut rng::stream(seed, "demo-subsample", &[]), n, m).into_vec();
    picked.sort_unstable();
    let mut out = demos.clone();
    out.records = picked.into_iter().map(|i| demos.records[i].clone()).collect();
    if fraction < 1.0 {
        out.provenance = format!("{} subsample={fraction}", demos.provenance);
    }
    Ok(out)
}

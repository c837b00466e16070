//! Run configuration and the pipeline commands behind the `mmil` binary.
//!
//! Config files are `key = value` lines; `#` starts a comment. `env` and
//! `seed` are required, everything else has a default. The `MMIL_SEED`
//! environment variable overrides `seed`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::diffnet::Activation;
use crate::envs::{EnvKind, EnvSpec};
use crate::eval::{self, EvalError, EvalSettings};
use crate::experts::{self, DemoError, DemoSet, ExpertSpec};
use crate::gan::{self, GanError, IntentionPrior, Manifest, TrainConfig, TrainError, TrainLog};

pub const SEED_ENV_VAR: &str = "MMIL_SEED";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { key: String, line: usize },
    #[error("duplicate key `{key}` on lines {first} and {second}")]
    DuplicateKey { key: String, first: usize, second: usize },
    #[error("missing required key `{0}`")]
    MissingKey(&'static str),
    #[error("line {line}: `{key}`: {msg}")]
    BadValue { key: String, line: usize, msg: String },
    #[error("line {line}: `{key}` out of range: {msg}")]
    Range { key: String, line: usize, msg: String },
    #[error("{0}: {1}")]
    EnvVar(&'static str, String),
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

/// Every key a config file may set.
pub const KNOWN_KEYS: &[&str] = &[
    "env",
    "seed",
    "n_targets",
    "horizon",
    "dt",
    "action_bound",
    "success_radius",
    "workspace_radius",
    "link_lengths",
    "carry_start_prob",
    "target_layout",
    "experts",
    "expert_gain",
    "expert_noise",
    "episodes_per_skill",
    "subsample",
    "prior",
    "k",
    "lambda_i",
    "lambda_h",
    "gamma",
    "iterations",
    "episodes_per_iter",
    "batch_size",
    "disc_steps",
    "post_steps",
    "policy_lr",
    "policy_lr_anneal",
    "disc_lr",
    "post_lr",
    "baseline_decay",
    "noise_sigma0",
    "hidden",
    "activation",
    "init_log_std",
    "sigma_q",
    "entropy_samples",
    "baseline_action_samples",
    "normalize_advantages",
    "inject_nan_at",
    "eval_episodes",
    "heatmap_episodes",
    "out_dir",
];

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub env: EnvSpec,
    /// Expert tokens as written; `None` means the environment's defaults.
    pub experts: Option<Vec<String>>,
    pub expert_gain: Option<f64>,
    /// Std of the Gaussian noise added to executed expert actions.
    pub expert_noise: f64,
    pub episodes_per_skill: usize,
    pub subsample: f64,
    pub train: TrainConfig,
    pub eval_episodes: usize,
    pub heatmap_episodes: usize,
    pub out_dir: Option<PathBuf>,
    pub seed: u64,
    /// SHA-256 of the config text (hex), recorded in every artifact.
    pub digest: String,
}

impl RunConfig {
    pub fn expert_specs(&self) -> Result<Vec<ExpertSpec>, DemoError> {
        match &self.experts {
            None => {
                let mut v = ExpertSpec::defaults_for(&self.env);
                if let Some(kp) = self.expert_gain {
                    for x in &mut v {
                        x.kp = kp;
                    }
                }
                Ok(v)
            }
            Some(tokens) => {
                let kp = self.expert_gain.unwrap_or_else(|| experts::default_gain(self.env.kind));
                tokens.iter().map(|t| ExpertSpec::parse(t, &self.env, kp)).collect()
            }
        }
    }

    /// Short digest used in artifact headers.
    pub fn short_digest(&self) -> &str {
        &self.digest[..16]
    }

    pub fn artifact_comment(&self) -> String {
        format!("seed={} config={}", self.seed, self.short_digest())
    }
}

struct Entry {
    value: String,
    line: usize,
}

fn parse_value<T: FromStr>(key: &str, e: &Entry) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    e.value.parse::<T>().map_err(|err| ConfigError::BadValue {
        key: key.to_string(),
        line: e.line,
        msg: err.to_string(),
    })
}

fn parse_list<T: FromStr>(key: &str, e: &Entry) -> Result<Vec<T>, ConfigError>
where
    T::Err: std::fmt::Display,
{
    e.value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<T>().map_err(|err| ConfigError::BadValue {
                key: key.to_string(),
                line: e.line,
                msg: format!("`{s}`: {err}"),
            })
        })
        .collect()
}

/// Reads and parses a config file; `MMIL_SEED` overrides `seed`.
pub fn parse_config(path: impl AsRef<Path>) -> Result<RunConfig, ConfigError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let seed = match std::env::var(SEED_ENV_VAR) {
        Ok(v) => Some(
            v.trim()
                .parse::<u64>()
                .map_err(|e| ConfigError::EnvVar(SEED_ENV_VAR, format!("`{v}`: {e}")))?,
        ),
        Err(_) => None,
    };
    parse_config_str(&text, seed)
}

/// Parses config text. `seed_override` replaces the file's `seed`.
pub fn parse_config_str(text: &str, seed_override: Option<u64>) -> Result<RunConfig, ConfigError> {
    let mut entries: BTreeMap<String, Entry> = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (k, v) = content.split_once('=').ok_or(ConfigError::Syntax { line })?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() {
            return Err(ConfigError::Syntax { line });
        }
        if !KNOWN_KEYS.contains(&k) {
            return Err(ConfigError::UnknownKey { key: k.into(), line });
        }
        if let Some(prev) = entries.get(k) {
            return Err(ConfigError::DuplicateKey {
                key: k.into(),
                first: prev.line,
                second: line,
            });
        }
        entries.insert(
            k.to_string(),
            Entry {
                value: v.to_string(),
                line,
            },
        );
    }

    let env_entry = entries.get("env").ok_or(ConfigError::MissingKey("env"))?;
    let kind: EnvKind = parse_value("env", env_entry)?;
    let seed_entry = entries.get("seed").ok_or(ConfigError::MissingKey("seed"))?;
    let file_seed: u64 = parse_value("seed", seed_entry)?;
    let seed = seed_override.unwrap_or(file_seed);

    let range = |key: &str, msg: String| ConfigError::Range {
        key: key.to_string(),
        line: entries.get(key).map_or(0, |e| e.line),
        msg,
    };
    let get_f64 = |key: &str| -> Result<Option<f64>, ConfigError> {
        entries
            .get(key)
            .map(|e| {
                let v: f64 = parse_value(key, e)?;
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(range(key, "must be finite".into()))
                }
            })
            .transpose()
    };
    let get_usize = |key: &str| -> Result<Option<usize>, ConfigError> {
        entries.get(key).map(|e| parse_value::<usize>(key, e)).transpose()
    };
    let positive = |key: &str, v: f64| -> Result<f64, ConfigError> {
        if v > 0.0 {
            Ok(v)
        } else {
            Err(range(key, format!("must be > 0, got {v}")))
        }
    };
    let non_negative = |key: &str, v: f64| -> Result<f64, ConfigError> {
        if v >= 0.0 {
            Ok(v)
        } else {
            Err(range(key, format!("must be >= 0, got {v}")))
        }
    };
    let at_least_one = |key: &str, v: usize| -> Result<usize, ConfigError> {
        if v >= 1 {
            Ok(v)
        } else {
            Err(range(key, "must be >= 1".into()))
        }
    };

    let mut env = EnvSpec::new(kind, get_usize("n_targets")?.unwrap_or(2));
    if let Some(v) = get_usize("horizon")? {
        env.horizon = at_least_one("horizon", v)?;
    }
    if let Some(v) = get_f64("dt")? {
        env.dt = positive("dt", v)?;
    }
    if let Some(v) = get_f64("action_bound")? {
        env.action_bound = positive("action_bound", v)?;
    }
    if let Some(v) = get_f64("success_radius")? {
        env.success_radius = positive("success_radius", v)?;
    }
    if let Some(v) = get_f64("workspace_radius")? {
        env.workspace_radius = positive("workspace_radius", v)?;
    }
    if let Some(e) = entries.get("link_lengths") {
        let v: Vec<f64> = parse_list("link_lengths", e)?;
        if v.len() != 2 || v.iter().any(|l| !(*l > 0.0)) {
            return Err(range("link_lengths", "expected two positive lengths".into()));
        }
        env.link_lengths = [v[0], v[1]];
    }
    if let Some(v) = get_f64("carry_start_prob")? {
        if !(0.0..=1.0).contains(&v) {
            return Err(range("carry_start_prob", format!("must lie in [0, 1], got {v}")));
        }
        env.carry_start_prob = v;
    }
    if let Some(e) = entries.get("target_layout") {
        env.target_layout = parse_value("target_layout", e)?;
    }
    env.validate().map_err(|e| {
        let key = if entries.contains_key("n_targets") { "n_targets" } else { "env" };
        range(key, e.to_string())
    })?;

    let experts = entries.get("experts").map(|e| {
        e.value
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(str::to_string)
            .collect::<Vec<_>>()
    });
    let expert_gain = get_f64("expert_gain")?.map(|v| positive("expert_gain", v)).transpose()?;
    let expert_noise = get_f64("expert_noise")?.unwrap_or(0.0);
    if !(expert_noise >= 0.0 && expert_noise.is_finite()) {
        return Err(range("expert_noise", format!("must be non-negative, got {expert_noise}")));
    }
    let episodes_per_skill = at_least_one("episodes_per_skill", get_usize("episodes_per_skill")?.unwrap_or(100))?;
    let subsample = get_f64("subsample")?.unwrap_or(1.0);
    if !(subsample > 0.0 && subsample <= 1.0) {
        return Err(range("subsample", format!("must lie in (0, 1], got {subsample}")));
    }

    let mut train = TrainConfig {
        seed,
        ..TrainConfig::default()
    };
    let k = get_usize("k")?.map(|v| at_least_one("k", v)).transpose()?;
    train.prior = match entries.get("prior") {
        None => IntentionPrior::Categorical { k: k.unwrap_or(2) },
        Some(e) => match e.value.as_str() {
            "categorical" => IntentionPrior::Categorical { k: k.unwrap_or(2) },
            "continuous" => {
                if k.is_some() {
                    return Err(range("k", "only meaningful with a categorical prior".into()));
                }
                IntentionPrior::Uniform
            }
            other => {
                let p: IntentionPrior = parse_value("prior", e)?;
                if let (IntentionPrior::Categorical { k: pk }, Some(k)) = (p, k) {
                    if pk != k {
                        return Err(ConfigError::BadValue {
                            key: "prior".into(),
                            line: e.line,
                            msg: format!("`{other}` disagrees with k = {k}"),
                        });
                    }
                }
                p
            }
        },
    };
    if let Some(v) = get_f64("lambda_i")? {
        train.lambda_i = non_negative("lambda_i", v)?;
    }
    if let Some(v) = get_f64("lambda_h")? {
        train.lambda_h = non_negative("lambda_h", v)?;
    }
    if let Some(v) = get_f64("gamma")? {
        if !(0.0..1.0).contains(&v) {
            return Err(range("gamma", format!("must lie in [0, 1), got {v}")));
        }
        train.gamma = v;
    }
    if let Some(v) = get_usize("iterations")? {
        train.iterations = v;
    }
    if let Some(v) = get_usize("episodes_per_iter")? {
        train.episodes_per_iter = at_least_one("episodes_per_iter", v)?;
    }
    if let Some(v) = get_usize("batch_size")? {
        train.batch_size = at_least_one("batch_size", v)?;
    }
    if let Some(v) = get_usize("disc_steps")? {
        train.disc_steps = v;
    }
    if let Some(v) = get_usize("post_steps")? {
        train.post_steps = v;
    }
    if let Some(v) = get_f64("policy_lr")? {
        train.policy_lr = positive("policy_lr", v)?;
    }
    if let Some(v) = get_f64("disc_lr")? {
        train.disc_lr = positive("disc_lr", v)?;
    }
    if let Some(v) = get_f64("post_lr")? {
        train.post_lr = positive("post_lr", v)?;
    }
    if let Some(v) = get_f64("baseline_decay")? {
        if !(0.0..1.0).contains(&v) {
            return Err(range("baseline_decay", format!("must lie in [0, 1), got {v}")));
        }
        train.baseline_decay = v;
    }
    if let Some(v) = get_f64("noise_sigma0")? {
        train.noise_sigma0 = non_negative("noise_sigma0", v)?;
    }
    if let Some(e) = entries.get("hidden") {
        let h: Vec<usize> = parse_list("hidden", e)?;
        if h.is_empty() || h.contains(&0) {
            return Err(range("hidden", "expected positive layer sizes".into()));
        }
        train.hidden = h;
    }
    if let Some(e) = entries.get("activation") {
        train.activation = Activation::from_name(&e.value).ok_or_else(|| ConfigError::BadValue {
            key: "activation".into(),
            line: e.line,
            msg: format!("unknown activation `{}` (tanh or relu)", e.value),
        })?;
    }
    if let Some(v) = get_f64("init_log_std")? {
        train.init_log_std = v;
    }
    if let Some(v) = get_f64("sigma_q")? {
        train.sigma_q = positive("sigma_q", v)?;
    }
    if let Some(v) = get_usize("baseline_action_samples")? {
        train.baseline_action_samples = v;
    }
    if let Some(v) = get_usize("entropy_samples")? {
        train.entropy_samples = at_least_one("entropy_samples", v)?;
    }
    if let Some(e) = entries.get("policy_lr_anneal") {
        train.policy_lr_anneal = parse_value("policy_lr_anneal", e)?;
    }
    if let Some(e) = entries.get("normalize_advantages") {
        train.normalize_advantages = parse_value("normalize_advantages", e)?;
    }
    if let Some(v) = get_usize("inject_nan_at")? {
        train.inject_nan_at = Some(v);
    }
    train.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;

    let eval_episodes = at_least_one("eval_episodes", get_usize("eval_episodes")?.unwrap_or(50))?;
    let heatmap_episodes = get_usize("heatmap_episodes")?.unwrap_or(eval_episodes);
    let out_dir = entries.get("out_dir").map(|e| PathBuf::from(&e.value));

    let digest = Sha256::digest(text.as_bytes())
        .iter()
        .fold(String::new(), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        });
    Ok(RunConfig {
        env,
        experts,
        expert_gain,
        expert_noise,
        episodes_per_skill,
        subsample,
        train,
        eval_episodes,
        heatmap_episodes,
        out_dir,
        seed,
        digest,
    })
}

/// Failure of a pipeline command, carrying its process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    /// 2 for usage and configuration errors, 3 for runtime failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Usage(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

/// Generates, optionally subsamples, and writes the demonstration CSV.
pub fn cmd_gen_demos(cfg: &RunConfig, out: &Path) -> Result<DemoSet, CliError> {
    let specs = cfg.expert_specs().map_err(|e| match e {
        DemoError::UnknownExpert(_) | DemoError::BadGain(_) => CliError::Usage(e.to_string()),
        other => runtime(other),
    })?;
    if specs.is_empty() {
        return Err(CliError::Usage("expert list is empty".into()));
    }
    let mut demos = experts::generate_demos_noisy(&cfg.env, &specs, cfg.episodes_per_skill, cfg.seed, cfg.expert_noise).map_err(runtime)?;
    if cfg.subsample < 1.0 {
        let note = demos.provenance.clone();
        demos = experts::subsample(&demos, cfg.subsample, cfg.seed).map_err(runtime)?;
        demos.provenance = format!("{note}; subsample={}", cfg.subsample);
    }
    demos.provenance = format!("{} {}", cfg.artifact_comment(), demos.provenance);
    experts::save_demos(&demos, out).map_err(runtime)?;
    Ok(demos)
}

fn checkpoint_extra(cfg: &RunConfig) -> Manifest {
    let mut m = Manifest::default();
    m.insert("env", cfg.env.name());
    m.insert("seed", cfg.seed);
    m.insert("config", cfg.short_digest());
    m
}

pub const TRAIN_LOG: &str = "train_log.csv";
pub const CHECKPOINT_DIR: &str = "checkpoint";
pub const DIAGNOSTICS: &str = "diagnostics.txt";

/// Trains from scratch, or continues from `resume` (a checkpoint directory
/// whose parent holds the earlier training log). Writes `train_log.csv`,
/// `diagnostics.txt` and `checkpoint/` into `out`.
pub fn cmd_train(cfg: &RunConfig, demos: &Path, out: &Path, resume: Option<&Path>) -> Result<TrainLog, CliError> {
    let demos = experts::load_demos(demos).map_err(runtime)?;
    if demos.env_name != "unknown" && demos.env_name != cfg.env.name() {
        return Err(CliError::Usage(format!(
            "demos were generated for `{}`, config says `{}`",
            demos.env_name,
            cfg.env.name()
        )));
    }
    let (state, log) = match resume {
        None => (gan::TrainState::init(&cfg.train, &cfg.env).map_err(runtime)?, TrainLog::default()),
        Some(dir) => {
            let (state, _) = gan::load_checkpoint(dir).map_err(|e| match e {
                GanError::Io(_) => CliError::Usage(format!("cannot load checkpoint {}: {e}", dir.display())),
                other => runtime(other),
            })?;
            let log_path = dir.parent().unwrap_or(Path::new(".")).join(TRAIN_LOG);
            let log = match std::fs::read_to_string(&log_path) {
                Ok(text) => TrainLog::from_csv(&text).map_err(runtime)?,
                Err(_) => TrainLog::default(),
            };
            let mut log = log;
            log.rows.truncate(state.iteration);
            (state, log)
        }
    };
    std::fs::create_dir_all(out).map_err(runtime)?;
    let comment = cfg.artifact_comment();
    let write_outputs = |state: &gan::TrainState, log: &TrainLog| -> Result<(), CliError> {
        gan::save_checkpoint(out.join(CHECKPOINT_DIR), state, &checkpoint_extra(cfg)).map_err(runtime)?;
        std::fs::write(out.join(TRAIN_LOG), log.to_csv(Some(&comment))).map_err(runtime)?;
        let diag: String = log.diagnostics.iter().map(|d| format!("{d}\n")).collect();
        std::fs::write(out.join(DIAGNOSTICS), diag).map_err(runtime)?;
        Ok(())
    };
    match gan::train_from(state, &cfg.train, &demos, &cfg.env, log) {
        Ok(outcome) => {
            for d in &outcome.log.diagnostics {
                eprintln!("{d}");
            }
            write_outputs(&outcome.state, &outcome.log)?;
            Ok(outcome.log)
        }
        Err(TrainError::Diverged {
            iter,
            reason,
            last_good,
            log,
        }) => {
            write_outputs(&last_good, &log)?;
            Err(CliError::Runtime(format!(
                "training diverged at iteration {iter}: {reason}; last good checkpoint saved to {}",
                out.join(CHECKPOINT_DIR).display()
            )))
        }
        Err(TrainError::Other(e)) => Err(match e {
            GanError::InvalidConfig(_) | GanError::DimMismatch(_) => CliError::Usage(e.to_string()),
            other => runtime(other),
        }),
    }
}

/// Evaluates a saved policy and writes the report files into `out`.
pub fn cmd_eval(cfg: &RunConfig, policy: &Path, out: &Path) -> Result<eval::EvalReport, CliError> {
    if !policy.exists() {
        return Err(CliError::Usage(format!("policy file {} does not exist", policy.display())));
    }
    let (policy, _) = gan::load_policy(policy).map_err(|e| CliError::Usage(format!("cannot load policy: {e}")))?;
    if policy.state_dim != cfg.env.state_dim() || policy.action_dim() != cfg.env.action_dim() {
        return Err(CliError::Usage(format!(
            "policy does not fit environment `{}`",
            cfg.env.name()
        )));
    }
    let settings = EvalSettings::new(&cfg.env, cfg.eval_episodes, cfg.seed);
    let mut report = eval::eval_policy(&policy, &cfg.env, &settings).map_err(eval_err)?;
    report.config_digest = cfg.short_digest().to_string();
    if cfg.env.effector(&cfg.env.reset(0)).is_ok() && cfg.heatmap_episodes > 0 {
        for o in &report.intentions {
            let i = match policy.prior {
                IntentionPrior::Categorical { .. } => gan::Intention::Class(o.intention as usize),
                IntentionPrior::Uniform => gan::Intention::Value(o.intention),
            };
            let h = eval::occupancy_heatmap(&policy, &cfg.env, i, cfg.heatmap_episodes, cfg.seed, None, 50)
                .map_err(eval_err)?;
            report.heatmaps.push(h);
        }
    }
    eval::emit_report(&report, out).map_err(eval_err)?;
    Ok(report)
}

fn eval_err(e: EvalError) -> CliError {
    match e {
        EvalError::Usage(m) => CliError::Usage(m),
        other => runtime(other),
    }
}

/// Condensed text summary of a training log.
pub fn cmd_report(log: &Path) -> Result<String, CliError> {
    let text = std::fs::read_to_string(log).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", log.display())))?;
    let log = TrainLog::from_csv(&text).map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(summarize_log(&log))
}

pub fn summarize_log(log: &TrainLog) -> String {
    let Some(last) = log.rows.last() else {
        return "no iterations\n".to_string();
    };
    let n = log.rows.len();
    let tail = &log.rows[n.saturating_sub(50)..];
    let mean = |f: &dyn Fn(&gan::LogRow) -> f64| tail.iter().map(f).sum::<f64>() / tail.len() as f64;
    let mut s = String::new();
    let _ = writeln!(s, "iterations       {n}");
    let _ = writeln!(s, "seed             {}", log.seed);
    let _ = writeln!(s, "{:<16} {:>12} {:>12}", "metric", "final", "last-50 mean");
    let mut row = |name: &str, v: f64, f: &dyn Fn(&gan::LogRow) -> f64| {
        let _ = writeln!(s, "{name:<16} {v:>12.4} {:>12.4}", mean(f));
    };
    row("disc_loss", last.disc_loss, &|r| r.disc_loss);
    row("disc_acc", last.disc_acc, &|r| r.disc_acc);
    row("post_loss", last.post_loss, &|r| r.post_loss);
    row("gen_reward_mean", last.gen_reward_mean, &|r| r.gen_reward_mean);
    for j in 0..log.n_intention_columns {
        let name = format!("task_reward_i{j}");
        let vals: Vec<f64> = tail.iter().map(|r| r.task_rewards[j]).filter(|v| v.is_finite()).collect();
        let m = if vals.is_empty() {
            f64::NAN
        } else {
            vals.iter().sum::<f64>() / vals.len() as f64
        };
        let _ = writeln!(s, "{name:<16} {:>12.4} {m:>12.4}", last.task_rewards[j]);
    }
    let _ = writeln!(s, "{:<16} {:>12.4}", "noise_sigma", last.noise_sigma);
    let high_acc = log.rows.iter().filter(|r| r.disc_acc > gan::DISC_ACCURACY_ALARM).count();
    if high_acc > 0 {
        let _ = writeln!(s, "WARN discriminator accuracy above {} in {high_acc} iterations", gan::DISC_ACCURACY_ALARM);
    }
    s
}

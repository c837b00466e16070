//! Checkpoint directories: one `.net` file per network, one `.adam` file
//! per optimizer and a `manifest.txt` of `key = value` lines.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::pg::{Baseline, PolicyOptimizer};
use super::{Discriminator, GanError, IntentionPosterior, IntentionPrior, Policy, TrainState};
use crate::diffnet::{load_net, save_net, AdamState};

pub const CHECKPOINT_FORMAT: &str = "mmil-checkpoint-1";

fn real(v: f64) -> String {
    format!("{v:.16e}")
}

fn reals(v: &[f64]) -> String {
    v.iter().map(|&x| real(x)).collect::<Vec<_>>().join(" ")
}

fn parse_reals(s: &str) -> Result<Vec<f64>, GanError> {
    s.split_whitespace()
        .map(|t| t.parse::<f64>().map_err(|e| GanError::Checkpoint(format!("bad number `{t}`: {e}"))))
        .collect()
}

/// Ordered `key = value` pairs.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Manifest {
    pub entries: BTreeMap<String, String>,
}

impl Manifest {
    pub fn get(&self, key: &str) -> Result<&str, GanError> {
        self.entries
            .get(key)
            .map(|s| s.as_str())
            .ok_or_else(|| GanError::Checkpoint(format!("manifest lacks `{key}`")))
    }

    pub fn insert(&mut self, key: &str, value: impl ToString) {
        self.entries.insert(key.to_string(), value.to_string());
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.entries {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self, GanError> {
        let mut m = Manifest::default();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| GanError::Checkpoint(format!("manifest line {}: expected `key = value`", n + 1)))?;
            m.entries.insert(k.trim().to_string(), v.trim().to_string());
        }
        Ok(m)
    }
}

fn render_adam(st: &AdamState) -> String {
    format!(
        "ADAM 1\n{} {} {} {} {}\n{}\n{}\n",
        st.step,
        real(st.lr),
        real(st.beta1),
        real(st.beta2),
        real(st.eps),
        reals(&st.m),
        reals(&st.v)
    )
}

fn parse_adam(text: &str) -> Result<AdamState, GanError> {
    let lines: Vec<&str> = text.lines().collect();
    if lines.first().map(|l| l.trim()) != Some("ADAM 1") || lines.len() < 4 {
        return Err(GanError::Checkpoint("malformed optimizer file".into()));
    }
    let head: Vec<&str> = lines[1].split_whitespace().collect();
    if head.len() != 5 {
        return Err(GanError::Checkpoint("optimizer header needs 5 fields".into()));
    }
    let step = head[0]
        .parse::<u64>()
        .map_err(|e| GanError::Checkpoint(format!("bad step: {e}")))?;
    let hp = parse_reals(&head[1..].join(" "))?;
    let m = parse_reals(lines[2])?;
    let v = parse_reals(lines[3])?;
    if m.len() != v.len() {
        return Err(GanError::Checkpoint("moment lengths differ".into()));
    }
    Ok(AdamState {
        m,
        v,
        step,
        lr: hp[0],
        beta1: hp[1],
        beta2: hp[2],
        eps: hp[3],
    })
}

/// Writes `state` into `dir`, adding `extra` entries to the manifest.
pub fn save_checkpoint(dir: impl AsRef<Path>, state: &TrainState, extra: &Manifest) -> Result<(), GanError> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    save_net(&state.policy.net, dir.join("policy.net"))?;
    save_net(&state.disc.net, dir.join("disc.net"))?;
    save_net(&state.post.net, dir.join("post.net"))?;
    std::fs::write(dir.join("policy.adam"), render_adam(&state.policy_opt.net))?;
    std::fs::write(dir.join("policy_log_std.adam"), render_adam(&state.policy_opt.log_std))?;
    std::fs::write(dir.join("disc.adam"), render_adam(&state.disc_opt))?;
    std::fs::write(dir.join("post.adam"), render_adam(&state.post_opt))?;
    let mut m = extra.clone();
    m.insert("format", CHECKPOINT_FORMAT);
    m.insert("iteration", state.iteration);
    m.insert("prior", state.policy.prior);
    m.insert("log_std", reals(&state.policy.log_std));
    m.insert("sigma_q", real(state.post.sigma_q));
    m.insert("baseline_decay", real(state.baseline.decay));
    let b: Vec<String> = state
        .baseline
        .values
        .iter()
        .map(|v| v.map_or_else(|| "none".to_string(), real))
        .collect();
    m.insert("baseline", b.join(" "));
    std::fs::write(dir.join("manifest.txt"), m.render())?;
    Ok(())
}

fn checkpoint_dir(path: &Path) -> PathBuf {
    if path.is_dir() {
        path.to_path_buf()
    } else {
        path.parent().map(Path::to_path_buf).unwrap_or_default()
    }
}

fn read_manifest(dir: &Path) -> Result<Manifest, GanError> {
    let m = Manifest::parse(&std::fs::read_to_string(dir.join("manifest.txt"))?)?;
    if m.get("format")? != CHECKPOINT_FORMAT {
        return Err(GanError::Checkpoint(format!("unsupported format `{}`", m.get("format")?)));
    }
    Ok(m)
}

/// Loads the policy of a checkpoint, given its directory or manifest path.
pub fn load_policy(path: impl AsRef<Path>) -> Result<(Policy, Manifest), GanError> {
    let dir = checkpoint_dir(path.as_ref());
    let m = read_manifest(&dir)?;
    let prior: IntentionPrior = m.get("prior")?.parse()?;
    let log_std = parse_reals(m.get("log_std")?)?;
    let policy = Policy::from_parts(load_net(dir.join("policy.net"))?, log_std, prior)?;
    Ok((policy, m))
}

/// Loads a full training state, given its directory or manifest path.
pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<(TrainState, Manifest), GanError> {
    let dir = checkpoint_dir(path.as_ref());
    let (policy, m) = load_policy(&dir)?;
    let prior = policy.prior;
    let sigma_q = parse_reals(m.get("sigma_q")?)?
        .first()
        .copied()
        .ok_or_else(|| GanError::Checkpoint("empty sigma_q".into()))?;
    let iteration = m
        .get("iteration")?
        .parse::<usize>()
        .map_err(|e| GanError::Checkpoint(format!("bad iteration: {e}")))?;
    let decay = parse_reals(m.get("baseline_decay")?)?[0];
    let values = m
        .get("baseline")?
        .split_whitespace()
        .map(|t| {
            if t == "none" {
                Ok(None)
            } else {
                t.parse::<f64>()
                    .map(Some)
                    .map_err(|e| GanError::Checkpoint(format!("bad baseline `{t}`: {e}")))
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    let read = |name: &str| -> Result<AdamState, GanError> { parse_adam(&std::fs::read_to_string(dir.join(name))?) };
    let state = TrainState {
        disc: Discriminator {
            net: load_net(dir.join("disc.net"))?,
        },
        post: IntentionPosterior {
            net: load_net(dir.join("post.net"))?,
            prior,
            sigma_q,
        },
        policy_opt: PolicyOptimizer {
            net: read("policy.adam")?,
            log_std: read("policy_log_std.adam")?,
        },
        disc_opt: read("disc.adam")?,
        post_opt: read("post.adam")?,
        baseline: Baseline { decay, values },
        policy,
        iteration,
    };
    Ok((state, m))
}

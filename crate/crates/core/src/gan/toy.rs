//! Exact enumeration on small discrete joints p(s) p(i) π(a | s, i).
//!
//! These back two identities the training objective relies on: the
//! decomposition of the intention-conditional policy entropy, and the
//! variational lower bound on the intention/behaviour mutual information.

use super::GanError;

/// A finite joint over states, intentions and actions.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteToy {
    pub p_state: Vec<f64>,
    pub p_intention: Vec<f64>,
    /// `policy[s][i][a]` = π(a | s, i).
    pub policy: Vec<Vec<Vec<f64>>>,
}

fn xlogx(p: f64) -> f64 {
    if p > 0.0 {
        p * p.ln()
    } else {
        0.0
    }
}

fn check_dist(p: &[f64], what: &str) -> Result<(), GanError> {
    let s: f64 = p.iter().sum();
    if p.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) || (s - 1.0).abs() > 1e-9 {
        return Err(GanError::NotNormalized(format!("{what} sums to {s}")));
    }
    Ok(())
}

impl DiscreteToy {
    pub fn validate(&self) -> Result<(), GanError> {
        check_dist(&self.p_state, "p(s)")?;
        check_dist(&self.p_intention, "p(i)")?;
        if self.policy.len() != self.p_state.len() {
            return Err(GanError::NotNormalized("policy has wrong number of states".into()));
        }
        let n_a = self.n_actions();
        for (s, row) in self.policy.iter().enumerate() {
            if row.len() != self.p_intention.len() {
                return Err(GanError::NotNormalized(format!("state {s}: wrong intention count")));
            }
            for (i, pa) in row.iter().enumerate() {
                if pa.len() != n_a {
                    return Err(GanError::NotNormalized(format!("state {s}: ragged action axis")));
                }
                check_dist(pa, &format!("π(·|s={s}, i={i})"))?;
            }
        }
        Ok(())
    }

    pub fn n_actions(&self) -> usize {
        self.policy.first().and_then(|r| r.first()).map_or(0, |v| v.len())
    }

    /// π(a | s) = Σ_i p(i) π(a | s, i).
    pub fn marginal(&self, s: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.n_actions()];
        for (pi, pa) in self.p_intention.iter().zip(&self.policy[s]) {
            for (o, p) in out.iter_mut().zip(pa) {
                *o += pi * p;
            }
        }
        out
    }

    /// p(i | s, a) by Bayes' rule; `None` where π(a | s) = 0.
    pub fn posterior(&self, s: usize, a: usize) -> Option<Vec<f64>> {
        let m = self.marginal(s)[a];
        (m > 0.0).then(|| {
            self.p_intention
                .iter()
                .zip(&self.policy[s])
                .map(|(pi, pa)| pi * pa[a] / m)
                .collect()
        })
    }

    fn joint_iter(&self) -> impl Iterator<Item = (usize, usize, usize, f64)> + '_ {
        self.p_state.iter().enumerate().flat_map(move |(s, ps)| {
            self.p_intention.iter().enumerate().flat_map(move |(i, pi)| {
                self.policy[s][i]
                    .iter()
                    .enumerate()
                    .map(move |(a, pa)| (s, i, a, ps * pi * pa))
            })
        })
    }

    /// H(π(a | s, i)) = −E log π(a | s, i).
    pub fn conditional_entropy(&self) -> f64 {
        -self
            .joint_iter()
            .map(|(s, i, a, _)| self.p_state[s] * self.p_intention[i] * xlogx(self.policy[s][i][a]))
            .sum::<f64>()
    }

    /// H(π(a | s)) = −E log π(a | s).
    pub fn marginal_entropy(&self) -> f64 {
        -self
            .p_state
            .iter()
            .enumerate()
            .map(|(s, ps)| ps * self.marginal(s).into_iter().map(xlogx).sum::<f64>())
            .sum::<f64>()
    }

    pub fn intention_entropy(&self) -> f64 {
        -self.p_intention.iter().copied().map(xlogx).sum::<f64>()
    }

    /// E_{s,i,a} ln q(i | s, a) for an arbitrary `q[s][a][i]`.
    pub fn expected_log_q(&self, q: &[Vec<Vec<f64>>]) -> f64 {
        self.joint_iter()
            .filter(|&(.., p)| p > 0.0)
            .map(|(s, i, a, p)| p * q[s][a][i].ln())
            .sum()
    }

    /// The true posterior arranged as `q[s][a][i]` (uniform where undefined).
    pub fn true_posterior_table(&self) -> Vec<Vec<Vec<f64>>> {
        let k = self.p_intention.len();
        (0..self.p_state.len())
            .map(|s| {
                (0..self.n_actions())
                    .map(|a| self.posterior(s, a).unwrap_or_else(|| vec![1.0 / k as f64; k]))
                    .collect()
            })
            .collect()
    }

    /// I(i; (s, a)) = H(i) + E ln p(i | s, a).
    pub fn mutual_information(&self) -> f64 {
        self.intention_entropy() + self.expected_log_q(&self.true_posterior_table())
    }
}

/// Both sides of
/// `H(π(a|s,i)) = −E[ln p(i|s,a)] + H(π(a|s)) − H(i)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EntropyDecomposition {
    pub lhs: f64,
    pub rhs: f64,
}

impl EntropyDecomposition {
    pub fn violation(&self) -> f64 {
        (self.lhs - self.rhs).abs()
    }
}

/// Evaluates the conditional-entropy decomposition by exact enumeration.
pub fn entropy_decomposition_check(toy: &DiscreteToy) -> Result<EntropyDecomposition, GanError> {
    toy.validate()?;
    let lhs = toy.conditional_entropy();
    let post = toy.true_posterior_table();
    let rhs = -toy.expected_log_q(&post) + toy.marginal_entropy() - toy.intention_entropy();
    Ok(EntropyDecomposition { lhs, rhs })
}

/// The mutual information and its variational lower bound under `q`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MiBound {
    pub mutual_information: f64,
    /// E ln q(i | s, a) + H(i).
    pub bound: f64,
}

impl MiBound {
    pub fn gap(&self) -> f64 {
        self.mutual_information - self.bound
    }

    /// The bound does not exceed the mutual information beyond `tol`.
    pub fn holds(&self, tol: f64) -> bool {
        self.bound <= self.mutual_information + tol
    }
}

/// Checks `I(i; (s,a)) ≥ E ln q(i | s, a) + H(i)` by enumeration.
/// `q[s][a]` must be a distribution over intentions.
pub fn mi_lower_bound_check(toy: &DiscreteToy, q: &[Vec<Vec<f64>>]) -> Result<MiBound, GanError> {
    toy.validate()?;
    if q.len() != toy.p_state.len() {
        return Err(GanError::NotNormalized("q has wrong number of states".into()));
    }
    for (s, rows) in q.iter().enumerate() {
        if rows.len() != toy.n_actions() {
            return Err(GanError::NotNormalized(format!("q: state {s} has wrong action count")));
        }
        for (a, dist) in rows.iter().enumerate() {
            if dist.len() != toy.p_intention.len() {
                return Err(GanError::NotNormalized(format!("q(·|s={s},a={a}) wrong length")));
            }
            check_dist(dist, &format!("q(·|s={s},a={a})"))?;
        }
    }
    Ok(MiBound {
        mutual_information: toy.mutual_information(),
        bound: toy.expected_log_q(q) + toy.intention_entropy(),
    })
}

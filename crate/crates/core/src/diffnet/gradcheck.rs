//! Central finite-difference checks of analytic gradients.

use super::{MlpNet, NetError, Tape};

/// A differentiable scalar function of a network's outputs.
pub trait ScalarLoss {
    fn value(&self, out: &[f64]) -> f64;
    fn grad(&self, out: &[f64]) -> Vec<f64>;
}

/// Σ (out − target)².
pub struct SquaredLoss<'a> {
    pub target: &'a [f64],
}

impl ScalarLoss for SquaredLoss<'_> {
    fn value(&self, out: &[f64]) -> f64 {
        out.iter().zip(self.target).map(|(o, t)| (o - t) * (o - t)).sum()
    }

    fn grad(&self, out: &[f64]) -> Vec<f64> {
        out.iter().zip(self.target).map(|(o, t)| 2.0 * (o - t)).collect()
    }
}

/// −ln out[label], for probability outputs.
pub struct CrossEntropy {
    pub label: usize,
}

impl ScalarLoss for CrossEntropy {
    fn value(&self, out: &[f64]) -> f64 {
        -out[self.label].ln()
    }

    fn grad(&self, out: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; out.len()];
        g[self.label] = -1.0 / out[self.label];
        g
    }
}

/// A loss that ignores the network entirely.
pub struct ConstantLoss(pub f64);

impl ScalarLoss for ConstantLoss {
    fn value(&self, _out: &[f64]) -> f64 {
        self.0
    }

    fn grad(&self, out: &[f64]) -> Vec<f64> {
        vec![0.0; out.len()]
    }
}

/// |a − n| / max(1e-8, |a| + |n|).
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / (analytic.abs() + numeric.abs()).max(1e-8)
}

pub fn max_relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    analytic
        .iter()
        .zip(numeric)
        .map(|(&a, &n)| relative_error(a, n))
        .fold(0.0, f64::max)
}

/// Central differences of `f` around `params` with step `h`.
pub fn numeric_gradient<F>(params: &[f64], h: f64, mut f: F) -> Vec<f64>
where
    F: FnMut(&[f64]) -> f64,
{
    let mut p = params.to_vec();
    (0..p.len())
        .map(|j| {
            let orig = p[j];
            p[j] = orig + h;
            let up = f(&p);
            p[j] = orig - h;
            let down = f(&p);
            p[j] = orig;
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Maximum relative error between backpropagated and central-difference
/// (h = 1e-5) gradients of `loss(net(x))` over all parameters.
pub fn grad_check(net: &MlpNet, loss: &dyn ScalarLoss, x: &[f64]) -> Result<f64, NetError> {
    let mut tape = Tape::new();
    let out = net.forward_tape(x, &mut tape)?.to_vec();
    let analytic = net.backward(&tape, &loss.grad(&out))?;
    let mut probe = net.clone();
    let numeric = numeric_gradient(net.params(), 1e-5, |p| {
        probe.params_mut().copy_from_slice(p);
        loss.value(&probe.forward(x).expect("shape checked above"))
    });
    Ok(max_relative_error(&analytic.data, &numeric))
}

use rand::Rng as _;

use super::NetError;
use crate::rng::Rng;

/// Hidden-layer nonlinearity.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Tanh,
    Relu,
}

impl Activation {
    pub fn name(self) -> &'static str {
        match self {
            Activation::Tanh => "tanh",
            Activation::Relu => "relu",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "tanh" => Some(Activation::Tanh),
            "relu" => Some(Activation::Relu),
            _ => None,
        }
    }

    #[inline]
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Tanh => z.tanh(),
            Activation::Relu => z.max(0.0),
        }
    }

    /// Derivative expressed through the activation output `y`.
    #[inline]
    fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - y * y,
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// Transformation applied to the last layer's affine output.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputHead {
    /// Identity.
    Linear,
    /// Normalized exponentials; outputs are strictly positive and sum to one.
    Softmax,
    /// Identity, used as the mean of a Gaussian.
    GaussianMean,
}

impl OutputHead {
    pub fn name(self) -> &'static str {
        match self {
            OutputHead::Linear => "linear",
            OutputHead::Softmax => "softmax",
            OutputHead::GaussianMean => "gaussian-mean",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "linear" => Some(OutputHead::Linear),
            "softmax" => Some(OutputHead::Softmax),
            "gaussian-mean" => Some(OutputHead::GaussianMean),
            _ => None,
        }
    }
}

/// Feed-forward network with parameters stored as one flat vector.
///
/// Layer `l` maps `layer_sizes[l]` inputs to `layer_sizes[l + 1]` outputs. Its
/// weights are stored row-major (one row per output unit) and are followed
/// by its biases.
#[derive(Clone, Debug, PartialEq)]
pub struct MlpNet {
    sizes: Vec<usize>,
    hidden: Activation,
    head: OutputHead,
    params: Vec<f64>,
}

/// Gradient accumulator with the same layout as [`MlpNet`] parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct GradBuffer {
    pub data: Vec<f64>,
}

impl GradBuffer {
    pub fn zeros(len: usize) -> Self {
        GradBuffer { data: vec![0.0; len] }
    }

    pub fn zero(&mut self) {
        self.data.iter_mut().for_each(|g| *g = 0.0);
    }

    pub fn scale(&mut self, s: f64) {
        self.data.iter_mut().for_each(|g| *g *= s);
    }

    pub fn add_scaled(&mut self, other: &GradBuffer, s: f64) {
        for (g, o) in self.data.iter_mut().zip(&other.data) {
            *g += s * o;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|g| g.is_finite())
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
}

/// Cached activations of one forward pass, consumed by the backward pass.
///
/// A tape is reusable: each forward pass overwrites the previous contents.
#[derive(Clone, Debug, Default)]
pub struct Tape {
    // acts[0] is the input, acts[l + 1] the output of layer l (after the head
    // for the last layer).
    acts: Vec<Vec<f64>>,
    sizes: Vec<usize>,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    /// Output of the most recent forward pass.
    pub fn output(&self) -> &[f64] {
        self.acts.last().map(|v| v.as_slice()).unwrap_or(&[])
    }

    pub fn is_empty(&self) -> bool {
        self.acts.is_empty()
    }

    pub fn clear(&mut self) {
        self.acts.clear();
        self.sizes.clear();
    }
}

impl MlpNet {
    /// Builds a network with Glorot-uniform weights and zero biases.
    pub fn new(
        sizes: &[usize],
        hidden: Activation,
        head: OutputHead,
        rng: &mut Rng,
    ) -> Result<Self, NetError> {
        let mut net = Self::zeros(sizes, hidden, head)?;
        for l in 0..net.num_layers() {
            let (n_in, n_out) = (sizes[l], sizes[l + 1]);
            let bound = (6.0 / (n_in + n_out) as f64).sqrt();
            let (w, _) = net.layer_mut(l);
            for v in w.iter_mut() {
                *v = rng.gen_range(-bound..bound);
            }
        }
        Ok(net)
    }

    /// Builds a network with every parameter equal to zero.
    pub fn zeros(sizes: &[usize], hidden: Activation, head: OutputHead) -> Result<Self, NetError> {
        if sizes.len() < 2 {
            return Err(NetError::Invalid("need at least input and output sizes".into()));
        }
        if sizes.iter().any(|&n| n == 0) {
            return Err(NetError::Invalid("layer sizes must be positive".into()));
        }
        let n = Self::param_count_for(sizes);
        Ok(MlpNet {
            sizes: sizes.to_vec(),
            hidden,
            head,
            params: vec![0.0; n],
        })
    }

    /// Σ (n_in·n_out + n_out) over layers.
    pub fn param_count_for(sizes: &[usize]) -> usize {
        sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().expect("validated at construction")
    }

    pub fn num_layers(&self) -> usize {
        self.sizes.len() - 1
    }

    pub fn hidden_activation(&self) -> Activation {
        self.hidden
    }

    pub fn output_head(&self) -> OutputHead {
        self.head
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn grad_buffer(&self) -> GradBuffer {
        GradBuffer::zeros(self.params.len())
    }

    fn layer_offset(&self, l: usize) -> usize {
        Self::param_count_for(&self.sizes[..=l])
    }

    /// Weights (row-major, `n_out × n_in`) and biases of layer `l`.
    pub fn layer(&self, l: usize) -> (&[f64], &[f64]) {
        let off = self.layer_offset(l);
        let nw = self.sizes[l] * self.sizes[l + 1];
        let nb = self.sizes[l + 1];
        let (w, rest) = self.params[off..off + nw + nb].split_at(nw);
        (w, rest)
    }

    pub fn layer_mut(&mut self, l: usize) -> (&mut [f64], &mut [f64]) {
        let off = self.layer_offset(l);
        let nw = self.sizes[l] * self.sizes[l + 1];
        let nb = self.sizes[l + 1];
        self.params[off..off + nw + nb].split_at_mut(nw)
    }

    /// Multiplies the last layer's weights and biases by `factor`.
    pub fn scale_output_layer(&mut self, factor: f64) {
        let l = self.num_layers() - 1;
        let (w, b) = self.layer_mut(l);
        w.iter_mut().chain(b.iter_mut()).for_each(|v| *v *= factor);
    }

    /// Runs the network on `x` without recording a tape.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>, NetError> {
        let mut tape = Tape::new();
        self.forward_tape(x, &mut tape)?;
        Ok(tape.acts.pop().unwrap_or_default())
    }

    /// Runs the network on `x`, recording activations into `tape`.
    pub fn forward_tape<'t>(&self, x: &[f64], tape: &'t mut Tape) -> Result<&'t [f64], NetError> {
        if x.len() != self.input_dim() {
            return Err(NetError::InputShape {
                expected: self.input_dim(),
                got: x.len(),
            });
        }
        let n_layers = self.num_layers();
        if tape.sizes != self.sizes {
            tape.sizes = self.sizes.clone();
            tape.acts = self.sizes.iter().map(|&n| vec![0.0; n]).collect();
        }
        tape.acts[0].copy_from_slice(x);
        let mut off = 0;
        for l in 0..n_layers {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let w = &self.params[off..off + n_in * n_out];
            let b = &self.params[off + n_in * n_out..off + n_in * n_out + n_out];
            off += n_in * n_out + n_out;
            let (before, after) = tape.acts.split_at_mut(l + 1);
            let input = &before[l];
            let out = &mut after[0];
            for o in 0..n_out {
                let row = &w[o * n_in..(o + 1) * n_in];
                let mut z = b[o];
                for (wi, xi) in row.iter().zip(input.iter()) {
                    z += wi * xi;
                }
                out[o] = z;
            }
            if l + 1 < n_layers {
                for v in out.iter_mut() {
                    *v = self.hidden.apply(*v);
                }
            } else if self.head == OutputHead::Softmax {
                softmax_in_place(out);
            }
        }
        Ok(tape.output())
    }

    /// Gradient of `upstream · output` with respect to the parameters, using
    /// the activations cached in `tape`.
    pub fn backward(&self, tape: &Tape, upstream: &[f64]) -> Result<GradBuffer, NetError> {
        let mut g = self.grad_buffer();
        self.accumulate_backward(tape, upstream, &mut g)?;
        Ok(g)
    }

    /// Like [`MlpNet::backward`] but adds into an existing buffer.
    pub fn accumulate_backward(
        &self,
        tape: &Tape,
        upstream: &[f64],
        grads: &mut GradBuffer,
    ) -> Result<(), NetError> {
        self.check_tape(tape)?;
        if upstream.len() != self.output_dim() {
            return Err(NetError::ShapeMismatch {
                expected: self.output_dim(),
                got: upstream.len(),
            });
        }
        let pre: Vec<f64> = match self.head {
            OutputHead::Softmax => {
                let p = tape.output();
                let dot: f64 = p.iter().zip(upstream).map(|(p, u)| p * u).sum();
                p.iter().zip(upstream).map(|(p, u)| p * (u - dot)).collect()
            }
            OutputHead::Linear | OutputHead::GaussianMean => upstream.to_vec(),
        };
        self.backprop_preactivation(tape, pre, grads)
    }

    /// Adds the gradient of `upstream · z` where `z` is the last layer's
    /// affine output (the logits, before any softmax head).
    pub fn accumulate_backward_logits(
        &self,
        tape: &Tape,
        upstream_logits: &[f64],
        grads: &mut GradBuffer,
    ) -> Result<(), NetError> {
        self.check_tape(tape)?;
        if upstream_logits.len() != self.output_dim() {
            return Err(NetError::ShapeMismatch {
                expected: self.output_dim(),
                got: upstream_logits.len(),
            });
        }
        self.backprop_preactivation(tape, upstream_logits.to_vec(), grads)
    }

    fn check_tape(&self, tape: &Tape) -> Result<(), NetError> {
        if tape.is_empty() || tape.sizes != self.sizes {
            return Err(NetError::NoForward);
        }
        Ok(())
    }

    fn backprop_preactivation(
        &self,
        tape: &Tape,
        mut delta: Vec<f64>,
        grads: &mut GradBuffer,
    ) -> Result<(), NetError> {
        if grads.len() != self.params.len() {
            return Err(NetError::ShapeMismatch {
                expected: self.params.len(),
                got: grads.len(),
            });
        }
        let mut prev = Vec::new();
        for l in (0..self.num_layers()).rev() {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let off = self.layer_offset(l);
            let input = &tape.acts[l];
            {
                let (gw, gb) = grads.data[off..off + n_in * n_out + n_out].split_at_mut(n_in * n_out);
                for o in 0..n_out {
                    let d = delta[o];
                    if d == 0.0 {
                        continue;
                    }
                    gb[o] += d;
                    let row = &mut gw[o * n_in..(o + 1) * n_in];
                    for (g, xi) in row.iter_mut().zip(input.iter()) {
                        *g += d * xi;
                    }
                }
            }
            if l == 0 {
                break;
            }
            let w = &self.params[off..off + n_in * n_out];
            prev.clear();
            prev.resize(n_in, 0.0);
            for o in 0..n_out {
                let d = delta[o];
                if d == 0.0 {
                    continue;
                }
                let row = &w[o * n_in..(o + 1) * n_in];
                for (p, wi) in prev.iter_mut().zip(row.iter()) {
                    *p += wi * d;
                }
            }
            for (p, y) in prev.iter_mut().zip(input.iter()) {
                *p *= self.hidden.derivative_from_output(*y);
            }
            std::mem::swap(&mut delta, &mut prev);
        }
        Ok(())
    }
}

/// Numerically stable softmax.
pub(crate) fn softmax_in_place(v: &mut [f64]) {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for x in v.iter_mut() {
        *x = (*x - max).exp();
        sum += *x;
    }
    for x in v.iter_mut() {
        *x /= sum;
    }
}

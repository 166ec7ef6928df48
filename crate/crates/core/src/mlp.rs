//! Fully connected regression network.
//!
//! Parameter layout (`β`): layers in order from input to output; for each
//! layer the weight matrix `a` (fan_out × fan_in) in row-major order,
//! followed by its bias vector `b` (fan_out). Hidden layers apply the
//! architecture's activation; the output layer is affine.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Tanh,
    Sigmoid,
    Linear,
}

impl Activation {
    pub fn name(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Tanh => "tanh",
            Activation::Sigmoid => "sigmoid",
            Activation::Linear => "linear",
        }
    }

    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Tanh => z.tanh(),
            Activation::Sigmoid => 1.0 / (1.0 + (-z).exp()),
            Activation::Linear => z,
        }
    }

    /// Derivative expressed through the pre-activation `z` and output `a`.
    #[inline]
    fn derivative(self, z: f64, a: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - a * a,
            Activation::Sigmoid => a * (1.0 - a),
            Activation::Linear => 1.0,
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "relu" => Ok(Activation::Relu),
            "tanh" => Ok(Activation::Tanh),
            "sigmoid" => Ok(Activation::Sigmoid),
            "linear" => Ok(Activation::Linear),
            other => Err(Error::InvalidArgument(format!("unknown activation '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpArchitecture {
    pub input_dim: usize,
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub output_dim: usize,
}

impl MlpArchitecture {
    pub fn new(input_dim: usize, hidden: Vec<usize>, activation: Activation, output_dim: usize) -> Result<Self> {
        let arch = Self { input_dim, hidden, activation, output_dim };
        arch.validate()?;
        Ok(arch)
    }

    pub fn validate(&self) -> Result<()> {
        if self.hidden.is_empty() {
            return Err(Error::InvalidArgument("an MLP needs at least one hidden layer".into()));
        }
        if self.input_dim == 0 || self.output_dim == 0 || self.hidden.contains(&0) {
            return Err(Error::InvalidArgument(format!("all layer widths must be >= 1: {self}")));
        }
        Ok(())
    }

    /// `[input, n_1, ..., n_m, output]`.
    pub fn layer_dims(&self) -> Vec<usize> {
        let mut d = Vec::with_capacity(self.hidden.len() + 2);
        d.push(self.input_dim);
        d.extend_from_slice(&self.hidden);
        d.push(self.output_dim);
        d
    }

    pub fn n_params(&self) -> usize {
        count_params(self)
    }
}

impl fmt::Display for MlpArchitecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let hidden: Vec<String> = self.hidden.iter().map(|h| h.to_string()).collect();
        write!(f, "{}-[{}]-{} {}", self.input_dim, hidden.join(","), self.output_dim, self.activation)
    }
}

pub fn count_params(arch: &MlpArchitecture) -> usize {
    arch.layer_dims().windows(2).map(|w| w[0] * w[1] + w[1]).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MlpParams(Vec<f64>);

impl MlpParams {
    pub fn from_vec(arch: &MlpArchitecture, beta: Vec<f64>) -> Result<Self> {
        let expected = count_params(arch);
        if beta.len() != expected {
            return Err(Error::Dimension { what: "parameter vector", expected, got: beta.len() });
        }
        Ok(Self(beta))
    }

    pub fn zeros(arch: &MlpArchitecture) -> Self {
        Self(vec![0.0; count_params(arch)])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Offsets of each layer's weight block (biases follow at `offset + out·in`).
fn layer_offsets(dims: &[usize]) -> Vec<usize> {
    let mut off = Vec::with_capacity(dims.len() - 1);
    let mut o = 0;
    for w in dims.windows(2) {
        off.push(o);
        o += w[0] * w[1] + w[1];
    }
    off
}

/// Glorot-uniform weights, zero biases.
pub fn init_params(arch: &MlpArchitecture, seed: u64) -> MlpParams {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dims = arch.layer_dims();
    let mut beta = Vec::with_capacity(count_params(arch));
    for w in dims.windows(2) {
        let (fan_in, fan_out) = (w[0], w[1]);
        let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
        for _ in 0..fan_in * fan_out {
            beta.push(rng.random_range(-bound..=bound));
        }
        beta.extend(std::iter::repeat_n(0.0, fan_out));
    }
    MlpParams(beta)
}

fn check_params(arch: &MlpArchitecture, params: &MlpParams) -> Result<()> {
    arch.validate()?;
    let expected = count_params(arch);
    if params.len() != expected {
        return Err(Error::Dimension { what: "parameter vector", expected, got: params.len() });
    }
    Ok(())
}

fn check_batch(arch: &MlpArchitecture, x: &[f64]) -> Result<usize> {
    if !x.len().is_multiple_of(arch.input_dim) {
        return Err(Error::Dimension {
            what: "batch width (input_dim)",
            expected: arch.input_dim,
            got: x.len() % arch.input_dim,
        });
    }
    Ok(x.len() / arch.input_dim)
}

/// Per-sample activations: `a[0]` is the input, `a[l]` the output of layer `l`.
struct Trace {
    dims: Vec<usize>,
    offsets: Vec<usize>,
    z: Vec<Vec<f64>>,
    a: Vec<Vec<f64>>,
}

impl Trace {
    fn new(arch: &MlpArchitecture) -> Self {
        let dims = arch.layer_dims();
        let offsets = layer_offsets(&dims);
        let z = dims.iter().map(|&d| vec![0.0; d]).collect();
        let a = dims.iter().map(|&d| vec![0.0; d]).collect();
        Self { dims, offsets, z, a }
    }

    fn run(&mut self, act: Activation, beta: &[f64], x: &[f64]) {
        let n_layers = self.dims.len() - 1;
        self.a[0].copy_from_slice(x);
        for l in 0..n_layers {
            let (fan_in, fan_out) = (self.dims[l], self.dims[l + 1]);
            let w = &beta[self.offsets[l]..self.offsets[l] + fan_in * fan_out];
            let b = &beta[self.offsets[l] + fan_in * fan_out..self.offsets[l] + fan_in * fan_out + fan_out];
            let (prev, next) = self.a.split_at_mut(l + 1);
            let input = &prev[l];
            let out = &mut next[0];
            let z = &mut self.z[l + 1];
            let last = l + 1 == n_layers;
            for o in 0..fan_out {
                let row = &w[o * fan_in..(o + 1) * fan_in];
                let s = b[o] + row.iter().zip(input.iter()).map(|(p, q)| p * q).sum::<f64>();
                z[o] = s;
                out[o] = if last { s } else { act.apply(s) };
            }
        }
    }

    fn output(&self) -> &[f64] {
        self.a.last().expect("at least two layers")
    }
}

pub fn forward(arch: &MlpArchitecture, params: &MlpParams, x: &[f64]) -> Result<Vec<f64>> {
    check_params(arch, params)?;
    if x.len() != arch.input_dim {
        return Err(Error::Dimension { what: "input vector", expected: arch.input_dim, got: x.len() });
    }
    let mut t = Trace::new(arch);
    t.run(arch.activation, params.as_slice(), x);
    Ok(t.output().to_vec())
}

/// Forward pass over a row-major batch (`n × input_dim`), returning
/// `n × output_dim` row-major outputs.
pub fn forward_batch(arch: &MlpArchitecture, params: &MlpParams, x: &[f64]) -> Result<Vec<f64>> {
    check_params(arch, params)?;
    let n = check_batch(arch, x)?;
    let mut t = Trace::new(arch);
    let mut out = Vec::with_capacity(n * arch.output_dim);
    for row in x.chunks_exact(arch.input_dim) {
        t.run(arch.activation, params.as_slice(), row);
        out.extend_from_slice(t.output());
    }
    Ok(out)
}

/// Reverse pass for output `k` of the last traced sample, writing
/// `∂ŷ_k/∂β` through `emit(column, value)`.
fn backprop(
    t: &Trace,
    act: Activation,
    beta: &[f64],
    k: usize,
    delta: &mut Vec<f64>,
    next: &mut Vec<f64>,
    mut emit: impl FnMut(usize, f64),
) {
    let n_layers = t.dims.len() - 1;
    delta.clear();
    delta.resize(t.dims[n_layers], 0.0);
    delta[k] = 1.0;
    for l in (0..n_layers).rev() {
        let (fan_in, fan_out) = (t.dims[l], t.dims[l + 1]);
        let off = t.offsets[l];
        let input = &t.a[l];
        for (o, &d) in delta.iter().enumerate().take(fan_out) {
            let base = off + o * fan_in;
            for (i, &x) in input.iter().enumerate() {
                emit(base + i, d * x);
            }
            emit(off + fan_in * fan_out + o, d);
        }
        if l > 0 {
            next.clear();
            next.resize(fan_in, 0.0);
            let w = &beta[off..off + fan_in * fan_out];
            for o in 0..fan_out {
                let d = delta[o];
                if d == 0.0 {
                    continue;
                }
                for (n, &wi) in next.iter_mut().zip(&w[o * fan_in..(o + 1) * fan_in]) {
                    *n += wi * d;
                }
            }
            for (i, n) in next.iter_mut().enumerate() {
                *n *= act.derivative(t.z[l][i], t.a[l][i]);
            }
            std::mem::swap(delta, next);
        }
    }
}

/// Writes the Jacobian rows of samples `x` (row-major) into `j`, which must
/// have `n·output_dim` rows and `|β|` columns. Row `s·output_dim + k` holds
/// `∂ŷ_{s,k}/∂β`.
pub(crate) fn jacobian_into(arch: &MlpArchitecture, beta: &[f64], x: &[f64], j: &mut DMatrix<f64>) {
    let out = arch.output_dim;
    let nrows = j.nrows();
    let mut t = Trace::new(arch);
    let data = j.as_mut_slice();
    let (mut delta, mut next) = (Vec::new(), Vec::new());
    for (s, row) in x.chunks_exact(arch.input_dim).enumerate() {
        t.run(arch.activation, beta, row);
        for k in 0..out {
            let r = s * out + k;
            backprop(&t, arch.activation, beta, k, &mut delta, &mut next, |c, v| {
                data[r + c * nrows] = v;
            });
        }
    }
}

/// Jacobian of the signed residuals `r = ŷ - y` with respect to `β`. Rows
/// are ordered sample-major, output-minor.
pub fn jacobian(arch: &MlpArchitecture, params: &MlpParams, x: &[f64]) -> Result<DMatrix<f64>> {
    check_params(arch, params)?;
    let n = check_batch(arch, x)?;
    let mut j = DMatrix::zeros(n * arch.output_dim, params.len());
    jacobian_into(arch, params.as_slice(), x, &mut j);
    Ok(j)
}

/// Sum of squared residuals and its half-gradient `Jᵀr`, without forming `J`.
pub fn sse_and_gradient(arch: &MlpArchitecture, params: &MlpParams, x: &[f64], y: &[f64]) -> Result<(f64, Vec<f64>)> {
    check_params(arch, params)?;
    let n = check_batch(arch, x)?;
    if y.len() != n * arch.output_dim {
        return Err(Error::Dimension { what: "target batch", expected: n * arch.output_dim, got: y.len() });
    }
    let beta = params.as_slice();
    let mut grad = vec![0.0; beta.len()];
    let mut t = Trace::new(arch);
    let (mut delta, mut next) = (Vec::new(), Vec::new());
    let mut sse = 0.0;
    for (s, row) in x.chunks_exact(arch.input_dim).enumerate() {
        t.run(arch.activation, beta, row);
        for k in 0..arch.output_dim {
            let r = t.output()[k] - y[s * arch.output_dim + k];
            sse += r * r;
            backprop(&t, arch.activation, beta, k, &mut delta, &mut next, |c, v| grad[c] += r * v);
        }
    }
    Ok((sse, grad))
}

/// Builds parameters for `large` that reproduce `small` exactly.
///
/// Widths are padded with zero weights and biases. Extra depth (only for
/// linear activation) is filled with identity layers placed before the
/// output layer.
pub fn embed(small: &MlpArchitecture, params: &MlpParams, large: &MlpArchitecture) -> Result<MlpParams> {
    check_params(small, params)?;
    large.validate()?;
    if small.input_dim != large.input_dim || small.output_dim != large.output_dim {
        return Err(Error::Embed(format!("input/output dimensions differ: {small} vs {large}")));
    }
    if small.activation != large.activation {
        return Err(Error::Embed(format!("activation differs: {} vs {}", small.activation, large.activation)));
    }
    let (m, big_m) = (small.hidden.len(), large.hidden.len());
    if big_m < m {
        return Err(Error::Embed(format!("target is shallower than source: {small} vs {large}")));
    }
    if big_m > m && small.activation != Activation::Linear {
        return Err(Error::Embed(format!(
            "depth-increasing embedding is only exact for linear activation, got {}",
            small.activation
        )));
    }
    for (i, (&n, &big_n)) in small.hidden.iter().zip(&large.hidden).enumerate() {
        if big_n < n {
            return Err(Error::Embed(format!("hidden layer {i} shrinks from {n} to {big_n}")));
        }
    }
    // identity layers must carry the last source hidden layer through
    let last = small.hidden[m - 1];
    if let Some((i, _)) = large.hidden[m..].iter().enumerate().find(|(_, &w)| w < last) {
        return Err(Error::Embed(format!(
            "inserted layer {} is narrower ({}) than the last source hidden layer ({last})",
            m + i,
            large.hidden[m + i]
        )));
    }

    let sd = small.layer_dims();
    let so = layer_offsets(&sd);
    let ld = large.layer_dims();
    let lo = layer_offsets(&ld);
    let src = params.as_slice();
    let mut beta = vec![0.0; count_params(large)];

    let copy_layer = |s_layer: usize, l_layer: usize, beta: &mut [f64]| {
        let (si, so_) = (sd[s_layer], sd[s_layer + 1]);
        let li = ld[l_layer];
        let lout = ld[l_layer + 1];
        for o in 0..so_ {
            for i in 0..si {
                beta[lo[l_layer] + o * li + i] = src[so[s_layer] + o * si + i];
            }
            beta[lo[l_layer] + li * lout + o] = src[so[s_layer] + si * so_ + o];
        }
    };

    // hidden layers 0..m map one to one
    for l in 0..m {
        copy_layer(l, l, &mut beta);
    }
    // identity layers m..big_m, each passing the first `last` units through
    for l in m..big_m {
        let li = ld[l];
        for o in 0..last {
            beta[lo[l] + o * li + o] = 1.0;
        }
    }
    // output layer
    copy_layer(m, big_m, &mut beta);
    Ok(MlpParams(beta))
}

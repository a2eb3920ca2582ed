//! From-scratch multi-layer perceptron: deterministic initialization,
//! forward pass with a backprop cache, exact gradients of the per-sample
//! squared error, Adam updates, and full-batch training.
//!
//! Shapes follow the usual dense-layer convention: layer `k` maps
//! `layer_sizes[k]` inputs to `layer_sizes[k+1]` outputs through a
//! row-major weight matrix indexed `[input j][output n]` plus a bias per
//! output neuron. Hidden layers apply the configured activation; the
//! single output neuron is always linear.

use std::io::{Read, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::preprocess::{Dataset, Sample};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Sigmoid,
}

impl Activation {
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Sigmoid => 1.0 / (1.0 + (-x).exp()),
        }
    }

    /// Derivative in terms of the pre-activation. ReLU subgradient at 0 is 0.
    fn derivative(self, pre: f64) -> f64 {
        match self {
            Activation::Relu => {
                if pre > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => {
                let s = 1.0 / (1.0 + (-pre).exp());
                s * (1.0 - s)
            }
        }
    }
}

/// Everything needed to reproduce a training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    /// All layer widths, input first, final output size exactly 1.
    pub layer_sizes: Vec<usize>,
    pub hidden_activation: Activation,
    pub epochs: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub seed: u64,
}

impl NetworkConfig {
    /// Defaults for a given lag window: one hidden layer of 16, ReLU, 200
    /// epochs of full-batch Adam. The learning rate is 0.01 rather than the
    /// usual 0.001: with a single full-batch step per epoch, 200 epochs at
    /// 0.001 cannot move the parameters far enough to fit.
    pub fn default_for_window(window: usize) -> Self {
        NetworkConfig {
            layer_sizes: vec![window, 16, 1],
            hidden_activation: Activation::Relu,
            epochs: 200,
            learning_rate: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let err = |msg: &str| Err(Error::BadNetworkConfig(msg.into()));
        if self.layer_sizes.len() < 3 {
            return err("need at least input, one hidden layer, and output");
        }
        if self.layer_sizes.iter().any(|&s| s == 0) {
            return err("all layer sizes must be >= 1");
        }
        if *self.layer_sizes.last().unwrap() != 1 {
            return err("final layer size must be exactly 1");
        }
        if self.epochs == 0 {
            return err("epochs must be >= 1");
        }
        if !(self.learning_rate > 0.0) {
            return err("learning_rate must be > 0");
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return err("beta1 and beta2 must lie in [0, 1)");
        }
        if !(self.epsilon > 0.0) {
            return err("epsilon must be > 0");
        }
        Ok(())
    }

    pub fn input_size(&self) -> usize {
        self.layer_sizes[0]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub fan_in: usize,
    pub fan_out: usize,
    /// row-major: weights[j * fan_out + n] connects input j to neuron n
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub layer_sizes: Vec<usize>,
    pub activation: Activation,
    pub seed: u64,
    pub layers: Vec<Layer>,
}

/// Per-parameter Adam moments plus the shared step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub t: u64,
    pub layers: Vec<LayerMoments>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerMoments {
    pub m_weights: Vec<f64>,
    pub v_weights: Vec<f64>,
    pub m_biases: Vec<f64>,
    pub v_biases: Vec<f64>,
}

/// Gradients shaped exactly like the network parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<LayerGradients>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerGradients {
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl Gradients {
    pub fn zeros_like(net: &Network) -> Self {
        Gradients {
            layers: net
                .layers
                .iter()
                .map(|l| LayerGradients {
                    weights: vec![0.0; l.weights.len()],
                    biases: vec![0.0; l.biases.len()],
                })
                .collect(),
        }
    }

    pub fn add_assign(&mut self, other: &Gradients) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            for (x, y) in a.weights.iter_mut().zip(&b.weights) {
                *x += y;
            }
            for (x, y) in a.biases.iter_mut().zip(&b.biases) {
                *x += y;
            }
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for l in &mut self.layers {
            for x in &mut l.weights {
                *x *= factor;
            }
            for x in &mut l.biases {
                *x *= factor;
            }
        }
    }
}

/// Pre- and post-activations retained by [`forward`] for backprop.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    pub input: Vec<f64>,
    pub pre: Vec<Vec<f64>>,
    pub post: Vec<Vec<f64>>,
}

/// Training summary: per-epoch history plus final train/test errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub config: NetworkConfig,
    pub seed: u64,
    pub epoch_mse: Vec<f64>,
    pub final_train_mse: f64,
    pub final_train_mae: f64,
    pub final_test_mse: f64,
    pub final_test_mae: f64,
}

/// Initialize weights from a ChaCha stream seeded by `cfg.seed`, scaled by
/// sqrt(2 / fan_in). Biases start at zero, Adam moments at zero.
pub fn init_network(cfg: &NetworkConfig) -> Result<(Network, AdamState)> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut layers = Vec::new();
    let mut moments = Vec::new();
    for pair in cfg.layer_sizes.windows(2) {
        let (fan_in, fan_out) = (pair[0], pair[1]);
        let dist = Normal::new(0.0, (2.0 / fan_in as f64).sqrt()).unwrap();
        let weights: Vec<f64> = (0..fan_in * fan_out).map(|_| dist.sample(&mut rng)).collect();
        layers.push(Layer {
            fan_in,
            fan_out,
            weights,
            biases: vec![0.0; fan_out],
        });
        moments.push(LayerMoments {
            m_weights: vec![0.0; fan_in * fan_out],
            v_weights: vec![0.0; fan_in * fan_out],
            m_biases: vec![0.0; fan_out],
            v_biases: vec![0.0; fan_out],
        });
    }
    Ok((
        Network {
            layer_sizes: cfg.layer_sizes.clone(),
            activation: cfg.hidden_activation,
            seed: cfg.seed,
            layers,
        },
        AdamState {
            t: 0,
            layers: moments,
        },
    ))
}

/// Run the network and keep every pre/post-activation for backprop.
pub fn forward(net: &Network, input: &[f64]) -> Result<(f64, ForwardCache)> {
    if input.len() != net.layer_sizes[0] {
        return Err(Error::InputSizeMismatch {
            expected: net.layer_sizes[0],
            got: input.len(),
        });
    }
    let last = net.layers.len() - 1;
    let mut pre = Vec::with_capacity(net.layers.len());
    let mut post = Vec::with_capacity(net.layers.len());
    let mut x = input.to_vec();
    for (k, layer) in net.layers.iter().enumerate() {
        let mut i_vec = layer.biases.clone();
        for j in 0..layer.fan_in {
            let xj = x[j];
            let row = &layer.weights[j * layer.fan_out..(j + 1) * layer.fan_out];
            for (n, w) in row.iter().enumerate() {
                i_vec[n] += w * xj;
            }
        }
        let o_vec: Vec<f64> = if k == last {
            // output neuron is linear
            i_vec.clone()
        } else {
            i_vec.iter().map(|&v| net.activation.apply(v)).collect()
        };
        pre.push(i_vec);
        x = o_vec.clone();
        post.push(o_vec);
    }
    let output = post[last][0];
    Ok((
        output,
        ForwardCache {
            input: input.to_vec(),
            pre,
            post,
        },
    ))
}

/// Forward pass without cache retention.
pub fn predict(net: &Network, input: &[f64]) -> Result<f64> {
    forward(net, input).map(|(out, _)| out)
}

/// Exact gradients of the per-sample loss 0.5 * (output - target)^2.
pub fn backward(net: &Network, cache: &ForwardCache, target: f64) -> Gradients {
    let last = net.layers.len() - 1;
    let mut grads = Gradients::zeros_like(net);

    // delta = d loss / d pre-activation of the current layer
    let mut delta = vec![cache.post[last][0] - target];
    for k in (0..=last).rev() {
        let layer = &net.layers[k];
        let inputs: &[f64] = if k == 0 { &cache.input } else { &cache.post[k - 1] };
        let g = &mut grads.layers[k];
        for j in 0..layer.fan_in {
            let xj = inputs[j];
            for n in 0..layer.fan_out {
                g.weights[j * layer.fan_out + n] = delta[n] * xj;
            }
        }
        g.biases.copy_from_slice(&delta);

        if k > 0 {
            let mut prev = vec![0.0; layer.fan_in];
            for (j, p) in prev.iter_mut().enumerate() {
                let row = &layer.weights[j * layer.fan_out..(j + 1) * layer.fan_out];
                let back: f64 = row.iter().zip(&delta).map(|(w, d)| w * d).sum();
                *p = back * net.activation.derivative(cache.pre[k - 1][j]);
            }
            delta = prev;
        }
    }
    grads
}

/// One Adam update with bias correction.
pub fn adam_step(net: &mut Network, state: &mut AdamState, grads: &Gradients, cfg: &NetworkConfig) {
    state.t += 1;
    let t = state.t as i32;
    let bc1 = 1.0 - cfg.beta1.powi(t);
    let bc2 = 1.0 - cfg.beta2.powi(t);

    let update = |param: &mut [f64], m: &mut [f64], v: &mut [f64], g: &[f64]| {
        for i in 0..param.len() {
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
            let m_hat = m[i] / bc1;
            let v_hat = v[i] / bc2;
            param[i] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
        }
    };

    for ((layer, moments), g) in net
        .layers
        .iter_mut()
        .zip(&mut state.layers)
        .zip(&grads.layers)
    {
        update(
            &mut layer.weights,
            &mut moments.m_weights,
            &mut moments.v_weights,
            &g.weights,
        );
        update(
            &mut layer.biases,
            &mut moments.m_biases,
            &mut moments.v_biases,
            &g.biases,
        );
    }
}

fn eval_errors(net: &Network, samples: &[Sample]) -> Result<(f64, f64)> {
    let mut sq = 0.0;
    let mut abs = 0.0;
    for s in samples {
        let pred = predict(net, &s.lags)?;
        let r = pred - s.target;
        sq += r * r;
        abs += r.abs();
    }
    let n = samples.len() as f64;
    Ok((sq / n, abs / n))
}

/// Run the full-batch epoch loop over `samples`: per epoch, one Adam step on
/// the mean gradient. Returns the per-epoch MSE history (the mean squared
/// error of the predictions that produced each epoch's gradient).
pub fn fit(
    net: &mut Network,
    state: &mut AdamState,
    samples: &[Sample],
    cfg: &NetworkConfig,
) -> Result<Vec<f64>> {
    cfg.validate()?;
    let n = samples.len() as f64;
    let mut epoch_mse = Vec::with_capacity(cfg.epochs);

    for epoch in 1..=cfg.epochs {
        let mut batch = Gradients::zeros_like(net);
        let mut sq = 0.0;
        for s in samples {
            let (pred, cache) = forward(net, &s.lags)?;
            let r = pred - s.target;
            sq += r * r;
            batch.add_assign(&backward(net, &cache, s.target));
        }
        let mse = sq / n;
        if !mse.is_finite() {
            return Err(Error::TrainingDiverged(epoch));
        }
        epoch_mse.push(mse);
        batch.scale(1.0 / n);
        adam_step(net, state, &batch, cfg);
    }

    for layer in &net.layers {
        if layer.weights.iter().chain(&layer.biases).any(|v| !v.is_finite()) {
            return Err(Error::TrainingDiverged(cfg.epochs));
        }
    }
    Ok(epoch_mse)
}

/// Train on the dataset's training split and report train/test errors.
pub fn train(
    net: &mut Network,
    state: &mut AdamState,
    dataset: &Dataset,
    cfg: &NetworkConfig,
) -> Result<TrainReport> {
    let epoch_mse = fit(net, state, dataset.train(), cfg)?;
    let (final_train_mse, final_train_mae) = eval_errors(net, dataset.train())?;
    let (final_test_mse, final_test_mae) = eval_errors(net, dataset.test())?;
    Ok(TrainReport {
        config: cfg.clone(),
        seed: cfg.seed,
        epoch_mse,
        final_train_mse,
        final_train_mae,
        final_test_mse,
        final_test_mae,
    })
}

// ---------------------------------------------------------------------------
// Model persistence: self-describing header + little-endian f64 parameters,
// weights row-major then biases per layer. Save/load round-trips bit-exactly.

const MODEL_MAGIC: &[u8; 8] = b"XPCASTML";
const MODEL_VERSION: u32 = 1;

pub fn save_model(net: &Network, path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    buf.extend_from_slice(MODEL_MAGIC);
    buf.extend_from_slice(&MODEL_VERSION.to_le_bytes());
    buf.extend_from_slice(&(net.layer_sizes.len() as u32).to_le_bytes());
    for &s in &net.layer_sizes {
        buf.extend_from_slice(&(s as u32).to_le_bytes());
    }
    buf.push(match net.activation {
        Activation::Relu => 0,
        Activation::Sigmoid => 1,
    });
    buf.extend_from_slice(&net.seed.to_le_bytes());
    for layer in &net.layers {
        for v in layer.weights.iter().chain(&layer.biases) {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(&buf).map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<Network> {
    let bad = |reason: &str| Error::BadModelFile {
        path: path.to_path_buf(),
        reason: reason.to_string(),
    };
    let mut buf = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut buf))
        .map_err(|e| Error::io(path, e))?;

    let mut pos = 0usize;
    let mut take = |n: usize| -> Result<&[u8]> {
        if pos + n > buf.len() {
            return Err(bad("truncated"));
        }
        let slice = &buf[pos..pos + n];
        pos += n;
        Ok(slice)
    };

    if take(8)? != MODEL_MAGIC {
        return Err(bad("bad magic"));
    }
    let version = u32::from_le_bytes(take(4)?.try_into().unwrap());
    if version != MODEL_VERSION {
        return Err(bad("unsupported format version"));
    }
    let n_sizes = u32::from_le_bytes(take(4)?.try_into().unwrap()) as usize;
    if n_sizes < 2 || n_sizes > 64 {
        return Err(bad("implausible layer count"));
    }
    let mut layer_sizes = Vec::with_capacity(n_sizes);
    for _ in 0..n_sizes {
        layer_sizes.push(u32::from_le_bytes(take(4)?.try_into().unwrap()) as usize);
    }
    let activation = match take(1)?[0] {
        0 => Activation::Relu,
        1 => Activation::Sigmoid,
        _ => return Err(bad("unknown activation byte")),
    };
    let seed = u64::from_le_bytes(take(8)?.try_into().unwrap());

    let mut layers = Vec::new();
    for pair in layer_sizes.windows(2) {
        let (fan_in, fan_out) = (pair[0], pair[1]);
        let mut read_f64s = |n: usize| -> Result<Vec<f64>> {
            let bytes = take(n * 8)?;
            Ok(bytes
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect())
        };
        let weights = read_f64s(fan_in * fan_out)?;
        let biases = read_f64s(fan_out)?;
        layers.push(Layer {
            fan_in,
            fan_out,
            weights,
            biases,
        });
    }
    if pos != buf.len() {
        return Err(bad("trailing bytes"));
    }
    Ok(Network {
        layer_sizes,
        activation,
        seed,
        layers,
    })
}

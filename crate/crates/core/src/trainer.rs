//! Reference classifier: a fully connected network with a shared rectifier
//! trunk and one linear output layer per fusion head, trained by minibatch
//! SGD with momentum under a triangular cyclic learning rate.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dataset::derive_seed;
use crate::fusion::{self, encode_label, FusionError, FusionLabel, FusionMode, SampleOrigin, Strategy};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TrainError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("input has {actual} features, network expects {expected}")]
    ShapeMismatch { expected: usize, actual: usize },
    #[error("no samples to evaluate")]
    EmptyManifest,
    #[error(transparent)]
    Fusion(#[from] FusionError),
}

/// In-memory training data: `origins.len()` rows of `dim` features each.
#[derive(Debug, Clone, PartialEq)]
pub struct Samples {
    pub dim: usize,
    pub inputs: Vec<f32>,
    pub origins: Vec<SampleOrigin>,
}

impl Samples {
    pub fn new(dim: usize) -> Self {
        Self { dim, inputs: Vec::new(), origins: Vec::new() }
    }

    pub fn push(&mut self, features: &[f32], origin: SampleOrigin) {
        assert_eq!(features.len(), self.dim, "feature length");
        self.inputs.extend_from_slice(features);
        self.origins.push(origin);
    }

    pub fn len(&self) -> usize {
        self.origins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.origins.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.inputs[i * self.dim..(i + 1) * self.dim]
    }

    pub fn select(&self, idx: &[usize]) -> Samples {
        let mut out = Samples::new(self.dim);
        for &i in idx {
            out.push(self.row(i), self.origins[i]);
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Identity,
}

/// Triangular cyclic learning rate: rises linearly from `base_lr` to
/// `max_lr` over `step_size` iterations, falls back over the next
/// `step_size`, and repeats.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CyclicLr {
    pub base_lr: f64,
    pub max_lr: f64,
    pub step_size: usize,
}

impl CyclicLr {
    pub fn rate(&self, iteration: usize) -> f64 {
        let step = self.step_size.max(1) as f64;
        let it = iteration as f64;
        let cycle = libm::floor(1.0 + it / (2.0 * step));
        let x = libm::fabs(it / step - 2.0 * cycle + 1.0);
        self.base_lr + (self.max_lr - self.base_lr) * (1.0 - x).max(0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpConfig {
    pub input_dim: usize,
    /// Hidden widths; the depth is the number of entries.
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub mode: FusionMode,
    pub base_lr: f64,
    pub max_lr: f64,
    /// Cycle length in iterations; `None` makes the whole run one cycle.
    pub cycle_steps: Option<usize>,
    pub momentum: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
}

impl MlpConfig {
    pub fn new(input_dim: usize, hidden: Vec<usize>, mode: FusionMode) -> Self {
        Self {
            input_dim,
            hidden,
            activation: Activation::Relu,
            mode,
            base_lr: 0.001,
            max_lr: 0.02,
            cycle_steps: None,
            momentum: 0.9,
            batch_size: 32,
            epochs: 20,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<(), TrainError> {
        if self.hidden.is_empty() {
            return Err(TrainError::InvalidConfig("depth must be at least 1"));
        }
        if self.input_dim == 0 || self.hidden.contains(&0) || self.mode.n_classes == 0 {
            return Err(TrainError::InvalidConfig("all dimensions must be at least 1"));
        }
        if !(self.base_lr < self.max_lr) {
            return Err(TrainError::InvalidConfig("base_lr must be below max_lr"));
        }
        if self.batch_size == 0 {
            return Err(TrainError::InvalidConfig("batch_size must be at least 1"));
        }
        Ok(())
    }

    pub fn schedule(&self, steps_per_epoch: usize) -> CyclicLr {
        let cycle = self.cycle_steps.unwrap_or((steps_per_epoch * self.epochs).max(2));
        CyclicLr { base_lr: self.base_lr, max_lr: self.max_lr, step_size: (cycle / 2).max(1) }
    }
}

/// Dense layer, weights stored row-major as `outputs × inputs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Layer {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Self { inputs, outputs, weights: vec![0.0; inputs * outputs], bias: vec![0.0; outputs] }
    }

    fn he(inputs: usize, outputs: usize, rng: &mut ChaCha8Rng) -> Self {
        let normal = Normal::new(0.0, libm::sqrt(2.0 / inputs as f64)).expect("finite std");
        let weights = (0..inputs * outputs).map(|_| normal.sample(rng)).collect();
        Self { inputs, outputs, weights, bias: vec![0.0; outputs] }
    }

    fn forward(&self, x: &[f64], out: &mut [f64]) {
        for (o, y) in out.iter_mut().enumerate() {
            *y = self.bias[o] + dot(&self.weights[o * self.inputs..(o + 1) * self.inputs], x);
        }
    }

    fn len(&self) -> usize {
        self.weights.len() + self.bias.len()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for (x, y) in ra.iter().zip(rb) {
        s += x * y;
    }
    s
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Anything that maps one feature row to per-head logits.
pub trait Predictor {
    fn predict(&self, input: &[f32]) -> Vec<Vec<f64>>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub mode: FusionMode,
    pub activation: Activation,
    pub trunk: Vec<Layer>,
    pub heads: Vec<Layer>,
}

/// Activations cached by a forward pass.
struct Trace {
    input: Vec<f64>,
    /// Post-activation output of each trunk layer.
    hidden: Vec<Vec<f64>>,
    logits: Vec<Vec<f64>>,
}

impl Mlp {
    pub fn new(config: &MlpConfig) -> Result<Self, TrainError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(&[config.seed, 0x1417]));
        let mut trunk = Vec::with_capacity(config.hidden.len());
        let mut fan_in = config.input_dim;
        for &w in &config.hidden {
            trunk.push(Layer::he(fan_in, w, &mut rng));
            fan_in = w;
        }
        let heads = config.mode.head_dims().into_iter().map(|d| Layer::he(fan_in, d, &mut rng)).collect();
        Ok(Self { mode: config.mode, activation: config.activation, trunk, heads })
    }

    /// Same architecture with every parameter zero.
    pub fn zeroed(config: &MlpConfig) -> Result<Self, TrainError> {
        let mut m = Self::new(config)?;
        m.visit_params_mut(|p| *p = 0.0);
        Ok(m)
    }

    pub fn input_dim(&self) -> usize {
        self.trunk[0].inputs
    }

    fn trace(&self, input: &[f32]) -> Trace {
        let x: Vec<f64> = input.iter().map(|&v| v as f64).collect();
        let mut hidden = Vec::with_capacity(self.trunk.len());
        for layer in &self.trunk {
            let prev = hidden.last().unwrap_or(&x);
            let mut h = vec![0.0; layer.outputs];
            layer.forward(prev, &mut h);
            if self.activation == Activation::Relu {
                h.iter_mut().for_each(|v| *v = v.max(0.0));
            }
            hidden.push(h);
        }
        let last = hidden.last().unwrap_or(&x);
        let logits = self
            .heads
            .iter()
            .map(|head| {
                let mut z = vec![0.0; head.outputs];
                head.forward(last, &mut z);
                z
            })
            .collect();
        Trace { input: x, hidden, logits }
    }

    /// Accumulates parameter gradients for one sample into `grad`, given the
    /// loss gradient with respect to each head's logits.
    fn backward(&self, trace: &Trace, dlogits: &[Vec<f64>], grad: &mut Mlp) {
        let last = trace.hidden.last().unwrap_or(&trace.input);
        let mut dh = vec![0.0; last.len()];
        for ((head, ghead), dz) in self.heads.iter().zip(grad.heads.iter_mut()).zip(dlogits) {
            for (o, &g) in dz.iter().enumerate() {
                if g == 0.0 {
                    continue;
                }
                ghead.bias[o] += g;
                let row = o * head.inputs..(o + 1) * head.inputs;
                axpy(g, last, &mut ghead.weights[row.clone()]);
                axpy(g, &head.weights[row], &mut dh);
            }
        }
        for l in (0..self.trunk.len()).rev() {
            if self.activation == Activation::Relu {
                for (d, &h) in dh.iter_mut().zip(&trace.hidden[l]) {
                    if h <= 0.0 {
                        *d = 0.0;
                    }
                }
            }
            let layer = &self.trunk[l];
            let input = if l == 0 { &trace.input } else { &trace.hidden[l - 1] };
            let glayer = &mut grad.trunk[l];
            let mut dprev = if l > 0 { vec![0.0; layer.inputs] } else { Vec::new() };
            for (o, &g) in dh.iter().enumerate() {
                if g == 0.0 {
                    continue;
                }
                glayer.bias[o] += g;
                let row = o * layer.inputs..(o + 1) * layer.inputs;
                axpy(g, input, &mut glayer.weights[row.clone()]);
                if l > 0 {
                    axpy(g, &layer.weights[row], &mut dprev);
                }
            }
            dh = dprev;
        }
    }

    /// Mean batch loss and its gradient (same layout as `self`).
    pub fn loss_and_gradient(&self, data: &Samples, idx: &[usize]) -> Result<(f64, Mlp), TrainError> {
        if data.dim != self.input_dim() {
            return Err(TrainError::ShapeMismatch { expected: self.input_dim(), actual: data.dim });
        }
        let traces: Vec<Trace> = idx.iter().map(|&i| self.trace(data.row(i))).collect();
        let batch: Vec<(Vec<Vec<f64>>, FusionLabel)> = idx
            .iter()
            .zip(&traces)
            .map(|(&i, t)| Ok((t.logits.clone(), encode_label(self.mode, data.origins[i])?)))
            .collect::<Result<_, FusionError>>()?;
        let loss = fusion::batch_loss(self.mode, &batch)?;
        let mut grad = self.zeros_like();
        for (trace, dlogits) in traces.iter().zip(&loss.per_sample) {
            self.backward(trace, dlogits, &mut grad);
        }
        Ok((loss.mean.total, grad))
    }

    fn zeros_like(&self) -> Mlp {
        Mlp {
            mode: self.mode,
            activation: self.activation,
            trunk: self.trunk.iter().map(|l| Layer::zeros(l.inputs, l.outputs)).collect(),
            heads: self.heads.iter().map(|l| Layer::zeros(l.inputs, l.outputs)).collect(),
        }
    }

    pub fn param_count(&self) -> usize {
        self.trunk.iter().chain(&self.heads).map(Layer::len).sum()
    }

    /// Visits every parameter in a fixed order: trunk layers, then heads;
    /// within a layer, weights then biases.
    pub fn visit_params(&self, mut f: impl FnMut(f64)) {
        for layer in self.trunk.iter().chain(&self.heads) {
            layer.weights.iter().chain(&layer.bias).for_each(|&v| f(v));
        }
    }

    pub fn visit_params_mut(&mut self, mut f: impl FnMut(&mut f64)) {
        for layer in self.trunk.iter_mut().chain(self.heads.iter_mut()) {
            layer.weights.iter_mut().chain(layer.bias.iter_mut()).for_each(&mut f);
        }
    }

    pub fn flat_params(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.param_count());
        self.visit_params(|p| v.push(p));
        v
    }

    fn param_mut(&mut self, mut index: usize) -> &mut f64 {
        for layer in self.trunk.iter_mut().chain(self.heads.iter_mut()) {
            if index < layer.weights.len() {
                return &mut layer.weights[index];
            }
            index -= layer.weights.len();
            if index < layer.bias.len() {
                return &mut layer.bias[index];
            }
            index -= layer.bias.len();
        }
        panic!("parameter index out of range");
    }

    /// Hex SHA-256 of the little-endian parameter bytes.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        self.visit_params(|p| h.update(p.to_le_bytes()));
        let mut s = String::with_capacity(64);
        for b in h.finalize() {
            let _ = write!(s, "{b:02x}");
        }
        s
    }

    /// Parameter index range of head `h` within [`Mlp::flat_params`].
    pub fn head_param_range(&self, h: usize) -> core::ops::Range<usize> {
        let start: usize = self.trunk.iter().map(Layer::len).sum::<usize>()
            + self.heads[..h].iter().map(Layer::len).sum::<usize>();
        start..start + self.heads[h].len()
    }
}

impl Predictor for Mlp {
    fn predict(&self, input: &[f32]) -> Vec<Vec<f64>> {
        self.trace(input).logits
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub n_samples: usize,
    /// Object-class accuracy over target samples.
    pub top1: Option<f64>,
    pub top5: Option<f64>,
    /// Recall per object class; `None` for classes with no samples.
    pub per_class_recall: Vec<Option<f64>>,
    /// Mean of the defined per-class recalls.
    pub mean_recall: Option<f64>,
    /// Binary accuracy over illusion samples.
    pub illusion_accuracy: Option<f64>,
    /// Recall on illusory (positive) samples.
    pub illusion_recall: Option<f64>,
}

impl Metrics {
    /// Recall figure tracked by the depth study: class-averaged object
    /// recall when there are target samples, else illusion recall.
    pub fn recall(&self) -> Option<f64> {
        self.mean_recall.or(self.illusion_recall)
    }

    /// Accuracy of the binary decision the data asks for: illusion accuracy
    /// when present, else object top-1.
    pub fn binary_accuracy(&self) -> Option<f64> {
        self.illusion_accuracy.or(self.top1)
    }
}

pub fn evaluate(predictor: &impl Predictor, data: &Samples, mode: FusionMode) -> Result<Metrics, TrainError> {
    if data.is_empty() {
        return Err(TrainError::EmptyManifest);
    }
    let n = mode.n_classes;
    let k = 5.min(n);
    let (mut n_obj, mut hit1, mut hit5) = (0usize, 0usize, 0usize);
    let mut class_total = vec![0usize; n];
    let mut class_hit = vec![0usize; n];
    let (mut n_ill, mut ill_hit, mut n_pos, mut pos_hit) = (0usize, 0usize, 0usize, 0usize);
    for i in 0..data.len() {
        let logits = predictor.predict(data.row(i));
        match data.origins[i] {
            SampleOrigin::Target(c) => {
                let obj = fusion::object_logits(mode, &logits);
                let pred = fusion::argmax(&obj);
                // Rank of the true class: number of strictly larger logits.
                let rank = obj.iter().filter(|&&z| z > obj[c]).count();
                n_obj += 1;
                class_total[c] += 1;
                if pred == c {
                    hit1 += 1;
                    class_hit[c] += 1;
                }
                if rank < k {
                    hit5 += 1;
                }
            }
            SampleOrigin::Illusion(truth) => {
                if let Some(pred) = fusion::illusion_decision(mode, &logits) {
                    n_ill += 1;
                    ill_hit += (pred == truth) as usize;
                    if truth {
                        n_pos += 1;
                        pos_hit += pred as usize;
                    }
                }
            }
        }
    }
    let ratio = |a: usize, b: usize| (b > 0).then(|| a as f64 / b as f64);
    let per_class_recall: Vec<Option<f64>> =
        class_hit.iter().zip(&class_total).map(|(&h, &t)| ratio(h, t)).collect();
    let defined: Vec<f64> = per_class_recall.iter().flatten().copied().collect();
    Ok(Metrics {
        n_samples: data.len(),
        top1: ratio(hit1, n_obj),
        top5: ratio(hit5, n_obj),
        mean_recall: (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64),
        per_class_recall,
        illusion_accuracy: ratio(ill_hit, n_ill),
        illusion_recall: ratio(pos_hit, n_pos),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    /// Mean per-sample training loss over the epoch.
    pub train_loss: f64,
    pub eval: Option<Metrics>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainRun {
    pub config: MlpConfig,
    pub epochs: Vec<EpochStats>,
    /// Filled in by callers that have a clock.
    pub wall_clock_secs: Option<f64>,
    pub params_digest: String,
}

/// Trains a freshly initialized network. Deterministic in `config.seed`.
/// When `eval` is given it is scored after every epoch.
pub fn train(config: &MlpConfig, data: &Samples, eval: Option<&Samples>) -> Result<(Mlp, TrainRun), TrainError> {
    let mut net = Mlp::new(config)?;
    if data.dim != config.input_dim {
        return Err(TrainError::ShapeMismatch { expected: config.input_dim, actual: data.dim });
    }
    if let Some(e) = eval {
        if e.dim != config.input_dim {
            return Err(TrainError::ShapeMismatch { expected: config.input_dim, actual: e.dim });
        }
    }
    // Surface label errors before spending time on the first epoch.
    for &o in &data.origins {
        encode_label(config.mode, o)?;
    }

    let steps_per_epoch = data.len().div_ceil(config.batch_size);
    let schedule = config.schedule(steps_per_epoch);
    let mut velocity = net.zeros_like();
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut epochs = Vec::with_capacity(config.epochs);
    let mut iteration = 0usize;

    for epoch in 0..config.epochs {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(&[config.seed, epoch as u64, 0xE90C]));
        order.sort_unstable();
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for batch in order.chunks(config.batch_size) {
            let (loss, grad) = net.loss_and_gradient(data, batch)?;
            loss_sum += loss * batch.len() as f64;
            let lr = schedule.rate(iteration);
            sgd_step(&mut net, &mut velocity, &grad, lr, config.momentum);
            iteration += 1;
        }
        let train_loss = if data.is_empty() { 0.0 } else { loss_sum / data.len() as f64 };
        let eval = eval.map(|e| evaluate(&net, e, config.mode)).transpose()?;
        epochs.push(EpochStats { epoch, train_loss, eval });
    }
    let run = TrainRun { config: config.clone(), epochs, wall_clock_secs: None, params_digest: net.digest() };
    Ok((net, run))
}

fn sgd_step(net: &mut Mlp, velocity: &mut Mlp, grad: &Mlp, lr: f64, momentum: f64) {
    let layers = net.trunk.iter_mut().chain(net.heads.iter_mut());
    let vels = velocity.trunk.iter_mut().chain(velocity.heads.iter_mut());
    let grads = grad.trunk.iter().chain(&grad.heads);
    for ((layer, vel), g) in layers.zip(vels).zip(grads) {
        let params = layer.weights.iter_mut().chain(layer.bias.iter_mut());
        let vs = vel.weights.iter_mut().chain(vel.bias.iter_mut());
        let gs = g.weights.iter().chain(&g.bias);
        for ((p, v), &gi) in params.zip(vs).zip(gs) {
            *v = momentum * *v + gi;
            *p -= lr * *v;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthRow {
    pub depth: usize,
    /// First epoch (1-based) whose eval recall reached the threshold.
    pub epochs_to_threshold: Option<usize>,
    pub recall_curve: Vec<f64>,
    pub loss_curve: Vec<f64>,
}

/// First 1-based epoch at which `run`'s eval recall reaches `threshold`.
pub fn epochs_to_threshold(run: &TrainRun, threshold: f64) -> Option<usize> {
    run.epochs
        .iter()
        .position(|e| e.eval.as_ref().and_then(Metrics::recall).is_some_and(|r| r >= threshold))
        .map(|i| i + 1)
}

/// Trains one network per depth, all hidden layers as wide as
/// `base.hidden[0]`, everything else shared.
pub fn depth_sweep(
    base: &MlpConfig,
    depths: &[usize],
    train_data: &Samples,
    eval: &Samples,
    threshold: f64,
) -> Result<Vec<DepthRow>, TrainError> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(TrainError::InvalidConfig("threshold must lie in (0, 1)"));
    }
    depths.iter().map(|&d| depth_row(base, d, train_data, eval, threshold)).collect()
}

/// A single row of [`depth_sweep`]; exposed so callers can run depths in parallel.
pub fn depth_row(
    base: &MlpConfig,
    depth: usize,
    train_data: &Samples,
    eval: &Samples,
    threshold: f64,
) -> Result<DepthRow, TrainError> {
    let width = *base.hidden.first().ok_or(TrainError::InvalidConfig("depth must be at least 1"))?;
    let config = MlpConfig { hidden: vec![width; depth], ..base.clone() };
    let (_, run) = train(&config, train_data, Some(eval))?;
    Ok(DepthRow {
        depth,
        epochs_to_threshold: epochs_to_threshold(&run, threshold),
        recall_curve: run.epochs.iter().map(|e| e.eval.as_ref().and_then(Metrics::recall).unwrap_or(0.0)).collect(),
        loss_curve: run.epochs.iter().map(|e| e.train_loss).collect(),
    })
}

/// Step used by [`gradient_check`] for central differences.
pub const FD_STEP: f64 = 1e-5;

/// Relative error `|a - b| / max(|a|, |b|, 1e-6)`; the floor keeps
/// near-zero gradients from inflating the ratio.
pub fn relative_error(a: f64, b: f64) -> f64 {
    libm::fabs(a - b) / libm::fabs(a).max(libm::fabs(b)).max(1e-6)
}

/// Outcome of a gradient check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientCheck {
    pub max_relative_error: f64,
    pub checked: Vec<usize>,
    pub analytic: Vec<f64>,
    pub numeric: Vec<f64>,
}

/// Compares the backprop gradient of the mean batch loss against central
/// finite differences on `n_params` randomly chosen parameters (all of them
/// if the network is smaller).
pub fn gradient_check(
    net: &Mlp,
    data: &Samples,
    n_params: usize,
    seed: u64,
) -> Result<GradientCheck, TrainError> {
    let idx: Vec<usize> = (0..data.len()).collect();
    let (_, grad) = net.loss_and_gradient(data, &idx)?;
    let flat_grad = grad.flat_params();
    let total = net.param_count();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen: Vec<usize> = (0..total).collect();
    if n_params < total {
        for i in 0..n_params {
            let j = rng.random_range(i..total);
            chosen.swap(i, j);
        }
        chosen.truncate(n_params);
    }
    let mut probe = net.clone();
    let mut analytic = Vec::with_capacity(chosen.len());
    let mut numeric = Vec::with_capacity(chosen.len());
    let mut worst = 0.0f64;
    for &p in &chosen {
        let orig = *probe.param_mut(p);
        *probe.param_mut(p) = orig + FD_STEP;
        let (up, _) = probe.loss_only(data, &idx)?;
        *probe.param_mut(p) = orig - FD_STEP;
        let (down, _) = probe.loss_only(data, &idx)?;
        *probe.param_mut(p) = orig;
        let fd = (up - down) / (2.0 * FD_STEP);
        worst = worst.max(relative_error(flat_grad[p], fd));
        analytic.push(flat_grad[p]);
        numeric.push(fd);
    }
    Ok(GradientCheck { max_relative_error: worst, checked: chosen, analytic, numeric })
}

impl Mlp {
    fn loss_only(&self, data: &Samples, idx: &[usize]) -> Result<(f64, ()), TrainError> {
        let batch: Vec<(Vec<Vec<f64>>, FusionLabel)> = idx
            .iter()
            .map(|&i| Ok((self.predict(data.row(i)), encode_label(self.mode, data.origins[i])?)))
            .collect::<Result<_, FusionError>>()?;
        Ok((fusion::batch_loss(self.mode, &batch)?.mean.total, ()))
    }
}

/// Converts a binary illusion label into the origin a Base-mode binary
/// classifier (two object classes) expects.
pub fn binary_origin(positive: bool) -> SampleOrigin {
    SampleOrigin::Target(positive as usize)
}

/// The strategy-independent two-class mode used for illusion-only training.
pub fn binary_mode() -> FusionMode {
    FusionMode::new(Strategy::Base, 2)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy(n: usize, dim: usize, seed: u64, origin: impl Fn(usize, &[f32]) -> SampleOrigin) -> Samples {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut s = Samples::new(dim);
        for i in 0..n {
            let x: Vec<f32> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
            let o = origin(i, &x);
            s.push(&x, o);
        }
        s
    }

    #[test]
    fn triangular_schedule_shape() {
        let lr = CyclicLr { base_lr: 0.1, max_lr: 1.1, step_size: 10 };
        assert!((lr.rate(0) - 0.1).abs() < 1e-12);
        assert!((lr.rate(5) - 0.6).abs() < 1e-12);
        assert!((lr.rate(10) - 1.1).abs() < 1e-12);
        assert!((lr.rate(15) - 0.6).abs() < 1e-12);
        assert!((lr.rate(20) - 0.1).abs() < 1e-12);
        assert!((lr.rate(30) - 1.1).abs() < 1e-12);
    }

    #[test]
    fn config_validation() {
        let mode = binary_mode();
        assert!(Mlp::new(&MlpConfig::new(4, vec![], mode)).is_err());
        assert!(Mlp::new(&MlpConfig::new(4, vec![0], mode)).is_err());
        let mut c = MlpConfig::new(4, vec![3], mode);
        c.base_lr = c.max_lr;
        assert!(Mlp::new(&c).is_err());
    }

    #[test]
    fn zero_epochs_gives_empty_run() {
        let data = toy(40, 3, 1, |i, _| binary_origin(i % 2 == 0));
        let mut c = MlpConfig::new(3, vec![4], binary_mode());
        c.epochs = 0;
        let (net, run) = train(&c, &data, None).unwrap();
        assert!(run.epochs.is_empty());
        let m = evaluate(&net, &data, c.mode).unwrap();
        assert!(m.top1.unwrap() > 0.2 && m.top1.unwrap() < 0.8);
    }

    #[test]
    fn learns_linear_rule_and_replays() {
        let data = toy(400, 5, 2, |_, x| binary_origin(x[0] + x[1] > 0.0));
        let mut c = MlpConfig::new(5, vec![16], binary_mode());
        c.epochs = 15;
        c.max_lr = 0.05;
        let (net, run) = train(&c, &data, Some(&data)).unwrap();
        let (_, run2) = train(&c, &data, Some(&data)).unwrap();
        assert_eq!(run, run2);
        assert!(run.epochs.last().unwrap().train_loss < run.epochs[0].train_loss);
        assert!(evaluate(&net, &data, c.mode).unwrap().top1.unwrap() > 0.95);
    }

    #[test]
    fn shape_mismatch_reported() {
        let data = toy(4, 3, 0, |_, _| binary_origin(true));
        let c = MlpConfig::new(5, vec![2], binary_mode());
        assert!(matches!(train(&c, &data, None), Err(TrainError::ShapeMismatch { .. })));
    }

    #[test]
    fn empty_eval_rejected() {
        let c = MlpConfig::new(3, vec![2], binary_mode());
        let net = Mlp::new(&c).unwrap();
        assert_eq!(evaluate(&net, &Samples::new(3), c.mode), Err(TrainError::EmptyManifest));
    }

    #[test]
    fn zero_net_bias_gradient_is_softmax_minus_onehot() {
        let mode = FusionMode::new(Strategy::Single, 3);
        let c = MlpConfig::new(4, vec![5], mode);
        let net = Mlp::zeroed(&c).unwrap();
        let mut data = Samples::new(4);
        data.push(&[0.0; 4], SampleOrigin::Illusion(true));
        let (_, g) = net.loss_and_gradient(&data, &[0]).unwrap();
        let expected: Vec<f64> = (0..5).map(|j| if j == 4 { 0.2 - 1.0 } else { 0.2 }).collect();
        assert_eq!(g.heads[0].bias, expected);
        assert!(g.trunk[0].weights.iter().all(|&w| w == 0.0));
    }

    #[test]
    fn linear_net_gradient_check() {
        let mode = FusionMode::new(Strategy::Single, 3);
        let mut c = MlpConfig::new(6, vec![5], mode);
        c.activation = Activation::Identity;
        let data = toy(8, 6, 3, |i, _| if i % 3 == 0 { SampleOrigin::Illusion(i % 2 == 0) } else { SampleOrigin::Target(i % 3) });
        let net = Mlp::new(&c).unwrap();
        let r = gradient_check(&net, &data, 200, 9).unwrap();
        assert!(r.max_relative_error < 1e-5, "{}", r.max_relative_error);
    }

    #[test]
    fn masked_head_has_zero_gradient() {
        let mode = FusionMode::new(Strategy::Mix, 3);
        let c = MlpConfig::new(4, vec![6, 6, 6], mode);
        let net = Mlp::new(&c).unwrap();
        let data = toy(6, 4, 4, |_, _| SampleOrigin::Illusion(false));
        let idx: Vec<usize> = (0..6).collect();
        let (_, g) = net.loss_and_gradient(&data, &idx).unwrap();
        let flat = g.flat_params();
        let r = net.head_param_range(0);
        assert!(flat[r].iter().all(|&v| v == 0.0));
        assert!(flat[net.head_param_range(1)].iter().any(|&v| v != 0.0));
    }

    struct Constant(Vec<Vec<f64>>);

    impl Predictor for Constant {
        fn predict(&self, _: &[f32]) -> Vec<Vec<f64>> {
            self.0.clone()
        }
    }

    #[test]
    fn majority_baseline_is_sixty_percent() {
        let mode = FusionMode::new(Strategy::Multi, 2);
        let mut data = Samples::new(1);
        for i in 0..100 {
            data.push(&[0.0], SampleOrigin::Illusion(i < 40));
        }
        let m = evaluate(&Constant(vec![vec![0.0, 0.0], vec![1.0, 0.0]]), &data, mode).unwrap();
        assert_eq!(m.illusion_accuracy, Some(0.6));
        assert_eq!(m.illusion_recall, Some(0.0));
        assert_eq!(m.top1, None);
    }

    #[test]
    fn oracle_predictor_scores_one() {
        struct Oracle;
        impl Predictor for Oracle {
            fn predict(&self, x: &[f32]) -> Vec<Vec<f64>> {
                let mut z = vec![0.0; 5];
                z[x[0] as usize] = 1.0;
                vec![z]
            }
        }
        let mode = FusionMode::new(Strategy::Single, 3);
        let mut data = Samples::new(1);
        for c in 0..3 {
            data.push(&[c as f32], SampleOrigin::Target(c));
        }
        data.push(&[4.0], SampleOrigin::Illusion(true));
        data.push(&[3.0], SampleOrigin::Illusion(false));
        let m = evaluate(&Oracle, &data, mode).unwrap();
        assert_eq!((m.top1, m.top5, m.mean_recall, m.illusion_accuracy), (Some(1.0), Some(1.0), Some(1.0), Some(1.0)));
    }

    #[test]
    fn digest_changes_with_params() {
        let c = MlpConfig::new(3, vec![2], binary_mode());
        let a = Mlp::new(&c).unwrap();
        let mut b = a.clone();
        b.heads[0].bias[0] += 1.0;
        assert_eq!(a.digest().len(), 64);
        assert_ne!(a.digest(), b.digest());
    }
}

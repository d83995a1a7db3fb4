//! Mini-batch Adam on softmax cross-entropy.
//!
//! [`train`] runs a (possibly fractional) number of epochs and reports the
//! train and validation errors in percent; [`train_full`] keeps going until a
//! target train accuracy or an epoch cap is reached.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::Dataset;
use crate::linalg::gemm::{gemm_raw, View};
use crate::linalg::Matrix;
use crate::network::{argmax, FeedForwardNet};
use crate::seed;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrainError {
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("dataset width {found} does not match the network input width {expected}")]
    WidthMismatch { expected: usize, found: usize },
    #[error("label {label} is not a valid output of a network with {outputs} outputs")]
    LabelOutOfRange { label: usize, outputs: usize },
    #[error("loss became non-finite at step {step}")]
    NonFiniteLoss { step: u64 },
    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub shuffle_seed: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Epoch cap for [`train_full`].
    pub max_epochs_full: usize,
    /// [`train_full`] stops once train accuracy (percent) reaches this value.
    pub stop_at_train_accuracy: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.001,
            batch_size: 50,
            shuffle_seed: 0,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            max_epochs_full: 200,
            stop_at_train_accuracy: Some(100.0),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        if !(self.learning_rate > 0.0) {
            return Err(TrainError::InvalidConfig("learning rate must be positive".into()));
        }
        if self.batch_size == 0 {
            return Err(TrainError::InvalidConfig("batch size must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(TrainError::InvalidConfig("Adam betas must lie in [0, 1)".into()));
        }
        if !(self.epsilon > 0.0) {
            return Err(TrainError::InvalidConfig("Adam epsilon must be positive".into()));
        }
        Ok(())
    }
}

/// Errors are percentages in `[0, 100]`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub train_error: f64,
    pub validation_error: Option<f64>,
    pub test_error: Option<f64>,
    /// Mean cross-entropy of each (possibly partial) epoch.
    pub epoch_losses: Vec<f64>,
    pub steps: u64,
    pub epochs: f64,
}

/// Gradient of one layer's parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerGradient {
    pub weights: Matrix,
    pub bias: Vec<f64>,
    pub gain: Option<f64>,
}

/// Parameter-shaped gradient of the mean batch loss.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub layers: Vec<LayerGradient>,
}

impl Gradients {
    pub fn zeros_like(net: &FeedForwardNet) -> Self {
        Self {
            layers: net
                .layers()
                .iter()
                .map(|l| LayerGradient {
                    weights: Matrix::zeros(l.inputs(), l.neurons()),
                    bias: vec![0.0; l.neurons()],
                    gain: l.gain.map(|_| 0.0),
                })
                .collect(),
        }
    }

    fn matches(&self, net: &FeedForwardNet) -> bool {
        self.layers.len() == net.layer_count()
            && self.layers.iter().zip(net.layers()).all(|(g, l)| {
                g.weights.shape() == l.weights.shape()
                    && g.bias.len() == l.bias.len()
                    && g.gain.is_some() == l.gain.is_some()
            })
    }
}

#[derive(Clone, Debug, PartialEq)]
struct Moments {
    weights: Vec<f64>,
    bias: Vec<f64>,
    gain: f64,
}

/// First and second moment estimates for every parameter.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    first: Vec<Moments>,
    second: Vec<Moments>,
    step: u64,
}

impl AdamState {
    pub fn new(net: &FeedForwardNet) -> Self {
        let zeros = || {
            net.layers()
                .iter()
                .map(|l| Moments {
                    weights: vec![0.0; l.weights.as_slice().len()],
                    bias: vec![0.0; l.bias.len()],
                    gain: 0.0,
                })
                .collect::<Vec<_>>()
        };
        Self {
            first: zeros(),
            second: zeros(),
            step: 0,
        }
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    fn matches(&self, net: &FeedForwardNet) -> bool {
        self.first.len() == net.layer_count()
            && self.first.iter().zip(net.layers()).all(|(m, l)| {
                m.weights.len() == l.weights.as_slice().len() && m.bias.len() == l.bias.len()
            })
    }
}

#[inline]
fn adam_update(param: &mut f64, grad: f64, m: &mut f64, v: &mut f64, lr_t: f64, cfg: &TrainConfig, v_corr: f64) {
    *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * grad;
    *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * grad * grad;
    *param -= lr_t * *m / ((*v / v_corr).sqrt() + cfg.epsilon);
}

/// One bias-corrected Adam update of every parameter.
pub fn adam_step(
    state: &mut AdamState,
    net: &mut FeedForwardNet,
    grads: &Gradients,
    cfg: &TrainConfig,
) -> Result<(), TrainError> {
    if !grads.matches(net) || !state.matches(net) {
        return Err(TrainError::InvalidConfig(
            "gradient or optimizer state shape does not match the network".into(),
        ));
    }
    state.step += 1;
    let t = state.step as f64;
    let m_corr = 1.0 - cfg.beta1.powf(t);
    let v_corr = 1.0 - cfg.beta2.powf(t);
    // m / m_corr folded into the step size.
    let lr_t = cfg.learning_rate / m_corr;
    for (((layer, g), m), v) in net
        .layers_mut()
        .iter_mut()
        .zip(&grads.layers)
        .zip(&mut state.first)
        .zip(&mut state.second)
    {
        for (((p, &gr), mi), vi) in layer
            .weights
            .as_mut_slice()
            .iter_mut()
            .zip(g.weights.as_slice())
            .zip(&mut m.weights)
            .zip(&mut v.weights)
        {
            adam_update(p, gr, mi, vi, lr_t, cfg, v_corr);
        }
        for (((p, &gr), mi), vi) in layer
            .bias
            .iter_mut()
            .zip(&g.bias)
            .zip(&mut m.bias)
            .zip(&mut v.bias)
        {
            adam_update(p, gr, mi, vi, lr_t, cfg, v_corr);
        }
        if let (Some(p), Some(gr)) = (layer.gain.as_mut(), g.gain) {
            adam_update(p, gr, &mut m.gain, &mut v.gain, lr_t, cfg, v_corr);
        }
    }
    Ok(())
}

/// Reusable activation buffers for batched passes.
#[derive(Default)]
struct Workspace {
    /// `acts[0]` is the batch input; `acts[i + 1]` is layer i's output.
    acts: Vec<Vec<f64>>,
    pre: Vec<Vec<f64>>,
    delta: Vec<f64>,
    delta_prev: Vec<f64>,
}

impl Workspace {
    fn forward(&mut self, net: &FeedForwardNet, rows: usize) {
        let layers = net.layers();
        let activation = net.activation();
        self.acts.resize_with(layers.len() + 1, Vec::new);
        self.pre.resize_with(layers.len(), Vec::new);
        for (i, layer) in layers.iter().enumerate() {
            let (n_in, n_out) = layer.weights.shape();
            let pre = &mut self.pre[i];
            pre.clear();
            for _ in 0..rows {
                pre.extend_from_slice(&layer.bias);
            }
            gemm_raw(
                1.0,
                View::raw(&self.acts[i], rows, n_in, false),
                View::normal(&layer.weights),
                1.0,
                pre,
                rows,
                n_out,
            );
            let out = &mut self.acts[i + 1];
            out.clear();
            if net.is_hidden(i) {
                let gain = layer.gain.unwrap_or(1.0);
                out.extend(pre.iter().map(|&z| activation.apply(gain * z)));
            } else {
                out.extend_from_slice(pre);
            }
        }
    }

    fn load_rows(&mut self, features: &Matrix, rows: impl Iterator<Item = usize>) -> usize {
        if self.acts.is_empty() {
            self.acts.push(Vec::new());
        }
        let input = &mut self.acts[0];
        input.clear();
        let mut count = 0;
        for r in rows {
            input.extend_from_slice(features.row(r));
            count += 1;
        }
        count
    }

    fn logits(&self) -> &[f64] {
        self.acts.last().map(Vec::as_slice).unwrap_or(&[])
    }

    /// Softmax cross-entropy of the current logits; leaves `d loss / d logits` in `delta`.
    fn loss_and_output_delta(&mut self, labels: &[usize], classes: usize) -> f64 {
        let rows = labels.len();
        let logits = self.acts.last().expect("forward ran");
        self.delta.clear();
        self.delta.resize(rows * classes, 0.0);
        let mut loss = 0.0;
        let scale = 1.0 / rows as f64;
        for (r, &label) in labels.iter().enumerate() {
            let z = &logits[r * classes..(r + 1) * classes];
            let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let d = &mut self.delta[r * classes..(r + 1) * classes];
            let mut sum = 0.0;
            for (dj, &zj) in d.iter_mut().zip(z) {
                *dj = (zj - max).exp();
                sum += *dj;
            }
            loss += sum.ln() - (z[label] - max);
            for dj in d.iter_mut() {
                *dj *= scale / sum;
            }
            d[label] -= scale;
        }
        loss * scale
    }

    fn backward(&mut self, net: &FeedForwardNet, rows: usize, grads: &mut Gradients) {
        let layers = net.layers();
        let activation = net.activation();
        for i in (0..layers.len()).rev() {
            let layer = &layers[i];
            let (n_in, n_out) = layer.weights.shape();
            let g = &mut grads.layers[i];
            gemm_raw(
                1.0,
                View::raw(&self.acts[i], rows, n_in, true),
                View::raw(&self.delta, rows, n_out, false),
                0.0,
                g.weights.as_mut_slice(),
                n_in,
                n_out,
            );
            g.bias.iter_mut().for_each(|b| *b = 0.0);
            for r in 0..rows {
                for (b, &d) in g.bias.iter_mut().zip(&self.delta[r * n_out..(r + 1) * n_out]) {
                    *b += d;
                }
            }
            if i == 0 {
                break;
            }
            // d loss / d y^(i-1)
            self.delta_prev.clear();
            self.delta_prev.resize(rows * n_in, 0.0);
            gemm_raw(
                1.0,
                View::raw(&self.delta, rows, n_out, false),
                View::transposed(&layer.weights),
                0.0,
                &mut self.delta_prev,
                rows,
                n_in,
            );
            // through the activation of layer i-1
            let below = &layers[i - 1];
            let gain = below.gain.unwrap_or(1.0);
            let mut gain_grad = 0.0;
            for (d, &z) in self.delta_prev.iter_mut().zip(&self.pre[i - 1]) {
                let local = *d * activation.derivative(gain * z);
                gain_grad += local * z;
                *d = local * gain;
            }
            if let Some(gg) = grads.layers[i - 1].gain.as_mut() {
                *gg = gain_grad;
            }
            std::mem::swap(&mut self.delta, &mut self.delta_prev);
        }
    }
}

fn check_data(net: &FeedForwardNet, d: &Dataset) -> Result<(), TrainError> {
    if d.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    if d.width() != net.spec().input_width {
        return Err(TrainError::WidthMismatch {
            expected: net.spec().input_width,
            found: d.width(),
        });
    }
    let outputs = net.spec().output_width;
    if let Some(&label) = d.labels().iter().find(|&&l| l >= outputs) {
        return Err(TrainError::LabelOutOfRange { label, outputs });
    }
    Ok(())
}

/// Mean cross-entropy of `net` on the given rows and its gradient.
pub fn gradients(
    net: &FeedForwardNet,
    features: &Matrix,
    labels: &[usize],
) -> Result<(f64, Gradients), TrainError> {
    if labels.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    if features.rows() != labels.len() || features.cols() != net.spec().input_width {
        return Err(TrainError::WidthMismatch {
            expected: net.spec().input_width,
            found: features.cols(),
        });
    }
    let outputs = net.spec().output_width;
    if let Some(&label) = labels.iter().find(|&&l| l >= outputs) {
        return Err(TrainError::LabelOutOfRange { label, outputs });
    }
    let mut ws = Workspace::default();
    let rows = ws.load_rows(features, 0..labels.len());
    ws.forward(net, rows);
    let loss = ws.loss_and_output_delta(labels, outputs);
    let mut grads = Gradients::zeros_like(net);
    ws.backward(net, rows, &mut grads);
    Ok((loss, grads))
}

/// Mean cross-entropy without gradients.
pub fn loss(net: &FeedForwardNet, features: &Matrix, labels: &[usize]) -> Result<f64, TrainError> {
    if labels.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    let mut ws = Workspace::default();
    let rows = ws.load_rows(features, 0..labels.len());
    ws.forward(net, rows);
    Ok(ws.loss_and_output_delta(labels, net.spec().output_width))
}

const EVAL_CHUNK: usize = 512;

/// Misclassification rate in percent (argmax logit vs label).
pub fn evaluate(net: &FeedForwardNet, d: &Dataset) -> Result<f64, TrainError> {
    check_data(net, d)?;
    let mut ws = Workspace::default();
    let classes = net.spec().output_width;
    let mut wrong = 0usize;
    let mut start = 0;
    while start < d.len() {
        let end = (start + EVAL_CHUNK).min(d.len());
        let rows = ws.load_rows(d.features(), start..end);
        ws.forward(net, rows);
        let logits = ws.logits();
        for (r, &label) in d.labels()[start..end].iter().enumerate() {
            if argmax(&logits[r * classes..(r + 1) * classes]) != label {
                wrong += 1;
            }
        }
        start = end;
    }
    Ok(100.0 * wrong as f64 / d.len() as f64)
}

/// Stateful training run: keeps the optimizer state and the shuffle position
/// so that successive calls continue one another.
pub struct Trainer {
    net: FeedForwardNet,
    cfg: TrainConfig,
    adam: AdamState,
    grads: Gradients,
    ws: Workspace,
    order: Vec<usize>,
    order_epoch: Option<u64>,
    steps: u64,
    epoch_losses: Vec<f64>,
    loss_sum: f64,
    loss_rows: usize,
}

impl Trainer {
    pub fn new(net: FeedForwardNet, cfg: TrainConfig) -> Result<Self, TrainError> {
        cfg.validate()?;
        Ok(Self {
            adam: AdamState::new(&net),
            grads: Gradients::zeros_like(&net),
            net,
            cfg,
            ws: Workspace::default(),
            order: Vec::new(),
            order_epoch: None,
            steps: 0,
            epoch_losses: Vec::new(),
            loss_sum: 0.0,
            loss_rows: 0,
        })
    }

    pub fn net(&self) -> &FeedForwardNet {
        &self.net
    }

    pub fn into_net(self) -> FeedForwardNet {
        self.net
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn epoch_losses(&self) -> &[f64] {
        &self.epoch_losses
    }

    /// Runs `ceil(epochs * |d| / batch_size)` optimizer steps.
    pub fn run(&mut self, d: &Dataset, epochs: f64) -> Result<(), TrainError> {
        check_data(&self.net, d)?;
        if !(epochs >= 0.0) || !epochs.is_finite() {
            return Err(TrainError::InvalidConfig(format!("epoch count {epochs}")));
        }
        let n = d.len();
        let bs = self.cfg.batch_size;
        let per_epoch = n.div_ceil(bs) as u64;
        let target = (epochs * n as f64 / bs as f64 - 1e-9).ceil().max(0.0) as u64;
        let classes = self.net.spec().output_width;
        let mut labels = Vec::with_capacity(bs);

        for _ in 0..target {
            let epoch = self.steps / per_epoch;
            let within = (self.steps % per_epoch) as usize;
            if self.order_epoch != Some(epoch) || self.order.len() != n {
                self.order.clear();
                self.order.extend(0..n);
                let mut rng = seed::rng(seed::derive(self.cfg.shuffle_seed, &[epoch]));
                self.order.shuffle(&mut rng);
                self.order_epoch = Some(epoch);
            }
            let batch = &self.order[within * bs..((within + 1) * bs).min(n)];
            labels.clear();
            labels.extend(batch.iter().map(|&i| d.labels()[i]));
            let rows = self.ws.load_rows(d.features(), batch.iter().copied());
            self.ws.forward(&self.net, rows);
            let batch_loss = self.ws.loss_and_output_delta(&labels, classes);
            if !batch_loss.is_finite() {
                return Err(TrainError::NonFiniteLoss { step: self.steps });
            }
            self.ws.backward(&self.net, rows, &mut self.grads);
            adam_step(&mut self.adam, &mut self.net, &self.grads, &self.cfg)?;
            self.steps += 1;
            self.loss_sum += batch_loss * rows as f64;
            self.loss_rows += rows;
            if self.steps % per_epoch == 0 {
                self.close_epoch();
            }
        }
        Ok(())
    }

    fn close_epoch(&mut self) {
        if self.loss_rows > 0 {
            self.epoch_losses.push(self.loss_sum / self.loss_rows as f64);
        }
        self.loss_sum = 0.0;
        self.loss_rows = 0;
    }

    fn finish(mut self, d_tr: &Dataset, d_v: Option<&Dataset>) -> Result<(FeedForwardNet, Metrics), TrainError> {
        self.close_epoch();
        let per_epoch = d_tr.len().div_ceil(self.cfg.batch_size) as f64;
        let metrics = Metrics {
            train_error: evaluate(&self.net, d_tr)?,
            validation_error: d_v.map(|d| evaluate(&self.net, d)).transpose()?,
            test_error: None,
            epoch_losses: std::mem::take(&mut self.epoch_losses),
            steps: self.steps,
            epochs: self.steps as f64 / per_epoch,
        };
        Ok((self.net, metrics))
    }
}

/// Partial training for `epochs` epochs (fractional allowed).
pub fn train(
    net: FeedForwardNet,
    d_tr: &Dataset,
    d_v: Option<&Dataset>,
    epochs: f64,
    cfg: &TrainConfig,
) -> Result<(FeedForwardNet, Metrics), TrainError> {
    if let Some(v) = d_v {
        check_data(&net, v)?;
    }
    let mut trainer = Trainer::new(net, cfg.clone())?;
    trainer.run(d_tr, epochs)?;
    trainer.finish(d_tr, d_v)
}

/// Trains epoch by epoch until the train accuracy reaches
/// `cfg.stop_at_train_accuracy` or `cfg.max_epochs_full` epochs have run.
pub fn train_full(
    net: FeedForwardNet,
    d_tr: &Dataset,
    d_v: Option<&Dataset>,
    cfg: &TrainConfig,
) -> Result<(FeedForwardNet, Metrics), TrainError> {
    if let Some(v) = d_v {
        check_data(&net, v)?;
    }
    let mut trainer = Trainer::new(net, cfg.clone())?;
    for _ in 0..cfg.max_epochs_full {
        trainer.run(d_tr, 1.0)?;
        if let Some(target) = cfg.stop_at_train_accuracy {
            let accuracy = 100.0 - evaluate(trainer.net(), d_tr)?;
            if accuracy >= target {
                break;
            }
        }
    }
    trainer.finish(d_tr, d_v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Role;
    use crate::network::{ActivationKind, NetworkSpec};

    fn tiny_net(activation: ActivationKind) -> FeedForwardNet {
        let spec = NetworkSpec::new(2, vec![3], 2, activation, 3).unwrap();
        FeedForwardNet::init(&spec).unwrap()
    }

    fn tiny_data() -> Dataset {
        let x = Matrix::from_rows(&[[0.0, 1.0], [1.0, 0.0], [0.5, 0.5], [-1.0, 2.0]]).unwrap();
        Dataset::new(x, vec![0, 1, 1, 0], 2, Role::Train, "tiny").unwrap()
    }

    #[test]
    fn zero_epochs_leave_parameters_alone() {
        let net = tiny_net(ActivationKind::TunableErf);
        let (trained, metrics) = train(net.clone(), &tiny_data(), None, 0.0, &TrainConfig::default()).unwrap();
        assert_eq!(trained, net);
        assert_eq!(metrics.steps, 0);
        assert_eq!(metrics.train_error, evaluate(&net, &tiny_data()).unwrap());
        assert!(metrics.validation_error.is_none());
    }

    #[test]
    fn step_count_for_fractional_epochs() {
        let cfg = TrainConfig {
            batch_size: 3,
            ..TrainConfig::default()
        };
        let d = tiny_data();
        let (_, m) = train(tiny_net(ActivationKind::Relu), &d, None, 0.5, &cfg).unwrap();
        assert_eq!(m.steps, 1);
        let (_, m) = train(tiny_net(ActivationKind::Relu), &d, None, 2.0, &cfg).unwrap();
        // ceil(2 * 4 / 3) steps; an epoch is 2 batches, the last one partial
        assert_eq!(m.steps, 3);
        assert_eq!(m.epoch_losses.len(), 2);
        assert!((m.epochs - 1.5).abs() < 1e-12);
    }

    #[test]
    fn output_bias_gradient_at_the_origin() {
        let mut net = tiny_net(ActivationKind::TunableErf);
        for l in net.layers_mut() {
            l.weights = Matrix::zeros(l.inputs(), l.neurons());
        }
        let d = tiny_data();
        let (loss, g) = gradients(&net, d.features(), d.labels()).unwrap();
        assert!((loss - 2f64.ln()).abs() < 1e-15);
        // softmax is uniform; the batch holds two samples of each class
        assert_eq!(g.layers[1].bias, vec![0.0, 0.0]);
        let skewed = [0usize, 0, 0, 1];
        let (_, g) = gradients(&net, d.features(), &skewed).unwrap();
        assert!((g.layers[1].bias[0] - (0.5 - 0.75)).abs() < 1e-15);
        assert!((g.layers[1].bias[1] - (0.5 - 0.25)).abs() < 1e-15);
    }

    #[test]
    fn relu_has_no_gain_gradient() {
        let d = tiny_data();
        let (_, g) = gradients(&tiny_net(ActivationKind::Relu), d.features(), d.labels()).unwrap();
        assert!(g.layers.iter().all(|l| l.gain.is_none()));
        let (_, g) = gradients(&tiny_net(ActivationKind::TunableErf), d.features(), d.labels()).unwrap();
        assert!(g.layers[0].gain.is_some());
        assert!(g.layers[1].gain.is_none());
    }

    #[test]
    fn zero_gradient_step_is_a_no_op_and_counts() {
        let mut net = tiny_net(ActivationKind::TunableErf);
        let before = net.clone();
        let mut state = AdamState::new(&net);
        let zeros = Gradients::zeros_like(&net);
        let cfg = TrainConfig::default();
        adam_step(&mut state, &mut net, &zeros, &cfg).unwrap();
        assert_eq!(net, before);
        assert_eq!(state.step(), 1);
        adam_step(&mut state, &mut net, &zeros, &cfg).unwrap();
        assert_eq!(state.step(), 2);
    }

    #[test]
    fn evaluate_constant_predictor() {
        let mut net = tiny_net(ActivationKind::Relu);
        for l in net.layers_mut() {
            l.weights = Matrix::zeros(l.inputs(), l.neurons());
        }
        net.layers_mut()[1].bias = vec![1.0, 0.0];
        let x = Matrix::from_rows(&[[3.0, 1.0], [0.0, 0.0]]).unwrap();
        let all_zero = Dataset::new(x.clone(), vec![0, 0], 2, Role::Test, "").unwrap();
        assert_eq!(evaluate(&net, &all_zero).unwrap(), 0.0);
        let all_one = Dataset::new(x, vec![1, 1], 2, Role::Test, "").unwrap();
        assert_eq!(evaluate(&net, &all_one).unwrap(), 100.0);
    }

    #[test]
    fn data_errors() {
        let net = tiny_net(ActivationKind::Relu);
        let empty = Dataset::new(Matrix::zeros(0, 2), vec![], 2, Role::Train, "").unwrap();
        assert_eq!(evaluate(&net, &empty), Err(TrainError::EmptyDataset));
        let wide = Dataset::new(Matrix::zeros(1, 3), vec![0], 2, Role::Train, "").unwrap();
        assert!(matches!(evaluate(&net, &wide), Err(TrainError::WidthMismatch { .. })));
        let many = Dataset::new(Matrix::zeros(1, 2), vec![4], 5, Role::Train, "").unwrap();
        assert!(matches!(evaluate(&net, &many), Err(TrainError::LabelOutOfRange { .. })));
    }

    #[test]
    fn nan_inputs_surface_as_non_finite_loss() {
        let x = Matrix::from_rows(&[[f64::NAN, 1.0]]).unwrap();
        let d = Dataset::new(x, vec![0], 2, Role::Train, "").unwrap();
        let err = train(tiny_net(ActivationKind::TunableErf), &d, None, 1.0, &TrainConfig::default()).unwrap_err();
        assert_eq!(err, TrainError::NonFiniteLoss { step: 0 });
    }

    #[test]
    fn config_validation() {
        let bad = TrainConfig {
            batch_size: 0,
            ..TrainConfig::default()
        };
        assert!(Trainer::new(tiny_net(ActivationKind::Relu), bad).is_err());
        let bad = TrainConfig {
            learning_rate: -1.0,
            ..TrainConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}

//! Feed-forward network representation.
//!
//! Layer `i` maps a row vector `y` to `f(gain * (y W + b))`. The last layer
//! emits raw logits. Weight matrices are stored `inputs x outputs`, so the
//! columns of `W` (and the entries of `b`) are the layer's neurons.

mod codec;

use std::collections::BTreeSet;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{LinalgError, Matrix};
use crate::seed;

pub use codec::{FormatError, FORMAT_VERSION, MAGIC};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetworkError {
    #[error("invalid network spec: {0}")]
    InvalidSpec(String),
    #[error("input has length {found}, network expects {expected}")]
    InputWidth { expected: usize, found: usize },
    #[error("layer index {index} out of range (network has {count})")]
    LayerOutOfRange { index: usize, count: usize },
    #[error("neuron {neuron} out of range for layer {layer} of width {width}")]
    NeuronOutOfRange {
        layer: usize,
        neuron: usize,
        width: usize,
    },
    #[error("removing {victims} neurons would empty layer {layer} of width {width}")]
    EmptyLayer {
        layer: usize,
        victims: usize,
        width: usize,
    },
    #[error("inconsistent parameters: {0}")]
    Inconsistent(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ActivationKind {
    /// `erf(gain * z)` with one trainable gain per hidden layer.
    TunableErf,
    Sigmoid,
    Relu,
}

impl ActivationKind {
    pub fn has_gain(self) -> bool {
        matches!(self, ActivationKind::TunableErf)
    }

    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            ActivationKind::TunableErf => libm::erf(z),
            ActivationKind::Sigmoid => 1.0 / (1.0 + (-z).exp()),
            ActivationKind::Relu => z.max(0.0),
        }
    }

    /// Derivative with respect to the (already gain-scaled) argument.
    #[inline]
    pub fn derivative(self, z: f64) -> f64 {
        match self {
            ActivationKind::TunableErf => std::f64::consts::FRAC_2_SQRT_PI * (-z * z).exp(),
            ActivationKind::Sigmoid => {
                let s = 1.0 / (1.0 + (-z).exp());
                s * (1.0 - s)
            }
            ActivationKind::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    pub(crate) fn code(self) -> u8 {
        match self {
            ActivationKind::TunableErf => 0,
            ActivationKind::Sigmoid => 1,
            ActivationKind::Relu => 2,
        }
    }

    pub(crate) fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(ActivationKind::TunableErf),
            1 => Some(ActivationKind::Sigmoid),
            2 => Some(ActivationKind::Relu),
            _ => None,
        }
    }
}

impl std::str::FromStr for ActivationKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "tunable-erf" | "erf" => Ok(ActivationKind::TunableErf),
            "sigmoid" => Ok(ActivationKind::Sigmoid),
            "relu" => Ok(ActivationKind::Relu),
            other => Err(format!("unknown activation '{other}'")),
        }
    }
}

/// Architecture of a network: widths, activation and initialization seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub input_width: usize,
    pub hidden_widths: Vec<usize>,
    pub output_width: usize,
    pub activation: ActivationKind,
    pub init_seed: u64,
}

impl NetworkSpec {
    pub fn new(
        input_width: usize,
        hidden_widths: Vec<usize>,
        output_width: usize,
        activation: ActivationKind,
        init_seed: u64,
    ) -> Result<Self, NetworkError> {
        let spec = Self {
            input_width,
            hidden_widths,
            output_width,
            activation,
            init_seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), NetworkError> {
        if self.hidden_widths.is_empty() {
            return Err(NetworkError::InvalidSpec("no hidden layers".into()));
        }
        if self.input_width == 0 || self.output_width == 0 {
            return Err(NetworkError::InvalidSpec(
                "input and output widths must be at least 1".into(),
            ));
        }
        if let Some(i) = self.hidden_widths.iter().position(|&w| w == 0) {
            return Err(NetworkError::InvalidSpec(format!(
                "hidden layer {} has width 0",
                i + 1
            )));
        }
        Ok(())
    }

    /// `[n_x, n_1, ..., n_m]`.
    pub fn widths(&self) -> Vec<usize> {
        let mut w = Vec::with_capacity(self.hidden_widths.len() + 2);
        w.push(self.input_width);
        w.extend_from_slice(&self.hidden_widths);
        w.push(self.output_width);
        w
    }

    /// Number of weight layers `m` (hidden layers plus the output layer).
    pub fn layer_count(&self) -> usize {
        self.hidden_widths.len() + 1
    }

    pub fn total_hidden(&self) -> usize {
        self.hidden_widths.iter().sum()
    }

    pub fn parameter_count(&self) -> usize {
        let w = self.widths();
        let gains = if self.activation.has_gain() {
            self.hidden_widths.len()
        } else {
            0
        };
        w.windows(2).map(|p| (p[0] + 1) * p[1]).sum::<usize>() + gains
    }

    pub fn with_seed(&self, init_seed: u64) -> Self {
        Self {
            init_seed,
            ..self.clone()
        }
    }

    pub fn with_hidden_widths(&self, hidden_widths: Vec<usize>) -> Self {
        Self {
            hidden_widths,
            ..self.clone()
        }
    }

    /// Scales every hidden width by `beta`, rounding down to a multiple of
    /// `granularity` and never going below `granularity`.
    pub fn resized(&self, beta: f64, granularity: usize) -> Result<Self, NetworkError> {
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(NetworkError::InvalidSpec(format!(
                "scale factor must be positive, got {beta}"
            )));
        }
        if granularity == 0 {
            return Err(NetworkError::InvalidSpec("granularity must be at least 1".into()));
        }
        let hidden = self
            .hidden_widths
            .iter()
            .map(|&w| scaled_width(w, beta, granularity))
            .collect();
        Ok(self.with_hidden_widths(hidden))
    }
}

/// `max(g, floor(w * beta / g) * g)`, tolerant to products like `205 * 1.2`
/// landing a hair below an integer.
pub(crate) fn scaled_width(width: usize, beta: f64, granularity: usize) -> usize {
    let scaled = (width as f64 * beta + 1e-9).floor() as usize;
    (scaled / granularity * granularity).max(granularity)
}

/// Parameters of one layer.
#[derive(Clone, Debug, PartialEq)]
pub struct Layer {
    /// `inputs x neurons`.
    pub weights: Matrix,
    /// One entry per neuron.
    pub bias: Vec<f64>,
    /// Activation gain; present on hidden layers of tunable-erf networks.
    pub gain: Option<f64>,
}

impl Layer {
    pub fn inputs(&self) -> usize {
        self.weights.rows()
    }

    pub fn neurons(&self) -> usize {
        self.weights.cols()
    }
}

/// Per-layer values recorded by [`FeedForwardNet::forward`].
#[derive(Clone, Debug, PartialEq)]
pub struct ForwardTrace {
    /// `z^(i) = y^(i-1) W^(i) + b^(i)` for every layer.
    pub pre_activations: Vec<Vec<f64>>,
    /// `y^(0) = x`, then every layer's output; the last entry is the logits.
    pub outputs: Vec<Vec<f64>>,
}

impl ForwardTrace {
    pub fn logits(&self) -> &[f64] {
        self.outputs.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeedForwardNet {
    spec: NetworkSpec,
    layers: Vec<Layer>,
}

impl FeedForwardNet {
    /// Glorot-uniform weights, zero biases, unit gains; a pure function of `spec`.
    pub fn init(spec: &NetworkSpec) -> Result<Self, NetworkError> {
        spec.validate()?;
        let mut rng = seed::rng(spec.init_seed);
        let widths = spec.widths();
        let hidden = spec.hidden_widths.len();
        let layers = widths
            .windows(2)
            .enumerate()
            .map(|(i, pair)| {
                let (fan_in, fan_out) = (pair[0], pair[1]);
                let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
                let weights = Matrix::from_fn(fan_in, fan_out, |_, _| rng.gen_range(-limit..limit));
                Layer {
                    weights,
                    bias: vec![0.0; fan_out],
                    gain: (i < hidden && spec.activation.has_gain()).then_some(1.0),
                }
            })
            .collect();
        Ok(Self {
            spec: spec.clone(),
            layers,
        })
    }

    /// Assembles a network from explicit parameters, checking every invariant.
    pub fn from_layers(spec: NetworkSpec, layers: Vec<Layer>) -> Result<Self, NetworkError> {
        spec.validate()?;
        let net = Self { spec, layers };
        net.check()?;
        Ok(net)
    }

    pub(crate) fn check(&self) -> Result<(), NetworkError> {
        let widths = self.spec.widths();
        if self.layers.len() != widths.len() - 1 {
            return Err(NetworkError::Inconsistent(format!(
                "{} layers for a spec with {}",
                self.layers.len(),
                widths.len() - 1
            )));
        }
        let hidden = self.spec.hidden_widths.len();
        for (i, layer) in self.layers.iter().enumerate() {
            if layer.weights.shape() != (widths[i], widths[i + 1]) {
                return Err(NetworkError::Inconsistent(format!(
                    "layer {} weights are {:?}, expected {:?}",
                    i + 1,
                    layer.weights.shape(),
                    (widths[i], widths[i + 1])
                )));
            }
            if layer.bias.len() != widths[i + 1] {
                return Err(NetworkError::Inconsistent(format!(
                    "layer {} bias has length {}",
                    i + 1,
                    layer.bias.len()
                )));
            }
            let wants_gain = i < hidden && self.spec.activation.has_gain();
            if layer.gain.is_some() != wants_gain {
                return Err(NetworkError::Inconsistent(format!(
                    "layer {} gain presence does not match the activation",
                    i + 1
                )));
            }
            let finite = layer.weights.is_finite()
                && layer.bias.iter().all(|v| v.is_finite())
                && layer.gain.map_or(true, f64::is_finite);
            if !finite {
                return Err(NetworkError::Inconsistent(format!(
                    "layer {} has non-finite parameters",
                    i + 1
                )));
            }
        }
        Ok(())
    }

    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub(crate) fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn layer_count(&self) -> usize {
        self.layers.len()
    }

    pub fn hidden_count(&self) -> usize {
        self.layers.len() - 1
    }

    pub fn activation(&self) -> ActivationKind {
        self.spec.activation
    }

    /// Whether layer `i` (0-based) applies the hidden activation.
    pub fn is_hidden(&self, i: usize) -> bool {
        i + 1 < self.layers.len()
    }

    pub fn forward(&self, x: &[f64]) -> Result<ForwardTrace, NetworkError> {
        if x.len() != self.spec.input_width {
            return Err(NetworkError::InputWidth {
                expected: self.spec.input_width,
                found: x.len(),
            });
        }
        let mut pre_activations = Vec::with_capacity(self.layers.len());
        let mut outputs = Vec::with_capacity(self.layers.len() + 1);
        outputs.push(x.to_vec());
        let activation = self.spec.activation;
        for (i, layer) in self.layers.iter().enumerate() {
            let input = outputs.last().expect("input pushed above");
            let mut z = layer.bias.clone();
            for (k, &yk) in input.iter().enumerate() {
                if yk == 0.0 {
                    continue;
                }
                for (zj, &w) in z.iter_mut().zip(layer.weights.row(k)) {
                    *zj += yk * w;
                }
            }
            let y = if self.is_hidden(i) {
                let gain = layer.gain.unwrap_or(1.0);
                z.iter().map(|&v| activation.apply(gain * v)).collect()
            } else {
                z.clone()
            };
            pre_activations.push(z);
            outputs.push(y);
        }
        Ok(ForwardTrace {
            pre_activations,
            outputs,
        })
    }

    /// Index of the largest logit.
    pub fn predict(&self, x: &[f64]) -> Result<usize, NetworkError> {
        let trace = self.forward(x)?;
        Ok(argmax(trace.logits()))
    }

    /// `[W^(i); b^(i)]` for layer `i` (0-based over all layers, output included).
    pub fn stacked_matrix(&self, i: usize) -> Result<Matrix, NetworkError> {
        let layer = self.layers.get(i).ok_or(NetworkError::LayerOutOfRange {
            index: i,
            count: self.layers.len(),
        })?;
        Ok(layer.weights.with_row_appended(&layer.bias)?)
    }

    /// Condition numbers of every stacked matrix, output layer included.
    pub fn condition_numbers(&self) -> Result<Vec<f64>, NetworkError> {
        (0..self.layers.len())
            .map(|i| Ok(crate::linalg::condition_number(&self.stacked_matrix(i)?)?))
            .collect()
    }

    /// Deletes neurons of hidden layer `layer` (0-based): columns of its
    /// weights, entries of its bias and rows of the next layer's weights.
    pub fn remove_neurons(&self, layer: usize, victims: &[usize]) -> Result<Self, NetworkError> {
        if layer >= self.hidden_count() {
            return Err(NetworkError::LayerOutOfRange {
                index: layer,
                count: self.hidden_count(),
            });
        }
        let width = self.layers[layer].neurons();
        let victims: BTreeSet<usize> = victims.iter().copied().collect();
        if let Some(&bad) = victims.iter().find(|&&v| v >= width) {
            return Err(NetworkError::NeuronOutOfRange {
                layer,
                neuron: bad,
                width,
            });
        }
        if victims.len() >= width {
            return Err(NetworkError::EmptyLayer {
                layer,
                victims: victims.len(),
                width,
            });
        }
        if victims.is_empty() {
            return Ok(self.clone());
        }
        let keep: Vec<usize> = (0..width).filter(|j| !victims.contains(j)).collect();

        let mut layers = self.layers.clone();
        let current = &mut layers[layer];
        current.weights = current.weights.select_columns(&keep);
        current.bias = keep.iter().map(|&j| current.bias[j]).collect();
        let next = &mut layers[layer + 1];
        next.weights = next.weights.select_rows(&keep);

        let mut spec = self.spec.clone();
        spec.hidden_widths[layer] = keep.len();
        Ok(Self { spec, layers })
    }

    /// Same network under a different spec seed (parameters untouched).
    pub(crate) fn with_spec_seed(mut self, init_seed: u64) -> Self {
        self.spec.init_seed = init_seed;
        self
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>, FormatError> {
        codec::encode(self)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, FormatError> {
        codec::decode(bytes)
    }

    pub fn to_json(&self) -> Result<String, FormatError> {
        codec::to_json(self)
    }

    pub fn from_json(text: &str) -> Result<Self, FormatError> {
        codec::from_json(text)
    }
}

pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

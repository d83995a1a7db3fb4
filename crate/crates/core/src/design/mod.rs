//! The three design procedures and the record they leave behind.

mod proportion;
mod scale;
mod squeeze;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::DataError;
use crate::linalg::LinalgError;
use crate::network::NetworkError;
use crate::trainer::{Metrics, TrainError};

pub use proportion::{proportion, ProportionConfig};
pub use scale::{objective, scale_search, select_model, ScaleConfig};
pub use squeeze::{squeeze, squeeze_retrain, squeeze_retrain_loop, SqueezeConfig};

#[derive(Debug, Error)]
pub enum DesignError {
    #[error("invalid design configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Data(#[from] DataError),
}

/// Serializes condition numbers with infinities spelled `"inf"`, since JSON
/// has no literal for them.
mod kappa_list {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Finite(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(values: &[f64], s: S) -> Result<S::Ok, S::Error> {
        values
            .iter()
            .map(|&v| {
                if v.is_finite() {
                    Repr::Finite(v)
                } else {
                    Repr::Text(if v.is_nan() { "nan" } else { "inf" }.into())
                }
            })
            .collect::<Vec<_>>()
            .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        Vec::<Repr>::deserialize(d)?
            .into_iter()
            .map(|r| match r {
                Repr::Finite(v) => Ok(v),
                Repr::Text(t) if t == "inf" => Ok(f64::INFINITY),
                Repr::Text(t) if t == "nan" => Ok(f64::NAN),
                Repr::Text(t) => Err(serde::de::Error::custom(format!("bad condition number '{t}'"))),
            })
            .collect()
    }
}

mod kappa {
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        super::kappa_list::serialize(std::slice::from_ref(v), s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        let v = super::kappa_list::deserialize(d)?;
        match v.as_slice() {
            [x] => Ok(*x),
            _ => Err(serde::de::Error::custom("expected a single condition number")),
        }
    }
}

/// One pass of the proportioning loop.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProportionIteration {
    pub iteration: usize,
    /// Hidden widths of the network trained in this iteration.
    pub widths: Vec<usize>,
    /// Condition numbers of every stacked matrix, output layer last.
    #[serde(with = "kappa_list")]
    pub condition_numbers: Vec<f64>,
    /// Neurons taken off each hidden layer for the next iteration.
    pub removals: Vec<usize>,
    pub train_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaleRecord {
    pub beta: f64,
    pub widths: Vec<usize>,
    /// Mean over the repeats.
    pub train_error: f64,
    /// Mean over the repeats.
    pub validation_error: f64,
    pub objective: f64,
    /// `(train, validation)` error of each repeat.
    pub runs: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SqueezeLayer {
    /// 0-based layer index.
    pub layer: usize,
    pub width_before: usize,
    #[serde(with = "kappa")]
    pub kappa_before: f64,
    #[serde(with = "kappa")]
    pub kappa_after: f64,
    /// Removed neuron positions within the layer as it was before this round.
    pub removed: Vec<usize>,
    /// Set when the layer exceeded the threshold but could not be reduced.
    pub flagged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SqueezeRound {
    pub round: usize,
    pub widths_before: Vec<usize>,
    pub widths_after: Vec<usize>,
    pub layers: Vec<SqueezeLayer>,
    /// Evaluation error (percent) right after squeezing, if measured.
    pub error_after_squeeze: Option<f64>,
    /// Evaluation error (percent) after retraining, if measured.
    pub error_after_retrain: Option<f64>,
}

impl SqueezeRound {
    pub fn removed_total(&self) -> usize {
        self.layers.iter().map(|l| l.removed.len()).sum()
    }
}

/// Chronological record of a design run.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DesignReport {
    pub proportion: Vec<ProportionIteration>,
    /// `Some(false)` when the proportioning loop hit its iteration cap.
    pub proportion_converged: Option<bool>,
    /// `(iteration, hidden layer)` pairs held up by the minimum width.
    pub floored_layers: Vec<(usize, usize)>,
    pub scale: Vec<ScaleRecord>,
    pub chosen_beta: Option<f64>,
    /// Metrics of the final full training, if one ran.
    pub full_train: Option<Metrics>,
    /// Evaluation error of the input network before any squeezing.
    pub error_before_squeeze: Option<f64>,
    pub squeeze: Vec<SqueezeRound>,
}

impl DesignReport {
    /// Appends the records of `other` after those of `self`.
    pub fn extend(&mut self, other: DesignReport) {
        self.proportion.extend(other.proportion);
        if other.proportion_converged.is_some() {
            self.proportion_converged = other.proportion_converged;
        }
        self.floored_layers.extend(other.floored_layers);
        self.scale.extend(other.scale);
        if other.chosen_beta.is_some() {
            self.chosen_beta = other.chosen_beta;
        }
        if other.full_train.is_some() {
            self.full_train = other.full_train;
        }
        if other.error_before_squeeze.is_some() && self.error_before_squeeze.is_none() {
            self.error_before_squeeze = other.error_before_squeeze;
        }
        let offset = self.squeeze.len();
        self.squeeze.extend(other.squeeze.into_iter().map(|mut r| {
            r.round += offset;
            r
        }));
    }

    pub fn to_json(&self) -> Result<String, serde_json::Error> {
        serde_json::to_string_pretty(self)
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

fn check_tau(tau: f64) -> Result<(), DesignError> {
    if tau > 1.0 && tau.is_finite() {
        Ok(())
    } else {
        Err(DesignError::InvalidConfig(format!(
            "tau must be a finite number above 1, got {tau}"
        )))
    }
}

use serde::{Deserialize, Serialize};

use super::{check_tau, DesignError, DesignReport, SqueezeLayer, SqueezeRound};
use crate::data::Dataset;
use crate::linalg::{condition_number, pivoted_qr};
use crate::network::FeedForwardNet;
use crate::seed;
use crate::trainer::{evaluate, train, TrainConfig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SqueezeConfig {
    pub tau: f64,
    /// Also examine the output layer. Its neurons are the classes, so it is
    /// only measured and flagged, never reduced.
    pub include_output_layer: bool,
    /// Epochs of retraining after each squeeze.
    pub retrain_epochs: f64,
}

impl Default for SqueezeConfig {
    fn default() -> Self {
        Self {
            tau: 25.0,
            include_output_layer: false,
            retrain_epochs: 0.0,
        }
    }
}

/// Number of leading pivot columns to keep, or 0 when no non-empty prefix
/// gets the condition number down to `tau`.
fn retained_columns(m: &crate::linalg::Matrix, tau: f64) -> Result<(Vec<usize>, usize), DesignError> {
    let qr = pivoted_qr(m, Some(1.0 / tau))?;
    let diag = qr.diagonal_magnitudes();
    let lead = diag.first().copied().unwrap_or(0.0);
    let threshold = lead / tau;
    let mut p = diag
        .iter()
        .position(|&d| d < threshold)
        .unwrap_or(qr.computed_cols)
        .min(qr.pivot.len());
    while p > 0 && condition_number(&m.select_columns(&qr.pivot[..p]))? > tau {
        p -= 1;
    }
    Ok((qr.pivot, p))
}

/// One squeeze pass over the hidden layers, first to last.
///
/// A layer whose stacked matrix has condition number above `tau` keeps only
/// its leading pivoted-QR columns: the prefix up to the first diagonal entry
/// below `|r00| / tau`, shortened further until the retained columns have
/// condition number at most `tau`. All other parameters are untouched.
pub fn squeeze(net: &FeedForwardNet, cfg: &SqueezeConfig) -> Result<(FeedForwardNet, SqueezeRound), DesignError> {
    check_tau(cfg.tau)?;
    let mut net = net.clone();
    let widths_before = net.spec().hidden_widths.clone();
    let mut layers = Vec::new();
    for i in 0..net.hidden_count() {
        let stacked = net.stacked_matrix(i)?;
        let width = stacked.cols();
        let kappa_before = condition_number(&stacked)?;
        let mut entry = SqueezeLayer {
            layer: i,
            width_before: width,
            kappa_before,
            kappa_after: kappa_before,
            removed: Vec::new(),
            flagged: false,
        };
        if kappa_before > cfg.tau {
            let (pivot, p) = retained_columns(&stacked, cfg.tau)?;
            if p == 0 {
                entry.flagged = true;
            } else if p < width {
                let mut removed = pivot[p..].to_vec();
                removed.sort_unstable();
                net = net.remove_neurons(i, &removed)?;
                entry.kappa_after = condition_number(&net.stacked_matrix(i)?)?;
                entry.removed = removed;
            }
        }
        layers.push(entry);
    }
    if cfg.include_output_layer {
        let i = net.hidden_count();
        let kappa = condition_number(&net.stacked_matrix(i)?)?;
        layers.push(SqueezeLayer {
            layer: i,
            width_before: net.spec().output_width,
            kappa_before: kappa,
            kappa_after: kappa,
            removed: Vec::new(),
            flagged: kappa > cfg.tau,
        });
    }
    let round = SqueezeRound {
        round: 0,
        widths_before,
        widths_after: net.spec().hidden_widths.clone(),
        layers,
        error_after_squeeze: None,
        error_after_retrain: None,
    };
    Ok((net, round))
}

/// [`squeeze`] followed by `cfg.retrain_epochs` epochs of training on `d_tr`.
/// Errors are measured on `d_eval` when given.
pub fn squeeze_retrain(
    net: &FeedForwardNet,
    d_tr: &Dataset,
    d_eval: Option<&Dataset>,
    cfg: &SqueezeConfig,
    train_cfg: &TrainConfig,
) -> Result<(FeedForwardNet, DesignReport), DesignError> {
    let mut report = DesignReport::default();
    if let Some(d) = d_eval {
        report.error_before_squeeze = Some(evaluate(net, d)?);
    }
    let (net, round) = squeeze(net, cfg)?;
    let (net, round) = finish_round(net, round, d_tr, d_eval, cfg.retrain_epochs, train_cfg)?;
    report.squeeze.push(round);
    Ok((net, report))
}

fn finish_round(
    net: FeedForwardNet,
    mut round: SqueezeRound,
    d_tr: &Dataset,
    d_eval: Option<&Dataset>,
    epochs: f64,
    train_cfg: &TrainConfig,
) -> Result<(FeedForwardNet, SqueezeRound), DesignError> {
    if let Some(d) = d_eval {
        round.error_after_squeeze = Some(evaluate(&net, d)?);
    }
    let net = if epochs > 0.0 {
        let tcfg = TrainConfig {
            shuffle_seed: seed::derive(train_cfg.shuffle_seed, &[round.round as u64]),
            ..train_cfg.clone()
        };
        train(net, d_tr, None, epochs, &tcfg)?.0
    } else {
        net
    };
    if let Some(d) = d_eval {
        round.error_after_retrain = Some(evaluate(&net, d)?);
    }
    Ok((net, round))
}

/// Alternates [`squeeze`] and `retrain_epochs` of training until a round
/// removes nothing or `max_rounds` rounds have run.
pub fn squeeze_retrain_loop(
    net: &FeedForwardNet,
    d_tr: &Dataset,
    d_eval: Option<&Dataset>,
    cfg: &SqueezeConfig,
    train_cfg: &TrainConfig,
    retrain_epochs: f64,
    max_rounds: usize,
) -> Result<(FeedForwardNet, DesignReport), DesignError> {
    check_tau(cfg.tau)?;
    let mut report = DesignReport::default();
    if let Some(d) = d_eval {
        report.error_before_squeeze = Some(evaluate(net, d)?);
    }
    let mut net = net.clone();
    for r in 0..max_rounds {
        let (squeezed, mut round) = squeeze(&net, cfg)?;
        round.round = r;
        if round.removed_total() == 0 {
            if let Some(d) = d_eval {
                let e = evaluate(&squeezed, d)?;
                round.error_after_squeeze = Some(e);
                round.error_after_retrain = Some(e);
            }
            report.squeeze.push(round);
            net = squeezed;
            break;
        }
        let (trained, round) = finish_round(squeezed, round, d_tr, d_eval, retrain_epochs, train_cfg)?;
        report.squeeze.push(round);
        net = trained;
    }
    Ok((net, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use crate::network::{ActivationKind, Layer, NetworkSpec};

    fn net_with_first_layer(weights: Matrix, bias: Vec<f64>) -> FeedForwardNet {
        let n = weights.cols();
        let spec = NetworkSpec::new(weights.rows(), vec![n], 2, ActivationKind::Relu, 0).unwrap();
        let out = Matrix::from_fn(n, 2, |i, j| (i + 2 * j) as f64 * 0.1 + 0.05);
        FeedForwardNet::from_layers(
            spec,
            vec![
                Layer {
                    weights,
                    bias,
                    gain: None,
                },
                Layer {
                    weights: out,
                    bias: vec![0.0, 0.0],
                    gain: None,
                },
            ],
        )
        .unwrap()
    }

    #[test]
    fn duplicate_neuron_is_removed() {
        // neuron 2 repeats neuron 0
        let w = Matrix::from_rows(&[[1.0, 0.0, 1.0], [0.0, 1.0, 0.0], [0.5, -0.5, 0.5]]).unwrap();
        let net = net_with_first_layer(w, vec![0.1, 0.2, 0.1]);
        let (small, round) = squeeze(&net, &SqueezeConfig::default()).unwrap();
        assert_eq!(small.spec().hidden_widths, vec![2]);
        assert_eq!(round.layers[0].removed.len(), 1);
        assert!(round.layers[0].kappa_after <= 25.0);
        assert!(round.layers[0].removed[0] == 0 || round.layers[0].removed[0] == 2);
    }

    #[test]
    fn well_conditioned_net_is_unchanged() {
        let net = net_with_first_layer(Matrix::identity(3), vec![0.0; 3]);
        let (same, round) = squeeze(&net, &SqueezeConfig::default()).unwrap();
        assert_eq!(same, net);
        assert_eq!(round.removed_total(), 0);
        assert!(!round.layers[0].flagged);
    }

    #[test]
    fn zero_layer_is_flagged_not_emptied() {
        let net = net_with_first_layer(Matrix::zeros(2, 3), vec![0.0; 3]);
        let (same, round) = squeeze(&net, &SqueezeConfig::default()).unwrap();
        assert_eq!(same, net);
        assert!(round.layers[0].flagged);
    }

    #[test]
    fn output_layer_only_reported() {
        let net = net_with_first_layer(Matrix::identity(3), vec![0.0; 3]);
        let cfg = SqueezeConfig {
            include_output_layer: true,
            ..SqueezeConfig::default()
        };
        let (same, round) = squeeze(&net, &cfg).unwrap();
        assert_eq!(same, net);
        assert_eq!(round.layers.len(), 2);
        assert!(round.layers[1].removed.is_empty());
    }

    #[test]
    fn zero_rounds_return_the_input() {
        let net = net_with_first_layer(Matrix::zeros(2, 3), vec![0.0; 3]);
        let d = crate::data::Dataset::new(Matrix::zeros(1, 2), vec![0], 2, crate::data::Role::Train, "").unwrap();
        let (out, report) =
            squeeze_retrain_loop(&net, &d, None, &SqueezeConfig::default(), &TrainConfig::default(), 1.0, 0).unwrap();
        assert_eq!(out, net);
        assert!(report.squeeze.is_empty());
    }
}

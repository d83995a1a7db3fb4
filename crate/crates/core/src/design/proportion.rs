use serde::{Deserialize, Serialize};

use super::{check_tau, DesignError, DesignReport, ProportionIteration};
use crate::data::Dataset;
use crate::linalg::{count_small_singular_values, pivoted_qr};
use crate::network::{FeedForwardNet, NetworkSpec};
use crate::seed;
use crate::trainer::{train, TrainConfig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProportionConfig {
    pub tau: f64,
    /// Partial-training epochs per iteration.
    pub eta: f64,
    /// New widths are rounded down to a multiple of this.
    pub granularity: usize,
    pub min_width: usize,
    pub max_iterations: usize,
    /// Continue from the previous iteration's weights (minus the neurons that
    /// pivoted QR ranks last) instead of a fresh initialization.
    pub warm_start: bool,
    /// Master seed for initializations and shuffles.
    pub seed: u64,
}

impl Default for ProportionConfig {
    fn default() -> Self {
        Self {
            tau: 25.0,
            eta: 1.0,
            granularity: 1,
            min_width: 1,
            max_iterations: 100,
            warm_start: false,
            seed: 0,
        }
    }
}

impl ProportionConfig {
    pub fn validate(&self) -> Result<(), DesignError> {
        check_tau(self.tau)?;
        if !(self.eta > 0.0) || !self.eta.is_finite() {
            return Err(DesignError::InvalidConfig(format!("eta must be positive, got {}", self.eta)));
        }
        if self.granularity == 0 || self.min_width == 0 {
            return Err(DesignError::InvalidConfig(
                "granularity and min_width must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Width after removing `p` neurons: a multiple of `granularity`, at least `min_width`.
fn shrunk_width(width: usize, p: usize, cfg: &ProportionConfig) -> usize {
    let kept = width.saturating_sub(p) / cfg.granularity * cfg.granularity;
    kept.max(cfg.min_width)
}

/// Shrinks over-conditioned hidden layers until every hidden stacked matrix
/// has condition number at most `tau` after `eta` epochs of training.
///
/// Returns the final spec, the partially trained network measured last and
/// the iteration log. When `max_iterations` runs out (or every offending layer
/// is already at the minimum width) the report has
/// `proportion_converged == Some(false)`.
pub fn proportion(
    spec: &NetworkSpec,
    d_tr: &Dataset,
    cfg: &ProportionConfig,
    train_cfg: &TrainConfig,
) -> Result<(NetworkSpec, FeedForwardNet, DesignReport), DesignError> {
    cfg.validate()?;
    spec.validate()?;
    let mut report = DesignReport::default();
    let mut spec = spec.clone();
    let mut carried: Option<FeedForwardNet> = None;
    let mut last = None;

    for iteration in 0..cfg.max_iterations {
        let it = iteration as u64;
        let init_seed = seed::derive(cfg.seed, &[it, 0]);
        let start = match carried.take() {
            Some(net) => net.with_spec_seed(init_seed),
            None => FeedForwardNet::init(&spec.with_seed(init_seed))?,
        };
        let tcfg = TrainConfig {
            shuffle_seed: seed::derive(cfg.seed, &[it, 1]),
            ..train_cfg.clone()
        };
        let (net, metrics) = train(start, d_tr, None, cfg.eta, &tcfg)?;
        let kappas = net.condition_numbers()?;

        let hidden = net.hidden_count();
        let mut removals = vec![0; hidden];
        let mut new_widths = spec.hidden_widths.clone();
        let mut offending = false;
        for i in 0..hidden {
            if kappas[i] <= cfg.tau {
                continue;
            }
            offending = true;
            let width = spec.hidden_widths[i];
            let p = count_small_singular_values(&net.stacked_matrix(i)?, cfg.tau)?;
            let target = shrunk_width(width, p, cfg);
            if target >= width {
                report.floored_layers.push((iteration, i));
            } else {
                removals[i] = width - target;
                new_widths[i] = target;
            }
        }
        report.proportion.push(ProportionIteration {
            iteration,
            widths: spec.hidden_widths.clone(),
            condition_numbers: kappas,
            removals: removals.clone(),
            train_error: metrics.train_error,
        });

        if !offending {
            report.proportion_converged = Some(true);
            return Ok((spec, net, report));
        }
        if removals.iter().all(|&r| r == 0) {
            // every offending layer is pinned at the minimum width
            report.proportion_converged = Some(false);
            return Ok((spec, net, report));
        }
        if cfg.warm_start {
            carried = Some(drop_pivot_tails(&net, &removals)?);
        }
        spec = spec.with_hidden_widths(new_widths);
        last = Some(net);
    }
    report.proportion_converged = Some(false);
    let net = match last {
        Some(net) => net,
        None => FeedForwardNet::init(&spec)?,
    };
    Ok((net.spec().clone(), net, report))
}

/// Removes from each hidden layer the given number of neurons, choosing those
/// ranked last by pivoted QR of the layer's stacked matrix.
fn drop_pivot_tails(net: &FeedForwardNet, removals: &[usize]) -> Result<FeedForwardNet, DesignError> {
    let mut net = net.clone();
    for (i, &count) in removals.iter().enumerate() {
        if count == 0 {
            continue;
        }
        let qr = pivoted_qr(&net.stacked_matrix(i)?, None)?;
        let width = qr.pivot.len();
        net = net.remove_neurons(i, &qr.pivot[width - count..])?;
    }
    Ok(net)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Role;
    use crate::linalg::Matrix;
    use crate::network::ActivationKind;

    fn blobs(n: usize) -> Dataset {
        let mut rng = seed::rng(5);
        use rand::Rng;
        let x = Matrix::from_fn(n, 2, |i, _| (if i % 2 == 0 { 2.0 } else { -2.0 }) + rng.gen_range(-1.0..1.0));
        Dataset::new(x, (0..n).map(|i| i % 2).collect(), 2, Role::Train, "blobs").unwrap()
    }

    #[test]
    fn shrink_rule() {
        let cfg = ProportionConfig {
            granularity: 5,
            min_width: 5,
            ..ProportionConfig::default()
        };
        assert_eq!(shrunk_width(300, 43, &cfg), 255);
        assert_eq!(shrunk_width(10, 9, &cfg), 5);
        assert_eq!(shrunk_width(10, 20, &cfg), 5);
        let unit = ProportionConfig::default();
        assert_eq!(shrunk_width(50, 6, &unit), 44);
    }

    #[test]
    fn well_conditioned_net_is_left_alone() {
        let d = blobs(40);
        let spec = NetworkSpec::new(2, vec![2], 2, ActivationKind::TunableErf, 1).unwrap();
        let cfg = ProportionConfig {
            tau: 1e12,
            eta: 0.5,
            ..ProportionConfig::default()
        };
        let (out, _, report) = proportion(&spec, &d, &cfg, &TrainConfig::default()).unwrap();
        assert_eq!(out.hidden_widths, spec.hidden_widths);
        assert_eq!(report.proportion.len(), 1);
        assert_eq!(report.proportion[0].removals, vec![0]);
        assert_eq!(report.proportion_converged, Some(true));
    }

    #[test]
    fn wide_layers_shrink_until_conditioned() {
        let d = blobs(60);
        let spec = NetworkSpec::new(2, vec![12, 12], 2, ActivationKind::TunableErf, 1).unwrap();
        let cfg = ProportionConfig {
            tau: 10.0,
            eta: 1.0,
            ..ProportionConfig::default()
        };
        let (out, net, report) = proportion(&spec, &d, &cfg, &TrainConfig::default()).unwrap();
        assert_eq!(report.proportion_converged, Some(true));
        assert!(out.total_hidden() < spec.total_hidden());
        let kappas = net.condition_numbers().unwrap();
        assert!(kappas[..2].iter().all(|&k| k <= 10.0), "{kappas:?}");
        let totals: Vec<usize> = report.proportion.iter().map(|r| r.widths.iter().sum()).collect();
        assert!(totals.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn warm_start_also_converges() {
        let d = blobs(60);
        let spec = NetworkSpec::new(2, vec![10], 2, ActivationKind::Sigmoid, 1).unwrap();
        let cfg = ProportionConfig {
            tau: 10.0,
            warm_start: true,
            ..ProportionConfig::default()
        };
        let (out, net, report) = proportion(&spec, &d, &cfg, &TrainConfig::default()).unwrap();
        assert_eq!(report.proportion_converged, Some(true));
        assert_eq!(net.spec().hidden_widths, out.hidden_widths);
    }

    #[test]
    fn rejects_bad_config() {
        let d = blobs(4);
        let spec = NetworkSpec::new(2, vec![3], 2, ActivationKind::Relu, 1).unwrap();
        let cfg = ProportionConfig {
            tau: 0.5,
            ..ProportionConfig::default()
        };
        assert!(proportion(&spec, &d, &cfg, &TrainConfig::default()).is_err());
    }
}

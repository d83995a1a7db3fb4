use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::{DesignError, DesignReport, ScaleRecord};
use crate::data::{Dataset, Role};
use crate::network::{FeedForwardNet, NetworkSpec};
use crate::seed;
use crate::trainer::{train, train_full, TrainConfig};

/// Seed path tag for the final full training.
const FULL_TRAIN: u64 = u64::MAX;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScaleConfig {
    /// Candidate factors, strictly increasing.
    pub betas: Vec<f64>,
    pub eta: f64,
    /// Trainings averaged per candidate.
    pub repeats: usize,
    pub granularity: usize,
    /// Try one more factor past the edge of the grid whenever an edge wins.
    pub auto_extend: bool,
    pub max_extensions: usize,
    pub seed: u64,
    /// Worker threads for the candidate trainings.
    pub jobs: usize,
}

impl Default for ScaleConfig {
    fn default() -> Self {
        Self {
            betas: vec![1.0],
            eta: 1.0,
            repeats: 5,
            granularity: 1,
            auto_extend: true,
            max_extensions: 3,
            seed: 0,
            jobs: 1,
        }
    }
}

impl ScaleConfig {
    pub fn validate(&self) -> Result<(), DesignError> {
        if self.betas.is_empty() {
            return Err(DesignError::InvalidConfig("no scale factors given".into()));
        }
        if self.betas.iter().any(|&b| !(b > 0.0) || !b.is_finite()) {
            return Err(DesignError::InvalidConfig("scale factors must be positive".into()));
        }
        if self.betas.windows(2).any(|w| w[0] >= w[1]) {
            return Err(DesignError::InvalidConfig(
                "scale factors must be sorted and distinct".into(),
            ));
        }
        if !(self.eta > 0.0) || !self.eta.is_finite() {
            return Err(DesignError::InvalidConfig(format!("eta must be positive, got {}", self.eta)));
        }
        if self.repeats == 0 || self.granularity == 0 {
            return Err(DesignError::InvalidConfig(
                "repeats and granularity must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// `2 * validation_error - train_error`.
pub fn objective(train_error: f64, validation_error: f64) -> f64 {
    2.0 * validation_error - train_error
}

/// The factor with the least objective; ties go to the smaller factor.
/// Rows are `(beta, train_error, validation_error)`.
pub fn select_model(table: &[(f64, f64, f64)]) -> Result<f64, DesignError> {
    table
        .iter()
        .map(|&(beta, tr, v)| (objective(tr, v), beta))
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)))
        .map(|(_, beta)| beta)
        .ok_or_else(|| DesignError::InvalidConfig("empty selection table".into()))
}

fn beta_key(beta: f64) -> u64 {
    beta.to_bits()
}

/// Partially trains `repeats` fresh networks per factor, in parallel.
fn evaluate_betas(
    base: &NetworkSpec,
    betas: &[f64],
    d_tr: &Dataset,
    d_v: &Dataset,
    cfg: &ScaleConfig,
    train_cfg: &TrainConfig,
) -> Result<Vec<ScaleRecord>, DesignError> {
    let specs = betas
        .iter()
        .map(|&b| base.resized(b, cfg.granularity))
        .collect::<Result<Vec<_>, _>>()?;
    let tasks: Vec<(usize, usize)> = (0..betas.len())
        .flat_map(|j| (0..cfg.repeats).map(move |r| (j, r)))
        .collect();
    let results: Mutex<Vec<Option<Result<(f64, f64), DesignError>>>> =
        Mutex::new((0..tasks.len()).map(|_| None).collect());
    let next = AtomicUsize::new(0);

    let work = || loop {
        let t = next.fetch_add(1, Ordering::Relaxed);
        let Some(&(j, r)) = tasks.get(t) else { break };
        let key = beta_key(betas[j]);
        let outcome = (|| {
            let spec = specs[j].with_seed(seed::derive(cfg.seed, &[key, r as u64, 0]));
            let tcfg = TrainConfig {
                shuffle_seed: seed::derive(cfg.seed, &[key, r as u64, 1]),
                ..train_cfg.clone()
            };
            let (_, m) = train(FeedForwardNet::init(&spec)?, d_tr, Some(d_v), cfg.eta, &tcfg)?;
            Ok((m.train_error, m.validation_error.unwrap_or(f64::NAN)))
        })();
        results.lock().expect("no worker panics while holding the lock")[t] = Some(outcome);
    };
    let jobs = cfg.jobs.clamp(1, tasks.len().max(1));
    if jobs == 1 {
        work();
    } else {
        std::thread::scope(|s| {
            for _ in 0..jobs {
                s.spawn(work);
            }
        });
    }

    let mut outcomes = results.into_inner().expect("workers finished").into_iter();
    let mut records = Vec::with_capacity(betas.len());
    for (j, &beta) in betas.iter().enumerate() {
        let runs = (0..cfg.repeats)
            .map(|_| outcomes.next().flatten().expect("every task ran"))
            .collect::<Result<Vec<_>, _>>()?;
        let q = runs.len() as f64;
        let train_error = runs.iter().map(|r| r.0).sum::<f64>() / q;
        let validation_error = runs.iter().map(|r| r.1).sum::<f64>() / q;
        records.push(ScaleRecord {
            beta,
            widths: specs[j].hidden_widths.clone(),
            train_error,
            validation_error,
            objective: objective(train_error, validation_error),
            runs,
        });
    }
    Ok(records)
}

/// Scales the hidden widths of `base` by each candidate factor, averages
/// `repeats` partial trainings per factor and fully trains the factor with
/// the least `2 * validation_error - train_error` on `d_tr` and `d_v` joined.
pub fn scale_search(
    base: &NetworkSpec,
    d_tr: &Dataset,
    d_v: &Dataset,
    cfg: &ScaleConfig,
    train_cfg: &TrainConfig,
) -> Result<(NetworkSpec, FeedForwardNet, DesignReport), DesignError> {
    cfg.validate()?;
    base.validate()?;
    if d_v.is_empty() {
        return Err(DesignError::InvalidConfig("validation set is empty".into()));
    }
    let mut records = evaluate_betas(base, &cfg.betas, d_tr, d_v, cfg, train_cfg)?;
    let mut extensions = 0;
    let chosen = loop {
        records.sort_by(|a, b| a.beta.total_cmp(&b.beta));
        let table: Vec<_> = records
            .iter()
            .map(|r| (r.beta, r.train_error, r.validation_error))
            .collect();
        let winner = select_model(&table)?;
        if !cfg.auto_extend || extensions >= cfg.max_extensions || records.len() < 2 {
            break winner;
        }
        let n = records.len();
        let candidate = if winner == records[0].beta {
            records[0].beta - (records[1].beta - records[0].beta)
        } else if winner == records[n - 1].beta {
            records[n - 1].beta + (records[n - 1].beta - records[n - 2].beta)
        } else {
            break winner;
        };
        if !(candidate > 1e-9) {
            break winner;
        }
        extensions += 1;
        records.extend(evaluate_betas(base, &[candidate], d_tr, d_v, cfg, train_cfg)?);
    };

    let spec = base
        .resized(chosen, cfg.granularity)?
        .with_seed(seed::derive(cfg.seed, &[FULL_TRAIN, 0]));
    let all = d_tr.concat(d_v, Role::Train)?;
    let tcfg = TrainConfig {
        shuffle_seed: seed::derive(cfg.seed, &[FULL_TRAIN, 1]),
        ..train_cfg.clone()
    };
    let (net, metrics) = train_full(FeedForwardNet::init(&spec)?, &all, None, &tcfg)?;
    let report = DesignReport {
        scale: records,
        chosen_beta: Some(chosen),
        full_train: Some(metrics),
        ..DesignReport::default()
    };
    Ok((spec, net, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tie_goes_to_smaller_beta() {
        let table = [(1.4, 5.0, 6.0), (1.0, 5.0, 6.0), (1.2, 5.0, 6.0)];
        assert_eq!(select_model(&table).unwrap(), 1.0);
    }

    #[test]
    fn picks_least_objective() {
        let table = [(1.0, 1.0, 4.0), (2.0, 3.0, 4.0), (3.0, 0.0, 3.0)];
        // objectives 7, 5, 6
        assert_eq!(select_model(&table).unwrap(), 2.0);
        assert!(select_model(&[]).is_err());
    }

    #[test]
    fn config_validation() {
        let ok = ScaleConfig {
            betas: vec![0.6, 0.8, 1.0],
            ..ScaleConfig::default()
        };
        assert!(ok.validate().is_ok());
        for betas in [vec![], vec![1.0, 1.0], vec![1.2, 1.0], vec![-1.0]] {
            let bad = ScaleConfig {
                betas,
                ..ScaleConfig::default()
            };
            assert!(bad.validate().is_err());
        }
    }
}

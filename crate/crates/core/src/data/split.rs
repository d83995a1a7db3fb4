//! Seeded train/validation splits.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{DataError, Dataset, Role};
use crate::seed;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum SplitStrategy {
    /// Exactly `per_class` validation rows from every class.
    Stratified { per_class: usize },
    /// `round(fraction * n)` validation rows drawn uniformly.
    Fraction { fraction: f64 },
}

/// Partitions `d` into (train, validation). Both keep the original row order.
pub fn split_validation(
    d: &Dataset,
    strategy: SplitStrategy,
    split_seed: u64,
) -> Result<(Dataset, Dataset), DataError> {
    let mut in_validation = vec![false; d.len()];
    match strategy {
        SplitStrategy::Stratified { per_class } => {
            let mut by_class = vec![Vec::new(); d.class_count()];
            for (i, &l) in d.labels().iter().enumerate() {
                by_class[l].push(i);
            }
            if let Some((class, members)) = by_class.iter().enumerate().find(|(_, m)| m.len() < per_class) {
                return Err(DataError::Invalid(format!(
                    "class {class} has {} rows, fewer than {per_class} requested",
                    members.len()
                )));
            }
            for (class, members) in by_class.iter_mut().enumerate() {
                let mut rng = seed::rng(seed::derive(split_seed, &[class as u64]));
                members.shuffle(&mut rng);
                for &i in &members[..per_class] {
                    in_validation[i] = true;
                }
            }
        }
        SplitStrategy::Fraction { fraction } => {
            if !(0.0..=1.0).contains(&fraction) {
                return Err(DataError::Invalid(format!(
                    "validation fraction {fraction} is outside [0, 1]"
                )));
            }
            let count = (fraction * d.len() as f64).round() as usize;
            let mut order: Vec<usize> = (0..d.len()).collect();
            order.shuffle(&mut seed::rng(split_seed));
            for &i in &order[..count] {
                in_validation[i] = true;
            }
        }
    }
    let (val, train): (Vec<usize>, Vec<usize>) = (0..d.len()).partition(|&i| in_validation[i]);
    Ok((d.subset(&train, Role::Train), d.subset(&val, Role::Validation)))
}

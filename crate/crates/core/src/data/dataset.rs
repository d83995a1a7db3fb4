use std::fmt;

use serde::{Deserialize, Serialize};

use super::DataError;
use crate::linalg::Matrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Train,
    Validation,
    Test,
}

impl Role {
    pub(crate) fn code(self) -> u8 {
        match self {
            Role::Train => 0,
            Role::Validation => 1,
            Role::Test => 2,
        }
    }

    pub(crate) fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Role::Train),
            1 => Some(Role::Validation),
            2 => Some(Role::Test),
            _ => None,
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::Train => "train",
            Role::Validation => "validation",
            Role::Test => "test",
        })
    }
}

/// Feature rows with integer class labels.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    features: Matrix,
    labels: Vec<usize>,
    class_count: usize,
    pub role: Role,
    pub provenance: String,
}

impl Dataset {
    pub fn new(
        features: Matrix,
        labels: Vec<usize>,
        class_count: usize,
        role: Role,
        provenance: impl Into<String>,
    ) -> Result<Self, DataError> {
        if features.rows() != labels.len() {
            return Err(DataError::Invalid(format!(
                "{} feature rows but {} labels",
                features.rows(),
                labels.len()
            )));
        }
        if let Some((i, &l)) = labels.iter().enumerate().find(|(_, &l)| l >= class_count) {
            return Err(DataError::Invalid(format!(
                "label {l} at row {i} is not below the class count {class_count}"
            )));
        }
        Ok(Self {
            features,
            labels,
            class_count,
            role,
            provenance: provenance.into(),
        })
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn width(&self) -> usize {
        self.features.cols()
    }

    /// Samples per class.
    pub fn class_histogram(&self) -> Vec<usize> {
        let mut h = vec![0; self.class_count];
        for &l in &self.labels {
            h[l] += 1;
        }
        h
    }

    /// Rows at `indices`, in that order.
    pub fn subset(&self, indices: &[usize], role: Role) -> Dataset {
        Dataset {
            features: self.features.select_rows(indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            class_count: self.class_count,
            role,
            provenance: self.provenance.clone(),
        }
    }

    /// First `n` rows (or all of them).
    pub fn head(&self, n: usize) -> Dataset {
        let idx: Vec<usize> = (0..n.min(self.len())).collect();
        self.subset(&idx, self.role)
    }

    /// Rows of `self` followed by rows of `other`.
    pub fn concat(&self, other: &Dataset, role: Role) -> Result<Dataset, DataError> {
        if self.width() != other.width() || self.class_count != other.class_count {
            return Err(DataError::Invalid(format!(
                "cannot join datasets of widths {}/{} and class counts {}/{}",
                self.width(),
                other.width(),
                self.class_count,
                other.class_count
            )));
        }
        let features = self
            .features
            .vstack(&other.features)
            .map_err(|e| DataError::Invalid(e.to_string()))?;
        let mut labels = self.labels.clone();
        labels.extend_from_slice(&other.labels);
        Ok(Dataset {
            features,
            labels,
            class_count: self.class_count,
            role,
            provenance: format!("{} + {}", self.provenance, other.provenance),
        })
    }
}

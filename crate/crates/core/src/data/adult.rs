//! UCI Adult Income census rows.
//!
//! Continuous fields are mapped to `min(100, 100 * v / U)` with a fixed upper
//! bound `U` per field. Categorical fields are one-hot encoded with a
//! vocabulary taken from the training file, sorted lexicographically; `?` is a
//! category like any other. A test row whose category never occurs in the
//! training file gets an all-zero block for that field and is counted.
//!
//! Feature layout: the six continuous fields in file order, then the one-hot
//! blocks in file order.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{read_file, DataError, Dataset, Role};
use crate::linalg::Matrix;

pub const FIELD_COUNT: usize = 15;
const LABEL_FIELD: usize = 14;

/// `(column, name, upper bound)`.
pub const CONTINUOUS: [(usize, &str, f64); 6] = [
    (0, "age", 100.0),
    (2, "fnlwgt", 2e6),
    (4, "education-num", 25.0),
    (10, "capital-gain", 2e5),
    (11, "capital-loss", 1e4),
    (12, "hours-per-week", 120.0),
];

/// `(column, name)`.
pub const CATEGORICAL: [(usize, &str); 8] = [
    (1, "workclass"),
    (3, "education"),
    (5, "marital-status"),
    (6, "occupation"),
    (7, "relationship"),
    (8, "race"),
    (9, "sex"),
    (13, "native-country"),
];

#[derive(Clone, Debug, PartialEq)]
pub struct AdultRecord {
    /// Raw continuous values in [`CONTINUOUS`] order.
    pub continuous: [f64; 6],
    /// Raw categories in [`CATEGORICAL`] order.
    pub categorical: [String; 8],
    /// 1 for income above 50K.
    pub label: usize,
    /// 1-based line in the source file.
    pub line: u64,
}

pub fn scale_continuous(value: f64, upper: f64) -> f64 {
    (100.0 * value / upper).min(100.0)
}

fn parse_label(raw: &str, line: u64) -> Result<usize, DataError> {
    let raw = raw.strip_suffix('.').unwrap_or(raw);
    if raw.starts_with(">50K") {
        Ok(1)
    } else if raw.starts_with("<=50K") {
        Ok(0)
    } else {
        Err(DataError::Csv {
            line,
            message: format!("unrecognised income label '{raw}'"),
        })
    }
}

/// Parses one Adult CSV file. Lines starting with `|` and blank lines are skipped.
pub fn parse_adult(bytes: &[u8]) -> Result<Vec<AdultRecord>, DataError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'|'))
        .flexible(true)
        .from_reader(bytes);
    let mut out = Vec::new();
    for result in reader.records() {
        let record = result.map_err(|e| DataError::Csv {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        if record.len() != FIELD_COUNT {
            return Err(DataError::Csv {
                line,
                message: format!("expected {FIELD_COUNT} fields, found {}", record.len()),
            });
        }
        let mut continuous = [0.0; 6];
        for (slot, &(col, name, _)) in continuous.iter_mut().zip(&CONTINUOUS) {
            let value: f64 = record[col].parse().map_err(|_| DataError::Csv {
                line,
                message: format!("{name} '{}' is not a number", &record[col]),
            })?;
            if !value.is_finite() || value < 0.0 {
                return Err(DataError::Csv {
                    line,
                    message: format!("{name} '{}' is out of range", &record[col]),
                });
            }
            *slot = value;
        }
        let categorical = CATEGORICAL.map(|(col, _)| record[col].to_string());
        out.push(AdultRecord {
            continuous,
            categorical,
            label: parse_label(&record[LABEL_FIELD], line)?,
            line,
        });
    }
    Ok(out)
}

/// Category vocabularies learned from the training rows.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdultEncoder {
    pub vocabularies: Vec<Vec<String>>,
}

impl AdultEncoder {
    pub fn fit(train: &[AdultRecord]) -> Self {
        let vocabularies = (0..CATEGORICAL.len())
            .map(|f| {
                train
                    .iter()
                    .map(|r| r.categorical[f].clone())
                    .collect::<BTreeSet<_>>()
                    .into_iter()
                    .collect()
            })
            .collect();
        Self { vocabularies }
    }

    pub fn width(&self) -> usize {
        CONTINUOUS.len() + self.vocabularies.iter().map(Vec::len).sum::<usize>()
    }

    /// Encodes rows; also returns how many categorical values were unknown.
    pub fn encode(
        &self,
        records: &[AdultRecord],
        role: Role,
        provenance: &str,
    ) -> Result<(Dataset, usize), DataError> {
        let width = self.width();
        let mut features = Matrix::zeros(records.len(), width);
        let mut unknown = 0;
        for (i, rec) in records.iter().enumerate() {
            let row = features.row_mut(i);
            for (slot, (&v, &(_, _, upper))) in row.iter_mut().zip(rec.continuous.iter().zip(&CONTINUOUS)) {
                *slot = scale_continuous(v, upper);
            }
            let mut offset = CONTINUOUS.len();
            for (vocab, value) in self.vocabularies.iter().zip(&rec.categorical) {
                match vocab.binary_search(value) {
                    Ok(k) => row[offset + k] = 1.0,
                    Err(_) => unknown += 1,
                }
                offset += vocab.len();
            }
        }
        let labels = records.iter().map(|r| r.label).collect();
        Ok((Dataset::new(features, labels, 2, role, provenance)?, unknown))
    }
}

/// Encoded training and test sets.
#[derive(Clone, Debug, PartialEq)]
pub struct Adult {
    pub train: Dataset,
    pub test: Dataset,
    pub encoder: AdultEncoder,
    /// Test-set categorical values absent from the training vocabulary.
    pub unknown_test_categories: usize,
}

pub fn encode_adult(train_bytes: &[u8], test_bytes: &[u8]) -> Result<Adult, DataError> {
    let train_rows = parse_adult(train_bytes)?;
    let test_rows = parse_adult(test_bytes)?;
    build(&train_rows, &test_rows)
}

fn build(train_rows: &[AdultRecord], test_rows: &[AdultRecord]) -> Result<Adult, DataError> {
    let encoder = AdultEncoder::fit(train_rows);
    let (train, _) = encoder.encode(train_rows, Role::Train, "adult train")?;
    let (test, unknown_test_categories) = encoder.encode(test_rows, Role::Test, "adult test")?;
    Ok(Adult {
        train,
        test,
        encoder,
        unknown_test_categories,
    })
}

pub fn load_adult(train_path: &Path, test_path: &Path) -> Result<Adult, DataError> {
    let train_rows = parse_adult(&read_file(train_path)?).map_err(|e| e.in_file(train_path))?;
    let test_rows = parse_adult(&read_file(test_path)?).map_err(|e| e.in_file(test_path))?;
    build(&train_rows, &test_rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TRAIN: &str = "\
50, Private, 200000, Bachelors, 13, Married-civ-spouse, Exec-managerial, Husband, White, Male, 0, 0, 120, United-States, >50K
20, ?, 100000, HS-grad, 9, Never-married, ?, Own-child, Black, Female, 0, 0, 150, ?, <=50K

";

    const TEST: &str = "\
|1x3 Cross validator
30, Never-worked, 2000000, HS-grad, 9, Never-married, ?, Own-child, Black, Female, 200000, 10000, 60, United-States, >50K.
";

    #[test]
    fn parses_training_rows() {
        let rows = parse_adult(TRAIN.as_bytes()).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].label, 1);
        assert_eq!(rows[1].label, 0);
        assert_eq!(rows[1].categorical[0], "?");
        assert_eq!(rows[0].line, 1);
    }

    #[test]
    fn scaling_examples() {
        assert_eq!(scale_continuous(50.0, 100.0), 50.0);
        assert_eq!(scale_continuous(120.0, 120.0), 100.0);
        assert_eq!(scale_continuous(150.0, 120.0), 100.0);
        assert!((scale_continuous(200000.0, 2e6) - 10.0).abs() < 1e-12);
    }

    #[test]
    fn encodes_with_training_vocabulary() {
        let adult = encode_adult(TRAIN.as_bytes(), TEST.as_bytes()).unwrap();
        // the two training rows differ in every categorical field
        assert_eq!(adult.encoder.width(), 6 + 8 * 2);
        assert_eq!(adult.train.width(), adult.encoder.width());
        let row = adult.train.features().row(0);
        assert_eq!(&row[..6], &[50.0, 10.0, 52.0, 0.0, 0.0, 100.0]);
        // workclass vocabulary sorted: "?" < "Private"
        assert_eq!(adult.encoder.vocabularies[0], vec!["?", "Private"]);
        assert_eq!(&row[6..8], &[0.0, 1.0]);
        assert_eq!(adult.test.len(), 1);
        assert_eq!(adult.test.labels(), &[1]);
        // "Never-worked" is unseen: zero block
        assert_eq!(&adult.test.features().row(0)[6..8], &[0.0, 0.0]);
        assert_eq!(adult.unknown_test_categories, 1);
        assert_eq!(&adult.test.features().row(0)[..6], &[30.0, 100.0, 36.0, 100.0, 100.0, 50.0]);
    }

    #[test]
    fn arity_and_number_errors_carry_the_line() {
        let err = parse_adult(b"1, 2, 3\n").unwrap_err();
        assert!(matches!(err, DataError::Csv { line: 1, .. }), "{err}");
        let bad = TRAIN.replacen("200000", "lots", 1);
        assert!(matches!(parse_adult(bad.as_bytes()), Err(DataError::Csv { line: 1, .. })));
        let bad = TRAIN.replacen("<=50K", "maybe", 1);
        assert!(matches!(parse_adult(bad.as_bytes()), Err(DataError::Csv { line: 2, .. })));
    }
}

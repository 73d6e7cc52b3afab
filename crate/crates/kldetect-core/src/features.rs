//! Dense feature matrices shared by the classifier and the evaluation
//! harness, plus conversions from each feature family. Feature combination is
//! column-wise concatenation before standardization.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::baselines::{BaselineVector, BowMatrix};
use crate::corpus::Corpus;
use crate::error::Error;
use crate::kl_features::{KlFeatureVector, KlStats};

/// A dense per-account feature matrix. Rows are aligned with `ids`, which are
/// always in sorted order; labels are the gold 0/1 assignments.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub feature_names: Vec<String>,
    pub ids: Vec<String>,
    pub labels: Vec<u8>,
    pub rows: Vec<Vec<f64>>,
}

impl FeatureMatrix {
    pub fn validate(&self) -> Result<(), Error> {
        if self.ids.len() != self.rows.len() || self.ids.len() != self.labels.len() {
            return Err(Error::ShapeMismatch(
                "ids, labels, and rows must have equal length".to_string(),
            ));
        }
        let dim = self.feature_names.len();
        if self.rows.iter().any(|r| r.len() != dim) {
            return Err(Error::ShapeMismatch("row width != feature_names".to_string()));
        }
        if self
            .rows
            .iter()
            .any(|r| r.iter().any(|v| !v.is_finite()))
        {
            return Err(Error::ShapeMismatch("non-finite feature value".to_string()));
        }
        Ok(())
    }

    /// Column-wise concatenation. All parts must agree on ids and labels.
    pub fn concat(parts: &[FeatureMatrix]) -> Result<FeatureMatrix, Error> {
        let first = parts
            .first()
            .ok_or_else(|| Error::EmptyInput("no matrices to concatenate".to_string()))?;
        let mut out = first.clone();
        for part in &parts[1..] {
            if part.ids != out.ids || part.labels != out.labels {
                return Err(Error::ShapeMismatch(
                    "concatenation requires identical account order and labels".to_string(),
                ));
            }
            out.feature_names.extend(part.feature_names.iter().cloned());
            for (row, extra) in out.rows.iter_mut().zip(&part.rows) {
                row.extend(extra.iter().copied());
            }
        }
        out.validate()?;
        Ok(out)
    }
}

fn label_of(corpus: &Corpus, id: &str) -> Result<u8, Error> {
    corpus
        .accounts
        .get(id)
        .ok_or_else(|| Error::UnknownAccount(id.to_string()))?
        .label
        .as_binary()
        .ok_or_else(|| Error::UnlabeledAccount(id.to_string()))
}

/// Assembles the four-column KL feature matrix; labels come from the corpus.
/// Vectors must already be sorted by user id.
pub fn kl_matrix(vectors: &[KlFeatureVector], corpus: &Corpus) -> Result<FeatureMatrix, Error> {
    let mut ids = Vec::with_capacity(vectors.len());
    let mut labels = Vec::with_capacity(vectors.len());
    let mut rows = Vec::with_capacity(vectors.len());
    for v in vectors {
        ids.push(v.user_id.clone());
        labels.push(label_of(corpus, &v.user_id)?);
        rows.push(v.stats.as_row().to_vec());
    }
    let m = FeatureMatrix {
        feature_names: KlStats::FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
        ids,
        labels,
        rows,
    };
    m.validate()?;
    Ok(m)
}

/// Assembles a matrix from one baseline family's vectors (already sorted by
/// user id, labels embedded).
pub fn baseline_matrix(vectors: &[BaselineVector]) -> Result<FeatureMatrix, Error> {
    let first = vectors
        .first()
        .ok_or_else(|| Error::EmptyInput("no baseline vectors".to_string()))?;
    let mut ids = Vec::with_capacity(vectors.len());
    let mut labels = Vec::with_capacity(vectors.len());
    let mut rows = Vec::with_capacity(vectors.len());
    for v in vectors {
        ids.push(v.user_id.clone());
        labels.push(
            v.label
                .as_binary()
                .ok_or_else(|| Error::UnlabeledAccount(v.user_id.clone()))?,
        );
        rows.push(v.values.clone());
    }
    let m = FeatureMatrix {
        feature_names: first.names.iter().map(|s| s.to_string()).collect(),
        ids,
        labels,
        rows,
    };
    m.validate()?;
    Ok(m)
}

/// Densifies a sparse bag-of-words matrix; labels come from the corpus and
/// column names are the vocabulary terms prefixed with `bow:`.
pub fn bow_matrix_dense(matrix: &BowMatrix, corpus: &Corpus) -> Result<FeatureMatrix, Error> {
    let dim = matrix.vocabulary.len();
    let mut ids = Vec::with_capacity(matrix.rows.len());
    let mut labels = Vec::with_capacity(matrix.rows.len());
    let mut rows = Vec::with_capacity(matrix.rows.len());
    for row in &matrix.rows {
        ids.push(row.user_id.clone());
        labels.push(label_of(corpus, &row.user_id)?);
        let mut dense = alloc::vec![0.0; dim];
        for &(col, value) in &row.entries {
            dense[col] = value;
        }
        rows.push(dense);
    }
    let m = FeatureMatrix {
        feature_names: matrix
            .vocabulary
            .iter()
            .map(|t| alloc::format!("bow:{t}"))
            .collect(),
        ids,
        labels,
        rows,
    };
    m.validate()?;
    Ok(m)
}

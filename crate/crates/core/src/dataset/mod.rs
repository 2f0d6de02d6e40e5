//! Instances, datasets and transductive problems.

mod libsvm;
mod split;
mod synth;

pub use libsvm::{parse_libsvm, parse_libsvm_str, read_libsvm, to_libsvm, write_libsvm};
pub use split::{random_split, stratified_folds};
pub use synth::{make_synthetic_figure, FIGURE_K};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Binary class label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    #[serde(rename = "+1")]
    Pos,
    #[serde(rename = "-1")]
    Neg,
}

impl Label {
    pub fn sign(self) -> f64 {
        match self {
            Label::Pos => 1.0,
            Label::Neg => -1.0,
        }
    }

    pub fn is_pos(self) -> bool {
        self == Label::Pos
    }
}

/// A sparse feature vector with 1-based indices and an optional label.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    features: Vec<(u32, f64)>,
    label: Option<Label>,
}

impl Instance {
    /// Builds an instance from `(index, value)` pairs. Indices must be 1-based
    /// and strictly ascending, values finite.
    pub fn new(features: Vec<(u32, f64)>, label: Option<Label>) -> Result<Self> {
        let mut prev = 0u32;
        for &(idx, val) in &features {
            if idx == 0 {
                return Err(Error::arg("feature indices are 1-based"));
            }
            if idx <= prev {
                return Err(Error::arg(format!(
                    "feature index {idx} does not follow {prev} in ascending order"
                )));
            }
            if !val.is_finite() {
                return Err(Error::arg(format!("feature {idx} has non-finite value")));
            }
            prev = idx;
        }
        Ok(Instance { features, label })
    }

    /// Builds an instance from a dense vector, dropping zero entries.
    pub fn from_dense(values: &[f64], label: Option<Label>) -> Result<Self> {
        let features = values
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(i, v)| (i as u32 + 1, *v))
            .collect();
        Instance::new(features, label)
    }

    pub fn features(&self) -> &[(u32, f64)] {
        &self.features
    }

    pub fn label(&self) -> Option<Label> {
        self.label
    }

    pub fn with_label(mut self, label: Option<Label>) -> Self {
        self.label = label;
        self
    }

    /// Largest feature index, 0 for an instance without features.
    pub fn max_index(&self) -> usize {
        self.features.last().map_or(0, |&(i, _)| i as usize)
    }

    /// `w · x`. Callers guarantee `max_index() <= w.len()`.
    pub fn dot(&self, w: &[f64]) -> f64 {
        self.features
            .iter()
            .map(|&(i, v)| w[i as usize - 1] * v)
            .sum()
    }

    pub fn to_dense(&self, dim: usize) -> Vec<f64> {
        let mut out = vec![0.0; dim];
        for &(i, v) in &self.features {
            out[i as usize - 1] = v;
        }
        out
    }
}

/// An ordered collection of instances sharing one ambient dimension.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    instances: Vec<Instance>,
    dim: usize,
}

impl Dataset {
    /// Dataset whose dimension is the largest feature index present.
    pub fn new(instances: Vec<Instance>) -> Self {
        let dim = instances.iter().map(Instance::max_index).max().unwrap_or(0);
        Dataset { instances, dim }
    }

    /// Dataset with an explicit dimension, which must cover every index.
    pub fn with_dim(instances: Vec<Instance>, dim: usize) -> Result<Self> {
        let seen = instances.iter().map(Instance::max_index).max().unwrap_or(0);
        if seen > dim {
            return Err(Error::arg(format!(
                "dimension {dim} is smaller than feature index {seen}"
            )));
        }
        Ok(Dataset { instances, dim })
    }

    pub fn instances(&self) -> &[Instance] {
        &self.instances
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn get(&self, i: usize) -> Option<&Instance> {
        self.instances.get(i)
    }

    /// Subset in the given order, keeping this dataset's dimension.
    pub fn select(&self, indices: &[usize]) -> Dataset {
        Dataset {
            instances: indices.iter().map(|&i| self.instances[i].clone()).collect(),
            dim: self.dim,
        }
    }

    /// Same instances embedded in a larger dimension.
    pub fn widen(&self, dim: usize) -> Result<Dataset> {
        Dataset::with_dim(self.instances.clone(), dim)
    }

    /// Copy with every label removed.
    pub fn unlabeled(&self) -> Dataset {
        Dataset {
            instances: self
                .instances
                .iter()
                .map(|x| x.clone().with_label(None))
                .collect(),
            dim: self.dim,
        }
    }

    pub fn all_labeled(&self) -> bool {
        self.instances.iter().all(|x| x.label.is_some())
    }

    /// Labels as `±1.0`, failing on the first unlabeled instance.
    pub fn signs(&self) -> Result<Vec<f64>> {
        self.instances
            .iter()
            .enumerate()
            .map(|(i, x)| {
                x.label
                    .map(Label::sign)
                    .ok_or_else(|| Error::arg(format!("instance {i} has no label")))
            })
            .collect()
    }

    /// (positives, negatives) among labeled instances.
    pub fn class_counts(&self) -> (usize, usize) {
        self.instances.iter().fold((0, 0), |(p, n), x| match x.label {
            Some(Label::Pos) => (p + 1, n),
            Some(Label::Neg) => (p, n + 1),
            None => (p, n),
        })
    }

    /// Row-major dense copy of the features, each row of length `dim`.
    pub fn dense_rows(&self, dim: usize) -> Vec<Vec<f64>> {
        self.instances.iter().map(|x| x.to_dense(dim)).collect()
    }
}

/// Labeled training data, an unlabeled test set, and the selection size `k`.
///
/// The test labels are retained for evaluation only; no solver reads them.
#[derive(Debug, Clone)]
pub struct TransductiveProblem {
    pub train: Dataset,
    pub test: Dataset,
    pub k: usize,
    pub c: f64,
}

impl TransductiveProblem {
    pub fn new(train: Dataset, test: Dataset, k: usize, c: f64) -> Result<Self> {
        if !train.all_labeled() {
            return Err(Error::arg("every training instance must be labeled"));
        }
        if k == 0 || k > test.len() {
            return Err(Error::arg(format!(
                "k = {k} must lie in 1..={}",
                test.len()
            )));
        }
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::arg(format!("C must be positive, got {c}")));
        }
        let dim = train.dim().max(test.dim());
        Ok(TransductiveProblem {
            train: train.widen(dim)?,
            test: test.widen(dim)?,
            k,
            c,
        })
    }

    pub fn dim(&self) -> usize {
        self.train.dim()
    }
}

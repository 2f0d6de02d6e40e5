//! Linear scoring, top-k selection and precision@k.
//!
//! An instance is predicted positive when its score is strictly greater than
//! zero; a score of exactly zero counts as negative.

use std::cmp::Ordering;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::dataset::{Dataset, Instance};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub w: Vec<f64>,
    pub b: f64,
}

impl LinearModel {
    pub fn new(w: Vec<f64>, b: f64) -> Self {
        LinearModel { w, b }
    }

    pub fn zeros(dim: usize) -> Self {
        LinearModel { w: vec![0.0; dim], b: 0.0 }
    }

    pub fn dim(&self) -> usize {
        self.w.len()
    }

    pub fn is_finite(&self) -> bool {
        self.b.is_finite() && self.w.iter().all(|v| v.is_finite())
    }

    /// `w · x + b`.
    pub fn score(&self, x: &Instance) -> Result<f64> {
        if x.max_index() > self.w.len() {
            return Err(Error::arg(format!(
                "feature index {} exceeds model dimension {}",
                x.max_index(),
                self.w.len()
            )));
        }
        Ok(x.dot(&self.w) + self.b)
    }

    pub fn scores(&self, data: &Dataset) -> Result<Vec<f64>> {
        if data.dim() > self.w.len() {
            return Err(Error::arg(format!(
                "dataset dimension {} exceeds model dimension {}",
                data.dim(),
                self.w.len()
            )));
        }
        Ok(data.instances().iter().map(|x| x.dot(&self.w) + self.b).collect())
    }

    pub fn count_positive(&self, data: &Dataset) -> Result<usize> {
        Ok(self.scores(data)?.into_iter().filter(|&s| s > 0.0).count())
    }

    /// Convex combination `t * self + (1 - t) * other`.
    pub fn lerp(&self, other: &LinearModel, t: f64) -> LinearModel {
        LinearModel {
            w: self
                .w
                .iter()
                .zip(&other.w)
                .map(|(a, b)| t * a + (1.0 - t) * b)
                .collect(),
            b: t * self.b + (1.0 - t) * other.b,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model serialization is infallible")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

#[derive(Serialize, Deserialize)]
struct ModelJson {
    w: Vec<f64>,
    b: f64,
    dim: usize,
}

impl Serialize for LinearModel {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ModelJson { w: self.w.clone(), b: self.b, dim: self.w.len() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for LinearModel {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let m = ModelJson::deserialize(d)?;
        if m.dim != m.w.len() {
            return Err(serde::de::Error::custom(format!(
                "dim {} does not match {} weights",
                m.dim,
                m.w.len()
            )));
        }
        Ok(LinearModel { w: m.w, b: m.b })
    }
}

/// Indices of the `k` largest scores, ties resolved toward the lower index,
/// returned in ascending index order.
pub fn top_k_of_scores(scores: &[f64], k: usize) -> Result<Vec<usize>> {
    if k > scores.len() {
        return Err(Error::arg(format!(
            "k = {k} exceeds the {} available instances",
            scores.len()
        )));
    }
    let mut order = descending_order(scores);
    order.truncate(k);
    order.sort_unstable();
    Ok(order)
}

/// Indices sorted by descending score, ties by ascending index.
pub(crate) fn descending_order(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    });
    order
}

pub fn top_k_set(model: &LinearModel, data: &Dataset, k: usize) -> Result<Vec<usize>> {
    top_k_of_scores(&model.scores(data)?, k)
}

/// Shifts the intercept so exactly `k` instances of `test` score above zero.
///
/// The new threshold is the midpoint of the k-th and (k+1)-th largest scores;
/// for `k = |test|` every score is lifted to at least 1.
pub fn adjust_intercept(model: &LinearModel, test: &Dataset, k: usize) -> Result<LinearModel> {
    let n = test.len();
    if k == 0 || k > n {
        return Err(Error::arg(format!("k = {k} must lie in 1..={n}")));
    }
    let scores = model.scores(test)?;
    let order = descending_order(&scores);
    let kth = scores[order[k - 1]];
    let b = if k == n {
        model.b - kth + 1.0
    } else {
        let next = scores[order[k]];
        if kth == next {
            return Err(Error::Tie { score: kth });
        }
        model.b - 0.5 * (kth + next)
    };
    let adjusted = LinearModel { w: model.w.clone(), b };
    // the midpoint can round onto one of the two scores when they are a few ulps apart
    if adjusted.count_positive(test)? != k {
        return Err(Error::Tie { score: kth });
    }
    Ok(adjusted)
}

/// Fraction of true positives among the `k` top-scoring test instances.
pub fn precision_at_k(model: &LinearModel, labeled_test: &Dataset, k: usize) -> Result<f64> {
    let n = labeled_test.len();
    if k == 0 || k > n {
        return Err(Error::arg(format!("k = {k} must lie in 1..={n}")));
    }
    let signs = labeled_test.signs()?;
    let top = top_k_set(model, labeled_test, k)?;
    let hits = top.iter().filter(|&&i| signs[i] > 0.0).count();
    Ok(hits as f64 / k as f64)
}

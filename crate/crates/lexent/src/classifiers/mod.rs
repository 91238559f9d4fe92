//! Pair classifiers: feature maps over (consequent, antecedent) vector
//! pairs, a cosine threshold rule, logistic regression, an RBF-kernel SVM,
//! and the grid-search loop shared by every model.
//!
//! Throughout, `h` is the consequent (candidate hypernym) vector and `w` the
//! antecedent vector, and concatenated features put `h` first.

mod kernel;
mod lbfgs;
mod linear;

pub use kernel::{train_rbf_svm, KernelModel};
pub use linear::{class_weights, train_logreg, LinearModel};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    Cosine,
    Concat,
    Diff,
    Asym,
    ConcatDiff,
    ConcatAsym,
    RbfConcat,
}

impl FeatureKind {
    pub fn output_dim(self, k: usize) -> usize {
        match self {
            FeatureKind::Cosine => 1,
            FeatureKind::Diff => k,
            FeatureKind::Concat | FeatureKind::Asym | FeatureKind::RbfConcat => 2 * k,
            FeatureKind::ConcatDiff => 3 * k,
            FeatureKind::ConcatAsym => 4 * k,
        }
    }
}

pub fn feature_map(kind: FeatureKind, h: &[f64], w: &[f64]) -> Result<Vec<f64>> {
    if h.len() != w.len() {
        return Err(Error::DimensionMismatch {
            expected: h.len(),
            got: w.len(),
        });
    }
    let diff = || h.iter().zip(w).map(|(a, b)| a - b);
    let out = match kind {
        FeatureKind::Cosine => vec![linalg::dot(h, w)],
        FeatureKind::Concat | FeatureKind::RbfConcat => h.iter().chain(w).copied().collect(),
        FeatureKind::Diff => diff().collect(),
        FeatureKind::Asym => diff().chain(diff().map(|d| d * d)).collect(),
        FeatureKind::ConcatDiff => h.iter().chain(w).copied().chain(diff()).collect(),
        FeatureKind::ConcatAsym => h
            .iter()
            .chain(w)
            .copied()
            .chain(diff())
            .chain(diff().map(|d| d * d))
            .collect(),
    };
    Ok(out)
}

/// Decision rule `similarity >= threshold`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CosineModel {
    pub threshold: f64,
    pub train_f1: f64,
}

impl CosineModel {
    pub fn predict(&self, similarity: f64) -> bool {
        similarity >= self.threshold
    }
}

/// Sweep thresholds from permissive to strict in one descending pass over
/// the sorted similarities; candidates are midpoints between consecutive
/// distinct values plus one value below the minimum (accept everything).
/// Ties in training F1 go to the lowest threshold.
pub fn fit_cosine_threshold(similarities: &[f64], y: &[bool]) -> Result<CosineModel> {
    if similarities.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: similarities.len(),
            got: y.len(),
        });
    }
    let total_pos = y.iter().filter(|&&l| l).count();
    if total_pos == 0 {
        return Err(Error::DegenerateLabels);
    }
    let mut order: Vec<usize> = (0..similarities.len()).collect();
    order.sort_by(|&a, &b| similarities[b].total_cmp(&similarities[a]));

    let mut best_f1 = f64::NEG_INFINITY;
    let mut best_threshold = 0.0;
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut idx = 0;
    while idx < order.len() {
        let value = similarities[order[idx]];
        while idx < order.len() && similarities[order[idx]] == value {
            if y[order[idx]] {
                tp += 1;
            } else {
                fp += 1;
            }
            idx += 1;
        }
        let threshold = if idx < order.len() {
            0.5 * (value + similarities[order[idx]])
        } else {
            value - 1.0
        };
        let fneg = total_pos - tp;
        let f1 = 2.0 * tp as f64 / (2.0 * tp as f64 + fp as f64 + fneg as f64);
        // >= keeps the lowest threshold among ties (we sweep downward).
        if f1 >= best_f1 {
            best_f1 = f1;
            best_threshold = threshold;
        }
    }
    Ok(CosineModel {
        threshold: best_threshold,
        train_f1: best_f1,
    })
}

/// One hyperparameter combination. `n` is the iteration count (always 1 for
/// non-iterative models); `gamma = None` means the 1/feature-dim default;
/// `c_final = None` shares `c` between the detector and final stages.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub c: f64,
    pub n: usize,
    pub gamma: Option<f64>,
    pub c_final: Option<f64>,
}

impl GridPoint {
    pub fn with_c(c: f64) -> GridPoint {
        GridPoint {
            c,
            n: 1,
            gamma: None,
            c_final: None,
        }
    }

    fn sort_key(&self) -> (f64, usize, f64, f64) {
        (
            self.c,
            self.n,
            self.gamma.unwrap_or(f64::NEG_INFINITY),
            self.c_final.unwrap_or(f64::NEG_INFINITY),
        )
    }
}

#[derive(Debug)]
pub struct GridOutcome<M> {
    pub point: GridPoint,
    pub model: M,
    pub score: f64,
    /// True when the score came from the training set because no validation
    /// pairs were available.
    pub used_train_fallback: bool,
}

/// Evaluate every grid point and keep the best score. Points are visited in
/// ascending (C, n, gamma, c_final) order and only strictly better scores
/// replace the incumbent, so ties resolve to the smallest C, then smallest n.
pub fn grid_search<M>(
    grid: &[GridPoint],
    used_train_fallback: bool,
    mut fit_and_score: impl FnMut(&GridPoint) -> Result<(M, f64)>,
) -> Result<GridOutcome<M>> {
    if grid.is_empty() {
        return Err(Error::invalid("empty hyperparameter grid"));
    }
    let mut sorted: Vec<GridPoint> = grid.to_vec();
    sorted.sort_by(|a, b| {
        let (ac, an, ag, af) = a.sort_key();
        let (bc, bn, bg, bf) = b.sort_key();
        ac.total_cmp(&bc)
            .then(an.cmp(&bn))
            .then(ag.total_cmp(&bg))
            .then(af.total_cmp(&bf))
    });
    if used_train_fallback {
        log::warn!("empty validation set: grid search falling back to the training metric");
    }
    let mut best: Option<GridOutcome<M>> = None;
    for point in &sorted {
        let (model, score) = fit_and_score(point)?;
        let better = match &best {
            None => true,
            Some(b) => score > b.score,
        };
        if better {
            best = Some(GridOutcome {
                point: *point,
                model,
                score,
                used_train_fallback,
            });
        }
    }
    Ok(best.expect("nonempty grid produces an outcome"))
}

//! Interpretability helpers: what does a detector direction point at?
//!
//! A fitted detector is a unit vector in the reduced word space. Its meaning
//! is read off by ranking context (or word) vectors by cosine against it,
//! and by checking how much of the original hyperplane the consequent and
//! antecedent halves explain.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hfeature::HFeatureModel;
use crate::linalg;
use crate::vecspace::{Side, VectorSpace};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NeighborEntry {
    pub rank: usize,
    pub token: String,
    pub cosine: f64,
    /// Whether the token occurs in the dataset the model was analyzed with.
    pub in_dataset: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NeighborReport {
    pub title: String,
    pub side: Side,
    pub entries: Vec<NeighborEntry>,
}

impl NeighborReport {
    /// Render as a Markdown table; dataset tokens are bold.
    pub fn to_markdown(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("### {}\n\n", self.title));
        out.push_str("| rank | token | cosine |\n|---:|---|---:|\n");
        for e in &self.entries {
            let token = if e.in_dataset {
                format!("**{}**", e.token)
            } else {
                e.token.clone()
            };
            out.push_str(&format!("| {} | {} | {:.3} |\n", e.rank, token, e.cosine));
        }
        out
    }

    /// Render as TSV with a fixed header.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("rank\ttoken\tcosine\tin_dataset\n");
        for e in &self.entries {
            out.push_str(&format!(
                "{}\t{}\t{:.8e}\t{}\n",
                e.rank,
                e.token,
                e.cosine,
                if e.in_dataset { 1 } else { 0 }
            ));
        }
        out
    }
}

/// Rank all tokens on one side of the space by cosine against a direction.
/// Zero (dead) vectors are skipped; cosine ties break lexicographically.
pub fn nearest(
    space: &VectorSpace,
    direction: &[f64],
    side: Side,
    top: usize,
) -> Result<Vec<NeighborEntry>> {
    if direction.len() != space.k() {
        return Err(Error::DimensionMismatch {
            expected: space.k(),
            got: direction.len(),
        });
    }
    let mut unit = direction.to_vec();
    if !linalg::normalize(&mut unit, 1e-12) {
        return Err(Error::ZeroDirection);
    }
    let tokens = match side {
        Side::Word => space.word_tokens(),
        Side::Context => space.context_tokens(),
    };
    let mut scored: Vec<(String, f64)> = tokens
        .iter()
        .filter_map(|t| {
            space
                .lookup(t, side)
                .map(|v| (t.clone(), linalg::dot(v, &unit)))
        })
        .collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    scored.truncate(top);
    Ok(scored
        .into_iter()
        .enumerate()
        .map(|(i, (token, cosine))| NeighborEntry {
            rank: i + 1,
            token,
            cosine,
            in_dataset: false,
        })
        .collect())
}

/// Mark which neighbor tokens appear in a dataset vocabulary.
pub fn mark_dataset(entries: &mut [NeighborEntry], vocabulary: &std::collections::HashSet<String>) {
    for e in entries {
        e.in_dataset = vocabulary.contains(&e.token);
    }
}

/// How far a linear Concat hyperplane deviates from the sum of its halves'
/// responses: |p' <H, w> - (h' H + w' w)| where p = <h, w>. Exactly zero in
/// exact arithmetic; bounded by accumulated rounding in floats. The
/// intercept plays no role in the decomposition.
pub fn decomposition_residual(weights: &[f64], h: &[f64], w: &[f64]) -> Result<f64> {
    if weights.len() != h.len() + w.len() {
        return Err(Error::DimensionMismatch {
            expected: h.len() + w.len(),
            got: weights.len(),
        });
    }
    let concat: Vec<f64> = h.iter().chain(w).copied().collect();
    let full = linalg::dot(weights, &concat);
    let halves = linalg::dot(&weights[..h.len()], h) + linalg::dot(&weights[h.len()..], w);
    Ok((full - halves).abs())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IterationContexts {
    pub iteration: usize,
    pub neighbors: Vec<NeighborEntry>,
}

/// For each detector in a fitted model, the top context vectors by cosine.
/// This is the per-iteration view of what each rejection removed.
pub fn per_iteration_contexts(
    model: &HFeatureModel,
    space: &VectorSpace,
    top: usize,
) -> Result<Vec<IterationContexts>> {
    model
        .detectors
        .iter()
        .map(|d| {
            Ok(IterationContexts {
                iteration: d.iteration,
                neighbors: nearest(space, &d.direction, Side::Context, top)?,
            })
        })
        .collect()
}

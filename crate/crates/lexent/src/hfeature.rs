//! The iterative entailment model.
//!
//! Each iteration trains a Concat logistic classifier on the current word
//! vectors, takes the consequent half of its hyperplane as a unit detector
//! direction, records a four-valued feature for every pair, and then rejects
//! the detector direction from every vector in the training vocabulary
//! (renormalizing to unit length). After `n` iterations the per-pair features
//! are stacked into a 4n-vector and one RBF-kernel classifier makes the final
//! decision. The iterative stage is purely a feature extractor: it never sees
//! the final classifier and the final classifier never moves the vectors.
//!
//! Prediction replays the stored detector sequence on the incoming pair's
//! vectors, so a fitted model needs only its detectors and the final
//! classifier, not a transformed copy of the space.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::classifiers::{train_logreg, train_rbf_svm, KernelModel, LinearModel};
use crate::datasets::LabeledPair;
use crate::error::{Error, Result};
use crate::eval::f1;
use crate::linalg::{self, DenseMatrix};
use crate::util;
use crate::vecspace::{Side, VectorSpace};

const EXHAUSTED_EPS: f64 = 1e-9;
const NULL_DIRECTION_EPS: f64 = 1e-12;

/// Which meta-feature slots the final classifier sees. Slot 1 is the pair
/// similarity, slots 2 and 3 the detector responses, slot 4 the inclusion
/// difference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct AblationMask {
    pub drop_similarity: bool,
    pub drop_detectors: bool,
    pub drop_inclusion: bool,
}

impl AblationMask {
    pub fn none() -> AblationMask {
        AblationMask::default()
    }

    pub fn validate(&self) -> Result<()> {
        if self.drop_similarity && self.drop_detectors && self.drop_inclusion {
            return Err(Error::invalid("ablation mask drops every feature slot"));
        }
        Ok(())
    }

    /// Indices into the per-iteration 4-slot group that survive the mask.
    pub fn kept_slots(&self) -> Vec<usize> {
        let mut slots = Vec::new();
        if !self.drop_similarity {
            slots.push(0);
        }
        if !self.drop_detectors {
            slots.extend([1, 2]);
        }
        if !self.drop_inclusion {
            slots.push(3);
        }
        slots
    }

    pub fn label(&self) -> String {
        let mut dropped = Vec::new();
        if self.drop_similarity {
            dropped.push("similarity");
        }
        if self.drop_detectors {
            dropped.push("detectors");
        }
        if self.drop_inclusion {
            dropped.push("inclusion");
        }
        if dropped.is_empty() {
            "full".to_string()
        } else {
            format!("-{}", dropped.join(",-"))
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct HFeatureConfig {
    /// Number of detector iterations.
    pub n: usize,
    /// Regularization for the per-iteration Concat classifiers.
    pub c_detector: f64,
    /// Regularization for the final kernel classifier.
    pub c_final: f64,
    /// RBF bandwidth; `None` uses 1 / feature dimension.
    pub gamma: Option<f64>,
    /// Reject consequent vectors by the consequent half and antecedent
    /// vectors by the antecedent half, instead of the consequent half for
    /// both. Meta-features always use the consequent-half detector.
    pub per_half_rejection: bool,
    pub mask: AblationMask,
}

impl Default for HFeatureConfig {
    fn default() -> HFeatureConfig {
        HFeatureConfig {
            n: 4,
            c_detector: 1.0,
            c_final: 1.0,
            gamma: None,
            per_half_rejection: false,
            mask: AblationMask::none(),
        }
    }
}

/// One iteration's detector: a unit direction in embedding space plus the
/// linear model it was carved from.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Detector {
    pub direction: Vec<f64>,
    pub source_model: LinearModel,
    pub iteration: usize,
}

impl Detector {
    /// The antecedent-half direction of the source hyperplane, if usable.
    fn w_direction(&self) -> Result<Vec<f64>> {
        let k = self.direction.len();
        let mut w = self.source_model.weights[k..2 * k].to_vec();
        if !linalg::normalize(&mut w, NULL_DIRECTION_EPS) {
            return Err(Error::NullDetector);
        }
        Ok(w)
    }
}

/// Component of `x` along `p`: ((x'p) / (p'p)) p.
pub fn project(x: &[f64], p: &[f64]) -> Result<Vec<f64>> {
    if x.len() != p.len() {
        return Err(Error::DimensionMismatch {
            expected: p.len(),
            got: x.len(),
        });
    }
    let pp = linalg::dot(p, p);
    if pp < NULL_DIRECTION_EPS {
        return Err(Error::ZeroDirection);
    }
    let scale = linalg::dot(x, p) / pp;
    Ok(p.iter().map(|v| scale * v).collect())
}

/// Remove the `p` component from `x` and rescale to unit length. A residual
/// below 1e-9 collapses to the zero vector and reports the input as
/// exhausted.
pub fn reject_and_renormalize(x: &[f64], p: &[f64]) -> Result<(Vec<f64>, bool)> {
    let proj = project(x, p)?;
    let mut r: Vec<f64> = x.iter().zip(&proj).map(|(a, b)| a - b).collect();
    if linalg::norm(&r) < EXHAUSTED_EPS {
        return Ok((vec![0.0; x.len()], true));
    }
    linalg::normalize(&mut r, EXHAUSTED_EPS);
    Ok((r, false))
}

/// The four per-iteration values for a pair, computed on the iteration's
/// vectors before that iteration's rejection:
/// similarity, detector response of each word, and their difference.
pub fn meta_features(h: &[f64], w: &[f64], detector: &Detector) -> Result<[f64; 4]> {
    let p = &detector.direction;
    if h.len() != p.len() || w.len() != p.len() {
        return Err(Error::DimensionMismatch {
            expected: p.len(),
            got: if h.len() != p.len() { h.len() } else { w.len() },
        });
    }
    let slot1 = linalg::dot(h, w);
    let slot2 = linalg::dot(h, p);
    let slot3 = linalg::dot(w, p);
    Ok([slot1, slot2, slot3, slot2 - slot3])
}

/// Per-role working copies of the training vocabulary's vectors.
struct TokenVectors {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
    h_vecs: Vec<Vec<f64>>,
    w_vecs: Vec<Vec<f64>>,
    h_exhausted: Vec<bool>,
    w_exhausted: Vec<bool>,
}

impl TokenVectors {
    fn build(pairs: &[LabeledPair], space: &VectorSpace) -> TokenVectors {
        let mut tokens = Vec::new();
        let mut index = HashMap::new();
        let mut h_vecs = Vec::new();
        for p in pairs {
            for t in [&p.antecedent, &p.consequent] {
                if !index.contains_key(t.as_str()) {
                    let v = space
                        .lookup(t, Side::Word)
                        .expect("pairs pre-filtered to vocabulary")
                        .to_vec();
                    index.insert(t.clone(), tokens.len());
                    tokens.push(t.clone());
                    h_vecs.push(v);
                }
            }
        }
        let w_vecs = h_vecs.clone();
        let n = tokens.len();
        TokenVectors {
            tokens,
            index,
            h_vecs,
            w_vecs,
            h_exhausted: vec![false; n],
            w_exhausted: vec![false; n],
        }
    }

    fn idx(&self, token: &str) -> usize {
        self.index[token]
    }

    fn all_exhausted(&self) -> bool {
        self.h_exhausted.iter().all(|&e| e) && self.w_exhausted.iter().all(|&e| e)
    }

    fn reject_all(&mut self, p_h: &[f64], p_w: &[f64]) -> Result<()> {
        for i in 0..self.tokens.len() {
            if !self.h_exhausted[i] {
                let (v, ex) = reject_and_renormalize(&self.h_vecs[i], p_h)?;
                self.h_vecs[i] = v;
                self.h_exhausted[i] = ex;
            }
            if !self.w_exhausted[i] {
                let (v, ex) = reject_and_renormalize(&self.w_vecs[i], p_w)?;
                self.w_vecs[i] = v;
                self.w_exhausted[i] = ex;
            }
        }
        Ok(())
    }
}

/// Detectors extracted to depth `n_max` plus the full training meta-feature
/// matrix. Finalizing at any `n <= n_max` only trains the final classifier,
/// so a hyperparameter sweep over `n` pays for extraction once.
pub struct DetectorStack {
    detectors: Vec<Detector>,
    detector_train_f1: Vec<f64>,
    meta: DenseMatrix,
    labels: Vec<bool>,
    vocab_hash: String,
    c_detector: f64,
    per_half_rejection: bool,
}

impl DetectorStack {
    pub fn depth(&self) -> usize {
        self.detectors.len()
    }

    pub fn detectors(&self) -> &[Detector] {
        &self.detectors
    }

    pub fn detector_train_f1(&self) -> &[f64] {
        &self.detector_train_f1
    }

    pub fn finalize(
        &self,
        n: usize,
        c_final: f64,
        gamma: Option<f64>,
        mask: AblationMask,
    ) -> Result<HFeatureModel> {
        mask.validate()?;
        if n == 0 || n > self.depth() {
            return Err(Error::invalid(format!(
                "cannot finalize at n={n} from a stack of depth {}",
                self.depth()
            )));
        }
        let slots = mask.kept_slots();
        let dim = slots.len() * n;
        let mut features = DenseMatrix::zeros(self.labels.len(), dim);
        for row in 0..self.labels.len() {
            let src = self.meta.row(row);
            let dst = features.row_mut(row);
            let mut col = 0;
            for i in 0..n {
                for &s in &slots {
                    dst[col] = src[4 * i + s];
                    col += 1;
                }
            }
        }
        let gamma = gamma.unwrap_or(1.0 / dim as f64);
        let final_model = train_rbf_svm(&features, &self.labels, c_final, gamma, true)?;
        let preds: Vec<bool> = final_model
            .predict_batch(&features)?
            .into_iter()
            .map(|(l, _)| l)
            .collect();
        let final_train_f1 = f1(&preds, &self.labels)?;
        Ok(HFeatureModel {
            detectors: self.detectors[..n].to_vec(),
            final_model,
            config: HFeatureConfig {
                n,
                c_detector: self.c_detector,
                c_final,
                gamma: Some(gamma),
                per_half_rejection: self.per_half_rejection,
                mask,
            },
            vocab_hash: self.vocab_hash.clone(),
            detector_train_f1: self.detector_train_f1[..n].to_vec(),
            final_train_f1,
        })
    }
}

/// Run the iterative extraction to depth `n_max` on the training pairs.
/// Pairs whose tokens are missing from the space are dropped first.
pub fn extract_stack(
    pairs: &[LabeledPair],
    space: &VectorSpace,
    n_max: usize,
    c_detector: f64,
    per_half_rejection: bool,
) -> Result<DetectorStack> {
    if n_max == 0 {
        return Err(Error::invalid("need at least one iteration"));
    }
    let usable: Vec<LabeledPair> = pairs
        .iter()
        .filter(|p| {
            space.lookup(&p.antecedent, Side::Word).is_some()
                && space.lookup(&p.consequent, Side::Word).is_some()
        })
        .cloned()
        .collect();
    let labels: Vec<bool> = usable.iter().map(|p| p.label).collect();
    let pos = labels.iter().filter(|&&l| l).count();
    if labels.is_empty() || pos == 0 || pos == labels.len() {
        return Err(Error::DegenerateLabels);
    }

    let k = space.k();
    let mut vectors = TokenVectors::build(&usable, space);
    let vocab_hash = util::vocab_hash(vectors.tokens.iter().map(String::as_str));
    let mut detectors = Vec::with_capacity(n_max);
    let mut detector_train_f1 = Vec::with_capacity(n_max);
    let mut meta = DenseMatrix::zeros(usable.len(), 4 * n_max);

    for iteration in 1..=n_max {
        if vectors.all_exhausted() {
            return Err(Error::SpaceExhausted);
        }
        let mut concat = DenseMatrix::zeros(usable.len(), 2 * k);
        for (row, pair) in usable.iter().enumerate() {
            let h = &vectors.h_vecs[vectors.idx(&pair.consequent)];
            let w = &vectors.w_vecs[vectors.idx(&pair.antecedent)];
            let dst = concat.row_mut(row);
            dst[..k].copy_from_slice(h);
            dst[k..].copy_from_slice(w);
        }
        let model = train_logreg(&concat, &labels, c_detector, true)?;
        let preds: Vec<bool> = model
            .predict_batch(&concat)?
            .into_iter()
            .map(|(l, _)| l)
            .collect();
        detector_train_f1.push(f1(&preds, &labels)?);

        let mut direction = model.weights[..k].to_vec();
        if !linalg::normalize(&mut direction, NULL_DIRECTION_EPS) {
            return Err(Error::NullDetector);
        }
        let detector = Detector {
            direction,
            source_model: model,
            iteration,
        };

        for (row, pair) in usable.iter().enumerate() {
            let h = &vectors.h_vecs[vectors.idx(&pair.consequent)];
            let w = &vectors.w_vecs[vectors.idx(&pair.antecedent)];
            let f = meta_features(h, w, &detector)?;
            meta.row_mut(row)[4 * (iteration - 1)..4 * iteration].copy_from_slice(&f);
        }

        let p_w = if per_half_rejection {
            detector.w_direction()?
        } else {
            detector.direction.clone()
        };
        vectors.reject_all(&detector.direction, &p_w)?;
        detectors.push(detector);
    }

    Ok(DetectorStack {
        detectors,
        detector_train_f1,
        meta,
        labels,
        vocab_hash,
        c_detector,
        per_half_rejection,
    })
}

/// Per-iteration snapshot of replayed vectors, taken after that iteration's
/// rejection.
#[derive(Debug, Clone)]
pub struct RejectionStep {
    pub iteration: usize,
    pub vectors: Vec<Vec<f64>>,
    pub exhausted: Vec<bool>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HFeatureModel {
    pub detectors: Vec<Detector>,
    final_model: KernelModel,
    pub config: HFeatureConfig,
    /// Hash of the sorted training vocabulary, for validating replays.
    pub vocab_hash: String,
    /// Training F1 of each iteration's Concat classifier.
    pub detector_train_f1: Vec<f64>,
    /// Training F1 of the final kernel classifier.
    pub final_train_f1: f64,
}

impl HFeatureModel {
    pub fn fit(
        pairs: &[LabeledPair],
        space: &VectorSpace,
        config: &HFeatureConfig,
    ) -> Result<HFeatureModel> {
        let stack = extract_stack(
            pairs,
            space,
            config.n,
            config.c_detector,
            config.per_half_rejection,
        )?;
        stack.finalize(config.n, config.c_final, config.gamma, config.mask)
    }

    pub fn n(&self) -> usize {
        self.detectors.len()
    }

    pub fn k(&self) -> usize {
        self.detectors.first().map_or(0, |d| d.direction.len())
    }

    pub fn final_model(&self) -> &KernelModel {
        &self.final_model
    }

    /// Decision values for pairs; `None` marks pairs with an out-of-vocabulary
    /// token, left for the caller to default.
    pub fn predict(
        &self,
        pairs: &[LabeledPair],
        space: &VectorSpace,
    ) -> Result<Vec<Option<(bool, f64)>>> {
        if space.k() != self.k() {
            return Err(Error::DimensionMismatch {
                expected: self.k(),
                got: space.k(),
            });
        }
        let slots = self.config.mask.kept_slots();
        let mut out = Vec::with_capacity(pairs.len());
        for pair in pairs {
            let (Some(h0), Some(w0)) = (
                space.lookup(&pair.consequent, Side::Word),
                space.lookup(&pair.antecedent, Side::Word),
            ) else {
                out.push(None);
                continue;
            };
            let features = self.replay_features(h0.to_vec(), w0.to_vec(), &slots)?;
            let x = DenseMatrix::from_rows(&[features]);
            let (label, decision) = self.final_model.predict_batch(&x)?[0];
            out.push(Some((label, decision)));
        }
        Ok(out)
    }

    fn replay_features(
        &self,
        mut h: Vec<f64>,
        mut w: Vec<f64>,
        slots: &[usize],
    ) -> Result<Vec<f64>> {
        let mut features = Vec::with_capacity(slots.len() * self.n());
        let mut h_dead = false;
        let mut w_dead = false;
        for detector in &self.detectors {
            let f = meta_features(&h, &w, detector)?;
            features.extend(slots.iter().map(|&s| f[s]));
            if !h_dead {
                let (v, ex) = reject_and_renormalize(&h, &detector.direction)?;
                h = v;
                h_dead = ex;
            }
            let p_w = if self.config.per_half_rejection {
                detector.w_direction()?
            } else {
                detector.direction.clone()
            };
            if !w_dead {
                let (v, ex) = reject_and_renormalize(&w, &p_w)?;
                w = v;
                w_dead = ex;
            }
        }
        Ok(features)
    }

    /// Replay the stored rejection sequence over arbitrary tokens, returning
    /// each iteration's post-rejection vectors (consequent role).
    pub fn rejection_trace(
        &self,
        space: &VectorSpace,
        tokens: &[String],
    ) -> Result<Vec<RejectionStep>> {
        let mut current: Vec<Vec<f64>> = Vec::with_capacity(tokens.len());
        for t in tokens {
            let v = space
                .lookup(t, Side::Word)
                .ok_or_else(|| Error::invalid(format!("token {t:?} has no vector")))?;
            current.push(v.to_vec());
        }
        let mut exhausted = vec![false; tokens.len()];
        let mut steps = Vec::with_capacity(self.n());
        for detector in &self.detectors {
            for (v, dead) in current.iter_mut().zip(exhausted.iter_mut()) {
                if *dead {
                    continue;
                }
                let (r, ex) = reject_and_renormalize(v, &detector.direction)?;
                *v = r;
                *dead = ex;
            }
            steps.push(RejectionStep {
                iteration: detector.iteration,
                vectors: current.clone(),
                exhausted: exhausted.clone(),
            });
        }
        Ok(steps)
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        let body = serde_json::to_string_pretty(self)?;
        std::fs::write(path, body + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &std::path::Path) -> Result<HFeatureModel> {
        let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&raw)?)
    }
}

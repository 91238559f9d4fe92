//! Evaluation protocol: lexically disjoint cross-validation with per-fold
//! hyperparameter tuning, paired bootstrap significance, ablations, and the
//! iteration-count sweep.
//!
//! Tuning never touches a fold's test pairs: hyperparameters are chosen on
//! the validation slice (the previous fold's antecedents, minus lexical
//! overlap with test) and the model fitted on the training slice is reused
//! as-is for testing. When the validation slice is degenerate the training
//! metric is used instead and the fold is flagged.

use std::cell::RefCell;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifiers::{
    feature_map, fit_cosine_threshold, grid_search, train_logreg, train_rbf_svm, CosineModel,
    FeatureKind, GridPoint, KernelModel, LinearModel,
};
use crate::datasets::{filter_to_vocab, make_folds, split_for_fold, FoldSplit, LabeledPair};
use crate::error::{Error, Result};
use crate::hfeature::{extract_stack, DetectorStack, HFeatureModel};
use crate::linalg::DenseMatrix;
use crate::util;
use crate::vecspace::{Side, VectorSpace};

pub use crate::hfeature::AblationMask;

/// Every model the evaluation protocol knows how to fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Cosine,
    Concat,
    Diff,
    Asym,
    ConcatDiff,
    ConcatAsym,
    RbfConcat,
    HFeature,
}

impl ModelKind {
    pub fn all() -> [ModelKind; 8] {
        [
            ModelKind::Cosine,
            ModelKind::Concat,
            ModelKind::Diff,
            ModelKind::Asym,
            ModelKind::ConcatDiff,
            ModelKind::ConcatAsym,
            ModelKind::RbfConcat,
            ModelKind::HFeature,
        ]
    }

    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::Cosine => "cosine",
            ModelKind::Concat => "concat",
            ModelKind::Diff => "diff",
            ModelKind::Asym => "asym",
            ModelKind::ConcatDiff => "concat-diff",
            ModelKind::ConcatAsym => "concat-asym",
            ModelKind::RbfConcat => "rbf-concat",
            ModelKind::HFeature => "hfeature",
        }
    }

    fn feature_kind(&self) -> Option<FeatureKind> {
        match self {
            ModelKind::Cosine | ModelKind::HFeature => None,
            ModelKind::Concat => Some(FeatureKind::Concat),
            ModelKind::Diff => Some(FeatureKind::Diff),
            ModelKind::Asym => Some(FeatureKind::Asym),
            ModelKind::ConcatDiff => Some(FeatureKind::ConcatDiff),
            ModelKind::ConcatAsym => Some(FeatureKind::ConcatAsym),
            ModelKind::RbfConcat => Some(FeatureKind::RbfConcat),
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<ModelKind> {
        let canon = s.trim().to_ascii_lowercase().replace('_', "-");
        ModelKind::all()
            .into_iter()
            .find(|m| m.name() == canon)
            .ok_or_else(|| Error::invalid(format!("unknown model {s:?}")))
    }
}

/// Hyperparameter grid. `ns` and `gammas` only matter for the models that
/// use them; `separate_final_c` extends the iterative model's grid with an
/// independent C for the final classifier.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct GridSpec {
    pub cs: Vec<f64>,
    pub ns: Vec<usize>,
    pub gammas: Vec<Option<f64>>,
    pub separate_final_c: bool,
}

impl Default for GridSpec {
    fn default() -> GridSpec {
        GridSpec {
            cs: (-4..=4).map(|e| 10f64.powi(e)).collect(),
            ns: (1..=6).collect(),
            gammas: vec![None],
            separate_final_c: false,
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if self.cs.is_empty() || self.cs.iter().any(|&c| !c.is_finite() || c <= 0.0) {
            return Err(Error::invalid("grid C values must be positive and finite"));
        }
        if self.gammas.is_empty()
            || self
                .gammas
                .iter()
                .any(|g| g.is_some_and(|g| !g.is_finite() || g <= 0.0))
        {
            return Err(Error::invalid(
                "grid gamma values must be positive and finite",
            ));
        }
        if self.ns.is_empty() || self.ns.contains(&0) {
            return Err(Error::invalid("grid iteration counts must be at least 1"));
        }
        Ok(())
    }

    pub fn points(&self, model: ModelKind) -> Vec<GridPoint> {
        match model {
            ModelKind::Cosine => vec![GridPoint::with_c(1.0)],
            ModelKind::Concat
            | ModelKind::Diff
            | ModelKind::Asym
            | ModelKind::ConcatDiff
            | ModelKind::ConcatAsym => self.cs.iter().map(|&c| GridPoint::with_c(c)).collect(),
            ModelKind::RbfConcat => self
                .cs
                .iter()
                .flat_map(|&c| {
                    self.gammas.iter().map(move |&gamma| GridPoint {
                        c,
                        n: 1,
                        gamma,
                        c_final: None,
                    })
                })
                .collect(),
            ModelKind::HFeature => {
                let finals: Vec<Option<f64>> = if self.separate_final_c {
                    self.cs.iter().copied().map(Some).collect()
                } else {
                    vec![None]
                };
                let mut points = Vec::new();
                for &c in &self.cs {
                    for &n in &self.ns {
                        for &gamma in &self.gammas {
                            for &c_final in &finals {
                                points.push(GridPoint {
                                    c,
                                    n,
                                    gamma,
                                    c_final,
                                });
                            }
                        }
                    }
                }
                points
            }
        }
    }
}

/// F1 of the positive class. Zero predicted positives or zero true positives
/// give 0 rather than a division error.
pub fn f1(preds: &[bool], golds: &[bool]) -> Result<f64> {
    if preds.len() != golds.len() {
        return Err(Error::DimensionMismatch {
            expected: golds.len(),
            got: preds.len(),
        });
    }
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut fneg = 0usize;
    for (&p, &g) in preds.iter().zip(golds) {
        match (p, g) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fneg += 1,
            (false, false) => {}
        }
    }
    if tp == 0 {
        return Ok(0.0);
    }
    Ok(2.0 * tp as f64 / (2.0 * tp as f64 + fp as f64 + fneg as f64))
}

/// Why a pair's label was read during fitting.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelRole {
    Train,
    Val,
}

/// Instrumentation hook: called once per (fold, pair) whose label the
/// fitting or tuning stage consumes. Lets tests prove test labels are never
/// touched before scoring.
pub trait CvObserver: Sync {
    fn label_access(&self, fold: usize, pair: &LabeledPair, role: LabelRole);
}

struct NoopObserver;

impl CvObserver for NoopObserver {
    fn label_access(&self, _fold: usize, _pair: &LabeledPair, _role: LabelRole) {}
}

/// One scored test pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairPrediction {
    pub antecedent: String,
    pub consequent: String,
    pub gold: bool,
    pub pred: bool,
    pub decision: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub point: GridPoint,
    pub val_f1: f64,
    pub test_f1: f64,
    pub used_train_fallback: bool,
    pub n_train: usize,
    pub n_val: usize,
    pub n_test: usize,
    pub predictions: Vec<PairPrediction>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CvReport {
    pub model: ModelKind,
    pub k: usize,
    pub seed: u64,
    /// Unweighted mean of per-fold test F1 over usable folds.
    pub mean_f1: f64,
    /// F1 over all test predictions pooled across folds.
    pub pooled_f1: f64,
    pub dropped_oov: usize,
    pub skipped_folds: Vec<usize>,
    pub folds: Vec<FoldResult>,
}

impl CvReport {
    pub fn all_predictions(&self) -> Vec<PairPrediction> {
        self.folds
            .iter()
            .flat_map(|f| f.predictions.iter().cloned())
            .collect()
    }
}

enum FittedModel {
    Cosine(CosineModel),
    Linear(FeatureKind, LinearModel),
    Kernel(FeatureKind, KernelModel),
    Iterative(Box<HFeatureModel>),
}

fn pair_features(
    pairs: &[LabeledPair],
    space: &VectorSpace,
    kind: FeatureKind,
) -> Result<DenseMatrix> {
    let mut rows = Vec::with_capacity(pairs.len());
    for p in pairs {
        let h = space
            .lookup(&p.consequent, Side::Word)
            .ok_or_else(|| Error::invalid(format!("token {:?} has no vector", p.consequent)))?;
        let w = space
            .lookup(&p.antecedent, Side::Word)
            .ok_or_else(|| Error::invalid(format!("token {:?} has no vector", p.antecedent)))?;
        rows.push(feature_map(kind, h, w)?);
    }
    Ok(DenseMatrix::from_rows(&rows))
}

fn labels_of(pairs: &[LabeledPair]) -> Vec<bool> {
    pairs.iter().map(|p| p.label).collect()
}

impl FittedModel {
    fn predict(&self, pairs: &[LabeledPair], space: &VectorSpace) -> Result<Vec<(bool, f64)>> {
        match self {
            FittedModel::Cosine(m) => {
                let x = pair_features(pairs, space, FeatureKind::Cosine)?;
                Ok((0..x.n_rows())
                    .map(|i| {
                        let sim = x.row(i)[0];
                        (m.predict(sim), sim - m.threshold)
                    })
                    .collect())
            }
            FittedModel::Linear(kind, m) => {
                let x = pair_features(pairs, space, *kind)?;
                m.predict_batch(&x)
            }
            FittedModel::Kernel(kind, m) => {
                let x = pair_features(pairs, space, *kind)?;
                m.predict_batch(&x)
            }
            FittedModel::Iterative(m) => {
                let out = m.predict(pairs, space)?;
                out.into_iter()
                    .map(|p| p.ok_or_else(|| Error::invalid("test pair escaped vocabulary filter")))
                    .collect()
            }
        }
    }

    fn score_f1(&self, pairs: &[LabeledPair], space: &VectorSpace) -> Result<f64> {
        let preds: Vec<bool> = self
            .predict(pairs, space)?
            .into_iter()
            .map(|(l, _)| l)
            .collect();
        f1(&preds, &labels_of(pairs))
    }
}

fn has_both_classes(pairs: &[LabeledPair]) -> bool {
    let pos = pairs.iter().filter(|p| p.label).count();
    pos > 0 && pos < pairs.len()
}

/// Fit one fold: tune on validation, keep the training-fit model.
fn fit_fold(
    model: ModelKind,
    split: &FoldSplit,
    space: &VectorSpace,
    grid: &GridSpec,
) -> Result<(FittedModel, GridPoint, f64, bool)> {
    let train_y = labels_of(&split.train);
    let fallback = split.val.is_empty() || !has_both_classes(&split.val);
    let score_set: &[LabeledPair] = if fallback { &split.train } else { &split.val };
    let points = grid.points(model);

    let outcome = match model {
        ModelKind::Cosine => {
            let sims = pair_features(&split.train, space, FeatureKind::Cosine)?;
            let sims: Vec<f64> = (0..sims.n_rows()).map(|i| sims.row(i)[0]).collect();
            grid_search(&points, fallback, |_point| {
                let m = FittedModel::Cosine(fit_cosine_threshold(&sims, &train_y)?);
                let score = m.score_f1(score_set, space)?;
                Ok((m, score))
            })?
        }
        ModelKind::RbfConcat => {
            let kind = FeatureKind::RbfConcat;
            let x = pair_features(&split.train, space, kind)?;
            grid_search(&points, fallback, |point| {
                let gamma = point.gamma.unwrap_or(1.0 / x.n_cols() as f64);
                let m =
                    FittedModel::Kernel(kind, train_rbf_svm(&x, &train_y, point.c, gamma, true)?);
                let score = m.score_f1(score_set, space)?;
                Ok((m, score))
            })?
        }
        ModelKind::HFeature => {
            let n_max = grid.ns.iter().copied().max().unwrap_or(1);
            let cache: RefCell<Option<(f64, DetectorStack)>> = RefCell::new(None);
            grid_search(&points, fallback, |point| {
                {
                    let mut slot = cache.borrow_mut();
                    let stale = slot.as_ref().is_none_or(|(c, _)| *c != point.c);
                    if stale {
                        let stack = extract_stack(&split.train, space, n_max, point.c, false)?;
                        *slot = Some((point.c, stack));
                    }
                }
                let slot = cache.borrow();
                let (_, stack) = slot.as_ref().expect("stack cached above");
                let fitted = stack.finalize(
                    point.n,
                    point.c_final.unwrap_or(point.c),
                    point.gamma,
                    AblationMask::none(),
                )?;
                let m = FittedModel::Iterative(Box::new(fitted));
                let score = m.score_f1(score_set, space)?;
                Ok((m, score))
            })?
        }
        _ => {
            let kind = model
                .feature_kind()
                .expect("linear models have a feature map");
            let x = pair_features(&split.train, space, kind)?;
            grid_search(&points, fallback, |point| {
                let m = FittedModel::Linear(kind, train_logreg(&x, &train_y, point.c, true)?);
                let score = m.score_f1(score_set, space)?;
                Ok((m, score))
            })?
        }
    };

    Ok((
        outcome.model,
        outcome.point,
        outcome.score,
        outcome.used_train_fallback,
    ))
}

/// Run the full protocol for one model over `k` lexically disjoint folds.
pub fn run_cv(
    model: ModelKind,
    pairs: &[LabeledPair],
    space: &VectorSpace,
    k: usize,
    seed: u64,
    grid: &GridSpec,
    observer: Option<&dyn CvObserver>,
) -> Result<CvReport> {
    grid.validate()?;
    let noop = NoopObserver;
    let observer = observer.unwrap_or(&noop);
    let (kept, dropped_oov) = filter_to_vocab(pairs, space);
    if dropped_oov > 0 {
        log::warn!("{dropped_oov} pairs dropped: token missing from the vector space");
    }
    if kept.is_empty() {
        return Err(Error::invalid("no pairs survive the vocabulary filter"));
    }
    let plan = make_folds(&kept, k, seed)?;

    let mut outcomes: Vec<(usize, Option<FoldResult>)> = (0..k)
        .into_par_iter()
        .map(|fold| -> Result<(usize, Option<FoldResult>)> {
            let split = split_for_fold(&kept, &plan, fold)?;
            if split.is_degenerate() {
                log::warn!("fold {fold}: degenerate split (skipping)");
                return Ok((fold, None));
            }
            for p in &split.train {
                observer.label_access(fold, p, LabelRole::Train);
            }
            for p in &split.val {
                observer.label_access(fold, p, LabelRole::Val);
            }
            let (fitted, point, val_f1, used_train_fallback) =
                fit_fold(model, &split, space, grid)?;
            let decisions = fitted.predict(&split.test, space)?;
            let predictions: Vec<PairPrediction> = split
                .test
                .iter()
                .zip(&decisions)
                .map(|(p, &(pred, decision))| PairPrediction {
                    antecedent: p.antecedent.clone(),
                    consequent: p.consequent.clone(),
                    gold: p.label,
                    pred,
                    decision,
                })
                .collect();
            let preds: Vec<bool> = predictions.iter().map(|p| p.pred).collect();
            let golds: Vec<bool> = predictions.iter().map(|p| p.gold).collect();
            let test_f1 = f1(&preds, &golds)?;
            Ok((
                fold,
                Some(FoldResult {
                    fold,
                    point,
                    val_f1,
                    test_f1,
                    used_train_fallback,
                    n_train: split.train.len(),
                    n_val: split.val.len(),
                    n_test: split.test.len(),
                    predictions,
                }),
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    outcomes.sort_by_key(|(fold, _)| *fold);

    let mut folds = Vec::new();
    let mut skipped_folds = Vec::new();
    for (fold, outcome) in outcomes {
        match outcome {
            Some(r) => folds.push(r),
            None => skipped_folds.push(fold),
        }
    }
    if folds.is_empty() {
        return Err(Error::invalid("every fold was degenerate"));
    }

    let mean_f1 = folds.iter().map(|f| f.test_f1).sum::<f64>() / folds.len() as f64;
    let pooled: Vec<&PairPrediction> = folds.iter().flat_map(|f| &f.predictions).collect();
    let preds: Vec<bool> = pooled.iter().map(|p| p.pred).collect();
    let golds: Vec<bool> = pooled.iter().map(|p| p.gold).collect();
    let pooled_f1 = f1(&preds, &golds)?;

    Ok(CvReport {
        model,
        k,
        seed,
        mean_f1,
        pooled_f1,
        dropped_oov,
        skipped_folds,
        folds,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BootstrapOutcome {
    /// Fraction of resamples where the first system fails to beat the second.
    pub p_value: f64,
    pub observed_delta: f64,
    pub resamples: usize,
}

/// Paired bootstrap over pooled test predictions: resample pair indices with
/// replacement and count how often the F1 advantage of the first system
/// disappears. Identical prediction vectors short-circuit to p = 1.
pub fn bootstrap_compare(
    golds: &[bool],
    preds_a: &[bool],
    preds_b: &[bool],
    resamples: usize,
    seed: u64,
) -> Result<BootstrapOutcome> {
    if preds_a.len() != golds.len() || preds_b.len() != golds.len() {
        return Err(Error::DimensionMismatch {
            expected: golds.len(),
            got: if preds_a.len() != golds.len() {
                preds_a.len()
            } else {
                preds_b.len()
            },
        });
    }
    if golds.is_empty() {
        return Err(Error::invalid("nothing to compare"));
    }
    if resamples == 0 {
        return Err(Error::invalid("need at least one resample"));
    }
    if resamples == 1 {
        log::warn!("bootstrap with a single resample says almost nothing");
    }
    let observed_delta = f1(preds_a, golds)? - f1(preds_b, golds)?;
    if preds_a == preds_b {
        return Ok(BootstrapOutcome {
            p_value: 1.0,
            observed_delta,
            resamples,
        });
    }
    let mut rng = util::seeded_stream(seed, util::stream::BOOTSTRAP);
    let n = golds.len();
    let mut worse = 0usize;
    let mut ga = vec![false; n];
    let mut gb = vec![false; n];
    let mut gg = vec![false; n];
    for _ in 0..resamples {
        for slot in 0..n {
            let i = rng.gen_range(0..n);
            ga[slot] = preds_a[i];
            gb[slot] = preds_b[i];
            gg[slot] = golds[i];
        }
        let delta = f1(&ga, &gg)? - f1(&gb, &gg)?;
        if delta <= 0.0 {
            worse += 1;
        }
    }
    Ok(BootstrapOutcome {
        p_value: worse as f64 / resamples as f64,
        observed_delta,
        resamples,
    })
}

/// Mean F1 per iteration count at C = 1 for one feature mask. The detector
/// stack is extracted once per fold at the deepest n and re-finalized.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepPoint {
    pub n: usize,
    pub mean_val_f1: f64,
    pub mean_test_f1: f64,
}

fn sweep_mask(
    pairs: &[LabeledPair],
    space: &VectorSpace,
    k: usize,
    seed: u64,
    ns: &[usize],
    mask: AblationMask,
) -> Result<Vec<SweepPoint>> {
    mask.validate()?;
    if ns.is_empty() || ns.contains(&0) {
        return Err(Error::invalid("iteration counts must be at least 1"));
    }
    let (kept, _) = filter_to_vocab(pairs, space);
    if kept.is_empty() {
        return Err(Error::invalid("no pairs survive the vocabulary filter"));
    }
    let plan = make_folds(&kept, k, seed)?;
    let n_max = *ns.iter().max().expect("ns nonempty");

    let per_fold: Vec<Option<Vec<(f64, f64)>>> = (0..k)
        .into_par_iter()
        .map(|fold| -> Result<Option<Vec<(f64, f64)>>> {
            let split = split_for_fold(&kept, &plan, fold)?;
            if split.is_degenerate() {
                log::warn!("fold {fold}: degenerate split (skipping)");
                return Ok(None);
            }
            let fallback = split.val.is_empty() || !has_both_classes(&split.val);
            let score_set: &[LabeledPair] = if fallback { &split.train } else { &split.val };
            let stack = extract_stack(&split.train, space, n_max, 1.0, false)?;
            let mut cells = Vec::with_capacity(ns.len());
            for &n in ns {
                let fitted = FittedModel::Iterative(Box::new(stack.finalize(n, 1.0, None, mask)?));
                let val = fitted.score_f1(score_set, space)?;
                let test = fitted.score_f1(&split.test, space)?;
                cells.push((val, test));
            }
            Ok(Some(cells))
        })
        .collect::<Result<Vec<_>>>()?;

    let usable: Vec<&Vec<(f64, f64)>> = per_fold.iter().flatten().collect();
    if usable.is_empty() {
        return Err(Error::invalid("every fold was degenerate"));
    }
    let mut points = Vec::with_capacity(ns.len());
    for (i, &n) in ns.iter().enumerate() {
        let mean_val = usable.iter().map(|c| c[i].0).sum::<f64>() / usable.len() as f64;
        let mean_test = usable.iter().map(|c| c[i].1).sum::<f64>() / usable.len() as f64;
        points.push(SweepPoint {
            n,
            mean_val_f1: mean_val,
            mean_test_f1: mean_test,
        });
    }
    Ok(points)
}

fn best_by_val(points: &[SweepPoint]) -> &SweepPoint {
    points
        .iter()
        .reduce(|best, p| {
            if p.mean_val_f1 > best.mean_val_f1 {
                p
            } else {
                best
            }
        })
        .expect("sweep points nonempty")
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IterationSweep {
    pub points: Vec<SweepPoint>,
    /// `mean_val_f1(n) - mean_val_f1(first n)` for each swept n.
    pub deltas_vs_first: Vec<f64>,
    pub best_n: usize,
}

/// Sweep the iteration count at C = 1 with the full feature set.
pub fn iteration_sweep(
    pairs: &[LabeledPair],
    space: &VectorSpace,
    k: usize,
    seed: u64,
    ns: &[usize],
) -> Result<IterationSweep> {
    let points = sweep_mask(pairs, space, k, seed, ns, AblationMask::none())?;
    let base = points[0].mean_val_f1;
    let deltas_vs_first = points.iter().map(|p| p.mean_val_f1 - base).collect();
    let best_n = best_by_val(&points).n;
    Ok(IterationSweep {
        points,
        deltas_vs_first,
        best_n,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MaskSweep {
    pub mask: AblationMask,
    pub label: String,
    pub points: Vec<SweepPoint>,
    /// n with the best mean validation F1.
    pub best_n: usize,
    /// Mean test F1 at that n.
    pub best_test_f1: f64,
    /// `best_test_f1 - best_test_f1(full mask)`.
    pub delta_vs_full: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AblationReport {
    pub masks: Vec<MaskSweep>,
}

/// Feature-group ablation at C = 1. The full model always runs first and is
/// the baseline for the deltas, so its own delta is exactly zero.
pub fn ablate(
    pairs: &[LabeledPair],
    space: &VectorSpace,
    k: usize,
    seed: u64,
    ns: &[usize],
    masks: &[AblationMask],
) -> Result<AblationReport> {
    let mut order = vec![AblationMask::none()];
    for &m in masks {
        if !order.contains(&m) {
            order.push(m);
        }
    }
    let mut out = Vec::with_capacity(order.len());
    let mut full_best = 0.0;
    for (i, mask) in order.into_iter().enumerate() {
        let points = sweep_mask(pairs, space, k, seed, ns, mask)?;
        let best = best_by_val(&points);
        let best_n = best.n;
        let best_test_f1 = best.mean_test_f1;
        if i == 0 {
            full_best = best_test_f1;
        }
        out.push(MaskSweep {
            mask,
            label: mask.label(),
            points,
            best_n,
            best_test_f1,
            delta_vs_full: best_test_f1 - full_best,
        });
    }
    Ok(AblationReport { masks: out })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::{synth_corpus, SynthConfig};
    use crate::vecspace::{build_space, SvdParams};
    use std::collections::HashSet;
    use std::sync::Mutex;

    #[test]
    fn f1_matches_hand_counts() {
        // TP = 2, FP = 1, FN = 1 -> precision 2/3, recall 2/3, F1 2/3.
        let golds = [true, true, true, false, false];
        let preds = [true, true, false, true, false];
        let got = f1(&preds, &golds).unwrap();
        assert!((got - 2.0 / 3.0).abs() < 1e-15);
        // Nothing predicted positive.
        assert_eq!(f1(&[false, false], &[true, false]).unwrap(), 0.0);
        // Nothing gold positive.
        assert_eq!(f1(&[true, false], &[false, false]).unwrap(), 0.0);
        // Perfect.
        assert_eq!(f1(&[true, false], &[true, false]).unwrap(), 1.0);
        assert!(f1(&[true], &[true, false]).is_err());
        assert_eq!(f1(&[], &[]).unwrap(), 0.0);
    }

    #[test]
    fn f1_agrees_with_direct_formula_on_random_instances() {
        use rand::Rng;
        let mut rng = util::seeded_stream(3, 900);
        for _ in 0..50 {
            let n = rng.gen_range(1..40);
            let preds: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.5)).collect();
            let golds: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.5)).collect();
            let tp = preds.iter().zip(&golds).filter(|&(&p, &g)| p && g).count() as f64;
            let pp = preds.iter().filter(|&&p| p).count() as f64;
            let gp = golds.iter().filter(|&&g| g).count() as f64;
            let expect = if tp == 0.0 {
                0.0
            } else {
                let prec = tp / pp;
                let rec = tp / gp;
                2.0 * prec * rec / (prec + rec)
            };
            assert!((f1(&preds, &golds).unwrap() - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn model_kind_parses_and_displays() {
        for kind in ModelKind::all() {
            assert_eq!(kind.name().parse::<ModelKind>().unwrap(), kind);
        }
        assert_eq!(
            "Concat_Diff".parse::<ModelKind>().unwrap(),
            ModelKind::ConcatDiff
        );
        assert!("nope".parse::<ModelKind>().is_err());
    }

    #[test]
    fn default_grid_shape() {
        let g = GridSpec::default();
        assert_eq!(g.cs.len(), 9);
        assert!((g.cs[0] - 1e-4).abs() < 1e-18);
        assert!((g.cs[8] - 1e4).abs() < 1e-8);
        assert_eq!(g.ns, vec![1, 2, 3, 4, 5, 6]);
        assert_eq!(g.gammas, vec![None]);
        // Linear models only sweep C; the iterative model crosses C and n.
        assert_eq!(g.points(ModelKind::Concat).len(), 9);
        assert_eq!(g.points(ModelKind::Cosine).len(), 1);
        assert_eq!(g.points(ModelKind::HFeature).len(), 54);
    }

    // Lexical disjointness is aggressive: a fold's test tokens knock out every
    // training pair that shares a hypernym, so the fixture needs enough
    // categories and folds for training positives to survive.
    fn fixture() -> (Vec<LabeledPair>, VectorSpace) {
        let config = SynthConfig {
            seed: 11,
            categories: 24,
            hyponyms_per_category: 4,
            ..SynthConfig::default()
        };
        let out = synth_corpus(&config).unwrap();
        let space = build_space(&out.counts, 20, &SvdParams::with_seed(11)).unwrap();
        (out.pairs, space)
    }

    fn small_grid() -> GridSpec {
        GridSpec {
            cs: vec![1.0],
            ns: vec![1, 2],
            ..GridSpec::default()
        }
    }

    #[test]
    fn cv_runs_deterministically_for_cosine() {
        let (pairs, space) = fixture();
        let a = run_cv(ModelKind::Cosine, &pairs, &space, 8, 5, &small_grid(), None).unwrap();
        let b = run_cv(ModelKind::Cosine, &pairs, &space, 8, 5, &small_grid(), None).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
        assert_eq!(a.folds.len() + a.skipped_folds.len(), 8);
        // Every kept pair is tested exactly once across folds.
        let tested: usize = a.folds.iter().map(|f| f.n_test).sum();
        let (kept, _) = filter_to_vocab(&pairs, &space);
        let skipped_test: usize = a.skipped_folds.len();
        if skipped_test == 0 {
            assert_eq!(tested, kept.len());
        }
        assert!(a.mean_f1 >= 0.0 && a.mean_f1 <= 1.0);
        assert!(a.pooled_f1 >= 0.0 && a.pooled_f1 <= 1.0);
    }

    #[test]
    fn cv_fits_the_iterative_model() {
        let (pairs, space) = fixture();
        let report = run_cv(
            ModelKind::HFeature,
            &pairs,
            &space,
            8,
            5,
            &small_grid(),
            None,
        )
        .unwrap();
        for fold in &report.folds {
            assert!(fold.point.n == 1 || fold.point.n == 2);
            assert!(!fold.predictions.is_empty());
        }
    }

    struct Recorder {
        seen: Mutex<HashSet<(usize, String, String)>>,
    }

    impl CvObserver for Recorder {
        fn label_access(&self, fold: usize, pair: &LabeledPair, _role: LabelRole) {
            self.seen.lock().unwrap().insert((
                fold,
                pair.antecedent.clone(),
                pair.consequent.clone(),
            ));
        }
    }

    #[test]
    fn fitting_never_reads_test_labels() {
        let (pairs, space) = fixture();
        let recorder = Recorder {
            seen: Mutex::new(HashSet::new()),
        };
        let report = run_cv(
            ModelKind::Concat,
            &pairs,
            &space,
            8,
            5,
            &small_grid(),
            Some(&recorder),
        )
        .unwrap();
        let seen = recorder.seen.lock().unwrap();
        assert!(!seen.is_empty());
        for fold in &report.folds {
            for p in &fold.predictions {
                assert!(
                    !seen.contains(&(fold.fold, p.antecedent.clone(), p.consequent.clone())),
                    "fold {} read test pair {} / {}",
                    fold.fold,
                    p.antecedent,
                    p.consequent
                );
            }
        }
    }

    #[test]
    fn bootstrap_identical_predictions_are_not_significant() {
        let golds = vec![true, false, true, false];
        let preds = vec![true, false, false, false];
        let out = bootstrap_compare(&golds, &preds, &preds, 100, 7).unwrap();
        assert_eq!(out.p_value, 1.0);
        assert_eq!(out.observed_delta, 0.0);
    }

    #[test]
    fn bootstrap_detects_a_clear_winner() {
        // A is perfect on 200 pairs, B is wrong on every positive.
        let golds: Vec<bool> = (0..200).map(|i| i % 2 == 0).collect();
        let preds_a = golds.clone();
        let preds_b = vec![false; 200];
        let out = bootstrap_compare(&golds, &preds_a, &preds_b, 2000, 7).unwrap();
        assert!(out.p_value < 0.001, "p = {}", out.p_value);
        assert!((out.observed_delta - 1.0).abs() < 1e-12);
        // Deterministic for a fixed seed.
        let again = bootstrap_compare(&golds, &preds_a, &preds_b, 2000, 7).unwrap();
        assert_eq!(out.p_value, again.p_value);
    }

    #[test]
    fn bootstrap_rejects_bad_input() {
        assert!(bootstrap_compare(&[], &[], &[], 10, 0).is_err());
        assert!(bootstrap_compare(&[true], &[true, false], &[true], 10, 0).is_err());
        assert!(bootstrap_compare(&[true], &[true], &[true], 0, 0).is_err());
    }

    #[test]
    fn ablation_full_mask_has_zero_delta() {
        let (pairs, space) = fixture();
        let masks = [
            AblationMask {
                drop_similarity: true,
                ..AblationMask::none()
            },
            AblationMask {
                drop_detectors: true,
                ..AblationMask::none()
            },
        ];
        let report = ablate(&pairs, &space, 8, 5, &[1, 2], &masks).unwrap();
        assert_eq!(report.masks.len(), 3);
        assert_eq!(report.masks[0].label, "full");
        assert_eq!(report.masks[0].delta_vs_full, 0.0);
        for m in &report.masks {
            assert_eq!(m.points.len(), 2);
        }
    }

    #[test]
    fn iteration_sweep_reports_deltas_against_first_n() {
        let (pairs, space) = fixture();
        let sweep = iteration_sweep(&pairs, &space, 8, 5, &[1, 2, 3]).unwrap();
        assert_eq!(sweep.points.len(), 3);
        assert_eq!(sweep.deltas_vs_first[0], 0.0);
        for (p, d) in sweep.points.iter().zip(&sweep.deltas_vs_first) {
            assert!((p.mean_val_f1 - sweep.points[0].mean_val_f1 - d).abs() < 1e-15);
        }
        assert!(sweep.points.iter().any(|p| p.n == sweep.best_n));
    }
}

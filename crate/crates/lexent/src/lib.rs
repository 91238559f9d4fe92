//! Supervised lexical entailment over count-based distributional vector spaces.
//!
//! The pipeline goes: sparse co-occurrence counts -> PPMI reweighting ->
//! truncated SVD -> unit-normalized word and context embeddings. On top of
//! that space, the crate provides the classical pair classifiers (cosine
//! threshold, Concat / Diff / Asym logistic models, an RBF-kernel SVM) and an
//! iterative hypernym-feature model: train a Concat classifier, take the
//! consequent half of its hyperplane as a feature-detector direction, reject
//! that direction from every vector, and repeat. The per-iteration
//! meta-features feed one final kernel classifier.
//!
//! Evaluation uses lexically-disjoint cross-validation: antecedent words are
//! partitioned into folds and no lexical item may appear on any side of both
//! a training and a test pair.

pub mod analysis;
pub mod classifiers;
pub mod datasets;
pub mod error;
pub mod eval;
pub mod hfeature;
pub mod linalg;
pub mod util;
pub mod vecspace;

pub use analysis::{NeighborEntry, NeighborReport};
pub use classifiers::{FeatureKind, GridPoint, KernelModel, LinearModel};
pub use datasets::{FoldPlan, FoldSplit, LabeledPair};
pub use error::{Error, Result};
pub use eval::{AblationMask, CvReport, FoldResult, GridSpec, ModelKind};
pub use hfeature::{Detector, HFeatureConfig, HFeatureModel};
pub use vecspace::{CountMatrix, Side, SvdParams, VectorSpace};

//! Labeled word pairs and the cross-validation protocol.
//!
//! Folds are built over *distinct antecedents*, not pairs, and the splits are
//! lexically disjoint: a training pair may not share a token (on either side)
//! with any test pair, and validation pairs may not share a token with test
//! pairs. This prevents a classifier from scoring well by memorizing which
//! words tend to be entailed rather than learning the relation.

mod synth;

pub use synth::{synth_corpus, FamilyScope, PatternFamily, SynthConfig, SynthOutput};

use std::collections::{HashMap, HashSet};
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::util::{self, stream};
use crate::vecspace::{Side, VectorSpace};

/// One labeled candidate: does `antecedent` entail `consequent`?
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LabeledPair {
    pub antecedent: String,
    pub consequent: String,
    pub label: bool,
}

impl LabeledPair {
    pub fn new(antecedent: &str, consequent: &str, label: bool) -> LabeledPair {
        LabeledPair {
            antecedent: antecedent.to_string(),
            consequent: consequent.to_string(),
            label,
        }
    }
}

/// Read pairs from a three-column TSV (`antecedent<TAB>consequent<TAB>label`,
/// label one of `0 1 true false`). Exact duplicates collapse to one pair; the
/// same pair under both labels is an error rather than a silent coin flip.
pub fn load_pairs(path: &Path) -> Result<Vec<LabeledPair>> {
    let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut pairs = Vec::new();
    let mut seen: HashMap<(String, String), bool> = HashMap::new();
    for (idx, line) in raw.lines().enumerate() {
        let lineno = idx + 1;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split('\t');
        let (a, c, raw_label) = match (fields.next(), fields.next(), fields.next()) {
            (Some(a), Some(c), Some(l)) if fields.next().is_none() => (a, c, l),
            _ => {
                return Err(Error::Parse {
                    path: path.display().to_string(),
                    line: lineno,
                    msg: "expected exactly 3 tab-separated fields".into(),
                })
            }
        };
        let label = match raw_label.trim().to_ascii_lowercase().as_str() {
            "1" | "true" => true,
            "0" | "false" => false,
            other => {
                return Err(Error::Parse {
                    path: path.display().to_string(),
                    line: lineno,
                    msg: format!("label {other:?} is not one of 0/1/true/false"),
                })
            }
        };
        let key = (a.to_string(), c.to_string());
        match seen.get(&key) {
            Some(&prev) if prev != label => {
                return Err(Error::ConflictingLabels {
                    antecedent: a.to_string(),
                    consequent: c.to_string(),
                })
            }
            Some(_) => continue,
            None => {
                seen.insert(key, label);
                pairs.push(LabeledPair::new(a, c, label));
            }
        }
    }
    Ok(pairs)
}

pub fn write_pairs(path: &Path, pairs: &[LabeledPair]) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for p in pairs {
        writeln!(
            out,
            "{}\t{}\t{}",
            p.antecedent,
            p.consequent,
            if p.label { 1 } else { 0 }
        )
        .map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Drop pairs whose tokens are missing from the space (or collapsed to zero
/// vectors during its build). Returns the kept pairs and how many fell out.
pub fn filter_to_vocab(pairs: &[LabeledPair], space: &VectorSpace) -> (Vec<LabeledPair>, usize) {
    let kept: Vec<LabeledPair> = pairs
        .iter()
        .filter(|p| {
            space.lookup(&p.antecedent, Side::Word).is_some()
                && space.lookup(&p.consequent, Side::Word).is_some()
        })
        .cloned()
        .collect();
    let dropped = pairs.len() - kept.len();
    (kept, dropped)
}

/// Assignment of distinct antecedents to folds.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FoldPlan {
    k: usize,
    antecedents: Vec<String>,
    assignment: Vec<usize>,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

impl FoldPlan {
    pub fn from_assignments(
        antecedents: Vec<String>,
        assignment: Vec<usize>,
        k: usize,
    ) -> Result<FoldPlan> {
        if antecedents.len() != assignment.len() {
            return Err(Error::invalid("assignment length must match antecedents"));
        }
        if k < 2 {
            return Err(Error::invalid("need at least 2 folds"));
        }
        if assignment.iter().any(|&f| f >= k) {
            return Err(Error::invalid("fold id out of range"));
        }
        let index = antecedents
            .iter()
            .enumerate()
            .map(|(i, a)| (a.clone(), i))
            .collect();
        Ok(FoldPlan {
            k,
            antecedents,
            assignment,
            index,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn antecedents(&self) -> &[String] {
        &self.antecedents
    }

    pub fn fold_of(&self, antecedent: &str) -> Option<usize> {
        self.index.get(antecedent).map(|&i| self.assignment[i])
    }

    pub fn fold_members(&self, fold: usize) -> Vec<&str> {
        self.antecedents
            .iter()
            .zip(&self.assignment)
            .filter_map(|(a, &f)| (f == fold).then_some(a.as_str()))
            .collect()
    }

    /// Rebuild the lookup index after deserializing.
    pub fn reindex(&mut self) {
        self.index = self
            .antecedents
            .iter()
            .enumerate()
            .map(|(i, a)| (a.clone(), i))
            .collect();
    }
}

/// Shuffle the distinct antecedents (first-appearance order, seeded) and deal
/// them round-robin into `k` folds, so fold sizes differ by at most one.
pub fn make_folds(pairs: &[LabeledPair], k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::invalid("need at least 2 folds"));
    }
    let mut distinct = Vec::new();
    let mut seen = HashSet::new();
    for p in pairs {
        if seen.insert(p.antecedent.as_str()) {
            distinct.push(p.antecedent.clone());
        }
    }
    if distinct.len() < k {
        return Err(Error::invalid(format!(
            "cannot split {} distinct antecedents into {k} folds",
            distinct.len()
        )));
    }
    let mut shuffled: Vec<usize> = (0..distinct.len()).collect();
    let mut rng = util::seeded_stream(seed, stream::FOLDS);
    shuffled.shuffle(&mut rng);
    let mut assignment = vec![0usize; distinct.len()];
    for (deal, &orig) in shuffled.iter().enumerate() {
        assignment[orig] = deal % k;
    }
    FoldPlan::from_assignments(distinct, assignment, k)
}

/// One fold's train/validation/test pair lists.
#[derive(Debug, Clone)]
pub struct FoldSplit {
    pub fold: usize,
    pub train: Vec<LabeledPair>,
    pub val: Vec<LabeledPair>,
    pub test: Vec<LabeledPair>,
}

impl FoldSplit {
    /// A fold is unusable when the training set cannot support a classifier
    /// (missing a class) or there is nothing to score.
    pub fn is_degenerate(&self) -> bool {
        let pos = self.train.iter().filter(|p| p.label).count();
        pos == 0 || pos == self.train.len() || self.test.is_empty()
    }
}

/// Carve out fold `fold` as test, fold `fold - 1` (mod k) as validation, and
/// the rest as train, enforcing lexical disjointness: validation drops pairs
/// sharing any token with test, train drops pairs sharing any token with test
/// or validation.
pub fn split_for_fold(pairs: &[LabeledPair], plan: &FoldPlan, fold: usize) -> Result<FoldSplit> {
    if fold >= plan.k() {
        return Err(Error::invalid(format!(
            "fold {fold} out of range for k={}",
            plan.k()
        )));
    }
    let val_fold = (fold + plan.k() - 1) % plan.k();
    let mut fold_of = Vec::with_capacity(pairs.len());
    for p in pairs {
        let f = plan.fold_of(&p.antecedent).ok_or_else(|| {
            Error::invalid(format!(
                "antecedent {:?} is not covered by the fold plan",
                p.antecedent
            ))
        })?;
        fold_of.push(f);
    }

    let mut test = Vec::new();
    let mut test_lex: HashSet<&str> = HashSet::new();
    for (p, &f) in pairs.iter().zip(&fold_of) {
        if f == fold {
            test.push(p.clone());
            test_lex.insert(p.antecedent.as_str());
            test_lex.insert(p.consequent.as_str());
        }
    }

    let mut val = Vec::new();
    let mut held_lex = test_lex.clone();
    for (p, &f) in pairs.iter().zip(&fold_of) {
        if f == val_fold
            && !test_lex.contains(p.antecedent.as_str())
            && !test_lex.contains(p.consequent.as_str())
        {
            val.push(p.clone());
            held_lex.insert(p.antecedent.as_str());
            held_lex.insert(p.consequent.as_str());
        }
    }

    let mut train = Vec::new();
    for (p, &f) in pairs.iter().zip(&fold_of) {
        if f != fold
            && f != val_fold
            && !held_lex.contains(p.antecedent.as_str())
            && !held_lex.contains(p.consequent.as_str())
        {
            train.push(p.clone());
        }
    }

    Ok(FoldSplit {
        fold,
        train,
        val,
        test,
    })
}

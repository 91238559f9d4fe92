//! The distributional space: sparse co-occurrence counts reweighted by PPMI,
//! factorized with a truncated SVD, and row-normalized into word and context
//! embedding matrices that live in the same k-dimensional space.

mod io;
mod svd;

pub use io::{read_counts_tsv, SpaceMeta};
pub use svd::{truncated_svd, SvdFactors, SvdParams};

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, DenseMatrix};

/// Which embedding matrix a token is looked up in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Word,
    Context,
}

/// Sparse co-occurrence matrix stored as (row, col, value) triplets sorted by
/// (row, col). Rows are word tokens, columns are context tokens. Values are
/// strictly positive; after [`ppmi_transform`] they hold PPMI weights instead
/// of raw counts.
#[derive(Debug, Clone)]
pub struct CountMatrix {
    row_tokens: Vec<String>,
    col_tokens: Vec<String>,
    row_index: HashMap<String, u32>,
    col_index: HashMap<String, u32>,
    entries: Vec<(u32, u32, f64)>,
}

impl CountMatrix {
    pub fn builder() -> CountsBuilder {
        CountsBuilder::default()
    }

    pub fn n_rows(&self) -> usize {
        self.row_tokens.len()
    }

    pub fn n_cols(&self) -> usize {
        self.col_tokens.len()
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[(u32, u32, f64)] {
        &self.entries
    }

    pub fn row_tokens(&self) -> &[String] {
        &self.row_tokens
    }

    pub fn col_tokens(&self) -> &[String] {
        &self.col_tokens
    }

    pub fn total(&self) -> f64 {
        self.entries.iter().map(|&(_, _, v)| v).sum()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.n_rows()];
        for &(r, _, v) in &self.entries {
            sums[r as usize] += v;
        }
        sums
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.n_cols()];
        for &(_, c, v) in &self.entries {
            sums[c as usize] += v;
        }
        sums
    }

    pub fn value(&self, row_token: &str, col_token: &str) -> Option<f64> {
        let r = *self.row_index.get(row_token)?;
        let c = *self.col_index.get(col_token)?;
        self.entries
            .binary_search_by(|&(er, ec, _)| (er, ec).cmp(&(r, c)))
            .ok()
            .map(|i| self.entries[i].2)
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(self.n_rows(), self.n_cols());
        for &(r, c, v) in &self.entries {
            m.set(r as usize, c as usize, v);
        }
        m
    }

    /// Dense product `self * x` where `x` is (n_cols x l).
    pub(crate) fn mul_dense(&self, x: &DenseMatrix) -> DenseMatrix {
        assert_eq!(x.n_rows(), self.n_cols());
        let l = x.n_cols();
        let mut y = DenseMatrix::zeros(self.n_rows(), l);
        for &(r, c, v) in &self.entries {
            let src = x.row(c as usize);
            let dst = y.row_mut(r as usize);
            for j in 0..l {
                dst[j] += v * src[j];
            }
        }
        y
    }

    /// Dense product `self^T * x` where `x` is (n_rows x l).
    pub(crate) fn tmul_dense(&self, x: &DenseMatrix) -> DenseMatrix {
        assert_eq!(x.n_rows(), self.n_rows());
        let l = x.n_cols();
        let mut y = DenseMatrix::zeros(self.n_cols(), l);
        for &(r, c, v) in &self.entries {
            let src = x.row(r as usize);
            let dst = y.row_mut(c as usize);
            for j in 0..l {
                dst[j] += v * src[j];
            }
        }
        y
    }
}

/// Accumulating builder; duplicate (word, context) cells are summed. Tokens
/// are indexed in first-appearance order so construction is deterministic.
#[derive(Default)]
pub struct CountsBuilder {
    row_tokens: Vec<String>,
    col_tokens: Vec<String>,
    row_index: HashMap<String, u32>,
    col_index: HashMap<String, u32>,
    cells: HashMap<(u32, u32), f64>,
}

impl CountsBuilder {
    pub fn add(&mut self, word: &str, context: &str, count: f64) {
        assert!(count > 0.0, "counts must be positive");
        let r = intern(&mut self.row_tokens, &mut self.row_index, word);
        let c = intern(&mut self.col_tokens, &mut self.col_index, context);
        *self.cells.entry((r, c)).or_insert(0.0) += count;
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn finish(self) -> CountMatrix {
        let mut entries: Vec<(u32, u32, f64)> = self
            .cells
            .into_iter()
            .map(|((r, c), v)| (r, c, v))
            .collect();
        entries.sort_unstable_by_key(|&(r, c, _)| (r, c));
        CountMatrix {
            row_tokens: self.row_tokens,
            col_tokens: self.col_tokens,
            row_index: self.row_index,
            col_index: self.col_index,
            entries,
        }
    }
}

fn intern(tokens: &mut Vec<String>, index: &mut HashMap<String, u32>, token: &str) -> u32 {
    if let Some(&i) = index.get(token) {
        return i;
    }
    let i = tokens.len() as u32;
    tokens.push(token.to_string());
    index.insert(token.to_string(), i);
    i
}

/// Positive pointwise mutual information, natural log, no smoothing:
/// `max(0, ln(p(w,c) / (p(w) p(c))))` with probabilities estimated from the
/// raw counts. Cells whose PMI is non-positive are dropped from storage, so
/// the output is never denser than the input.
pub fn ppmi_transform(counts: &CountMatrix) -> Result<CountMatrix> {
    if counts.nnz() == 0 {
        return Err(Error::EmptyCounts);
    }
    let total = counts.total();
    let row_sums = counts.row_sums();
    let col_sums = counts.col_sums();
    let entries: Vec<(u32, u32, f64)> = counts
        .entries
        .iter()
        .filter_map(|&(r, c, v)| {
            let pmi = (v * total / (row_sums[r as usize] * col_sums[c as usize])).ln();
            (pmi > 0.0).then_some((r, c, pmi))
        })
        .collect();
    Ok(CountMatrix {
        row_tokens: counts.row_tokens.clone(),
        col_tokens: counts.col_tokens.clone(),
        row_index: counts.row_index.clone(),
        col_index: counts.col_index.clone(),
        entries,
    })
}

/// Word and context embeddings sharing one k-dimensional space.
///
/// `words` rows are unit length except for tokens whose PPMI row was entirely
/// zero; those rows stay zero and the token behaves as out-of-vocabulary.
#[derive(Debug, Clone)]
pub struct VectorSpace {
    k: usize,
    word_tokens: Vec<String>,
    context_tokens: Vec<String>,
    word_index: HashMap<String, usize>,
    context_index: HashMap<String, usize>,
    words: DenseMatrix,
    contexts: DenseMatrix,
    sigma: Vec<f64>,
    meta: SpaceMeta,
}

impl VectorSpace {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn vocab_size(&self) -> usize {
        self.word_tokens.len()
    }

    pub fn context_size(&self) -> usize {
        self.context_tokens.len()
    }

    pub fn word_tokens(&self) -> &[String] {
        &self.word_tokens
    }

    pub fn context_tokens(&self) -> &[String] {
        &self.context_tokens
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    pub fn meta(&self) -> &SpaceMeta {
        &self.meta
    }

    pub fn word_rows(&self) -> &DenseMatrix {
        &self.words
    }

    pub fn context_rows(&self) -> &DenseMatrix {
        &self.contexts
    }

    /// Embedding row for a token, or `None` when the token is absent or its
    /// vector collapsed to zero during the build. Missing is a value here so
    /// that callers can filter pair lists instead of handling errors.
    pub fn lookup(&self, token: &str, side: Side) -> Option<&[f64]> {
        let (index, matrix) = match side {
            Side::Word => (&self.word_index, &self.words),
            Side::Context => (&self.context_index, &self.contexts),
        };
        let &i = index.get(token)?;
        let row = matrix.row(i);
        if linalg::norm(row) < 1e-12 {
            return None;
        }
        Some(row)
    }

    pub fn save(&self, dir: &std::path::Path) -> Result<()> {
        io::save_space(self, dir)
    }

    pub fn load(dir: &std::path::Path) -> Result<VectorSpace> {
        io::load_space(dir)
    }

    pub(crate) fn from_parts(
        k: usize,
        word_tokens: Vec<String>,
        context_tokens: Vec<String>,
        words: DenseMatrix,
        contexts: DenseMatrix,
        sigma: Vec<f64>,
        meta: SpaceMeta,
    ) -> VectorSpace {
        let word_index = word_tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        let context_index = context_tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        VectorSpace {
            k,
            word_tokens,
            context_tokens,
            word_index,
            context_index,
            words,
            contexts,
            sigma,
            meta,
        }
    }
}

/// Build the full space from raw counts: PPMI, truncated SVD to `k`
/// dimensions, then `W = normalize_rows(U_k S_k)` and
/// `C = normalize_rows(V_k)` so that `W C^T` approximates the PPMI matrix
/// before normalization. Index maps are carried over from the counts.
pub fn build_space(counts: &CountMatrix, k: usize, params: &SvdParams) -> Result<VectorSpace> {
    if counts.nnz() == 0 {
        return Err(Error::EmptyCounts);
    }
    let reweighted = ppmi_transform(counts)?;
    let factors = truncated_svd(&reweighted, k, params)?;

    let mut words = factors.u;
    for i in 0..words.n_rows() {
        let row = words.row_mut(i);
        for (j, s) in factors.sigma.iter().enumerate() {
            row[j] *= s;
        }
        linalg::normalize(row, 1e-12);
    }
    let mut contexts = factors.v;
    let mut dead_words = 0usize;
    for i in 0..words.n_rows() {
        if linalg::norm(words.row(i)) < 1e-12 {
            dead_words += 1;
        }
    }
    for i in 0..contexts.n_rows() {
        linalg::normalize(contexts.row_mut(i), 1e-12);
    }

    let meta = SpaceMeta {
        k,
        vocab_size: counts.n_rows(),
        context_size: counts.n_cols(),
        seed: params.seed,
        oversample: params.oversample,
        power_iters: params.power_iters,
        dense_threshold: params.dense_threshold,
        words_normalized: true,
        contexts_normalized: true,
        dead_words,
    };
    Ok(VectorSpace::from_parts(
        k,
        counts.row_tokens.clone(),
        counts.col_tokens.clone(),
        words,
        contexts,
        factors.sigma,
        meta,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn counts_from(rows: &[(&str, &str, f64)]) -> CountMatrix {
        let mut b = CountMatrix::builder();
        for &(w, c, v) in rows {
            b.add(w, c, v);
        }
        b.finish()
    }

    /// Independent dense re-implementation of the PPMI definition, used as
    /// the oracle for the sparse path.
    fn ppmi_oracle(dense: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let total: f64 = dense.iter().flatten().sum();
        let rows = dense.len();
        let cols = dense[0].len();
        let mut out = vec![vec![0.0; cols]; rows];
        for i in 0..rows {
            for j in 0..cols {
                if dense[i][j] <= 0.0 {
                    continue;
                }
                let pw: f64 = dense[i].iter().sum::<f64>() / total;
                let pc: f64 = (0..rows).map(|r| dense[r][j]).sum::<f64>() / total;
                let pwc = dense[i][j] / total;
                out[i][j] = (pwc / (pw * pc)).ln().max(0.0);
            }
        }
        out
    }

    #[test]
    #[allow(clippy::approx_constant)]
    fn ppmi_hand_example() {
        // counts [[2,0],[1,1]]: cell(0,0) = ln((2/4)/((2/4)(3/4))) = ln(4/3).
        let m = counts_from(&[("w0", "c0", 2.0), ("w1", "c0", 1.0), ("w1", "c1", 1.0)]);
        let p = ppmi_transform(&m).unwrap();
        let expect00 = (4.0f64 / 3.0).ln();
        assert!((p.value("w0", "c0").unwrap() - expect00).abs() < 1e-4);
        assert!((expect00 - 0.2877).abs() < 1e-4);
        // cell(1,0) has negative PMI and is dropped; cell(1,1) = ln 2.
        assert_eq!(p.value("w1", "c0"), None);
        assert!((p.value("w1", "c1").unwrap() - 2.0f64.ln()).abs() < 1e-12);
        assert!((2.0f64.ln() - 0.6931).abs() < 1e-4);
    }

    #[test]
    fn ppmi_uniform_counts_vanish() {
        let m = counts_from(&[
            ("w0", "c0", 1.0),
            ("w0", "c1", 1.0),
            ("w1", "c0", 1.0),
            ("w1", "c1", 1.0),
        ]);
        let p = ppmi_transform(&m).unwrap();
        assert_eq!(p.nnz(), 0);
    }

    #[test]
    fn ppmi_single_cell_degenerate() {
        let m = counts_from(&[("w0", "c0", 5.0)]);
        let p = ppmi_transform(&m).unwrap();
        // p(w,c) = p(w) = p(c) = 1 so PMI = 0 and the cell is dropped.
        assert_eq!(p.nnz(), 0);
    }

    #[test]
    fn ppmi_empty_counts_is_an_error() {
        let b = CountMatrix::builder();
        let m = b.finish();
        assert!(matches!(ppmi_transform(&m), Err(Error::EmptyCounts)));
    }

    #[test]
    fn ppmi_matches_dense_oracle_on_random_matrices() {
        use rand::Rng;
        let mut rng = crate::util::seeded_stream(11, 99);
        for _ in 0..50 {
            let rows = rng.gen_range(2..8);
            let cols = rng.gen_range(2..8);
            let mut dense = vec![vec![0.0f64; cols]; rows];
            let mut b = CountMatrix::builder();
            let mut any = false;
            for (i, row) in dense.iter_mut().enumerate() {
                for (j, cell) in row.iter_mut().enumerate() {
                    if rng.gen_bool(0.6) {
                        let v = rng.gen_range(1..20) as f64;
                        *cell = v;
                        b.add(&format!("w{i}"), &format!("c{j}"), v);
                        any = true;
                    }
                }
            }
            if !any {
                continue;
            }
            let m = b.finish();
            let p = ppmi_transform(&m).unwrap();
            let oracle = ppmi_oracle(&dense);
            for i in 0..rows {
                for j in 0..cols {
                    let got = p.value(&format!("w{i}"), &format!("c{j}")).unwrap_or(0.0);
                    assert!(
                        (got - oracle[i][j]).abs() < 1e-9,
                        "ppmi mismatch at ({i},{j}): {got} vs {}",
                        oracle[i][j]
                    );
                }
            }
        }
    }

    #[test]
    fn builder_sums_duplicates_and_sorts() {
        let mut b = CountMatrix::builder();
        b.add("b", "y", 1.0);
        b.add("a", "x", 2.0);
        b.add("b", "y", 3.0);
        let m = b.finish();
        assert_eq!(m.nnz(), 2);
        assert_eq!(m.value("b", "y"), Some(4.0));
        // Row tokens keep first-appearance order.
        assert_eq!(m.row_tokens(), &["b".to_string(), "a".to_string()]);
        // Entries sorted by (row, col).
        let e = m.entries();
        assert!(e.windows(2).all(|w| (w[0].0, w[0].1) < (w[1].0, w[1].1)));
    }

    #[test]
    fn build_space_rows_are_unit_or_dead() {
        let mut b = CountMatrix::builder();
        for i in 0..6 {
            for j in 0..5 {
                if (i + j) % 2 == 0 {
                    b.add(&format!("w{i}"), &format!("c{j}"), (1 + i * j) as f64);
                }
            }
        }
        let counts = b.finish();
        let space = build_space(&counts, 3, &SvdParams::with_seed(1)).unwrap();
        for i in 0..space.vocab_size() {
            let n = linalg::norm(space.word_rows().row(i));
            assert!((n - 1.0).abs() < 1e-6 || n < 1e-12, "row {i} has norm {n}");
        }
    }

    #[test]
    fn build_space_separates_planted_clusters() {
        // Two word clusters with disjoint context blocks.
        let mut b = CountMatrix::builder();
        for w in 0..4 {
            for c in 0..4 {
                b.add(
                    &format!("a{w}"),
                    &format!("ctxa{c}"),
                    (3 + (w + c) % 3) as f64,
                );
                b.add(
                    &format!("b{w}"),
                    &format!("ctxb{c}"),
                    (3 + (w * c) % 3) as f64,
                );
            }
        }
        let counts = b.finish();
        let space = build_space(&counts, 4, &SvdParams::with_seed(2)).unwrap();
        let a0 = space.lookup("a0", Side::Word).unwrap();
        let a1 = space.lookup("a1", Side::Word).unwrap();
        let b0 = space.lookup("b0", Side::Word).unwrap();
        assert!(linalg::cosine(a0, a1) > linalg::cosine(a0, b0));
    }

    #[test]
    fn lookup_misses_are_values_not_errors() {
        let m = counts_from(&[("w0", "c0", 2.0), ("w1", "c1", 3.0), ("w0", "c1", 1.0)]);
        let space = build_space(&m, 2, &SvdParams::with_seed(3)).unwrap();
        assert!(space.lookup("w0", Side::Word).is_some());
        assert!(space.lookup("absent", Side::Word).is_none());
        assert!(space.lookup("c1", Side::Context).is_some());
    }
}

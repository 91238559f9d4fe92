//! Truncated SVD with two routes: an exact dense factorization for small
//! matrices and a seeded randomized range-finder for large ones. Both return
//! singular values in descending order, and the randomized route is
//! bit-reproducible for a fixed seed.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::util::{self, stream};
use crate::vecspace::CountMatrix;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SvdParams {
    /// Extra sampled directions beyond the target rank.
    pub oversample: usize,
    /// Subspace (power) iterations; each sharpens the spectrum estimate.
    pub power_iters: usize,
    /// Matrices whose larger dimension is at or below this size use the
    /// exact dense route.
    pub dense_threshold: usize,
    pub seed: u64,
}

impl Default for SvdParams {
    fn default() -> Self {
        SvdParams {
            oversample: 10,
            power_iters: 7,
            dense_threshold: 512,
            seed: 0,
        }
    }
}

impl SvdParams {
    pub fn with_seed(seed: u64) -> Self {
        SvdParams {
            seed,
            ..SvdParams::default()
        }
    }
}

/// Rank-k factors: `u` is (m x k), `v` is (n x k), `sigma` descending.
#[derive(Debug, Clone)]
pub struct SvdFactors {
    pub u: DenseMatrix,
    pub sigma: Vec<f64>,
    pub v: DenseMatrix,
}

pub fn truncated_svd(matrix: &CountMatrix, k: usize, params: &SvdParams) -> Result<SvdFactors> {
    let (m, n) = (matrix.n_rows(), matrix.n_cols());
    let max_rank = m.min(n);
    if k == 0 || k > max_rank {
        return Err(Error::InvalidRank { k, max: max_rank });
    }
    if m.max(n) <= params.dense_threshold {
        dense_route(matrix, k)
    } else {
        randomized_route(matrix, k, params)
    }
}

fn dense_route(matrix: &CountMatrix, k: usize) -> Result<SvdFactors> {
    let dense = to_na(&matrix.to_dense());
    let svd = dense.svd(true, true);
    let u = svd.u.expect("u requested");
    let v_t = svd.v_t.expect("v_t requested");
    Ok(sorted_truncation(
        &u,
        svd.singular_values.as_slice(),
        &v_t,
        k,
    ))
}

/// Range-finder sketch: sample Y = A * Omega with Gaussian Omega, orthonormalize,
/// sharpen with alternating power iterations, then solve the small dense
/// problem B^T = A^T Q exactly and lift back with U = Q * U_b.
fn randomized_route(matrix: &CountMatrix, k: usize, params: &SvdParams) -> Result<SvdFactors> {
    let (m, n) = (matrix.n_rows(), matrix.n_cols());
    let l = (k + params.oversample).min(m.min(n));
    let mut rng = util::seeded_stream(params.seed, stream::SVD);
    let mut omega = DenseMatrix::zeros(n, l);
    for i in 0..n {
        let row = omega.row_mut(i);
        for cell in row.iter_mut() {
            *cell = rng.sample::<f64, _>(StandardNormal);
        }
    }

    let mut q = thin_q(&to_na(&matrix.mul_dense(&omega)));
    for _ in 0..params.power_iters {
        let z = thin_q(&to_na(&matrix.tmul_dense(&from_na(&q))));
        q = thin_q(&to_na(&matrix.mul_dense(&from_na(&z))));
    }

    // b_t = A^T Q is (n x l); its SVD gives A ~= Q (U_b S V_b^T)^T stitched below.
    let b_t = to_na(&matrix.tmul_dense(&from_na(&q)));
    let svd = b_t.svd(true, true);
    let vb = svd.u.expect("u requested");
    let ub_t = svd.v_t.expect("v_t requested");
    // A ~= Q Q^T A = Q b = Q (ub_t^T S vb^T)... with b = b_t^T = ub_t^T S vb^T.
    let u_small = ub_t.transpose();
    let u_full = q * &u_small;
    let v_t_equiv = vb.transpose();
    Ok(sorted_truncation(
        &u_full,
        svd.singular_values.as_slice(),
        &v_t_equiv,
        k,
    ))
}

/// Order singular triplets by descending value and keep the first k.
fn sorted_truncation(u: &DMatrix<f64>, sigma: &[f64], v_t: &DMatrix<f64>, k: usize) -> SvdFactors {
    let mut order: Vec<usize> = (0..sigma.len()).collect();
    order.sort_by(|&a, &b| sigma[b].partial_cmp(&sigma[a]).unwrap());
    let m = u.nrows();
    let n = v_t.ncols();
    let mut u_out = DenseMatrix::zeros(m, k);
    let mut v_out = DenseMatrix::zeros(n, k);
    let mut s_out = Vec::with_capacity(k);
    for (j, &src) in order.iter().take(k).enumerate() {
        s_out.push(sigma[src]);
        for i in 0..m {
            u_out.set(i, j, u[(i, src)]);
        }
        for i in 0..n {
            v_out.set(i, j, v_t[(src, i)]);
        }
    }
    SvdFactors {
        u: u_out,
        sigma: s_out,
        v: v_out,
    }
}

fn thin_q(a: &DMatrix<f64>) -> DMatrix<f64> {
    a.clone().qr().q()
}

fn to_na(m: &DenseMatrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.n_rows(), m.n_cols(), m.as_slice())
}

fn from_na(m: &DMatrix<f64>) -> DenseMatrix {
    let mut out = DenseMatrix::zeros(m.nrows(), m.ncols());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.set(i, j, m[(i, j)]);
        }
    }
    out
}

//! Soft-margin RBF-kernel SVM solved by sequential minimal optimization.
//!
//! The dual is `min 0.5 a'Qa - e'a` subject to `0 <= a_t <= C_t` and
//! `y'a = 0`, with `Q_st = y_s y_t K(x_s, x_t)`. Working pairs are chosen by
//! maximal KKT violation and the solve stops when the violation gap drops to
//! `tol` (1e-3 by default). Class-weighted box constraints implement balanced
//! training.

use serde::{Deserialize, Serialize};

use crate::classifiers::class_weights;
use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

const TAU: f64 = 1e-12;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KernelModel {
    support: DenseMatrix,
    /// `alpha_t * y_t` for each support vector.
    dual_coef: Vec<f64>,
    rho: f64,
    pub gamma: f64,
    pub c: f64,
    pub class_weights: [f64; 2],
    pub converged: bool,
    pub iterations: usize,
}

impl KernelModel {
    pub fn n_support(&self) -> usize {
        self.dual_coef.len()
    }

    pub fn dual_coefficients(&self) -> &[f64] {
        &self.dual_coef
    }

    pub fn decision(&self, x: &[f64]) -> f64 {
        debug_assert!(self.n_support() == 0 || x.len() == self.support.n_cols());
        let mut acc = 0.0;
        for (t, &coef) in self.dual_coef.iter().enumerate() {
            acc += coef * rbf(self.support.row(t), x, self.gamma);
        }
        acc - self.rho
    }

    pub fn predict_batch(&self, x: &DenseMatrix) -> Result<Vec<(bool, f64)>> {
        if x.n_rows() > 0 && self.n_support() > 0 && x.n_cols() != self.support.n_cols() {
            return Err(Error::DimensionMismatch {
                expected: self.support.n_cols(),
                got: x.n_cols(),
            });
        }
        Ok((0..x.n_rows())
            .map(|i| {
                let d = self.decision(x.row(i));
                (d >= 0.0, d)
            })
            .collect())
    }
}

fn rbf(a: &[f64], b: &[f64], gamma: f64) -> f64 {
    let dist2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (-gamma * dist2).exp()
}

/// Gram rows, fully materialized for small problems and kept in a bounded
/// FIFO cache otherwise. WSS pair selection revisits the same rows heavily,
/// so even the bounded cache hits most of the time.
struct KernelCache<'a> {
    x: &'a DenseMatrix,
    gamma: f64,
    full: Option<Vec<Vec<f64>>>,
    cached: Vec<Option<Vec<f64>>>,
    order: std::collections::VecDeque<usize>,
    cap: usize,
}

impl<'a> KernelCache<'a> {
    fn new(x: &'a DenseMatrix, gamma: f64) -> KernelCache<'a> {
        let n = x.n_rows();
        let full = if n <= 3000 {
            Some(
                (0..n)
                    .map(|i| (0..n).map(|j| rbf(x.row(i), x.row(j), gamma)).collect())
                    .collect(),
            )
        } else {
            None
        };
        KernelCache {
            x,
            gamma,
            full,
            cached: if n <= 3000 { Vec::new() } else { vec![None; n] },
            order: std::collections::VecDeque::new(),
            cap: 1024,
        }
    }

    fn row(&mut self, i: usize) -> &[f64] {
        if let Some(full) = &self.full {
            return &full[i];
        }
        if self.cached[i].is_none() {
            let n = self.x.n_rows();
            let row: Vec<f64> = (0..n)
                .map(|j| rbf(self.x.row(i), self.x.row(j), self.gamma))
                .collect();
            if self.order.len() >= self.cap {
                if let Some(evict) = self.order.pop_front() {
                    self.cached[evict] = None;
                }
            }
            self.cached[i] = Some(row);
            self.order.push_back(i);
        }
        self.cached[i].as_deref().expect("row just inserted")
    }
}

pub fn train_rbf_svm(
    x: &DenseMatrix,
    y: &[bool],
    c: f64,
    gamma: f64,
    balanced: bool,
) -> Result<KernelModel> {
    if x.n_rows() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.n_rows(),
            got: y.len(),
        });
    }
    let pos = y.iter().filter(|&&l| l).count();
    if y.is_empty() || pos == 0 || pos == y.len() {
        return Err(Error::DegenerateLabels);
    }
    if c <= 0.0 || gamma <= 0.0 {
        return Err(Error::invalid("C and gamma must be positive"));
    }

    let n = y.len();
    let cw = class_weights(y, balanced);
    let signs: Vec<f64> = y.iter().map(|&l| if l { 1.0 } else { -1.0 }).collect();
    let cap: Vec<f64> = y.iter().map(|&l| c * cw[l as usize]).collect();
    let mut alpha = vec![0.0f64; n];
    let mut grad = vec![-1.0f64; n];
    let mut cache = KernelCache::new(x, gamma);
    let tol = 1e-3;
    let max_iters = 1_000_000usize.max(200 * n);
    let mut converged = false;
    let mut iterations = 0;

    for iter in 0..max_iters {
        iterations = iter;
        // Maximal-violation pair: i from the "up" set, j from the "down" set.
        let mut i = usize::MAX;
        let mut m_up = f64::NEG_INFINITY;
        let mut j = usize::MAX;
        let mut m_low = f64::INFINITY;
        for t in 0..n {
            let v = -signs[t] * grad[t];
            let up = (signs[t] > 0.0 && alpha[t] < cap[t]) || (signs[t] < 0.0 && alpha[t] > 0.0);
            let low = (signs[t] > 0.0 && alpha[t] > 0.0) || (signs[t] < 0.0 && alpha[t] < cap[t]);
            if up && v > m_up {
                m_up = v;
                i = t;
            }
            if low && v < m_low {
                m_low = v;
                j = t;
            }
        }
        if i == usize::MAX || j == usize::MAX || m_up - m_low <= tol {
            converged = true;
            break;
        }

        let (ci, cj) = (cap[i], cap[j]);
        let k_i = cache.row(i).to_vec();
        let k_j = cache.row(j).to_vec();
        let q_ij = signs[i] * signs[j] * k_i[j];
        let old_i = alpha[i];
        let old_j = alpha[j];

        if signs[i] != signs[j] {
            let quad = (k_i[i] + k_j[j] + 2.0 * q_ij).max(TAU);
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > ci - cj {
                if alpha[i] > ci {
                    alpha[i] = ci;
                    alpha[j] = ci - diff;
                }
            } else if alpha[j] > cj {
                alpha[j] = cj;
                alpha[i] = cj + diff;
            }
        } else {
            let quad = (k_i[i] + k_j[j] - 2.0 * q_ij).max(TAU);
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > ci {
                if alpha[i] > ci {
                    alpha[i] = ci;
                    alpha[j] = sum - ci;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > cj {
                if alpha[j] > cj {
                    alpha[j] = cj;
                    alpha[i] = sum - cj;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }

        let d_i = alpha[i] - old_i;
        let d_j = alpha[j] - old_j;
        for t in 0..n {
            grad[t] += signs[t] * (signs[i] * k_i[t] * d_i + signs[j] * k_j[t] * d_j);
        }
    }

    // Offset: average y*G over free vectors, else midpoint of the KKT bounds.
    let mut free_sum = 0.0;
    let mut free_count = 0usize;
    let mut ub = f64::INFINITY;
    let mut lb = f64::NEG_INFINITY;
    for t in 0..n {
        let yg = signs[t] * grad[t];
        if alpha[t] > TAU && alpha[t] < cap[t] - TAU {
            free_sum += yg;
            free_count += 1;
        } else if (alpha[t] <= TAU && signs[t] > 0.0)
            || (alpha[t] >= cap[t] - TAU && signs[t] < 0.0)
        {
            ub = ub.min(yg);
        } else {
            lb = lb.max(yg);
        }
    }
    let rho = if free_count > 0 {
        free_sum / free_count as f64
    } else {
        0.5 * (ub + lb)
    };

    let sv: Vec<usize> = (0..n).filter(|&t| alpha[t] > TAU).collect();
    let mut support = DenseMatrix::zeros(sv.len(), x.n_cols());
    let mut dual_coef = Vec::with_capacity(sv.len());
    for (r, &t) in sv.iter().enumerate() {
        support.row_mut(r).copy_from_slice(x.row(t));
        dual_coef.push(alpha[t] * signs[t]);
    }
    Ok(KernelModel {
        support,
        dual_coef,
        rho,
        gamma,
        c,
        class_weights: cw,
        converged,
        iterations,
    })
}

//! L2-regularized logistic regression trained with L-BFGS.
//!
//! The loss is `0.5 w'w + C * sum_i cw_i * ln(1 + exp(-y_i (w'x_i + b)))`
//! with labels in {-1, +1} and an unregularized intercept. With
//! `balanced = true` each sample's weight is `N / (2 * N_class)`, which makes
//! both classes contribute equal total mass.

use serde::{Deserialize, Serialize};

use crate::classifiers::lbfgs::{self, LbfgsOptions};
use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub c: f64,
    /// Per-class sample weights, indexed `[negative, positive]`.
    pub class_weights: [f64; 2],
    pub converged: bool,
    pub iterations: usize,
}

impl LinearModel {
    pub fn decision(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.weights.len());
        self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.intercept
    }

    /// Labels plus decision values; ties on the boundary go to the positive
    /// class.
    pub fn predict_batch(&self, x: &DenseMatrix) -> Result<Vec<(bool, f64)>> {
        if x.n_rows() > 0 && x.n_cols() != self.weights.len() {
            return Err(Error::DimensionMismatch {
                expected: self.weights.len(),
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

/// Per-class weights `[negative, positive]`: `N / (2 * N_class)` when
/// balancing, 1 otherwise.
pub fn class_weights(y: &[bool], balanced: bool) -> [f64; 2] {
    if !balanced {
        return [1.0, 1.0];
    }
    let n = y.len() as f64;
    let pos = y.iter().filter(|&&l| l).count() as f64;
    let neg = n - pos;
    [n / (2.0 * neg), n / (2.0 * pos)]
}

fn check_labels(x: &DenseMatrix, y: &[bool]) -> Result<()> {
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
    Ok(())
}

/// Numerically stable ln(1 + exp(t)).
fn ln1pexp(t: f64) -> f64 {
    if t > 35.0 {
        t
    } else if t < -35.0 {
        t.exp()
    } else {
        t.exp().ln_1p()
    }
}

/// Numerically stable logistic sigmoid.
fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

pub fn train_logreg(x: &DenseMatrix, y: &[bool], c: f64, balanced: bool) -> Result<LinearModel> {
    check_labels(x, y)?;
    if c <= 0.0 {
        return Err(Error::invalid("regularization C must be positive"));
    }
    let dim = x.n_cols();
    let cw = class_weights(y, balanced);
    let sample_w: Vec<f64> = y.iter().map(|&l| cw[l as usize]).collect();
    let signs: Vec<f64> = y.iter().map(|&l| if l { 1.0 } else { -1.0 }).collect();

    let eval = |theta: &[f64], grad: &mut [f64]| -> f64 {
        let (w, b) = (&theta[..dim], theta[dim]);
        let mut loss = 0.5 * w.iter().map(|v| v * v).sum::<f64>();
        grad[..dim].copy_from_slice(w);
        grad[dim] = 0.0;
        for i in 0..x.n_rows() {
            let xi = x.row(i);
            let margin = w.iter().zip(xi).map(|(a, b)| a * b).sum::<f64>() + b;
            let ym = signs[i] * margin;
            loss += c * sample_w[i] * ln1pexp(-ym);
            let pull = c * sample_w[i] * (-signs[i]) * sigmoid(-ym);
            for (g, &v) in grad[..dim].iter_mut().zip(xi) {
                *g += pull * v;
            }
            grad[dim] += pull;
        }
        loss
    };

    let out = lbfgs::minimize(eval, vec![0.0; dim + 1], &LbfgsOptions::default());
    if !out.converged {
        log::debug!(
            "logistic fit stopped at iteration {} (loss {:.6e}, grad norm {:.3e})",
            out.iterations,
            out.value,
            out.grad_norm
        );
    }
    let mut weights = out.x;
    let intercept = weights.pop().expect("theta includes intercept");
    Ok(LinearModel {
        weights,
        intercept,
        c,
        class_weights: cw,
        converged: out.converged,
        iterations: out.iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn matrix(rows: &[&[f64]]) -> DenseMatrix {
        DenseMatrix::from_rows(rows)
    }

    #[test]
    fn balanced_weights_match_the_imbalance_ratio() {
        let mut y = vec![false; 90];
        y.extend(vec![true; 10]);
        let cw = class_weights(&y, true);
        // 100/(2*90) and 100/(2*10): a 1:9 ratio.
        assert!((cw[1] / cw[0] - 9.0).abs() < 1e-12);
        assert_eq!(class_weights(&y, false), [1.0, 1.0]);
    }

    #[test]
    fn separable_data_is_fit_perfectly() {
        let x = matrix(&[&[1.0, 0.0], &[0.9, 0.1], &[0.0, 1.0], &[0.1, 0.9]]);
        let y = vec![true, true, false, false];
        let m = train_logreg(&x, &y, 10.0, true).unwrap();
        assert!(m.converged);
        for (p, &gold) in m.predict_batch(&x).unwrap().iter().zip(&y) {
            assert_eq!(p.0, gold);
        }
    }

    #[test]
    fn flipping_labels_negates_the_model() {
        let x = matrix(&[
            &[1.0, 0.2],
            &[0.8, -0.1],
            &[-0.2, 1.0],
            &[0.1, 0.9],
            &[0.5, 0.5],
        ]);
        let y = vec![true, true, false, false, true];
        let flipped: Vec<bool> = y.iter().map(|l| !l).collect();
        let a = train_logreg(&x, &y, 1.0, false).unwrap();
        let b = train_logreg(&x, &flipped, 1.0, false).unwrap();
        for (wa, wb) in a.weights.iter().zip(&b.weights) {
            assert!((wa + wb).abs() < 1e-4, "{wa} vs {wb}");
        }
        assert!((a.intercept + b.intercept).abs() < 1e-4);
    }

    #[test]
    fn degenerate_labels_are_rejected() {
        let x = matrix(&[&[1.0], &[2.0]]);
        assert!(matches!(
            train_logreg(&x, &[true, true], 1.0, false),
            Err(Error::DegenerateLabels)
        ));
        assert!(matches!(
            train_logreg(&x, &[false, false], 1.0, false),
            Err(Error::DegenerateLabels)
        ));
    }

    /// Central-difference check of the training objective's gradient, plus
    /// the claim that the returned weights are a stationary point.
    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = crate::util::seeded_stream(21, 500);
        let n = 40;
        let dim = 5;
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for i in 0..n {
            let row: Vec<f64> = (0..dim).map(|_| rng.gen_range(-2.0..2.0)).collect();
            y.push(row.iter().sum::<f64>() + rng.gen_range(-0.5..0.5) > 0.0);
            rows.push(row);
            if i == 0 {
                y[0] = true;
            }
            if i == 1 {
                y[1] = false;
            }
        }
        let x = DenseMatrix::from_flat(n, dim, rows.concat());
        let c = 0.7;
        let cw = class_weights(&y, true);
        let loss = |theta: &[f64]| -> f64 {
            let (w, b) = (&theta[..dim], theta[dim]);
            let mut f = 0.5 * w.iter().map(|v| v * v).sum::<f64>();
            for i in 0..n {
                let m = w.iter().zip(x.row(i)).map(|(a, b)| a * b).sum::<f64>() + b;
                let s = if y[i] { 1.0 } else { -1.0 };
                f += c * cw[y[i] as usize] * ln1pexp(-s * m);
            }
            f
        };
        // Analytic gradient via the same closure train_logreg uses.
        let sample_w: Vec<f64> = y.iter().map(|&l| cw[l as usize]).collect();
        let signs: Vec<f64> = y.iter().map(|&l| if l { 1.0 } else { -1.0 }).collect();
        let grad_at = |theta: &[f64]| -> Vec<f64> {
            let (w, b) = (&theta[..dim], theta[dim]);
            let mut g = vec![0.0; dim + 1];
            g[..dim].copy_from_slice(w);
            for i in 0..n {
                let m = w.iter().zip(x.row(i)).map(|(a, b)| a * b).sum::<f64>() + b;
                let pull = c * sample_w[i] * (-signs[i]) * sigmoid(-signs[i] * m);
                for (gv, &v) in g[..dim].iter_mut().zip(x.row(i)) {
                    *gv += pull * v;
                }
                g[dim] += pull;
            }
            g
        };
        let theta: Vec<f64> = (0..=dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let g = grad_at(&theta);
        let h = 1e-5;
        for j in 0..=dim {
            let mut tp = theta.clone();
            let mut tm = theta.clone();
            tp[j] += h;
            tm[j] -= h;
            let fd = (loss(&tp) - loss(&tm)) / (2.0 * h);
            let rel = (fd - g[j]).abs() / fd.abs().max(g[j].abs()).max(1e-8);
            assert!(rel < 1e-3, "component {j}: fd {fd} vs analytic {}", g[j]);
        }

        let model = train_logreg(&x, &y, c, true).unwrap();
        let mut theta = model.weights.clone();
        theta.push(model.intercept);
        let g = grad_at(&theta);
        let gnorm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(gnorm < 1e-5, "gradient norm at solution: {gnorm}");
    }
}

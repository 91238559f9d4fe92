//! Limited-memory BFGS with a strong-Wolfe line search, used by the logistic
//! trainer. The objective closure returns the loss and fills the gradient in
//! one pass.

pub(crate) struct LbfgsOptions {
    pub memory: usize,
    pub tol: f64,
    pub max_iters: usize,
    pub c1: f64,
    pub c2: f64,
}

impl Default for LbfgsOptions {
    fn default() -> Self {
        LbfgsOptions {
            memory: 10,
            tol: 1e-6,
            max_iters: 1000,
            c1: 1e-4,
            c2: 0.9,
        }
    }
}

pub(crate) struct LbfgsOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn minimize<F>(mut eval: F, x0: Vec<f64>, opts: &LbfgsOptions) -> LbfgsOutcome
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let dim = x0.len();
    let mut x = x0;
    let mut g = vec![0.0; dim];
    let mut f = eval(&x, &mut g);
    let mut s_hist: Vec<Vec<f64>> = Vec::new();
    let mut y_hist: Vec<Vec<f64>> = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    for iter in 0..opts.max_iters {
        iterations = iter;
        if norm(&g) <= opts.tol {
            converged = true;
            break;
        }
        let mut d = two_loop(&g, &s_hist, &y_hist);
        if dot(&d, &g) >= 0.0 {
            // History produced a non-descent direction; restart from steepest
            // descent.
            s_hist.clear();
            y_hist.clear();
            d = g.iter().map(|v| -v).collect();
        }
        let alpha0 = if s_hist.is_empty() {
            (1.0 / norm(&g)).min(1.0)
        } else {
            1.0
        };
        let Some((alpha, f_new, x_new, g_new)) =
            wolfe_search(&mut eval, &x, f, &g, &d, alpha0, opts)
        else {
            break;
        };
        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-10 * norm(&s) * norm(&y) {
            s_hist.push(s);
            y_hist.push(y);
            if s_hist.len() > opts.memory {
                s_hist.remove(0);
                y_hist.remove(0);
            }
        }
        x = x_new;
        g = g_new;
        f = f_new;
        let _ = alpha;
    }
    if !converged && norm(&g) <= opts.tol {
        converged = true;
    }
    LbfgsOutcome {
        grad_norm: norm(&g),
        x,
        value: f,
        iterations,
        converged,
    }
}

fn two_loop(g: &[f64], s_hist: &[Vec<f64>], y_hist: &[Vec<f64>]) -> Vec<f64> {
    let mut q: Vec<f64> = g.to_vec();
    let m = s_hist.len();
    let mut alphas = vec![0.0; m];
    let mut rhos = vec![0.0; m];
    for i in (0..m).rev() {
        rhos[i] = 1.0 / dot(&y_hist[i], &s_hist[i]);
        alphas[i] = rhos[i] * dot(&s_hist[i], &q);
        for (qv, yv) in q.iter_mut().zip(&y_hist[i]) {
            *qv -= alphas[i] * yv;
        }
    }
    if m > 0 {
        let last = m - 1;
        let gamma = dot(&s_hist[last], &y_hist[last]) / dot(&y_hist[last], &y_hist[last]);
        for qv in q.iter_mut() {
            *qv *= gamma;
        }
    }
    for i in 0..m {
        let beta = rhos[i] * dot(&y_hist[i], &q);
        for (qv, sv) in q.iter_mut().zip(&s_hist[i]) {
            *qv += (alphas[i] - beta) * sv;
        }
    }
    q.iter_mut().for_each(|v| *v = -*v);
    q
}

type SearchResult = (f64, f64, Vec<f64>, Vec<f64>);

/// Strong-Wolfe bracketing search: expand until the sufficient-decrease or
/// curvature pattern brackets a step, then bisect inside the bracket.
fn wolfe_search<F>(
    eval: &mut F,
    x: &[f64],
    f0: f64,
    g0: &[f64],
    d: &[f64],
    alpha0: f64,
    opts: &LbfgsOptions,
) -> Option<SearchResult>
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let dim = x.len();
    let dphi0 = dot(g0, d);
    if dphi0 >= 0.0 {
        return None;
    }
    let mut probe = |alpha: f64, g_out: &mut Vec<f64>| -> (f64, Vec<f64>) {
        let xa: Vec<f64> = x.iter().zip(d).map(|(xi, di)| xi + alpha * di).collect();
        let fa = eval(&xa, g_out);
        (fa, xa)
    };

    let mut alpha_prev = 0.0;
    let mut phi_prev = f0;
    let mut alpha = alpha0;
    let mut g_alpha = vec![0.0; dim];
    for i in 0..30 {
        let (phi, xa) = probe(alpha, &mut g_alpha);
        if phi > f0 + opts.c1 * alpha * dphi0 || (i > 0 && phi >= phi_prev) {
            return zoom(eval, x, f0, dphi0, d, alpha_prev, phi_prev, alpha, opts);
        }
        let dphi = dot(&g_alpha, d);
        if dphi.abs() <= -opts.c2 * dphi0 {
            return Some((alpha, phi, xa, g_alpha));
        }
        if dphi >= 0.0 {
            return zoom(eval, x, f0, dphi0, d, alpha, phi, alpha_prev, opts);
        }
        alpha_prev = alpha;
        phi_prev = phi;
        alpha *= 2.0;
        if alpha > 1e12 {
            break;
        }
    }
    None
}

#[allow(clippy::too_many_arguments)]
fn zoom<F>(
    eval: &mut F,
    x: &[f64],
    f0: f64,
    dphi0: f64,
    d: &[f64],
    mut lo: f64,
    mut phi_lo: f64,
    mut hi: f64,
    opts: &LbfgsOptions,
) -> Option<SearchResult>
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let dim = x.len();
    let mut g_alpha = vec![0.0; dim];
    for _ in 0..50 {
        let alpha = 0.5 * (lo + hi);
        let xa: Vec<f64> = x.iter().zip(d).map(|(xi, di)| xi + alpha * di).collect();
        let phi = eval(&xa, &mut g_alpha);
        if phi > f0 + opts.c1 * alpha * dphi0 || phi >= phi_lo {
            hi = alpha;
        } else {
            let dphi = dot(&g_alpha, d);
            if dphi.abs() <= -opts.c2 * dphi0 {
                return Some((alpha, phi, xa, g_alpha));
            }
            if dphi * (hi - lo) >= 0.0 {
                hi = lo;
            }
            lo = alpha;
            phi_lo = phi;
        }
        if (hi - lo).abs() < 1e-14 * lo.abs().max(1.0) {
            // Interval collapsed; accept the best point satisfying the
            // decrease condition if we have one.
            if phi_lo < f0 && lo > 0.0 {
                let xa: Vec<f64> = x.iter().zip(d).map(|(xi, di)| xi + lo * di).collect();
                let phi = eval(&xa, &mut g_alpha);
                return Some((lo, phi, xa, g_alpha));
            }
            return None;
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_bowl_converges_to_center() {
        let eval = |x: &[f64], g: &mut [f64]| {
            let mut f = 0.0;
            for i in 0..x.len() {
                let c = (i + 1) as f64;
                let d = x[i] - c;
                f += 0.5 * c * d * d;
                g[i] = c * d;
            }
            f
        };
        let out = minimize(eval, vec![10.0, -7.0, 3.0], &LbfgsOptions::default());
        assert!(out.converged, "grad_norm = {}", out.grad_norm);
        for (i, v) in out.x.iter().enumerate() {
            assert!((v - (i + 1) as f64).abs() < 1e-6);
        }
    }

    #[test]
    fn rosenbrock_reaches_the_global_minimum() {
        let eval = |x: &[f64], g: &mut [f64]| {
            let (a, b) = (x[0], x[1]);
            g[0] = -400.0 * a * (b - a * a) - 2.0 * (1.0 - a);
            g[1] = 200.0 * (b - a * a);
            (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2)
        };
        let out = minimize(eval, vec![-1.2, 1.0], &LbfgsOptions::default());
        assert!(out.converged, "grad_norm = {}", out.grad_norm);
        assert!((out.x[0] - 1.0).abs() < 1e-5);
        assert!((out.x[1] - 1.0).abs() < 1e-5);
        assert!(out.value < 1e-10);
    }
}

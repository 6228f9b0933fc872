//! Limited-memory BFGS minimization with finite-difference gradients.

use crate::exec;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Stop when the gradient infinity norm is at most this.
    pub grad_tol: f64,
    /// Stop when an iteration improves the objective by less than this,
    /// relative to its magnitude.
    pub f_rel_tol: f64,
    pub max_iter: usize,
    /// Stop when the last `stall_window` iterations together improved the
    /// objective by less than `stall_tol * (1 + |f|)`.
    pub stall_window: usize,
    pub stall_tol: f64,
    pub memory: usize,
    /// Armijo sufficient-decrease constant.
    pub c1: f64,
    /// Relative finite-difference step for gradients.
    pub fd_step: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { grad_tol: 1e-6, f_rel_tol: 1e-13, max_iter: 500, stall_window: 20, stall_tol: 1e-10, memory: 10, c1: 1e-4, fd_step: 1e-6 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Objective value after every accepted step, starting point first.
    pub path: Vec<f64>,
}

/// Central-difference gradient with step `rel * max(|x_i|, 1)`.
pub fn fd_gradient<F>(f: &F, x: &[f64], rel: f64) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    exec::map_range(x.len(), |i| {
        let h = rel * x[i].abs().max(1.0);
        let mut xp = x.to_vec();
        xp[i] = x[i] + h;
        let fp = f(&xp);
        xp[i] = x[i] - h;
        let fm = f(&xp);
        (fp - fm) / (2.0 * h)
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// Minimizes `f` from `x0`. Non-finite objective values are treated as
/// outside the domain and rejected by the line search.
pub fn minimize<F>(f: F, x0: &[f64], tol: &Tolerances) -> Minimum
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let mut x = x0.to_vec();
    let mut fx = f(&x);
    let mut path = vec![fx];
    if x.is_empty() || !fx.is_finite() {
        return Minimum { x, f: fx, grad_norm: 0.0, iterations: 0, converged: x0.is_empty(), path };
    }
    let mut g = fd_gradient(&f, &x, tol.fd_step);
    let mut s_hist: Vec<Vec<f64>> = Vec::new();
    let mut y_hist: Vec<Vec<f64>> = Vec::new();
    let mut converged = inf_norm(&g) <= tol.grad_tol;
    let mut iterations = 0;

    while !converged && iterations < tol.max_iter {
        iterations += 1;
        let mut d = two_loop(&g, &s_hist, &y_hist);
        let mut slope = dot(&g, &d);
        if !(slope < 0.0) {
            s_hist.clear();
            y_hist.clear();
            d = g.iter().map(|v| -v).collect();
            slope = -dot(&g, &g);
        }
        // Without curvature information, cap the first trial step length.
        let mut step = if s_hist.is_empty() { (1.0 / inf_norm(&d)).min(1.0) } else { 1.0 };

        let mut accepted = None;
        for _ in 0..60 {
            let xn: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + step * b).collect();
            let fn_ = f(&xn);
            if fn_.is_finite() && fn_ <= fx + tol.c1 * step * slope {
                accepted = Some((xn, fn_));
                break;
            }
            step *= 0.5;
        }
        let Some((xn, fn_)) = accepted else {
            if s_hist.is_empty() {
                break;
            }
            // Retry from steepest descent once the memory is dropped.
            s_hist.clear();
            y_hist.clear();
            continue;
        };

        let gn = fd_gradient(&f, &xn, tol.fd_step);
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let yv: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        if dot(&s, &yv) > 1e-12 * dot(&yv, &yv).sqrt() * dot(&s, &s).sqrt() {
            s_hist.push(s);
            y_hist.push(yv);
            if s_hist.len() > tol.memory {
                s_hist.remove(0);
                y_hist.remove(0);
            }
        }
        let improvement = fx - fn_;
        x = xn;
        fx = fn_;
        g = gn;
        path.push(fx);
        let stalled = path.len() > tol.stall_window
            && path[path.len() - 1 - tol.stall_window] - fx <= tol.stall_tol * (1.0 + fx.abs());
        if inf_norm(&g) <= tol.grad_tol || improvement <= tol.f_rel_tol * fx.abs().max(1.0) || stalled {
            converged = true;
        }
    }

    Minimum { grad_norm: inf_norm(&g), x, f: fx, iterations, converged, path }
}

fn two_loop(g: &[f64], s_hist: &[Vec<f64>], y_hist: &[Vec<f64>]) -> Vec<f64> {
    let mut q: Vec<f64> = g.to_vec();
    let m = s_hist.len();
    let mut alpha = vec![0.0; m];
    let rho: Vec<f64> = (0..m).map(|i| 1.0 / dot(&y_hist[i], &s_hist[i])).collect();
    for i in (0..m).rev() {
        alpha[i] = rho[i] * dot(&s_hist[i], &q);
        for (qv, yv) in q.iter_mut().zip(&y_hist[i]) {
            *qv -= alpha[i] * yv;
        }
    }
    if m > 0 {
        let gamma = dot(&s_hist[m - 1], &y_hist[m - 1]) / dot(&y_hist[m - 1], &y_hist[m - 1]);
        q.iter_mut().for_each(|v| *v *= gamma);
    }
    for i in 0..m {
        let beta = rho[i] * dot(&y_hist[i], &q);
        for (qv, sv) in q.iter_mut().zip(&s_hist[i]) {
            *qv += (alpha[i] - beta) * sv;
        }
    }
    q.iter().map(|v| -v).collect()
}

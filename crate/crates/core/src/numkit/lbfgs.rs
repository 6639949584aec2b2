use std::collections::VecDeque;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LbfgsOptions {
    pub max_iter: usize,
    /// Number of (s, y) correction pairs kept.
    pub memory: usize,
    pub grad_tol: f64,
    /// Armijo sufficient-decrease constant.
    pub c1: f64,
    pub backtrack: f64,
    pub max_line_search: usize,
}

impl Default for LbfgsOptions {
    fn default() -> Self {
        Self { max_iter: 100, memory: 10, grad_tol: 1e-8, c1: 1e-4, backtrack: 0.5, max_line_search: 60 }
    }
}

impl LbfgsOptions {
    pub fn with_max_iter(max_iter: usize) -> Self {
        Self { max_iter, ..Self::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimResult {
    pub x: Vec<f64>,
    pub loss: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Loss at x0 followed by the loss of every accepted iterate.
    pub loss_trace: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Unconstrained L-BFGS (two-loop recursion) with a backtracking Armijo line
/// search. Accepted iterates never increase the loss, so the final iterate is
/// the best one seen.
///
/// The objective returns `(loss, gradient)`. Errors or non-finite values at
/// trial points are treated as rejected steps; at `x0` they are fatal.
pub fn lbfgs_minimize<F>(mut objective: F, x0: &[f64], opts: LbfgsOptions) -> Result<OptimResult>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    let mut x = x0.to_vec();
    let (mut f, mut g) = objective(&x)?;
    if !f.is_finite() || g.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("objective at the initial point".into()));
    }
    if g.len() != x.len() {
        return Err(Error::InvalidInput("gradient length differs from parameter length".into()));
    }

    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(opts.memory);
    let mut loss_trace = vec![f];
    let mut iterations = 0;
    let mut converged = false;

    while iterations < opts.max_iter {
        if norm(&g) < opts.grad_tol {
            converged = true;
            break;
        }
        let mut dir = two_loop(&g, &history);
        let mut slope = dot(&g, &dir);
        if !(slope < 0.0) {
            history.clear();
            dir = g.iter().map(|v| -v).collect();
            slope = -dot(&g, &g);
        }

        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..opts.max_line_search {
            let trial: Vec<f64> = x.iter().zip(&dir).map(|(xi, di)| xi + step * di).collect();
            if let Ok((ft, gt)) = objective(&trial) {
                if ft.is_finite() && gt.iter().all(|v| v.is_finite()) && ft <= f + opts.c1 * step * slope {
                    accepted = Some((trial, ft, gt));
                    break;
                }
            }
            step *= opts.backtrack;
        }
        let Some((x_new, f_new, g_new)) = accepted else {
            break;
        };

        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-10 * norm(&s) * norm(&y) && sy > 0.0 {
            if history.len() == opts.memory {
                history.pop_front();
            }
            if opts.memory > 0 {
                history.push_back((s, y, 1.0 / sy));
            }
        } else {
            // Non-positive curvature: the stored model no longer describes the
            // local Hessian, restart from steepest descent.
            history.clear();
        }
        x = x_new;
        f = f_new;
        g = g_new;
        iterations += 1;
        loss_trace.push(f);
    }
    if !converged && iterations > 0 && norm(&g) < opts.grad_tol {
        converged = true;
    }
    Ok(OptimResult { x, loss: f, iterations, converged, loss_trace })
}

fn two_loop(g: &[f64], history: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alphas = Vec::with_capacity(history.len());
    for (s, y, rho) in history.iter().rev() {
        let a = rho * dot(s, &q);
        for (qi, yi) in q.iter_mut().zip(y) {
            *qi -= a * yi;
        }
        alphas.push(a);
    }
    if let Some((s, y, _)) = history.back() {
        let gamma = dot(s, y) / dot(y, y);
        q.iter_mut().for_each(|v| *v *= gamma);
    }
    for ((s, y, rho), a) in history.iter().zip(alphas.into_iter().rev()) {
        let b = rho * dot(y, &q);
        for (qi, si) in q.iter_mut().zip(s) {
            *qi += (a - b) * si;
        }
    }
    q.into_iter().map(|v| -v).collect()
}

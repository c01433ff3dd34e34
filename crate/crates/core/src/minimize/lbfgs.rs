//! Limited-memory BFGS with Armijo backtracking.

use std::collections::VecDeque;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LbfgsOptions {
    pub memory: usize,
    /// Stop once the max-norm of the gradient drops to this.
    pub tol: f64,
    pub max_iter: usize,
    pub armijo: f64,
    pub max_backtracks: usize,
}

impl Default for LbfgsOptions {
    fn default() -> Self {
        LbfgsOptions { memory: 10, tol: 1e-8, max_iter: 5000, armijo: 1e-4, max_backtracks: 60 }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LbfgsReport {
    pub iterations: usize,
    pub value: f64,
    pub grad_norm: f64,
    pub converged: bool,
    /// Iterations whose quasi-Newton direction failed and fell back to steepest descent.
    pub restarts: usize,
    /// Trial points where the objective was not finite.
    pub rejected: usize,
    /// The line search could not decrease the objective any further.
    pub stalled: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn max_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Minimises `f` starting from `x`, which holds the result on return.
///
/// `f(x, grad)` returns the value and writes the gradient. `project` is applied to every accepted
/// point and its gradient; it must map the feasible affine set onto itself.
pub fn minimize<F, P>(x: &mut [f64], mut f: F, mut project: P, opts: &LbfgsOptions) -> LbfgsReport
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
    P: FnMut(&mut [f64], &mut [f64]),
{
    let dim = x.len();
    let mut g = vec![0.0; dim];
    let mut scratch = vec![0.0; dim];
    project(x, &mut scratch);
    let mut value = f(x, &mut g);
    project(&mut scratch, &mut g);
    let mut report = LbfgsReport { value, grad_norm: max_norm(&g), ..Default::default() };
    if !value.is_finite() {
        report.rejected = 1;
        report.stalled = true;
        return report;
    }
    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(opts.memory);
    let mut d = vec![0.0; dim];
    let mut trial = vec![0.0; dim];
    let mut g_new = vec![0.0; dim];
    let mut alpha_buf = vec![0.0; opts.memory.max(1)];
    while report.grad_norm > opts.tol && report.iterations < opts.max_iter {
        // two-loop recursion
        d.iter_mut().zip(&g).for_each(|(di, gi)| *di = -gi);
        for (k, (s, y, rho)) in history.iter().enumerate().rev() {
            let a = rho * dot(s, &d);
            alpha_buf[k] = a;
            d.iter_mut().zip(y).for_each(|(di, yi)| *di -= a * yi);
        }
        if let Some((s, y, _)) = history.back() {
            let gamma = dot(s, y) / dot(y, y);
            d.iter_mut().for_each(|di| *di *= gamma);
        }
        for (k, (s, y, rho)) in history.iter().enumerate() {
            let b = rho * dot(y, &d);
            d.iter_mut().zip(s).for_each(|(di, si)| *di += (alpha_buf[k] - b) * si);
        }
        let mut slope = dot(&g, &d);
        if !(slope < 0.0) {
            report.restarts += 1;
            history.clear();
            d.iter_mut().zip(&g).for_each(|(di, gi)| *di = -gi);
            slope = -dot(&g, &g);
        }
        let mut step = if history.is_empty() { 1.0 / max_norm(&d).max(1.0) } else { 1.0 };
        let mut accepted = None;
        for _ in 0..opts.max_backtracks {
            trial.iter_mut().zip(x.iter()).zip(&d).for_each(|((t, xi), di)| *t = xi + step * di);
            project(&mut trial, &mut scratch);
            let v = f(&trial, &mut g_new);
            if !v.is_finite() {
                report.rejected += 1;
            } else if v <= value + opts.armijo * step * slope {
                accepted = Some(v);
                break;
            }
            step *= 0.5;
        }
        let Some(v) = accepted else {
            if history.is_empty() {
                report.stalled = true;
                break;
            }
            report.restarts += 1;
            history.clear();
            continue;
        };
        project(&mut scratch, &mut g_new);
        let s: Vec<f64> = trial.iter().zip(x.iter()).map(|(t, xi)| t - xi).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-16 * dot(&y, &y).sqrt() * dot(&s, &s).sqrt() && sy > 0.0 {
            if history.len() == opts.memory {
                history.pop_front();
            }
            if opts.memory > 0 {
                history.push_back((s, y, 1.0 / sy));
            }
        }
        x.copy_from_slice(&trial);
        std::mem::swap(&mut g, &mut g_new);
        value = v;
        report.iterations += 1;
        report.value = value;
        report.grad_norm = max_norm(&g);
    }
    report.converged = report.grad_norm <= opts.tol;
    report
}

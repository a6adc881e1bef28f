//! Limited-memory BFGS with Armijo backtracking.
//!
//! First-order descent on smooth objectives; only gradients are used. Falls
//! back to the steepest-descent direction whenever the two-loop recursion
//! produces a non-descent direction.

use nalgebra::DVector;
use std::collections::VecDeque;

#[derive(Debug, Clone)]
pub struct LbfgsOptions {
    pub max_iters: usize,
    /// Converged when `||grad|| <= grad_tol * (1 + |f|)`.
    pub grad_tol: f64,
    pub history: usize,
    pub max_line_search: usize,
}

impl Default for LbfgsOptions {
    fn default() -> Self {
        Self {
            max_iters: 1000,
            grad_tol: 1e-6,
            history: 8,
            max_line_search: 40,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LbfgsResult {
    pub x: DVector<f64>,
    pub value: f64,
    pub grad_norm: f64,
    pub iters: usize,
    pub converged: bool,
}

/// Minimizes `fg` (value and gradient) from `x0`.
pub fn lbfgs_minimize<F>(fg: F, x0: &DVector<f64>, opts: &LbfgsOptions) -> LbfgsResult
where
    F: Fn(&DVector<f64>) -> (f64, DVector<f64>),
{
    let mut x = x0.clone();
    let (mut fx, mut grad) = fg(&x);
    let mut s_hist: VecDeque<DVector<f64>> = VecDeque::new();
    let mut y_hist: VecDeque<DVector<f64>> = VecDeque::new();
    let mut rho_hist: VecDeque<f64> = VecDeque::new();

    let mut iters = 0;
    let mut converged = grad.norm() <= opts.grad_tol * (1.0 + fx.abs());

    while !converged && iters < opts.max_iters {
        iters += 1;

        // two-loop recursion
        let mut dir = -grad.clone();
        let k = s_hist.len();
        let mut alphas = vec![0.0; k];
        for i in (0..k).rev() {
            alphas[i] = rho_hist[i] * s_hist[i].dot(&dir);
            dir -= &y_hist[i] * alphas[i];
        }
        if let (Some(s), Some(y)) = (s_hist.back(), y_hist.back()) {
            let scale = s.dot(y) / y.norm_squared();
            if scale.is_finite() && scale > 0.0 {
                dir *= scale;
            }
        }
        for i in 0..k {
            let beta = rho_hist[i] * y_hist[i].dot(&dir);
            dir += &s_hist[i] * (alphas[i] - beta);
        }

        let mut directional = grad.dot(&dir);
        if !(directional < 0.0) {
            dir = -grad.clone();
            directional = grad.dot(&dir);
            if !(directional < 0.0) {
                break; // zero gradient to machine precision
            }
        }

        // Armijo backtracking
        let mut step = if iters == 1 {
            (1.0 / (1.0 + grad.norm())).min(1.0)
        } else {
            1.0
        };
        let mut accepted = false;
        let mut x_new = x.clone();
        let mut f_new = fx;
        let mut g_new = grad.clone();
        for _ in 0..opts.max_line_search {
            x_new = &x + &dir * step;
            let (f_try, g_try) = fg(&x_new);
            if f_try <= fx + 1e-4 * step * directional {
                f_new = f_try;
                g_new = g_try;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break; // line search exhausted; report the best point so far
        }

        let s = &x_new - &x;
        let y = &g_new - &grad;
        let sy = s.dot(&y);
        if sy > 1e-10 * s.norm() * y.norm() {
            if s_hist.len() == opts.history {
                s_hist.pop_front();
                y_hist.pop_front();
                rho_hist.pop_front();
            }
            rho_hist.push_back(1.0 / sy);
            s_hist.push_back(s);
            y_hist.push_back(y);
        }

        x = x_new;
        fx = f_new;
        grad = g_new;
        converged = grad.norm() <= opts.grad_tol * (1.0 + fx.abs());
    }

    LbfgsResult {
        grad_norm: grad.norm(),
        x,
        value: fx,
        iters,
        converged,
    }
}
